'''
Image fidelity metrics on aligned 8-bit images.

.. versionadded:: 0.1
'''
from collections import namedtuple
import logging
import math

from scipy.ndimage import correlate1d
import numpy as np

from .raster import (InsufficientSupportError, InvalidParameterError,
                     as_mask, check_compatible, gaussian_kernel)


logger = logging.getLogger(__name__)

PEAK = 255.
#: PSNR reported for identical images (or a zero noise estimate).
MAX_PSNR_DB = 99.

SSIM_SIGMA = 1.5
#: Window side of the SSIM Gaussian (``2 * ceil(3 * 1.5) + 1``).
SSIM_WINDOW = 11
SSIM_K1 = 0.01
SSIM_K2 = 0.03

REFERENCE_KINDS = ('gt_average', 'explicit')

MetricResult = namedtuple('MetricResult', 'psnr_db ssim per_channel_psnr '
                          'per_channel_ssim reference_kind')


def psnr_from_mse(mse):
    if mse <= 0:
        return MAX_PSNR_DB
    return min(10 * math.log10(PEAK ** 2 / mse), MAX_PSNR_DB)


def psnr_mse(a, b, mask=None):
    '''
    PSNR of ``a`` against ``b`` from the mean squared error over all channels
    pooled.

    Parameters
    ----------
    a, b : MultiImage
        Aligned 8-bit images.
    mask : array-like, optional
        Valid pixels.

    Returns
    -------
    float
        PSNR in dB, capped at :data:`MAX_PSNR_DB`.
    '''
    check_compatible(a, b)
    mask = as_mask(mask, a.shape)
    diff = (a.planes - b.planes)[:, mask]
    if not diff.size:
        raise InsufficientSupportError('No valid pixels to compute PSNR over.')
    return psnr_from_mse(float(np.mean(diff * diff)))


def psnr_from_sigma(sigma):
    '''
    GT-free PSNR ``20 * log10(255 / sigma)`` from a noise estimate.

    A zero ``sigma`` maps to :data:`MAX_PSNR_DB`.
    '''
    if sigma < 0:
        raise InvalidParameterError('Noise sigma must be non-negative, got %r.'
                                    % sigma)
    if sigma == 0:
        return MAX_PSNR_DB
    return min(20 * math.log10(PEAK / sigma), MAX_PSNR_DB)


def _window_filter(plane, kernel):
    radius = kernel.size // 2
    filtered = correlate1d(correlate1d(plane, kernel, axis=0, mode='nearest'),
                           kernel, axis=1, mode='nearest')
    return filtered[radius:-radius, radius:-radius]


def ssim_map(a, b):
    '''
    Local SSIM of two channel planes.

    Only windows lying entirely inside the planes are evaluated, so the
    result is ``SSIM_WINDOW - 1`` pixels smaller than the input along each
    axis.
    '''
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidParameterError('Plane dimensions differ: %s vs %s.' %
                                    (a.shape, b.shape))
    if min(a.shape) < SSIM_WINDOW:
        raise InvalidParameterError('SSIM requires planes of at least %dx%d '
                                    'pixels, got %s.' % (SSIM_WINDOW,
                                                         SSIM_WINDOW,
                                                         a.shape))
    kernel = gaussian_kernel(SSIM_SIGMA)
    c1 = (SSIM_K1 * PEAK) ** 2
    c2 = (SSIM_K2 * PEAK) ** 2
    mu_a = _window_filter(a, kernel)
    mu_b = _window_filter(b, kernel)
    var_a = _window_filter(a * a, kernel) - mu_a * mu_a
    var_b = _window_filter(b * b, kernel) - mu_b * mu_b
    cov_ab = _window_filter(a * b, kernel) - mu_a * mu_b
    return (((2 * mu_a * mu_b + c1) * (2 * cov_ab + c2)) /
            ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)))


def ssim(a, b):
    '''
    Mean structural similarity, computed per channel then averaged.

    Parameters
    ----------
    a, b : MultiImage
        Aligned 8-bit images of at least 11x11 pixels.

    Returns
    -------
    float
    '''
    return float(np.mean(ssim_channels(a, b)))


def ssim_channels(a, b):
    check_compatible(a, b)
    return np.array([ssim_map(a_i, b_i).mean()
                     for a_i, b_i in zip(a.planes, b.planes)])


def compare(image, reference, reference_kind='explicit', mask=None):
    '''
    PSNR and SSIM of ``image`` against ``reference``.

    Parameters
    ----------
    image, reference : MultiImage
    reference_kind : str, optional
        ``'gt_average'`` when ``reference`` is ``(I^r + I^c) / 2``,
        ``'explicit'`` otherwise.
    mask : array-like, optional
        Valid pixels for PSNR.  SSIM always uses the full frame.

    Returns
    -------
    MetricResult
    '''
    if reference_kind not in REFERENCE_KINDS:
        raise InvalidParameterError('Unknown reference kind `%s`.' %
                                    reference_kind)
    check_compatible(image, reference)
    mask = as_mask(mask, image.shape)
    per_channel_psnr = []
    for image_i, reference_i in zip(image.planes, reference.planes):
        diff_i = (image_i - reference_i)[mask]
        if not diff_i.size:
            raise InsufficientSupportError('No valid pixels to compute PSNR '
                                           'over.')
        per_channel_psnr.append(psnr_from_mse(float(np.mean(diff_i *
                                                            diff_i))))
    per_channel_ssim = ssim_channels(image, reference)
    return MetricResult(psnr_mse(image, reference, mask),
                        float(per_channel_ssim.mean()),
                        np.array(per_channel_psnr), per_channel_ssim,
                        reference_kind)
