'''
Noise-level estimation from aligned image triples.

With a noisy image ``I^n``, a reference ``I^r`` and a clean image ``I^c`` of
the same static scene, each modeled as the latent ground truth plus
independent zero-mean noise, the variance of a difference image is the sum
of the two noise variances.  Hence::

    var(eps)   = var(I^r - I^c) / 2
    var(eps_n) = var(I^n - I^r) - var(I^r - I^c) / 2
    var(eps_n) = var(I^n - I^a) - var(I^r - I^c) / 4,   I^a = (I^r + I^c) / 2

All estimates are in 8-bit intensity levels.  Negative radicands (the noisy
image is not noisier than the clean pair) are clamped to zero and flagged.
'''
from collections import namedtuple
import logging
import math

from logging_helpers import _L
import numpy as np
import pandas as pd

from .metrics import psnr_from_sigma
from .raster import (CHANNEL_NAMES, InsufficientSupportError,
                     InvalidParameterError, as_mask, blur_image,
                     check_compatible, diff_stats, gaussian_blur,
                     masked_diff_stats)


logger = logging.getLogger(__name__)

GATE_THRESHOLD_DB = 34.
BLUR_SIGMA = 20.
CURVE_BIN_WIDTH = 2.
CURVE_MIN_SUPPORT = 1000

METHODS = ('clean_pair', 'noisy_vs_ref', 'noisy_vs_avg', 'blurred_ref',
           'direct_vs_gt', 'standard')
CURVE_METHODS = ('pair', 'standard', 'blurred_ref')
CURVE_CHANNELS = ('pooled', 'gray') + CHANNEL_NAMES

CURVE_COLUMNS = ['intensity_center', 'sigma', 'variance', 'support']

NoiseEstimate = namedtuple('NoiseEstimate', 'sigma pooled_sigma method '
                           'support negative_radicand')
NoiseCurve = namedtuple('NoiseCurve', 'bins bin_width method channel '
                        'model_fit')
GateVerdict = namedtuple('GateVerdict', 'clean_pair_psnr threshold passed '
                         'sigma')


class AffineNoiseModel(namedtuple('AffineNoiseModel', 'a b')):
    '''
    Signal-dependent variance law ``var(t) = a * t + b``.
    '''
    def variance(self, t):
        return self.a * np.asarray(t, dtype=float) + self.b

    def sigma(self, t):
        return np.sqrt(np.maximum(self.variance(t), 0))


def _estimate(variance, pooled_variance, method, support):
    '''
    Build a :class:`NoiseEstimate` from (possibly negative) variances.
    '''
    variance = np.asarray(variance, dtype=float)
    negative = bool((variance < 0).any() or pooled_variance < 0)
    if negative:
        _L().warning('negative radicand in `%s` estimate (%s, pooled %g); '
                     'the noisy image is not noisier than the clean pair',
                     method, variance.tolist(), pooled_variance)
    return NoiseEstimate(np.sqrt(np.maximum(variance, 0)),
                         math.sqrt(max(pooled_variance, 0)), method, support,
                         negative)


def saturation_mask(*images):
    '''
    Pixels where no channel of any image is clipped at 0 or 255.

    Returns
    -------
    numpy.ndarray
        ``(height, width)`` boolean mask.
    '''
    if not images:
        raise InvalidParameterError('At least one image is required.')
    mask = np.ones(images[0].shape, dtype=bool)
    for image_i in images:
        check_compatible(images[0], image_i)
        planes = image_i.planes
        mask &= ((planes > 0) & (planes < 255)).all(axis=0)
    return mask


def sigma_clean(ref, clean, mask=None):
    '''
    Noise level of the clean pair: ``sqrt(var(I^r - I^c) / 2)``.

    Parameters
    ----------
    ref, clean : MultiImage
        Aligned 8-bit reference and clean images.
    mask : array-like, optional
        Valid pixels (see :func:`saturation_mask`).

    Returns
    -------
    NoiseEstimate
    '''
    stats = masked_diff_stats(ref, clean, mask)
    return _estimate(0.5 * stats.variance, 0.5 * stats.pooled_variance,
                     'clean_pair', stats.support)


def sigma_noisy(noisy, ref, clean, mask=None):
    '''
    Noise level of a noisy image:
    ``sqrt(var(I^n - I^r) - var(I^r - I^c) / 2)``.
    '''
    check_compatible(noisy, ref)
    pair = masked_diff_stats(ref, clean, mask)
    stats = masked_diff_stats(noisy, ref, mask)
    return _estimate(stats.variance - 0.5 * pair.variance,
                     stats.pooled_variance - 0.5 * pair.pooled_variance,
                     'noisy_vs_ref', stats.support)


def sigma_noisy_avg(noisy, ref, clean, mask=None):
    '''
    Noise level of a noisy image against the averaged pair ``I^a``:
    ``sqrt(var(I^n - I^a) - var(I^r - I^c) / 4)``.
    '''
    check_compatible(noisy, ref)
    pair = masked_diff_stats(ref, clean, mask)
    stats = diff_stats(noisy.planes - 0.5 * (ref.planes + clean.planes), mask)
    return _estimate(stats.variance - 0.25 * pair.variance,
                     stats.pooled_variance - 0.25 * pair.pooled_variance,
                     'noisy_vs_avg', stats.support)


def sigma_direct(image, gt, mask=None):
    '''
    True noise level ``stddev(image - gt)`` against a known ground truth.
    '''
    stats = masked_diff_stats(image, gt, mask)
    return _estimate(stats.variance, stats.pooled_variance, 'direct_vs_gt',
                     stats.support)


def sigma_standard(a, b, mask=None):
    '''
    Conventional estimate ``stddev(a - b)`` of the noise of ``a``, treating
    ``b`` as noise free.
    '''
    stats = masked_diff_stats(a, b, mask)
    return _estimate(stats.variance, stats.pooled_variance, 'standard',
                     stats.support)


def sigma_blurred_reference(noisy, ref, blur_sigma=BLUR_SIGMA, mask=None):
    '''
    ``stddev(I^n - blur(I^r))`` with a wide Gaussian blur approximating the
    smooth ground truth.

    Passing the same image as ``noisy`` and ``ref`` measures it against its
    own blurred version (calibration scenes of flat surfaces).  Texture and
    edges in the scene inflate the estimate.
    '''
    stats = masked_diff_stats(noisy, blur_image(ref, blur_sigma), mask)
    return _estimate(stats.variance, stats.pooled_variance, 'blurred_ref',
                     stats.support)


def _curve_samples(noisy, ref, clean, channel, method, blur_sigma, mask):
    '''
    Returns
    -------
    tuple
        ``(intensity, difference, pair_difference)`` sample vectors.
        ``pair_difference`` is ``None`` unless ``method == 'pair'``.
    '''
    if method == 'pair':
        difference = noisy.planes - 0.5 * (ref.planes + clean.planes)
        pair_difference = ref.planes - clean.planes
    elif method == 'standard':
        difference = noisy.planes - ref.planes
        pair_difference = None
    else:
        difference = noisy.planes - np.stack([gaussian_blur(plane_i,
                                                            blur_sigma)
                                              for plane_i in ref.planes])
        pair_difference = None
    intensity = ref.planes

    def select(planes):
        if channel == 'gray':
            return planes.mean(axis=0)[mask]
        elif channel == 'pooled':
            return planes[:, mask].ravel()
        return planes[CHANNEL_NAMES.index(channel)][mask]

    return (select(intensity), select(difference),
            None if pair_difference is None else select(pair_difference))


def _binned_variance(values, index, counts):
    '''
    Two-pass population variance of ``values`` grouped by ``index``.
    '''
    n_bins = counts.size
    safe_counts = np.maximum(counts, 1)
    means = np.bincount(index, weights=values, minlength=n_bins) / safe_counts
    deviation = values - means[index]
    return (np.bincount(index, weights=deviation * deviation,
                        minlength=n_bins) / safe_counts)


def noise_curve(noisy, ref, clean, bin_width=CURVE_BIN_WIDTH,
                channel='pooled', method='pair', min_support=CURVE_MIN_SUPPORT,
                blur_sigma=BLUR_SIGMA, mask=None):
    '''
    Noise level as a function of intensity.

    Samples are binned on the intensity of the reference image; the selected
    estimator is applied within each bin.

    Parameters
    ----------
    noisy, ref, clean : MultiImage
        Aligned 8-bit images.
    bin_width : float, optional
        Width of the intensity bins.
    channel : str or int, optional
        ``'pooled'`` (all channel samples together), ``'gray'`` (channels
        averaged before binning), a channel name or a channel index.
    method : str, optional
        ``'pair'`` (noisy vs averaged pair, corrected by the pair noise),
        ``'standard'`` (difference with the reference) or ``'blurred_ref'``
        (difference with the blurred reference).
    min_support : int, optional
        Bins with fewer samples are dropped.

    Returns
    -------
    NoiseCurve

    Raises
    ------
    InsufficientSupportError
        If no bin reaches ``min_support`` samples.
    '''
    logger = _L()  # use logger with function context
    if isinstance(channel, int):
        channel = CHANNEL_NAMES[channel]
    if channel not in CURVE_CHANNELS:
        raise InvalidParameterError('Unknown curve channel `%s`.' % channel)
    if method not in CURVE_METHODS:
        raise InvalidParameterError('Unknown curve method `%s`.' % method)
    if not bin_width > 0:
        raise InvalidParameterError('Bin width must be positive, got %r.' %
                                    bin_width)
    check_compatible(noisy, ref)
    check_compatible(ref, clean)
    mask = as_mask(mask, ref.shape)

    intensity, difference, pair_difference = \
        _curve_samples(noisy, ref, clean, channel, method, blur_sigma, mask)
    n_bins = int(math.ceil(256. / bin_width))
    index = np.minimum((intensity // bin_width).astype(int), n_bins - 1)
    counts = np.bincount(index, minlength=n_bins)
    variance = _binned_variance(difference, index, counts)
    if pair_difference is not None:
        variance = variance - 0.25 * _binned_variance(pair_difference, index,
                                                      counts)
    retained = counts >= min_support
    if not retained.any():
        raise InsufficientSupportError('No intensity bin holds %d samples.' %
                                       min_support)
    negative = retained & (variance < 0)
    if negative.any():
        logger.warning('%d curve bins with negative radicand clamped to 0',
                       negative.sum())
    variance = np.maximum(variance, 0)
    bins = pd.DataFrame({'intensity_center':
                         (np.arange(n_bins) + 0.5) * bin_width,
                         'sigma': np.sqrt(variance), 'variance': variance,
                         'support': counts})[retained]
    logger.debug('noise curve (%s, %s): %d of %d bins retained', method,
                 channel, retained.sum(), n_bins)
    return NoiseCurve(bins[CURVE_COLUMNS].reset_index(drop=True), bin_width,
                      method, channel, None)


def fit_affine_noise_model(curve):
    '''
    Weighted least-squares fit of ``var(t) = a * t + b`` to a noise curve.

    Bin supports are the weights.  If the unconstrained line is negative at
    either end of the observed intensity range, the line is refit pinned to
    zero at that end (or replaced by a constant when the pinned slope has the
    wrong sign).

    Returns
    -------
    AffineNoiseModel

    Raises
    ------
    InsufficientSupportError
        If the curve holds fewer than 2 bins.
    '''
    bins = curve.bins
    if len(bins) < 2:
        raise InsufficientSupportError('Affine fit requires at least 2 curve '
                                       'bins, got %d.' % len(bins))
    t = bins['intensity_center'].values.astype(float)
    y = bins['variance'].values.astype(float)
    w = bins['support'].values.astype(float)
    a, b = np.polyfit(t, y, 1, w=np.sqrt(w))
    t_min, t_max = t.min(), t.max()
    for t_pin in (t_min, t_max):
        if a * t_pin + b < 0:
            _L().warning('affine fit negative at t=%g; refitting pinned to 0',
                         t_pin)
            dt = t - t_pin
            a = np.sum(w * dt * y) / np.sum(w * dt * dt)
            b = -a * t_pin
            if a * (t_max - t_pin) < 0 or a * (t_min - t_pin) < 0:
                a, b = 0., max(np.average(y, weights=w), 0.)
            break
    return AffineNoiseModel(float(a), float(b))


def gate_from_sigma(sigma, threshold_db=GATE_THRESHOLD_DB):
    '''
    Quality-gate verdict from a known clean-pair noise level.
    '''
    psnr_db = psnr_from_sigma(sigma)
    return GateVerdict(psnr_db, threshold_db, psnr_db >= threshold_db,
                       float(sigma))


def quality_gate(ref, clean, threshold_db=GATE_THRESHOLD_DB, mask=None):
    '''
    Certify a scene from the PSNR of its clean pair.

    The PSNR is derived from the pooled clean-pair noise estimate
    (:func:`sigma_clean`); a zero estimate reports the capped PSNR and passes.

    Returns
    -------
    GateVerdict
    '''
    return gate_from_sigma(sigma_clean(ref, clean, mask).pooled_sigma,
                           threshold_db)
