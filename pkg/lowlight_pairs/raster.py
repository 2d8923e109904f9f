'''
Channel-plane arithmetic shared by every stage of the pipeline.

Images are held as double-precision ``(3, height, width)`` arrays regardless
of the domain tag; integer formats are converted only on I/O (see
:mod:`lowlight_pairs.image_io`).
'''
from collections import namedtuple
import enum
import logging
import math

from logging_helpers import _L
from scipy.ndimage import correlate1d
import numpy as np


logger = logging.getLogger(__name__)

#: Supports smaller than this are flagged as low support in statistics.
LOW_SUPPORT_PIXELS = 1000

CHANNEL_NAMES = ('red', 'green', 'blue')


class RasterError(Exception):
    pass


class InvalidParameterError(RasterError, ValueError):
    pass


class InsufficientSupportError(RasterError):
    pass


class DegenerateImageError(RasterError):
    pass


class Domain(enum.Enum):
    '''
    Sample domain of a :class:`MultiImage`.

    The value of each member is the valid ``(low, high)`` sample range.
    '''
    RAW16 = (0., 65535.)
    ALIGNED8 = (0., 255.)

    @property
    def low(self):
        return self.value[0]

    @property
    def high(self):
        return self.value[1]


class MultiImage(object):
    '''
    Three-channel raster with a domain tag.

    Parameters
    ----------
    planes : array-like
        Samples with shape ``(3, height, width)``.
    domain : Domain
        Declared sample domain.  Every sample must lie within
        ``[domain.low, domain.high]``.

    Raises
    ------
    InvalidParameterError
        If the shape is wrong, a sample is not finite or a sample lies outside
        the declared domain.
    '''
    def __init__(self, planes, domain):
        planes = np.array(planes, dtype=float)
        if planes.ndim != 3 or planes.shape[0] != 3:
            raise InvalidParameterError('Expected planes with shape '
                                        '(3, height, width), got %s.' %
                                        (planes.shape, ))
        if planes.shape[1] < 1 or planes.shape[2] < 1:
            raise InvalidParameterError('Image must be at least 1x1 pixels.')
        if not np.isfinite(planes).all():
            raise InvalidParameterError('Image contains non-finite samples.')
        domain = Domain(domain)
        low, high = planes.min(), planes.max()
        if low < domain.low or high > domain.high:
            raise InvalidParameterError('Samples in [%g, %g] exceed the %s '
                                        'range [%g, %g].' %
                                        (low, high, domain.name, domain.low,
                                         domain.high))
        planes.setflags(write=False)
        self._planes = planes
        self.domain = domain

    @classmethod
    def from_channels(cls, red, green, blue, domain):
        return cls(np.stack([as_plane(red), as_plane(green),
                             as_plane(blue)]), domain)

    @classmethod
    def from_hwc(cls, data, domain):
        '''
        Build an image from an interleaved ``(height, width, 3)`` array.
        '''
        data = np.asarray(data, dtype=float)
        if data.ndim != 3 or data.shape[2] != 3:
            raise InvalidParameterError('Expected interleaved array with '
                                        'shape (height, width, 3), got %s.' %
                                        (data.shape, ))
        return cls(np.moveaxis(data, 2, 0), domain)

    @classmethod
    def average(cls, images):
        '''
        Pixel-wise mean of one or more images sharing dimensions and domain.

        Used for the averaged reference/clean groups of the mobile capture
        protocol; averaging happens in the input (raw) domain.
        '''
        images = list(images)
        if not images:
            raise InvalidParameterError('Cannot average an empty image group.')
        domain = images[0].domain
        for image_i in images[1:]:
            check_compatible(images[0], image_i)
        if len(images) == 1:
            return images[0]
        return cls(np.mean([image_i.planes for image_i in images], axis=0),
                   domain)

    @property
    def planes(self):
        return self._planes

    @property
    def height(self):
        return self._planes.shape[1]

    @property
    def width(self):
        return self._planes.shape[2]

    @property
    def shape(self):
        '''
        ``(height, width)`` of every channel plane.
        '''
        return self._planes.shape[1:]

    @property
    def size(self):
        return self.height * self.width

    def __getitem__(self, channel):
        return self._planes[channel]

    def __repr__(self):
        return '<MultiImage %dx%d %s>' % (self.width, self.height,
                                          self.domain.name)

    def to_hwc(self):
        return np.moveaxis(self._planes, 0, 2)

    def with_planes(self, planes, domain=None):
        return MultiImage(planes, self.domain if domain is None else domain)

    def crop(self, x, y, width, height):
        '''
        Parameters
        ----------
        x, y : int
            Top-left corner (column, row) of the crop rectangle.
        width, height : int
            Size of the crop rectangle in pixels.

        Returns
        -------
        MultiImage
            Cropped copy in the same domain.

        Raises
        ------
        InvalidParameterError
            If the rectangle does not lie within the image.
        '''
        if (x < 0 or y < 0 or width < 1 or height < 1 or
                x + width > self.width or y + height > self.height):
            raise InvalidParameterError('Crop rectangle (%d, %d, %d, %d) is '
                                        'outside of %dx%d image.' %
                                        (x, y, width, height, self.width,
                                         self.height))
        return self.with_planes(self._planes[:, y:y + height, x:x + width])

    def equals(self, other):
        return (self.domain == other.domain and
                np.array_equal(self._planes, other.planes))


DiffStats = namedtuple('DiffStats', 'mean variance stddev pooled_mean '
                       'pooled_variance pooled_stddev support low_support')


def as_plane(plane):
    '''
    Validate a single channel plane.

    Returns
    -------
    numpy.ndarray
        2-D ``float`` array.

    Raises
    ------
    InvalidParameterError
        If the plane is not 2-D, is empty or contains non-finite samples.
    '''
    plane = np.asarray(plane, dtype=float)
    if plane.ndim != 2 or plane.shape[0] < 1 or plane.shape[1] < 1:
        raise InvalidParameterError('Expected a non-empty 2-D plane, got '
                                    'shape %s.' % (plane.shape, ))
    if not np.isfinite(plane).all():
        raise InvalidParameterError('Plane contains non-finite samples.')
    return plane


def as_mask(mask, shape):
    '''
    Parameters
    ----------
    mask : array-like or None
        Boolean pixel mask.  ``None`` selects every pixel.
    shape : tuple
        ``(height, width)`` of the masked planes.

    Returns
    -------
    numpy.ndarray
        Boolean array with the requested shape.
    '''
    if mask is None:
        return np.ones(shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != tuple(shape):
        raise InvalidParameterError('Mask shape %s does not match plane '
                                    'shape %s.' % (mask.shape, tuple(shape)))
    return mask


def check_compatible(a, b, same_domain=True):
    if a.shape != b.shape:
        raise InvalidParameterError('Image dimensions differ: %s vs %s.' %
                                    (a.shape, b.shape))
    if same_domain and a.domain != b.domain:
        raise InvalidParameterError('Image domains differ: %s vs %s.' %
                                    (a.domain.name, b.domain.name))


def gaussian_kernel(sigma):
    '''
    Normalized 1-D Gaussian kernel truncated at radius ``ceil(3 * sigma)``.
    '''
    if not sigma > 0:
        raise InvalidParameterError('Gaussian sigma must be positive, got %r.'
                                    % sigma)
    radius = int(math.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=float)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(plane, sigma):
    '''
    Separable Gaussian convolution with edge replication.

    Parameters
    ----------
    plane : array-like
        2-D channel plane.
    sigma : float
        Standard deviation of the kernel in pixels (must be positive).

    Returns
    -------
    numpy.ndarray
        Blurred plane with unchanged dimensions.
    '''
    kernel = gaussian_kernel(sigma)
    plane = as_plane(plane)
    blurred = correlate1d(plane, kernel, axis=0, mode='nearest')
    return correlate1d(blurred, kernel, axis=1, mode='nearest')


def blur_image(image, sigma):
    # Clip rounding overshoot so the result stays within the domain.
    planes = np.clip([gaussian_blur(plane_i, sigma)
                      for plane_i in image.planes], image.domain.low,
                     image.domain.high)
    return image.with_planes(planes)


def gradient_magnitude(plane):
    '''
    Per-pixel ``sqrt(gx ** 2 + gy ** 2)``.

    Central differences are used in the interior and one-sided differences
    on the borders.

    Raises
    ------
    InvalidParameterError
        If either dimension of the plane is smaller than 2 pixels.
    '''
    plane = as_plane(plane)
    if min(plane.shape) < 2:
        raise InvalidParameterError('Gradient requires a plane of at least '
                                    '2x2 pixels, got %s.' % (plane.shape, ))
    gy, gx = np.gradient(plane)
    return np.hypot(gx, gy)


def percentile(image, p):
    '''
    Empirical CDF inversion over all channels pooled.

    Parameters
    ----------
    image : MultiImage
    p : float
        Percentage in ``(0, 100]``.

    Returns
    -------
    float
        Smallest sample value ``v`` such that at least ``p`` percent of the
        samples are ``<= v``.
    '''
    if not 0 < p <= 100:
        raise InvalidParameterError('Percentile must be in (0, 100], got %r.'
                                    % p)
    samples = image.planes.ravel()
    k = int(math.ceil(p * samples.size / 100.)) - 1
    k = min(max(k, 0), samples.size - 1)
    return float(np.partition(samples, k)[k])


def scale_clamp(image, gain, lo=0., hi=255., domain=None):
    '''
    Apply a per-channel gain then clamp to ``[lo, hi]``.

    Parameters
    ----------
    image : MultiImage
    gain : float or sequence of 3 floats
        Positive gain, either shared by all channels or one per channel.
    lo, hi : float, optional
        Clamp range.
    domain : Domain, optional
        Domain tag of the output.  By default, :attr:`Domain.ALIGNED8` when
        ``hi <= 255`` and :attr:`Domain.RAW16` otherwise.

    Returns
    -------
    MultiImage
    '''
    gain = np.broadcast_to(np.asarray(gain, dtype=float), (3, ))
    if not (np.isfinite(gain).all() and (gain > 0).all()):
        raise InvalidParameterError('Gains must be positive, got %s.' %
                                    list(gain))
    if not lo < hi:
        raise InvalidParameterError('Empty clamp range [%g, %g].' % (lo, hi))
    if domain is None:
        domain = Domain.ALIGNED8 if hi <= 255 else Domain.RAW16
    planes = np.clip(image.planes * gain[:, None, None], lo, hi)
    return MultiImage(planes, domain)


def diff_stats(diff, mask=None):
    '''
    Mean, variance and standard deviation of a difference stack.

    Statistics use the population convention (divide by ``N``) and a two-pass
    algorithm.  The pooled statistics concatenate all three channels.

    Parameters
    ----------
    diff : array-like
        Difference samples with shape ``(3, height, width)``.
    mask : array-like, optional
        ``(height, width)`` boolean pixel mask.

    Returns
    -------
    DiffStats
        Per-channel ``mean``, ``variance`` and ``stddev`` arrays (length 3),
        pooled equivalents, ``support`` (pixels per channel) and a
        ``low_support`` flag.

    Raises
    ------
    InsufficientSupportError
        If the mask selects no pixel.
    '''
    diff = np.asarray(diff, dtype=float)
    mask = as_mask(mask, diff.shape[1:])
    samples = diff[:, mask]
    support = samples.shape[1]
    if support == 0:
        raise InsufficientSupportError('No valid pixels to compute '
                                       'statistics over.')
    mean = samples.mean(axis=1)
    variance = ((samples - mean[:, None]) ** 2).mean(axis=1)
    pooled = samples.ravel()
    pooled_mean = pooled.mean()
    pooled_variance = ((pooled - pooled_mean) ** 2).mean()
    low_support = support < LOW_SUPPORT_PIXELS
    if low_support:
        _L().debug('low support: %d pixels', support)
    return DiffStats(mean, variance, np.sqrt(variance), float(pooled_mean),
                     float(pooled_variance), math.sqrt(pooled_variance),
                     support, low_support)


def masked_diff_stats(a, b, mask=None):
    '''
    Statistics of ``a - b`` restricted to ``mask``.

    See :func:`diff_stats`.
    '''
    check_compatible(a, b)
    return diff_stats(a.planes - b.planes, mask)
