'''
Seeded generators for synthetic scenes and noise.

Every generator takes a :class:`numpy.random.Generator` (see
:func:`make_rng`), so results are reproducible for a given seed.  Gaussian
samples come from numpy's ``PCG64`` bit generator and its ziggurat normal
transform.
'''
from collections import namedtuple
import logging

import numpy as np

from .raster import Domain, InvalidParameterError, MultiImage, gaussian_blur


logger = logging.getLogger(__name__)

Triple = namedtuple('Triple', 'noisy ref clean')


def make_rng(seed=0):
    return np.random.default_rng(seed)


def _image(planes, domain):
    domain = Domain(domain)
    return MultiImage(np.clip(planes, domain.low, domain.high), domain)


def textured_image(height, width, rng, low=2000., high=40000., block=48,
                   edge_sigma=2., domain=Domain.RAW16):
    '''
    Piecewise-flat scene of random rectangular patches with soft edges.

    Parameters
    ----------
    height, width : int
    rng : numpy.random.Generator
    low, high : float, optional
        Range of the patch levels.
    block : int, optional
        Patch side in pixels.
    edge_sigma : float, optional
        Blur applied to the patch edges.
    domain : Domain, optional

    Returns
    -------
    MultiImage
        Each channel is the same pattern scaled by a random tint in
        ``[0.7, 1]``.
    '''
    rows = -(-height // block)
    columns = -(-width // block)
    levels = rng.uniform(low, high, size=(rows, columns))
    field = np.repeat(np.repeat(levels, block, axis=0), block,
                      axis=1)[:height, :width]
    field = gaussian_blur(field, edge_sigma)
    tint = rng.uniform(0.7, 1., size=3)
    return _image(tint[:, None, None] * field[None], domain)


def ramp_image(height, width, low=20., high=235., domain=Domain.ALIGNED8):
    '''
    Horizontal ramp from ``low`` (left column) to ``high`` (right column) in
    every channel.
    '''
    row = np.linspace(low, high, width)
    return _image(np.broadcast_to(row, (3, height, width)), domain)


def constant_image(height, width, value, gradient=0., domain=Domain.RAW16):
    '''
    Flat surface with a linear illumination gradient.

    The intensity varies diagonally by ``gradient`` levels in total across
    the frame, centered on ``value``.
    '''
    y = np.linspace(0, 1, height)[:, None]
    x = np.linspace(0, 1, width)[None, :]
    plane = value + gradient * (0.5 * (x + y) - 0.5)
    return _image(np.broadcast_to(plane, (3, height, width)), domain)


def checkerboard_image(height, width, square=8, low=64., high=192.,
                       domain=Domain.ALIGNED8):
    y, x = np.indices((height, width))
    plane = np.where(((y // square) + (x // square)) % 2, high, low)
    return _image(np.broadcast_to(plane, (3, height, width)), domain)


def add_gaussian_noise(image, sigma, rng):
    '''
    Add independent zero-mean Gaussian noise, then clip to the image domain.

    Parameters
    ----------
    sigma : float or sequence of 3 floats
        Noise standard deviation, shared or per channel.
    '''
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (3, ))
    if (sigma < 0).any():
        raise InvalidParameterError('Noise sigma must be non-negative.')
    noise = rng.standard_normal(image.planes.shape) * sigma[:, None, None]
    return _image(image.planes + noise, image.domain)


def add_signal_dependent_noise(image, a, b, rng):
    '''
    Add Gaussian noise with variance ``a * t + b`` at intensity ``t``.
    '''
    variance = a * image.planes + b
    if (variance < 0).any():
        raise InvalidParameterError('Variance law a * t + b is negative on '
                                    'the image.')
    noise = rng.standard_normal(image.planes.shape) * np.sqrt(variance)
    return _image(image.planes + noise, image.domain)


def noisy_triple(gt, sigma_ref, sigma_clean, sigma_noisy, rng):
    '''
    Noisy, reference and clean observations of ``gt`` with independent
    noise.

    Returns
    -------
    Triple
    '''
    ref = add_gaussian_noise(gt, sigma_ref, rng)
    clean = add_gaussian_noise(gt, sigma_clean, rng)
    noisy = add_gaussian_noise(gt, sigma_noisy, rng)
    return Triple(noisy, ref, clean)


def raw_from_gt8(gt8, gains, rng=None, sigma=0.):
    '''
    Raw capture that aligns to ``gt8`` with the given per-channel gains.

    Parameters
    ----------
    gt8 : MultiImage
        8-bit scene.
    gains : float or sequence of 3 floats
        Gain mapping the raw image onto ``gt8``.
    rng : numpy.random.Generator, optional
        Required when ``sigma > 0``.
    sigma : float, optional
        Noise in 8-bit levels (``sigma / gain`` in the raw domain).

    Returns
    -------
    MultiImage
        :attr:`Domain.RAW16` image.
    '''
    gains = np.broadcast_to(np.asarray(gains, dtype=float), (3, ))
    planes = gt8.planes / gains[:, None, None]
    if sigma > 0:
        planes = planes + (rng.standard_normal(planes.shape) *
                           (sigma / gains)[:, None, None])
    return _image(planes, Domain.RAW16)
