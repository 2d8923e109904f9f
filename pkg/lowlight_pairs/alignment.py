'''
Intensity alignment of raw captures to the 8-bit reference frame.

The raw reference is mapped linearly so that its 99th percentile lands on
intensity 230.  Every other image of the scene is mapped with per-channel
gains ``alpha`` minimizing the clamped least-squares objective::

    E(alpha) = sum_{i in M} (R(i) - max(min(alpha * I(i), 255), 0)) ** 2

where ``R`` and ``I`` are the blurred (``sigma=5``) reference and raw image
and ``M`` is the set of low-gradient pixels of the blurred reference.  The
blurred planes are used for estimation only; the gains are applied to the
unblurred raw image.
'''
from collections import OrderedDict, namedtuple
import functools as ft
import logging
import math

from logging_helpers import _L
import numpy as np
import pandas as pd

from .raster import (CHANNEL_NAMES, DegenerateImageError,
                     InsufficientSupportError,
                     InvalidParameterError, MultiImage, RasterError,
                     check_compatible, gaussian_blur, gradient_magnitude,
                     percentile, scale_clamp)


logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2

ANCHOR_PERCENTILE = 99.
ANCHOR_VALUE = 230.
BLUR_SIGMA = 5.
GRADIENT_THRESHOLD = 1.
MIN_MASK_SUPPORT = 1000
REL_TOL = 1e-5
MAX_ITERATIONS = 200
BRACKET = (0.25, 4.)

#: Half-width of the 95% band of the difference of two images whose noise
#: corresponds to a PSNR of 35 dB.
NOISE_BOUND = 1.96 * math.sqrt(2) * 255 * 10 ** (-35 / 20.)
DIAGNOSTIC_BIN_WIDTH = 4.
#: Bins with fewer samples are ignored when counting drifting bins.
DRIFT_MIN_COUNT = 100

ReferenceGamma = namedtuple('ReferenceGamma', 'gamma anchor_percentile '
                            'anchor_value')
AlphaEstimate = namedtuple('AlphaEstimate', 'alpha objective_value mask_size '
                           'iterations converged channel')
GoldenSectionResult = namedtuple('GoldenSectionResult', 'x fx iterations '
                                 'converged')
AlignmentDiagnostics = namedtuple('AlignmentDiagnostics', 'bins noise_bound '
                                  'drift_bins')
ReferencePlanes = namedtuple('ReferencePlanes', 'blurred masks')

DIAGNOSTIC_COLUMNS = ['bin_center', 'mean_diff', 'p2.5_diff', 'p97.5_diff',
                      'count']


class AlignmentError(RasterError):
    '''
    Attributes
    ----------
    image : str
        Label of the image that failed to align (e.g., ``'noisy_0'``).
    '''
    def __init__(self, message, image):
        super(AlignmentError, self).__init__(message)
        self.image = image


def compute_reference_gamma(raw_ref, anchor_percentile=ANCHOR_PERCENTILE,
                            anchor_value=ANCHOR_VALUE):
    '''
    Linear scaling of the raw reference into the 8-bit domain.

    Parameters
    ----------
    raw_ref : MultiImage
        Raw (16-bit domain) reference image.
    anchor_percentile : float, optional
        Percentile of the pooled raw samples used as anchor.
    anchor_value : float, optional
        8-bit intensity the anchor percentile is mapped to.

    Returns
    -------
    ReferenceGamma

    Raises
    ------
    DegenerateImageError
        If the anchor percentile of the raw reference is not positive.
    '''
    if not 0 < anchor_value <= 255:
        raise InvalidParameterError('Anchor value must be in (0, 255], got '
                                    '%r.' % anchor_value)
    anchor = percentile(raw_ref, anchor_percentile)
    if anchor <= 0:
        raise DegenerateImageError('Percentile %g of the reference is %g; '
                                   'cannot derive a gain.' %
                                   (anchor_percentile, anchor))
    return ReferenceGamma(anchor_value / anchor, anchor_percentile,
                          anchor_value)


def low_gradient_mask(ref8_blur, threshold=GRADIENT_THRESHOLD):
    return gradient_magnitude(ref8_blur) < threshold


def _objective(reference, raw, alpha):
    residual = reference - np.clip(alpha * raw, 0, 255)
    return float(np.sum(residual * residual))


def alignment_objective(ref8_blur, raw_blur, mask, alpha):
    '''
    Evaluate ``E(alpha)`` over the pixels selected by ``mask``.

    Raises
    ------
    InsufficientSupportError
        If the mask is empty.
    '''
    ref8_blur = np.asarray(ref8_blur, dtype=float)
    raw_blur = np.asarray(raw_blur, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if not ref8_blur.shape == raw_blur.shape == mask.shape:
        raise InvalidParameterError('Planes and mask must share dimensions.')
    if not alpha > 0:
        raise InvalidParameterError('Alpha must be positive, got %r.' % alpha)
    if not mask.any():
        raise InsufficientSupportError('Alignment mask is empty.')
    return _objective(ref8_blur[mask], raw_blur[mask], alpha)


def golden_section_search(f, lo, hi, rel_tol=REL_TOL,
                          max_iterations=MAX_ITERATIONS):
    '''
    Minimize a unimodal function of one variable over ``[lo, hi]``.

    Parameters
    ----------
    f : callable
    lo, hi : float
        Bracket endpoints.
    rel_tol : float, optional
        Stop once the bracket width is at most ``rel_tol`` times the bracket
        midpoint.
    max_iterations : int, optional

    Returns
    -------
    GoldenSectionResult
        The minimizer ``x``, ``f(x)``, the number of iterations and whether the
        tolerance was reached.  A bracket endpoint is returned instead of the
        interior minimizer if its value is lower.
    '''
    a, b = min(lo, hi), max(lo, hi)
    f_a, f_b = f(a), f(b)
    c = a + INV_PHI_SQUARE * (b - a)
    d = a + INV_PHI * (b - a)
    f_c, f_d = f(c), f(d)

    def _width_ok(a, b):
        return (b - a) <= rel_tol * 0.5 * (abs(a) + abs(b))

    iterations = 0
    while not _width_ok(a, b) and iterations < max_iterations:
        iterations += 1
        if f_c < f_d:
            b, d, f_d = d, c, f_c
            c = a + INV_PHI_SQUARE * (b - a)
            f_c = f(c)
        else:
            a, c, f_c = c, d, f_d
            d = a + INV_PHI * (b - a)
            f_d = f(d)
    x, f_x = (c, f_c) if f_c < f_d else (d, f_d)
    for endpoint, f_endpoint in ((lo, f_a), (hi, f_b)):
        if f_endpoint < f_x:
            x, f_x = endpoint, f_endpoint
    return GoldenSectionResult(x, f_x, iterations, _width_ok(a, b))


def reference_planes(ref8, blur_sigma=BLUR_SIGMA,
                     gradient_threshold=GRADIENT_THRESHOLD):
    '''
    Blurred reference channels and their low-gradient masks.

    The masks are computed from the reference only.
    '''
    blurred = np.stack([gaussian_blur(plane_i, blur_sigma)
                        for plane_i in ref8.planes])
    masks = np.stack([low_gradient_mask(plane_i, gradient_threshold)
                      for plane_i in blurred])
    return ReferencePlanes(blurred, masks)


def estimate_alpha(ref8, raw, channel, blur_sigma=BLUR_SIGMA,
                   gradient_threshold=GRADIENT_THRESHOLD,
                   min_support=MIN_MASK_SUPPORT, rel_tol=REL_TOL,
                   max_iterations=MAX_ITERATIONS, bracket=BRACKET,
                   reference=None):
    '''
    Estimate the gain aligning one channel of ``raw`` to ``ref8``.

    Parameters
    ----------
    ref8 : MultiImage
        8-bit reference.
    raw : MultiImage
        Image to align (usually in the raw domain).
    channel : int or None
        Channel index.  ``None`` estimates a single gain jointly over all
        channels.
    reference : ReferencePlanes, optional
        Precomputed result of :func:`reference_planes` for ``ref8``.

    Returns
    -------
    AlphaEstimate

    Raises
    ------
    InsufficientSupportError
        If the low-gradient mask holds fewer than ``min_support`` samples.
    DegenerateImageError
        If the mean of either blurred image over the mask is not positive.
    '''
    logger = _L()  # use logger with function context
    check_compatible(ref8, raw, same_domain=False)
    if reference is None:
        reference = reference_planes(ref8, blur_sigma, gradient_threshold)
    channels = list(range(3)) if channel is None else [channel]
    ref_samples = []
    raw_samples = []
    for channel_i in channels:
        mask_i = reference.masks[channel_i]
        raw_blur_i = gaussian_blur(raw.planes[channel_i], blur_sigma)
        ref_samples.append(reference.blurred[channel_i][mask_i])
        raw_samples.append(raw_blur_i[mask_i])
    ref_samples = np.concatenate(ref_samples)
    raw_samples = np.concatenate(raw_samples)
    mask_size = ref_samples.size
    if mask_size < min_support:
        raise InsufficientSupportError('Low-gradient mask holds %d samples; '
                                       'at least %d are required.' %
                                       (mask_size, min_support))
    mean_ref, mean_raw = ref_samples.mean(), raw_samples.mean()
    if not (mean_ref > 0 and mean_raw > 0):
        raise DegenerateImageError('Cannot bracket alpha: mean reference %g, '
                                   'mean image %g over the mask.' %
                                   (mean_ref, mean_raw))
    alpha_0 = mean_ref / mean_raw
    result = golden_section_search(ft.partial(_objective, ref_samples,
                                              raw_samples),
                                   bracket[0] * alpha_0, bracket[1] * alpha_0,
                                   rel_tol=rel_tol,
                                   max_iterations=max_iterations)
    if not result.converged:
        logger.warning('golden-section search did not converge after %d '
                       'iterations (channel=%s)', result.iterations, channel)
    logger.debug('channel=%s alpha_0=%g alpha=%g E=%g mask=%d iterations=%d',
                 channel, alpha_0, result.x, result.fx, mask_size,
                 result.iterations)
    return AlphaEstimate(result.x, result.fx, mask_size, result.iterations,
                         result.converged, channel)


def align_image(ref8, raw, joint=False, reference=None, **kwargs):
    '''
    Map ``raw`` into the 8-bit frame of ``ref8``.

    Parameters
    ----------
    joint : bool, optional
        Estimate a single gain shared by all channels instead of one gain per
        channel.
    **kwargs
        Passed to :func:`estimate_alpha`.

    Returns
    -------
    (MultiImage, list)
        Aligned 8-bit image and the list of :class:`AlphaEstimate` (one per
        channel, or a single joint estimate).
    '''
    if reference is None:
        reference = reference_planes(ref8,
                                     kwargs.get('blur_sigma', BLUR_SIGMA),
                                     kwargs.get('gradient_threshold',
                                                GRADIENT_THRESHOLD))
    if joint:
        estimates = [estimate_alpha(ref8, raw, None, reference=reference,
                                    **kwargs)]
        gains = [estimates[0].alpha] * 3
    else:
        estimates = [estimate_alpha(ref8, raw, channel_i, reference=reference,
                                    **kwargs) for channel_i in range(3)]
        gains = [estimate_i.alpha for estimate_i in estimates]
    return scale_clamp(raw, gains, 0, 255), estimates


def alignment_diagnostics(aligned, ref8, bin_width=DIAGNOSTIC_BIN_WIDTH,
                          noise_bound=NOISE_BOUND):
    '''
    Summarize ``aligned - ref8`` per reference intensity bin.

    Returns
    -------
    AlignmentDiagnostics
        ``bins`` is a :class:`pandas.DataFrame` with the columns
        ``bin_center, mean_diff, p2.5_diff, p97.5_diff, count``, one row per
        bin covering ``[0, 255]`` (empty bins have a zero count and missing
        statistics).  ``drift_bins`` counts populated bins whose mean
        difference leaves the ``+/-noise_bound`` band, a symptom of movement
        or saturation between exposures.
    '''
    check_compatible(aligned, ref8)
    n_bins = int(math.ceil(255. / bin_width))
    reference = ref8.planes.ravel()
    index = np.minimum((reference // bin_width).astype(int), n_bins - 1)
    df_diff = pd.DataFrame({'bin': index,
                            'diff': aligned.planes.ravel() - reference})
    grouped = df_diff.groupby('bin')['diff']
    df_bins = pd.DataFrame({'mean_diff': grouped.mean(),
                            'p2.5_diff': grouped.quantile(0.025),
                            'p97.5_diff': grouped.quantile(0.975),
                            'count': grouped.size()})
    df_bins = df_bins.reindex(range(n_bins))
    df_bins['count'] = df_bins['count'].fillna(0).astype(int)
    df_bins['bin_center'] = (np.arange(n_bins) + 0.5) * bin_width
    df_bins = df_bins[DIAGNOSTIC_COLUMNS].reset_index(drop=True)
    populated = df_bins['count'] >= DRIFT_MIN_COUNT
    drift_bins = int((populated & (df_bins['mean_diff'].abs() >
                                   noise_bound)).sum())
    return AlignmentDiagnostics(df_bins, noise_bound, drift_bins)


def intensity_histograms(images):
    '''
    Per-channel 256-bin histograms of 8-bit images.

    Parameters
    ----------
    images : list
        ``(label, image)`` pairs.

    Returns
    -------
    pandas.DataFrame
        Columns ``image, channel, intensity, count``.
    '''
    frames = []
    for label, image_i in images:
        levels = np.clip(np.floor(image_i.planes + 0.5), 0, 255).astype(int)
        for name_j, levels_j in zip(CHANNEL_NAMES, levels):
            frames.append(pd.DataFrame({'image': label, 'channel': name_j,
                                        'intensity': np.arange(256),
                                        'count': np.bincount(levels_j.ravel(),
                                                             minlength=256)}))
    return pd.concat(frames, ignore_index=True)[['image', 'channel',
                                                 'intensity', 'count']]


class AlignedScene(object):
    '''
    Result of :func:`align_scene`.

    Attributes
    ----------
    gamma : ReferenceGamma
    reference, clean : MultiImage
        8-bit reference ``I^r`` and aligned clean image ``I^c``.
    noisy : list of MultiImage
        Aligned noisy images ``I^n``.
    estimates : OrderedDict
        Alpha estimates, keyed by image label (``'clean'``, ``'noisy_0'``,
        ...).
    diagnostics : OrderedDict
        :class:`AlignmentDiagnostics`, keyed by image label.
    '''
    def __init__(self, scene_id, camera_tag, gamma, reference, clean, noisy,
                 estimates, diagnostics):
        self.scene_id = scene_id
        self.camera_tag = camera_tag
        self.gamma = gamma
        self.reference = reference
        self.clean = clean
        self.noisy = noisy
        self.estimates = estimates
        self.diagnostics = diagnostics

    def images(self):
        '''
        Returns
        -------
        list
            ``(label, image)`` pairs, reference first.
        '''
        return ([('reference', self.reference), ('clean', self.clean)] +
                [('noisy_%d' % i, image_i)
                 for i, image_i in enumerate(self.noisy)])

    def gt_estimate(self):
        '''
        Best ground-truth estimate ``I^a = (I^r + I^c) / 2``.
        '''
        return MultiImage.average([self.reference, self.clean])

    def to_dict(self):
        return OrderedDict([
            ('gamma', self.gamma.gamma),
            ('anchor_percentile', self.gamma.anchor_percentile),
            ('anchor_value', self.gamma.anchor_value),
            ('images', OrderedDict(
                (label, OrderedDict([
                    ('alpha', [e.alpha for e in estimates]),
                    ('objective_value', [e.objective_value
                                         for e in estimates]),
                    ('mask_size', [e.mask_size for e in estimates]),
                    ('iterations', [e.iterations for e in estimates]),
                    ('converged', all(e.converged for e in estimates)),
                    ('drift_bins', self.diagnostics[label].drift_bins)]))
                for label, estimates in self.estimates.items()))])


def align_scene(bundle, anchor_percentile=ANCHOR_PERCENTILE,
                anchor_value=ANCHOR_VALUE, joint=False,
                diagnostic_bin_width=DIAGNOSTIC_BIN_WIDTH, **kwargs):
    '''
    Align every image of a scene to its 8-bit reference.

    Raw groups are averaged (and cropped) in the raw domain before any gain
    is estimated.

    Parameters
    ----------
    bundle : SceneBundle
    **kwargs
        Passed to :func:`estimate_alpha`.

    Returns
    -------
    AlignedScene

    Raises
    ------
    AlignmentError
        If the reference gain or any image gain cannot be estimated.  The
        ``image`` attribute names the failed image.
    '''
    logger = _L()  # use logger with function context
    bundle = bundle.cropped()
    try:
        gamma = compute_reference_gamma(bundle.reference_image(),
                                        anchor_percentile, anchor_value)
    except RasterError as exception:
        raise AlignmentError('Scene `%s`, image `reference`: %s' %
                             (bundle.scene_id, exception), 'reference')
    ref8 = scale_clamp(bundle.reference_image(), gamma.gamma, 0, 255)
    reference = reference_planes(ref8, kwargs.get('blur_sigma', BLUR_SIGMA),
                                 kwargs.get('gradient_threshold',
                                            GRADIENT_THRESHOLD))
    targets = [('clean', bundle.clean_image())]
    targets += [('noisy_%d' % i, image_i)
                for i, image_i in enumerate(bundle.noisy)]

    aligned = OrderedDict()
    estimates = OrderedDict()
    diagnostics = OrderedDict()
    for label, raw_i in targets:
        try:
            aligned[label], estimates[label] = \
                align_image(ref8, raw_i, joint=joint, reference=reference,
                            **kwargs)
        except RasterError as exception:
            raise AlignmentError('Scene `%s`, image `%s`: %s' %
                                 (bundle.scene_id, label, exception), label)
        diagnostics[label] = alignment_diagnostics(aligned[label], ref8,
                                                   diagnostic_bin_width)
        if diagnostics[label].drift_bins:
            logger.warning('scene `%s`, image `%s`: %d intensity bins drift '
                           'outside the +/-%.2f noise bound',
                           bundle.scene_id, label,
                           diagnostics[label].drift_bins, NOISE_BOUND)
    logger.info('aligned scene `%s`: gamma=%g, alphas=%s', bundle.scene_id,
                gamma.gamma, dict((label, [round(e.alpha, 8) for e in v])
                                  for label, v in estimates.items()))
    noisy = [aligned[label] for label, _ in targets[1:]]
    return AlignedScene(bundle.scene_id, bundle.camera_tag, gamma, ref8,
                        aligned['clean'], noisy, estimates, diagnostics)
