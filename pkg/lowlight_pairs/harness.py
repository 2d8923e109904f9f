'''
Validation harnesses with synthetic or calibration data.

:func:`run_synthetic_validation`
    Simulates acquisitions of known 16-bit ground truths, runs the regular
    alignment and compares the decomposition estimates and the conventional
    difference-image estimates against the true noise levels.
:func:`run_calibration`
    Estimates noise on a scene of a flat, uniformly lit surface, for which a
    heavily blurred copy of each image is a good ground truth.
'''
import logging

from logging_helpers import _L
import numpy as np
import pandas as pd
import path_helpers as ph

from . import noise
from .alignment import align_scene, compute_reference_gamma
from .image_io import read_pnm16
from .raster import (CHANNEL_NAMES, Domain, InvalidParameterError,
                     MultiImage, scale_clamp)
from .scene import SceneBundle
from .synthetic import make_rng


logger = logging.getLogger(__name__)

CALIBRATION_ANCHOR_PERCENTILE = 50.
CALIBRATION_ANCHOR_VALUE = 128.
CHANNEL_LABELS = CHANNEL_NAMES + ('overall', )

SYNTHETIC_COLUMNS = ['gt_index', 'trial', 'image', 'method', 'channel',
                     'true_sigma', 'estimated_sigma', 'relative_error']
CALIBRATION_COLUMNS = ['image', 'method', 'channel', 'true_sigma',
                       'estimated_sigma', 'relative_error']


def _as_raw(image):
    if isinstance(image, MultiImage):
        return image
    return read_pnm16(ph.path(image))


def _rows(estimate, truth, **fields):
    '''
    One row per channel plus the pooled ``overall`` row.
    '''
    estimated = list(estimate.sigma) + [estimate.pooled_sigma]
    true = list(truth.sigma) + [truth.pooled_sigma]
    rows = []
    for channel_i, estimated_i, true_i in zip(CHANNEL_LABELS, estimated,
                                              true):
        row_i = dict(fields)
        row_i.update(channel=channel_i, true_sigma=float(true_i),
                     estimated_sigma=float(estimated_i),
                     relative_error=(float(estimated_i / true_i - 1)
                                     if true_i > 0 else np.nan))
        rows.append(row_i)
    return rows


def _add_noise(image, sigma, exposure, rng):
    noise_i = rng.standard_normal(image.planes.shape) * (sigma * exposure)
    return MultiImage(np.clip(exposure * image.planes + noise_i,
                              Domain.RAW16.low, Domain.RAW16.high),
                      Domain.RAW16)


def run_synthetic_validation(gt_images, trials=10, seed=0, sigma_clean=3.,
                             sigma_noisy=10., clean_exposure=1.,
                             noisy_exposure=0.5, **alignment_options):
    '''
    Compare noise estimates with the true noise on simulated captures.

    For each ground truth, the gain mapping its 99th percentile to 230 is
    computed.  Each trial adds Gaussian noise of ``sigma_clean / gamma``
    (twice, reference and clean) and ``sigma_noisy / gamma`` (noisy) in the
    16-bit domain, scaled by the capture exposure, then aligns the three
    captures with :func:`~lowlight_pairs.alignment.align_scene`.

    True noise levels are measured against the ground truth mapped into the
    8-bit frame of the aligned reference.

    Parameters
    ----------
    gt_images : list
        16-bit ground truths as :class:`MultiImage` or paths to P6 files.
    trials : int, optional
    seed : int, optional
    sigma_clean, sigma_noisy : float, optional
        Simulated noise levels in 8-bit intensity levels.
    clean_exposure, noisy_exposure : float, optional
        Exposure of the clean and noisy captures relative to the reference.
    **alignment_options
        Passed to :func:`~lowlight_pairs.alignment.align_scene`.

    Returns
    -------
    pandas.DataFrame
        One row per ground truth, trial, image (``clean`` or ``noisy``),
        method (``ours`` or ``standard``) and channel (``red``, ``green``,
        ``blue``, ``overall``).
    '''
    logger = _L()  # use logger with function context
    gt_images = [_as_raw(image_i) for image_i in gt_images]
    if not gt_images:
        raise InvalidParameterError('At least one ground truth is required.')
    rng = make_rng(seed)
    rows = []
    for gt_index, gt16 in enumerate(gt_images):
        gamma = compute_reference_gamma(gt16).gamma
        for trial in range(trials):
            bundle = SceneBundle([_add_noise(gt16, sigma_clean / gamma, 1.,
                                             rng)],
                                 [_add_noise(gt16, sigma_clean / gamma,
                                             clean_exposure, rng)],
                                 [_add_noise(gt16, sigma_noisy / gamma,
                                             noisy_exposure, rng)],
                                 scene_id='synthetic-%d-%d' % (gt_index,
                                                               trial))
            aligned = align_scene(bundle, **alignment_options)
            gt8 = scale_clamp(gt16, aligned.gamma.gamma, 0, 255)
            ref, clean, noisy = (aligned.reference, aligned.clean,
                                 aligned.noisy[0])
            mask = noise.saturation_mask(ref, clean, noisy, gt8)
            true_noisy = noise.sigma_direct(noisy, gt8, mask)
            # The clean-pair estimate targets the common noise level of the
            # reference and clean images.
            true_ref = noise.sigma_direct(ref, gt8, mask)
            true_clean = noise.sigma_direct(clean, gt8, mask)
            true_pair = true_clean._replace(
                sigma=np.sqrt(0.5 * (true_ref.sigma ** 2 +
                                     true_clean.sigma ** 2)),
                pooled_sigma=np.sqrt(0.5 * (true_ref.pooled_sigma ** 2 +
                                            true_clean.pooled_sigma ** 2)))
            fields = dict(gt_index=gt_index, trial=trial)
            rows += _rows(noise.sigma_clean(ref, clean, mask), true_pair,
                          image='clean', method='ours', **fields)
            rows += _rows(noise.sigma_standard(clean, ref, mask), true_pair,
                          image='clean', method='standard', **fields)
            rows += _rows(noise.sigma_noisy(noisy, ref, clean, mask),
                          true_noisy, image='noisy', method='ours', **fields)
            rows += _rows(noise.sigma_standard(noisy, ref, mask), true_noisy,
                          image='noisy', method='standard', **fields)
            logger.debug('ground truth %d, trial %d: true noisy sigma %.4f',
                         gt_index, trial, true_noisy.pooled_sigma)
    logger.info('synthetic validation: %d ground truths x %d trials',
                len(gt_images), trials)
    return pd.DataFrame(rows, columns=SYNTHETIC_COLUMNS)


def summarize_errors(df_errors):
    '''
    Mean relative error per image and method over the ``overall`` rows.

    Returns
    -------
    pandas.DataFrame
        Columns ``image, method, mean_relative_error,
        mean_abs_relative_error, count``.
    '''
    df_overall = df_errors[df_errors['channel'] == 'overall']
    grouped = df_overall.groupby(['image', 'method'])['relative_error']
    return pd.DataFrame({'mean_relative_error': grouped.mean(),
                         'mean_abs_relative_error':
                         grouped.apply(lambda x: x.abs().mean()),
                         'count': grouped.size()}).reset_index()


def run_calibration(bundle, anchor_percentile=CALIBRATION_ANCHOR_PERCENTILE,
                    anchor_value=CALIBRATION_ANCHOR_VALUE,
                    truth_blur_sigma=noise.BLUR_SIGMA, exclude_saturated=True,
                    **alignment_options):
    '''
    Compare noise estimates on a calibration scene of a flat surface.

    The scene is aligned with the median mapped to intensity 128.  The true
    noise of each aligned image is measured against its own Gaussian blur
    (``truth_blur_sigma``).  The decomposition estimates (clean pair for the
    reference and clean images, noisy vs reference for each noisy image) and
    the conventional difference-image estimates (``clean - reference`` for
    the reference and clean images, ``noisy - reference`` for the noisy
    images) are compared with it.

    Parameters
    ----------
    bundle : SceneBundle
        Raw calibration scene with at least one noisy image.

    Returns
    -------
    pandas.DataFrame
        One row per image, method and channel; ready for box plots.
    '''
    if not bundle.noisy:
        raise InvalidParameterError('Calibration scene `%s` has no noisy '
                                    'image.' % bundle.scene_id)
    aligned = align_scene(bundle, anchor_percentile=anchor_percentile,
                          anchor_value=anchor_value, **alignment_options)
    ref, clean = aligned.reference, aligned.clean
    images = aligned.images()
    mask = (noise.saturation_mask(*[image_i for _, image_i in images])
            if exclude_saturated else None)

    def _truth(image):
        return noise.sigma_blurred_reference(image, image, truth_blur_sigma,
                                             mask)

    pair = noise.sigma_clean(ref, clean, mask)
    pair_standard = noise.sigma_standard(clean, ref, mask)
    rows = []
    for label, image_i in images:
        truth_i = _truth(image_i)
        if label in ('reference', 'clean'):
            ours_i, standard_i = pair, pair_standard
        else:
            ours_i = noise.sigma_noisy(image_i, ref, clean, mask)
            standard_i = noise.sigma_standard(image_i, ref, mask)
        rows += _rows(ours_i, truth_i, image=label, method='ours')
        rows += _rows(standard_i, truth_i, image=label, method='standard')
    _L().info('calibration scene `%s`: %d images', bundle.scene_id,
              len(images))
    return pd.DataFrame(rows, columns=CALIBRATION_COLUMNS)


def calibration_summary(df_calibration):
    '''
    Average absolute relative error per method over every image and channel
    (``overall`` rows excluded).
    '''
    df_channels = df_calibration[df_calibration['channel'] != 'overall']
    return (df_channels.groupby('method')['relative_error']
            .apply(lambda x: x.abs().mean()))
