'''
Batch processing of scene manifests.

Each scene is aligned, gated on its clean-pair PSNR and, depending on the
requested stage, its noisy images are measured.  Scenes are independent:
an error in one scene is recorded in the report and never aborts the batch.

Signals
-------
Progress is published through a :class:`blinker.Namespace`:

scene-started
    Parameters: ``i`` (scene index), ``scene_id``, ``scenes_count``.
scene-completed
    Parameters: ``i``, ``scene_id``, ``scenes_count``, ``result``.
scene-failed
    Parameters: ``i``, ``scene_id``, ``scenes_count``, ``error``.
'''
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
import logging

from logging_helpers import _L
import blinker
import numpy as np
import pandas as pd
import path_helpers as ph

from . import noise
from .alignment import align_scene, intensity_histograms
from .config import Config
from .image_io import write_bmp8, write_pnm8
from .metrics import psnr_from_sigma
from .raster import CHANNEL_NAMES, InsufficientSupportError
from .scene import SceneBundle


logger = logging.getLogger(__name__)

STAGES = ('align', 'gate', 'estimate', 'curve')
CHANNEL_LABELS = CHANNEL_NAMES + ('overall', )
NOISY_METHODS = ('noisy_vs_ref', 'noisy_vs_avg', 'standard')

ESTIMATE_COLUMNS = ['scene_id', 'camera_tag', 'image', 'method', 'channel',
                    'sigma', 'psnr_db', 'support', 'negative_radicand',
                    'gate_passed']
GATE_COLUMNS = ['scene_id', 'camera_tag', 'clean_pair_sigma',
                'clean_pair_psnr', 'threshold', 'passed']
ALIGNMENT_COLUMNS = ['scene_id', 'camera_tag', 'image', 'channel', 'gain',
                     'objective_value', 'mask_size', 'iterations',
                     'converged', 'drift_bins']
AGGREGATE_COLUMNS = ['camera_tag', 'n_scenes', 'n_noisy_images', 'n_pixels',
                     'mean_clean_sigma', 'mean_clean_psnr',
                     'mean_noisy_sigma', 'mean_noisy_psnr', 'aggregation']
CURVE_COLUMNS = ['scene_id', 'camera_tag', 'image', 'method', 'channel',
                 'intensity_center', 'sigma', 'variance', 'support',
                 'model_a', 'model_b']


class SceneResult(object):
    '''
    Outcome of :func:`process_scene`.

    Attributes
    ----------
    alignment : OrderedDict
        :meth:`AlignedScene.to_dict` summary.
    diagnostics : OrderedDict
        :class:`AlignmentDiagnostics` per aligned image.
    gate : GateVerdict or None
    clean_estimate : NoiseEstimate or None
        Clean-pair estimate.
    noisy_estimates : OrderedDict
        Per noisy image label, an ``OrderedDict`` of :class:`NoiseEstimate`
        keyed by method.
    curves : OrderedDict
        Per noisy image label, a :class:`NoiseCurve` (``model_fit`` set when
        the affine fit succeeded).
    histograms : pandas.DataFrame
        256-bin per-channel histograms of every aligned image.
    aligned : AlignedScene or None
        Only kept when requested.
    files : list
        Written image paths, relative to the output directory.
    '''
    def __init__(self, scene_id, camera_tag, pixel_count):
        self.scene_id = scene_id
        self.camera_tag = camera_tag
        self.pixel_count = pixel_count
        self.alignment = OrderedDict()
        self.diagnostics = OrderedDict()
        self.gate = None
        self.clean_estimate = None
        self.noisy_estimates = OrderedDict()
        self.curves = OrderedDict()
        self.histograms = None
        self.aligned = None
        self.files = []
        self.support = None

    def __repr__(self):
        return '<SceneResult %s gate=%s>' % (self.scene_id,
                                             None if self.gate is None
                                             else self.gate.passed)

    def to_dict(self):
        scene_dict = OrderedDict([('scene_id', self.scene_id),
                                  ('camera_tag', self.camera_tag),
                                  ('pixel_count', self.pixel_count),
                                  ('support', self.support),
                                  ('alignment', self.alignment)])
        if self.gate is not None:
            scene_dict['gate'] = OrderedDict(
                [('clean_pair_psnr', self.gate.clean_pair_psnr),
                 ('threshold', self.gate.threshold),
                 ('passed', bool(self.gate.passed))])
        if self.clean_estimate is not None:
            scene_dict['clean'] = _estimate_dict(self.clean_estimate)
        if self.noisy_estimates:
            scene_dict['noisy'] = OrderedDict(
                (label, OrderedDict((method, _estimate_dict(estimate))
                                    for method, estimate
                                    in estimates.items()))
                for label, estimates in self.noisy_estimates.items())
        if self.curves:
            scene_dict['noise_model'] = OrderedDict(
                (label, None if curve.model_fit is None else
                 OrderedDict([('a', curve.model_fit.a),
                              ('b', curve.model_fit.b)]))
                for label, curve in self.curves.items())
        scene_dict['files'] = list(self.files)
        return scene_dict


def _estimate_dict(estimate):
    return OrderedDict([('method', estimate.method),
                        ('sigma', [float(s) for s in estimate.sigma]),
                        ('pooled_sigma', estimate.pooled_sigma),
                        ('psnr_db', psnr_from_sigma(estimate.pooled_sigma)),
                        ('support', int(estimate.support)),
                        ('negative_radicand', estimate.negative_radicand)])


def _estimate_rows(estimate, **fields):
    sigmas = list(estimate.sigma) + [estimate.pooled_sigma]
    rows = []
    for channel_i, sigma_i in zip(CHANNEL_LABELS, sigmas):
        row_i = OrderedDict(fields)
        row_i.update(method=estimate.method, channel=channel_i,
                     sigma=float(sigma_i), psnr_db=psnr_from_sigma(sigma_i),
                     support=int(estimate.support),
                     negative_radicand=estimate.negative_radicand)
        rows.append(row_i)
    return rows


def _write_images(aligned, out_dir, write_bmp=True, write_pnm=True):
    out_dir = ph.path(out_dir).abspath()
    scene_dir = out_dir.joinpath(aligned.scene_id)
    files = []
    for label, image_i in aligned.images():
        if write_bmp:
            files.append(write_bmp8(image_i, scene_dir.joinpath(label +
                                                                '.bmp')))
        if write_pnm:
            files.append(write_pnm8(image_i, scene_dir.joinpath(label +
                                                                '.ppm')))
    return [str(out_dir.relpathto(f)).replace('\\', '/') for f in files]


def process_scene(scene, config=None, out_dir=None, stage='estimate',
                  keep_images=False):
    '''
    Align, gate and measure one scene.

    Parameters
    ----------
    scene : SceneManifest or SceneBundle
    config : Config, optional
    out_dir : str, optional
        If set, aligned 8-bit images are written to ``<out_dir>/<scene_id>/``.
    stage : str, optional
        ``'align'`` (alignment only), ``'gate'`` (plus quality gate),
        ``'estimate'`` (plus noise estimates of the noisy images) or
        ``'curve'`` (plus noise curves).
    keep_images : bool, optional
        Keep the :class:`AlignedScene` in the result.

    Returns
    -------
    SceneResult
    '''
    logger = _L()  # use logger with function context
    if stage not in STAGES:
        raise ValueError('Unknown stage `%s`.' % stage)
    config = config or Config()
    options = config.alignment_options()
    if isinstance(scene, SceneBundle):
        bundle = scene
    else:
        bundle = scene.load_bundle()
        overrides = dict(scene.alignment)
        if 'joint_alpha' in overrides:
            overrides['joint'] = overrides.pop('joint_alpha')
        options.update(overrides)

    aligned = align_scene(bundle, **options)
    result = SceneResult(aligned.scene_id, aligned.camera_tag,
                         aligned.reference.size)
    result.alignment = aligned.to_dict()
    result.diagnostics = aligned.diagnostics
    result.histograms = intensity_histograms(aligned.images())
    if keep_images:
        result.aligned = aligned
    if out_dir is not None:
        result.files = _write_images(aligned, out_dir,
                                     config['pipeline']['write_bmp'],
                                     config['pipeline']['write_pnm'])
    if stage == 'align':
        return result

    ref, clean = aligned.reference, aligned.clean
    if config['noise']['exclude_saturated']:
        mask = noise.saturation_mask(*[image_i
                                       for _, image_i in aligned.images()])
    else:
        mask = None
    result.support = int(mask.sum()) if mask is not None else ref.size
    result.clean_estimate = noise.sigma_clean(ref, clean, mask)
    result.gate = noise.gate_from_sigma(result.clean_estimate.pooled_sigma,
                                        config['gate']['threshold_db'])
    logger.info('scene `%s`: clean-pair PSNR %.2f dB (%s)', result.scene_id,
                result.gate.clean_pair_psnr,
                'pass' if result.gate.passed else 'fail')
    if stage == 'gate':
        return result

    for i, noisy_i in enumerate(aligned.noisy):
        label = 'noisy_%d' % i
        result.noisy_estimates[label] = OrderedDict([
            ('noisy_vs_ref', noise.sigma_noisy(noisy_i, ref, clean, mask)),
            ('noisy_vs_avg', noise.sigma_noisy_avg(noisy_i, ref, clean,
                                                   mask)),
            ('standard', noise.sigma_standard(noisy_i, ref, mask))])
        if stage == 'curve':
            try:
                curve = noise.noise_curve(noisy_i, ref, clean, mask=mask,
                                          **config.curve_options())
            except InsufficientSupportError as exception:
                logger.warning('scene `%s`, image `%s`: no noise curve: %s',
                               result.scene_id, label, exception)
                continue
            try:
                curve = curve._replace(model_fit=noise
                                       .fit_affine_noise_model(curve))
            except InsufficientSupportError as exception:
                logger.warning('scene `%s`, image `%s`: no affine fit: %s',
                               result.scene_id, label, exception)
            result.curves[label] = curve
    return result


class NoiseReport(object):
    '''
    Results of a batch, sorted by scene id.

    Attributes
    ----------
    scenes : list of SceneResult
    errors : OrderedDict
        Error description per failed scene id.
    threshold_db : float
    stage : str
    '''
    def __init__(self, scenes, errors, threshold_db, stage='estimate'):
        self.scenes = sorted(scenes, key=lambda s: s.scene_id)
        self.errors = OrderedDict(sorted(errors.items()))
        self.threshold_db = threshold_db
        self.stage = stage

    def __repr__(self):
        return ('<NoiseReport %d scenes, %d errors>' %
                (len(self.scenes), len(self.errors)))

    @property
    def passed(self):
        return [s.scene_id for s in self.scenes
                if s.gate is not None and s.gate.passed]

    @property
    def failed_gate(self):
        return [s.scene_id for s in self.scenes
                if s.gate is not None and not s.gate.passed]

    def estimates_frame(self):
        '''
        One row per scene, image, method and channel (``red``, ``green``,
        ``blue`` and ``overall``).
        '''
        rows = []
        for scene_i in self.scenes:
            if scene_i.clean_estimate is None:
                continue
            fields = OrderedDict([('scene_id', scene_i.scene_id),
                                  ('camera_tag', scene_i.camera_tag)])
            passed = bool(scene_i.gate.passed)
            rows += _estimate_rows(scene_i.clean_estimate, image='clean',
                                   gate_passed=passed, **fields)
            for label, estimates in scene_i.noisy_estimates.items():
                for estimate in estimates.values():
                    rows += _estimate_rows(estimate, image=label,
                                           gate_passed=passed, **fields)
        return pd.DataFrame(rows, columns=ESTIMATE_COLUMNS)

    def gate_frame(self):
        return pd.DataFrame([[s.scene_id, s.camera_tag, s.gate.sigma,
                              s.gate.clean_pair_psnr, s.gate.threshold,
                              bool(s.gate.passed)]
                             for s in self.scenes if s.gate is not None],
                            columns=GATE_COLUMNS)

    def alignment_frame(self):
        rows = []
        for scene_i in self.scenes:
            for label, image_dict in scene_i.alignment['images'].items():
                channels = (CHANNEL_NAMES if len(image_dict['alpha']) == 3
                            else ('joint', ))
                for j, channel_j in enumerate(channels):
                    rows.append([scene_i.scene_id, scene_i.camera_tag, label,
                                 channel_j, image_dict['alpha'][j],
                                 image_dict['objective_value'][j],
                                 image_dict['mask_size'][j],
                                 image_dict['iterations'][j],
                                 image_dict['converged'],
                                 image_dict['drift_bins']])
        return pd.DataFrame(rows, columns=ALIGNMENT_COLUMNS)

    def curves_frame(self):
        rows = []
        for scene_i in self.scenes:
            for label, curve in scene_i.curves.items():
                model = curve.model_fit
                for bin_i in curve.bins.itertuples(index=False):
                    rows.append([scene_i.scene_id, scene_i.camera_tag, label,
                                 curve.method, curve.channel,
                                 bin_i.intensity_center, bin_i.sigma,
                                 bin_i.variance, int(bin_i.support),
                                 np.nan if model is None else model.a,
                                 np.nan if model is None else model.b])
        return pd.DataFrame(rows, columns=CURVE_COLUMNS)

    def histograms_frame(self):
        frames = []
        for scene_i in self.scenes:
            if scene_i.histograms is not None:
                df_i = scene_i.histograms.copy()
                df_i.insert(0, 'scene_id', scene_i.scene_id)
                frames.append(df_i)
        if not frames:
            return pd.DataFrame(columns=['scene_id', 'image', 'channel',
                                         'intensity', 'count'])
        return pd.concat(frames, ignore_index=True)

    def aggregates(self):
        '''
        Per-camera statistics over the scenes that passed the quality gate.

        Means are arithmetic means of the per-scene (clean pair) and
        per-image (noisy) pooled values; the ``aggregation`` column says so.
        '''
        rows = []
        passed = [s for s in self.scenes
                  if s.gate is not None and s.gate.passed]
        for camera_tag in sorted(set(s.camera_tag for s in passed)):
            scenes = [s for s in passed if s.camera_tag == camera_tag]
            clean = [s.clean_estimate.pooled_sigma for s in scenes]
            noisy = [estimates['noisy_vs_ref'].pooled_sigma
                     for s in scenes
                     for estimates in s.noisy_estimates.values()]
            rows.append([camera_tag, len(scenes), len(noisy),
                         sum(s.pixel_count for s in scenes),
                         float(np.mean(clean)),
                         float(np.mean([psnr_from_sigma(s) for s in clean])),
                         float(np.mean(noisy)) if noisy else np.nan,
                         (float(np.mean([psnr_from_sigma(s) for s in noisy]))
                          if noisy else np.nan),
                         'arithmetic mean of per-scene values'])
        return pd.DataFrame(rows, columns=AGGREGATE_COLUMNS)

    def to_dict(self):
        return OrderedDict([
            ('stage', self.stage),
            ('threshold_db', self.threshold_db),
            ('scenes', [s.to_dict() for s in self.scenes]),
            ('passed', self.passed),
            ('failed_gate', self.failed_gate),
            ('errors', self.errors),
            ('aggregates', self.aggregates().to_dict(orient='records'))])


def run_pipeline(scenes, config=None, out_dir=None, workers=None,
                 signals=None, stage='estimate', keep_images=False):
    '''
    Process a batch of scenes.

    Parameters
    ----------
    scenes : list
        :class:`SceneManifest` or :class:`SceneBundle` items.
    config : Config, optional
    out_dir : str, optional
        Directory for the aligned 8-bit images.
    workers : int, optional
        Scenes processed concurrently (default from the configuration).
    signals : blinker.Namespace, optional
        Signals namespace where progress signals are sent through.
    stage : str, optional
        See :func:`process_scene`.

    Returns
    -------
    NoiseReport
    '''
    logger = _L()  # use logger with function context
    if signals is None:
        signals = blinker.Namespace()
    config = config or Config()
    workers = workers or config['pipeline']['workers']
    scenes = sorted(scenes, key=lambda s: s.scene_id)
    scenes_count = len(scenes)

    def _process(i, scene):
        signals.signal('scene-started').send('run_pipeline', i=i,
                                             scene_id=scene.scene_id,
                                             scenes_count=scenes_count)
        try:
            result = process_scene(scene, config, out_dir, stage,
                                   keep_images)
        except Exception as exception:
            logger.error('scene `%s` failed: %s', scene.scene_id, exception,
                         exc_info=True)
            signals.signal('scene-failed').send('run_pipeline', i=i,
                                                scene_id=scene.scene_id,
                                                scenes_count=scenes_count,
                                                error=exception)
            return scene.scene_id, None, exception
        signals.signal('scene-completed').send('run_pipeline', i=i,
                                               scene_id=scene.scene_id,
                                               scenes_count=scenes_count,
                                               result=result)
        return scene.scene_id, result, None

    with ThreadPoolExecutor(max_workers=max(workers, 1)) as executor:
        outcomes = list(executor.map(_process, range(scenes_count), scenes))

    results = [result for _, result, _ in outcomes if result is not None]
    errors = OrderedDict(
        (scene_id, OrderedDict([('type', type(exception).__name__),
                                ('message', str(exception)),
                                ('image', getattr(exception, 'image',
                                                  None))]))
        for scene_id, _, exception in outcomes if exception is not None)
    report = NoiseReport(results, errors, config['gate']['threshold_db'],
                         stage)
    logger.info('processed %d scenes: %d passed, %d failed gate, %d errors',
                scenes_count, len(report.passed), len(report.failed_gate),
                len(report.errors))
    return report
