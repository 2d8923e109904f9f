'''
Denoiser evaluation on gated scenes.

Denoisers are either built in (per-channel Gaussian blur or median filter)
or external programs wrapped by a command template, e.g.::

    bm3d-denoise --sigma {sigma} {input} {output}

External programs read an 8-bit binary PPM file (``{input}``) and must write
an 8-bit binary PPM file (``{output}``) of the same size.

.. versionadded:: 0.1
'''
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
import logging
import re
import shlex
import subprocess
import tempfile
import threading

from logging_helpers import _L
from scipy.ndimage import median_filter
import numpy as np
import pandas as pd
import path_helpers as ph

from .image_io import FormatError, quantize8, read_pnm16, write_pnm8
from .metrics import compare
from .pipeline import run_pipeline
from .raster import (Domain, InvalidParameterError, MultiImage, blur_image)


logger = logging.getLogger(__name__)

KINDS = ('builtin_gaussian', 'builtin_median', 'external')
DEFAULT_TIMEOUT = 600.
SIGMA_GRID = (5., 10., 15., 20., 25., 50.)
#: Noise level per pixel of spatial spread for the built-in denoisers.
SIGMA_PER_PIXEL = 10.
#: Placeholders substituted in external command templates; other braces are
#: passed to the shell unchanged.
PLACEHOLDER = re.compile(r'\{(input|output|sigma)\}')

EVALUATION_COLUMNS = ['scene_id', 'camera_tag', 'image', 'denoiser',
                      'sigma_param', 'psnr_before', 'psnr_after',
                      'ssim_before', 'ssim_after', 'status', 'error']
METRIC_COLUMNS = ['psnr_before', 'psnr_after', 'ssim_before', 'ssim_after']


class DenoiserError(Exception):
    pass


class DenoiserSpec(object):
    '''
    Parameters
    ----------
    name : str
    kind : str
        ``'builtin_gaussian'``, ``'builtin_median'`` or ``'external'``.
    command : str, optional
        Command template of an external denoiser with ``{input}``,
        ``{output}`` and (optionally) ``{sigma}`` placeholders.
    timeout : float, optional
        Wall-clock limit of one external invocation, in seconds.
    reentrant : bool, optional
        If ``False``, invocations of this denoiser are serialized.
    '''
    def __init__(self, name, kind, command=None, timeout=DEFAULT_TIMEOUT,
                 reentrant=True):
        if kind not in KINDS:
            raise InvalidParameterError('Unknown denoiser kind `%s`.' % kind)
        if kind == 'external':
            if not command or not all(('{%s}' % k) in command
                                      for k in ('input', 'output')):
                raise InvalidParameterError('External denoiser `%s` needs a '
                                            'command template with {input} '
                                            'and {output}.' % name)
        if not timeout > 0:
            raise InvalidParameterError('Timeout must be positive.')
        self.name = name
        self.kind = kind
        self.command = command
        self.timeout = timeout
        self.reentrant = reentrant
        self.lock = threading.Lock()

    def __repr__(self):
        return '<DenoiserSpec %s (%s)>' % (self.name, self.kind)

    @classmethod
    def from_dict(cls, spec_dict, timeout=DEFAULT_TIMEOUT):
        return cls(spec_dict['name'], spec_dict['kind'],
                   spec_dict.get('command'),
                   spec_dict.get('timeout', timeout),
                   spec_dict.get('reentrant', True))

    def to_dict(self):
        spec_dict = OrderedDict([('name', self.name), ('kind', self.kind)])
        if self.command is not None:
            spec_dict['command'] = self.command
        spec_dict['timeout'] = self.timeout
        spec_dict['reentrant'] = self.reentrant
        return spec_dict


def default_denoisers(timeout=DEFAULT_TIMEOUT):
    return [DenoiserSpec('gaussian', 'builtin_gaussian', timeout=timeout),
            DenoiserSpec('median', 'builtin_median', timeout=timeout)]


def expand_command(template, **values):
    '''
    Substitute the ``{input}``, ``{output}`` and ``{sigma}`` placeholders of an
    external command template.

    Other braces, e.g., ``awk '{print}'`` or ``${HOME}``, are kept verbatim.
    '''
    return PLACEHOLDER.sub(lambda match: str(values[match.group(1)]),
                           template)


def _run_external(spec, image, sigma):
    logger = _L()  # use logger with function context
    with tempfile.TemporaryDirectory(prefix='lowlight-denoise-') as tmp:
        tmp = ph.path(tmp)
        input_path = write_pnm8(image, tmp.joinpath('input.ppm'))
        output_path = tmp.joinpath('output.ppm')
        command = expand_command(spec.command,
                                 input=shlex.quote(str(input_path)),
                                 output=shlex.quote(str(output_path)),
                                 sigma=sigma)
        logger.debug('running `%s`', command)
        try:
            process = subprocess.run(command, shell=True,
                                     stdin=subprocess.DEVNULL,
                                     stdout=subprocess.PIPE,
                                     stderr=subprocess.PIPE,
                                     timeout=spec.timeout)
        except subprocess.TimeoutExpired:
            raise DenoiserError('`%s` timed out after %g s.' %
                                (spec.name, spec.timeout))
        except OSError as exception:
            raise DenoiserError('`%s` could not be started: %s' %
                                (spec.name, exception))
        if process.returncode != 0:
            stderr = process.stderr.decode('utf8', 'replace').strip()
            raise DenoiserError('`%s` exited with status %d: %s' %
                                (spec.name, process.returncode,
                                 stderr[-500:]))
        try:
            denoised = read_pnm16(output_path)
        except (IOError, OSError, FormatError) as exception:
            raise DenoiserError('`%s` output is unreadable: %s' %
                                (spec.name, exception))
    if denoised.domain != Domain.ALIGNED8 or denoised.shape != image.shape:
        raise DenoiserError('`%s` output must be an 8-bit %dx%d image.' %
                            (spec.name, image.width, image.height))
    return denoised


def denoise(spec, image, sigma):
    '''
    Denoise an 8-bit image.

    Parameters
    ----------
    spec : DenoiserSpec
    image : MultiImage
        Integer-valued 8-bit image.
    sigma : float
        Noise level parameter.  The built-in Gaussian blurs with a spatial
        sigma of ``sigma / 10`` pixels; the built-in median filter uses a
        square window of side ``2 * round(sigma / 10) + 1``.

    Returns
    -------
    MultiImage
        Integer-valued 8-bit image.

    Raises
    ------
    DenoiserError
        If an external command fails, times out or writes an unreadable
        output.
    '''
    if not sigma > 0:
        raise InvalidParameterError('Denoiser sigma must be positive, got %r.'
                                    % sigma)
    if spec.kind == 'builtin_gaussian':
        return quantize8(blur_image(image, sigma / SIGMA_PER_PIXEL))
    elif spec.kind == 'builtin_median':
        size = 2 * int(round(sigma / SIGMA_PER_PIXEL)) + 1
        return MultiImage([median_filter(plane_i, size=size, mode='nearest')
                           for plane_i in image.planes], image.domain)
    if spec.reentrant:
        return _run_external(spec, image, sigma)
    with spec.lock:
        return _run_external(spec, image, sigma)


class EvaluationReport(object):
    '''
    Denoising results, one row per scene, noisy image, denoiser and sigma.

    Failed invocations are kept as rows with ``status == 'failed'`` and no
    metrics.
    '''
    def __init__(self, rows, errors=None):
        df_rows = pd.DataFrame(rows, columns=EVALUATION_COLUMNS)
        self.rows = (df_rows.sort_values(['scene_id', 'image', 'denoiser',
                                          'sigma_param'], kind='mergesort')
                     .reset_index(drop=True))
        self.errors = OrderedDict(sorted((errors or {}).items()))

    def __repr__(self):
        return '<EvaluationReport %d rows>' % len(self.rows)

    @property
    def succeeded(self):
        return self.rows[self.rows['status'] == 'ok']

    def best_per_scene(self):
        '''
        Row with the highest ``psnr_after`` per scene, noisy image and
        denoiser.
        '''
        df_ok = self.succeeded
        if df_ok.empty:
            return df_ok.copy()
        index = df_ok.groupby(['scene_id', 'image',
                               'denoiser'])['psnr_after'].idxmax()
        return df_ok.loc[index.values].reset_index(drop=True)

    def camera_means(self):
        '''
        Mean metrics per camera, denoiser and sigma.
        '''
        return (self.succeeded
                .groupby(['camera_tag', 'denoiser', 'sigma_param'])
                [METRIC_COLUMNS].mean().reset_index())

    def best_per_camera(self):
        '''
        Sigma with the highest mean ``psnr_after`` per camera and denoiser.
        '''
        df_means = self.camera_means()
        if df_means.empty:
            return df_means
        index = df_means.groupby(['camera_tag',
                                  'denoiser'])['psnr_after'].idxmax()
        return df_means.loc[index.values].reset_index(drop=True)

    def best_global(self):
        '''
        Sigma with the highest mean ``psnr_after`` per denoiser over every
        scene.
        '''
        df_means = (self.succeeded.groupby(['denoiser', 'sigma_param'])
                    [METRIC_COLUMNS].mean().reset_index())
        if df_means.empty:
            return df_means
        index = df_means.groupby('denoiser')['psnr_after'].idxmax()
        return df_means.loc[index.values].reset_index(drop=True)


def _evaluate_scene(result, denoisers, sigma_grid):
    aligned = result.aligned
    ref, clean = quantize8(aligned.reference), quantize8(aligned.clean)
    gt_average = MultiImage.average([ref, clean])
    rows = []
    for i, noisy_i in enumerate(aligned.noisy):
        label = 'noisy_%d' % i
        noisy_i = quantize8(noisy_i)
        before = compare(noisy_i, gt_average, 'gt_average')
        for spec in denoisers:
            for sigma in sigma_grid:
                row = OrderedDict([('scene_id', result.scene_id),
                                   ('camera_tag', result.camera_tag),
                                   ('image', label), ('denoiser', spec.name),
                                   ('sigma_param', float(sigma)),
                                   ('psnr_before', before.psnr_db),
                                   ('ssim_before', before.ssim)])
                try:
                    after = compare(denoise(spec, noisy_i, sigma), gt_average,
                                    'gt_average')
                except DenoiserError as exception:
                    _L().warning('scene `%s`, image `%s`: %s',
                                 result.scene_id, label, exception)
                    row.update(psnr_after=np.nan, ssim_after=np.nan,
                               status='failed', error=str(exception))
                else:
                    row.update(psnr_after=after.psnr_db,
                               ssim_after=after.ssim, status='ok', error='')
                rows.append(row)
    return rows


def run_denoise_eval(scenes, denoisers=None, sigma_grid=SIGMA_GRID,
                     config=None, workers=None, signals=None):
    '''
    Evaluate denoisers on the noisy images of gated scenes.

    Each noisy image is denoised for every sigma of the grid and compared
    (PSNR and SSIM) with the best ground-truth estimate, the average of the
    8-bit reference and clean images.  Images are quantized to 8-bit
    integers first, as they are distributed.  Scenes failing the quality
    gate are skipped.

    Parameters
    ----------
    scenes : list
        :class:`SceneManifest` or :class:`SceneBundle` items.
    denoisers : list of DenoiserSpec, optional
        Defaults to the built-in Gaussian and median denoisers.
    sigma_grid : list of float, optional

    Returns
    -------
    EvaluationReport
    '''
    logger = _L()  # use logger with function context
    if denoisers is None:
        denoisers = default_denoisers()
    report = run_pipeline(scenes, config=config, workers=workers,
                          signals=signals, stage='gate', keep_images=True)
    for scene_id in report.failed_gate:
        logger.info('skipping scene `%s`: failed the quality gate', scene_id)
    gated = [s for s in report.scenes if s.gate.passed]
    with ThreadPoolExecutor(max_workers=max(workers or 1, 1)) as executor:
        scene_rows = list(executor.map(lambda s: _evaluate_scene(s, denoisers,
                                                                 sigma_grid),
                                       gated))
    rows = [row for rows_i in scene_rows for row in rows_i]
    errors = OrderedDict((scene_id, error['message'])
                         for scene_id, error in report.errors.items())
    return EvaluationReport(rows, errors)
