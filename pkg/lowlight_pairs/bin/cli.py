'''
Command-line interface: ``lowlight-pairs <command> [options]``.

Commands
--------
align
    Align every scene of a manifest and write the 8-bit images.
gate
    Align and certify scenes from the PSNR of their clean pair.
estimate
    Align, gate and measure the noise of every noisy image.
curve
    As ``estimate``, plus per-intensity noise curves and affine fits.
synth-validate
    Compare estimates with the true noise on simulated captures.
calibrate
    Compare estimates on calibration scenes of flat surfaces.
eval
    Evaluate denoisers on gated scenes.
plot-data
    Derive plotting tables from the reports in the output directory.

The process exits with status 1 if any scene failed.
'''
from argparse import ArgumentParser
from collections import OrderedDict
import logging
import sys

import blinker
import pandas as pd
import path_helpers as ph

from .. import LOWLIGHT_PARSER
from ..config import Config
from ..denoise import DenoiserSpec, default_denoisers, run_denoise_eval
from ..harness import (calibration_summary, run_calibration,
                       run_synthetic_validation, summarize_errors)
from ..manifest import load_manifest
from ..pipeline import run_pipeline
from ..raster import InvalidParameterError
from ..reports import (emit_plot_data, read_csv, write_csv,
                       write_evaluation_report, write_noise_report)
from ..synthetic import make_rng, textured_image


logger = logging.getLogger(__name__)

PIPELINE_COMMANDS = ('align', 'gate', 'estimate', 'curve')
#: Report tables read by the ``plot-data`` command.
PLOT_INPUTS = OrderedDict([('estimates', 'estimates.csv'),
                           ('curves', 'curves.csv'),
                           ('synthetic', 'synthetic_errors.csv'),
                           ('calibration', 'calibration.csv'),
                           ('histograms', 'histograms.csv')])


def _float_list(value):
    '''
    Parse a comma-separated list, e.g., ``'5,10,25'``.
    '''
    return [float(x) for x in value.split(',') if x.strip()]


def _size(value):
    height, width = value.lower().split('x')
    return int(height), int(width)


def _cli_parser():
    common = ArgumentParser(add_help=False)
    common.add_argument('--manifest', type=ph.path,
                        help='JSON scene manifest.')
    common.add_argument('--out', type=ph.path, default=ph.path('.'),
                        help='Output directory (default: %(default)s).')
    common.add_argument('--seed', type=int, help='Random seed.')
    common.add_argument('--workers', type=int,
                        help='Scenes processed concurrently.')
    common.add_argument('--sigma-grid', type=_float_list,
                        help='Comma-separated denoiser noise levels.')
    common.add_argument('--threshold-db', type=float,
                        help='Quality gate threshold on the clean-pair PSNR.')

    parser = ArgumentParser(parents=[LOWLIGHT_PARSER], add_help=False)
    subparsers = parser.add_subparsers(dest='command', help='commands')
    subparsers.required = True

    for command in PIPELINE_COMMANDS:
        subparser = subparsers.add_parser(command, parents=[common],
                                          help=_HELP[command])
        subparser.add_argument('--no-images', action='store_true',
                               help='Do not write the aligned images.')

    synth = subparsers.add_parser('synth-validate', parents=[common],
                                  help=_HELP['synth-validate'])
    synth.add_argument('--gt', type=ph.path, nargs='*', default=[],
                       help='16-bit P6 ground truths (generated if omitted).')
    synth.add_argument('--trials', type=int, default=10)
    synth.add_argument('--count', type=int, default=3,
                       help='Number of generated ground truths.')
    synth.add_argument('--size', type=_size, default=(1024, 1024),
                       metavar='HxW', help='Size of generated ground truths.')

    for command in ('calibrate', 'eval', 'plot-data'):
        subparsers.add_parser(command, parents=[common], help=_HELP[command])
    return parser


_HELP = {'align': 'Align scenes and write 8-bit images.',
         'gate': 'Certify scenes from their clean-pair PSNR.',
         'estimate': 'Estimate the noise of every noisy image.',
         'curve': 'Estimate per-intensity noise curves.',
         'synth-validate': 'Validate estimators on simulated captures.',
         'calibrate': 'Validate estimators on calibration scenes.',
         'eval': 'Evaluate denoisers.',
         'plot-data': 'Write plotting tables from existing reports.'}


def parse_args(args=None):
    """Parses arguments, returns ``argparse.Namespace``."""
    if args is None:
        args = sys.argv[1:]

    parser = ArgumentParser(parents=[_cli_parser()],
                            description='Low-light image pair toolkit.')
    return parser.parse_args(args)


def _load_config(args):
    config = Config(args.config)
    if args.seed is not None:
        config['pipeline']['seed'] = args.seed
    if args.workers is not None:
        config['pipeline']['workers'] = args.workers
    if args.threshold_db is not None:
        config['gate']['threshold_db'] = args.threshold_db
    if args.sigma_grid:
        config['denoise']['sigma_grid'] = args.sigma_grid
    return config


def _signals():
    signals = blinker.Namespace()

    def _on_started(sender, i=None, scene_id=None, scenes_count=None,
                    **kwargs):
        logger.info('[%d/%d] scene `%s`', i + 1, scenes_count, scene_id)

    def _on_failed(sender, scene_id=None, error=None, **kwargs):
        logger.error('scene `%s` failed: %s', scene_id, error)

    signals.signal('scene-started').connect(_on_started, weak=False)
    signals.signal('scene-failed').connect(_on_failed, weak=False)
    return signals


def _require_manifest(args):
    if args.manifest is None:
        raise SystemExit('error: `%s` requires --manifest' % args.command)
    return load_manifest(args.manifest)


def _pipeline(args, config):
    manifest = _require_manifest(args)
    report = run_pipeline(manifest.scenes, config,
                          out_dir=None if args.no_images else args.out,
                          workers=config['pipeline']['workers'],
                          signals=_signals(), stage=args.command)
    write_noise_report(report, args.out)
    return 1 if report.errors else 0


def _synth_validate(args, config):
    seed = config['pipeline']['seed']
    if args.gt:
        gt_images = list(args.gt)
    else:
        rng = make_rng(seed)
        height, width = args.size
        gt_images = [textured_image(height, width, rng)
                     for i in range(args.count)]
    df_errors = run_synthetic_validation(gt_images, trials=args.trials,
                                         seed=seed + 1,
                                         **config.alignment_options())
    write_csv(df_errors, args.out.joinpath('synthetic_errors.csv'))
    write_csv(summarize_errors(df_errors),
              args.out.joinpath('synthetic_summary.csv'))
    return 0


def _calibrate(args, config):
    manifest = _require_manifest(args)
    section = config['calibration']
    options = config.alignment_options()
    options.update(anchor_percentile=section['anchor_percentile'],
                   anchor_value=section['anchor_value'])
    frames = []
    status = 0
    for scene_i in sorted(manifest.scenes, key=lambda s: s.scene_id):
        try:
            df_i = run_calibration(scene_i.load_bundle(),
                                   truth_blur_sigma=section['blur_sigma'],
                                   exclude_saturated=config['noise']
                                   ['exclude_saturated'], **options)
        except Exception as exception:
            logger.error('scene `%s` failed: %s', scene_i.scene_id,
                         exception, exc_info=True)
            status = 1
            continue
        df_i.insert(0, 'scene_id', scene_i.scene_id)
        frames.append(df_i)
    if frames:
        df_calibration = pd.concat(frames, ignore_index=True)
        write_csv(df_calibration, args.out.joinpath('calibration.csv'))
        summary = calibration_summary(df_calibration).reset_index()
        summary.columns = ['method', 'mean_abs_relative_error']
        write_csv(summary, args.out.joinpath('calibration_summary.csv'))
    return status


def _eval(args, config):
    manifest = _require_manifest(args)
    timeout = config['denoise']['timeout']
    if manifest.denoisers:
        try:
            denoisers = [DenoiserSpec.from_dict(d, timeout=timeout)
                         for d in manifest.denoisers]
        except InvalidParameterError as exception:
            raise SystemExit('error: invalid denoiser in `%s`: %s' %
                             (args.manifest, exception))
    else:
        denoisers = default_denoisers(timeout)
    report = run_denoise_eval(manifest.scenes, denoisers,
                              config['denoise']['sigma_grid'], config,
                              workers=config['pipeline']['workers'],
                              signals=_signals())
    write_evaluation_report(report, args.out)
    return 1 if report.errors else 0


def _plot_data(args, config):
    frames = OrderedDict()
    for name, filename in PLOT_INPUTS.items():
        filepath = args.out.joinpath(filename)
        if filepath.isfile():
            frames[name] = read_csv(filepath)
    if not frames:
        logger.warning('no reports found in `%s`', args.out)
    emit_plot_data(args.out.joinpath('plots'), **frames)
    return 0


def main(args=None):
    '''
    Run a command.

    Parameters
    ----------
    args : list, optional
        Command-line arguments (default: ``sys.argv[1:]``).

    Returns
    -------
    int
        Exit status: 1 if any scene failed, 0 otherwise.
    '''
    args = parse_args(args)
    logging.basicConfig(format='%(asctime)s.%(msecs)03d '
                        '[%(levelname)s:%(name)s]: %(message)s',
                        datefmt=r'%Y-%m-%d %H:%M:%S',
                        level=getattr(logging, args.log_level.upper()))
    config = _load_config(args)
    args.out = args.out.abspath()

    if args.command in PIPELINE_COMMANDS:
        return _pipeline(args, config)
    return {'synth-validate': _synth_validate,
            'calibrate': _calibrate,
            'eval': _eval,
            'plot-data': _plot_data}[args.command](args, config)


if __name__ == '__main__':
    sys.exit(main())
