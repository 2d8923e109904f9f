'''
JSON and CSV report emission.

JSON reports carry a ``schema_version`` field.  CSV files have a header row,
are UTF-8 encoded and use LF line endings.  Identical inputs produce
byte-identical files.
'''
from collections import OrderedDict
import json
import logging
import math

from logging_helpers import _L
import numpy as np
import pandas as pd
import path_helpers as ph


logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
BOXPLOT_COLUMNS = ['min', 'q1', 'median', 'q3', 'max', 'count']
#: CSV file names written by :func:`write_noise_report`.
REPORT_FILES = OrderedDict([('estimates', 'estimates.csv'),
                            ('gate', 'gate.csv'),
                            ('alignment', 'alignment.csv'),
                            ('aggregates', 'aggregates.csv'),
                            ('curves', 'curves.csv'),
                            ('histograms', 'histograms.csv')])


def _sanitize(obj):
    '''
    Convert numpy values to plain Python and non-finite floats to ``None``.
    '''
    if isinstance(obj, dict):
        return OrderedDict((str(k), _sanitize(v)) for k, v in obj.items())
    elif isinstance(obj, (list, tuple, np.ndarray)):
        return [_sanitize(v) for v in obj]
    elif isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    elif isinstance(obj, (int, np.integer)):
        return int(obj)
    elif isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def write_json(data, filepath):
    '''
    Write ``data`` as indented JSON with a leading ``schema_version`` key.

    Returns
    -------
    path_helpers.path
        Absolute path of the written file.
    '''
    filepath = ph.path(filepath).abspath()
    filepath.parent.makedirs_p()
    document = OrderedDict([('schema_version', SCHEMA_VERSION)])
    document.update(_sanitize(data))
    with open(filepath, 'w', encoding='utf8', newline='\n') as output:
        json.dump(document, output, indent=2, allow_nan=False)
        output.write('\n')
    return filepath


def write_csv(df, filepath):
    filepath = ph.path(filepath).abspath()
    filepath.parent.makedirs_p()
    df.to_csv(filepath, index=False, encoding='utf-8', lineterminator='\n')
    return filepath


def read_csv(filepath):
    return pd.read_csv(filepath, encoding='utf-8')


def write_noise_report(report, out_dir):
    '''
    Write a :class:`~lowlight_pairs.pipeline.NoiseReport`.

    Writes ``noise_report.json``, the CSV tables of :data:`REPORT_FILES`
    and one alignment diagnostics CSV per aligned image
    (``<scene_id>/alignment-<image>.csv``).

    Returns
    -------
    list
        Written paths.
    '''
    out_dir = ph.path(out_dir).abspath()
    frames = OrderedDict([('estimates', report.estimates_frame()),
                          ('gate', report.gate_frame()),
                          ('alignment', report.alignment_frame()),
                          ('aggregates', report.aggregates()),
                          ('curves', report.curves_frame()),
                          ('histograms', report.histograms_frame())])
    written = [write_json(report.to_dict(),
                          out_dir.joinpath('noise_report.json'))]
    for name, df_i in frames.items():
        written.append(write_csv(df_i, out_dir.joinpath(REPORT_FILES[name])))
    for scene_i in report.scenes:
        for label, diagnostics in scene_i.diagnostics.items():
            written.append(write_csv(diagnostics.bins,
                                     out_dir.joinpath(scene_i.scene_id,
                                                      'alignment-%s.csv' %
                                                      label)))
    _L().info('wrote %d report files to `%s`', len(written), out_dir)
    return written


def write_evaluation_report(report, out_dir):
    '''
    Write a :class:`~lowlight_pairs.denoise.EvaluationReport` as CSV tables
    and a JSON summary.
    '''
    out_dir = ph.path(out_dir).abspath()
    frames = OrderedDict([('evaluation', report.rows),
                          ('best_per_scene', report.best_per_scene()),
                          ('best_per_camera', report.best_per_camera()),
                          ('best_global', report.best_global()),
                          ('camera_means', report.camera_means())])
    written = [write_csv(df_i, out_dir.joinpath(name + '.csv'))
               for name, df_i in frames.items()]
    summary = OrderedDict([('best_global',
                            report.best_global().to_dict(orient='records')),
                           ('best_per_camera',
                            report.best_per_camera()
                            .to_dict(orient='records')),
                           ('failed_rows',
                            int((report.rows['status'] == 'failed').sum())),
                           ('errors', report.errors)])
    written.append(write_json(summary, out_dir.joinpath('evaluation.json')))
    return written


def sigma_histogram(values, bin_width=1.):
    '''
    Histogram with ``bin_width`` bins from ``floor(min)`` to past the maximum.

    Returns
    -------
    pandas.DataFrame
        Columns ``bin_low, bin_high, count``.
    '''
    values = np.asarray(values, dtype=float)
    if not values.size:
        return pd.DataFrame(columns=['bin_low', 'bin_high', 'count'])
    low = math.floor(values.min() / bin_width) * bin_width
    n_bins = int(math.floor((values.max() - low) / bin_width)) + 1
    index = np.minimum(((values - low) // bin_width).astype(int), n_bins - 1)
    edges = low + bin_width * np.arange(n_bins + 1)
    return pd.DataFrame({'bin_low': edges[:-1], 'bin_high': edges[1:],
                         'count': np.bincount(index, minlength=n_bins)})


def boxplot_quantiles(df, by, column):
    '''
    Five-number summary (linear-interpolation quantiles) of ``column`` per
    group.
    '''
    grouped = df.groupby(by)[column]
    df_quantiles = pd.DataFrame({'min': grouped.min(),
                                 'q1': grouped.quantile(0.25),
                                 'median': grouped.quantile(0.5),
                                 'q3': grouped.quantile(0.75),
                                 'max': grouped.max(),
                                 'count': grouped.size()})
    return df_quantiles[BOXPLOT_COLUMNS].reset_index()


def _scene_sigmas(df_estimates):
    '''
    One pooled clean-pair and one mean noisy sigma per gate-passing scene.
    '''
    # Empty camera tags read back from CSV as NaN.
    df_estimates = df_estimates.assign(camera_tag=df_estimates['camera_tag']
                                       .fillna(''))
    df_overall = df_estimates[(df_estimates['channel'] == 'overall') &
                              (df_estimates['gate_passed'].astype(bool))]
    clean = df_overall[df_overall['method'] == 'clean_pair']
    noisy = (df_overall[df_overall['method'] == 'noisy_vs_ref']
             .groupby(['scene_id', 'camera_tag'])[['sigma', 'psnr_db']]
             .mean().reset_index())
    return clean, noisy


def emit_plot_data(out_dir, estimates=None, curves=None, synthetic=None,
                   calibration=None, histograms=None):
    '''
    Write CSV tables ready for plotting.

    Parameters
    ----------
    out_dir : str
    estimates : pandas.DataFrame, optional
        :meth:`NoiseReport.estimates_frame` table.  Produces the per-scene
        sigma histograms (``sigma_histogram.csv``) and the per-camera box
        plots of sigma and PSNR (``camera_boxplots.csv``).
    curves : pandas.DataFrame, optional
        :meth:`NoiseReport.curves_frame` table (``noise_curves.csv``).
    synthetic : pandas.DataFrame, optional
        :func:`run_synthetic_validation` table
        (``relative_error_boxplots.csv``).
    calibration : pandas.DataFrame, optional
        :func:`run_calibration` table (``calibration_boxplots.csv``).
    histograms : pandas.DataFrame, optional
        :meth:`NoiseReport.histograms_frame` table
        (``intensity_histograms.csv``).

    Returns
    -------
    OrderedDict
        Written path per table name.
    '''
    out_dir = ph.path(out_dir).abspath()
    written = OrderedDict()

    def _write(name, df):
        written[name] = write_csv(df, out_dir.joinpath(name + '.csv'))

    if estimates is not None:
        clean, noisy = _scene_sigmas(estimates)
        frames = []
        for series, values in (('clean', clean['sigma']),
                               ('noisy', noisy['sigma'])):
            df_i = sigma_histogram(values)
            df_i.insert(0, 'series', series)
            frames.append(df_i)
        _write('sigma_histogram', pd.concat(frames, ignore_index=True))
        frames = []
        for series, df_i in (('clean', clean), ('noisy', noisy)):
            for column in ('sigma', 'psnr_db'):
                if df_i.empty:
                    continue
                df_q = boxplot_quantiles(df_i, 'camera_tag', column)
                df_q.insert(1, 'series', series)
                df_q.insert(2, 'quantity', column)
                frames.append(df_q)
        _write('camera_boxplots',
               pd.concat(frames, ignore_index=True) if frames else
               pd.DataFrame(columns=['camera_tag', 'series', 'quantity'] +
                            BOXPLOT_COLUMNS))
    if curves is not None:
        _write('noise_curves', curves)
    if synthetic is not None:
        _write('relative_error_boxplots',
               boxplot_quantiles(synthetic[synthetic['channel'] == 'overall'],
                                 ['image', 'method'], 'relative_error'))
    if calibration is not None:
        _write('calibration_boxplots',
               boxplot_quantiles(calibration, ['method', 'channel'],
                                 'relative_error'))
    if histograms is not None:
        _write('intensity_histograms', histograms)
    return written
