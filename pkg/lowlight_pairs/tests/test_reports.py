import json
import math

import numpy as np
import pandas as pd

from ..reports import (BOXPLOT_COLUMNS, boxplot_quantiles, emit_plot_data,
                       read_csv, sigma_histogram, write_csv, write_json)


def _linear_quantile(values, q):
    values = sorted(values)
    position = q * (len(values) - 1)
    low = int(math.floor(position))
    high = min(low + 1, len(values) - 1)
    return values[low] + (position - low) * (values[high] - values[low])


def test_write_json(tmp_path):
    '''
    Test the schema version leads and non-finite values become null.
    '''
    filepath = write_json({'value': np.float64(np.nan), 'count': np.int64(3),
                           'flags': np.array([True, False])},
                          tmp_path / 'report.json')
    text = filepath.text()
    assert text.startswith('{\n  "schema_version": 1')
    assert json.loads(text) == {'schema_version': 1, 'value': None,
                                'count': 3, 'flags': [True, False]}


def test_write_csv(tmp_path):
    df = pd.DataFrame({'scene_id': ['s01', 's02'], 'sigma': [1.5, 2.]})
    filepath = write_csv(df, tmp_path / 'nested' / 'table.csv')
    data = filepath.bytes()
    assert b'\r\n' not in data
    assert data.startswith(b'scene_id,sigma\n')
    assert read_csv(filepath).equals(df)


def test_sigma_histogram():
    df = sigma_histogram([3.2])
    assert df[['bin_low', 'bin_high', 'count']].values.tolist() == \
        [[3, 4, 1]]
    values = np.random.default_rng(0).uniform(0, 12, size=40)
    df = sigma_histogram(values)
    assert df['count'].sum() == 40
    assert np.allclose(np.diff(df['bin_low']), 1)
    assert sigma_histogram([]).empty


def test_boxplot_quantiles():
    '''
    Test quantiles against sorted linear interpolation.
    '''
    rng = np.random.default_rng(1)
    df = pd.DataFrame({'camera_tag': ['a'] * 37 + ['b'] * 5,
                       'sigma': rng.uniform(0, 1, size=42)})
    df_q = boxplot_quantiles(df, 'camera_tag', 'sigma').set_index(
        'camera_tag')
    assert list(df_q.columns) == BOXPLOT_COLUMNS
    for camera_tag, group in df.groupby('camera_tag'):
        values = group['sigma'].tolist()
        row = df_q.loc[camera_tag]
        assert row['count'] == len(values)
        assert math.isclose(row['min'], min(values))
        assert math.isclose(row['max'], max(values))
        for column, q in (('q1', 0.25), ('median', 0.5), ('q3', 0.75)):
            assert math.isclose(row[column], _linear_quantile(values, q))


def _estimates(scene_ids):
    rows = []
    for i, scene_id in enumerate(scene_ids):
        for method, sigma in (('clean_pair', 2. + i), ('noisy_vs_ref',
                                                      10. + i)):
            rows.append({'scene_id': scene_id, 'camera_tag': 'cam',
                         'image': 'noisy_0', 'method': method,
                         'channel': 'overall', 'sigma': sigma,
                         'psnr_db': 20 * math.log10(255 / sigma),
                         'support': 100, 'negative_radicand': False,
                         'gate_passed': True})
    return pd.DataFrame(rows)


def test_emit_plot_data_single_scene(tmp_path):
    '''
    Test a single scene gives one histogram bin per series and degenerate
    box plots.
    '''
    written = emit_plot_data(tmp_path, estimates=_estimates(['s01']))
    assert list(written) == ['sigma_histogram', 'camera_boxplots']
    df_histogram = read_csv(written['sigma_histogram'])
    assert df_histogram.groupby('series').size().tolist() == [1, 1]
    df_box = read_csv(written['camera_boxplots'])
    assert len(df_box) == 4
    for column in ('min', 'q1', 'median', 'q3'):
        assert np.allclose(df_box[column], df_box['max'])


def test_emit_plot_data_tables(tmp_path):
    synthetic = pd.DataFrame({'image': ['noisy'] * 4,
                              'method': ['ours', 'ours', 'standard',
                                         'standard'],
                              'channel': ['overall', 'red'] * 2,
                              'relative_error': [0.01, 0.5, 0.04, 0.5]})
    calibration = pd.DataFrame({'method': ['ours', 'standard'],
                                'channel': ['red', 'red'],
                                'relative_error': [0.01, 0.3]})
    written = emit_plot_data(tmp_path, estimates=_estimates(['s01', 's02']),
                             synthetic=synthetic, calibration=calibration)
    assert list(written) == ['sigma_histogram', 'camera_boxplots',
                             'relative_error_boxplots',
                             'calibration_boxplots']
    df_errors = read_csv(written['relative_error_boxplots'])
    # Only the `overall` rows are summarized.
    assert df_errors['median'].tolist() == [0.01, 0.04]
    assert read_csv(written['sigma_histogram'])['count'].sum() == 4
