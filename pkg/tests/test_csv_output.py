"""Pruebas del formato CSV versionado"""

import json

from csv_output import read_csv, read_footer, save_summary, write_csv


def test_schema_line_and_precision(tmp_path):
    path = write_csv(str(tmp_path / 'x.csv'), [{'t': 0.1, 'Y': 1.0 / 3.0}], 'demo')
    lines = (tmp_path / 'x.csv').read_bytes().decode('utf-8').split('\n')
    assert lines[0] == '# lelab-csv v1 demo'
    assert lines[1] == 't,Y'
    assert lines[2] == '1.0000000000000001e-01,3.3333333333333331e-01'
    assert read_csv(path)['Y'][0] == 1.0 / 3.0


def test_footer_row(tmp_path):
    path = write_csv(str(tmp_path / 's.csv'), [{'t': 0.0, 'Y': 0.0}, {'t': 0.5, 'Y': 2.0}], 'stability',
                     footer=('gronwall_C', 1.5))
    assert read_footer(path) == ['gronwall_C', '1.5000000000000000e+00']
    df = read_csv(path, footer_rows=1)
    assert list(df['Y']) == [0.0, 2.0]


def test_integer_columns_stay_integers(tmp_path):
    path = write_csv(str(tmp_path / 'm.csv'), [{'n3': 9, 'max_error': 1e-3}], 'mms')
    assert (tmp_path / 'm.csv').read_text(encoding='utf-8').split('\n')[2].startswith('9,')
    assert read_csv(path)['n3'][0] == 9


def test_summary_json(tmp_path):
    path = save_summary(str(tmp_path), 'norms', {'fitted_C': 1.25, 'errors': []})
    with open(path, encoding='utf-8') as f:
        assert json.load(f)['fitted_C'] == 1.25


def test_footer_does_not_lose_precision(tmp_path):
    values = [1.0 / 3.0, 2.0 / 3.0, 0.1 + 0.2]
    path = write_csv(str(tmp_path / 'p.csv'), [{'t': v, 'Y': v * 7.0} for v in values], 'stability',
                     footer=('gronwall_C', 1.0 / 7.0))
    df = read_csv(path, footer_rows=1)
    assert list(df['t']) == values
    assert list(df['Y']) == [v * 7.0 for v in values]
    assert float(read_footer(path)[1]) == 1.0 / 7.0
