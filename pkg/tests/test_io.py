import json
import os

import numpy as np
import pytest

from esdgpos.scheme.mesh import uniform_interval
from esdgpos.scheme.sbp import reference_ops
from esdgpos.scheme.utils.io import VTK_CELL_TYPES, read_schema_csv, results_2_md_table, rows_to_dataset, \
    save_dataset_with_timestamp, save_results, schema_line, subcells, write_vtk


def test_schema_csv_round_trip(tmp_path):
    rows = [{'step': 1, 'element': 3, 'l_elem': 0.25}, {'step': 2, 'element': 0, 'l_elem': 0.5}]
    dataset = rows_to_dataset(rows, ('step', 'element', 'l_elem'))
    path = save_dataset_with_timestamp(dataset, str(tmp_path), 'limiter_report', kind='limiter',
                                       time_str='2024-01-01-00-00-00')
    assert path.endswith('limiter_report_2024-01-01-00-00-00.csv')
    assert os.path.exists(path.replace('.csv', '.jsonl'))
    with open(path) as f:
        assert f.readline() == schema_line('limiter')
    kind, version, back = read_schema_csv(path)
    assert (kind, version) == ('limiter', 'v1')
    assert back['element'] == [3, 0]
    assert back['l_elem'] == pytest.approx([0.25, 0.5])


def test_read_schema_csv_requires_schema_line(tmp_path):
    path = tmp_path / 'plain.csv'
    path.write_text('a,b\n1,2\n')
    with pytest.raises(ValueError):
        read_schema_csv(str(path))


def test_md_table():
    table = results_2_md_table([{'K': 8, 'L1': 1.5e-3, 'L1_rate': None}], ('K', 'L1', 'L1_rate'), 'leblanc')
    lines = table.strip().split('\n')
    assert lines[0] == 'leblanc'
    assert lines[2] == '| K | L1 | L1_rate |'
    assert lines[-1] == '| 8 | 1.500e-03 | - |'


def test_save_results(tmp_path, capsys):
    path = save_results(str(tmp_path), 'run', {'errors': {'L1': np.float64(0.5)}, 'steps': 3})
    with open(path) as f:
        summary = json.load(f)
    assert summary == {'errors': {'L1': 0.5}, 'steps': 3}
    assert 'save all results to' in capsys.readouterr().out


@pytest.mark.parametrize('elem,N,count', [('interval', 3, 3), ('quad', 2, 4), ('tri', 2, None)])
def test_subcells_cover_the_nodes(elem, N, count):
    ops = reference_ops(elem, N)
    cells = subcells(ops)
    assert set(np.unique(cells)) == set(range(ops.Np))
    if count is not None:
        assert len(cells) == count


@pytest.mark.parametrize('fixture', ['periodic_interval', 'periodic_quad', 'periodic_tri'])
def test_write_vtk(fixture, request, tmp_path, make_smooth, gas):
    mesh = request.getfixturevalue(fixture)
    u = make_smooth(mesh, gas)
    path = write_vtk(str(tmp_path / 'out' / 'field.vtk'), mesh, u, gas, l_elem=np.ones(mesh.K))
    text = open(path).read()
    ncells = mesh.K * len(subcells(mesh.refops))
    assert text.startswith('# vtk DataFile Version 3.0\n')
    assert f'POINTS {mesh.K * mesh.Np} double' in text
    assert f'CELL_TYPES {ncells}\n' in text
    assert f'\n{VTK_CELL_TYPES[mesh.refops.elem]}\n' in text
    assert 'SCALARS l_elem double 1' in text
    assert ('SCALARS schlieren' in text) == (mesh.dim == 2)


def test_write_vtk_without_limiter_field(tmp_path, gas, make_smooth):
    mesh = uniform_interval(2, 0.0, 1.0, reference_ops('interval', 1), periodic=True)
    path = write_vtk(str(tmp_path / 'f.vtk'), mesh, make_smooth(mesh, gas), gas)
    text = open(path).read()
    assert 'l_elem' not in text
    assert 'CELLS 2 6\n' in text


def test_empty_dataset_keeps_its_header(tmp_path):
    dataset = rows_to_dataset([], ('step', 'element'))
    path = save_dataset_with_timestamp(dataset, str(tmp_path), 'limiter_report', kind='limiter',
                                       save_json=False, time_str='t')
    with open(path) as f:
        assert f.read() == schema_line('limiter') + 'step,element\n'
