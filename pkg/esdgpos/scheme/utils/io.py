import datetime
import json
import os
from typing import Dict, List, Optional

import numpy as np
from datasets import Dataset
from scipy.spatial import Delaunay

from esdgpos.scheme import physics
from esdgpos.scheme.cases import schlieren
from esdgpos.scheme.mesh import Mesh
from esdgpos.scheme.physics import GasParams
from esdgpos.scheme.sbp import RefOps

SCHEMA_VERSION = 'v1'
VTK_CELL_TYPES = {'interval': 3, 'quad': 9, 'tri': 5}


def schema_line(kind):
    return f'# schema: esdgpos-{kind} {SCHEMA_VERSION}\n'


def rows_to_dataset(rows: List[Dict], columns) -> Dataset:
    return Dataset.from_dict({c: [row[c] for row in rows] for c in columns})


def save_dataset_with_timestamp(dataset: Dataset, output_dir, pre_name, kind=None, save_csv=True, save_json=True,
                                time_str=None):
    """Write ``<pre_name>_<timestamp>.csv`` (with a schema comment line) and ``.jsonl``.

    Returns the CSV path, or the JSON path when no CSV is written.
    """
    if time_str is None:
        time_str = datetime.datetime.now().strftime("%Y-%m-%d-%H-%M-%S")
    os.makedirs(output_dir, exist_ok=True)
    path = None
    if save_json:
        path = os.path.join(output_dir, f'{pre_name}_{time_str}.jsonl')
        dataset.to_json(path)
    if save_csv:
        path = os.path.join(output_dir, f'{pre_name}_{time_str}.csv')
        with open(path, 'wb') as f:
            f.write(schema_line(kind or pre_name).encode())
            if dataset.num_rows:
                dataset.to_csv(f, index=False)
            else:
                # header only, so an empty report still documents its columns
                f.write((','.join(dataset.column_names) + '\n').encode())
    return path


def read_schema_csv(path):
    """Schema kind and version from the first line, then the rows as a Dataset."""
    with open(path) as f:
        first = f.readline()
    if not first.startswith('# schema: esdgpos-'):
        raise ValueError(f'{path} has no esdgpos schema line')
    kind, version = first[len('# schema: esdgpos-'):].split()
    dataset = Dataset.from_csv(path, comment='#')
    return kind, version, dataset


def _fmt(value):
    if value is None:
        return '-'
    if isinstance(value, float):
        return f'{value:.3e}' if abs(value) < 1e-2 or abs(value) >= 1e3 else f'{value:.4f}'
    return str(value)


def results_2_md_table(rows: List[Dict], columns, method_name=None):
    head = '| ' + ' | '.join(columns) + ' |\n'
    rule = '|' + '|'.join('-' * (len(c) + 2) for c in columns) + '|\n'
    title = f'\n{method_name}\n\n' if method_name else '\n'
    body = ''.join('| ' + ' | '.join(_fmt(row.get(c)) for c in columns) + ' |\n' for row in rows)
    return title + head + rule + body


def save_results(result_dir, result_name, summary: Dict):
    """Write the run summary (errors, timings, config) as ``<result_name>_total_result.json``."""
    os.makedirs(result_dir, exist_ok=True)
    path = os.path.join(result_dir, f'{result_name}_total_result.json')
    with open(path, 'w') as f:
        f.write(json.dumps(summary, indent=2, default=float))
    print(f'save all results to {result_dir}')
    return path


def subcells(refops: RefOps):
    """Local connectivity of the nodal subgrid on the reference element."""
    Np = refops.Np
    if refops.elem == 'interval':
        order = np.argsort(refops.r[0])
        return np.stack([order[:-1], order[1:]], axis=1)
    if refops.elem == 'quad':
        n1 = refops.N + 1
        idx = np.arange(Np).reshape(n1, n1)  # [j, i], r fastest
        return np.stack([idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel(), idx[1:, 1:].ravel(), idx[1:, :-1].ravel()],
                        axis=1)
    return Delaunay(refops.r.T).simplices


def write_vtk(path, mesh: Mesh, u, gas: GasParams, l_elem: Optional[np.ndarray] = None, title='esdgpos field'):
    """Legacy ASCII VTK unstructured grid of the nodal subgrid with ``rho, u[, v], p``
    (plus Schlieren in 2D and ``l_elem`` when given) as point data."""
    ops = mesh.refops
    K, Np = mesh.K, mesh.Np
    points = np.zeros((K * Np, 3))
    for d in range(mesh.dim):
        points[:, d] = mesh.x[d].ravel()
    local = subcells(ops)
    cells = (local[None, :, :] + (np.arange(K) * Np)[:, None, None]).reshape(-1, local.shape[1])
    nc, nv = cells.shape

    rho, vel, p = physics.cons_to_prim(u, gas)
    data = {'rho': rho, 'u': vel[0]}
    if mesh.dim > 1:
        data['v'] = vel[1]
    data['p'] = p
    if mesh.dim > 1:
        data['schlieren'] = schlieren(rho, mesh)
    if l_elem is not None:
        data['l_elem'] = np.repeat(np.asarray(l_elem, dtype=float)[:, None], Np, axis=1)

    dirname = os.path.dirname(path)
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    with open(path, 'w') as f:
        f.write('# vtk DataFile Version 3.0\n')
        f.write(f'{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n')
        f.write(f'POINTS {K * Np} double\n')
        np.savetxt(f, points, fmt='%.17g')
        f.write(f'CELLS {nc} {nc * (nv + 1)}\n')
        np.savetxt(f, np.column_stack([np.full(nc, nv), cells]), fmt='%d')
        f.write(f'CELL_TYPES {nc}\n')
        np.savetxt(f, np.full(nc, VTK_CELL_TYPES[ops.elem]), fmt='%d')
        f.write(f'POINT_DATA {K * Np}\n')
        for name, values in data.items():
            f.write(f'SCALARS {name} double 1\nLOOKUP_TABLE default\n')
            np.savetxt(f, np.asarray(values).reshape(-1), fmt='%.17g')
    return path
