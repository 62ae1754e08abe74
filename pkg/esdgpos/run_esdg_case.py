import dataclasses
import datetime
import json
import logging
import os
import time
from typing import Optional, Sequence

from esdgpos.config import RunConfig
from esdgpos.scheme.cases import error_norms
from esdgpos.scheme.errors import ConfigError, ExactSolutionError
from esdgpos.scheme.physics import VARIABLE_NAMES
from esdgpos.scheme.timestep import DIAGNOSTIC_COLUMNS, LIMITER_COLUMNS, advance
from esdgpos.scheme.utils.io import results_2_md_table, rows_to_dataset, save_dataset_with_timestamp, \
    save_results, write_vtk
from esdgpos.scheme.utils.multi_run import convergence_rows, run_levels

logger = logging.getLogger(__name__)

CONVERGENCE_COLUMNS = ('K', 'L1', 'L1_rate', 'L2', 'L2_rate')


def run_esdg_case(case: str = 'leblanc',
                  elem: Optional[str] = None,
                  N: int = 2,
                  K: int = 50,
                  Kx: Optional[int] = None,
                  Ky: Optional[int] = None,
                  limiter: str = 'elementwise',
                  zeta: float = 0.1,
                  bounds: str = 'generalized',
                  eps0: float = 1e-14,
                  shock_capture: bool = False,
                  cfl: Optional[float] = None,
                  t_final: Optional[float] = None,
                  wall_riemann: bool = False,
                  entropy_stable_viscosity: bool = True,
                  wavespeed_safety: float = 1.0,
                  alpha: Optional[float] = None,
                  beta: Optional[float] = None,
                  per_stage_dt: bool = False,
                  output_dir: Optional[str] = None,
                  snapshot_every: int = 0,
                  result_name: Optional[str] = None,
                  progress: bool = True,
                  mach: float = 3.0,
                  mu: Optional[float] = None,
                  vortex_beta: float = 8.5,
                  Re: float = 1000.0,
                  sedov_energy: float = 1.0,
                  save_outputs: bool = True,
                  ):
    """
    Run one benchmark case with the positivity-preserving entropy stable DG scheme
    and write its diagnostics, limiter report, final field and errors.
    Args:
        case (`str`):
            Available names include ['leblanc', 'viscous_shock', 'viscous_shock_2d', 'sine_shock',
            'isentropic_vortex', 'sedov', 'dmr', 'daru_tenaud'], default is 'leblanc'.
        elem (`str`):
            Element type, one of ['interval', 'quad', 'tri'].
            Default is None, which means 'interval' for 1D cases and 'quad' for 2D cases.
        N (`int`):
            Polynomial degree, at most 5 on intervals and quads and 4 on triangles, default is 2.
        K (`int`):
            Mesh resolution. The case decides how K maps to element counts per direction,
            e.g. the double Mach reflection uses a (3.5 K, K) grid. Default is 50.
        Kx (`int`), Ky (`int`):
            Explicit element counts per direction for 2D cases, overriding K when both are given.
        limiter (`str`):
            Available options include ['none', 'low', 'elementwise', 'convex'].
            'none' runs the pure high order scheme, 'low' the pure low order scheme,
            'elementwise' blends one parameter per element and 'convex' one per node pair.
            Default is 'elementwise'.
        zeta (`float`):
            Relative lower bound factor on density and internal energy, default is 0.1.
        bounds (`str`):
            Available options include ['generalized', 'minimal']. 'generalized' takes the bounds
            from the low order update, 'minimal' only from eps0. Default is 'generalized'.
        eps0 (`float`):
            Absolute positivity floor, default is 1e-14.
        shock_capture (`bool`):
            Whether to combine the limiter with the modal shock indicator, default is False.
        cfl (`float`):
            Fraction of the low order positivity time step, default is None (the case's value).
        t_final (`float`):
            Final time, default is None (the case's value).
        wall_riemann (`bool`):
            Whether reflective walls use the exact wall Riemann pressure flux, default is False.
        entropy_stable_viscosity (`bool`):
            Whether the graph viscosity also bounds the entropy stable wave speed, default is True.
        wavespeed_safety (`float`):
            Multiplier on the graph viscosity coefficients, default is 1.0.
        alpha (`float`), beta (`float`):
            Triangle node graph parameters, default is None (the shipped defaults).
        per_stage_dt (`bool`):
            Whether every Runge-Kutta stage must respect its own positivity step. When a stage
            exceeds it the whole step is retried with a smaller dt. Default is False.
        output_dir (`str`):
            Where to write results, default is None, which means './outputs/<case>/<result_name>'.
        snapshot_every (`int`):
            Write 'snapshot_<step>.vtk' every n steps, default is 0 (never).
        result_name (`str`):
            The name of the result, default is None, which means '<case>_N<N>_K<K>_<limiter>'.
        progress (`bool`):
            Whether to show the tqdm progress bar, default is True.
        mach (`float`):
            Shock Mach number of the viscous shock cases, default is 3.0.
        mu (`float`):
            Viscosity of the viscous shock cases, default is None (the case's value).
        vortex_beta (`float`):
            Strength of the isentropic vortex, default is 8.5.
        Re (`float`):
            Reynolds number of the Daru-Tenaud shock tube, default is 1000.0.
        sedov_energy (`float`):
            Energy deposited by the Sedov blast, default is 1.0.
        save_outputs (`bool`):
            Whether to write any files at all, default is True.

    Returns a summary dict with the case name, the final time, the step count, the wall time,
    the errors (when the case has an exact solution) and the output directory.
    """
    config = RunConfig(case=case, elem=elem, N=N, K=K, Kx=Kx, Ky=Ky, limiter=limiter, zeta=zeta, bounds=bounds,
                       eps0=eps0, shock_capture=shock_capture, cfl=cfl, t_final=t_final, wall_riemann=wall_riemann,
                       entropy_stable_viscosity=entropy_stable_viscosity, wavespeed_safety=wavespeed_safety,
                       alpha=alpha, beta=beta, per_stage_dt=per_stage_dt, output_dir=output_dir,
                       snapshot_every=snapshot_every, result_name=result_name, progress=progress, mach=mach, mu=mu,
                       vortex_beta=vortex_beta, Re=Re, sedov_energy=sedov_energy)
    return run_config(config, save_outputs=save_outputs)


def run_config(config: RunConfig, save_outputs: bool = True):
    """Validate ``config`` and run it; see :func:`run_esdg_case` for the fields."""
    config.validate()
    spec = config.build_case()
    elem = config.resolved_elem(spec)
    cfl = config.resolved_cfl(spec)
    t_final = config.resolved_t_final(spec)
    project_name = config.name()

    output_dir = config.output_dir or os.path.join('./outputs', spec.name, project_name)
    if save_outputs and not os.path.exists(output_dir):
        os.makedirs(output_dir)

    mesh = spec.build_mesh(elem, config.N, config.K, config.alpha, config.beta, counts=config.counts())
    u0 = spec.initial_field(mesh)
    logger.info('case %s: %s N=%d, %d elements, limiter=%s, cfl=%.3g, t_final=%.4g',
                spec.name, elem, config.N, mesh.K, config.limiter, cfl, t_final)

    on_step = None
    if save_outputs and config.snapshot_every > 0:
        def on_step(step, t, u):
            if step % config.snapshot_every == 0:
                write_vtk(os.path.join(output_dir, f'snapshot_{step}.vtk'), mesh, u, spec.gas,
                          title=f'{spec.name} t={t:.6g}')

    t0 = time.time()
    result = advance(u0, mesh, spec.gas, config.scheme_config(), cfl, t_final, on_step=on_step,
                     progress=config.progress)
    t1 = time.time()
    print(f'{spec.name}: {result.steps} steps to t = {result.t:.6g} in {t1 - t0:.2f} s')

    errors = None
    if spec.has_exact:
        errors = {'L1': error_norms(result.u, spec, mesh, result.t, p=1),
                  'L2': error_norms(result.u, spec, mesh, result.t, p=2)}
        rows = [{'norm': norm, **errs} for norm, errs in errors.items()]
        print(results_2_md_table(rows, ['norm', *VARIABLE_NAMES[mesh.dim], 'relative_sum'], method_name=project_name))

    summary = {
        'case': spec.name,
        'elem': elem,
        'N': config.N,
        'K': config.K,
        'elements': mesh.K,
        't': result.t,
        'steps': result.steps,
        'wall_time': t1 - t0,
        'errors': errors,
        'config': {k: v for k, v in dataclasses.asdict(config).items() if k != 'source'},
        'output_dir': output_dir if save_outputs else None,
    }
    if save_outputs:
        time_str = datetime.datetime.now().strftime("%Y-%m-%d-%H-%M-%S")
        save_dataset_with_timestamp(rows_to_dataset(result.diagnostics, DIAGNOSTIC_COLUMNS), output_dir,
                                    pre_name='diagnostics', time_str=time_str)
        save_dataset_with_timestamp(rows_to_dataset(result.limiter_rows, LIMITER_COLUMNS), output_dir,
                                    pre_name='limiter_report', kind='limiter', time_str=time_str)
        l_elem = result.last_report.l_elem if result.last_report is not None else None
        write_vtk(os.path.join(output_dir, 'final_field.vtk'), mesh, result.u, spec.gas, l_elem=l_elem,
                  title=f'{spec.name} t={result.t:.6g}')
        if errors is not None:
            with open(os.path.join(output_dir, 'errors.json'), 'w') as f:
                f.write(json.dumps(errors, indent=2))
        save_results(output_dir, project_name, summary)
    return summary


def _run_level(config: RunConfig):
    summary = run_config(config, save_outputs=False)
    return {norm: errs['relative_sum'] for norm, errs in summary['errors'].items()}


def convergence_study(config: RunConfig, Ks: Sequence[int], workers: Optional[int] = None,
                      save_outputs: bool = True):
    """
    Run ``config`` at every resolution in ``Ks`` and tabulate L1 / L2 errors with observed rates.
    Args:
        config (`RunConfig`):
            The base configuration. Its case must have an exact solution.
        Ks (`Sequence[int]`):
            Resolutions to run. Rates are reported only when every K doubles the previous one.
        workers (`int`):
            Process pool size, default is None, which reads ESDGPOS_MAX_WORKERS (default 1).
        save_outputs (`bool`):
            Whether to write 'convergence_<timestamp>.csv', default is True.

    Returns the convergence rows with keys K, L1, L1_rate, L2, L2_rate.
    """
    config.validate()
    spec = config.build_case()
    if not spec.has_exact:
        raise ExactSolutionError(f'case {spec.name!r} has no exact solution, cannot measure convergence')
    Ks = [int(K) for K in Ks]
    if not Ks or min(Ks) < 1:
        raise ConfigError(f'convergence needs positive resolutions, got {Ks}')

    levels = [dataclasses.replace(config, K=K, Kx=None, Ky=None, progress=False) for K in Ks]
    level_errors = run_levels(_run_level, levels, workers=workers, desc=f'{spec.name} levels')
    rows = convergence_rows(Ks, level_errors)
    print(results_2_md_table(rows, CONVERGENCE_COLUMNS, method_name=f'{spec.name} N={config.N} {config.limiter}'))

    if save_outputs:
        project_name = config.result_name or f'{spec.name}_N{config.N}_{config.limiter}_convergence'
        output_dir = config.output_dir or os.path.join('./outputs', spec.name, project_name)
        path = save_dataset_with_timestamp(rows_to_dataset(rows, CONVERGENCE_COLUMNS), output_dir,
                                           pre_name='convergence', save_json=False)
        print(f'save result to {path}')
    return rows
