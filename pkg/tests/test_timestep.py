import logging

import numpy as np
import pytest

from esdgpos.scheme import physics
from esdgpos.scheme.cases import get_case
from esdgpos.scheme.errors import InadmissibleStateError
from esdgpos.scheme.limiter import LimiterReport
from esdgpos.scheme.mesh import uniform_interval
from esdgpos.scheme.rhs_high import high_residual
from esdgpos.scheme.rhs_low import low_residual
from esdgpos.scheme.sbp import reference_ops
from esdgpos.scheme.settings import LIMITER_MODES, SchemeConfig
from esdgpos.scheme.timestep import DIAGNOSTIC_COLUMNS, LIMITER_COLUMNS, LimitedScheme, StageDtExceeded, \
    StepController, advance, diagnostics_row, limiter_rows, ssp_rk3_step


def test_step_controller_lands_on_final_time():
    clock = StepController(cfl=0.5, final_time=1.0)
    dts = []
    while not clock.done:
        dts.append(clock.next_dt(0.3))
        clock.advance()
    assert clock.t == 1.0
    assert clock.step == 7
    assert dts[-1] == pytest.approx(0.1)
    assert sum(dts) == pytest.approx(1.0)


def test_ssp_rk3_on_linear_decay():
    dt = 0.1
    u = ssp_rk3_step(np.array([1.0]), 0.0, dt, lambda u, t, h: u - h * u)
    assert u[0] == pytest.approx(1 - dt + dt ** 2 / 2 - dt ** 3 / 6, rel=1e-14)


def test_advance_leblanc_conserves_mass():
    case = get_case('leblanc')
    mesh = case.build_mesh('interval', 2, 20)
    u0 = case.initial_field(mesh)
    result = advance(u0, mesh, case.gas, SchemeConfig(), cfl=0.5, t_final=case.t_final, progress=False,
                     max_steps=5)
    assert result.steps == 5
    assert 0 < result.t < case.t_final
    assert len(result.diagnostics) == 6
    # both boundary states are at rest, so no mass crosses them early on
    mass = [row['mass'] for row in result.diagnostics]
    assert np.allclose(mass, mass[0], rtol=1e-13)
    assert result.diagnostics[-1]['min_rho'] > 0
    assert result.diagnostics[-1]['min_rhoe'] > 0


@pytest.mark.parametrize('config', [
    SchemeConfig(limiter='none'),
    SchemeConfig(limiter='low'),
    SchemeConfig(limiter='elementwise'),
    SchemeConfig(limiter='elementwise', shock_capture=True),
    SchemeConfig(limiter='convex'),
    SchemeConfig(limiter='convex', bounds='minimal', per_stage_dt=True),
])
def test_periodic_run_conserves(config, periodic_interval, gas, make_smooth):
    mesh = periodic_interval
    u0 = make_smooth(mesh, gas, amplitude=0.3)
    result = advance(u0, mesh, gas, config, cfl=0.5, t_final=0.02, progress=False)
    assert result.t == 0.02
    assert result.steps > 0
    assert np.allclose(mesh.integrate(result.u), mesh.integrate(u0), rtol=1e-12, atol=1e-12)
    assert len(result.diagnostics) == result.steps + 1


def test_advance_calls_on_step(periodic_quad, gas, make_smooth):
    seen = []
    u0 = make_smooth(periodic_quad, gas)
    advance(u0, periodic_quad, gas, SchemeConfig(), cfl=0.5, t_final=0.01, progress=False,
            on_step=lambda step, t, u: seen.append((step, t, u.shape)))
    assert [s for s, _, _ in seen] == list(range(1, len(seen) + 1))
    assert seen[-1][1] == 0.01
    assert seen[0][2] == u0.shape


def test_per_stage_dt_signals_an_oversized_step(periodic_interval, gas, make_smooth):
    u = make_smooth(periodic_interval, gas)
    scheme = LimitedScheme(periodic_interval, gas, SchemeConfig(per_stage_dt=True))
    dt_max = scheme.max_dt(u, 0.0)
    with pytest.raises(StageDtExceeded) as info:
        scheme(u, 0.0, 10 * dt_max)
    assert info.value.dt_max == pytest.approx(dt_max)


def test_oversized_step_is_logged(periodic_interval, gas, make_smooth, caplog):
    u = make_smooth(periodic_interval, gas)
    scheme = LimitedScheme(periodic_interval, gas, SchemeConfig(limiter='low', check_stages=False))
    dt_max = scheme.max_dt(u, 0.0)
    with caplog.at_level(logging.WARNING, logger='esdgpos.scheme.timestep'):
        scheme(u, 0.0, 1.5 * dt_max)
    assert 'exceeds the stage positivity step' in caplog.text
    assert scheme.last_report is None
    assert scheme.stage_dt_max == [dt_max]


def test_limiter_rows_only_for_limited_elements():
    report = LimiterReport(l_elem=np.array([1.0, 0.5, 0.7]), min_rho=np.array([1.0, 0.2, 0.3]),
                           min_rhoe=np.array([2.0, 0.1, 0.4]))
    rows = limiter_rows(4, report)
    assert [r['element'] for r in rows] == [1, 2]
    assert all(tuple(r) == LIMITER_COLUMNS for r in rows)
    assert rows[0]['xi'] == 1.0 and rows[0]['l_elem'] == 0.5
    assert limiter_rows(4, None) == []
    assert report.limited_fraction == pytest.approx(2 / 3)
    assert report.l_min == 0.5


def test_diagnostics_row_columns(periodic_interval, gas, make_smooth):
    u = make_smooth(periodic_interval, gas)
    row = diagnostics_row(3, 0.5, 0.01, u, periodic_interval, gas, None)
    assert tuple(row) == DIAGNOSTIC_COLUMNS
    assert row['mom_y'] == 0.0
    assert row['limited_fraction'] == 0.0 and row['l_min'] == 1.0
    assert row['mass'] == pytest.approx(1.0)


def test_inadmissible_initial_state_is_rejected(periodic_interval, gas, make_smooth):
    u = make_smooth(periodic_interval, gas)
    u[0, 0, 0] = -0.1
    with pytest.raises(InadmissibleStateError):
        advance(u, periodic_interval, gas, SchemeConfig(), cfl=0.5, t_final=0.01, progress=False)


@pytest.mark.parametrize('limiter', LIMITER_MODES)
def test_free_stream_is_preserved_by_every_mode(limiter, periodic_mesh, gas):
    mesh = periodic_mesh
    shape = (mesh.K, mesh.Np)
    vel = np.stack([np.full(shape, 0.5), np.full(shape, -0.25)][:mesh.dim])
    u0 = physics.prim_to_cons(np.ones(shape), vel, np.ones(shape), gas)
    result = advance(u0, mesh, gas, SchemeConfig(limiter=limiter), cfl=0.5, t_final=0.01, progress=False)
    assert result.t == 0.01
    assert np.abs(result.u - u0).max() < 1e-12


@pytest.mark.parametrize('limiter', ['low', 'elementwise', 'convex'])
def test_limited_residuals_share_element_mass(limiter, periodic_mesh, gas, make_smooth, rng):
    mesh = periodic_mesh
    u = make_smooth(mesh, gas, amplitude=0.4) * (1 + 0.05 * rng.uniform(-1, 1, size=(mesh.K, mesh.Np)))
    config = SchemeConfig(limiter=limiter)
    rH = high_residual(u, 0.0, mesh, gas, config=config).r
    rL = low_residual(u, 0.0, mesh, gas, config=config).r
    # any per-element blend of the two stays conservative
    assert np.allclose((rH - rL).sum(axis=-1), 0, atol=1e-12)
    l = rng.uniform(0, 1, size=mesh.K)
    blend = rL + l[None, :, None] * (rH - rL)
    assert np.allclose(blend.sum(axis=(1, 2)), 0, atol=1e-12)


def _periodic_sod(mesh, gas):
    x = mesh.x[0]
    inside = (x > 0.25) & (x < 0.75)
    rho = np.where(inside, 1.0, 0.125)
    p = np.where(inside, 1.0, 0.1)
    return physics.prim_to_cons(rho, np.zeros((1,) + x.shape), p, gas)


@pytest.mark.parametrize('config', [
    SchemeConfig(limiter='low'),
    SchemeConfig(limiter='elementwise', zeta=0.5),
    SchemeConfig(limiter='elementwise', shock_capture=True),
    SchemeConfig(limiter='convex', zeta=0.5),
])
def test_limited_blast_conserves(config, gas):
    mesh = uniform_interval(20, 0.0, 1.0, reference_ops('interval', 2), periodic=True)
    u0 = _periodic_sod(mesh, gas)
    result = advance(u0, mesh, gas, config, cfl=0.5, t_final=0.05, progress=False)
    start, end = mesh.integrate(u0), mesh.integrate(result.u)
    assert abs(end[0] - start[0]) <= 1e-11 * start[0]
    assert abs(end[-1] - start[-1]) <= 1e-11 * start[-1]
    assert abs(end[1]) <= 1e-11
