"""SSP-RK3 time integration of limited forward-Euler stages."""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from tqdm import tqdm

from esdgpos.scheme import physics
from esdgpos.scheme.errors import InadmissibleStateError
from esdgpos.scheme.limiter import LimiterReport, convex_limit, shock_indicator, zhang_shu_limit
from esdgpos.scheme.mesh import Mesh
from esdgpos.scheme.physics import GasParams
from esdgpos.scheme.rhs_high import high_residual
from esdgpos.scheme.rhs_low import low_residual
from esdgpos.scheme.settings import SchemeConfig
from esdgpos.scheme.viscous import viscous_aux

logger = logging.getLogger(__name__)

DIAGNOSTIC_COLUMNS = ('step', 't', 'dt', 'min_rho', 'min_rhoe', 'mass', 'mom_x', 'mom_y', 'energy',
                      'entropy', 'limited_fraction', 'l_min')
LIMITER_COLUMNS = ('step', 'element', 'l_elem', 'xi', 'min_rho', 'min_rhoe')
MAX_STAGE_RETRIES = 20


@dataclass
class StepController:
    cfl: float
    final_time: float
    t: float = 0.0
    dt: float = 0.0
    step: int = 0

    def next_dt(self, dt_max):
        """``cfl * dt_max``, truncated so the last step lands on ``final_time``."""
        dt = self.cfl * dt_max
        if self.t + dt >= self.final_time:
            dt = self.final_time - self.t
        self.dt = dt
        return dt

    def advance(self):
        self.step += 1
        if self.t + self.dt >= self.final_time:
            self.t = self.final_time
        else:
            self.t += self.dt

    @property
    def done(self):
        return self.t >= self.final_time


class StageDtExceeded(Exception):
    """Internal signal: a stage needs a smaller step than the one in use."""

    def __init__(self, dt_max):
        self.dt_max = dt_max
        super().__init__(f'stage positivity step {dt_max:.3e} exceeded')


def ssp_rk3_step(u, t, dt, stage_update: Callable):
    """One SSPRK(3,3) step; ``stage_update(u, t, dt)`` is a forward-Euler update."""
    u1 = stage_update(u, t, dt)
    u2 = 0.75 * u + 0.25 * stage_update(u1, t + dt, dt)
    return u / 3.0 + 2.0 / 3.0 * stage_update(u2, t + 0.5 * dt, dt)


class LimitedScheme:
    """Forward-Euler stage operator for one limiter mode.

    The low-order residual and the positivity step of the state passed to
    :meth:`max_dt` are cached, so the first stage does not recompute them.
    """

    def __init__(self, mesh: Mesh, gas: GasParams, config: SchemeConfig):
        self.mesh = mesh
        self.gas = gas
        self.config = config
        # convex limiting needs both residuals on one pair set; otherwise each keeps its own
        self.pairs = 'union' if config.limiter == 'convex' else 'low'
        self.high_pairs = 'union' if config.limiter == 'convex' else 'high'
        self.step = None
        self.last_report: Optional[LimiterReport] = None
        self.stage_dt_max: List[float] = []
        self._cache = None

    def _low(self, u, t):
        if self._cache is not None and self._cache[0] is u and self._cache[1] == t:
            return self._cache[2], self._cache[3]
        aux = viscous_aux(u, t, self.mesh, self.gas, step=self.step)
        low = low_residual(u, t, self.mesh, self.gas, aux=aux, config=self.config, pairs=self.pairs,
                           keep_pairs=self.config.limiter == 'convex')
        self._cache = (u, t, aux, low)
        return aux, low

    def max_dt(self, u, t):
        return self._low(u, t)[1].dt_max

    def __call__(self, u, t, dt):
        mesh, gas, config = self.mesh, self.gas, self.config
        aux, low = self._low(u, t)
        self.stage_dt_max.append(low.dt_max)
        if dt > low.dt_max * (1 + 1e-12) and config.limiter != 'none':
            if config.per_stage_dt:
                raise StageDtExceeded(low.dt_max)
            logger.warning('step %s: dt %.3e exceeds the stage positivity step %.3e',
                           self.step, dt, low.dt_max)
        m = mesh.m
        uL = u - dt / m * low.r
        if config.limiter == 'low':
            out, self.last_report = uL, None
        else:
            keep = config.limiter == 'convex'
            high = high_residual(u, t, mesh, gas, aux=aux, config=config, pairs=self.high_pairs, keep_pairs=keep)
            if config.limiter == 'none':
                out, self.last_report = u - dt / m * high.r, None
            else:
                xi = shock_indicator(u, mesh, gas) if config.shock_capture else None
                if keep:
                    out, self.last_report = convex_limit(uL, low.pair_flux - high.pair_flux, dt, mesh, config, xi)
                else:
                    out, self.last_report = zhang_shu_limit(uL, low.r, high.r, dt, mesh, config, xi)
        if config.check_stages:
            physics.check_admissible(out, 'stage state', step=self.step)
        return out


@dataclass
class RunResult:
    u: np.ndarray
    t: float
    steps: int
    diagnostics: List[dict] = field(default_factory=list)
    limiter_rows: List[dict] = field(default_factory=list)
    last_report: Optional[LimiterReport] = None


def diagnostics_row(step, t, dt, u, mesh: Mesh, gas: GasParams, report: Optional[LimiterReport]):
    totals = mesh.integrate(u)
    return {
        'step': step,
        't': float(t),
        'dt': float(dt),
        'min_rho': float(u[0].min()),
        'min_rhoe': float(physics.rhoe(u).min()),
        'mass': float(totals[0]),
        'mom_x': float(totals[1]),
        'mom_y': float(totals[2]) if mesh.dim > 1 else 0.0,
        'energy': float(totals[-1]),
        'entropy': float(mesh.integrate(physics.math_entropy(u, gas))),
        'limited_fraction': report.limited_fraction if report is not None else 0.0,
        'l_min': report.l_min if report is not None else 1.0,
    }


def limiter_rows(step, report: Optional[LimiterReport]):
    """One row per element whose blending parameter fell below one."""
    if report is None:
        return []
    rows = []
    for k in np.flatnonzero(report.l_elem < 1):
        rows.append({
            'step': step,
            'element': int(k),
            'l_elem': float(report.l_elem[k]),
            'xi': float(report.shock_xi[k]) if report.shock_xi is not None else 1.0,
            'min_rho': float(report.min_rho[k]),
            'min_rhoe': float(report.min_rhoe[k]),
        })
    return rows


def advance(u0, mesh: Mesh, gas: GasParams, config: SchemeConfig, cfl: float, t_final: float,
            t0: float = 0.0, on_step: Optional[Callable] = None, progress: bool = True,
            max_steps: Optional[int] = None) -> RunResult:
    """Integrate from ``t0`` to ``t_final`` with ``dt = cfl * min m_i / (2 lambda_i)``.

    ``on_step(step, t, u)`` is called after every completed step.
    """
    physics.check_admissible(u0, 'initial condition')
    scheme = LimitedScheme(mesh, gas, config)
    clock = StepController(cfl=cfl, final_time=t_final, t=t0)
    u = np.array(u0, dtype=float)
    result = RunResult(u=u, t=t0, steps=0)
    result.diagnostics.append(diagnostics_row(0, t0, 0.0, u, mesh, gas, None))

    bar = tqdm(total=t_final - t0, disable=not progress, unit='t', bar_format='{l_bar}{bar}| {n:.3g}/{total:.3g}')
    while not clock.done:
        if max_steps is not None and clock.step >= max_steps:
            logger.info('stopping after max_steps=%d at t=%.6g', max_steps, clock.t)
            break
        scheme.step = clock.step + 1
        dt = clock.next_dt(scheme.max_dt(u, clock.t))
        if not dt > 0:
            raise InadmissibleStateError('non-positive time step', step=scheme.step, value=dt)
        for _ in range(MAX_STAGE_RETRIES):
            scheme.stage_dt_max = []
            try:
                u_new = ssp_rk3_step(u, clock.t, dt, scheme)
                break
            except StageDtExceeded as exc:
                dt = clock.next_dt(min(exc.dt_max, dt / cfl))
                logger.debug('step %d: retrying with stage-limited dt %.3e', scheme.step, dt)
        else:
            raise InadmissibleStateError('stage positivity step kept shrinking', step=scheme.step, value=dt)
        physics.check_admissible(u_new, 'updated state', step=scheme.step)
        u = u_new
        clock.advance()
        row = diagnostics_row(clock.step, clock.t, dt, u, mesh, gas, scheme.last_report)
        result.diagnostics.append(row)
        result.limiter_rows.extend(limiter_rows(clock.step, scheme.last_report))
        logger.debug('step %d t=%.6g dt=%.3e min_rho=%.3e min_rhoe=%.3e limited=%.3f',
                     clock.step, clock.t, dt, row['min_rho'], row['min_rhoe'], row['limited_fraction'])
        bar.update(dt)
        bar.set_postfix(t=f'{clock.t:.4g}', dt=f'{dt:.2e}', min_rho=f"{row['min_rho']:.2e}",
                        limited=f"{row['limited_fraction']:.2f}")
        if on_step is not None:
            on_step(clock.step, clock.t, u)
    bar.close()

    result.u, result.t, result.steps = u, clock.t, clock.step
    result.last_report = scheme.last_report
    return result
