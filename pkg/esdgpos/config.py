"""Run configuration: a flat ``key = value`` text format with ``#`` comments."""
import dataclasses
import typing
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from esdgpos.scheme.cases import CASES, CaseSpec, get_case
from esdgpos.scheme.errors import ConfigError
from esdgpos.scheme.sbp import ELEMENT_TYPES, MAX_DEGREE
from esdgpos.scheme.settings import SchemeConfig

_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


@dataclass
class RunConfig:
    case: str = 'leblanc'
    elem: Optional[str] = None
    N: int = 2
    K: int = 50
    Kx: Optional[int] = None
    Ky: Optional[int] = None
    limiter: str = 'elementwise'
    zeta: float = 0.1
    bounds: str = 'generalized'
    eps0: float = 1e-14
    shock_capture: bool = False
    cfl: Optional[float] = None
    t_final: Optional[float] = None
    wall_riemann: bool = False
    entropy_stable_viscosity: bool = True
    wavespeed_safety: float = 1.0
    alpha: Optional[float] = None
    beta: Optional[float] = None
    per_stage_dt: bool = False
    output_dir: Optional[str] = None
    snapshot_every: int = 0
    result_name: Optional[str] = None
    progress: bool = True
    # case parameters
    mach: float = 3.0
    mu: Optional[float] = None
    vortex_beta: float = 8.5
    Re: float = 1000.0
    sedov_energy: float = 1.0
    source: Optional[str] = field(default=None, repr=False)

    @classmethod
    def from_text(cls, text, source=None, overrides: Optional[Dict[str, str]] = None):
        values, problems = parse_config_text(text)
        values.update(overrides or {})
        config, more = cls._coerce(values)
        # fields that failed to parse keep their defaults, so the checks below stay meaningful
        problems += more + config.problems()
        if problems:
            raise ConfigError(problems)
        config.source = source
        return config

    @classmethod
    def from_file(cls, path, overrides: Optional[Dict[str, str]] = None):
        try:
            with open(path) as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError(f'cannot read config file {path}: {exc}')
        return cls.from_text(text, source=path, overrides=overrides)

    @classmethod
    def _coerce(cls, values: Dict[str, str]):
        hints = typing.get_type_hints(cls)
        known = {f.name for f in dataclasses.fields(cls) if f.name != 'source'}
        kwargs, problems = {}, []
        for key, raw in values.items():
            if key not in known:
                problems.append(f'unknown key {key!r}')
                continue
            try:
                kwargs[key] = _coerce_value(raw, hints[key])
            except ValueError as exc:
                problems.append(f'{key}: {exc}')
        return cls(**kwargs), problems

    # resolved settings

    def case_params(self):
        params = {
            'viscous_shock': {'mach': self.mach},
            'viscous_shock_2d': {'mach': self.mach},
            'isentropic_vortex': {'beta': self.vortex_beta},
            'daru_tenaud': {'Re': self.Re},
            'sedov': {'E0': self.sedov_energy},
        }.get(self.case, {})
        if self.mu is not None and self.case.startswith('viscous_shock'):
            params['mu'] = self.mu
        return params

    def build_case(self) -> CaseSpec:
        return get_case(self.case, **self.case_params())

    def resolved_elem(self, case: CaseSpec):
        if self.elem:
            return self.elem
        return 'interval' if case.dim == 1 else 'quad'

    def resolved_cfl(self, case: CaseSpec):
        return self.cfl if self.cfl is not None else case.recommended_cfl(self.resolved_elem(case))

    def resolved_t_final(self, case: CaseSpec):
        return self.t_final if self.t_final is not None else case.t_final

    def counts(self):
        if self.Kx is not None and self.Ky is not None:
            return (self.Kx, self.Ky)
        return None

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(limiter=self.limiter, zeta=self.zeta, bounds=self.bounds, eps0=self.eps0,
                            shock_capture=self.shock_capture, wall_riemann=self.wall_riemann,
                            entropy_stable_viscosity=self.entropy_stable_viscosity,
                            wavespeed_safety=self.wavespeed_safety, per_stage_dt=self.per_stage_dt)

    def name(self):
        return self.result_name or f'{self.case}_N{self.N}_K{self.K}_{self.limiter}'

    def problems(self) -> List[str]:
        problems = []
        case = None
        if self.case not in CASES:
            problems.append(f'case must be one of {sorted(CASES)}, got {self.case!r}')
        else:
            try:
                case = self.build_case()
            except ConfigError as exc:
                problems.extend(exc.problems)
        if self.elem is not None and self.elem not in ELEMENT_TYPES:
            problems.append(f'elem must be one of {ELEMENT_TYPES}, got {self.elem!r}')
        elif case is not None:
            elem = self.resolved_elem(case)
            if (case.dim == 1) != (elem == 'interval'):
                problems.append(f'elem {elem!r} does not fit the {case.dim}D case {self.case!r}')
            elif not 1 <= self.N <= MAX_DEGREE[elem]:
                problems.append(f'N must lie in [1, {MAX_DEGREE[elem]}] for {elem}, got {self.N}')
        if self.K < 1:
            problems.append(f'K must be >= 1, got {self.K}')
        if (self.Kx is None) != (self.Ky is None):
            problems.append('Kx and Ky must be given together')
        elif self.Kx is not None and (self.Kx < 1 or self.Ky < 1):
            problems.append(f'Kx, Ky must be >= 1, got {self.Kx}, {self.Ky}')
        problems.extend(self.scheme_config().problems())
        if self.cfl is not None and not 0 < self.cfl <= 1:
            problems.append(f'cfl must lie in (0, 1], got {self.cfl}')
        if self.t_final is not None and not self.t_final > 0:
            problems.append(f't_final must be > 0, got {self.t_final}')
        if self.snapshot_every < 0:
            problems.append(f'snapshot_every must be >= 0, got {self.snapshot_every}')
        if self.alpha is not None and not self.alpha > 0:
            problems.append(f'alpha must be > 0, got {self.alpha}')
        if self.beta is not None and not self.beta > 0:
            problems.append(f'beta must be > 0, got {self.beta}')
        return problems

    def validate(self):
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self


def parse_config_text(text):
    """``key = value`` lines; ``#`` starts a comment.  Returns ``(values, problems)``."""
    values, problems = {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            problems.append(f'line {lineno}: expected "key = value", got {line!r}')
            continue
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            problems.append(f'line {lineno}: missing key')
            continue
        if key in values:
            problems.append(f'line {lineno}: duplicate key {key!r}')
        values[key] = value
    return values, problems


def _coerce_value(raw: str, hint):
    if typing.get_origin(hint) is typing.Union:
        if raw.lower() in ('none', ''):
            return None
        hint = next(a for a in typing.get_args(hint) if a is not type(None))
    if hint is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f'expected a boolean, got {raw!r}')
    if hint is int:
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f'expected an integer, got {raw!r}') from None
    if hint is float:
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f'expected a number, got {raw!r}') from None
    return raw
