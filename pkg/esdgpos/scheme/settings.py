from dataclasses import dataclass

LIMITER_MODES = ('none', 'low', 'elementwise', 'convex')
BOUND_MODES = ('generalized', 'minimal')


@dataclass
class SchemeConfig:
    """Options shared by the residuals, the limiters and the time stepper."""
    limiter: str = 'elementwise'
    zeta: float = 0.1
    bounds: str = 'generalized'
    eps0: float = 1e-14
    shock_capture: bool = False
    wall_riemann: bool = False
    entropy_stable_viscosity: bool = True
    wavespeed_safety: float = 1.0
    per_stage_dt: bool = False
    check_stages: bool = True
    chunk_size: int = 2048

    @property
    def interface(self):
        # blended schemes share the low-order interface flux
        return 'lf' if self.limiter == 'none' else 'low'

    def problems(self):
        problems = []
        if self.limiter not in LIMITER_MODES:
            problems.append(f'limiter must be one of {LIMITER_MODES}, got {self.limiter!r}')
        if not 0 < self.zeta <= 1:
            problems.append(f'zeta must lie in (0, 1], got {self.zeta}')
        if self.bounds not in BOUND_MODES:
            problems.append(f'bounds must be one of {BOUND_MODES}, got {self.bounds!r}')
        if not self.eps0 > 0:
            problems.append(f'eps0 must be > 0, got {self.eps0}')
        if not self.wavespeed_safety >= 1:
            problems.append(f'wavespeed_safety must be >= 1, got {self.wavespeed_safety}')
        if self.chunk_size < 1:
            problems.append(f'chunk_size must be >= 1, got {self.chunk_size}')
        return problems

    def element_chunks(self, K, n_pairs):
        """Element slices keeping about ``chunk_size * 16`` pair evaluations per chunk."""
        step = max(1, self.chunk_size * 16 // max(n_pairs, 1))
        for k0 in range(0, K, step):
            yield slice(k0, min(k0 + step, K))
