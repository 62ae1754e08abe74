import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Dict, List, Sequence

from tqdm import tqdm

from esdgpos.scheme.errors import ConfigError

logger = logging.getLogger(__name__)

MAX_WORKERS_ENV = 'ESDGPOS_MAX_WORKERS'


def max_workers():
    value = os.environ.get(MAX_WORKERS_ENV, '1')
    try:
        workers = int(value)
    except ValueError:
        raise ConfigError(f'{MAX_WORKERS_ENV} must be an integer, got {value!r}')
    if workers < 1:
        raise ConfigError(f'{MAX_WORKERS_ENV} must be >= 1, got {workers}')
    return workers


def is_doubling(Ks: Sequence[int]):
    return len(Ks) > 1 and all(b == 2 * a for a, b in zip(Ks, Ks[1:]))


def calcu_rates(Ks: Sequence[int], errors: Sequence[float]) -> List:
    """Observed rates ``log2(e_{2h} / e_h)``; ``None`` for the first level, and for all
    levels when the K list does not double."""
    if not is_doubling(Ks):
        return [None] * len(Ks)
    rates = [None]
    for coarse, fine in zip(errors, errors[1:]):
        rates.append(math.log2(coarse / fine) if coarse > 0 and fine > 0 else None)
    return rates


def convergence_rows(Ks: Sequence[int], level_errors: Sequence[Dict[str, float]], norms=('L1', 'L2')):
    """Rows ``K, L1, L1_rate, L2, L2_rate`` from per-level error totals."""
    rows = [{'K': K} for K in Ks]
    for norm in norms:
        errs = [e[norm] for e in level_errors]
        for row, err, rate in zip(rows, errs, calcu_rates(Ks, errs)):
            row[norm] = err
            row[f'{norm}_rate'] = rate
    return rows


def run_levels(fn: Callable, args_list: Sequence, workers=None, desc='levels'):
    """Evaluate ``fn`` for every argument, in order; a process pool is used when more
    than one worker is allowed."""
    workers = workers or max_workers()
    t0 = time.time()
    if workers == 1 or len(args_list) == 1:
        results = [fn(args) for args in tqdm(args_list, desc=desc)]
    else:
        logger.info('running %d levels on %d workers', len(args_list), workers)
        with ProcessPoolExecutor(max_workers=min(workers, len(args_list))) as pool:
            results = list(tqdm(pool.map(fn, args_list), total=len(args_list), desc=desc))
    t1 = time.time()
    print(f'convergence time = {t1 - t0:.2f} s')
    return results
