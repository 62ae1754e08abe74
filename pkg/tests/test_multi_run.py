import math

import pytest

from esdgpos.scheme.errors import ConfigError
from esdgpos.scheme.utils.multi_run import MAX_WORKERS_ENV, calcu_rates, convergence_rows, is_doubling, \
    max_workers, run_levels


def test_rates_for_doubling_levels():
    rates = calcu_rates([8, 16, 32], [1e-2, 2.5e-3, 6.25e-4])
    assert rates[0] is None
    assert rates[1:] == pytest.approx([2.0, 2.0])


def test_rates_need_doubling_and_positive_errors():
    assert not is_doubling([8, 12, 24])
    assert not is_doubling([8])
    assert calcu_rates([8, 12], [1.0, 0.5]) == [None, None]
    assert calcu_rates([4, 8], [0.0, 0.1]) == [None, None]


def test_convergence_rows():
    rows = convergence_rows([4, 8], [{'L1': 0.4, 'L2': 0.8}, {'L1': 0.05, 'L2': 0.2}])
    assert list(rows[0]) == ['K', 'L1', 'L1_rate', 'L2', 'L2_rate']
    assert rows[1]['L1_rate'] == pytest.approx(3.0)
    assert rows[1]['L2_rate'] == pytest.approx(math.log2(4.0))
    assert rows[0]['L2_rate'] is None


def test_max_workers_from_environment(monkeypatch):
    monkeypatch.delenv(MAX_WORKERS_ENV, raising=False)
    assert max_workers() == 1
    monkeypatch.setenv(MAX_WORKERS_ENV, '3')
    assert max_workers() == 3
    for bad in ('zero', '0'):
        monkeypatch.setenv(MAX_WORKERS_ENV, bad)
        with pytest.raises(ConfigError):
            max_workers()


def test_run_levels_serial_keeps_order(capsys):
    assert run_levels(lambda k: k * k, [3, 1, 2], workers=1) == [9, 1, 4]
    assert 'convergence time' in capsys.readouterr().out
