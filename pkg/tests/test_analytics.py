from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from vanet_dynkey.analytics import (
    AnalyticParams,
    TimingParams,
    e2e_parallel,
    e2e_time,
    evaluate,
    message_count,
    node_percentage,
    radius,
    rsus_for_area,
    sweep_area,
    sweep_speed,
)
from vanet_dynkey.errors import ArgumentError

TP = TimingParams(0.001, 0.010, 0.001, 0.010, 0.001, 0.005)


def test_radius_examples():
    assert radius(80, 300) == pytest.approx(6666.67, abs=0.005)
    assert radius(300, 900) == pytest.approx(75000.0)
    assert radius(0, 300) == 0.0


def test_message_count_examples():
    assert message_count(6666.67, 500) == 15
    assert message_count(radius(80, 300), 500) == 15
    assert message_count(75000, 1500) == 51
    assert message_count(radius(300, 900), 1500) == 51
    assert message_count(0, 500) == 1


def test_percentage_examples():
    assert node_percentage(15, 1000) == 1.5
    assert node_percentage(51, 1000) == 5.1
    assert node_percentage(7, 7) == 100.0
    with pytest.raises(ArgumentError):
        node_percentage(8, 7)


def test_e2e_examples():
    assert e2e_time(TimingParams(0, 0, 0, 0, 0, 0), 5) == 0.0
    assert e2e_time(TP, 3) == pytest.approx(0.040, abs=1e-12)
    assert e2e_parallel(TP) == pytest.approx(e2e_time(TP, 1))


@given(n=st.integers(0, 500))
def test_e2e_linear_in_hops(n):
    base = e2e_time(TP, 0)
    assert e2e_time(TP, 2 * n) - base == pytest.approx(2 * (e2e_time(TP, n) - base), abs=1e-12)


def test_manhattan_worked_case():
    res = evaluate(AnalyticParams(l=300, v=80, d=500, N=1000))
    assert (res.m, res.p, res.saturated) == (15, 1.5, False)
    row = sweep_speed(300, 500, 1000, [80])[0]
    assert (row.dyn_msgs, row.brd_msgs) == (15, 1000)


def _oracle_m(v, l, d):
    # Exact rational arithmetic, independent of the float path.
    r = Fraction(v) * 1000 / 3600 * Fraction(l)
    q = r / Fraction(d)
    return -(-q.numerator // q.denominator) + 1


@given(l=st.integers(1, 2000), d=st.sampled_from([100, 250, 500, 1000, 1500]),
       N=st.integers(1, 2000), vs=st.lists(st.integers(0, 300), min_size=1, max_size=20))
def test_sweep_rows_match_direct_evaluation(l, d, N, vs):
    rows = sweep_speed(l, d, N, sorted(vs))
    ms = [r.m_msgs for r in rows]
    assert ms == sorted(ms)
    for row, v in zip(rows, sorted(vs)):
        assert row.m_msgs == _oracle_m(v, l, d)
        assert row.m_msgs <= N or row.saturated
        assert row.dyn_msgs == min(row.m_msgs, N)
        assert row.p_pct == pytest.approx(100 * min(row.m_msgs, N) / N)


def test_area_sweep_scales_brd():
    rows = sweep_area([1, 4, 25, 100], 4.0, 60, 300, 500)
    assert [r.brd_msgs for r in rows] == [4, 16, 100, 400]
    assert rsus_for_area(0.01, 4.0) == 1
    assert all(r.dyn_msgs <= r.brd_msgs for r in rows)


def test_bad_inputs():
    for args in [(0, 80, 500, 10), (300, -1, 500, 10), (300, 80, 0, 10), (300, 80, 500, 0)]:
        with pytest.raises(ArgumentError):
            AnalyticParams(*args)
    with pytest.raises(ArgumentError):
        e2e_time(TP, -1)
    with pytest.raises(ArgumentError):
        sweep_speed(300, 500, 10, [])
