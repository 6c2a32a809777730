"""Closed-form revocation cost model.

A vehicle holding a certificate of lifetime ``l`` at speed ``v`` can be at
most ``r = v*l`` metres from where it was certified. Covering that radius
with RSUs spaced ``d`` apart needs ``m = ceil(r/d) + 1`` targeted messages,
against ``N`` for a network-wide flood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ArgumentError

# Guards ceil() against float noise such as 6000.000000001 / 500.
_CEIL_EPS = 1e-9


@dataclass(frozen=True)
class AnalyticParams:
    l: float
    v: float
    d: float
    N: int
    n: int | None = None

    def __post_init__(self) -> None:
        if self.l <= 0 or self.v < 0 or self.d <= 0:
            raise ArgumentError("l and d must be positive, v non-negative")
        if self.N < 1:
            raise ArgumentError("N must be >= 1")


@dataclass(frozen=True)
class TimingParams:
    t_p_ca: float = 0.001
    t_ca: float = 0.010
    t_p_man: float = 0.001
    t_man: float = 0.010
    t_p_rsu: float = 0.001
    t_rsu: float = 0.005

    def __post_init__(self) -> None:
        for k, val in vars(self).items():
            if val < 0:
                raise ArgumentError(f"{k} must be >= 0")


@dataclass(frozen=True)
class AnalyticResult:
    r: float
    m: int
    p: float
    t_e2e: float
    saturated: bool = False


def radius(v_kmh: float, l_s: float) -> float:
    """Farthest distance (m) a vehicle covers during one certificate lifetime."""
    if v_kmh < 0:
        raise ArgumentError("speed must be >= 0")
    if l_s <= 0:
        raise ArgumentError("lifetime must be > 0")
    return v_kmh * 1000.0 / 3600.0 * l_s


def message_count(r: float, d: float) -> int:
    if d <= 0:
        raise ArgumentError("RSU spacing must be > 0")
    if r < 0:
        raise ArgumentError("radius must be >= 0")
    return max(0, math.ceil(r / d - _CEIL_EPS)) + 1


def node_percentage(m: int, N: int) -> float:
    if N < 1:
        raise ArgumentError("N must be >= 1")
    if m < 0 or m > N:
        raise ArgumentError(f"m={m} outside [0, N={N}]")
    # m*100 first keeps 15 -> 1.5 and 51 -> 5.1 exact in binary floats.
    return m * 100 / N


def e2e_time(tp: TimingParams, n: int) -> float:
    """Initiation-to-delivery latency across ``n`` RSU hops."""
    if n < 0:
        raise ArgumentError("n must be >= 0")
    return tp.t_p_ca + tp.t_ca + tp.t_p_man + tp.t_man + n * (tp.t_p_rsu + tp.t_rsu)


def e2e_parallel(tp: TimingParams) -> float:
    """Latency when the manager fans out to all RSUs at once."""
    return tp.t_p_ca + tp.t_ca + tp.t_p_man + tp.t_man + tp.t_p_rsu + tp.t_rsu


def evaluate(params: AnalyticParams, tp: TimingParams | None = None) -> AnalyticResult:
    r = radius(params.v, params.l)
    m = message_count(r, params.d)
    saturated = m > params.N
    p = node_percentage(min(m, params.N), params.N)
    n = params.n if params.n is not None else min(m, params.N)
    return AnalyticResult(r, m, p, e2e_time(tp or TimingParams(), n), saturated)


@dataclass(frozen=True)
class SweepRow:
    model: str
    v_kmh: float
    l_s: float
    d_m: float
    N: int
    r_m: float
    m_msgs: int
    p_pct: float
    brd_msgs: int
    saturated: bool

    @property
    def dyn_msgs(self) -> int:
        return min(self.m_msgs, self.N)


SWEEP_COLUMNS = ("model", "v_kmh", "l_s", "d_m", "N", "r_m", "m_msgs", "p_pct", "brd_msgs")


def _row(model: str, v: float, l: float, d: float, N: int) -> SweepRow:
    res = evaluate(AnalyticParams(l, v, d, N))
    return SweepRow(model, v, l, d, N, res.r, res.m, res.p, N, res.saturated)


def sweep_speed(l: float, d: float, N: int, v_range, model: str = "Manhattan") -> list[SweepRow]:
    vs = list(v_range)
    if not vs:
        raise ArgumentError("empty speed range")
    return [_row(model, v, l, d, N) for v in vs]


def rsus_for_area(area_km2: float, density_per_km2: float) -> int:
    return max(1, round(area_km2 * density_per_km2))


def sweep_area(area_range, density_per_km2: float, v: float, l: float, d: float,
               model: str = "Manhattan") -> list[SweepRow]:
    """DYN vs BRD as the network grows at fixed RSU density."""
    areas = list(area_range)
    if not areas:
        raise ArgumentError("empty area range")
    return [_row(model, v, l, d, rsus_for_area(a, density_per_km2)) for a in areas]
