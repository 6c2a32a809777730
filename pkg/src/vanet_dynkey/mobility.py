"""Vehicle movement traces.

Traces are piecewise constant-velocity: each waypoint carries the speed
used on the segment that leaves it, so linear interpolation between
waypoints is exact. Every vehicle draws from its own RNG stream keyed by
``(seed, vehicle index)``, which keeps a vehicle's path identical no matter
how many other vehicles share the run.
"""

from __future__ import annotations

import csv
import io
import math
import random
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

from .errors import ParseError, QueryError

KMH = 1000.0 / 3600.0
_EPS = 1e-9


@dataclass(frozen=True)
class Waypoint:
    time: float
    x: float
    y: float
    speed: float  # m/s on the segment leaving this waypoint


@dataclass
class Track:
    waypoints: list[Waypoint]
    _times: list[float] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._times = [w.time for w in self.waypoints]

    def position_at(self, t: float) -> tuple[float, float]:
        wps = self.waypoints
        i = bisect_right(self._times, t) - 1
        if i < 0:
            i = 0
        if i >= len(wps) - 1:
            w = wps[-1]
            return (w.x, w.y)
        a, b = wps[i], wps[i + 1]
        span = b.time - a.time
        if span <= 0:
            return (b.x, b.y)
        u = (t - a.time) / span
        return (a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u)


@dataclass
class MobilityTrace:
    tracks: dict[int, Track]
    bounds: tuple[float, float]
    duration: float

    @property
    def vehicle_ids(self) -> list[int]:
        return list(self.tracks)

    def position_at(self, vehicle: int, time: float) -> tuple[float, float]:
        return position_at(self, vehicle, time)


def position_at(trace: MobilityTrace, vehicle: int, time: float) -> tuple[float, float]:
    if not 0.0 <= time <= trace.duration + 1e-9:
        raise QueryError(f"time {time} outside [0, {trace.duration}]")
    try:
        track = trace.tracks[vehicle]
    except KeyError:
        raise QueryError(f"unknown vehicle {vehicle}") from None
    return track.position_at(time)


@dataclass(frozen=True)
class ManhattanParams:
    bounds: tuple[float, float] = (2000.0, 2000.0)
    vehicle_count: int = 30
    duration: float = 100.0
    grid_block: float = 250.0
    max_speed: float = 60.0  # km/h
    min_speed: float | None = None  # km/h, defaults to max_speed / 2
    turn_probability: float = 0.5
    seed: int = 0


@dataclass(frozen=True)
class RwpParams:
    bounds: tuple[float, float] = (30000.0, 200.0)
    vehicle_count: int = 30
    duration: float = 100.0
    max_speed: float = 120.0  # km/h
    min_speed: float = 60.0  # km/h
    pause: float = 0.0
    seed: int = 0


def _truncate(wps: list[Waypoint], duration: float) -> list[Waypoint]:
    """Cut the last segment so the track ends exactly at ``duration``."""
    if wps[-1].time <= duration:
        if wps[-1].time < duration:
            last = wps[-1]
            wps.append(Waypoint(duration, last.x, last.y, 0.0))
        return wps
    out = [w for w in wps if w.time < duration]
    a = out[-1]
    b = wps[len(out)]
    u = (duration - a.time) / (b.time - a.time)
    out.append(Waypoint(duration, a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u, 0.0))
    return out


_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _manhattan_track(p: ManhattanParams, vid: int) -> Track:
    rng = random.Random(f"{p.seed}:manhattan:{vid}")
    w, h = p.bounds
    block = p.grid_block
    nx, ny = int(w // block), int(h // block)
    vmax = p.max_speed * KMH
    vmin = (p.min_speed if p.min_speed is not None else p.max_speed / 2) * KMH
    ix, iy = rng.randint(0, nx), rng.randint(0, ny)

    def ok(d: tuple[int, int]) -> bool:
        return 0 <= ix + d[0] <= nx and 0 <= iy + d[1] <= ny

    valid = [d for d in _DIRS if ok(d)]
    if not valid:
        return Track([Waypoint(0.0, ix * block, iy * block, 0.0),
                      Waypoint(p.duration, ix * block, iy * block, 0.0)])
    heading = rng.choice(valid)
    t = 0.0
    wps: list[Waypoint] = []
    while t < p.duration:
        speed = rng.uniform(vmin, vmax)
        wps.append(Waypoint(t, ix * block, iy * block, speed))
        ix, iy = ix + heading[0], iy + heading[1]
        t += block / speed
        straight_ok = ok(heading)
        turns = [d for d in ((heading[1], heading[0]), (-heading[1], -heading[0])) if ok(d)]
        if straight_ok and (not turns or rng.random() >= p.turn_probability):
            continue
        if turns:
            heading = rng.choice(turns)
        else:
            heading = (-heading[0], -heading[1])
    wps.append(Waypoint(t, ix * block, iy * block, 0.0))
    return Track(_truncate(wps, p.duration))


def generate_manhattan(p: ManhattanParams) -> MobilityTrace:
    """City model: vehicles drive along grid lines and turn at intersections."""
    if p.bounds[0] < 0 or p.bounds[1] < 0 or p.grid_block <= 0:
        raise ValueError("bounds and grid_block must be positive")
    tracks = {v: _manhattan_track(p, v) for v in range(p.vehicle_count)}
    return MobilityTrace(tracks, p.bounds, p.duration)


def _rwp_track(p: RwpParams, vid: int) -> Track:
    rng = random.Random(f"{p.seed}:rwp:{vid}")
    w, h = p.bounds
    x, y = rng.uniform(0, w), rng.uniform(0, h)
    t = 0.0
    wps: list[Waypoint] = []
    while t < p.duration:
        if p.pause > 0:
            wps.append(Waypoint(t, x, y, 0.0))
            t += p.pause
            if t >= p.duration:
                break
        nx_, ny_ = rng.uniform(0, w), rng.uniform(0, h)
        speed = rng.uniform(p.min_speed * KMH, p.max_speed * KMH)
        dist = math.hypot(nx_ - x, ny_ - y)
        wps.append(Waypoint(t, x, y, speed))
        t += dist / speed
        x, y = nx_, ny_
    wps.append(Waypoint(t, x, y, 0.0))
    return Track(_truncate(wps, p.duration))


def generate_rwp(p: RwpParams) -> MobilityTrace:
    """Highway model: straight segments between uniformly drawn waypoints."""
    if p.min_speed <= 0 or p.max_speed < p.min_speed:
        raise ValueError("need 0 < min_speed <= max_speed")
    tracks = {v: _rwp_track(p, v) for v in range(p.vehicle_count)}
    return MobilityTrace(tracks, p.bounds, p.duration)


def validate_trace(trace: MobilityTrace, max_speed_kmh: float | None = None,
                   grid_block: float | None = None, tol: float = 1e-6) -> list[str]:
    """Return a list of violations (empty when the trace is well formed)."""
    problems: list[str] = []
    w, h = trace.bounds
    vmax = None if max_speed_kmh is None else max_speed_kmh * KMH
    for vid, track in trace.tracks.items():
        wps = track.waypoints
        for a, b in zip(wps, wps[1:]):
            if not b.time > a.time:
                problems.append(f"v{vid}: non-increasing time at {b.time}")
                continue
            seg = math.hypot(b.x - a.x, b.y - a.y) / (b.time - a.time)
            if vmax is not None and seg > vmax + tol:
                problems.append(f"v{vid}: speed {seg:.3f} m/s exceeds cap at t={a.time}")
            if grid_block is not None and abs(b.x - a.x) > tol and abs(b.y - a.y) > tol:
                problems.append(f"v{vid}: diagonal segment at t={a.time}")
        for wp in wps:
            if not (-tol <= wp.x <= w + tol and -tol <= wp.y <= h + tol):
                problems.append(f"v{vid}: out of bounds at t={wp.time}")
        if grid_block is not None:
            for a, b in zip(wps, wps[1:]):
                # An axis-aligned segment must lie on a grid line.
                if abs(b.x - a.x) <= tol and _off_grid(a.x, grid_block, tol):
                    problems.append(f"v{vid}: off grid x={a.x} at t={a.time}")
                if abs(b.y - a.y) <= tol and _off_grid(a.y, grid_block, tol):
                    problems.append(f"v{vid}: off grid y={a.y} at t={a.time}")
    return problems


def _off_grid(v: float, block: float, tol: float) -> bool:
    r = v / block
    return abs(r - round(r)) * block > tol


# ---------------------------------------------------------------------------
# ns-2 movement files
# ---------------------------------------------------------------------------

_NUM = r"([-+]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)"
_SET = re.compile(r"^\$node_\((\d+)\)\s+set\s+([XYZ])_\s+" + _NUM + r"$")
_AT = re.compile(r'^\$ns_\s+at\s+' + _NUM + r'\s+"\$node_\((\d+)\)\s+setdest\s+'
                 + _NUM + r"\s+" + _NUM + r"\s+" + _NUM + r'"$')


def import_movement_trace(source: str | Path | TextIO, bounds: tuple[float, float] | None = None,
                          duration: float | None = None) -> MobilityTrace:
    """Parse an ns-2 movement file (as written by BonnMotion)."""
    if isinstance(source, (str, Path)) and not (isinstance(source, str) and "\n" in source):
        text = Path(source).read_text()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()

    init: dict[int, dict[str, float]] = {}
    dests: dict[int, list[tuple[float, float, float, float]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SET.match(line)
        if m:
            init.setdefault(int(m.group(1)), {})[m.group(2)] = float(m.group(3))
            continue
        m = _AT.match(line)
        if m:
            t, node = float(m.group(1)), int(m.group(2))
            x, y, s = float(m.group(3)), float(m.group(4)), float(m.group(5))
            if s < 0 or t < 0:
                raise ParseError("negative time or speed", lineno)
            dests.setdefault(node, []).append((t, x, y, s))
            continue
        raise ParseError(f"unrecognised directive: {line!r}", lineno)

    tracks: dict[int, Track] = {}
    for node in sorted(set(init) | set(dests)):
        pos = init.get(node, {})
        if "X" not in pos or "Y" not in pos:
            raise ParseError(f"node {node} has no initial X_/Y_")
        tracks[node] = Track(_replay_setdest(pos["X"], pos["Y"], sorted(dests.get(node, []))))

    end = duration if duration is not None else max(
        (t.waypoints[-1].time for t in tracks.values()), default=0.0)
    if duration is not None:
        for node, tr in tracks.items():
            tracks[node] = Track(_truncate(list(tr.waypoints), duration))
    if bounds is None:
        xs = [w.x for t in tracks.values() for w in t.waypoints] or [0.0]
        ys = [w.y for t in tracks.values() for w in t.waypoints] or [0.0]
        bounds = (max(xs), max(ys))
    return MobilityTrace(tracks, bounds, end)


def _replay_setdest(x0: float, y0: float, cmds: list[tuple[float, float, float, float]]) -> list[Waypoint]:
    wps: list[Waypoint] = []
    x, y = x0, y0
    moving: tuple[float, float, float, float, float, float] | None = None
    for (tc, dx, dy, s) in cmds:
        if moving is not None:
            t0, sx, sy, arrive, ex, ey = moving
            if arrive <= tc + _EPS:
                x, y = ex, ey
                if arrive < tc - _EPS:
                    wps.append(Waypoint(arrive, ex, ey, 0.0))
            else:
                u = (tc - t0) / (arrive - t0)
                x, y = sx + (ex - sx) * u, sy + (ey - sy) * u
            moving = None
        if not wps:
            if tc > 0:
                wps.append(Waypoint(0.0, x, y, 0.0))
        dist = math.hypot(dx - x, dy - y)
        if s <= 0 or dist == 0:
            if not wps or wps[-1].time < tc:
                wps.append(Waypoint(tc, x, y, 0.0))
            continue
        if wps and wps[-1].time == tc:
            wps[-1] = Waypoint(tc, x, y, s)
        else:
            wps.append(Waypoint(tc, x, y, s))
        moving = (tc, x, y, tc + dist / s, dx, dy)
    if moving is not None:
        _, _, _, arrive, ex, ey = moving
        wps.append(Waypoint(arrive, ex, ey, 0.0))
    if not wps:
        wps.append(Waypoint(0.0, x0, y0, 0.0))
    return wps


def export_movement_trace(trace: MobilityTrace) -> str:
    out = io.StringIO()
    for vid, track in trace.tracks.items():
        first = track.waypoints[0]
        out.write(f"$node_({vid}) set X_ {first.x!r}\n")
        out.write(f"$node_({vid}) set Y_ {first.y!r}\n")
        out.write(f"$node_({vid}) set Z_ 0.0\n")
    for vid, track in trace.tracks.items():
        wps = track.waypoints
        for a, b in zip(wps, wps[1:]):
            dist = math.hypot(b.x - a.x, b.y - a.y)
            if dist == 0:
                continue
            speed = dist / (b.time - a.time)
            out.write(f'$ns_ at {a.time!r} "$node_({vid}) setdest {b.x!r} {b.y!r} {speed!r}"\n')
    return out.getvalue()


def export_csv(trace: MobilityTrace, dest: TextIO) -> None:
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(["vehicle_id", "time_s", "x_m", "y_m", "speed_mps"])
    for vid, track in trace.tracks.items():
        for wp in track.waypoints:
            w.writerow([vid, repr(wp.time), repr(wp.x), repr(wp.y), repr(wp.speed)])


def sample_speeds(track: Track, times: Iterable[float]) -> list[float]:
    """Finite-difference speeds between consecutive sample times."""
    ts = list(times)
    pts = [track.position_at(t) for t in ts]
    return [math.hypot(b[0] - a[0], b[1] - a[1]) / (tb - ta)
            for (ta, a), (tb, b) in zip(zip(ts, pts), zip(ts[1:], pts[1:]))]
