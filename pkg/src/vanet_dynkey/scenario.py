"""World builders: RSU grid, manager regions and vehicle population."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .identity import CryptoProvider
from .mobility import ManhattanParams, MobilityTrace, RwpParams, generate_manhattan, generate_rwp
from .netsim import LinkModel, World

HIGHWAY_WIDTH_M = 200.0


@dataclass(frozen=True)
class ScenarioSpec:
    model: str = "Manhattan"          # Manhattan | Highway
    area_km2: float = 4.0
    vehicles: int = 30
    rsu_spacing: float = 500.0
    managers: int = 4
    speed: float = 60.0               # max km/h
    min_speed: float | None = None
    duration: float = 100.0
    cert_lifetime: float = 300.0
    link: LinkModel = field(default_factory=LinkModel)
    seed: int = 0
    crypto: str = "mock"
    grid_block: float = 250.0

    def bounds(self) -> tuple[float, float]:
        if self.area_km2 <= 0:
            raise ConfigError("area must be > 0")
        if self.model == "Manhattan":
            side = math.sqrt(self.area_km2) * 1000.0
            return (side, side)
        if self.model == "Highway":
            return (self.area_km2 / (HIGHWAY_WIDTH_M / 1000.0) * 1000.0, HIGHWAY_WIDTH_M)
        raise ConfigError(f"unknown mobility model {self.model!r}")


def axis_positions(extent: float, spacing: float) -> list[float]:
    if spacing <= 0:
        raise ConfigError("rsu_spacing must be > 0")
    if extent < spacing:
        return [extent / 2.0]
    n = int(math.floor(extent / spacing + 1e-9))
    return [i * spacing for i in range(n + 1)]


def rsu_grid(bounds: tuple[float, float], spacing: float) -> list[tuple[float, float]]:
    xs, ys = axis_positions(bounds[0], spacing), axis_positions(bounds[1], spacing)
    return [(x, y) for x in xs for y in ys]


def manager_grid(count: int, single_row: bool = False) -> tuple[int, int]:
    """Blocks across x and y, as square as possible with gx >= gy."""
    if count < 1:
        raise ConfigError("managers must be >= 1")
    if single_row:
        return count, 1
    gy = int(math.isqrt(count))
    while count % gy:
        gy -= 1
    return count // gy, gy


def _split(items: list, parts: int) -> list[list]:
    q, r = divmod(len(items), parts)
    out, i = [], 0
    for k in range(parts):
        n = q + (1 if k < r else 0)
        out.append(items[i:i + n])
        i += n
    return out


def partition_rsus(positions: list[tuple[float, float]], managers: int) -> list[list[int]]:
    """Contiguous geographic blocks of RSU indices, one per manager."""
    if managers > len(positions):
        raise ConfigError(f"{managers} managers for only {len(positions)} RSUs")
    single_row = len({y for _, y in positions}) == 1
    gx, gy = manager_grid(managers, single_row)
    by_x = sorted(range(len(positions)), key=lambda i: (positions[i][0], positions[i][1]))
    blocks = []
    for col in _split(by_x, gx):
        col.sort(key=lambda i: (positions[i][1], positions[i][0]))
        blocks.extend(_split(col, gy))
    return blocks


def make_trace(spec: ScenarioSpec) -> MobilityTrace:
    bounds = spec.bounds()
    if spec.model == "Manhattan":
        return generate_manhattan(ManhattanParams(
            bounds=bounds, vehicle_count=spec.vehicles, duration=spec.duration,
            grid_block=spec.grid_block, max_speed=spec.speed, min_speed=spec.min_speed,
            seed=spec.seed))
    return generate_rwp(RwpParams(
        bounds=bounds, vehicle_count=spec.vehicles, duration=spec.duration,
        max_speed=spec.speed, min_speed=spec.min_speed if spec.min_speed is not None else spec.speed / 2,
        seed=spec.seed))


def build_world(spec: ScenarioSpec, trace: MobilityTrace | None = None) -> World:
    trace = trace or make_trace(spec)
    world = World(spec.link, trace, CryptoProvider(spec.crypto, spec.seed), spec.seed,
                  key_lifetime=spec.cert_lifetime,
                  adjacency=max(1.5 * spec.rsu_spacing, 2.0 * spec.link.radio_range))
    positions = rsu_grid(trace.bounds, spec.rsu_spacing)
    mgrs = [world.add_manager() for _ in range(spec.managers)]
    for mgr, block in zip(mgrs, partition_rsus(positions, spec.managers)):
        for i in block:
            world.add_rsu(positions[i], mgr)
    for track_id in sorted(trace.tracks):
        world.add_vehicle(track_id)
    return world


def static_trace(positions: list[tuple[float, float]], bounds: tuple[float, float],
                 duration: float) -> MobilityTrace:
    """Parked vehicles, one track per position."""
    from .mobility import Track, Waypoint

    tracks = {i: Track([Waypoint(0.0, x, y, 0.0), Waypoint(duration, x, y, 0.0)])
              for i, (x, y) in enumerate(positions)}
    return MobilityTrace(tracks, bounds, duration)


def static_world(rsu_positions: list[tuple[float, float]], vehicle_positions: list[tuple[float, float]],
                 managers: int = 1, link: LinkModel | None = None, seed: int = 0,
                 crypto: str = "mock", bounds: tuple[float, float] | None = None,
                 duration: float = 60.0, cert_lifetime: float = 300.0,
                 populate: int | None = None) -> World:
    """Hand-placed RSUs and parked vehicles, for scripted scenarios and oracles.

    Only the first ``populate`` tracks get an enrolled vehicle; the rest are
    left for the caller to occupy.
    """
    if bounds is None:
        xs = [p[0] for p in rsu_positions + vehicle_positions] or [0.0]
        ys = [p[1] for p in rsu_positions + vehicle_positions] or [0.0]
        bounds = (max(xs) + 1.0, max(ys) + 1.0)
    link = link or LinkModel()
    world = World(link, static_trace(vehicle_positions, bounds, duration),
                  CryptoProvider(crypto, seed), seed, key_lifetime=cert_lifetime)
    mgrs = [world.add_manager() for _ in range(managers)]
    for mgr, block in zip(mgrs, partition_rsus(rsu_positions, managers)):
        for i in block:
            world.add_rsu(rsu_positions[i], mgr)
    n = len(vehicle_positions) if populate is None else populate
    for track_id in range(n):
        world.add_vehicle(track_id)
    return world


def corridor_world(rsus: int, spacing: float = 500.0, speed_kmh: float = 72.0,
                   link: LinkModel | None = None, seed: int = 0, crypto: str = "mock",
                   cert_lifetime: float = 300.0) -> World:
    """One manager, RSUs on a line, one vehicle driving from the first to the last.

    The vehicle parks under the last RSU, so after the drive its chain holds
    every RSU in order.
    """
    from .mobility import Track, Waypoint

    if rsus < 1:
        raise ConfigError("need at least one RSU")
    link = link or LinkModel(radio_range=0.6 * spacing)
    v = speed_kmh / 3.6
    length = (rsus - 1) * spacing
    t_end = length / v
    duration = t_end + 30.0
    track = Track([Waypoint(0.0, 0.0, 0.0, v), Waypoint(t_end, length, 0.0, 0.0),
                   Waypoint(duration, length, 0.0, 0.0)]) if rsus > 1 else \
        Track([Waypoint(0.0, 0.0, 0.0, 0.0), Waypoint(duration, 0.0, 0.0, 0.0)])
    trace = MobilityTrace({0: track}, (max(length, 1.0), 1.0), duration)
    world = World(link, trace, CryptoProvider(crypto, seed), seed, key_lifetime=cert_lifetime)
    mgr = world.add_manager()
    for i in range(rsus):
        world.add_rsu((i * spacing, 0.0), mgr)
    world.add_vehicle(0)
    return world
