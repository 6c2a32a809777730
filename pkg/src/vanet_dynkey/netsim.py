"""Deterministic discrete-event engine and the simulated VANET world.

Events are ordered by ``(fire_time, seq)``; ``seq`` is a per-world counter
so same-time events fire in scheduling order. Every source of randomness
is a ``random.Random`` seeded from the run seed, which makes a run a pure
function of (configuration, seed).

A sender's outputs leave after its processing delay and arrive after the
link delay of the hop. Radio hops (RSU <-> vehicle) are range-checked at
arrival time.
"""

from __future__ import annotations

import heapq
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .codec import Kind, ProtocolMessage
from .errors import ArgumentError, NoInfrastructure, SimulationError, TopologyError
from .identity import CryptoProvider, Ecn, Elp
from .mobility import MobilityTrace
from .protocol import (
    BROADCAST,
    CertificateAuthority,
    Directory,
    Manager,
    Rejected,
    Rsu,
    Vehicle,
)



@dataclass(frozen=True)
class LinkModel:
    t_ca: float = 0.010      # CA <-> manager, manager <-> manager
    t_man: float = 0.010     # manager <-> RSU
    t_rsu: float = 0.005     # RSU <-> RSU
    t_p_ca: float = 0.001
    t_p_man: float = 0.001
    t_p_rsu: float = 0.001
    radio_latency: float = 0.002
    radio_range: float = 300.0
    loss_rate: float = 0.0
    recursive_handover: bool = False

    def __post_init__(self) -> None:
        for name in ("t_ca", "t_man", "t_rsu", "t_p_ca", "t_p_man", "t_p_rsu", "radio_latency", "radio_range"):
            if getattr(self, name) < 0:
                raise ArgumentError(f"{name} must be >= 0")
        if not 0.0 <= self.loss_rate <= 1.0:
            raise ArgumentError("loss_rate must be in [0, 1]")


@dataclass(order=True)
class Event:
    fire_time: float
    seq: int
    action: Callable[..., Any] = field(compare=False)
    args: tuple = field(default=(), compare=False)
    label: str = field(default="", compare=False)


class EventQueue:
    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._seq = 0

    def push(self, fire_time: float, action: Callable[..., Any], args: tuple = (), label: str = "") -> int:
        self._seq += 1
        heapq.heappush(self._heap, Event(fire_time, self._seq, action, args, label))
        return self._seq

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def peek_time(self) -> float | None:
        return self._heap[0].fire_time if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


@dataclass
class RevocationLog:
    rev_id: int
    start: float
    sent: Counter = field(default_factory=Counter)
    in_flight: int = 0
    intended: set[int] = field(default_factory=set)
    warned: set[int] = field(default_factory=set)
    deliveries: int = 0
    last_delivery: float | None = None
    last_broadcast_end: float | None = None
    broadcasting_rsus: list[int] = field(default_factory=list)


Tap = Callable[["World", ProtocolMessage], "ProtocolMessage | None"]


class World:
    """Entities, clock, event queue, link model and metrics sink for one run."""

    def __init__(self, link: LinkModel | None = None, trace: MobilityTrace | None = None,
                 crypto: CryptoProvider | None = None, seed: int = 0, *,
                 key_lifetime: float = 300.0, sample_interval: float = 1.0,
                 request_timeout: float = 2.0, adjacency: float | None = None):
        self.link = link or LinkModel()
        self.trace = trace
        self.seed = seed
        self.clock = 0.0
        self.queue = EventQueue()
        self.crypto = crypto or CryptoProvider("mock", seed)
        self.dir = Directory(self.crypto)
        self._ids = 0
        self.ca = CertificateAuthority(self.dir, self._rng("ca"), key_lifetime)
        self.managers: dict[int, Manager] = {}
        self.rsus: dict[int, Rsu] = {}
        self.vehicles: dict[int, Vehicle] = {}
        self.vehicle_track: dict[int, int] = {}
        self.by_elp: dict[bytes, Vehicle] = {}
        self.sample_interval = sample_interval
        self.request_timeout = request_timeout
        self.adjacency = adjacency if adjacency is not None else 2.0 * self.link.radio_range
        self.loss_rng = self._rng("loss")
        self.stats: Counter[str] = Counter()
        self.sent_by_kind: Counter[Kind] = Counter()
        self.in_flight = 0
        self.taps: list[Tap] = []
        self.scripted: set[int] = set()  # vehicles the mobility driver leaves alone
        self.revocations: dict[int, RevocationLog] = {}
        self.key_requests = 0
        self._grid: dict[tuple[int, int], list[Rsu]] | None = None
        self._cell = max(self.link.radio_range, 1.0)

    # -- construction -------------------------------------------------------

    def _rng(self, name: str) -> random.Random:
        return random.Random(f"{self.seed}:{name}")

    def _next_id(self) -> int:
        self._ids += 1
        return self._ids

    def add_manager(self) -> Manager:
        mid = self._next_id()
        m = Manager(mid, self.dir, self._rng(f"mgr{mid}"))
        self.managers[mid] = m
        return m

    def add_rsu(self, position: tuple[float, float], manager: Manager) -> Rsu:
        rid = self._next_id()
        r = Rsu(rid, position, manager.id, self.dir, self._rng(f"rsu{rid}"), self.link.radio_range)
        self.rsus[rid] = r
        manager.add_rsu(r)
        self._grid = None
        return r

    def add_vehicle(self, track_id: int, elp: Elp | None = None, ecn: Ecn | None = None,
                    enroll: bool = True) -> Vehicle:
        vid = self._next_id()
        rng = self._rng(f"veh{vid}")
        elp = elp or Elp(rng.randbytes(8))
        ecn = ecn or Ecn(rng.randbytes(8))
        v = Vehicle(vid, elp, ecn, self.dir, rng)
        self.vehicles[vid] = v
        self.vehicle_track[vid] = track_id
        if enroll:
            self.by_elp[elp.value] = v
            self.ca.enroll(elp, v.vac)
        return v

    def entity(self, eid: int) -> Any:
        if eid == self.ca.id:
            return self.ca
        for table in (self.managers, self.rsus, self.vehicles):
            if eid in table:
                return table[eid]
        raise TopologyError(f"unknown entity {eid}")

    def entity_class(self, eid: int) -> str:
        if eid == self.ca.id:
            return "ca"
        if eid in self.managers:
            return "manager"
        if eid in self.rsus:
            return "rsu"
        if eid in self.vehicles:
            return "vehicle"
        raise TopologyError(f"unknown entity {eid}")

    # -- geometry -----------------------------------------------------------

    def vehicle_position(self, vid: int, t: float | None = None) -> tuple[float, float]:
        t = self.clock if t is None else t
        if self.trace is None:
            raise TopologyError("world has no mobility trace")
        track = self.trace.tracks[self.vehicle_track[vid]]
        return track.position_at(min(t, self.trace.duration))

    def _build_grid(self) -> dict[tuple[int, int], list[Rsu]]:
        grid: dict[tuple[int, int], list[Rsu]] = {}
        for r in self.rsus.values():
            key = (int(math.floor(r.position[0] / self._cell)), int(math.floor(r.position[1] / self._cell)))
            grid.setdefault(key, []).append(r)
        self._grid = grid
        return grid

    def rsus_in_range(self, pos: tuple[float, float]) -> list[Rsu]:
        """RSUs covering ``pos``, nearest first (ties by id)."""
        rng_ = self.link.radio_range
        if rng_ <= 0:
            return []
        grid = self._grid if self._grid is not None else self._build_grid()
        cx, cy = int(math.floor(pos[0] / self._cell)), int(math.floor(pos[1] / self._cell))
        found = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for r in grid.get((cx + dx, cy + dy), ()):
                    d = math.hypot(r.position[0] - pos[0], r.position[1] - pos[1])
                    if d <= rng_:
                        found.append((d, r.id, r))
        found.sort(key=lambda x: (x[0], x[1]))
        return [r for _, _, r in found]

    def nearest_rsu(self, pos: tuple[float, float]) -> Rsu | None:
        hits = self.rsus_in_range(pos)
        return hits[0] if hits else None

    def in_range(self, rsu: Rsu, vid: int, t: float) -> bool:
        if rsu.range <= 0:
            return False
        x, y = self.vehicle_position(vid, t)
        return math.hypot(rsu.position[0] - x, rsu.position[1] - y) <= rsu.range

    def vehicles_in_range(self, rsu: Rsu, t: float) -> list[int]:
        return [vid for vid in self.vehicles if self.in_range(rsu, vid, t)]

    # -- scheduling ---------------------------------------------------------

    def schedule(self, delay: float, action: Callable[..., Any], *args: Any, label: str = "") -> int:
        if delay < 0:
            raise ArgumentError("delay must be >= 0")
        return self.queue.push(self.clock + delay, action, args, label)

    def step(self) -> bool:
        if not len(self.queue):
            return False
        ev = self.queue.pop()
        if ev.fire_time < self.clock:
            raise SimulationError("causality violation", ev.seq)
        self.clock = ev.fire_time
        try:
            ev.action(*ev.args)
        except SimulationError:
            raise
        except Exception as exc:
            raise SimulationError(f"event {ev.seq} ({ev.label or ev.action.__name__}) failed: {exc!r}",
                                  ev.seq) from exc
        return True

    def run_until(self, t_end: float) -> None:
        if t_end < self.clock:
            raise ArgumentError("t_end is in the past")
        while len(self.queue) and self.queue.peek_time() <= t_end:  # type: ignore[operator]
            self.step()
        self.clock = t_end

    # -- transmission -------------------------------------------------------

    def processing_delay(self, eid: int) -> float:
        cls = self.entity_class(eid)
        return {"ca": self.link.t_p_ca, "manager": self.link.t_p_man,
                "rsu": self.link.t_p_rsu}.get(cls, 0.0)

    def hop_delay(self, src: int, dst: int) -> float:
        pair = frozenset((self.entity_class(src), self.entity_class(dst)))
        if pair in (frozenset({"ca", "manager"}), frozenset({"manager"})):
            return self.link.t_ca
        if pair == frozenset({"manager", "rsu"}):
            return self.link.t_man
        if pair == frozenset({"rsu"}):
            return self.link.t_rsu
        if pair == frozenset({"rsu", "vehicle"}):
            return self.link.radio_latency
        raise TopologyError(f"no link between {src} and {dst}")

    def transmit(self, msgs: Iterable[ProtocolMessage], extra_delay: float = 0.0) -> None:
        for msg in msgs:
            for tap in self.taps:
                msg = tap(self, msg)
                if msg is None:
                    break
            if msg is None:
                self.stats["intercepted"] += 1
                continue
            self._send(msg, self.processing_delay(msg.src) + extra_delay)

    def _count_send(self, msg: ProtocolMessage) -> None:
        self.stats["sent"] += 1
        self.sent_by_kind[msg.kind] += 1
        self.in_flight += 1
        if msg.tag is not None and msg.tag in self.revocations:
            rl = self.revocations[msg.tag]
            rl.sent[msg.kind] += 1
            rl.in_flight += 1

    def _settle(self, msg: ProtocolMessage, outcome: str) -> None:
        self.in_flight -= 1
        self.stats[outcome] += 1
        if msg.tag is not None and msg.tag in self.revocations:
            self.revocations[msg.tag].in_flight -= 1

    def _send(self, msg: ProtocolMessage, depart_delay: float, handover_depth: int = 0) -> None:
        if msg.dst == BROADCAST:
            self.broadcast_in_range(msg, depart_delay)
            return
        if msg.src not in self.rsus and msg.src not in self.managers and msg.src not in self.vehicles \
                and msg.src != self.ca.id:
            raise TopologyError(f"unknown sender {msg.src}")
        self.entity_class(msg.dst)
        self._count_send(msg)
        delay = depart_delay + self.hop_delay(msg.src, msg.dst)
        self.schedule(delay, self._arrive, msg, handover_depth, label=msg.kind.name)

    def unicast(self, msg: ProtocolMessage) -> None:
        self.transmit([msg])

    def inject(self, msg: ProtocolMessage, delay: float = 0.0) -> None:
        """Adversary path: deliver ``msg`` to ``msg.dst`` after ``delay``, bypassing taps."""
        self.stats["injected"] += 1
        self._count_send(msg)
        self.schedule(delay, self._arrive, msg, 0, True, label=f"inject:{msg.kind.name}")

    def _lost(self) -> bool:
        return self.link.loss_rate > 0 and self.loss_rng.random() < self.link.loss_rate

    def _arrive(self, msg: ProtocolMessage, handover_depth: int, injected: bool = False) -> None:
        now = self.clock
        if self._lost():
            self._settle(msg, "dropped")
            self.stats["lost"] += 1
            return
        src_cls = "attacker" if injected else self.entity_class(msg.src)
        dst_cls = self.entity_class(msg.dst)
        if not injected and {src_cls, dst_cls} == {"rsu", "vehicle"}:
            rsu = self.rsus[msg.src if src_cls == "rsu" else msg.dst]
            vid = msg.dst if dst_cls == "vehicle" else msg.src
            if not self.in_range(rsu, vid, now):
                self._settle(msg, "dropped")
                if dst_cls == "vehicle":
                    self._handover(rsu, msg, handover_depth)
                else:
                    self.stats["delivery_failure"] += 1
                return
        self._settle(msg, "delivered")
        self._dispatch(msg, now)

    def _handover(self, rsu: Rsu, msg: ProtocolMessage, depth: int) -> None:
        if depth >= 1 and not self.link.recursive_handover:
            self.stats["delivery_failure"] += 1
            return
        vid = msg.dst
        target = rsu.next_rsu_for(vid, self.clock)
        if target is None:
            pos = self.vehicle_position(vid)
            for cand in self.rsus_in_range(pos):
                if cand.id != rsu.id and math.dist(cand.position, rsu.position) <= self.adjacency:
                    target = cand.id
                    break
        if target is None or target == rsu.id:
            self.stats["delivery_failure"] += 1
            return
        self.stats["handover"] += 1
        relay = msg.with_route(rsu.id, target, self.dir.next_seq())
        self._count_send(relay)
        self.schedule(self.link.t_p_rsu + self.link.t_rsu, self._relay_arrive, relay, msg.dst, depth,
                      label="handover")

    def _relay_arrive(self, relay: ProtocolMessage, vid: int, depth: int) -> None:
        self._settle(relay, "delivered")
        final = relay.with_route(relay.dst, vid, self.dir.next_seq())
        self._count_send(final)
        self.schedule(self.link.t_p_rsu + self.link.radio_latency, self._arrive, final, depth + 1,
                      label="handover-final")

    def broadcast_in_range(self, msg: ProtocolMessage, depart_delay: float = 0.0) -> None:
        """One local transmission; receivers are decided at delivery time."""
        rsu = self.rsus[msg.src]
        self._count_send(msg)
        if msg.tag is not None and msg.tag in self.revocations:
            rl = self.revocations[msg.tag]
            rl.intended.update(self.vehicles_in_range(rsu, self.clock + depart_delay))
            rl.broadcasting_rsus.append(rsu.id)
        self.schedule(depart_delay + self.link.radio_latency, self._broadcast_arrive, msg, label="broadcast")

    def _broadcast_arrive(self, msg: ProtocolMessage) -> int:
        now = self.clock
        rsu = self.rsus[msg.src]
        self._settle(msg, "delivered")
        count = 0
        rl = self.revocations.get(msg.tag) if msg.tag is not None else None
        for vid in self.vehicles_in_range(rsu, now):
            if self._lost():
                self.stats["lost_receptions"] += 1
                continue
            if self.vehicles[vid].handle_broadcast(msg, now):
                count += 1
                if rl is not None:
                    rl.warned.add(vid)
                    rl.deliveries += 1
                    rl.last_delivery = now
        if rl is not None:
            rl.last_broadcast_end = now
        self.stats["receptions"] += count
        return count

    def _dispatch(self, msg: ProtocolMessage, now: float) -> None:
        target = self.entity(msg.dst)
        if isinstance(target, Vehicle):
            if msg.kind is Kind.KEY_RESP6:
                res = target.handle_keyresp(msg, now)
                if isinstance(res, Rejected) and res.reason == "Stale" and self._wants_key(target, now):
                    # Ignore the old message and ask for a fresh key.
                    self.request_key(target)
            else:
                self.dir.drop("unexpected_kind")
            return
        self.transmit(target.receive(msg, now))

    # -- vehicle driver -----------------------------------------------------

    def _wants_key(self, v: Vehicle, now: float) -> bool:
        if v.erased or v.has_valid_cert(now):
            return False
        return v.pending_since is None or now - v.pending_since >= self.request_timeout

    def request_key(self, v: Vehicle) -> bool:
        rsu = self.nearest_rsu(self.vehicle_position(v.id))
        try:
            msg = v.request_key(rsu.id if rsu else None, self.clock)
        except NoInfrastructure:
            self.stats["no_infrastructure"] += 1
            return False
        self.key_requests += 1
        self.transmit([msg])
        return True

    def start_mobility(self, until: float | None = None) -> None:
        end = until if until is not None else (self.trace.duration if self.trace else 0.0)
        self._sample_end = end
        self.schedule(0.0, self._sample, label="mobility")

    def _sample(self) -> None:
        now = self.clock
        for vid, v in self.vehicles.items():
            if vid not in self.scripted:
                self.drive_vehicle(v, now)
        if now + self.sample_interval <= self._sample_end + 1e-9:
            self.schedule(self.sample_interval, self._sample, label="mobility")

    def drive_vehicle(self, v: Vehicle, now: float) -> None:
        if v.erased:
            return
        rsu = self.nearest_rsu(self.vehicle_position(v.id, now))
        if not v.has_valid_cert(now):
            if v.cert is not None:
                v.cert = None
            if rsu is not None and self._wants_key(v, now):
                self.request_key(v)
            return
        if rsu is not None and rsu.id != v.last_rsu:
            msgs = rsu.register_vehicle(v.elp.value, v.id, v.cert.expiry, v.last_rsu, now)  # type: ignore[union-attr]
            v.last_rsu = rsu.id
            self.transmit(msgs)

    # -- revocation bookkeeping --------------------------------------------

    def open_revocation(self, rev_id: int) -> RevocationLog:
        rl = RevocationLog(rev_id, self.clock)
        self.revocations[rev_id] = rl
        return rl

    def purge(self) -> None:
        now = self.clock
        self.ca.purge(now)
        for m in self.managers.values():
            m.purge(now)
        for r in self.rsus.values():
            r.purge(now)

    @property
    def security_events(self):
        return self.dir.events
