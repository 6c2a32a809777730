"""Revocation strategies and per-run metric extraction.

DYN follows the ledgers: CA -> issuing manager -> the RSUs the vehicle
passed (plus any managers it moved on to). BRD floods: CA -> every
manager -> every RSU -> local broadcast everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .codec import Kind
from .netsim import World
from .protocol import Delivery, Scope


class SchemeKind(str, Enum):
    DYN = "DYN"
    BRD = "BRD"


@dataclass(frozen=True)
class RevocationScheme:
    kind: SchemeKind
    scope: Scope
    delivery: Delivery = Delivery.FANOUT

    @classmethod
    def dyn(cls, delivery: Delivery = Delivery.FANOUT, scope: Scope = Scope.CHAIN) -> "RevocationScheme":
        return cls(SchemeKind.DYN, scope, delivery)

    @classmethod
    def brd(cls) -> "RevocationScheme":
        return cls(SchemeKind.BRD, Scope.ALL, Delivery.FANOUT)

    @property
    def name(self) -> str:
        return self.kind.value


# Additional strategies (e.g. a cooperative message-authentication scheme)
# register a factory here; none ships beyond DYN and BRD.
SCHEME_PLUGINS: dict[str, Callable[..., RevocationScheme]] = {
    "DYN": RevocationScheme.dyn,
    "BRD": RevocationScheme.brd,
}


def register_scheme(name: str, factory: Callable[..., RevocationScheme]) -> None:
    if name in SCHEME_PLUGINS:
        raise ValueError(f"scheme {name!r} already registered")
    SCHEME_PLUGINS[name] = factory


def make_scheme(name: str, **kwargs) -> RevocationScheme:
    try:
        return SCHEME_PLUGINS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown scheme {name!r}") from None


@dataclass
class RevocationMetrics:
    scheme: str
    messages_sent: int = 0
    rsu_targets: int = 0
    vehicles_warned: int = 0
    intended_recipients: int = 0
    t_e2e_measured: float = 0.0
    chain_lengths: list[int] = field(default_factory=list)
    manager_receivers: int = 0
    tracking_messages: int = 0
    by_kind: dict[str, int] = field(default_factory=dict)

    @property
    def delivery_ratio(self) -> float:
        if self.intended_recipients == 0:
            return 0.0
        return self.vehicles_warned / self.intended_recipients


def _chains(world: World, elp: bytes, now: float) -> list[list[int]]:
    out = []
    for mid in sorted(world.managers):
        e = world.managers[mid]._entry(elp, now)
        if e is not None:
            out.append(list(e.rsu_chain))
    return out


def live_vehicles(world: World) -> list[int]:
    return [vid for vid, v in world.vehicles.items() if not v.erased]


def intended_recipients(world: World, scheme: RevocationScheme, target_elp: bytes, now: float) -> int:
    """Vehicles that should get the warning if it were broadcast at ``now``."""
    if not world.vehicles:
        return 0
    if scheme.kind is SchemeKind.BRD:
        return len(live_vehicles(world))
    rsus: set[int] = set()
    if scheme.scope is Scope.CHAIN:
        for chain in _chains(world, target_elp, now):
            rsus.update(chain)
    else:
        for mid in sorted(world.managers):
            if world.managers[mid]._entry(target_elp, now) is not None:
                rsus.update(world.managers[mid].rsus)
    live = set(live_vehicles(world))
    hit = set()
    for rid in sorted(rsus):
        hit.update(v for v in world.vehicles_in_range(world.rsus[rid], now) if v in live)
    return len(hit)


def rsus_in_disc(world: World, centre: tuple[float, float], r: float) -> int:
    return sum(1 for rsu in world.rsus.values() if math.dist(rsu.position, centre) <= r)


def run_revocation(scheme: RevocationScheme, world: World, target_elp: bytes,
                   now: float | None = None) -> RevocationMetrics:
    """Initiate one revocation at ``now`` and run until none of its messages is in flight."""
    if now is not None and now > world.clock:
        world.run_until(now)
    now = world.clock
    chains = _chains(world, target_elp, now)
    rev_id = len(world.revocations) + 1
    rl = world.open_revocation(rev_id)
    if scheme.kind is SchemeKind.BRD:
        # Every live vehicle is intended, not only those inside coverage.
        rl.intended.update(live_vehicles(world))
    world.transmit(world.ca.initiate_revocation(target_elp, now, rev_id, scheme.scope, scheme.delivery))
    while rl.in_flight > 0 and world.step():
        pass
    end = rl.last_delivery if rl.last_delivery is not None else rl.last_broadcast_end
    return RevocationMetrics(
        scheme=scheme.name,
        messages_sent=sum(rl.sent.values()),
        rsu_targets=rl.sent[Kind.REVOKE_TO_RSU],
        vehicles_warned=len(rl.warned),
        intended_recipients=len(rl.intended | rl.warned),
        t_e2e_measured=(end - rl.start) if end is not None else 0.0,
        chain_lengths=[len(c) for c in chains],
        manager_receivers=rl.sent[Kind.REVOKE_TO_MANAGER] + rl.sent[Kind.MANAGER_FORWARD],
        tracking_messages=world.sent_by_kind[Kind.MANAGER_HANDOFF],
        by_kind={k.name: rl.sent[k] for k in sorted(rl.sent)},
    )
