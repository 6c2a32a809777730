"""Scripted attackers run against a small live world.

Threat model: the attacker sees every link, can drop, modify, replay and
inject messages, and knows all public keys and any ELP it has observed.
It never holds a VAC or a legitimate private key.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .codec import Kind, ProtocolMessage, pack_fields, u64
from .errors import CryptoError, MalformedMessage, ScriptError
from .identity import Ecn, SessionKey, Vac, f_nonce, make_vac
from .netsim import LinkModel, World
from .protocol import SecurityEvent, encode_certificate
from .scenario import static_world


class AttackKind(str, Enum):
    REPLAY = "replay"
    MITM = "mitm"
    SYBIL = "sybil"
    MASQUERADE_CA = "masquerade"
    MASQUERADE_VEHICLE = "masquerade-vehicle"


@dataclass
class AttackScenario:
    kind: AttackKind
    seed: int = 0
    crypto: str = "mock"
    knowledge: frozenset[str] = frozenset({"victim_elp", "captured_messages", "public_keys"})
    injection_point: str = ""


@dataclass
class AttackOutcome:
    kind: AttackKind
    succeeded: bool
    detection_events: list[SecurityEvent] = field(default_factory=list)
    injections: int = 0
    victim_certified: bool = False
    detail: str = ""

    def report(self) -> str:
        lines = [
            f"scenario={self.kind.value}",
            f"succeeded={str(self.succeeded).lower()}",
            f"injections={self.injections}",
            f"detections={len(self.detection_events)}",
            f"victim_certified={str(self.victim_certified).lower()}",
        ]
        for ev in self.detection_events:
            lines.append(f"event {ev.kind.value} entity={ev.entity} t={ev.time:.6f}")
        if self.detail:
            lines.append(f"detail {self.detail}")
        return "\n".join(lines)


RSU_POSITIONS = [(250.0, 100.0), (750.0, 100.0)]


def attack_world(seed: int, crypto: str = "mock", attacker: bool = False) -> World:
    """Two RSUs under one manager; a parked victim (and optional attacker OBU)."""
    rng = random.Random(f"{seed}:attack-layout")
    victim = (rng.uniform(60.0, 440.0), rng.uniform(0.0, 200.0))
    cars = [victim]
    if attacker:
        cars.append((rng.uniform(560.0, 940.0), rng.uniform(0.0, 200.0)))
    return static_world(RSU_POSITIONS, cars, managers=1, link=LinkModel(radio_range=300.0),
                        seed=seed, crypto=crypto, bounds=(1000.0, 200.0), populate=1)


def _victim(world: World):
    return world.vehicles[min(world.vehicles)]


def _certify(world: World, v, limit: float = 30.0) -> None:
    while not v.has_valid_cert(world.clock) and world.clock < limit:
        world.run_until(world.clock + 0.5)
    if not v.has_valid_cert(world.clock):
        raise ScriptError(f"vehicle {v.id} did not certify by t={limit}")


def _guess_vac(rng: random.Random, elp: bytes) -> Vac:
    return make_vac(elp, Ecn(rng.randbytes(8)))


def _forged_keyresp(world: World, rng: random.Random, elp: bytes, n1: int, src: int, dst: int):
    key = SessionKey(rng.randbytes(16), 300.0, world.clock)
    body = world.crypto.sym_seal(_guess_vac(rng, elp), pack_fields(encode_certificate(key), u64(f_nonce(n1))))
    return ProtocolMessage(Kind.KEY_RESP6, src, dst, world.dir.next_seq(), body), key


def _replay(world: World, rng: random.Random) -> AttackOutcome:
    v = _victim(world)
    captured: list[ProtocolMessage] = []

    def tap(w: World, m: ProtocolMessage):
        if m.kind is Kind.KEY_RESP6 and m.dst == v.id:
            captured.append(m)
        return m

    world.taps.append(tap)
    world.start_mobility()
    _certify(world, v)
    if not captured:
        raise ScriptError("no key message captured")
    old_key = v.cert.session_key.key_material  # type: ignore[union-attr]
    # The victim's certificate lapses; the attacker replays the old reply first.
    world.run_until(world.clock + rng.uniform(0.1, 0.9))
    v.cert = None
    n_before = len(world.dir.events)
    accepted: list[bool] = []
    world.inject(captured[rng.randrange(len(captured))], 0.0)
    world.schedule(0.0, lambda: accepted.append(v.cert is not None
                                                and v.cert.session_key.key_material == old_key))
    world.run_until(world.clock + 10.0)
    events = world.dir.events[n_before:]
    key_ok = v.cert is not None and v.cert.session_key == world.ca.issued_keys[v.elp.value]
    return AttackOutcome(AttackKind.REPLAY, any(accepted), list(events), 1,
                         key_ok and v.cert.session_key.key_material != old_key,  # type: ignore[union-attr]
                         "old key message replayed after certificate loss")


_MITM_KINDS = (Kind.KEY_REQ2, Kind.KEY_REQ3, Kind.KEY_RESP4, Kind.KEY_RESP5, Kind.KEY_RESP6)


def _mitm(world: World, rng: random.Random) -> AttackOutcome:
    v = _victim(world)
    target_kind = rng.choice(_MITM_KINDS)
    done: list[ProtocolMessage] = []

    def tap(w: World, m: ProtocolMessage):
        if done or m.kind is not target_kind:
            return m
        body = bytearray(m.body)
        bit = rng.randrange(len(body) * 8)
        body[bit // 8] ^= 1 << (bit % 8)
        forged = ProtocolMessage(m.kind, m.src, m.dst, m.seq, bytes(body), m.tag)
        done.append(forged)
        return forged

    world.taps.append(tap)
    world.start_mobility()
    world.run_until(1.0)
    if not done:
        raise ScriptError(f"no {target_kind.name} seen to tamper with")
    events = list(world.dir.events)
    _certify(world, v)
    # The vehicle holds whatever key the CA most recently issued for it, never a tampered one.
    ok = v.cert.session_key == world.ca.issued_keys[v.elp.value]  # type: ignore[union-attr]
    return AttackOutcome(AttackKind.MITM, not ok, events, 1, ok,
                         f"bit flipped in {target_kind.name}")


def _sybil(world: World, rng: random.Random) -> AttackOutcome:
    v = _victim(world)
    # The attacker OBU presents the victim's ELP with its own chassis number.
    attacker = world.add_vehicle(1, elp=v.elp, ecn=Ecn(rng.randbytes(8)), enroll=False)
    world.scripted.add(attacker.id)
    world.request_key(attacker)
    world.run_until(1.0)
    events = [e for e in world.dir.events if e.entity == attacker.id]
    stolen = attacker.cert is not None
    world.start_mobility()
    _certify(world, v)
    ok = v.cert.session_key == world.ca.issued_keys[v.elp.value]  # type: ignore[union-attr]
    return AttackOutcome(AttackKind.SYBIL, stolen, events, 1, ok,
                         "key requested under a stolen ELP")


def _masquerade_ca(world: World, rng: random.Random) -> AttackOutcome:
    v = _victim(world)
    injected: list[SessionKey] = []

    def tap(w: World, m: ProtocolMessage):
        # Message (1) is in the clear: read N1 and race a forged reply to the victim.
        if m.kind is Kind.KEY_REQ1 and m.src == v.id and not injected:
            n1 = int.from_bytes(m.body[-8:], "big")
            forged, key = _forged_keyresp(w, rng, v.elp.value, n1, m.dst, v.id)
            injected.append(key)
            w.inject(forged, rng.uniform(0.0, 0.005))
        return m

    world.taps.append(tap)
    world.start_mobility()
    world.run_until(1.0)
    if not injected:
        raise ScriptError("victim never sent a key request")
    events = list(world.dir.events)
    _certify(world, v)
    fooled = v.cert.session_key.key_material == injected[0].key_material  # type: ignore[union-attr]
    ok = v.cert.session_key == world.ca.issued_keys[v.elp.value]  # type: ignore[union-attr]
    return AttackOutcome(AttackKind.MASQUERADE_CA, fooled, events, 1, ok,
                         "forged key message under a guessed VAC")


def _masquerade_vehicle(world: World, rng: random.Random) -> AttackOutcome:
    v = _victim(world)
    world.start_mobility()
    _certify(world, v)
    replies: list[ProtocolMessage] = []

    def tap(w: World, m: ProtocolMessage):
        if m.kind is Kind.KEY_RESP6 and m.dst == v.id:
            replies.append(m)
        return m

    world.taps.append(tap)
    rsu = world.nearest_rsu(world.vehicle_position(v.id))
    if rsu is None:
        raise ScriptError("victim out of coverage")
    n_before = len(world.dir.events)
    req = ProtocolMessage(Kind.KEY_REQ1, v.id, rsu.id, world.dir.next_seq(),
                          pack_fields(v.elp.value, u64(rng.getrandbits(64))))
    world.inject(req, 0.0)
    world.run_until(world.clock + 1.0)
    if not replies:
        raise ScriptError("request on the victim's behalf got no reply")
    opened = False
    for m in replies:
        for _ in range(64):
            try:
                world.crypto.sym_open(_guess_vac(rng, v.elp.value), m.body)
                opened = True
            except (CryptoError, MalformedMessage):
                pass
    events = world.dir.events[n_before:]
    ok = v.has_valid_cert(world.clock)
    return AttackOutcome(AttackKind.MASQUERADE_VEHICLE, opened, list(events), 1, ok,
                         "key requested on the victim's behalf")


_DRIVERS = {
    AttackKind.REPLAY: _replay,
    AttackKind.MITM: _mitm,
    AttackKind.SYBIL: _sybil,
    AttackKind.MASQUERADE_CA: _masquerade_ca,
    AttackKind.MASQUERADE_VEHICLE: _masquerade_vehicle,
}


def run_attack(scenario: AttackScenario, world: World | None = None) -> AttackOutcome:
    world = world or attack_world(scenario.seed, scenario.crypto, scenario.kind is AttackKind.SYBIL)
    rng = random.Random(f"{scenario.seed}:attacker:{scenario.kind.value}")
    return _DRIVERS[scenario.kind](world, rng)


def run_suite(kinds, replications: int = 100, seed: int = 0, crypto: str = "mock") -> dict[AttackKind, list[AttackOutcome]]:
    out: dict[AttackKind, list[AttackOutcome]] = {}
    for kind in kinds:
        kind = AttackKind(kind)
        out[kind] = [run_attack(AttackScenario(kind, seed * 1000 + i, crypto)) for i in range(replications)]
    return out
