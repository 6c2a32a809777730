"""Entity state machines: vehicle (OBU), RSU, RSU manager and CA.

Handlers are synchronous: they take an inbound ``ProtocolMessage`` plus the
current simulation time and return the messages to transmit. Nothing in
here knows about delays, radio range or the event queue; ``netsim`` owns
delivery.

Handshake bodies (``E_x`` is a seal, ``||`` a length-prefixed field)::

    (1) V -> RSU    ELP || N1
    (2) RSU -> M    E_M-KU(E_RSU-KR(ELP || N1 || N2))
    (3) M -> CA     E_CA-KU(E_M-KR(ELP || N1 || N2 || N3))
    (4) CA -> M     E_M-KU(E_CA-KR(E_VAC(key || f(N1)) || N2 || N3 || expiry))
    (5) M -> RSU    E_RSU-KU(E_M-KR(E_VAC(key || f(N1)) || N2 || expiry))
    (6) RSU -> V    E_VAC(key || f(N1))

``key`` is the certificate: key material, issue time and lifetime.
"""

from __future__ import annotations

import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterable

from .codec import (
    NO_ID,
    Kind,
    ProtocolMessage,
    f64,
    from_opt_id,
    opt_id,
    pack_fields,
    read_f64,
    read_u32,
    read_u32_list,
    read_u64,
    u32,
    u32_list,
    u64,
    unpack_fields,
)
from .errors import CryptoError, MalformedMessage, NoInfrastructure
from .identity import (
    CryptoProvider,
    Ecn,
    Elp,
    KeyPair,
    NonceLedger,
    SessionKey,
    Vac,
    f_nonce,
    make_vac,
)

log = logging.getLogger(__name__)

BROADCAST = NO_ID


class EventKind(str, Enum):
    BAD_SEAL = "BadSeal"
    REPLAY_OR_FORGERY = "ReplayOrForgery"
    STALE = "Stale"
    NOT_FOR_ME = "NotForMe"


@dataclass(frozen=True)
class SecurityEvent:
    kind: EventKind
    entity: int
    time: float
    detail: str = ""


@dataclass(frozen=True)
class Refusal:
    reason: str  # "Blacklisted" | "UnknownVehicle"
    elp: bytes


@dataclass(frozen=True)
class Rejected:
    reason: str  # "Stale" | "NotForMe"


@dataclass(frozen=True)
class HandoffAck:
    status: str  # "ok" | "NoRecord"
    elp: bytes


class Scope(IntEnum):
    """Which RSUs a manager targets for a revocation."""

    CHAIN = 0   # RSUs on the vehicle's forwarding chain
    DOMAIN = 1  # every RSU of each manager the vehicle visited
    ALL = 2     # network-wide flood


class Delivery(IntEnum):
    FANOUT = 0      # manager sends to every target RSU in parallel
    SEQUENTIAL = 1  # manager sends to the first RSU, which relays along the chain


@dataclass
class Certificate:
    session_key: SessionKey
    issue_time: float
    lifetime: float
    subject_elp: bytes
    revoked: bool = False

    @property
    def expiry(self) -> float:
        return self.issue_time + self.lifetime

    def valid(self, now: float) -> bool:
        return now < self.expiry and not self.revoked


def encode_certificate(key: SessionKey) -> bytes:
    return pack_fields(key.key_material, f64(key.issue_time), f64(key.lifetime))


class Directory:
    """Shared infrastructure knowledge plus the per-run bookkeeping sinks.

    Holds public keys, the static RSU to manager map, the message sequence
    counter, the security event log and drop counters.
    """

    def __init__(self, crypto: CryptoProvider, ca_id: int = 0):
        self.crypto = crypto
        self.ca_id = ca_id
        self.public_keys: dict[int, KeyPair] = {}
        self.rsu_manager: dict[int, int] = {}
        self.manager_ids: list[int] = []
        self.events: list[SecurityEvent] = []
        self.drops: Counter[str] = Counter()
        self._seq = 0

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def public(self, entity_id: int) -> KeyPair:
        try:
            return self.public_keys[entity_id]
        except KeyError:
            raise CryptoError(f"no public key for entity {entity_id}") from None

    def security_event(self, kind: EventKind, entity: int, now: float, detail: str = "") -> None:
        ev = SecurityEvent(kind, entity, now, detail)
        log.debug("security event %s", ev)
        self.events.append(ev)

    def drop(self, reason: str) -> None:
        self.drops[reason] += 1


class Node:
    def __init__(self, node_id: int, directory: Directory, rng: random.Random):
        self.id = node_id
        self.dir = directory
        self.nonces = NonceLedger(rng)

    @property
    def crypto(self) -> CryptoProvider:
        return self.dir.crypto

    def _msg(self, kind: Kind, dst: int, body: bytes, tag: int | None = None) -> ProtocolMessage:
        return ProtocolMessage(kind, self.id, dst, self.dir.next_seq(), body, tag)


class KeyedNode(Node):
    def __init__(self, node_id: int, directory: Directory, rng: random.Random):
        super().__init__(node_id, directory, rng)
        self.keypair = directory.crypto.generate_keypair(node_id, rng)
        directory.public_keys[node_id] = self.keypair.public()

    def seal_for(self, dst: int, payload: bytes) -> bytes:
        return self.crypto.asym_seal(self.keypair, self.dir.public(dst), payload)

    def open_from(self, m: ProtocolMessage, now: float, count: int | None = None) -> list[bytes] | None:
        """Open a double-sealed body; log and return None on failure."""
        try:
            plain = self.crypto.asym_open(self.keypair, self.dir.public(m.src), m.body)
            return unpack_fields(plain, count)
        except CryptoError as exc:
            self.dir.security_event(EventKind.BAD_SEAL, self.id, now, f"{m.kind.name} from {m.src}: {exc}")
        except MalformedMessage as exc:
            self.dir.security_event(EventKind.BAD_SEAL, self.id, now, f"{m.kind.name} from {m.src}: {exc}")
        self.dir.drop("bad_seal")
        return None


# ---------------------------------------------------------------------------
# Vehicle
# ---------------------------------------------------------------------------


class Vehicle(Node):
    def __init__(self, node_id: int, elp: Elp, ecn: Ecn, directory: Directory, rng: random.Random):
        super().__init__(node_id, directory, rng)
        self.elp = elp
        self.ecn = ecn
        self.vac: Vac = make_vac(elp, ecn)
        self.cert: Certificate | None = None
        self.pending_nonce: int | None = None
        self.pending_since: float | None = None
        self.pending_rsu: int | None = None
        self.local_blacklist: set[bytes] = set()
        self.seen_nonces: set[int] = set()
        self.last_rsu: int | None = None
        self.erased = False
        self.certified_count = 0

    def has_valid_cert(self, now: float) -> bool:
        return self.cert is not None and self.cert.valid(now)

    def request_key(self, nearest_rsu: int | None, now: float) -> ProtocolMessage:
        if nearest_rsu is None:
            raise NoInfrastructure(f"vehicle {self.id} has no RSU in range")
        n1 = self.nonces.fresh()
        self.pending_nonce = n1
        self.pending_since = now
        self.pending_rsu = nearest_rsu
        return self._msg(Kind.KEY_REQ1, nearest_rsu, pack_fields(self.elp.value, u64(n1)))

    def handle_keyresp(self, m: ProtocolMessage, now: float) -> Certificate | Rejected:
        try:
            plain = self.crypto.sym_open(self.vac, m.body)
            key_blob, fn1 = unpack_fields(plain, 2)
            material, issued, lifetime = unpack_fields(key_blob, 3)
            fn1 = read_u64(fn1)
            key = SessionKey(material, read_f64(lifetime), read_f64(issued))
        except (CryptoError, MalformedMessage, ValueError) as exc:
            self.dir.security_event(EventKind.NOT_FOR_ME, self.id, now, str(exc))
            return Rejected("NotForMe")
        if (self.pending_nonce is None or fn1 != f_nonce(self.pending_nonce)
                or fn1 in self.seen_nonces):
            self.dir.security_event(EventKind.STALE, self.id, now, "old or unsolicited key message")
            return Rejected("Stale")
        self.seen_nonces.add(fn1)
        self.cert = Certificate(key, key.issue_time, key.lifetime, self.elp.value)
        self.last_rsu = self.pending_rsu
        self.pending_nonce = self.pending_since = self.pending_rsu = None
        self.certified_count += 1
        return self.cert

    def handle_broadcast(self, m: ProtocolMessage, now: float) -> bool:
        try:
            elp_b, _rev = unpack_fields(self.crypto.verify(self.dir.public(m.src), m.body), 2)
        except (CryptoError, MalformedMessage) as exc:
            self.dir.security_event(EventKind.BAD_SEAL, self.id, now, f"broadcast: {exc}")
            return False
        if elp_b == self.elp.value:
            if self.cert is not None:
                self.cert.revoked = True
            self.cert = None
            self.erased = True
        else:
            self.local_blacklist.add(elp_b)
        return True


# ---------------------------------------------------------------------------
# RSU
# ---------------------------------------------------------------------------


@dataclass
class PassedEntry:
    cert_expiry: float
    next_rsu: int | None = None
    vehicle_id: int | None = None


class Rsu(KeyedNode):
    def __init__(self, node_id: int, position: tuple[float, float], manager_id: int,
                 directory: Directory, rng: random.Random, radio_range: float = 300.0):
        super().__init__(node_id, directory, rng)
        self.position = position
        self.manager_id = manager_id
        self.range = radio_range
        self.passed_vehicles: dict[bytes, PassedEntry] = {}
        self._pending: dict[int, tuple[bytes, int, int]] = {}
        directory.rsu_manager[node_id] = manager_id

    def _entry(self, elp: bytes, now: float) -> PassedEntry | None:
        e = self.passed_vehicles.get(elp)
        if e is not None and e.cert_expiry <= now:
            del self.passed_vehicles[elp]
            return None
        return e

    def handle_keyreq(self, m: ProtocolMessage, now: float = 0.0) -> ProtocolMessage | None:
        try:
            elp, n1 = unpack_fields(m.body, 2)
            Elp(elp)
            n1 = read_u64(n1)
        except (MalformedMessage, ValueError):
            self.dir.drop("malformed")
            return None
        n2 = self.nonces.fresh()
        self._pending[n2] = (elp, m.src, n1)
        body = self.seal_for(self.manager_id, pack_fields(elp, u64(n1), u64(n2)))
        return self._msg(Kind.KEY_REQ2, self.manager_id, body)

    def handle_keyresp(self, m: ProtocolMessage, now: float) -> ProtocolMessage | None:
        f = self.open_from(m, now, 3)
        if f is None:
            return None
        try:
            inner, n2, expiry = f[0], read_u64(f[1]), read_f64(f[2])
        except MalformedMessage:
            self.dir.drop("malformed")
            return None
        pending = self._pending.pop(n2, None)
        if pending is None:
            self.dir.security_event(EventKind.REPLAY_OR_FORGERY, self.id, now, "unknown N2")
            self.dir.drop("nonce_mismatch")
            return None
        elp, vehicle_id, _n1 = pending
        self.passed_vehicles[elp] = PassedEntry(expiry, None, vehicle_id)
        return self._msg(Kind.KEY_RESP6, vehicle_id, inner)

    def register_vehicle(self, elp: bytes, vehicle_id: int, cert_expiry: float,
                         prev_rsu: int | None, now: float) -> list[ProtocolMessage]:
        """A certified vehicle entered this RSU's range."""
        if cert_expiry <= now:
            return []
        self.passed_vehicles[elp] = PassedEntry(cert_expiry, None, vehicle_id)
        prev_mgr = self.dir.rsu_manager.get(prev_rsu) if prev_rsu is not None else None
        out = [self._msg(Kind.REGISTER, self.manager_id, self.seal_for(self.manager_id, pack_fields(
            elp, u32(self.id), u32(opt_id(prev_rsu)), u32(opt_id(prev_mgr)), f64(cert_expiry))))]
        if prev_rsu is not None and prev_rsu != self.id:
            out.append(self._msg(Kind.REGISTER, prev_rsu,
                                 self.seal_for(prev_rsu, pack_fields(elp, u32(self.id)))))
        return out

    def handle_next_pointer(self, m: ProtocolMessage, now: float) -> None:
        f = self.open_from(m, now, 2)
        if f is None:
            return
        e = self._entry(f[0], now)
        if e is not None:
            e.next_rsu = read_u32(f[1])

    def next_rsu_for(self, vehicle_id: int, now: float) -> int | None:
        for elp, e in self.passed_vehicles.items():
            if e.vehicle_id == vehicle_id and e.cert_expiry > now:
                return e.next_rsu
        return None

    def handle_revoke(self, m: ProtocolMessage, now: float) -> list[ProtocolMessage]:
        f = self.open_from(m, now, 3)
        if f is None:
            return []
        elp, rev_id, route = f[0], read_u64(f[1]), read_u32_list(f[2])
        self.passed_vehicles.pop(elp, None)
        out = [self._msg(Kind.REVOKE_BROADCAST, BROADCAST,
                         self.crypto.sign(self.keypair, pack_fields(elp, u64(rev_id))), rev_id)]
        if route:
            nxt = route[0]
            out.append(self._msg(Kind.REVOKE_TO_RSU, nxt, self.seal_for(
                nxt, pack_fields(elp, u64(rev_id), u32_list(route[1:]))), rev_id))
        return out

    def purge(self, now: float) -> None:
        for elp in [k for k, e in self.passed_vehicles.items() if e.cert_expiry <= now]:
            del self.passed_vehicles[elp]

    def receive(self, m: ProtocolMessage, now: float) -> list[ProtocolMessage]:
        if m.kind is Kind.KEY_REQ1:
            out = self.handle_keyreq(m, now)
        elif m.kind is Kind.KEY_RESP5:
            out = self.handle_keyresp(m, now)
        elif m.kind is Kind.REGISTER:
            self.handle_next_pointer(m, now)
            out = None
        elif m.kind is Kind.REVOKE_TO_RSU:
            return self.handle_revoke(m, now)
        else:
            self.dir.drop("unexpected_kind")
            out = None
        return [] if out is None else [out]


# ---------------------------------------------------------------------------
# RSU manager
# ---------------------------------------------------------------------------


@dataclass
class RegistryEntry:
    rsu_chain: list[int]
    cert_expiry: float
    next_manager: int | None = None


class Manager(KeyedNode):
    def __init__(self, node_id: int, directory: Directory, rng: random.Random):
        super().__init__(node_id, directory, rng)
        self.rsus: dict[int, tuple[float, float]] = {}
        self.vehicle_registry: dict[bytes, RegistryEntry] = {}
        self.known_managers: set[int] = set()
        self.handled_revocations: set[int] = set()
        self.handoff_log: list[HandoffAck] = []
        self._pending: dict[int, tuple[bytes, int, int]] = {}
        directory.manager_ids.append(node_id)

    def add_rsu(self, rsu: Rsu) -> None:
        self.rsus[rsu.id] = rsu.position

    def _entry(self, elp: bytes, now: float) -> RegistryEntry | None:
        e = self.vehicle_registry.get(elp)
        if e is not None and e.cert_expiry <= now:
            del self.vehicle_registry[elp]
            return None
        return e

    def handle_keyreq(self, m: ProtocolMessage, now: float = 0.0) -> ProtocolMessage | None:
        if m.src not in self.rsus:
            self.dir.drop("topology")
            return None
        f = self.open_from(m, now, 3)
        if f is None:
            return None
        elp, n1, n2 = f
        n3 = self.nonces.fresh()
        self._pending[n3] = (elp, m.src, read_u64(n2))
        body = self.seal_for(self.dir.ca_id, pack_fields(elp, n1, n2, u64(n3)))
        return self._msg(Kind.KEY_REQ3, self.dir.ca_id, body)

    def handle_keyresp(self, m: ProtocolMessage, now: float) -> ProtocolMessage | None:
        f = self.open_from(m, now, 4)
        if f is None:
            return None
        inner, n2, n3, expiry = f[0], read_u64(f[1]), read_u64(f[2]), read_f64(f[3])
        pending = self._pending.get(n3)
        if pending is None or pending[2] != n2:
            self.dir.security_event(EventKind.REPLAY_OR_FORGERY, self.id, now, "N3/N2 echo mismatch")
            self.dir.drop("nonce_mismatch")
            return None
        del self._pending[n3]
        elp, rsu_id, _ = pending
        self.vehicle_registry[elp] = RegistryEntry([rsu_id], expiry)
        body = self.seal_for(rsu_id, pack_fields(inner, u64(n2), f64(expiry)))
        return self._msg(Kind.KEY_RESP5, rsu_id, body)

    def handle_register(self, m: ProtocolMessage, now: float) -> list[ProtocolMessage]:
        if m.src not in self.rsus:
            self.dir.drop("topology")
            return []
        f = self.open_from(m, now, 5)
        if f is None:
            return []
        elp, rsu_id = f[0], read_u32(f[1])
        prev_mgr, expiry = from_opt_id(read_u32(f[3])), read_f64(f[4])
        if expiry <= now:
            return []
        e = self._entry(elp, now)
        if e is None:
            self.vehicle_registry[elp] = RegistryEntry([rsu_id], expiry)
        else:
            if rsu_id not in e.rsu_chain:
                e.rsu_chain.append(rsu_id)
            e.cert_expiry = max(e.cert_expiry, expiry)
        if prev_mgr is not None and prev_mgr != self.id:
            self.known_managers.add(prev_mgr)
            return [self.handoff(prev_mgr, elp, expiry)]
        return []

    def handoff(self, old_mgr: int, elp: bytes, cert_expiry: float) -> ProtocolMessage:
        """Tell the previous manager that ``elp`` is now under this one."""
        body = self.seal_for(old_mgr, pack_fields(elp, u32(self.id), f64(cert_expiry)))
        return self._msg(Kind.MANAGER_HANDOFF, old_mgr, body)

    def handle_handoff(self, m: ProtocolMessage, now: float) -> HandoffAck | None:
        f = self.open_from(m, now, 3)
        if f is None:
            return None
        elp, new_mgr = f[0], read_u32(f[1])
        self.known_managers.add(new_mgr)
        e = self._entry(elp, now)
        if e is None:
            ack = HandoffAck("NoRecord", elp)
            log.info("manager %d: handoff for unknown/expired vehicle %s", self.id, elp.hex())
        else:
            e.next_manager = new_mgr
            ack = HandoffAck("ok", elp)
        self.handoff_log.append(ack)
        return ack

    def route_revocation(self, m: ProtocolMessage, now: float) -> list[ProtocolMessage]:
        forward = m.kind is Kind.MANAGER_FORWARD
        f = self.open_from(m, now, 5 if forward else 4)
        if f is None:
            return []
        elp, rev_id = f[0], read_u64(f[1])
        scope, delivery = Scope(f[2][0]), Delivery(f[3][0])
        visited = read_u32_list(f[4]) if forward else []
        if rev_id in self.handled_revocations:
            return []
        self.handled_revocations.add(rev_id)

        if scope is Scope.ALL:
            targets = sorted(self.rsus)
            entry = None
        else:
            entry = self._entry(elp, now)
            if entry is None:
                return []
            targets = list(entry.rsu_chain) if scope is Scope.CHAIN else sorted(self.rsus)
            del self.vehicle_registry[elp]

        out: list[ProtocolMessage] = []
        if delivery is Delivery.SEQUENTIAL and targets:
            out.append(self._revoke_to_rsu(targets[0], elp, rev_id, targets[1:]))
        else:
            out.extend(self._revoke_to_rsu(r, elp, rev_id, []) for r in targets)
        if entry is not None and entry.next_manager is not None:
            nxt = entry.next_manager
            seen = visited + [self.id]
            if nxt not in seen:
                body = self.seal_for(nxt, pack_fields(elp, u64(rev_id), bytes([scope]),
                                                      bytes([delivery]), u32_list(seen)))
                out.append(self._msg(Kind.MANAGER_FORWARD, nxt, body, rev_id))
        return out

    def _revoke_to_rsu(self, rsu: int, elp: bytes, rev_id: int, route: Iterable[int]) -> ProtocolMessage:
        body = self.seal_for(rsu, pack_fields(elp, u64(rev_id), u32_list(route)))
        return self._msg(Kind.REVOKE_TO_RSU, rsu, body, rev_id)

    def purge(self, now: float) -> None:
        for elp in [k for k, e in self.vehicle_registry.items() if e.cert_expiry <= now]:
            del self.vehicle_registry[elp]

    def receive(self, m: ProtocolMessage, now: float) -> list[ProtocolMessage]:
        if m.kind is Kind.KEY_REQ2:
            out = self.handle_keyreq(m, now)
            return [] if out is None else [out]
        if m.kind is Kind.KEY_RESP4:
            out = self.handle_keyresp(m, now)
            return [] if out is None else [out]
        if m.kind is Kind.REGISTER:
            return self.handle_register(m, now)
        if m.kind is Kind.MANAGER_HANDOFF:
            self.handle_handoff(m, now)
            return []
        if m.kind in (Kind.REVOKE_TO_MANAGER, Kind.MANAGER_FORWARD):
            return self.route_revocation(m, now)
        self.dir.drop("unexpected_kind")
        return []


# ---------------------------------------------------------------------------
# Certificate authority
# ---------------------------------------------------------------------------


@dataclass
class IssuedEntry:
    manager_id: int
    cert_expiry: float


class CertificateAuthority(KeyedNode):
    def __init__(self, directory: Directory, rng: random.Random, key_lifetime: float = 300.0):
        super().__init__(directory.ca_id, directory, rng)
        self.key_rng = rng
        self.vac_directory: dict[bytes, Vac] = {}
        self.blacklist: set[bytes] = set()
        self.issued: dict[bytes, IssuedEntry] = {}
        self.key_lifetime_policy = key_lifetime
        self.issued_keys: dict[bytes, SessionKey] = {}
        self.refusals: list[Refusal] = []

    def enroll(self, elp: Elp, vac: Vac) -> None:
        self.vac_directory[elp.value] = vac

    def _issued(self, elp: bytes, now: float) -> IssuedEntry | None:
        e = self.issued.get(elp)
        if e is not None and e.cert_expiry <= now:
            del self.issued[elp]
            return None
        return e

    def handle_keyreq(self, m: ProtocolMessage, now: float) -> ProtocolMessage | Refusal | None:
        f = self.open_from(m, now, 4)
        if f is None:
            return None
        elp, n1, n2, n3 = f
        vac = self.vac_directory.get(elp)
        if vac is None:
            ref = Refusal("UnknownVehicle", elp)
        elif elp in self.blacklist:
            ref = Refusal("Blacklisted", elp)
        else:
            ref = None
        if ref is not None:
            self.refusals.append(ref)
            return ref
        key = SessionKey(self.key_rng.randbytes(16), self.key_lifetime_policy, now)
        expiry = now + key.lifetime
        self.issued[elp] = IssuedEntry(m.src, expiry)
        self.issued_keys[elp] = key
        inner = self.crypto.sym_seal(vac, pack_fields(encode_certificate(key), u64(f_nonce(read_u64(n1)))))
        body = self.seal_for(m.src, pack_fields(inner, n2, n3, f64(expiry)))
        return self._msg(Kind.KEY_RESP4, m.src, body)

    def initiate_revocation(self, elp: bytes, now: float, rev_id: int, scope: Scope = Scope.CHAIN,
                            delivery: Delivery = Delivery.FANOUT) -> list[ProtocolMessage]:
        """Blacklist ``elp`` and emit the revocation toward the stored manager(s)."""
        self.blacklist.add(elp)
        if scope is Scope.ALL:
            targets = list(self.dir.manager_ids)
        else:
            e = self._issued(elp, now)
            if e is None:
                return []
            targets = [e.manager_id]
        out = []
        for mgr in targets:
            body = self.seal_for(mgr, pack_fields(elp, u64(rev_id), bytes([scope]), bytes([delivery])))
            out.append(self._msg(Kind.REVOKE_TO_MANAGER, mgr, body, rev_id))
        return out

    def purge(self, now: float) -> None:
        for elp in [k for k, e in self.issued.items() if e.cert_expiry <= now]:
            del self.issued[elp]

    def receive(self, m: ProtocolMessage, now: float) -> list[ProtocolMessage]:
        if m.kind is Kind.KEY_REQ3:
            out = self.handle_keyreq(m, now)
            return [out] if isinstance(out, ProtocolMessage) else []
        self.dir.drop("unexpected_kind")
        return []


def dump_ledgers(entity: Node) -> str:
    """Structured text dump of an entity's ledgers, for assertions and debugging."""
    lines = [f"{type(entity).__name__} {entity.id}"]
    if isinstance(entity, Vehicle):
        lines.append(f"  elp={entity.elp.hex()}")
        if entity.cert is not None:
            lines.append(f"  cert.expiry={entity.cert.expiry:.6f} revoked={entity.cert.revoked}")
        else:
            lines.append("  cert=none")
        lines.append(f"  pending_nonce={'set' if entity.pending_nonce is not None else 'none'}")
        for elp in sorted(entity.local_blacklist):
            lines.append(f"  blacklist {elp.hex()}")
    elif isinstance(entity, Rsu):
        for elp in sorted(entity.passed_vehicles):
            e = entity.passed_vehicles[elp]
            lines.append(f"  passed {elp.hex()} expiry={e.cert_expiry:.6f} next_rsu={e.next_rsu}")
    elif isinstance(entity, Manager):
        for elp in sorted(entity.vehicle_registry):
            e = entity.vehicle_registry[elp]
            lines.append(f"  registry {elp.hex()} chain={e.rsu_chain} next_manager={e.next_manager} "
                         f"expiry={e.cert_expiry:.6f}")
    elif isinstance(entity, CertificateAuthority):
        for elp in sorted(entity.issued):
            e = entity.issued[elp]
            lines.append(f"  issued {elp.hex()} manager={e.manager_id} expiry={e.cert_expiry:.6f}")
        for elp in sorted(entity.blacklist):
            lines.append(f"  blacklist {elp.hex()}")
    return "\n".join(lines)
