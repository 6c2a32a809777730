"""Vehicle identities, nonces and the pluggable crypto provider.

Two provider modes share one contract:

``mock``
    XOR with a SHAKE-256 keystream plus a keyed 32-bit BLAKE2b checksum.
    Cheap enough for large sweeps and still detects tampering and key
    mismatch.
``real``
    AES-GCM for the VAC layer; a static-static X25519 box (AES-GCM under
    the pair's shared secret) for the public-key layer; Ed25519 for local
    broadcasts.

Every random choice a provider makes comes from a seeded ``random.Random``
so whole runs stay reproducible in either mode.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Any, Literal

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .errors import AuthenticationFailure, ConfidentialityFailure, InvalidIdentity

ID_WIDTH = 8
NONCE_MASK = (1 << 64) - 1
_TAG_LEN = 4
_FP_LEN = 8
_VERIFY_MEMO = 4096

CryptoMode = Literal["mock", "real"]


@dataclass(frozen=True)
class Elp:
    """Electronic license plate, the public vehicle identifier."""

    value: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.value, bytes) or len(self.value) != ID_WIDTH:
            raise InvalidIdentity(f"ELP must be {ID_WIDTH} bytes")

    @classmethod
    def from_int(cls, n: int) -> "Elp":
        return cls(n.to_bytes(ID_WIDTH, "big"))

    def hex(self) -> str:
        return self.value.hex()


@dataclass(frozen=True)
class Ecn:
    """Electronic chassis number. Never put on the wire."""

    value: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.value, bytes) or len(self.value) != ID_WIDTH:
            raise InvalidIdentity(f"ECN must be {ID_WIDTH} bytes")

    def __repr__(self) -> str:
        return "Ecn(<redacted>)"


@dataclass(frozen=True)
class Vac:
    value: bytes

    def __post_init__(self) -> None:
        if len(self.value) != 2 * ID_WIDTH:
            raise InvalidIdentity("VAC must be 16 bytes")

    def __repr__(self) -> str:
        return "Vac(<redacted>)"


def make_vac(elp: Elp | bytes, ecn: Ecn | bytes) -> Vac:
    """Compose the vehicle authentication code as ``ELP || ECN``."""
    e = elp.value if isinstance(elp, Elp) else elp
    c = ecn.value if isinstance(ecn, Ecn) else ecn
    if len(e) != ID_WIDTH or len(c) != ID_WIDTH:
        raise InvalidIdentity(f"ELP and ECN must both be {ID_WIDTH} bytes")
    return Vac(bytes(e) + bytes(c))


def f_nonce(n: int) -> int:
    """The agreed response function applied to a challenge nonce."""
    return (n + 1) & NONCE_MASK


class NonceLedger:
    """Per-entity nonce source that never repeats a value within a run."""

    def __init__(self, rng: random.Random):
        self._rng = rng
        self._issued: set[int] = set()

    def fresh(self) -> int:
        while True:
            n = self._rng.getrandbits(64)
            if n not in self._issued:
                self._issued.add(n)
                return n

    def __len__(self) -> int:
        return len(self._issued)


def fresh_nonce(ledger: NonceLedger) -> int:
    return ledger.fresh()


@dataclass(frozen=True)
class SessionKey:
    key_material: bytes
    lifetime: float
    issue_time: float

    def __post_init__(self) -> None:
        if self.lifetime <= 0:
            raise ValueError("lifetime must be positive")

    def expired(self, now: float) -> bool:
        return now >= self.issue_time + self.lifetime


@dataclass(frozen=True)
class KeyPair:
    """Opaque key handles. ``private_key`` is None for a public-only view."""

    public_key: Any
    private_key: Any
    owner_id: int
    fingerprint: bytes = field(default=b"", compare=False)

    def public(self) -> "KeyPair":
        return KeyPair(self.public_key, None, self.owner_id, self.fingerprint)

    @property
    def has_private(self) -> bool:
        return self.private_key is not None


def _shake(key: bytes, n: int) -> bytes:
    return hashlib.shake_256(key).digest(n)


def _xor(data: bytes, stream: bytes) -> bytes:
    n = len(data)
    return (int.from_bytes(data, "little") ^ int.from_bytes(stream, "little")).to_bytes(n, "little")


def _tag(key: bytes, data: bytes) -> bytes:
    return hashlib.blake2b(data, key=key[:64], digest_size=_TAG_LEN).digest()


def _raw_pub(k: Ed25519PublicKey | X25519PublicKey) -> bytes:
    return k.public_bytes(Encoding.Raw, PublicFormat.Raw)


class CryptoProvider:
    """Seal/open primitives used by every protocol entity.

    ``sym_*`` is the VAC layer of message (6). ``asym_*`` is the
    sender-authenticated, recipient-confidential seal of messages (2)-(5). ``sign``/``verify``
    authenticate local broadcasts that have no single recipient.
    """

    def __init__(self, mode: CryptoMode = "mock", seed: int | str = 0):
        if mode not in ("mock", "real"):
            raise ValueError(f"unknown crypto mode {mode!r}")
        self.mode = mode
        self._rng = random.Random(f"crypto:{seed}")
        self._boxes: dict[tuple[bytes, bytes], AESGCM] = {}
        self._secrets: dict[tuple[bytes, bytes], bytes] = {}
        # Every receiver of a broadcast checks the same signature; remember good ones.
        self._verified: set[tuple[bytes, bytes]] = set()

    # -- keys ---------------------------------------------------------------

    def generate_keypair(self, owner_id: int, rng: random.Random | None = None) -> KeyPair:
        rng = rng or self._rng
        if self.mode == "mock":
            secret = rng.randbytes(32)
            pub = hashlib.sha256(b"pub" + secret).digest()
            return KeyPair(pub, secret, owner_id, pub[:_FP_LEN])
        sign_sk = Ed25519PrivateKey.from_private_bytes(rng.randbytes(32))
        box_sk = X25519PrivateKey.from_private_bytes(rng.randbytes(32))
        pub = (sign_sk.public_key(), box_sk.public_key())
        fp = hashlib.sha256(_raw_pub(pub[0]) + _raw_pub(pub[1])).digest()[:_FP_LEN]
        return KeyPair(pub, (sign_sk, box_sk), owner_id, fp)

    def random_bytes(self, n: int) -> bytes:
        return self._rng.randbytes(n)

    # -- VAC layer ----------------------------------------------------------

    def sym_seal(self, vac: Vac, payload: bytes) -> bytes:
        if not payload:
            raise ValueError("payload must be non-empty")
        if self.mode == "mock":
            k = hashlib.sha256(b"vac" + vac.value).digest()
            body = payload + _tag(k, payload)
            return _xor(body, _shake(k, len(body)))
        key = hashlib.sha256(vac.value).digest()
        nonce = self._rng.randbytes(12)
        return nonce + AESGCM(key).encrypt(nonce, payload, None)

    def sym_open(self, vac: Vac, sealed: bytes) -> bytes:
        if self.mode == "mock":
            if len(sealed) <= _TAG_LEN:
                raise AuthenticationFailure("sealed blob too short")
            k = hashlib.sha256(b"vac" + vac.value).digest()
            body = _xor(sealed, _shake(k, len(sealed)))
            payload, tag = body[:-_TAG_LEN], body[-_TAG_LEN:]
            if _tag(k, payload) != tag:
                raise AuthenticationFailure("VAC seal check failed")
            return payload
        if len(sealed) < 12 + 16:
            raise AuthenticationFailure("sealed blob too short")
        key = hashlib.sha256(vac.value).digest()
        try:
            return AESGCM(key).decrypt(sealed[:12], sealed[12:], None)
        except InvalidTag as exc:
            raise AuthenticationFailure("VAC seal check failed") from exc

    # -- signature layer ----------------------------------------------------

    def sign(self, signer: KeyPair, payload: bytes) -> bytes:
        if not signer.has_private:
            raise ValueError("signing needs a private key")
        if self.mode == "mock":
            return payload + _tag(signer.public_key, payload)
        return payload + signer.private_key[0].sign(payload)

    def verify(self, signer_public: KeyPair, signed: bytes) -> bytes:
        if self.mode == "mock":
            payload, tag = signed[:-_TAG_LEN], signed[-_TAG_LEN:]
            if len(signed) < _TAG_LEN or _tag(signer_public.public_key, payload) != tag:
                raise AuthenticationFailure("signature check failed")
            return payload
        payload, sig = signed[:-64], signed[-64:]
        memo = (signer_public.fingerprint, signed)
        if memo in self._verified:
            return payload
        try:
            signer_public.public_key[0].verify(sig, payload)
        except (InvalidSignature, ValueError) as exc:
            raise AuthenticationFailure("signature check failed") from exc
        if len(self._verified) >= _VERIFY_MEMO:
            self._verified.clear()
        self._verified.add(memo)
        return payload

    # -- public-key layer ---------------------------------------------------

    def _pair_box(self, own: X25519PrivateKey, peer: X25519PublicKey, sender_fp: bytes,
                  recipient_fp: bytes) -> AESGCM:
        """Static-static X25519 box for one (sender, recipient) direction, cached."""
        ck = (sender_fp, recipient_fp)
        box = self._boxes.get(ck)
        if box is None:
            # Both directions share one exchange; the key itself is directional.
            pair = (min(ck), max(ck))
            secret = self._secrets.get(pair)
            if secret is None:
                secret = self._secrets[pair] = own.exchange(peer)
            box = AESGCM(hashlib.sha256(secret + sender_fp + recipient_fp).digest())
            self._boxes[ck] = box
        return box

    def asym_seal(self, sender_private: KeyPair, recipient_public: KeyPair, payload: bytes) -> bytes:
        """``E_recipient-KU(E_sender-KR(payload))``.

        In real mode the static-static X25519 box key binds both parties, so
        a valid GCM tag already proves who sealed it and no inner signature
        is needed.
        """
        fp = recipient_public.fingerprint
        if self.mode == "mock":
            signed = self.sign(sender_private, payload)
            ks = _shake(b"box" + recipient_public.public_key, len(signed))
            return fp + _xor(signed, ks)
        if not sender_private.has_private:
            raise ValueError("sealing needs the sender's private key")
        box = self._pair_box(sender_private.private_key[1], recipient_public.public_key[1],
                             sender_private.fingerprint, fp)
        nonce = self._rng.randbytes(12)
        return fp + sender_private.fingerprint + nonce + box.encrypt(nonce, payload, fp)

    def asym_open(self, recipient_private: KeyPair, sender_public: KeyPair, sealed: bytes) -> bytes:
        fp = sealed[:_FP_LEN]
        if fp != recipient_private.fingerprint:
            raise ConfidentialityFailure("sealed for a different recipient")
        if self.mode == "mock":
            ks = _shake(b"box" + recipient_private.public_key, len(sealed) - _FP_LEN)
            return self.verify(sender_public, _xor(sealed[_FP_LEN:], ks))
        if len(sealed) < 2 * _FP_LEN + 12 + 16:
            raise AuthenticationFailure("sealed blob too short")
        if sealed[_FP_LEN:2 * _FP_LEN] != sender_public.fingerprint:
            raise AuthenticationFailure("sealed by a different sender")
        box = self._pair_box(recipient_private.private_key[1], sender_public.public_key[1],
                             sender_public.fingerprint, fp)
        nonce = sealed[2 * _FP_LEN:2 * _FP_LEN + 12]
        try:
            return box.decrypt(nonce, sealed[2 * _FP_LEN + 12:], fp)
        except InvalidTag as exc:
            raise AuthenticationFailure("envelope check failed") from exc
