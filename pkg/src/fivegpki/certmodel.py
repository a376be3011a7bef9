"""5GCert data model: canonical encoding, chain validation, wildcard names, CRLs.

Every length-variable field of a certificate body is prefixed with a
big-endian u32, in the fixed order

    subject, subject_public_key, issuer, serial, not_before, not_after, embedded_chain

so the encoding is injective and a decoded certificate re-encodes bit for bit.
Time is a logical tick; a certificate is usable for ``not_before <= now < not_after``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable

from . import crypto
from ._wire import DecodeError, Reader, armor, dearmor, lp, u32, u64
from .crypto import KeyPair, PublicKey, Signature

CERT_ARMOR = "5GCERT"
CRL_ARMOR = "5GCRL"


class EntityKind(enum.Enum):
    NF = "NF"
    SCP = "SCP"
    NRF = "NRF"
    PCF = "PCF"
    SEPP = "SEPP"
    IPX = "IPX"
    INTRA_PLMN_CA = "INTRA_PLMN_CA"
    PLMN_CA = "PLMN_CA"
    INTER_PLMN_CA = "INTER_PLMN_CA"
    ROOT_CA = "ROOT_CA"
    CT_LOG = "CT_LOG"


CA_KINDS = frozenset({EntityKind.INTRA_PLMN_CA, EntityKind.PLMN_CA,
                      EntityKind.INTER_PLMN_CA, EntityKind.ROOT_CA})


class MalformedPattern(ValueError):
    pass


def check_label(kind: EntityKind, label: str) -> None:
    """Raise MalformedPattern unless ``label`` obeys the wildcard rules for ``kind``."""
    if "*" not in label:
        return
    if kind is not EntityKind.SEPP:
        raise MalformedPattern(f"wildcard not allowed in {kind.value} label {label!r}")
    _check_pattern(label)


def _check_pattern(pattern: str) -> None:
    parts = pattern.split(".")
    if parts[0] == "*" and len(parts) > 1 and "*" not in ".".join(parts[1:]) and all(parts[1:]):
        return
    if "*" in pattern:
        raise MalformedPattern(f"'*' must be the whole leftmost label: {pattern!r}")


@dataclass(frozen=True)
class EntityName:
    plmn_id: str
    kind: EntityKind
    label: str

    def __post_init__(self):
        check_label(self.kind, self.label)

    def encode(self) -> bytes:
        return lp(self.plmn_id.encode()) + lp(self.kind.value.encode()) + lp(self.label.encode())

    @classmethod
    def decode(cls, raw: bytes) -> "EntityName":
        r = Reader(raw)
        try:
            plmn, kind, label = r.lp().decode(), r.lp().decode(), r.lp().decode()
            r.finish()
            return cls(plmn, EntityKind(kind), label)
        except (UnicodeDecodeError, ValueError) as exc:
            raise DecodeError(f"bad entity name: {exc}") from exc

    def __str__(self) -> str:
        return f"{self.plmn_id}/{self.kind.value}/{self.label}"

    @classmethod
    def parse(cls, text: str) -> "EntityName":
        plmn, kind, label = text.split("/", 2)
        return cls(plmn, EntityKind(kind), label)


@dataclass(frozen=True)
class FiveGCert:
    subject: EntityName
    subject_public_key: PublicKey
    issuer: EntityName
    serial: int
    not_before: int
    not_after: int
    embedded_chain: tuple["FiveGCert", ...] = ()
    signature: Signature | None = None

    def body(self) -> bytes:
        return canonical_encode(self)

    def encode(self) -> bytes:
        if self.signature is None:
            raise ValueError("certificate is unsigned")
        return lp(self.body()) + lp(self.signature.encode())

    def digest(self) -> bytes:
        return crypto.H(self.encode())

    @property
    def chain_depth(self) -> int:
        return len(self.embedded_chain)


def canonical_encode(cert: FiveGCert) -> bytes:
    """Signed bytes of ``cert``: every field except the signature."""
    chain = b"".join(lp(c.encode()) for c in cert.embedded_chain)
    return b"".join([
        lp(cert.subject.encode()),
        lp(cert.subject_public_key.encode()),
        lp(cert.issuer.encode()),
        lp(u64(cert.serial)),
        lp(u64(cert.not_before)),
        lp(u64(cert.not_after)),
        lp(chain),
    ])


def _decode_u64(raw: bytes) -> int:
    if len(raw) != 8:
        raise DecodeError("expected 8-byte integer")
    return int.from_bytes(raw, "big")


def decode_body(raw: bytes) -> FiveGCert:
    r = Reader(raw)
    subject = EntityName.decode(r.lp())
    pub = PublicKey.decode(r.lp())
    issuer = EntityName.decode(r.lp())
    serial = _decode_u64(r.lp())
    nb = _decode_u64(r.lp())
    na = _decode_u64(r.lp())
    cr = Reader(r.lp())
    r.finish()
    chain = []
    while not cr.done():
        chain.append(decode_cert(cr.lp()))
    return FiveGCert(subject, pub, issuer, serial, nb, na, tuple(chain))


def decode_cert(raw: bytes) -> FiveGCert:
    try:
        r = Reader(raw)
        body = decode_body(r.lp())
        sig = Signature.decode(r.lp())
        r.finish()
    except (crypto.UnknownScheme, MalformedPattern) as exc:
        raise DecodeError(str(exc)) from exc
    return replace(body, signature=sig)


def sign_cert(body: FiveGCert, issuer_key: KeyPair) -> FiveGCert:
    unsigned = replace(body, signature=None)
    return replace(unsigned, signature=crypto.sign(issuer_key, canonical_encode(unsigned)))


def cert_to_text(cert: FiveGCert) -> str:
    return armor(cert.encode(), CERT_ARMOR)


def cert_from_text(text: str) -> FiveGCert:
    return decode_cert(dearmor(text, CERT_ARMOR))


# -- CRL ------------------------------------------------------------------

@dataclass(frozen=True)
class Crl:
    issuer: EntityName
    revoked: frozenset  # of (serial, revocation_tick)
    issued_at: int
    signature: Signature | None = None

    def serials(self) -> set[int]:
        return {s for s, _ in self.revoked}

    def body(self) -> bytes:
        entries = sorted(self.revoked)
        return (lp(self.issuer.encode()) + u32(len(entries))
                + b"".join(u64(s) + u64(t) for s, t in entries) + u64(self.issued_at))

    def encode(self) -> bytes:
        if self.signature is None:
            raise ValueError("CRL is unsigned")
        return lp(self.body()) + lp(self.signature.encode())

    def verify(self, issuer_key: PublicKey) -> bool:
        return self.signature is not None and crypto.verify(issuer_key, self.body(), self.signature)


def sign_crl(issuer: EntityName, revoked: Iterable[tuple[int, int]], issued_at: int, key: KeyPair) -> Crl:
    crl = Crl(issuer, frozenset(revoked), issued_at)
    return replace(crl, signature=crypto.sign(key, crl.body()))


def decode_crl(raw: bytes) -> Crl:
    r = Reader(raw)
    b = Reader(r.lp())
    sig = Signature.decode(r.lp())
    r.finish()
    issuer = EntityName.decode(b.lp())
    n = b.u32()
    revoked = frozenset((b.u64(), b.u64()) for _ in range(n))
    issued_at = b.u64()
    b.finish()
    return Crl(issuer, revoked, issued_at, sig)


def crl_to_text(crl: Crl) -> str:
    return armor(crl.encode(), CRL_ARMOR)


def crl_from_text(text: str) -> Crl:
    return decode_crl(dearmor(text, CRL_ARMOR))


def crl_check(crls: Iterable[Crl], issuer: EntityName, serial: int) -> bool:
    """True iff some CRL from ``issuer`` lists ``serial``."""
    return any(c.issuer == issuer and serial in c.serials() for c in crls)


# -- names ----------------------------------------------------------------

def wildcard_match(pattern: str, name: str) -> bool:
    """Exact match, or ``*.<suffix>`` against exactly one non-empty extra label."""
    _check_pattern(pattern)
    if pattern == name:
        return True
    if not pattern.startswith("*."):
        return False
    suffix = pattern[1:]  # ".<suffix>"
    if not name.endswith(suffix):
        return False
    head = name[: -len(suffix)]
    return bool(head) and "." not in head


def names_overlap(a: str, b: str) -> bool:
    """True iff some host name is matched by both ``a`` and ``b``."""
    if a == b:
        return True
    if a.startswith("*.") and not b.startswith("*."):
        return wildcard_match(a, b)
    if b.startswith("*.") and not a.startswith("*."):
        return wildcard_match(b, a)
    return False


# -- validation -----------------------------------------------------------

class Verdict(enum.Enum):
    VALID = "Valid"
    EXPIRED = "Expired"
    NOT_YET_VALID = "NotYetValid"
    REVOKED = "Revoked"
    BAD_SIGNATURE = "BadSignature"
    UNTRUSTED_ROOT = "UntrustedRoot"
    NAME_MISMATCH = "NameMismatch"
    MALFORMED_CHAIN = "MalformedChain"

    def __bool__(self) -> bool:
        return self is Verdict.VALID


@dataclass(frozen=True)
class TrustAnchor:
    name: EntityName
    public_key: PublicKey


def _well_formed(path: list[FiveGCert]) -> bool:
    for i, c in enumerate(path):
        if c.signature is None or c.not_before >= c.not_after:
            return False
        if i + 1 < len(path):
            parent = path[i + 1]
            if c.issuer != parent.subject or parent.subject.kind not in CA_KINDS:
                return False
            # A chain member may carry its own chain only if it is exactly the rest of ours.
            if c.embedded_chain and i > 0 and tuple(path[i + 1:]) != c.embedded_chain:
                return False
        if c.issuer.kind not in CA_KINDS:
            return False
        # PLMN-scoped CAs only certify entities in their own PLMN.
        if c.issuer.kind in (EntityKind.INTRA_PLMN_CA, EntityKind.PLMN_CA) \
                and c.issuer.plmn_id != c.subject.plmn_id:
            return False
    return True


def validate_chain(cert: FiveGCert, trust_anchors: Iterable[TrustAnchor], now: int,
                   crls: Iterable[Crl] = (), expected_peer_name: str | None = None) -> Verdict:
    """Validate ``cert`` and its embedded chain; the first failing check wins.

    Order: MalformedChain, BadSignature, UntrustedRoot, NotYetValid/Expired,
    Revoked, NameMismatch.  Never raises.
    """
    try:
        return _validate(cert, list(trust_anchors), now, list(crls), expected_peer_name)
    except Exception:
        return Verdict.MALFORMED_CHAIN


def _validate(cert, anchors, now, crls, expected):
    if not isinstance(cert, FiveGCert):
        return Verdict.MALFORMED_CHAIN
    path = [cert, *cert.embedded_chain]
    if not _well_formed(path):
        return Verdict.MALFORMED_CHAIN

    for child, parent in zip(path, path[1:]):
        if not crypto.verify(parent.subject_public_key, canonical_encode(child), child.signature):
            return Verdict.BAD_SIGNATURE

    top = path[-1]
    candidates = [a for a in anchors if a.name == top.issuer]
    if not candidates:
        return Verdict.UNTRUSTED_ROOT
    anchor = next((a for a in candidates
                   if crypto.verify(a.public_key, canonical_encode(top), top.signature)), None)
    if anchor is None:
        return Verdict.BAD_SIGNATURE

    for c in path:
        if now < c.not_before:
            return Verdict.NOT_YET_VALID
        if now >= c.not_after:
            return Verdict.EXPIRED

    # Only CRLs whose signature checks out under the issuer's key count.
    issuer_keys = {c.issuer: p.subject_public_key for c, p in zip(path, path[1:])}
    issuer_keys[top.issuer] = anchor.public_key
    trusted = [crl for crl in crls
               if crl.issuer in issuer_keys and crl.verify(issuer_keys[crl.issuer])]
    for c in path:
        if crl_check(trusted, c.issuer, c.serial):
            return Verdict.REVOKED

    if expected is not None:
        try:
            if not wildcard_match(cert.subject.label, expected):
                return Verdict.NAME_MISMATCH
        except MalformedPattern:
            return Verdict.NAME_MISMATCH
    return Verdict.VALID
