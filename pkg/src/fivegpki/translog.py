"""Certificate Transparency log for SEPP certificates.

Merkle construction follows RFC 9162: leaf hash ``H(0x00 || leaf)``, interior
node ``H(0x01 || left || right)``, split at the largest power of two strictly
below the number of leaves, empty tree hashes to ``H(b"")``.

The honest log refuses a second live certificate for a SEPP domain under a
different public key (see :meth:`MerkleLog.append`).
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from . import crypto
from ._wire import DecodeError, Reader, lp, u32, u64
from .certmodel import (Crl, EntityKind, EntityName, FiveGCert, TrustAnchor, Verdict,
                        decode_cert, names_overlap, validate_chain)
from .crypto import KeyPair, PublicKey, Signature, H

HANDOVER_TAG = b"5GPKI-DOMAIN-HANDOVER"


class LogError(Exception):
    pass


class DomainConflict(LogError):
    """Domain already bound to a different, still-live public key."""


class ChainRejected(LogError):
    """Certificate does not chain to one of the log's accepted roots."""


class NotSeppCert(LogError, ValueError):
    pass


class IndexOutOfRange(LogError, IndexError):
    pass


class SizeOutOfRange(LogError, IndexError):
    pass


def leaf_hash(leaf: bytes) -> bytes:
    return H(b"\x00", leaf)


def node_hash(left: bytes, right: bytes) -> bytes:
    return H(b"\x01", left, right)


def split_point(n: int) -> int:
    """Largest power of two strictly less than ``n`` (n > 1)."""
    k = 1
    while k << 1 < n:
        k <<= 1
    return k


@dataclass(frozen=True)
class SignedTreeHead:
    tree_size: int
    root_hash: bytes
    timestamp: int
    signature: Signature | None = None

    def signed_bytes(self) -> bytes:
        return u64(self.tree_size) + self.root_hash + u64(self.timestamp)

    def encode(self) -> bytes:
        return self.signed_bytes() + lp(self.signature.encode() if self.signature else b"")

    @classmethod
    def decode(cls, raw: bytes) -> "SignedTreeHead":
        r = Reader(raw)
        sth = cls._read(r)
        r.finish()
        return sth

    @classmethod
    def _read(cls, r: Reader) -> "SignedTreeHead":
        size, root, ts = r.u64(), r.take(32), r.u64()
        sig_raw = r.lp()
        return cls(size, root, ts, Signature.decode(sig_raw) if sig_raw else None)

    def verify(self, log_key: PublicKey) -> bool:
        return (self.signature is not None and len(self.root_hash) == 32
                and crypto.verify(log_key, self.signed_bytes(), self.signature))


@dataclass(frozen=True)
class AuditProof:
    leaf_index: int
    tree_size: int
    path: tuple[bytes, ...]
    sth: SignedTreeHead

    def encode(self) -> bytes:
        return (u64(self.leaf_index) + u64(self.tree_size) + u32(len(self.path))
                + b"".join(self.path) + lp(self.sth.encode()))

    @classmethod
    def decode(cls, raw: bytes) -> "AuditProof":
        r = Reader(raw)
        idx, size, n = r.u64(), r.u64(), r.u32()
        if n > 64:
            raise DecodeError("audit path too long")
        path = tuple(r.take(32) for _ in range(n))
        sth = SignedTreeHead.decode(r.lp())
        r.finish()
        return cls(idx, size, path, sth)


def sign_sth(tree_size: int, root: bytes, timestamp: int, key: KeyPair) -> SignedTreeHead:
    sth = SignedTreeHead(tree_size, root, timestamp)
    return replace(sth, signature=crypto.sign(key, sth.signed_bytes()))


def handover_message(domain: str, new_key: PublicKey) -> bytes:
    return HANDOVER_TAG + lp(domain.encode()) + lp(new_key.encode())


@dataclass
class DomainEntry:
    leaf_index: int
    public_key: PublicKey
    cert: FiveGCert


@dataclass
class MerkleLog:
    name: EntityName
    keypair: KeyPair
    leaves: list[bytes] = field(default_factory=list)
    accepted_roots: list[TrustAnchor] | None = None
    domain_index: dict[str, DomainEntry] = field(default_factory=dict)
    clock: int = 0

    def __post_init__(self):
        self._lock = threading.Lock()
        self._hashes = [leaf_hash(x) for x in self.leaves]
        self._cache: dict[tuple[int, int], bytes] = {}
        if not self.domain_index:
            for i, leaf in enumerate(self.leaves):
                self._index_leaf(i, leaf)

    @property
    def public_key(self) -> PublicKey:
        return self.keypair.public

    @property
    def size(self) -> int:
        return len(self.leaves)

    def _index_leaf(self, i: int, leaf: bytes) -> None:
        try:
            cert = decode_cert(leaf)
        except DecodeError:
            return
        self.domain_index[cert.subject.label] = DomainEntry(i, cert.subject_public_key, cert)

    # -- tree math --------------------------------------------------------

    def _mth(self, lo: int, hi: int) -> bytes:
        """Root of leaves[lo:hi]; cached since appends never change a closed range."""
        n = hi - lo
        if n == 0:
            return H(b"")
        if n == 1:
            return self._hashes[lo]
        got = self._cache.get((lo, hi))
        if got is None:
            k = split_point(n)
            got = node_hash(self._mth(lo, lo + k), self._mth(lo + k, hi))
            self._cache[(lo, hi)] = got
        return got

    def root(self, tree_size: int | None = None) -> bytes:
        n = self.size if tree_size is None else tree_size
        if not 0 <= n <= self.size:
            raise SizeOutOfRange(f"tree size {n} outside 0..{self.size}")
        return self._mth(0, n)

    # -- operations -------------------------------------------------------

    def _domain_live(self, entry: DomainEntry, now: int, crls: Iterable[Crl],
                     handover: Signature | None, new_key: PublicKey) -> bool:
        prior = entry.cert
        if now >= prior.not_after:
            return False
        issuer_key = prior.embedded_chain[0].subject_public_key if prior.embedded_chain else None
        revoked = issuer_key is not None and any(
            c.issuer == prior.issuer and prior.serial in c.serials() and c.verify(issuer_key)
            for c in crls)
        # Revocation frees the domain only with the prior key holder's consent;
        # a compromised CA alone can forge CRLs.
        consent = handover is not None and crypto.verify(
            prior.subject_public_key, handover_message(prior.subject.label, new_key), handover)
        return not (revoked and consent)

    def append(self, cert: FiveGCert, now: int, *, crls: Iterable[Crl] = (),
               handover: Signature | None = None, enforce_policy: bool = True) -> int:
        """Append ``cert`` as a new leaf and return its index.

        Raises DomainConflict when a name matching any of the same hosts is bound
        to a different key whose certificate is neither expired nor revoked with
        a key handover.
        """
        if cert.subject.kind is not EntityKind.SEPP:
            raise NotSeppCert(f"only SEPP certificates are logged, got {cert.subject.kind.value}")
        with self._lock:
            if enforce_policy:
                if self.accepted_roots is not None:
                    v = validate_chain(cert, self.accepted_roots, now)
                    if v in (Verdict.MALFORMED_CHAIN, Verdict.BAD_SIGNATURE, Verdict.UNTRUSTED_ROOT):
                        raise ChainRejected(f"{cert.subject.label}: {v.value}")
                crls = list(crls)
                for label, entry in self.domain_index.items():
                    if not names_overlap(label, cert.subject.label) \
                            or entry.public_key == cert.subject_public_key:
                        continue
                    if self._domain_live(entry, now, crls, handover, cert.subject_public_key):
                        raise DomainConflict(
                            f"{cert.subject.label} overlaps {label}, bound to key "
                            f"{entry.public_key.fingerprint()}")
            leaf = cert.encode()
            self.leaves.append(leaf)
            self._hashes.append(leaf_hash(leaf))
            idx = len(self.leaves) - 1
            self.domain_index[cert.subject.label] = DomainEntry(idx, cert.subject_public_key, cert)
            self.clock = max(self.clock, now)
            return idx

    def signed_tree_head(self, now: int | None = None, tree_size: int | None = None) -> SignedTreeHead:
        if now is not None:
            self.clock = max(self.clock, now)
        n = self.size if tree_size is None else tree_size
        return sign_sth(n, self.root(n), self.clock, self.keypair)

    def inclusion_path(self, leaf_index: int, tree_size: int) -> list[bytes]:
        if not 0 < tree_size <= self.size:
            raise IndexOutOfRange(f"tree size {tree_size} outside 1..{self.size}")
        if not 0 <= leaf_index < tree_size:
            raise IndexOutOfRange(f"leaf {leaf_index} outside tree of size {tree_size}")
        siblings = []
        lo, hi = 0, tree_size
        while hi - lo > 1:
            k = split_point(hi - lo)
            if leaf_index < lo + k:
                siblings.append(self._mth(lo + k, hi))
                hi = lo + k
            else:
                siblings.append(self._mth(lo, lo + k))
                lo += k
        siblings.reverse()
        return siblings

    def inclusion_proof(self, leaf_index: int, tree_size: int | None = None,
                        now: int | None = None) -> AuditProof:
        n = self.size if tree_size is None else tree_size
        path = self.inclusion_path(leaf_index, n)
        return AuditProof(leaf_index, n, tuple(path), self.signed_tree_head(now, n))

    def consistency_proof(self, old_size: int, new_size: int) -> list[bytes]:
        if not 0 < old_size <= new_size <= self.size:
            raise SizeOutOfRange(f"need 0 < {old_size} <= {new_size} <= {self.size}")
        m, lo, hi = old_size, 0, new_size
        complete = True
        upper = []
        head = []
        while True:
            n = hi - lo
            if m == n:
                if not complete:
                    head.append(self._mth(lo, hi))
                break
            k = split_point(n)
            if m <= k:
                upper.append(self._mth(lo + k, hi))
                hi = lo + k
            else:
                upper.append(self._mth(lo, lo + k))
                m -= k
                lo += k
                complete = False
        return head + upper[::-1]

    # -- persistence ------------------------------------------------------

    def save(self, directory: str | os.PathLike) -> None:
        from .persist import atomic_write
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        atomic_write(d / "log.key", crypto.keypair_to_text(self.keypair).encode())
        atomic_write(d / "log.name", str(self.name).encode())
        atomic_write(d / "records", b"".join(u32(len(x)) + x for x in self.leaves))
        atomic_write(d / "sth", self.signed_tree_head().encode())

    @classmethod
    def load(cls, directory: str | os.PathLike) -> "MerkleLog":
        d = Path(directory)
        kp = crypto.keypair_from_text((d / "log.key").read_text())
        name = EntityName.parse((d / "log.name").read_text().strip())
        leaves = read_records((d / "records").read_bytes()) if (d / "records").exists() else []
        log = cls(name, kp, leaves)
        sth_path = d / "sth"
        if sth_path.exists():
            log.clock = SignedTreeHead.decode(sth_path.read_bytes()).timestamp
        return log


def read_records(raw: bytes) -> list[bytes]:
    r = Reader(raw)
    out = []
    while not r.done():
        out.append(r.lp())
    return out


# -- verification (no log state needed) ----------------------------------

def root_from_path(leaf_index: int, tree_size: int, leaf: bytes, path: Iterable[bytes]) -> bytes | None:
    """Fold an inclusion path up to a root; None if the path shape is wrong."""
    if not 0 <= leaf_index < tree_size:
        return None
    fn, sn = leaf_index, tree_size - 1
    r = leaf_hash(leaf)
    for p in path:
        if sn == 0 or len(p) != 32:
            return None
        if fn & 1 or fn == sn:
            r = node_hash(p, r)
            if not fn & 1:
                while fn and not fn & 1:
                    fn >>= 1
                    sn >>= 1
        else:
            r = node_hash(r, p)
        fn >>= 1
        sn >>= 1
    return r if sn == 0 else None


def verify_inclusion(proof: AuditProof, leaf: bytes, log_public_key: PublicKey) -> bool:
    """True iff the STH is signed by ``log_public_key`` and the path reaches its root."""
    try:
        if proof.sth.tree_size != proof.tree_size or not proof.sth.verify(log_public_key):
            return False
        return root_from_path(proof.leaf_index, proof.tree_size, leaf, proof.path) == proof.sth.root_hash
    except Exception:
        return False


def verify_consistency(old: SignedTreeHead, new: SignedTreeHead, proof: Iterable[bytes],
                       log_public_key: PublicKey | None = None) -> bool:
    """True iff ``new`` extends ``old`` according to ``proof``."""
    try:
        return _verify_consistency(old, new, list(proof), log_public_key)
    except Exception:
        return False


def _verify_consistency(old, new, proof, key):
    if key is not None and not (old.verify(key) and new.verify(key)):
        return False
    m, n = old.tree_size, new.tree_size
    if not 0 < m <= n:
        return False
    if m == n:
        return not proof and old.root_hash == new.root_hash
    if not proof or any(len(p) != 32 for p in proof):
        return False
    if m & (m - 1) == 0:
        proof = [old.root_hash] + proof
    fn, sn = m - 1, n - 1
    while fn & 1:
        fn >>= 1
        sn >>= 1
    fr = sr = proof[0]
    for c in proof[1:]:
        if sn == 0:
            return False
        if fn & 1 or fn == sn:
            fr = node_hash(c, fr)
            sr = node_hash(c, sr)
            if not fn & 1:
                while fn and not fn & 1:
                    fn >>= 1
                    sn >>= 1
        else:
            sr = node_hash(sr, c)
        fn >>= 1
        sn >>= 1
    return fr == old.root_hash and sr == new.root_hash and sn == 0
