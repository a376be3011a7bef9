"""Mutual-authentication handshakes over the topology channel.

A three-message exchange stands in for TLS 1.3:

    I -> R  ClientHello   name, ciphers, nonce, ephemeral key, cert, CT proofs
    R -> I  ServerHello   name, chosen cipher, nonce, ephemeral key, cert, CT proofs,
                          signature over the transcript so far
    I -> R  Finished      signature over the full transcript

Each side validates the peer chain against its own anchors and the current
CRLs.  Between PLMNs each side also checks the peer's CT audit proofs
against its pre-installed log keys.  The session key is
H(DH secret || H(initiator cert) || H(responder cert)).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from . import crypto
from ._wire import DecodeError, Reader, lp, u32
from .certmodel import (EntityKind, FiveGCert, MalformedPattern, TrustAnchor, Verdict, decode_cert,
                        validate_chain)
from .crypto import KeyPair, PublicKey, Signature
from .topology import EntityRecord, Topology
from .translog import AuditProof, verify_inclusion

FINISH_TAG = b"5GPKI-FINISHED"
INTRA_KINDS = (EntityKind.NF, EntityKind.NRF, EntityKind.SCP, EntityKind.PCF)

Tamper = Callable[[str, bytes], bytes]


class Outcome(enum.Enum):
    ESTABLISHED = "Established"
    REJECTED = "Rejected"


class Reason(enum.Enum):
    EXPIRED = "Expired"
    NOT_YET_VALID = "NotYetValid"
    REVOKED = "Revoked"
    BAD_SIGNATURE = "BadSignature"
    UNTRUSTED_ROOT = "UntrustedRoot"
    NAME_MISMATCH = "NameMismatch"
    MALFORMED_CHAIN = "MalformedChain"
    NO_COMMON_CIPHER = "NoCommonCipher"
    MISSING_AUDIT_PROOF = "MissingAuditProof"
    BAD_AUDIT_PROOF = "BadAuditProof"
    BAD_TRANSCRIPT_SIGNATURE = "BadTranscriptSignature"
    MALFORMED = "Malformed"

    @classmethod
    def from_verdict(cls, v: Verdict) -> "Reason":
        return cls(v.value)


class HandshakeError(ValueError):
    """Precondition violation: wrong entity kinds or PLMN placement."""


@dataclass
class Party:
    """One side of a handshake: what it presents and what it trusts."""

    name: str
    keypair: KeyPair
    cert: FiveGCert | None
    ciphers: list[str]
    trust_anchors: list[TrustAnchor]
    proofs: list[AuditProof] = field(default_factory=list)
    log_keys: list[PublicKey] = field(default_factory=list)

    @classmethod
    def of(cls, rec: EntityRecord) -> "Party":
        return cls(rec.label, rec.keypair, rec.cert, list(rec.ciphers), list(rec.trust_anchors),
                   list(rec.audit_proofs), list(rec.log_keys))


@dataclass(frozen=True)
class Hello:
    name: str
    ciphers: tuple[str, ...]
    nonce: bytes
    ephemeral: bytes
    cert: FiveGCert | None
    proofs: tuple[AuditProof, ...]

    def encode(self) -> bytes:
        return b"".join([
            lp(self.name.encode()),
            u32(len(self.ciphers)), *(lp(c.encode()) for c in self.ciphers),
            lp(self.nonce), lp(self.ephemeral),
            lp(self.cert.encode() if self.cert is not None else b""),
            u32(len(self.proofs)), *(lp(p.encode()) for p in self.proofs),
        ])

    @classmethod
    def decode(cls, raw: bytes) -> "Hello":
        r = Reader(raw)
        name = r.lp().decode()
        ciphers = tuple(r.lp().decode() for _ in range(r.u32()))
        nonce, eph = r.lp(), r.lp()
        cert_raw = r.lp()
        cert = decode_cert(cert_raw) if cert_raw else None
        n = r.u32()
        if n > 64:
            raise DecodeError("too many proofs")
        proofs = tuple(AuditProof.decode(r.lp()) for _ in range(n))
        r.finish()
        if len(nonce) != 32 or len(eph) != 32:
            raise DecodeError("nonce and ephemeral key must be 32 bytes")
        return cls(name, ciphers, nonce, eph, cert, proofs)


@dataclass
class HandshakeTranscript:
    initiator: str
    responder: str
    offered_ciphers: tuple[str, ...] = ()
    chosen_cipher: str | None = None
    certs_exchanged: tuple[FiveGCert | None, FiveGCert | None] = (None, None)
    audit_proofs_exchanged: tuple[tuple[AuditProof, ...], tuple[AuditProof, ...]] = ((), ())
    ephemeral_publics: tuple[bytes, bytes] = (b"", b"")
    verdicts: tuple[Verdict | None, Verdict | None] = (None, None)
    initiator_key: bytes | None = None
    responder_key: bytes | None = None
    outcome: Outcome = Outcome.REJECTED
    reason: Reason | None = None
    rejected_by: str | None = None
    established_at: int | None = None
    message_range: tuple[int, int] = (0, 0)

    @property
    def established(self) -> bool:
        return self.outcome is Outcome.ESTABLISHED

    @property
    def session_key(self) -> bytes | None:
        return self.initiator_key if self.established else None

    def summary(self) -> dict:
        return {
            "initiator": self.initiator,
            "responder": self.responder,
            "outcome": self.outcome.value,
            "reason": self.reason.value if self.reason else None,
            "rejected_by": self.rejected_by,
            "chosen_cipher": self.chosen_cipher,
            "verdicts": [v.value if v else None for v in self.verdicts],
            "proofs": [len(p) for p in self.audit_proofs_exchanged],
            "session_key_fingerprint": crypto.H(self.session_key).hex()[:16] if self.session_key else None,
        }


def _transcript_hash(*parts: bytes) -> bytes:
    return crypto.H(*(lp(p) for p in parts))


def _session_key(shared: bytes, cert_i: FiveGCert | None, cert_r: FiveGCert | None) -> bytes:
    hi = crypto.H(cert_i.encode()) if cert_i is not None else crypto.H(b"")
    hr = crypto.H(cert_r.encode()) if cert_r is not None else crypto.H(b"")
    return crypto.H(shared, hi, hr)


def _check_peer(me: Party, hello: Hello, expected_name: str, now: int, crls, need_proofs: bool):
    """Return (verdict, failure reason or None)."""
    verdict = validate_chain(hello.cert, me.trust_anchors, now, crls, expected_name)
    if verdict is not Verdict.VALID:
        return verdict, Reason.from_verdict(verdict)
    if need_proofs:
        if not hello.proofs:
            return verdict, Reason.MISSING_AUDIT_PROOF
        leaf = hello.cert.encode()
        for proof in hello.proofs:
            if not any(verify_inclusion(proof, leaf, k) for k in me.log_keys):
                return verdict, Reason.BAD_AUDIT_PROOF
    return verdict, None


def run_handshake(topo: Topology, initiator: Party, responder: Party, now: int | None = None, *,
                  target: str | None = None, need_proofs: bool = False, mutual: bool | None = None,
                  tamper: Tamper | None = None) -> HandshakeTranscript:
    """Run the exchange between two parties; ``target`` is the name the initiator meant to reach.

    ``tamper(kind, payload)`` sees every message in flight and returns what is delivered.
    """
    now = topo.clock if now is None else now
    mutual = topo.mutual_auth if mutual is None else mutual
    target = responder.name if target is None else target
    crls = topo.crls()
    ch = topo.channel
    t = HandshakeTranscript(initiator.name, target)
    first = len(ch)

    def deliver(src, dst, kind, payload):
        if tamper is not None:
            payload = tamper(kind, payload)
        ch.send(src, dst, kind, payload, now)
        return payload

    def reject(by: str, reason: Reason):
        t.outcome, t.reason, t.rejected_by = Outcome.REJECTED, reason, by
        ch.send(by, t.responder if by == t.initiator else t.initiator, "Alert", reason.value.encode(), now)
        t.message_range = (first, len(ch))
        return t

    # ClientHello
    eph_i_priv, eph_i_pub = crypto.ephemeral_keypair(topo.fresh_secret())
    ch_sent = Hello(initiator.name, tuple(initiator.ciphers), topo.fresh_secret(), eph_i_pub,
                    initiator.cert, tuple(initiator.proofs))
    t.offered_ciphers = ch_sent.ciphers
    raw_ch = deliver(initiator.name, target, "ClientHello", ch_sent.encode())

    # Responder
    try:
        ch_recv = Hello.decode(raw_ch)
    except (DecodeError, MalformedPattern, ValueError):
        return reject(responder.name, Reason.MALFORMED)
    chosen = next((c for c in ch_recv.ciphers if c in responder.ciphers), None)
    if chosen is None:
        return reject(responder.name, Reason.NO_COMMON_CIPHER)
    v_i = None
    if mutual:
        v_i, why = _check_peer(responder, ch_recv, ch_recv.name, now, crls, need_proofs)
        if why is not None:
            t.verdicts = (v_i, None)
            return reject(responder.name, why)
    eph_r_priv, eph_r_pub = crypto.ephemeral_keypair(topo.fresh_secret())
    sh = Hello(responder.name, (chosen,), topo.fresh_secret(), eph_r_pub, responder.cert, tuple(responder.proofs))
    th_r = _transcript_hash(raw_ch, sh.encode())
    sig_r = crypto.sign(responder.keypair, th_r)
    raw_sh = deliver(responder.name, initiator.name, "ServerHello", lp(sh.encode()) + lp(sig_r.encode()))

    # Initiator
    try:
        r = Reader(raw_sh)
        sh_body, sig_raw = r.lp(), r.lp()
        r.finish()
        sh_recv = Hello.decode(sh_body)
        sig_recv = Signature.decode(sig_raw)
    except (DecodeError, MalformedPattern, ValueError):
        return reject(initiator.name, Reason.MALFORMED)
    if len(sh_recv.ciphers) != 1 or sh_recv.ciphers[0] not in ch_sent.ciphers:
        return reject(initiator.name, Reason.MALFORMED)
    t.chosen_cipher = sh_recv.ciphers[0]
    v_r, why = _check_peer(initiator, sh_recv, target, now, crls, need_proofs)
    t.verdicts = (v_i, v_r)
    t.certs_exchanged = (ch_recv.cert, sh_recv.cert)
    t.audit_proofs_exchanged = (ch_recv.proofs, sh_recv.proofs)
    t.ephemeral_publics = (ch_recv.ephemeral, sh_recv.ephemeral)
    if why is not None:
        return reject(initiator.name, why)
    th_i = _transcript_hash(ch_sent.encode(), sh_body)
    if not crypto.verify(sh_recv.cert.subject_public_key, th_i, sig_recv):
        return reject(initiator.name, Reason.BAD_TRANSCRIPT_SIGNATURE)
    try:
        shared_i = crypto.ephemeral_agree(eph_i_priv, sh_recv.ephemeral)
    except ValueError:
        return reject(initiator.name, Reason.MALFORMED)
    fin_sig = crypto.sign(initiator.keypair, _transcript_hash(th_i, FINISH_TAG))
    raw_fin = deliver(initiator.name, responder.name, "Finished", lp(fin_sig.encode()))

    # Responder confirms
    try:
        r = Reader(raw_fin)
        fin_recv = Signature.decode(r.lp())
        r.finish()
    except (DecodeError, ValueError):
        return reject(responder.name, Reason.MALFORMED)
    if mutual and not crypto.verify(ch_recv.cert.subject_public_key, _transcript_hash(th_r, FINISH_TAG), fin_recv):
        return reject(responder.name, Reason.BAD_TRANSCRIPT_SIGNATURE)
    try:
        shared_r = crypto.ephemeral_agree(eph_r_priv, ch_recv.ephemeral)
    except ValueError:
        return reject(responder.name, Reason.MALFORMED)

    t.initiator_key = _session_key(shared_i, ch_sent.cert, sh_recv.cert)
    t.responder_key = _session_key(shared_r, ch_recv.cert, sh.cert)
    t.outcome = Outcome.ESTABLISHED
    t.established_at = now
    t.message_range = (first, len(ch))
    return t


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise HandshakeError(msg)


def intra_plmn_handshake(topo: Topology, initiator: str | EntityRecord, responder: str | EntityRecord,
                         now: int | None = None, *, tamper: Tamper | None = None,
                         initiator_party: Party | None = None,
                         responder_party: Party | None = None) -> HandshakeTranscript:
    """NF/NRF/SCP/PCF to NF/NRF/SCP/PCF inside one PLMN, anchored at the intra-PLMN CA.

    ``initiator_party`` / ``responder_party`` replace the honest side, e.g. with an impersonator.
    """
    i = initiator if isinstance(initiator, EntityRecord) else topo.entity(initiator)
    r = responder if isinstance(responder, EntityRecord) else topo.entity(responder)
    _require(i.name.kind in INTRA_KINDS and r.name.kind in INTRA_KINDS,
             "intra-PLMN handshakes run between NFs, NRFs, SCPs and PCFs")
    _require(i.name.plmn_id == r.name.plmn_id, f"{i.label} and {r.label} are in different PLMNs")
    return run_handshake(topo, initiator_party or Party.of(i), responder_party or Party.of(r), now,
                         target=r.label, tamper=tamper)


@dataclass
class ViaScpResult:
    hops: list[HandshakeTranscript]
    sent: bytes | None = None
    delivered: bytes | None = None

    @property
    def established(self) -> bool:
        return len(self.hops) == 2 and all(h.established for h in self.hops)

    @property
    def outcome(self) -> Outcome:
        return Outcome.ESTABLISHED if self.established else Outcome.REJECTED


def intra_plmn_handshake_via_scp(topo: Topology, consumer: str, scp: str, producer: str,
                                 now: int | None = None, *, payload: bytes = b"service-request",
                                 scp_alter: Callable[[bytes], bytes] | None = None,
                                 tamper: Tamper | None = None) -> ViaScpResult:
    """Two independent hops, consumer-SCP then SCP-producer; the SCP sees and may rewrite payloads."""
    c, s, p = topo.entity(consumer), topo.entity(scp), topo.entity(producer)
    _require(s.name.kind is EntityKind.SCP, f"{s.label} is not an SCP")
    _require(len({c.name.plmn_id, s.name.plmn_id, p.name.plmn_id}) == 1, "all three must share a PLMN")
    hop1 = intra_plmn_handshake(topo, c, s, now, tamper=tamper)
    result = ViaScpResult([hop1])
    if not hop1.established:
        return result
    hop2 = intra_plmn_handshake(topo, s, p, now, tamper=tamper)
    result.hops.append(hop2)
    if not hop2.established:
        return result
    tick = topo.clock if now is None else now
    # Application payloads travel under each hop's key; the channel only sees a MAC-sized tag.
    result.sent = payload
    topo.channel.send(c.label, s.label, "Request", crypto.H(hop1.session_key, payload), tick)
    relayed = scp_alter(payload) if scp_alter is not None else payload
    topo.channel.send(s.label, p.label, "Request", crypto.H(hop2.session_key, relayed), tick)
    result.delivered = relayed
    return result


def inter_plmn_handshake(topo: Topology, csepp: str | EntityRecord, psepp: str | EntityRecord,
                         now: int | None = None, *, tamper: Tamper | None = None,
                         initiator_party: Party | None = None,
                         responder_party: Party | None = None) -> HandshakeTranscript:
    """cSEPP to pSEPP, anchored at the root CA, with CT audit proofs checked on both sides."""
    c = csepp if isinstance(csepp, EntityRecord) else topo.entity(csepp)
    p = psepp if isinstance(psepp, EntityRecord) else topo.entity(psepp)
    _require(c.name.kind is EntityKind.SEPP and p.name.kind is EntityKind.SEPP,
             "inter-PLMN handshakes run between SEPPs")
    _require(c.name.plmn_id != p.name.plmn_id, "SEPPs must belong to different PLMNs")
    return run_handshake(topo, initiator_party or Party.of(c), responder_party or Party.of(p), now,
                         target=p.label, need_proofs=True, tamper=tamper)


def handshake(topo: Topology, src: str, dst: str, via: str | None = None, now: int | None = None):
    """Dispatch on entity kinds: SEPP pairs go inter-PLMN, everything else intra-PLMN."""
    if via is not None:
        return intra_plmn_handshake_via_scp(topo, src, via, dst, now)
    a, b = topo.entity(src), topo.entity(dst)
    if a.name.kind is EntityKind.SEPP:
        return inter_plmn_handshake(topo, a, b, now)
    return intra_plmn_handshake(topo, a, b, now)


def replace_cert(party: Party, cert: FiveGCert, proofs: Sequence[AuditProof] = ()) -> Party:
    return replace(party, cert=cert, proofs=list(proofs))


__all__ = [
    "Outcome", "Reason", "HandshakeError", "Party", "Hello", "HandshakeTranscript", "ViaScpResult",
    "run_handshake", "intra_plmn_handshake", "intra_plmn_handshake_via_scp", "inter_plmn_handshake",
    "handshake", "replace_cert",
]
