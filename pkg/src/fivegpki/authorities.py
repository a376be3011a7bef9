"""Certificate authorities: root, inter-PLMN, PLMN and intra-PLMN tiers.

Each :class:`CaState` is an exclusive-access actor; every mutating operation
takes the CA's lock so issuance, renewal and revocation are serialized per CA.
"""

from __future__ import annotations

import enum
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol

from . import crypto
from .certmodel import (Crl, EntityKind, EntityName, FiveGCert, cert_from_text, cert_to_text,
                        crl_from_text, crl_to_text, sign_cert, sign_crl)
from .crypto import KeyPair, PublicKey, SchemeId, Signature
from .persist import atomic_write
from .translog import AuditProof, ChainRejected, DomainConflict, verify_inclusion

DEFAULT_CIPHERS = ("TLS_AES_256_GCM_SHA384", "TLS_CHACHA20_POLY1305_SHA256", "TLS_AES_128_GCM_SHA256")


class CaTier(enum.Enum):
    INTRA_PLMN = "intra"
    PLMN = "plmn"
    INTER_PLMN = "inter"
    ROOT = "root"

    @property
    def kind(self) -> EntityKind:
        return {CaTier.INTRA_PLMN: EntityKind.INTRA_PLMN_CA, CaTier.PLMN: EntityKind.PLMN_CA,
                CaTier.INTER_PLMN: EntityKind.INTER_PLMN_CA, CaTier.ROOT: EntityKind.ROOT_CA}[self]

    @property
    def default_validity(self) -> int:
        return 1000 if self is CaTier.INTRA_PLMN else 10000


class PkiError(Exception):
    pass


class IdentityCheckFailed(PkiError):
    pass


class WrongTier(PkiError):
    pass


class WrongEntityKind(PkiError, ValueError):
    pass


class ForeignPlmn(PkiError):
    pass


class UnknownSerial(PkiError, KeyError):
    pass


class NoLiveCert(PkiError):
    pass


class InvalidReportingPath(PkiError, ValueError):
    """An NRF cannot report itself; it must be reported through the PCF."""


class LogRejected(PkiError):
    pass


class LogUnreachable(PkiError):
    pass


class NoLogs(PkiError, ValueError):
    pass


class ReportVia(enum.Enum):
    NRF = "NRF"
    PCF = "PCF"


class LogHandle(Protocol):
    name: EntityName
    public_key: PublicKey

    def register(self, cert: FiveGCert, now: int, crls: Iterable[Crl] = (),
                 handover: Signature | None = None) -> AuditProof: ...


class LogClient:
    """Direct in-process handle on a :class:`~fivegpki.translog.MerkleLog`."""

    def __init__(self, log, reachable: bool = True):
        self.log = log
        self.reachable = reachable

    @property
    def name(self) -> EntityName:
        return self.log.name

    @property
    def public_key(self) -> PublicKey:
        return self.log.public_key

    def register(self, cert, now, crls=(), handover=None) -> AuditProof:
        if not self.reachable:
            raise LogUnreachable(str(self.log.name))
        idx = self.log.append(cert, now, crls=crls, handover=handover)
        return self.log.inclusion_proof(idx, now=now)


def allow_all(name: EntityName) -> bool:
    return True


def allow_list(names: Iterable[EntityName | str]) -> Callable[[EntityName], bool]:
    allowed = {str(n) for n in names}
    return lambda name: str(name) in allowed


@dataclass
class IssuanceRecord:
    cert: FiveGCert
    audit_proofs: list[AuditProof] = field(default_factory=list)
    log_names: list[EntityName] = field(default_factory=list)


@dataclass
class CaState:
    tier: CaTier
    name: EntityName
    keypair: KeyPair
    own_cert: FiveGCert | None = None
    next_serial: int = 1
    issued: dict[int, FiveGCert] = field(default_factory=dict)
    crl: Crl | None = None
    cipher_list: list[str] = field(default_factory=lambda: list(DEFAULT_CIPHERS))
    identity_verifier: Callable[[EntityName], bool] = allow_all
    validity: int | None = None
    allowed: list[str] | None = None
    log_endpoints: list[str] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.RLock()
        if self.validity is None:
            self.validity = self.tier.default_validity
        if self.allowed is not None:
            self.identity_verifier = allow_list(self.allowed)
        if self.crl is None:
            self.crl = sign_crl(self.name, (), 0, self.keypair)

    @property
    def public_key(self) -> PublicKey:
        return self.keypair.public

    def revoked_serials(self) -> set[int]:
        return self.crl.serials()

    def live_certs(self, subject: EntityName, now: int) -> list[FiveGCert]:
        revoked = self.revoked_serials()
        return [c for s, c in sorted(self.issued.items())
                if c.subject == subject and s not in revoked and now < c.not_after]

    def _mint(self, subject, pub, now, validity, chain) -> FiveGCert:
        validity = self.validity if validity is None else validity
        if validity <= 0:
            raise ValueError("validity must be positive")
        body = FiveGCert(subject, pub, self.name, self.next_serial, now, now + validity, tuple(chain))
        return sign_cert(body, self.keypair)

    def _commit(self, cert: FiveGCert) -> FiveGCert:
        self.issued[cert.serial] = cert
        self.next_serial = cert.serial + 1
        return cert

    def _check_identity(self, subject: EntityName) -> None:
        if not self.identity_verifier(subject):
            raise IdentityCheckFailed(f"{self.name.label} refused {subject}")

    def _chain_for_children(self) -> list[FiveGCert]:
        if self.own_cert is None:
            return []
        return [self.own_cert, *self.own_cert.embedded_chain]


def new_ca(tier: CaTier, plmn_id: str, label: str, scheme: SchemeId = SchemeId.ECDSA_P256,
           rng_seed: int | None = None, keypair: KeyPair | None = None, **kwargs) -> CaState:
    kp = keypair or crypto.generate_keypair(scheme, rng_seed)
    return CaState(tier, EntityName(plmn_id, tier.kind, label), kp, **kwargs)


def _require_tier(ca: CaState, *tiers: CaTier) -> None:
    if ca.tier not in tiers:
        raise WrongTier(f"{ca.name.label} is a {ca.tier.value} CA; need {'/'.join(t.value for t in tiers)}")


def _require_kind(name: EntityName, *kinds: EntityKind) -> None:
    if name.kind not in kinds:
        raise WrongEntityKind(f"{name} is {name.kind.value}; expected {'/'.join(k.value for k in kinds)}")


def intra_plmn_auto_issue(ca: CaState, entity: EntityName, entity_pub: PublicKey, now: int,
                          validity: int | None = None) -> FiveGCert:
    """Automatic issuance to an NF, SCP, NRF or PCF of the CA's own PLMN; no chain."""
    _require_tier(ca, CaTier.INTRA_PLMN)
    _require_kind(entity, EntityKind.NF, EntityKind.SCP, EntityKind.NRF, EntityKind.PCF)
    if entity.plmn_id != ca.name.plmn_id:
        raise ForeignPlmn(f"{entity} is not in {ca.name.plmn_id}")
    with ca._lock:
        ca._check_identity(entity)
        return ca._commit(ca._mint(entity, entity_pub, now, validity, ()))


def certify_ca(parent: CaState, child: CaState, now: int, validity: int | None = None) -> FiveGCert:
    """Root certifies the inter-PLMN CA, or the inter-PLMN CA certifies a PLMN CA."""
    if parent.tier is CaTier.ROOT:
        _require_kind(child.name, EntityKind.INTER_PLMN_CA)
        with parent._lock:
            parent._check_identity(child.name)
            cert = parent._commit(parent._mint(child.name, child.public_key, now, validity, ()))
    else:
        cert = inter_plmn_ca_issue(parent, child.name, child.public_key, now, validity)
    child.own_cert = cert
    return cert


def inter_plmn_ca_issue(ca: CaState, plmn_ca: EntityName, pub: PublicKey, now: int,
                        validity: int | None = None) -> FiveGCert:
    _require_tier(ca, CaTier.INTER_PLMN)
    _require_kind(plmn_ca, EntityKind.PLMN_CA)
    if ca.own_cert is None:
        raise PkiError(f"{ca.name.label} has not been certified by the root CA")
    with ca._lock:
        ca._check_identity(plmn_ca)
        return ca._commit(ca._mint(plmn_ca, pub, now, validity, ca._chain_for_children()))


def plmn_ca_issue_ipx(ca: CaState, ipx: EntityName, pub: PublicKey, now: int,
                      validity: int | None = None) -> FiveGCert:
    """IPX providers and their roaming partners; chained like SEPPs but never CT-logged."""
    _require_tier(ca, CaTier.PLMN)
    _require_kind(ipx, EntityKind.IPX)
    if ca.own_cert is None:
        raise PkiError(f"{ca.name.label} has no certificate from the inter-PLMN CA")
    with ca._lock:
        ca._check_identity(ipx)
        return ca._commit(ca._mint(ipx, pub, now, validity, ca._chain_for_children()))


def _register(cert: FiveGCert, logs, now, crls=(), handover=None) -> IssuanceRecord:
    logs = list(logs)
    if not logs:
        raise NoLogs("SEPP certificates must be registered with at least one CT log")
    record = IssuanceRecord(cert)
    leaf = cert.encode()
    for log in logs:
        try:
            proof = log.register(cert, now, crls, handover)
        except (DomainConflict, ChainRejected) as exc:
            raise LogRejected(f"{log.name.label}: {exc}") from exc
        if not verify_inclusion(proof, leaf, log.public_key):
            raise LogRejected(f"{log.name.label}: returned an audit proof that does not verify")
        record.audit_proofs.append(proof)
        record.log_names.append(log.name)
    return record


def plmn_ca_issue_sepp(ca: CaState, sepp: EntityName, sepp_pub: PublicKey, logs: Iterable[LogHandle],
                       now: int, validity: int | None = None, *, crls: Iterable[Crl] = (),
                       handover: Signature | None = None) -> IssuanceRecord:
    """Issue a wildcard SEPP certificate and register it with every log in ``logs``.

    The certificate is committed to ``ca.issued`` only after all logs accepted it.
    """
    _require_tier(ca, CaTier.PLMN)
    _require_kind(sepp, EntityKind.SEPP)
    if ca.own_cert is None:
        raise PkiError(f"{ca.name.label} has no certificate from the inter-PLMN CA")
    with ca._lock:
        ca._check_identity(sepp)
        cert = ca._mint(sepp, sepp_pub, now, validity, ca._chain_for_children())
        record = _register(cert, logs, now, crls, handover)
        ca._commit(cert)
        return record


def revoke(ca: CaState, serial: int, now: int) -> Crl:
    """Add ``serial`` to the CRL.  Revoking twice returns the unchanged CRL."""
    with ca._lock:
        if serial not in ca.issued:
            raise UnknownSerial(f"{ca.name.label} never issued serial {serial}")
        if serial in ca.crl.serials():
            return ca.crl
        ca.crl = sign_crl(ca.name, ca.crl.revoked | {(serial, now)}, now, ca.keypair)
        return ca.crl


def _revoke_many(ca: CaState, serials: Iterable[int], now: int) -> Crl:
    fresh = {(s, now) for s in serials if s not in ca.crl.serials()}
    if fresh:
        ca.crl = sign_crl(ca.name, ca.crl.revoked | fresh, now, ca.keypair)
    return ca.crl


def renew_record(ca: CaState, serial: int, now: int, validity: int | None = None,
                 logs: Iterable[LogHandle] = ()) -> IssuanceRecord:
    with ca._lock:
        old = ca.issued.get(serial)
        if old is None:
            raise UnknownSerial(f"{ca.name.label} never issued serial {serial}")
        ca._check_identity(old.subject)
        if validity is None:
            validity = old.not_after - old.not_before
        chain = ca._chain_for_children() if old.embedded_chain else ()
        new = ca._mint(old.subject, old.subject_public_key, now, validity, chain)
        if old.subject.kind is EntityKind.SEPP:
            record = _register(new, logs, now)
        else:
            record = IssuanceRecord(new)
        # The predecessor is revoked in the same step the successor is committed.
        ca._commit(new)
        _revoke_many(ca, [serial], now)
        return record


def renew(ca: CaState, serial: int, now: int, validity: int | None = None,
          logs: Iterable[LogHandle] = ()) -> FiveGCert:
    return renew_record(ca, serial, now, validity, logs).cert


def notify_compromise(ca: CaState, entity: EntityName, via: ReportVia, now: int) -> Crl:
    """Revoke every live certificate of ``entity`` in a single CRL snapshot."""
    via = ReportVia(via)
    if entity.kind is EntityKind.NRF and via is not ReportVia.PCF:
        raise InvalidReportingPath("a compromised NRF must be reported through the PCF")
    if entity.kind is not EntityKind.NRF and via is not ReportVia.NRF:
        raise InvalidReportingPath(f"{entity.kind.value} compromise is reported through the NRF")
    with ca._lock:
        live = ca.live_certs(entity, now)
        if not live:
            raise NoLiveCert(f"{entity} holds no live certificate from {ca.name.label}")
        return _revoke_many(ca, [c.serial for c in live], now)


def publish_cipher_list(ca: CaState) -> list[str]:
    _require_tier(ca, CaTier.INTRA_PLMN)
    return list(ca.cipher_list)


# -- state directory ------------------------------------------------------

def save_ca(ca: CaState, directory: str | os.PathLike) -> None:
    d = Path(directory)
    with ca._lock:
        atomic_write(d / "ca.key", crypto.keypair_to_text(ca.keypair).encode())
        if ca.own_cert is not None:
            atomic_write(d / "ca.cert", cert_to_text(ca.own_cert).encode())
        for serial, cert in ca.issued.items():
            p = d / "issued" / f"{serial}.cert"
            if not p.exists():
                atomic_write(p, cert_to_text(cert).encode())
        atomic_write(d / "crl.current", crl_to_text(ca.crl).encode())
        config = {
            "tier": ca.tier.value,
            "name": str(ca.name),
            "validity": ca.validity,
            "allow_list": ca.allowed,
            "ciphers": ca.cipher_list,
            "log_endpoints": ca.log_endpoints,
            "next_serial": ca.next_serial,
        }
        # config is written last: it marks the directory as a complete CA.
        atomic_write(d / "config", (json.dumps(config, indent=2, sort_keys=True) + "\n").encode())


def load_ca(directory: str | os.PathLike) -> CaState:
    d = Path(directory)
    config = json.loads((d / "config").read_text())
    kp = crypto.keypair_from_text((d / "ca.key").read_text())
    own = cert_from_text((d / "ca.cert").read_text()) if (d / "ca.cert").exists() else None
    issued = {}
    if (d / "issued").is_dir():
        for p in (d / "issued").glob("*.cert"):
            cert = cert_from_text(p.read_text())
            issued[cert.serial] = cert
    crl = crl_from_text((d / "crl.current").read_text())
    next_serial = max([config.get("next_serial", 1), *(s + 1 for s in issued)])
    return CaState(CaTier(config["tier"]), EntityName.parse(config["name"]), kp, own, next_serial,
                   issued, crl, list(config.get("ciphers", DEFAULT_CIPHERS)),
                   validity=config.get("validity"), allowed=config.get("allow_list"),
                   log_endpoints=list(config.get("log_endpoints", [])))


__all__ = [
    "CaTier", "CaState", "IssuanceRecord", "LogClient", "ReportVia", "DEFAULT_CIPHERS",
    "PkiError", "IdentityCheckFailed", "WrongTier", "WrongEntityKind", "ForeignPlmn",
    "UnknownSerial", "NoLiveCert", "InvalidReportingPath", "LogRejected", "LogUnreachable", "NoLogs",
    "new_ca", "certify_ca", "intra_plmn_auto_issue", "inter_plmn_ca_issue", "plmn_ca_issue_ipx",
    "plmn_ca_issue_sepp", "renew", "renew_record", "revoke", "notify_compromise",
    "publish_cipher_list", "save_ca", "load_ca", "allow_all", "allow_list",
]
