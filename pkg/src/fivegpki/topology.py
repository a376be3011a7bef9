"""Simulated PLMNs: entities, their keys and certificates, the shared channel and the clock.

A topology is built from a JSON config.  Building replays every issuance
flow (CA certification, automatic NF issuance, SEPP issuance with CT
registration) over the channel, so the adversary sees exactly what an
on-path observer would.  Private keys never leave their owners.
"""

from __future__ import annotations

import copy
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import authorities as au
from . import crypto
from ._wire import lp
from .certmodel import Crl, EntityKind, EntityName, FiveGCert, TrustAnchor
from .crypto import KeyPair, PublicKey, SchemeId
from .translog import AuditProof, MerkleLog

DEFAULT_CONFIG: dict[str, Any] = {
    "seed": 1,
    "schemes": {},
    "validity": {},
    "ct_logs": 1,
    "ciphers": list(au.DEFAULT_CIPHERS),
    "plmns": [
        {"id": "plmn1", "nfs": ["amf-1", "smf-1", "upf-1"], "scps": ["scp-1"],
         "nrf": "nrf-1", "pcf": "pcf-1", "sepp": "s1", "ipx": ["ipx-1"]},
        {"id": "plmn2", "nfs": ["amf-2", "smf-2", "upf-2"], "scps": ["scp-2"],
         "nrf": "nrf-2", "pcf": "pcf-2", "sepp": "s2", "ipx": ["ipx-2"]},
    ],
}

TIERS = ("root", "inter", "plmn", "intra", "entity", "log")
_TOP_KEYS = {"seed", "schemes", "validity", "ct_logs", "ciphers", "plmns"}
_PLMN_KEYS = {"id", "nfs", "scps", "nrf", "pcf", "sepp", "ipx", "ciphers"}
_VALIDITY_KEYS = {"root", "inter", "plmn", "intra", "nf", "sepp", "ipx"}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class UnknownEntity(KeyError):
    def __str__(self) -> str:
        return f"unknown entity {self.args[0]!r}"


def default_config(n_plmns: int = 2) -> dict[str, Any]:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if n_plmns != 2:
        cfg["plmns"] = [
            {"id": f"plmn{i}", "nfs": [f"amf-{i}", f"smf-{i}", f"upf-{i}"], "scps": [f"scp-{i}"],
             "nrf": f"nrf-{i}", "pcf": f"pcf-{i}", "sepp": f"s{i}", "ipx": [f"ipx-{i}"]}
            for i in range(1, n_plmns + 1)]
    return cfg


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"not valid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError(str(path), str(exc)) from exc


# -- channel ----------------------------------------------------------------

@dataclass(frozen=True)
class Message:
    src: str
    dst: str
    kind: str
    payload: bytes
    tick: int

    def encode(self) -> bytes:
        return (lp(self.src.encode()) + lp(self.dst.encode()) + lp(self.kind.encode())
                + lp(self.payload) + self.tick.to_bytes(8, "big"))


@dataclass
class Channel:
    """Append-only record of every message; the adversary reads all of it."""

    transcript: list[Message] = field(default_factory=list)

    def send(self, src: str, dst: str, kind: str, payload: bytes, tick: int) -> Message:
        msg = Message(src, dst, kind, payload, tick)
        self.transcript.append(msg)
        return msg

    def encode(self) -> bytes:
        return b"".join(lp(m.encode()) for m in self.transcript)

    def __len__(self) -> int:
        return len(self.transcript)


# -- entities ---------------------------------------------------------------

@dataclass
class EntityRecord:
    name: EntityName
    keypair: KeyPair
    certs: list[FiveGCert] = field(default_factory=list)
    trust_anchors: list[TrustAnchor] = field(default_factory=list)
    log_keys: list[PublicKey] = field(default_factory=list)
    compromised: bool = False
    host: str | None = None          # SEPPs: concrete host under the wildcard domain
    audit_proofs: list[AuditProof] = field(default_factory=list)
    ciphers: list[str] = field(default_factory=list)
    ca: au.CaState | None = None
    log: MerkleLog | None = None

    @property
    def label(self) -> str:
        return self.host or self.name.label

    @property
    def cert(self) -> FiveGCert | None:
        return self.certs[-1] if self.certs else None


@dataclass
class PlmnRecord:
    id: str
    intra_ca: au.CaState
    plmn_ca: au.CaState
    nrf: str
    pcf: str | None
    nfs: list[str]
    scps: list[str]
    sepp: str
    ipx_chain: list[str]


@dataclass
class Adversary:
    """Explicit knowledge set: private keys by public-key encoding."""

    keys: dict[bytes, KeyPair] = field(default_factory=dict)

    def learn(self, kp: KeyPair) -> None:
        self.keys[kp.public.encode()] = kp

    def knows(self, pub: PublicKey) -> bool:
        return pub.encode() in self.keys

    def key_for(self, pub: PublicKey) -> KeyPair | None:
        return self.keys.get(pub.encode())


class _ChannelLogClient(au.LogClient):
    """Log handle whose requests and responses travel over the channel."""

    def __init__(self, topo: "Topology", log: MerkleLog, sender: str):
        super().__init__(log)
        self.topo = topo
        self.sender = sender

    def register(self, cert, now, crls=(), handover=None) -> AuditProof:
        ch = self.topo.channel
        ch.send(self.sender, self.log.name.label, "CtRegister", cert.encode(), now)
        proof = super().register(cert, now, crls, handover)
        ch.send(self.log.name.label, self.sender, "CtAuditProof", proof.encode(), now)
        return proof


@dataclass
class Topology:
    config: dict[str, Any]
    root_ca: au.CaState
    inter_plmn_ca: au.CaState
    ct_logs: list[MerkleLog]
    plmns: dict[str, PlmnRecord] = field(default_factory=dict)
    entities: dict[str, EntityRecord] = field(default_factory=dict)
    channel: Channel = field(default_factory=Channel)
    adversary: Adversary = field(default_factory=Adversary)
    clock: int = 0
    rng: random.Random = field(default_factory=random.Random)
    mutual_auth: bool = True

    # -- lookup -----------------------------------------------------------

    def entity(self, ref: str | EntityName) -> EntityRecord:
        """Resolve a label, ``plmn/label``, SEPP host, or full EntityName."""
        if isinstance(ref, EntityName):
            for rec in self.entities.values():
                if rec.name == ref:
                    return rec
            raise UnknownEntity(str(ref))
        if ref in self.entities:
            return self.entities[ref]
        if "/" in ref:
            plmn, label = ref.split("/", 1)
            rec = self.entities.get(label)
            if rec is not None and rec.name.plmn_id == plmn:
                return rec
        raise UnknownEntity(ref)

    def sepp_of(self, plmn_id: str) -> EntityRecord:
        return self.entities[self.plmns[plmn_id].sepp]

    def crls(self) -> list[Crl]:
        cas = [self.root_ca, self.inter_plmn_ca]
        for p in self.plmns.values():
            cas += [p.intra_ca, p.plmn_ca]
        return [ca.crl for ca in cas]

    def log_clients(self, sender: str) -> list[au.LogClient]:
        return [_ChannelLogClient(self, log, sender) for log in self.ct_logs]

    def fresh_secret(self) -> bytes:
        return self.rng.randbytes(32)


def _scheme(cfg: dict, tier: str) -> SchemeId:
    raw = cfg.get("schemes", {}).get(tier, SchemeId.ECDSA_P256.value)
    try:
        return SchemeId.parse(raw)
    except (crypto.UnknownScheme, AttributeError) as exc:
        raise ConfigError(f"schemes.{tier}", f"unknown scheme {raw!r}") from exc


def _check_config(cfg: Any) -> None:
    if not isinstance(cfg, dict):
        raise ConfigError("$", "config must be an object")
    for k in cfg:
        if k not in _TOP_KEYS:
            raise ConfigError(k, "unknown key")
    if not isinstance(cfg.get("seed", 0), int):
        raise ConfigError("seed", "must be an integer")
    n_logs = cfg.get("ct_logs", 1)
    if not isinstance(n_logs, int) or isinstance(n_logs, bool) or n_logs < 0:
        raise ConfigError("ct_logs", "must be a non-negative integer")
    for k in cfg.get("schemes", {}):
        if k not in TIERS:
            raise ConfigError(f"schemes.{k}", f"unknown tier; expected one of {', '.join(TIERS)}")
        _scheme(cfg, k)
    for k, v in cfg.get("validity", {}).items():
        if k not in _VALIDITY_KEYS:
            raise ConfigError(f"validity.{k}", f"unknown key; expected one of {', '.join(sorted(_VALIDITY_KEYS))}")
        if not isinstance(v, int) or v <= 0:
            raise ConfigError(f"validity.{k}", "must be a positive integer")
    plmns = cfg.get("plmns")
    if not isinstance(plmns, list) or not plmns:
        raise ConfigError("plmns", "need a non-empty list of PLMNs")
    seen: dict[str, str] = {}
    ids = set()
    for i, p in enumerate(plmns):
        at = f"plmns[{i}]"
        if not isinstance(p, dict):
            raise ConfigError(at, "must be an object")
        for k in p:
            if k not in _PLMN_KEYS:
                raise ConfigError(f"{at}.{k}", "unknown key")
        for k in ("id", "nrf", "sepp"):
            if not isinstance(p.get(k), str) or not p[k]:
                raise ConfigError(f"{at}.{k}", "required string")
        if p["id"] in ids or "/" in p["id"]:
            raise ConfigError(f"{at}.id", f"duplicate or invalid PLMN id {p['id']!r}")
        ids.add(p["id"])
        labels = [(f"{at}.nrf", p["nrf"]), (f"{at}.sepp", p["sepp"])]
        if p.get("pcf") is not None:
            labels.append((f"{at}.pcf", p["pcf"]))
        for k in ("nfs", "scps", "ipx"):
            items = p.get(k, [])
            if not isinstance(items, list):
                raise ConfigError(f"{at}.{k}", "must be a list")
            labels += [(f"{at}.{k}[{j}]", x) for j, x in enumerate(items)]
        for path, label in labels:
            if not isinstance(label, str) or not label or "/" in label or "*" in label or "." in label:
                raise ConfigError(path, f"invalid label {label!r}")
            if label in seen:
                raise ConfigError(path, f"label {label!r} already used at {seen[label]}")
            seen[label] = path


def build_topology(config: dict[str, Any] | None = None, *, seed: int | None = None) -> Topology:
    """Key every authority and entity and replay all issuance flows over the channel."""
    cfg = copy.deepcopy(default_config() if config is None else config)
    _check_config(cfg)
    if seed is not None:
        cfg["seed"] = seed
    cfg.setdefault("seed", 1)
    rng = random.Random(cfg["seed"])
    validity = cfg.get("validity", {})
    ciphers = list(cfg.get("ciphers", au.DEFAULT_CIPHERS))

    def key(tier: str) -> KeyPair:
        return crypto.generate_keypair(_scheme(cfg, tier), rng.getrandbits(63))

    root = au.new_ca(au.CaTier.ROOT, "global", "root-ca", keypair=key("root"),
                     validity=validity.get("root"))
    inter = au.new_ca(au.CaTier.INTER_PLMN, "global", "inter-plmn-ca", keypair=key("inter"),
                      validity=validity.get("inter"))
    root_anchor = TrustAnchor(root.name, root.public_key)
    logs = [MerkleLog(EntityName("global", EntityKind.CT_LOG, f"ct-log-{i + 1}"), key("log"),
                      accepted_roots=[root_anchor])
            for i in range(cfg.get("ct_logs", 1))]
    topo = Topology(cfg, root, inter, logs, rng=random.Random(rng.getrandbits(63)))
    ch = topo.channel

    def add(rec: EntityRecord) -> EntityRecord:
        topo.entities[rec.label] = rec
        return rec

    for ca in (root, inter):
        add(EntityRecord(ca.name, ca.keypair, ca=ca))
    for log in logs:
        add(EntityRecord(log.name, log.keypair, log=log))

    ch.send(inter.name.label, root.name.label, "CaCertRequest", inter.name.encode() + inter.public_key.encode(), 0)
    cert = au.certify_ca(root, inter, 0)
    ch.send(root.name.label, inter.name.label, "CaCert", cert.encode(), 0)
    topo.entities[inter.name.label].certs.append(cert)

    allowed_ca = [f"{p['id']}/PLMN_CA/plmn-ca.{p['id']}" for p in cfg["plmns"]]
    inter.identity_verifier = au.allow_list(allowed_ca)

    for i, p in enumerate(cfg["plmns"]):
        pid = p["id"]
        plmn_ciphers = list(p.get("ciphers", ciphers))
        intra = au.new_ca(au.CaTier.INTRA_PLMN, pid, f"intra-ca.{pid}", keypair=key("intra"),
                          validity=validity.get("intra"), cipher_list=plmn_ciphers)
        pca = au.new_ca(au.CaTier.PLMN, pid, f"plmn-ca.{pid}", keypair=key("plmn"),
                        validity=validity.get("plmn"))
        add(EntityRecord(intra.name, intra.keypair, ca=intra))
        pca_rec = add(EntityRecord(pca.name, pca.keypair, ca=pca))
        ch.send(pca.name.label, inter.name.label, "CaCertRequest", pca.name.encode() + pca.public_key.encode(), 0)
        cert = au.certify_ca(inter, pca, 0)
        ch.send(inter.name.label, pca.name.label, "CaCert", cert.encode(), 0)
        pca_rec.certs.append(cert)

        published = au.publish_cipher_list(intra)
        intra_anchor = TrustAnchor(intra.name, intra.public_key)
        members = ([(x, EntityKind.NF) for x in p.get("nfs", [])]
                   + [(x, EntityKind.SCP) for x in p.get("scps", [])]
                   + [(p["nrf"], EntityKind.NRF)]
                   + ([(p["pcf"], EntityKind.PCF)] if p.get("pcf") else []))
        intra.identity_verifier = au.allow_list([EntityName(pid, k, x) for x, k in members])
        for label, kind in members:
            rec = add(EntityRecord(EntityName(pid, kind, label), key("entity"),
                                   trust_anchors=[intra_anchor], ciphers=list(published)))
            ch.send(label, intra.name.label, "CertRequest", rec.name.encode() + rec.keypair.public.encode(), 0)
            cert = au.intra_plmn_auto_issue(intra, rec.name, rec.keypair.public, 0, validity.get("nf"))
            ch.send(intra.name.label, label, "Cert", cert.encode(), 0)
            rec.certs.append(cert)

        sepp_name = EntityName(pid, EntityKind.SEPP, f"*.sepp.{pid}.example")
        ipx_names = [EntityName(pid, EntityKind.IPX, x) for x in p.get("ipx", [])]
        pca.identity_verifier = au.allow_list([sepp_name, *ipx_names])
        sepp = add(EntityRecord(sepp_name, key("entity"), trust_anchors=[root_anchor],
                                log_keys=[log.public_key for log in logs],
                                host=f"{p['sepp']}.sepp.{pid}.example", ciphers=list(published)))
        ch.send(sepp.label, pca.name.label, "CertRequest", sepp_name.encode() + sepp.keypair.public.encode(), 0)
        try:
            record = au.plmn_ca_issue_sepp(pca, sepp_name, sepp.keypair.public,
                                           topo.log_clients(pca.name.label), 0, validity.get("sepp"))
        except au.NoLogs as exc:
            raise ConfigError("ct_logs", f"SEPP issuance for {pid} needs at least one CT log") from exc
        ch.send(pca.name.label, sepp.label, "Cert",
                record.cert.encode() + b"".join(lp(x.encode()) for x in record.audit_proofs), 0)
        sepp.certs.append(record.cert)
        sepp.audit_proofs = list(record.audit_proofs)
        # also reachable under its short config label
        topo.entities.setdefault(p["sepp"], sepp)

        for ipx_name in ipx_names:
            rec = add(EntityRecord(ipx_name, key("entity"), trust_anchors=[root_anchor]))
            ch.send(ipx_name.label, pca.name.label, "CertRequest", ipx_name.encode() + rec.keypair.public.encode(), 0)
            cert = au.plmn_ca_issue_ipx(pca, ipx_name, rec.keypair.public, 0, validity.get("ipx"))
            ch.send(pca.name.label, ipx_name.label, "Cert", cert.encode(), 0)
            rec.certs.append(cert)

        topo.plmns[pid] = PlmnRecord(pid, intra, pca, p["nrf"], p.get("pcf"), list(p.get("nfs", [])),
                                     list(p.get("scps", [])), sepp.label, [n.label for n in ipx_names])
    return topo


def advance_clock(topo: Topology, dt: int) -> int:
    if dt < 0:
        raise ValueError("the clock only moves forward")
    topo.clock += dt
    return topo.clock


def compromise(topo: Topology, ref: str | EntityName) -> Adversary:
    """Hand ``ref``'s private key (and, for CAs and logs, their state) to the adversary."""
    rec = topo.entity(ref)
    rec.compromised = True
    topo.adversary.learn(rec.keypair)
    return topo.adversary


def transcript_knowledge(topo: Topology) -> set[bytes]:
    """Public keys whose private halves can be read off the channel or were compromised.

    The scan is literal: a private key is learnable from the transcript iff its
    bytes occur inside some message payload.
    """
    known = {pub for pub in topo.adversary.keys}
    blob = b"\x00".join(m.payload for m in topo.channel.transcript)
    seen = set()
    for rec in topo.entities.values():
        if id(rec) in seen:
            continue
        seen.add(id(rec))
        if rec.keypair.private_key and rec.keypair.private_key in blob:
            known.add(rec.keypair.public.encode())
    return known


__all__ = [
    "Topology", "EntityRecord", "PlmnRecord", "Channel", "Message", "Adversary", "ConfigError",
    "UnknownEntity", "DEFAULT_CONFIG", "default_config", "load_config", "build_topology",
    "advance_clock", "compromise", "transcript_knowledge",
]
