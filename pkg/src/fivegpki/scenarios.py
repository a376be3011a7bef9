"""Scripted Dolev-Yao adversary runs against a topology, and the two secrecy goals.

Goal 1: whenever two NFs (directly or through an SCP) accept each other, the
adversary does not hold the private key bound by either certificate.

Goal 2: the same for a cSEPP/pSEPP pair across PLMNs.

The adversary reads the whole channel, signs with any key it holds, mints
certificates, registers them with CT logs, forges tree heads when it holds a
log key, tampers with messages in flight, replays old messages and
impersonates entities.  A script is an ordered list of such actions; the
outcome records every handshake attempt and, on a violation, a replayable
witness.
"""

from __future__ import annotations

import enum
import itertools
import json
import time
from dataclasses import dataclass, field
from typing import Any, Iterable

from . import authorities as au
from . import crypto
from .certmodel import Crl, EntityKind, EntityName, FiveGCert, sign_cert, sign_crl
from .crypto import KeyPair
from .handshake import (HandshakeTranscript, Party, inter_plmn_handshake, intra_plmn_handshake,
                        intra_plmn_handshake_via_scp, run_handshake)
from .topology import ConfigError, Message, Topology, build_topology, compromise, default_config
from .translog import AuditProof, MerkleLog

MINT_VALIDITY = 1000


class Goal(enum.Enum):
    GOAL1 = "GOAL1"
    GOAL2 = "GOAL2"
    PFCP = "PFCP"

    @classmethod
    def parse(cls, raw: str | int | "Goal") -> "Goal":
        if isinstance(raw, Goal):
            return raw
        text = str(raw).strip().upper()
        return cls({"1": "GOAL1", "2": "GOAL2"}.get(text, text))


GOAL1_ROLES = ("intra_plmn_ca",)
GOAL2_ROLES = ("plmn_ca", "inter_plmn_ca", "ct_log")
PFCP_VARIANTS = ("default", "no_mutual_auth", "compromised_intra_ca")


class ScenarioError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    topology: dict[str, Any] = field(default_factory=default_config)
    goal: Goal = Goal.GOAL2
    compromise_set: list[str] = field(default_factory=list)
    script: list[dict[str, Any]] | None = None
    seed: int | None = None
    variant: str = "default"

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ScenarioConfig":
        known = {"topology", "goal", "compromise", "script", "seed", "variant"}
        for k in raw:
            if k not in known:
                raise ConfigError(k, "unknown key")
        try:
            goal = Goal.parse(raw.get("goal", "GOAL2"))
        except ValueError as exc:
            raise ConfigError("goal", f"expected GOAL1, GOAL2 or PFCP, got {raw.get('goal')!r}") from exc
        script = raw.get("script")
        if script is not None and not (isinstance(script, list) and all(isinstance(a, dict) for a in script)):
            raise ConfigError("script", "must be a list of action objects")
        comp = raw.get("compromise", [])
        if not isinstance(comp, list) or not all(isinstance(x, str) for x in comp):
            raise ConfigError("compromise", "must be a list of role tokens or entity labels")
        variant = raw.get("variant", "default")
        if variant not in PFCP_VARIANTS:
            raise ConfigError("variant", f"expected one of {', '.join(PFCP_VARIANTS)}")
        return cls(raw.get("topology") or default_config(), goal, list(comp), script, raw.get("seed"), variant)


@dataclass
class Witness:
    """Everything needed to re-run an attack: config, compromise set, actions, and what was seen."""

    goal: Goal
    topology: dict[str, Any]
    seed: int | None
    compromise_set: list[str]
    actions: list[dict[str, Any]]
    messages: list[Message] = field(default_factory=list)
    variant: str = "default"

    def to_dict(self) -> dict[str, Any]:
        return {
            "goal": self.goal.value,
            "topology": self.topology,
            "seed": self.seed,
            "compromise": self.compromise_set,
            "actions": self.actions,
            "variant": self.variant,
            "messages": [{"src": m.src, "dst": m.dst, "kind": m.kind, "tick": m.tick,
                          "payload": m.payload.hex()} for m in self.messages],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "Witness":
        msgs = [Message(m["src"], m["dst"], m["kind"], bytes.fromhex(m["payload"]), m["tick"])
                for m in raw.get("messages", [])]
        return cls(Goal.parse(raw["goal"]), raw["topology"], raw.get("seed"), list(raw["compromise"]),
                   list(raw["actions"]), msgs, raw.get("variant", "default"))


@dataclass
class ScenarioOutcome:
    goal: Goal
    goal_holds: bool
    witness: Witness | None = None
    handshakes_attempted: int = 0
    handshakes_established: int = 0
    steps: list[str] = field(default_factory=list)
    runtime_s: float = 0.0

    def summary(self) -> dict[str, Any]:
        return {
            "goal": self.goal.value,
            "goal_holds": self.goal_holds,
            "handshakes_attempted": self.handshakes_attempted,
            "handshakes_established": self.handshakes_established,
            "witness_actions": len(self.witness.actions) if self.witness else 0,
            "runtime_s": round(self.runtime_s, 6),
        }


# -- compromise tokens ---------------------------------------------------------

def _target_plmns(topo: Topology) -> tuple[str, str]:
    ids = list(topo.plmns)
    return ids[0], ids[-1]


def resolve_compromise(topo: Topology, tokens: Iterable[str]) -> list[str]:
    """Map role tokens to entity labels; anything else must already be a label."""
    first, last = _target_plmns(topo)
    out: list[str] = []
    for tok in tokens:
        if tok == "intra_plmn_ca":
            out.append(topo.plmns[first].intra_ca.name.label)
        elif tok == "plmn_ca":
            out.append(topo.plmns[last].plmn_ca.name.label)
        elif tok == "inter_plmn_ca":
            out.append(topo.inter_plmn_ca.name.label)
        elif tok == "ct_log":
            out += [log.name.label for log in topo.ct_logs]
        else:
            out.append(topo.entity(tok).label)
    return out


# -- the adversary -----------------------------------------------------------

class _Run:
    def __init__(self, topo: Topology, goal: Goal, seed: int):
        self.topo = topo
        self.goal = goal
        self.seed = seed
        self.minted: dict[str, FiveGCert] = {}
        self.proofs: dict[str, list[AuditProof]] = {}
        self.crls: list[Crl] = []
        self.own_keys: dict[str, KeyPair] = {}
        self.attempted = 0
        self.established = 0
        self.steps: list[str] = []
        self.executed: list[dict[str, Any]] = []
        self.violation: HandshakeTranscript | None = None
        self.scheme = crypto.SchemeId.parse(topo.config.get("schemes", {}).get("entity", "ECDSA-P-256"))

    # key and cert references

    def adv_key(self, name: str) -> KeyPair:
        kp = self.own_keys.get(name)
        if kp is None:
            digest = crypto.H(f"adversary:{self.seed}:{name}".encode())
            kp = crypto.generate_keypair(self.scheme, int.from_bytes(digest[:8], "big"))
            self.own_keys[name] = kp
            self.topo.adversary.learn(kp)
        return kp

    def key(self, ref: str) -> KeyPair:
        kind, _, name = ref.partition(":")
        if kind == "adv":
            return self.adv_key(name)
        if kind == "stolen":
            rec = self.topo.entity(name)
            kp = self.topo.adversary.key_for(rec.keypair.public)
            # Without the real key the adversary can only sign with one of its own.
            return kp or self.adv_key(f"guess-{name}")
        raise ScenarioError(f"bad key reference {ref!r}")

    def subject(self, ref: Any) -> EntityName:
        if isinstance(ref, dict):
            return EntityName(ref["plmn"], EntityKind(ref["kind"]), ref["label"])
        kind, _, name = str(ref).partition(":")
        if kind == "honest":
            return self.topo.entity(name).name
        raise ScenarioError(f"bad subject reference {ref!r}")

    def cert(self, ref: str) -> tuple[FiveGCert, list[AuditProof]]:
        if ref in self.minted:
            return self.minted[ref], self.proofs.get(ref, [])
        kind, _, name = ref.partition(":")
        if kind == "honest":
            rec = self.topo.entity(name)
            return rec.cert, list(rec.audit_proofs)
        raise ScenarioError(f"unknown certificate {ref!r}")

    # bookkeeping

    def note_handshake(self, t: HandshakeTranscript, what: str) -> None:
        self.attempted += 1
        status = t.outcome.value + (f"({t.reason.value})" if t.reason else "")
        if t.established:
            self.established += 1
            adv = self.topo.adversary
            bound = [c for c in t.certs_exchanged if c is not None]
            if any(adv.knows(c.subject_public_key) for c in bound) and self.violation is None:
                self.violation = t
                status += " binding an adversary-held key"
        self.steps.append(f"{what}: {status}")

    # actions

    def do(self, action: dict[str, Any]) -> None:
        op = action.get("op")
        handler = getattr(self, f"op_{op}", None)
        if handler is None:
            raise ScenarioError(f"unknown action {op!r}")
        self.executed.append(dict(action))
        handler(action)

    def op_honest_handshake(self, a):
        src, dst, via = a["from"], a["to"], a.get("via")
        if via:
            r = intra_plmn_handshake_via_scp(self.topo, src, via, dst)
            for h in r.hops:
                self.note_handshake(h, f"honest {h.initiator} -> {h.responder}")
            return
        rec = self.topo.entity(src)
        fn = inter_plmn_handshake if rec.name.kind is EntityKind.SEPP else intra_plmn_handshake
        self.note_handshake(fn(self.topo, src, dst), f"honest {src} -> {dst}")

    def op_mint_cert(self, a):
        subject = self.subject(a["subject"])
        pub = self.key(a.get("key", "adv:minted")).public
        issuer_ref = a["issuer"]
        now = self.topo.clock
        if issuer_ref.startswith("minted:"):
            parent = self.minted[issuer_ref.split(":", 1)[1]]
            issuer, chain = parent.subject, (parent, *parent.embedded_chain)
            signer = self.topo.adversary.key_for(parent.subject_public_key) or self.adv_key("forger")
        else:
            rec = self.topo.entity(issuer_ref)
            if rec.ca is None:
                raise ScenarioError(f"{issuer_ref} is not a CA")
            issuer, chain = rec.ca.name, tuple(rec.ca._chain_for_children())
            signer = self.topo.adversary.key_for(rec.ca.public_key) or self.adv_key("forger")
        serial = 1_000_000 + len(self.minted)
        body = FiveGCert(subject, pub, issuer, serial, now, now + int(a.get("validity", MINT_VALIDITY)), chain)
        self.minted[a["id"]] = sign_cert(body, signer)
        self.steps.append(f"mint {a['id']}: {subject} by {issuer.label}")

    def op_forge_crl(self, a):
        rec = self.topo.entity(a["issuer"])
        target, _ = self.cert(a["revoke"])
        signer = self.topo.adversary.key_for(rec.ca.public_key) or self.adv_key("forger")
        self.crls.append(sign_crl(rec.ca.name, rec.ca.crl.revoked | {(target.serial, self.topo.clock)},
                                  self.topo.clock, signer))
        self.steps.append(f"forge CRL from {rec.ca.name.label} revoking {target.serial}")

    def _logs(self, which: str) -> list[MerkleLog]:
        if which == "all":
            return list(self.topo.ct_logs)
        return [self.topo.entity(which).log]

    def op_register_with_log(self, a):
        cert, _ = self.cert(a["cert"])
        for log in self._logs(a.get("log", "all")):
            client = au.LogClient(log)
            self.topo.channel.send("adversary", log.name.label, "CtRegister", cert.encode(), self.topo.clock)
            try:
                proof = client.register(cert, self.topo.clock, crls=self.crls)
            except Exception as exc:  # DomainConflict, ChainRejected, NotSeppCert
                self.topo.channel.send(log.name.label, "adversary", "CtError", str(exc).encode(), self.topo.clock)
                self.steps.append(f"register {a['cert']} with {log.name.label}: refused ({type(exc).__name__})")
                continue
            self.topo.channel.send(log.name.label, "adversary", "CtAuditProof", proof.encode(), self.topo.clock)
            self.proofs.setdefault(a["cert"], []).append(proof)
            self.steps.append(f"register {a['cert']} with {log.name.label}: accepted")

    def op_forge_sth(self, a):
        cert, _ = self.cert(a["cert"])
        for log in self._logs(a.get("log", "all")):
            key = self.topo.adversary.key_for(log.public_key) or self.adv_key("forger")
            shadow = MerkleLog(log.name, key, list(log.leaves))
            idx = shadow.append(cert, self.topo.clock, enforce_policy=False)
            self.proofs.setdefault(a["cert"], []).append(shadow.inclusion_proof(idx, now=self.topo.clock))
            self.steps.append(f"forge STH for {a['cert']} under {log.name.label}")

    def _impersonator(self, victim_ref: str, cert_ref: str, key_ref: str) -> Party:
        victim = self.topo.entity(victim_ref)
        cert, proofs = self.cert(cert_ref)
        return Party(victim.label, self.key(key_ref), cert, list(victim.ciphers), list(victim.trust_anchors),
                     list(proofs), list(victim.log_keys))

    def op_impersonate_handshake(self, a):
        victim, peer = self.topo.entity(a["as"]), self.topo.entity(a["peer"])
        rogue = self._impersonator(a["as"], a["cert"], a.get("key", "adv:minted"))
        inter = victim.name.kind is EntityKind.SEPP
        fn = inter_plmn_handshake if inter else intra_plmn_handshake
        if a.get("role", "responder") == "responder":
            t = fn(self.topo, peer, victim, responder_party=rogue)
        else:
            t = fn(self.topo, victim, peer, initiator_party=rogue)
        self.note_handshake(t, f"impersonate {victim.label} to {peer.label} with {a['cert']}")

    def op_tamper_message(self, a):
        kind, pos, bit = a.get("message", "ServerHello"), int(a.get("position", 0)), int(a.get("bit", 1))

        def tamper(k, payload):
            if k != kind or not payload:
                return payload
            i = pos % len(payload)
            return payload[:i] + bytes([payload[i] ^ (bit & 0xFF or 1)]) + payload[i + 1:]

        src, dst = self.topo.entity(a["from"]), self.topo.entity(a["to"])
        if src.name.kind is EntityKind.SEPP:
            t = inter_plmn_handshake(self.topo, src, dst, tamper=tamper)
        else:
            t = intra_plmn_handshake(self.topo, src, dst, tamper=tamper)
        self.note_handshake(t, f"tamper {kind}@{pos} {src.label} -> {dst.label}")

    def op_replay(self, a):
        """Answer a fresh ClientHello with an old recorded message from the impersonated entity."""
        victim, peer = self.topo.entity(a["as"]), self.topo.entity(a["peer"])
        kind = a.get("message", "ServerHello")
        old = next((m for m in self.topo.channel.transcript if m.src == victim.label and m.kind == kind), None)
        if old is None:
            self.steps.append(f"replay {kind} of {victim.label}: nothing recorded")
            return
        rogue = Party(victim.label, self.adv_key("replayer"), victim.cert, list(victim.ciphers),
                      list(victim.trust_anchors), list(victim.audit_proofs), list(victim.log_keys))

        def swap(k, payload):
            return old.payload if k == kind else payload

        need = victim.name.kind is EntityKind.SEPP
        t = run_handshake(self.topo, Party.of(peer), rogue, target=victim.label, need_proofs=need, tamper=swap)
        self.note_handshake(t, f"replay {kind} of {victim.label} to {peer.label}")


# -- default scripts -------------------------------------------------------------

def default_script(topo: Topology, goal: Goal) -> list[dict[str, Any]]:
    first, last = _target_plmns(topo)
    if goal is Goal.GOAL1:
        p = topo.plmns[first]
        if len(p.nfs) < 2 or not p.scps:
            raise ScenarioError(f"goal 1 needs two NFs and an SCP in {first}")
        a, b, scp, ca = p.nfs[0], p.nfs[1], p.scps[0], p.intra_ca.name.label
        return [
            {"op": "honest_handshake", "from": a, "to": b},
            {"op": "honest_handshake", "from": a, "to": b, "via": scp},
            {"op": "replay", "as": b, "peer": a},
            {"op": "tamper_message", "from": a, "to": b, "message": "ServerHello", "position": 40},
            {"op": "mint_cert", "id": "nf", "issuer": ca, "subject": f"honest:{b}", "key": "adv:nf"},
            {"op": "impersonate_handshake", "as": b, "peer": a, "cert": "nf", "key": "adv:nf"},
            {"op": "mint_cert", "id": "scp", "issuer": ca, "subject": f"honest:{scp}", "key": "adv:scp"},
            {"op": "impersonate_handshake", "as": scp, "peer": a, "cert": "scp", "key": "adv:scp"},
        ]
    if goal is Goal.GOAL2:
        if first == last:
            raise ScenarioError("goal 2 needs at least two PLMNs")
        c, p = topo.sepp_of(first), topo.sepp_of(last)
        pca, inter = topo.plmns[last].plmn_ca.name.label, topo.inter_plmn_ca.name.label
        exact = {"plmn": last, "kind": "SEPP", "label": p.host}
        script: list[dict[str, Any]] = [
            {"op": "honest_handshake", "from": c.label, "to": p.label},
            {"op": "replay", "as": p.label, "peer": c.label},
            {"op": "tamper_message", "from": c.label, "to": p.label, "message": "ServerHello", "position": 64},
            # chain under the honest PLMN CA's key, for the wildcard domain and for the exact host
            {"op": "mint_cert", "id": "sepp", "issuer": pca, "subject": f"honest:{p.label}", "key": "adv:sepp"},
            {"op": "mint_cert", "id": "host", "issuer": pca, "subject": exact, "key": "adv:sepp"},
            # a rogue PLMN CA under the inter-PLMN CA's key, then a SEPP cert under it
            {"op": "mint_cert", "id": "pca", "issuer": inter, "subject": f"honest:{pca}", "key": "adv:pca"},
            {"op": "mint_cert", "id": "sepp2", "issuer": "minted:pca", "subject": f"honest:{p.label}",
             "key": "adv:sepp"},
            {"op": "forge_crl", "issuer": pca, "revoke": f"honest:{p.label}"},
        ]
        for cid in ("sepp", "host", "sepp2"):
            script.append({"op": "register_with_log", "cert": cid, "log": "all"})
        for cid in ("sepp", "host", "sepp2"):
            script.append({"op": "impersonate_handshake", "as": p.label, "peer": c.label, "cert": cid,
                           "key": "adv:sepp"})
        for cid in ("sepp", "host", "sepp2"):
            script.append({"op": "forge_sth", "cert": cid, "log": "all"})
            script.append({"op": "impersonate_handshake", "as": p.label, "peer": c.label, "cert": cid,
                           "key": "adv:sepp"})
        return script
    raise ScenarioError("PFCP runs use pfcp_attack_scenario")


# -- entry points ----------------------------------------------------------------

def _execute(cfg: ScenarioConfig, actions: list[dict[str, Any]] | None = None,
             topo: Topology | None = None) -> tuple[_Run, list[str]]:
    topo = topo or build_topology(cfg.topology, seed=cfg.seed)
    labels = resolve_compromise(topo, cfg.compromise_set)
    for label in labels:
        compromise(topo, label)
    seed = topo.config["seed"]
    run = _Run(topo, cfg.goal, seed)
    script = actions if actions is not None else (cfg.script or default_script(topo, cfg.goal))
    for action in script:
        run.do(action)
    return run, labels


def run_scenario(cfg: ScenarioConfig) -> ScenarioOutcome:
    if cfg.goal is Goal.PFCP:
        return pfcp_attack_scenario(cfg.topology, variant=cfg.variant, seed=cfg.seed)
    start = time.perf_counter()
    run, _ = _execute(cfg)
    witness = None
    if run.violation is not None:
        lo, hi = run.violation.message_range
        witness = Witness(cfg.goal, cfg.topology, cfg.seed, list(cfg.compromise_set), run.executed,
                          run.topo.channel.transcript[lo:hi])
    return ScenarioOutcome(cfg.goal, run.violation is None, witness, run.attempted, run.established,
                           run.steps, time.perf_counter() - start)


def check_goal1(cfg: ScenarioConfig) -> ScenarioOutcome:
    if cfg.goal is not Goal.GOAL1:
        raise ScenarioError("check_goal1 needs a GOAL1 config")
    return run_scenario(cfg)


def check_goal2(cfg: ScenarioConfig) -> ScenarioOutcome:
    if cfg.goal is not Goal.GOAL2:
        raise ScenarioError("check_goal2 needs a GOAL2 config")
    return run_scenario(cfg)


@dataclass
class MatrixRow:
    compromise_set: tuple[str, ...]
    goal_holds: bool
    runtime_s: float
    outcome: ScenarioOutcome


def compromise_subsets(goal: Goal) -> list[tuple[str, ...]]:
    roles = GOAL1_ROLES if goal is Goal.GOAL1 else GOAL2_ROLES
    return [s for n in range(len(roles) + 1) for s in itertools.combinations(roles, n)]


def run_goal_matrix(topology: dict[str, Any] | None = None, goal: Goal | str = Goal.GOAL2,
                    seed: int | None = None) -> list[MatrixRow]:
    """Evaluate every compromise subset for ``goal`` on its own fresh topology."""
    goal = Goal.parse(goal)
    if goal is Goal.PFCP:
        raise ScenarioError("the matrix covers goals 1 and 2")
    rows = []
    for subset in compromise_subsets(goal):
        cfg = ScenarioConfig(topology or default_config(), goal, list(subset), None, seed)
        start = time.perf_counter()
        out = run_scenario(cfg)
        rows.append(MatrixRow(subset, out.goal_holds, time.perf_counter() - start, out))
    return rows


def replay_witness(witness: Witness) -> ScenarioOutcome:
    """Re-run a witness's actions against a fresh topology built from the same config and seed."""
    if witness.goal is Goal.PFCP:
        return pfcp_attack_scenario(witness.topology, variant=witness.variant, seed=witness.seed)
    cfg = ScenarioConfig(witness.topology, witness.goal, witness.compromise_set, witness.actions, witness.seed)
    return run_scenario(cfg)


# -- PFCP ------------------------------------------------------------------------

def _find(topo: Topology, prefix: str) -> tuple[str, str] | None:
    for pid, p in topo.plmns.items():
        hit = [x for x in p.nfs if x.startswith(prefix)]
        if hit:
            return pid, hit[0]
    return None


def pfcp_attack_scenario(topology: dict[str, Any] | None = None, *, variant: str = "default",
                         seed: int | None = None) -> ScenarioOutcome:
    """A rogue SMF replays a recorded session ID in a PFCP session modification to the UPF.

    The UPF only acts on requests that arrive over a handshake it accepted.
    ``variant`` is ``default``, ``no_mutual_auth`` (control run) or
    ``compromised_intra_ca``.
    """
    if variant not in PFCP_VARIANTS:
        raise ScenarioError(f"unknown PFCP variant {variant!r}")
    start = time.perf_counter()
    cfg_topo = topology or default_config()
    topo = build_topology(cfg_topo, seed=seed)
    smf_hit, upf_hit = _find(topo, "smf"), _find(topo, "upf")
    if smf_hit is None or upf_hit is None or smf_hit[0] != upf_hit[0]:
        raise ScenarioError("PFCP scenario needs an SMF and a UPF in the same PLMN")
    pid, smf_label = smf_hit
    upf_label = upf_hit[1]
    smf, upf = topo.entity(smf_label), topo.entity(upf_label)
    ca = topo.plmns[pid].intra_ca
    if variant == "no_mutual_auth":
        topo.mutual_auth = False
    compromise_set = [ca.name.label] if variant == "compromised_intra_ca" else []
    for label in compromise_set:
        compromise(topo, label)
    run = _Run(topo, Goal.PFCP, topo.config["seed"])
    ch = topo.channel
    sessions: dict[bytes, str] = {}

    def pfcp(t: HandshakeTranscript, sender: str, op: bytes, session_id: bytes) -> bool:
        ch.send(sender, upf.label, "PfcpRequest", op + b":" + session_id.hex().encode(), topo.clock)
        ok = t.established and (op == b"establish" or session_id in sessions)
        if ok and op == b"establish":
            sessions[session_id] = sender
        ch.send(upf.label, sender, "PfcpResponse", b"accepted" if ok else b"denied", topo.clock)
        return ok

    # The legitimate SMF sets up a session; its ID is visible on the channel.
    session_id = topo.fresh_secret()[:8]
    t = intra_plmn_handshake(topo, smf, upf)
    run.note_handshake(t, f"{smf.label} -> {upf.label}")
    pfcp(t, smf.label, b"establish", session_id)
    recorded = next(m for m in reversed(ch.transcript) if m.kind == "PfcpRequest")
    stolen_id = bytes.fromhex(recorded.payload.split(b":", 1)[1].decode())

    # The rogue SMF first asks the intra-PLMN CA for a certificate under its own key.
    rogue_key = run.adv_key("rogue-smf")
    actions: list[dict[str, Any]] = []
    ch.send("rogue-smf", ca.name.label, "CertRequest", smf.name.encode() + rogue_key.public.encode(), topo.clock)
    try:
        rogue_cert = au.intra_plmn_auto_issue(ca, EntityName(pid, EntityKind.NF, "rogue-smf"),
                                              rogue_key.public, topo.clock)
    except au.IdentityCheckFailed:
        rogue_cert = None
        run.steps.append("intra-PLMN CA refused the rogue SMF")
    if variant == "compromised_intra_ca":
        action = {"op": "mint_cert", "id": "rogue", "issuer": ca.name.label, "subject": f"honest:{smf.label}",
                  "key": "adv:rogue-smf"}
        run.do(action)
        actions.append(action)
        rogue_cert = run.minted["rogue"]
    elif rogue_cert is None:
        # Best it can do: a certificate it signed itself.
        action = {"op": "mint_cert", "id": "rogue", "issuer": ca.name.label, "subject": f"honest:{smf.label}",
                  "key": "adv:rogue-smf"}
        run.do(action)
        actions.append(action)
        rogue_cert = run.minted["rogue"]
    rogue = Party(smf.label, rogue_key, rogue_cert, list(smf.ciphers), list(smf.trust_anchors))
    t_rogue = intra_plmn_handshake(topo, smf, upf, initiator_party=rogue)
    run.note_handshake(t_rogue, f"rogue {smf.label} -> {upf.label}")
    rogue_ok = pfcp(t_rogue, "rogue-smf", b"modify", stolen_id)
    run.steps.append(f"rogue modification {'accepted' if rogue_ok else 'denied'}")

    t_legit = intra_plmn_handshake(topo, smf, upf)
    run.note_handshake(t_legit, f"{smf.label} -> {upf.label}")
    legit_ok = pfcp(t_legit, smf.label, b"modify", session_id)
    run.steps.append(f"legitimate modification {'accepted' if legit_ok else 'denied'}")

    holds = (not rogue_ok) and legit_ok
    witness = None
    if not holds:
        lo, hi = t_rogue.message_range
        witness = Witness(Goal.PFCP, cfg_topo, seed, compromise_set, actions,
                          ch.transcript[lo:hi + 2], variant)
    return ScenarioOutcome(Goal.PFCP, holds, witness, run.attempted, run.established, run.steps,
                           time.perf_counter() - start)


__all__ = [
    "Goal", "ScenarioConfig", "ScenarioOutcome", "Witness", "MatrixRow", "ScenarioError",
    "GOAL1_ROLES", "GOAL2_ROLES", "PFCP_VARIANTS", "resolve_compromise", "default_script", "run_scenario",
    "check_goal1", "check_goal2", "compromise_subsets", "run_goal_matrix", "replay_witness",
    "pfcp_attack_scenario",
]
