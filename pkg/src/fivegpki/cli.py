"""fivegpki command line.

Exit codes: 0 success, 1 domain failure (rejection, bad proof, refused
issuance), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path
from typing import Any, Sequence

from . import authorities as au
from . import bench, crypto
from ._wire import DecodeError, armor, dearmor
from .certmodel import EntityKind, EntityName, TrustAnchor, cert_from_text, cert_to_text, crl_to_text
from .crypto import SchemeId
from .persist import StateLocked, atomic_write, state_lock
from .topology import ConfigError, UnknownEntity, build_topology, default_config, load_config
from .translog import AuditProof, LogError, MerkleLog, verify_consistency, verify_inclusion

PROOF_ARMOR = "CT AUDIT PROOF"
STATE_ENV = "FIVEGPKI_STATE_DIR"

TIER_NAMES = {"intra": au.CaTier.INTRA_PLMN, "plmn": au.CaTier.PLMN,
              "inter": au.CaTier.INTER_PLMN, "root": au.CaTier.ROOT}
SUBJECT_KINDS = {"nf": EntityKind.NF, "scp": EntityKind.SCP, "nrf": EntityKind.NRF, "pcf": EntityKind.PCF,
                 "sepp": EntityKind.SEPP, "ipx": EntityKind.IPX, "plmn_ca": EntityKind.PLMN_CA}


class UsageError(Exception):
    pass


class DomainFailure(Exception):
    pass


# -- output --------------------------------------------------------------

class Out:
    def __init__(self, fmt: str, stream=None):
        self.fmt = fmt
        self.stream = stream or sys.stdout

    def record(self, rec: dict[str, Any]) -> None:
        if self.fmt == "json-lines":
            self.stream.write(json.dumps(rec, sort_keys=True) + "\n")
        else:
            self.stream.write("  ".join(f"{k}={_text(v)}" for k, v in rec.items()) + "\n")

    def lines(self, text: str) -> None:
        if self.fmt != "json-lines":
            self.stream.write(text if text.endswith("\n") else text + "\n")


def _text(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return ",".join(_text(x) for x in v) or "-"
    return "-" if v is None else str(v)


# -- state directory -----------------------------------------------------

class State:
    def __init__(self, root: Path, seed: int | None):
        self.root = root
        self.seed = seed

    def key_seed(self, purpose: str) -> int | None:
        """Per-purpose key seed, so separate invocations under one --seed get distinct keys."""
        if self.seed is None:
            return None
        return random.Random(f"{self.seed}/{purpose}").getrandbits(63)

    @property
    def cas(self) -> Path:
        return self.root / "cas"

    @property
    def logs(self) -> Path:
        return self.root / "logs"

    @property
    def certs(self) -> Path:
        return self.root / "certs"

    @property
    def keys(self) -> Path:
        return self.root / "keys"

    def ca_dir(self, label: str) -> Path:
        return self.cas / label

    def load_ca(self, label: str) -> au.CaState:
        d = self.ca_dir(label)
        if not (d / "config").exists():
            raise DomainFailure(f"CA {label!r} is not initialised in {self.root}")
        return au.load_ca(d)

    def ca_labels(self) -> list[str]:
        if not self.cas.is_dir():
            return []
        return sorted(p.name for p in self.cas.iterdir() if (p / "config").exists())

    def root_anchors(self) -> list[TrustAnchor] | None:
        for label in self.ca_labels():
            ca = self.load_ca(label)
            if ca.tier is au.CaTier.ROOT:
                return [TrustAnchor(ca.name, ca.public_key)]
        return None

    def load_log(self, name: str) -> MerkleLog:
        d = self.logs / name
        if not (d / "log.key").exists():
            raise DomainFailure(f"log {name!r} is not initialised in {self.root}")
        log = MerkleLog.load(d)
        log.accepted_roots = self.root_anchors()
        return log

    def log_names(self) -> list[str]:
        if not self.logs.is_dir():
            return []
        return sorted(p.name for p in self.logs.iterdir() if (p / "log.key").exists())


def _file_label(label: str) -> str:
    return label.replace("*", "wildcard")


def _now(args) -> int:
    return args.now if args.now is not None else 0


# -- keygen --------------------------------------------------------------

def cmd_keygen(args, st: State, out: Out) -> int:
    kp = crypto.generate_keypair(SchemeId.parse(args.scheme), st.key_seed(f"keygen/{args.out}"))
    atomic_write(Path(args.out), crypto.keypair_to_text(kp).encode())
    out.record({"scheme": kp.scheme.value, "fingerprint": kp.public.fingerprint(), "path": args.out})
    return 0


# -- ca ------------------------------------------------------------------

def _default_ca_label(tier: au.CaTier, plmn: str | None) -> str:
    if tier is au.CaTier.ROOT:
        return "root-ca"
    if tier is au.CaTier.INTER_PLMN:
        return "inter-plmn-ca"
    if not plmn:
        raise UsageError(f"--plmn is required for a {tier.value} CA")
    return f"{'intra-ca' if tier is au.CaTier.INTRA_PLMN else 'plmn-ca'}.{plmn}"


def cmd_ca_init(args, st: State, out: Out) -> int:
    tier = TIER_NAMES[args.tier]
    plmn = args.plmn if tier in (au.CaTier.INTRA_PLMN, au.CaTier.PLMN) else "global"
    label = args.label or _default_ca_label(tier, args.plmn)
    if (st.ca_dir(label) / "config").exists():
        raise DomainFailure(f"CA {label!r} already exists")
    ca = au.new_ca(tier, plmn, label, SchemeId.parse(args.scheme), st.key_seed(f"ca/{label}"), validity=args.validity)
    if tier in (au.CaTier.PLMN, au.CaTier.INTER_PLMN):
        parent_label = args.parent or ("root-ca" if tier is au.CaTier.INTER_PLMN else "inter-plmn-ca")
        parent = st.load_ca(parent_label)
        au.certify_ca(parent, ca, _now(args))
        au.save_ca(parent, st.ca_dir(parent_label))
    au.save_ca(ca, st.ca_dir(label))
    out.record({"ca": label, "tier": tier.value, "plmn": plmn, "scheme": ca.keypair.scheme.value,
                "fingerprint": ca.public_key.fingerprint()})
    return 0


def _pick_ca(st: State, tiers: tuple[au.CaTier, ...], plmn: str | None, explicit: str | None) -> au.CaState:
    if explicit:
        return st.load_ca(explicit)
    matches = []
    for label in st.ca_labels():
        ca = st.load_ca(label)
        if ca.tier in tiers and (plmn is None or ca.name.plmn_id == plmn):
            matches.append(ca)
    if len(matches) != 1:
        want = "/".join(t.value for t in tiers)
        raise UsageError(f"found {len(matches)} {want} CAs; name one with --ca")
    return matches[0]


def _parse_subject(text: str) -> tuple[EntityKind, str]:
    kind, sep, label = text.partition(":")
    if not sep or kind.lower() not in SUBJECT_KINDS or not label:
        raise UsageError(f"--subject must look like kind:label with kind in {', '.join(SUBJECT_KINDS)}")
    return SUBJECT_KINDS[kind.lower()], label


def cmd_ca_issue(args, st: State, out: Out) -> int:
    kind, label = _parse_subject(args.subject)
    if kind in (EntityKind.NF, EntityKind.SCP, EntityKind.NRF, EntityKind.PCF):
        tiers = (au.CaTier.INTRA_PLMN,)
    elif kind is EntityKind.PLMN_CA:
        tiers = (au.CaTier.INTER_PLMN,)
    else:
        tiers = (au.CaTier.PLMN,)
    ca = _pick_ca(st, tiers, args.plmn, args.ca)
    plmn = args.plmn or ca.name.plmn_id
    subject = EntityName(plmn, kind, label)
    if args.pubkey:
        kp = crypto.keypair_from_text(Path(args.pubkey).read_text())
    else:
        purpose = f"entity/{subject}/{ca.next_serial}"
        kp = crypto.generate_keypair(SchemeId.parse(args.scheme), st.key_seed(purpose))
    now = _now(args)
    proofs: list[AuditProof] = []
    logs: list[MerkleLog] = []
    if kind is EntityKind.SEPP:
        logs = [st.load_log(n) for n in (args.log or st.log_names())]
        record = au.plmn_ca_issue_sepp(ca, subject, kp.public, [au.LogClient(x) for x in logs], now, args.validity)
        cert, proofs = record.cert, record.audit_proofs
    elif kind is EntityKind.IPX:
        cert = au.plmn_ca_issue_ipx(ca, subject, kp.public, now, args.validity)
    elif kind is EntityKind.PLMN_CA:
        cert = au.inter_plmn_ca_issue(ca, subject, kp.public, now, args.validity)
    else:
        cert = au.intra_plmn_auto_issue(ca, subject, kp.public, now, args.validity)
    au.save_ca(ca, st.ca_dir(ca.name.label))
    for log in logs:
        log.save(st.logs / log.name.label)
    # the key is only stored once issuance succeeded, so a refusal never clobbers a live key
    if not args.pubkey:
        atomic_write(st.keys / f"{_file_label(label)}.key", crypto.keypair_to_text(kp).encode())
    path = st.certs / f"{_file_label(label)}.cert"
    atomic_write(path, cert_to_text(cert).encode())
    for log, proof in zip(logs, proofs):
        atomic_write(st.certs / f"{_file_label(label)}.{log.name.label}.proof",
                     armor(proof.encode(), PROOF_ARMOR).encode())
    out.record({"serial": cert.serial, "subject": str(subject), "issuer": ca.name.label, "path": str(path),
                "not_before": cert.not_before, "not_after": cert.not_after, "proofs": len(proofs)})
    return 0


def cmd_ca_renew(args, st: State, out: Out) -> int:
    ca = st.load_ca(args.ca)
    old = ca.issued.get(args.serial)
    logs = [st.load_log(n) for n in st.log_names()] if old is not None and old.subject.kind is EntityKind.SEPP else []
    record = au.renew_record(ca, args.serial, _now(args), args.validity, [au.LogClient(x) for x in logs])
    au.save_ca(ca, st.ca_dir(ca.name.label))
    for log in logs:
        log.save(st.logs / log.name.label)
    path = st.certs / f"{_file_label(record.cert.subject.label)}.cert"
    atomic_write(path, cert_to_text(record.cert).encode())
    out.record({"old_serial": args.serial, "serial": record.cert.serial, "path": str(path)})
    return 0


def cmd_ca_revoke(args, st: State, out: Out) -> int:
    ca = st.load_ca(args.ca)
    crl = au.revoke(ca, args.serial, _now(args))
    au.save_ca(ca, st.ca_dir(ca.name.label))
    out.record({"ca": ca.name.label, "revoked": sorted(crl.serials()), "issued_at": crl.issued_at})
    return 0


def cmd_ca_crl(args, st: State, out: Out) -> int:
    ca = st.load_ca(args.ca)
    text = crl_to_text(ca.crl)
    if args.out:
        atomic_write(Path(args.out), text.encode())
    out.record({"ca": ca.name.label, "revoked": sorted(ca.crl.serials()), "issued_at": ca.crl.issued_at,
                "verifies": ca.crl.verify(ca.public_key)})
    if not args.out:
        out.lines(text)
    return 0


# -- log -----------------------------------------------------------------

def cmd_log_init(args, st: State, out: Out) -> int:
    d = st.logs / args.name
    if (d / "log.key").exists():
        raise DomainFailure(f"log {args.name!r} already exists")
    kp = crypto.generate_keypair(SchemeId.parse(args.scheme), st.key_seed(f"log/{args.name}"))
    log = MerkleLog(EntityName("global", EntityKind.CT_LOG, args.name), kp)
    log.save(d)
    atomic_write(d / "log.pub", armor(kp.public.encode(), "CT LOG KEY").encode())
    out.record({"log": args.name, "fingerprint": kp.public.fingerprint()})
    return 0


def cmd_log_append(args, st: State, out: Out) -> int:
    log = st.load_log(args.log)
    cert = cert_from_text(Path(args.cert).read_text())
    idx = log.append(cert, _now(args))
    log.save(st.logs / args.log)
    proof = log.inclusion_proof(idx, now=_now(args))
    if args.out:
        atomic_write(Path(args.out), armor(proof.encode(), PROOF_ARMOR).encode())
    out.record({"log": args.log, "index": idx, "tree_size": log.size})
    return 0


def cmd_log_sth(args, st: State, out: Out) -> int:
    log = st.load_log(args.log)
    sth = log.signed_tree_head()
    out.record({"log": args.log, "tree_size": sth.tree_size, "root_hash": sth.root_hash.hex(),
                "timestamp": sth.timestamp})
    return 0


def cmd_log_prove(args, st: State, out: Out) -> int:
    log = st.load_log(args.log)
    proof = log.inclusion_proof(args.index, args.size)
    text = armor(proof.encode(), PROOF_ARMOR)
    if args.out:
        atomic_write(Path(args.out), text.encode())
    out.record({"log": args.log, "index": proof.leaf_index, "tree_size": proof.tree_size,
                "path": [h.hex() for h in proof.path]})
    return 0


def cmd_log_consist(args, st: State, out: Out) -> int:
    log = st.load_log(args.log)
    new = args.new if args.new is not None else log.size
    proof = log.consistency_proof(args.old, new)
    ok = verify_consistency(log.signed_tree_head(tree_size=args.old), log.signed_tree_head(tree_size=new),
                            proof, log.public_key)
    out.record({"log": args.log, "old": args.old, "new": new, "proof": [h.hex() for h in proof], "verifies": ok})
    return 0 if ok else 1


def cmd_log_verify(args, st: State, out: Out) -> int:
    if args.log_key:
        from .crypto import PublicKey
        key = PublicKey.decode(dearmor(Path(args.log_key).read_text(), "CT LOG KEY"))
    else:
        key = st.load_log(args.log).public_key
    cert = cert_from_text(Path(args.cert).read_text())
    try:
        proof = AuditProof.decode(dearmor(Path(args.proof).read_text(), PROOF_ARMOR))
    except (DecodeError, ValueError) as exc:
        out.record({"verifies": False, "reason": f"malformed proof: {exc}"})
        return 1
    ok = verify_inclusion(proof, cert.encode(), key)
    out.record({"verifies": ok, "reason": None if ok else "proof does not verify against the log key"})
    return 0 if ok else 1


# -- topology-backed verbs -------------------------------------------------

def _topology_config(args, st: State) -> dict:
    if args.topology:
        return load_config(args.topology)
    saved = st.root / "topology.json"
    return load_config(saved) if saved.exists() else default_config()


def cmd_handshake(args, st: State, out: Out) -> int:
    from .handshake import HandshakeError, handshake
    topo = build_topology(_topology_config(args, st), seed=args.seed)
    if args.now is not None:
        topo.clock = args.now
    try:
        result = handshake(topo, args.src, args.dst, via=args.via)
    except HandshakeError as exc:
        raise UsageError(str(exc)) from exc
    hops = getattr(result, "hops", [result])
    for h in hops:
        out.record(h.summary())
    ok = all(h.established for h in hops) and len(hops) == (2 if args.via else 1)
    return 0 if ok else 1


def cmd_scenario_run(args, st: State, out: Out) -> int:
    from .scenarios import ScenarioConfig, run_scenario
    raw = load_config(args.config)
    if not isinstance(raw, dict):
        raise ConfigError(args.config, "scenario config must be an object")
    cfg = ScenarioConfig.from_dict(raw)
    if args.seed is not None:
        cfg.seed = args.seed
    outcome = run_scenario(cfg)
    rec = outcome.summary()
    if out.fmt == "json-lines":
        rec.pop("runtime_s")
    out.record(rec)
    out.lines("\n".join(f"  {s}" for s in outcome.steps))
    if args.witness and outcome.witness is not None:
        atomic_write(Path(args.witness), outcome.witness.to_json().encode())
        out.lines(f"witness written to {args.witness}")
    return 0


def cmd_scenario_matrix(args, st: State, out: Out) -> int:
    from .scenarios import run_goal_matrix
    rows = run_goal_matrix(_topology_config(args, st), args.goal, seed=args.seed)
    for row in rows:
        rec = {"goal": args.goal, "compromise": list(row.compromise_set), "goal_holds": row.goal_holds,
               "attempted": row.outcome.handshakes_attempted, "established": row.outcome.handshakes_established}
        if out.fmt != "json-lines" or args.timings:
            rec["runtime_s"] = round(row.runtime_s, 6)
        out.record(rec)
        if args.witness_dir and row.outcome.witness is not None:
            name = "_".join(row.compromise_set) or "none"
            atomic_write(Path(args.witness_dir) / f"goal{args.goal}-{name}.json",
                         row.outcome.witness.to_json().encode())
    return 0


def cmd_scenario_replay(args, st: State, out: Out) -> int:
    from .scenarios import Witness, replay_witness
    w = Witness.from_dict(json.loads(Path(args.witness).read_text()))
    outcome = replay_witness(w)
    rec = outcome.summary()
    if out.fmt == "json-lines":
        rec.pop("runtime_s")
    out.record(rec)
    # a witness replays successfully when it reproduces the goal violation
    return 0 if not outcome.goal_holds else 1


# -- bench ---------------------------------------------------------------

def _cdf_name(r: bench.BenchResult) -> str:
    return f"{r.operation.value}-{r.scheme_label.replace('/', '')}.cdf"


def _bench_record(r: bench.BenchResult) -> dict:
    return {"op": r.operation.value, "scheme": r.scheme_label, "n": len(r.samples), "mean_s": r.mean,
            "p50_s": r.p50, "p95_s": r.p95, "p99_s": r.p99}


def cmd_bench_certops(args, st: State, out: Out) -> int:
    results = bench.bench_cert_ops(SchemeId.parse(args.scheme), args.iters)
    bench.write_csv(results, args.out)
    if args.cdf_dir:
        for r in results:
            bench.emit_cdf(r, Path(args.cdf_dir) / _cdf_name(r))
    for r in results:
        out.record(_bench_record(r))
    return 0


def cmd_bench_handshake(args, st: State, out: Out) -> int:
    topo = build_topology(_topology_config(args, st), seed=args.seed)
    r = bench.bench_handshake(topo, args.iters)
    bench.write_csv([r], args.out)
    out.record(_bench_record(r))
    return 0


def cmd_bench_report(args, st: State, out: Out) -> int:
    from .plotting import plot_cdfs
    d = Path(args.out_dir)
    if args.from_csv:
        results = [r for path in args.from_csv for r in bench.read_csv(path)]
    else:
        results = []
        for scheme in SchemeId:
            results += bench.bench_cert_ops(scheme, args.iters)
        topo = build_topology(_topology_config(args, st), seed=args.seed)
        results.append(bench.bench_handshake(topo, args.handshake_iters))
    bench.write_csv(results, d / "samples.csv")
    for r in results:
        bench.emit_cdf(r, d / _cdf_name(r))
        out.record(_bench_record(r))
    for op in bench.Operation:
        group = [r for r in results if r.operation is op]
        if group:
            fig = plot_cdfs(group, d / f"{op.value}-cdf.png", f"CDF of {op.value} time")
            out.lines(f"figure: {fig}")
    return 0


# -- parser --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fivegpki", description="5G SBA PKI toolkit and simulator")
    p.add_argument("--state-dir", default=os.environ.get(STATE_ENV, ".fivegpki"),
                   help=f"state directory (default ${STATE_ENV} or ./.fivegpki)")
    p.add_argument("--seed", type=int, default=None, help="seed for every random choice")
    p.add_argument("--format", choices=("text", "json-lines"), default="text")
    sub = p.add_subparsers(dest="verb", required=True)

    k = sub.add_parser("keygen", help="generate a key pair")
    k.add_argument("--scheme", default="ECDSA-P-256")
    k.add_argument("--out", required=True)
    k.set_defaults(func=cmd_keygen, mutates=True)

    ca = sub.add_parser("ca", help="certificate authority operations").add_subparsers(dest="ca_verb", required=True)
    c = ca.add_parser("init")
    c.add_argument("--tier", choices=sorted(TIER_NAMES), required=True)
    c.add_argument("--plmn")
    c.add_argument("--label")
    c.add_argument("--parent", help="CA that certifies this one (plmn and inter tiers)")
    c.add_argument("--scheme", default="ECDSA-P-256")
    c.add_argument("--validity", type=int)
    c.add_argument("--now", type=int)
    c.set_defaults(func=cmd_ca_init, mutates=True)
    c = ca.add_parser("issue")
    c.add_argument("--subject", required=True, help="kind:label, e.g. nf:amf-1 or sepp:*.sepp.plmn1.example")
    c.add_argument("--ca")
    c.add_argument("--plmn")
    c.add_argument("--pubkey", help="key file from keygen; a fresh key is generated when absent")
    c.add_argument("--scheme", default="ECDSA-P-256")
    c.add_argument("--validity", type=int)
    c.add_argument("--log", action="append", help="CT log for SEPP issuance (default: all)")
    c.add_argument("--now", type=int)
    c.set_defaults(func=cmd_ca_issue, mutates=True)
    c = ca.add_parser("renew")
    c.add_argument("--ca", required=True)
    c.add_argument("--serial", type=int, required=True)
    c.add_argument("--validity", type=int)
    c.add_argument("--now", type=int)
    c.set_defaults(func=cmd_ca_renew, mutates=True)
    c = ca.add_parser("revoke")
    c.add_argument("--ca", required=True)
    c.add_argument("--serial", type=int, required=True)
    c.add_argument("--now", type=int)
    c.set_defaults(func=cmd_ca_revoke, mutates=True)
    c = ca.add_parser("crl")
    c.add_argument("--ca", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_ca_crl, mutates=False)

    lg = sub.add_parser("log", help="CT log operations").add_subparsers(dest="log_verb", required=True)
    c = lg.add_parser("init")
    c.add_argument("--name", default="ct-log-1")
    c.add_argument("--scheme", default="ECDSA-P-256")
    c.set_defaults(func=cmd_log_init, mutates=True)
    c = lg.add_parser("append")
    c.add_argument("--log", default="ct-log-1")
    c.add_argument("--cert", required=True)
    c.add_argument("--out", help="write the audit proof here")
    c.add_argument("--now", type=int)
    c.set_defaults(func=cmd_log_append, mutates=True)
    c = lg.add_parser("sth")
    c.add_argument("--log", default="ct-log-1")
    c.set_defaults(func=cmd_log_sth, mutates=False)
    c = lg.add_parser("prove")
    c.add_argument("--log", default="ct-log-1")
    c.add_argument("--index", type=int, required=True)
    c.add_argument("--size", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_log_prove, mutates=False)
    c = lg.add_parser("consist")
    c.add_argument("--log", default="ct-log-1")
    c.add_argument("--old", type=int, required=True)
    c.add_argument("--new", type=int)
    c.set_defaults(func=cmd_log_consist, mutates=False)
    c = lg.add_parser("verify")
    c.add_argument("--log", default="ct-log-1")
    c.add_argument("--log-key", help="armored log public key instead of the state directory")
    c.add_argument("--cert", required=True)
    c.add_argument("--proof", required=True)
    c.set_defaults(func=cmd_log_verify, mutates=False)

    h = sub.add_parser("handshake", help="run a handshake in a simulated topology")
    h.add_argument("--topology")
    h.add_argument("--from", dest="src", required=True)
    h.add_argument("--to", dest="dst", required=True)
    h.add_argument("--via")
    h.add_argument("--now", type=int)
    h.set_defaults(func=cmd_handshake, mutates=False)

    sc = sub.add_parser("scenario", help="adversary scenarios").add_subparsers(dest="sc_verb", required=True)
    c = sc.add_parser("run")
    c.add_argument("--config", required=True)
    c.add_argument("--witness", help="write the witness trace here when the goal fails")
    c.set_defaults(func=cmd_scenario_run, mutates=False)
    c = sc.add_parser("matrix")
    c.add_argument("--topology")
    c.add_argument("--goal", type=int, choices=(1, 2), required=True)
    c.add_argument("--witness-dir")
    c.add_argument("--timings", action="store_true", help="include per-cell runtime in json-lines output")
    c.set_defaults(func=cmd_scenario_matrix, mutates=False)
    c = sc.add_parser("replay")
    c.add_argument("--witness", required=True)
    c.set_defaults(func=cmd_scenario_replay, mutates=False)

    b = sub.add_parser("bench", help="benchmarks").add_subparsers(dest="bench_verb", required=True)
    c = b.add_parser("certops")
    c.add_argument("--scheme", required=True)
    c.add_argument("--iters", type=int, default=1000)
    c.add_argument("--out", required=True)
    c.add_argument("--cdf-dir")
    c.set_defaults(func=cmd_bench_certops, mutates=False)
    c = b.add_parser("handshake")
    c.add_argument("--topology")
    c.add_argument("--iters", type=int, default=100)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_bench_handshake, mutates=False)
    c = b.add_parser("report")
    c.add_argument("--out-dir", required=True)
    c.add_argument("--iters", type=int, default=1000)
    c.add_argument("--handshake-iters", type=int, default=100)
    c.add_argument("--topology")
    c.add_argument("--from-csv", nargs="+", help="render from existing CSV files instead of measuring")
    c.set_defaults(func=cmd_bench_report, mutates=False)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Out(args.format)
    st = State(Path(args.state_dir), args.seed)
    try:
        if args.mutates:
            with state_lock(st.root):
                return args.func(args, st, out)
        return args.func(args, st, out)
    except (UsageError, ConfigError, crypto.UnknownScheme) as exc:
        print(f"fivegpki: error: {exc}", file=sys.stderr)
        return 2
    except (DomainFailure, au.PkiError, LogError, UnknownEntity, StateLocked, DecodeError,
            crypto.CryptoError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"fivegpki: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"fivegpki: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
