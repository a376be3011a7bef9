"""Acceptance criteria 1-9.  Each test prints one PASS/FAIL line and asserts the criterion as stated."""

import json
import random
import time
from pathlib import Path

import pytest

from fivegpki import authorities as au
from fivegpki import bench, crypto
from fivegpki._wire import dearmor
from fivegpki.certmodel import EntityKind, EntityName, cert_from_text, cert_to_text, crl_from_text, crl_to_text
from fivegpki.cli import PROOF_ARMOR, main
from fivegpki.crypto import SchemeId
from fivegpki.handshake import Outcome, Reason, inter_plmn_handshake, intra_plmn_handshake
from fivegpki.scenarios import GOAL2_ROLES, Witness, pfcp_attack_scenario, replay_witness
from fivegpki.topology import build_topology, default_config
from fivegpki.translog import AuditProof, MerkleLog, SignedTreeHead, verify_consistency, verify_inclusion

import merkle_oracle as oracle

ACCEPTANCE_LINES: list[str] = []


def report(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {n} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def _matrix(tmp_path, goal, capsys):
    wdir = tmp_path / "witnesses"
    start = time.perf_counter()
    code = main(["--seed", "1", "--format", "json-lines", "--state-dir", str(tmp_path / "state"),
                 "scenario", "matrix", "--goal", str(goal), "--witness-dir", str(wdir)])
    elapsed = time.perf_counter() - start
    out = capsys.readouterr().out
    rows = [json.loads(x) for x in out.splitlines()]
    return code, rows, wdir, elapsed


def _witness_replays(wdir, goal, compromise):
    path = wdir / f"goal{goal}-{'_'.join(compromise) or 'none'}.json"
    if not path.exists():
        return False
    w = Witness.from_dict(json.loads(path.read_text()))
    return not replay_witness(w).goal_holds


# -- 1 -------------------------------------------------------------------

def test_criterion_1_goal1_matrix(tmp_path, capsys):
    code, rows, wdir, elapsed = _matrix(tmp_path, 1, capsys)
    got = {tuple(r["compromise"]): r["goal_holds"] for r in rows}
    ok = (code == 0 and got == {(): True, ("intra_plmn_ca",): False}
          and _witness_replays(wdir, 1, ["intra_plmn_ca"]) and elapsed < 10)
    report(1, "goal-1 matrix", ok, f"rows={got}, runtime={elapsed:.2f}s")
    assert ok


# -- 2 -------------------------------------------------------------------

def test_criterion_2_goal2_matrix(tmp_path, capsys):
    code, rows, wdir, elapsed = _matrix(tmp_path, 2, capsys)
    got = {frozenset(r["compromise"]): r["goal_holds"] for r in rows}
    expected = {frozenset(s): len(s) <= 2 for s in
                [(), *[(a,) for a in GOAL2_ROLES],
                 *[(a, b) for i, a in enumerate(GOAL2_ROLES) for b in GOAL2_ROLES[i + 1:]],
                 tuple(GOAL2_ROLES)]}
    wrong = sorted(("+".join(sorted(k)) or "none", v) for k, v in got.items() if expected.get(k) != v)
    ok = (code == 0 and got == expected and elapsed < 60
          and _witness_replays(wdir, 2, list(GOAL2_ROLES)))
    report(2, "goal-2 matrix", ok, f"cells disagreeing with expectation={wrong}, runtime={elapsed:.2f}s")
    assert ok


# -- 3 -------------------------------------------------------------------

def test_criterion_3_merkle_oracle():
    start = time.perf_counter()
    rng = random.Random(3)
    leaves = [rng.randbytes(rng.randrange(1, 64)) for _ in range(64)]
    log = MerkleLog(EntityName("global", EntityKind.CT_LOG, "ct-log-oracle"), crypto.generate_keypair(SchemeId.ECDSA_P256, 3), list(leaves))
    mismatches = 0
    for n in range(1, 65):
        prefix = leaves[:n]
        mismatches += log.root(n) != oracle.mth(prefix)
        new = SignedTreeHead(n, oracle.mth(prefix), 0)
        for m in range(n):
            mismatches += log.inclusion_path(m, n) != oracle.path(m, prefix)
            mismatches += not verify_inclusion(log.inclusion_proof(m, n), prefix[m], log.public_key)
        for m in range(1, n + 1):
            proof = log.consistency_proof(m, n)
            mismatches += proof != oracle.consistency(m, prefix)
            mismatches += not verify_consistency(SignedTreeHead(m, oracle.mth(leaves[:m]), 0), new, proof)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 5
    report(3, "Merkle oracle equivalence, sizes 1..64", ok, f"mismatches={mismatches}, runtime={elapsed:.2f}s")
    assert ok


# -- 4 -------------------------------------------------------------------

def test_criterion_4_completeness_and_tamper():
    start = time.perf_counter()
    established = 0
    for seed in range(100):
        cfg = default_config(2)
        cfg["ct_logs"] = 1 + seed % 2
        topo = build_topology(cfg, seed=seed)
        rng = random.Random(seed)
        p = topo.plmns[rng.choice(list(topo.plmns))]
        a, b = rng.sample(p.nfs + p.scps + [p.nrf, p.pcf], 2)
        intra = intra_plmn_handshake(topo, a, b)
        inter = inter_plmn_handshake(topo, "s1", "s2")
        established += all(t.established and t.initiator_key == t.responder_key for t in (intra, inter))

    rng = random.Random(4)
    topo = build_topology(seed=4)
    rejected = 0
    for _ in range(1000):
        kind = rng.choice(["ClientHello", "ServerHello", "Finished"])
        seen = {}

        def tamper(k, payload, kind=kind, seen=seen):
            if k != kind:
                return payload
            at = seen.setdefault("pos", rng.randrange(len(payload)))
            return payload[:at] + bytes([payload[at] ^ (1 << rng.randrange(8))]) + payload[at + 1:]

        if rng.random() < 0.5:
            t = inter_plmn_handshake(topo, "s1", "s2", tamper=tamper)
        else:
            t = intra_plmn_handshake(topo, "amf-1", "smf-1", tamper=tamper)
        rejected += t.outcome is Outcome.REJECTED
    elapsed = time.perf_counter() - start
    ok = established == 100 and rejected == 1000 and elapsed < 30
    report(4, "honest completeness and tamper soundness", ok,
           f"established={established}/100, tampered rejected={rejected}/1000, runtime={elapsed:.2f}s")
    assert ok


# -- 5 -------------------------------------------------------------------

def test_criterion_5_revocation_latency():
    topo = build_topology(seed=5)
    p = topo.plmns["plmn1"]
    topo.clock = 42
    au.notify_compromise(p.intra_ca, topo.entity("smf-1").name, au.ReportVia.NRF, topo.clock)
    via_nrf = intra_plmn_handshake(topo, "amf-1", "smf-1")
    au.notify_compromise(p.intra_ca, topo.entity(p.nrf).name, au.ReportVia.PCF, topo.clock)
    via_pcf = intra_plmn_handshake(topo, "amf-1", p.nrf)
    ok = all(t.outcome is Outcome.REJECTED and t.reason is Reason.REVOKED for t in (via_nrf, via_pcf))
    report(5, "revocation takes effect at the same tick", ok,
           f"NF via NRF={via_nrf.reason}, NRF via PCF={via_pcf.reason}")
    assert ok


# -- 6 and 7 -------------------------------------------------------------

@pytest.fixture(scope="module")
def cert_bench():
    return {s: bench.bench_cert_ops(s, iterations=1000) for s in SchemeId}


@pytest.mark.slow
def test_criterion_6_benchmark_ratios(cert_bench):
    (rsa_req, rsa_sign), (ec_req, _), (dil_req, dil_sign) = (
        cert_bench[SchemeId.RSA_2048], cert_bench[SchemeId.ECDSA_P256], cert_bench[SchemeId.DILITHIUM2])
    hs = bench.bench_handshake(build_topology(seed=6), iterations=100)
    checks = {
        "RSA CertReq >= 5x P-256 CertReq": rsa_req.mean >= 5 * ec_req.mean,
        "RSA CertReq >= 5x RSA CertSign": rsa_req.mean >= 5 * rsa_sign.mean,
        "Dilithium2 CertSign > 0.8x CertReq": dil_sign.mean > 0.8 * dil_req.mean,
        "handshake mean < 50 ms": hs.mean < 0.050,
    }
    ok = all(checks.values())
    detail = (f"RSA req/P-256 req={rsa_req.mean / ec_req.mean:.1f}, RSA req/sign={rsa_req.mean / rsa_sign.mean:.1f}, "
              f"Dilithium2 sign/req={dil_sign.mean / dil_req.mean:.2f}, handshake={hs.mean * 1e3:.2f}ms")
    report(6, "benchmark ratios", ok, detail + "".join(f"; failed: {k}" for k, v in checks.items() if not v))
    assert ok


@pytest.mark.slow
def test_criterion_7_cdf_files(cert_bench, tmp_path):
    problems = []
    for scheme, results in cert_bench.items():
        for r in results:
            pts = bench.read_cdf(bench.emit_cdf(r, tmp_path / f"{r.operation.value}-{scheme.value}.cdf"))
            name = f"{r.operation.value}/{scheme.value}"
            if len(pts) != len(r.samples):
                problems.append(f"{name} count")
            if any(b[0] < a[0] or b[1] <= a[1] for a, b in zip(pts, pts[1:])):
                problems.append(f"{name} not monotone")
            if pts[-1][1] != 1.0:
                problems.append(f"{name} terminal fraction")
    ok = not problems and len(cert_bench) == 3
    report(7, "CDF files for 3 schemes x 2 operations", ok, f"problems={problems or 'none'}")
    assert ok


# -- 8 -------------------------------------------------------------------

def test_criterion_8_pfcp():
    default = pfcp_attack_scenario(seed=8)
    control = pfcp_attack_scenario(variant="no_mutual_auth", seed=8)
    ok = (default.goal_holds and "rogue modification denied" in default.steps
          and "legitimate modification accepted" in default.steps
          and not control.goal_holds and "rogue modification accepted" in control.steps)
    report(8, "PFCP rogue SMF", ok,
           f"mutual auth: goal_holds={default.goal_holds}; without: goal_holds={control.goal_holds}")
    assert ok


# -- 9 -------------------------------------------------------------------

def _cli(state: Path, *argv) -> int:
    return main(["--seed", "9", "--state-dir", str(state), *map(str, argv)])


def test_criterion_9_persistence_round_trip(tmp_path, capsys):
    state = tmp_path / "state"
    steps = [("ca", "init", "--tier", "root"), ("ca", "init", "--tier", "inter"),
             ("ca", "init", "--tier", "plmn", "--plmn", "plmn1"),
             ("ca", "init", "--tier", "intra", "--plmn", "plmn1", "--scheme", "DILITHIUM2"),
             ("log", "init"), ("log", "init", "--name", "ct-log-2", "--scheme", "RSA-2048"),
             ("ca", "issue", "--subject", "sepp:*.sepp.plmn1.example", "--now", "1"),
             ("ca", "issue", "--subject", "ipx:ipx-1", "--now", "1"),
             ("ca", "issue", "--subject", "nf:amf-1", "--now", "1"),
             ("ca", "issue", "--subject", "nf:smf-1", "--now", "1"),
             ("ca", "revoke", "--ca", "intra-ca.plmn1", "--serial", "2", "--now", "2")]
    codes = [_cli(state, *s) for s in steps]
    capsys.readouterr()
    problems = [f"step {s} exit {c}" for s, c in zip(steps, codes) if c != 0]

    keys = {}
    cas = {p.name: au.load_ca(p) for p in (state / "cas").iterdir()}
    for label, ca in cas.items():
        keys[ca.name] = ca.public_key
        d = state / "cas" / label
        again = tmp_path / "resaved" / label
        au.save_ca(ca, again)
        for f in sorted(d.rglob("*")):
            if f.is_file() and f.name != "config":
                if (again / f.relative_to(d)).read_bytes() != f.read_bytes():
                    problems.append(f"{f.relative_to(state)} not bit-exact")
        if crl_to_text(crl_from_text((d / "crl.current").read_text())) != (d / "crl.current").read_text():
            problems.append(f"{label} CRL text")
        if not ca.crl.verify(ca.public_key):
            problems.append(f"{label} CRL signature")
        if crypto.keypair_to_text(ca.keypair) != (d / "ca.key").read_text():
            problems.append(f"{label} key")

    n_certs = 0
    for f in sorted((state / "certs").glob("*.cert")) + sorted((state / "cas").rglob("*.cert")):
        cert = cert_from_text(f.read_text())
        n_certs += 1
        if cert_to_text(cert) != f.read_text():
            problems.append(f"{f.name} not bit-exact")
        if not crypto.verify(keys[cert.issuer], cert.body(), cert.signature):
            problems.append(f"{f.name} signature")
    for f in sorted((state / "keys").glob("*.key")):
        if crypto.keypair_to_text(crypto.keypair_from_text(f.read_text())) != f.read_text():
            problems.append(f"{f.name} key")
        kp = crypto.keypair_from_text(f.read_text())
        if not crypto.verify(kp.public, b"probe", crypto.sign(kp, b"probe")):
            problems.append(f"{f.name} sign/verify")

    for d in sorted((state / "logs").iterdir()):
        log = MerkleLog.load(d)
        records = (d / "records").read_bytes()
        sth_raw = (d / "sth").read_bytes()
        resaved = tmp_path / "logs-resaved" / d.name
        log.save(resaved)
        if (resaved / "records").read_bytes() != records or (resaved / "sth").read_bytes() != sth_raw:
            problems.append(f"log {d.name} not bit-exact")
        sth = SignedTreeHead.decode(sth_raw)
        if not sth.verify(log.public_key) or sth.root_hash != log.root():
            problems.append(f"log {d.name} STH")
        for i, leaf in enumerate(log.leaves):
            if not verify_inclusion(log.inclusion_proof(i), leaf, log.public_key):
                problems.append(f"log {d.name} leaf {i}")
    sepp = cert_from_text((state / "certs" / "wildcard.sepp.plmn1.example.cert").read_text())
    for f in sorted((state / "certs").glob("*.proof")):
        proof = AuditProof.decode(dearmor(f.read_text(), PROOF_ARMOR))
        log_key = MerkleLog.load(state / "logs" / f.name.split(".")[-2]).public_key
        if not verify_inclusion(proof, sepp.encode(), log_key):
            problems.append(f"{f.name} proof")

    ok = not problems and n_certs >= 7
    report(9, "persistence round-trip", ok, f"certs checked={n_certs}, problems={problems or 'none'}")
    assert ok
