import json
import subprocess
import sys

import pytest

from fivegpki import crypto
from fivegpki._wire import armor, dearmor
from fivegpki.certmodel import cert_from_text, crl_from_text
from fivegpki.cli import main
from fivegpki.persist import state_lock
from fivegpki.translog import AuditProof


@pytest.fixture
def cli(tmp_path, capsys):
    state = tmp_path / "state"

    def run(*argv, seed=7, fmt=None):
        args = ["--state-dir", str(state)]
        if seed is not None:
            args += ["--seed", str(seed)]
        if fmt:
            args += ["--format", fmt]
        code = main(args + [str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err

    run.state = state
    return run


def _pki(cli):
    for argv in (("ca", "init", "--tier", "root"), ("ca", "init", "--tier", "inter"),
                 ("ca", "init", "--tier", "plmn", "--plmn", "plmn1"), ("log", "init")):
        assert cli(*argv)[0] == 0


def test_intra_init_then_issue(cli):
    assert cli("ca", "init", "--tier", "intra", "--plmn", "plmn1")[0] == 0
    code, out, _ = cli("ca", "issue", "--subject", "nf:amf-1")
    assert code == 0
    cert = cert_from_text((cli.state / "certs" / "amf-1.cert").read_text())
    assert cert.subject.label == "amf-1" and cert.issuer.label == "intra-ca.plmn1"
    key = crypto.keypair_from_text((cli.state / "keys" / "amf-1.key").read_text())
    assert key.public == cert.subject_public_key


def test_honest_handshake_exit_zero(cli):
    code, out, _ = cli("handshake", "--from", "amf-1", "--to", "smf-1")
    assert code == 0 and "Established" in out


def test_handshake_via_scp_and_inter(cli):
    assert cli("handshake", "--from", "amf-1", "--to", "smf-1", "--via", "scp-1")[0] == 0
    code, out, _ = cli("handshake", "--from", "plmn1/s1", "--to", "plmn2/s2", fmt="json-lines")
    assert code == 0
    assert json.loads(out.splitlines()[0])["outcome"] == "Established"


def test_handshake_expired_exit_one(cli):
    code, out, _ = cli("handshake", "--from", "amf-1", "--to", "smf-1", "--now", "1000000000")
    assert code == 1 and "Expired" in out


def test_handshake_unknown_entity(cli):
    code, _, err = cli("handshake", "--from", "amf-1", "--to", "nope")
    assert code == 1 and "nope" in err


def test_sepp_issue_and_log_verify(cli, tmp_path):
    _pki(cli)
    code, out, _ = cli("ca", "issue", "--subject", "sepp:*.sepp.plmn1.example", "--now", "1")
    assert code == 0 and "proofs=1" in out
    cert_path = cli.state / "certs" / "wildcard.sepp.plmn1.example.cert"
    proof_path = cli.state / "certs" / "wildcard.sepp.plmn1.example.ct-log-1.proof"
    code, out, _ = cli("log", "verify", "--cert", cert_path, "--proof", proof_path)
    assert code == 0 and "verifies=True" in out

    raw = bytearray(dearmor(proof_path.read_text(), "CT AUDIT PROOF"))
    raw[-3] ^= 0x40
    bad = tmp_path / "bad.proof"
    bad.write_text(armor(bytes(raw), "CT AUDIT PROOF"))
    code, out, _ = cli("log", "verify", "--cert", cert_path, "--proof", bad)
    assert code == 1 and "reason=" in out and "verifies=False" in out

    bad.write_text("garbage")
    code, out, err = cli("log", "verify", "--cert", cert_path, "--proof", bad)
    assert code == 1


def test_sepp_domain_conflict_keeps_old_key(cli):
    _pki(cli)
    assert cli("ca", "issue", "--subject", "sepp:*.sepp.plmn1.example", "--now", "1")[0] == 0
    key_file = cli.state / "keys" / "wildcard.sepp.plmn1.example.key"
    before = key_file.read_bytes()
    code, _, err = cli("ca", "issue", "--subject", "sepp:*.sepp.plmn1.example", "--now", "2")
    assert code == 1 and "LogRejected" in err
    assert key_file.read_bytes() == before


def test_log_verbs(cli, tmp_path):
    _pki(cli)
    cli("ca", "issue", "--subject", "sepp:*.sepp.plmn1.example", "--now", "1")
    cli("ca", "issue", "--subject", "sepp:*.edge.plmn1.example", "--now", "2")
    code, out, _ = cli("log", "sth", fmt="json-lines")
    sth = json.loads(out)
    assert code == 0 and sth["tree_size"] == 2
    proof_file = tmp_path / "p0"
    assert cli("log", "prove", "--index", "0", "--out", proof_file)[0] == 0
    proof = AuditProof.decode(dearmor(proof_file.read_text(), "CT AUDIT PROOF"))
    assert proof.tree_size == 2 and proof.sth.root_hash.hex() == sth["root_hash"]
    code, out, _ = cli("log", "consist", "--old", "1", fmt="json-lines")
    assert code == 0 and json.loads(out)["verifies"] is True
    assert cli("log", "prove", "--index", "5")[0] == 1


def test_log_append_refuses_non_sepp(cli):
    _pki(cli)
    cli("ca", "init", "--tier", "intra", "--plmn", "plmn1")
    cli("ca", "issue", "--subject", "nf:amf-1")
    code, _, err = cli("log", "append", "--cert", cli.state / "certs" / "amf-1.cert")
    assert code == 1 and "NotSeppCert" in err


def test_revoke_renew_crl(cli, tmp_path):
    cli("ca", "init", "--tier", "intra", "--plmn", "plmn1")
    cli("ca", "issue", "--subject", "nf:amf-1")
    assert cli("ca", "revoke", "--ca", "intra-ca.plmn1", "--serial", "1", "--now", "3")[0] == 0
    crl_file = tmp_path / "c.crl"
    assert cli("ca", "crl", "--ca", "intra-ca.plmn1", "--out", crl_file)[0] == 0
    assert crl_from_text(crl_file.read_text()).serials() == {1}
    code, out, _ = cli("ca", "renew", "--ca", "intra-ca.plmn1", "--serial", "1", "--now", "4")
    assert code == 0 and "serial=2" in out
    assert cli("ca", "revoke", "--ca", "intra-ca.plmn1", "--serial", "99")[0] == 1


def test_usage_errors_exit_two(cli, tmp_path):
    assert cli("frobnicate")[0] == 2
    assert cli("ca", "issue", "--subject", "nf:amf-1")[0] == 2       # no CA initialised
    assert cli("ca", "issue", "--subject", "amf-1")[0] == 2
    assert cli("keygen", "--scheme", "foo", "--out", tmp_path / "k")[0] == 2
    bad = tmp_path / "topo.json"
    bad.write_text(json.dumps({"plmns": [{"id": "p", "colour": 1}]}))
    code, _, err = cli("handshake", "--topology", bad, "--from", "a", "--to", "b")
    assert code == 2 and "colour" in err


def test_ca_init_twice_is_refused(cli):
    assert cli("ca", "init", "--tier", "root")[0] == 0
    assert cli("ca", "init", "--tier", "root")[0] == 1


def test_keygen_envelope(cli, tmp_path):
    out_file = tmp_path / "k.key"
    code, out, _ = cli("keygen", "--scheme", "dilithium2", "--out", out_file)
    assert code == 0
    text = out_file.read_text()
    assert text.startswith("-----BEGIN 5GPKI KEY-----")
    kp = crypto.keypair_from_text(text)
    assert kp.public.fingerprint() in out


def test_seed_gives_distinct_keys_per_purpose(cli):
    _pki(cli)
    fps = {cli("log", "init", "--name", n)[1].split("fingerprint=")[1] for n in ("a", "b")}
    assert len(fps) == 2


def test_matrix_json_lines_is_deterministic(cli):
    runs = [cli("scenario", "matrix", "--goal", "1", fmt="json-lines", seed=11)[1] for _ in range(2)]
    assert runs[0] == runs[1]
    rows = [json.loads(x) for x in runs[0].splitlines()]
    assert [(r["compromise"], r["goal_holds"]) for r in rows] == [([], True), (["intra_plmn_ca"], False)]
    assert "runtime_s" not in rows[0]
    timed = cli("scenario", "matrix", "--goal", "1", "--timings", fmt="json-lines")[1]
    assert "runtime_s" in json.loads(timed.splitlines()[0])


def test_scenario_run_and_replay(cli, tmp_path):
    cfg = tmp_path / "sc.json"
    cfg.write_text(json.dumps({"goal": 1, "compromise": ["intra_plmn_ca"], "seed": 3}))
    w = tmp_path / "w.json"
    code, out, _ = cli("scenario", "run", "--config", cfg, "--witness", w)
    assert code == 0 and "goal_holds=False" in out
    assert json.loads(w.read_text())["actions"]
    code, out, _ = cli("scenario", "replay", "--witness", w)
    assert code == 0 and "goal_holds=False" in out


def test_scenario_bad_config(cli, tmp_path):
    cfg = tmp_path / "sc.json"
    cfg.write_text(json.dumps({"goal": 5}))
    assert cli("scenario", "run", "--config", cfg)[0] == 2
    cfg.write_text("{not json")
    assert cli("scenario", "run", "--config", cfg)[0] == 2


def test_bench_verbs(cli, tmp_path):
    csv_file = tmp_path / "c.csv"
    code, _, _ = cli("bench", "certops", "--scheme", "ECDSA-P-256", "--iters", "3", "--out", csv_file,
                     "--cdf-dir", tmp_path / "cdf")
    assert code == 0
    assert csv_file.read_text().splitlines()[0] == "op,scheme,iter,seconds"
    assert sorted(p.name for p in (tmp_path / "cdf").iterdir()) == \
        ["CertReq-ECDSA-P-256.cdf", "CertSign-ECDSA-P-256.cdf"]
    hs = tmp_path / "h.csv"
    assert cli("bench", "handshake", "--iters", "3", "--out", hs)[0] == 0
    rep = tmp_path / "rep"
    code, out, _ = cli("bench", "report", "--out-dir", rep, "--from-csv", csv_file, hs)
    assert code == 0
    names = {p.name for p in rep.iterdir()}
    assert {"CertReq-cdf.png", "CertSign-cdf.png", "Handshake-cdf.png", "Handshake-na.cdf", "samples.csv"} <= names


def test_state_lock_blocks_mutators(cli):
    cli.state.mkdir(parents=True)
    with state_lock(cli.state):
        code, _, err = cli("ca", "init", "--tier", "root")
    assert code == 1 and "lock" in err.lower()
    assert cli("ca", "init", "--tier", "root")[0] == 0


def test_state_dir_from_environment(tmp_path):
    env_state = tmp_path / "env-state"
    proc = subprocess.run([sys.executable, "-m", "fivegpki.cli", "--seed", "1", "ca", "init", "--tier", "root"],
                          env={"FIVEGPKI_STATE_DIR": str(env_state), "PATH": "/usr/bin:/bin"},
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert (env_state / "cas" / "root-ca" / "config").exists()
