import random

import pytest
from dilithium_py.dilithium.default_parameters import DEFAULT_PARAMETERS
from hypothesis import given, settings, strategies as st

from fivegpki import crypto
from fivegpki.crypto import KeyPair, PublicKey, SchemeId, Signature


@pytest.fixture(scope="module")
def keys():
    return {s: crypto.generate_keypair(s, 11) for s in SchemeId}


def test_ecdsa_seed_is_deterministic():
    a = crypto.generate_keypair(SchemeId.ECDSA_P256, 7)
    b = crypto.generate_keypair(SchemeId.ECDSA_P256, 7)
    assert a.public_key == b.public_key
    assert a.deterministic


def test_dilithium_seed_is_deterministic():
    a = crypto.generate_keypair(SchemeId.DILITHIUM2, 7)
    b = crypto.generate_keypair(SchemeId.DILITHIUM2, 7)
    assert a == b


def test_rsa_round_trip_and_seed_marker():
    kp = crypto.generate_keypair(SchemeId.RSA_2048)
    assert kp.deterministic
    assert crypto.verify(kp.public, b"self-test", crypto.sign(kp, b"self-test"))
    seeded = crypto.generate_keypair(SchemeId.RSA_2048, 3)
    assert seeded.deterministic is False


def test_dilithium_public_key_size_from_parameter_set():
    params = DEFAULT_PARAMETERS["dilithium2"]
    # rho (32 bytes) followed by k polynomials of 256 ten-bit t1 coefficients
    expected = 32 + params["k"] * 256 * 10 // 8
    kp = crypto.generate_keypair(SchemeId.DILITHIUM2)
    assert len(kp.public_key) == expected == 1312


def test_unknown_scheme():
    empty = crypto.SchemeRegistry()
    with pytest.raises(crypto.UnknownScheme):
        empty.generate_keypair(SchemeId.ECDSA_P256)
    with pytest.raises(crypto.UnknownScheme):
        SchemeId.parse("ed448")


@pytest.mark.parametrize("scheme", list(SchemeId))
def test_sign_verify_and_flip(keys, scheme):
    kp = keys[scheme]
    msg = b"5GCert body bytes"
    sig = crypto.sign(kp, msg)
    assert crypto.verify(kp.public, msg, sig)
    flipped = bytes([msg[0] ^ 1]) + msg[1:]
    assert not crypto.verify(kp.public, flipped, sig)


def test_cross_scheme_rejected(keys):
    sig = crypto.sign(keys[SchemeId.ECDSA_P256], b"m")
    assert not crypto.verify(keys[SchemeId.DILITHIUM2].public, b"m", sig)
    relabelled = Signature(SchemeId.DILITHIUM2, sig.value)
    assert not crypto.verify(keys[SchemeId.DILITHIUM2].public, b"m", relabelled)


@pytest.mark.parametrize("scheme", list(SchemeId))
def test_verify_is_total(keys, scheme):
    pk = keys[scheme].public
    assert not crypto.verify(pk, b"m", Signature(scheme, b""))
    assert not crypto.verify(pk, b"m", Signature(scheme, b"\x00" * 7))
    assert not crypto.verify(PublicKey(scheme, b"garbage"), b"m", crypto.sign(keys[scheme], b"m"))
    assert not crypto.verify(pk, b"m", None)


def test_sign_without_private_key():
    kp = crypto.generate_keypair(SchemeId.ECDSA_P256, 1)
    with pytest.raises(crypto.SchemeFailure):
        crypto.sign(KeyPair(kp.scheme, kp.public_key, b""), b"m")
    with pytest.raises(crypto.SchemeFailure):
        crypto.sign(KeyPair(SchemeId.DILITHIUM2, b"x", b"short"), b"m")


@settings(max_examples=40, deadline=None)
@given(st.binary(max_size=512))
def test_round_trip_fuzz_ecdsa(msg):
    kp = crypto.generate_keypair(SchemeId.ECDSA_P256, 5)
    assert crypto.verify(kp.public, msg, crypto.sign(kp, msg))


@pytest.mark.parametrize("scheme", list(SchemeId))
def test_round_trip_fuzz_all_schemes(keys, scheme):
    rng = random.Random(scheme.value)
    kp = keys[scheme]
    for _ in range(5):
        msg = rng.randbytes(rng.randrange(0, 300))
        assert crypto.verify(kp.public, msg, crypto.sign(kp, msg))


@pytest.mark.parametrize("scheme", list(SchemeId))
def test_unforgeability_smoke(keys, scheme):
    rng = random.Random(99)
    kp = keys[scheme]
    sigs = [crypto.sign(kp, f"signed-{i}".encode()) for i in range(4)]
    false_accepts = 0
    for i in range(1000):
        wrong = rng.randbytes(24)
        if crypto.verify(kp.public, wrong, sigs[i % 4]):
            false_accepts += 1
    assert false_accepts == 0


def test_registries_are_isolated():
    a = crypto.SchemeRegistry(crypto.default_schemes())
    b = crypto.SchemeRegistry(crypto.default_schemes())
    kp = a.generate_keypair(SchemeId.ECDSA_P256, 3)
    assert kp == b.generate_keypair(SchemeId.ECDSA_P256, 3)
    sig = a.sign(kp, b"x")
    assert sig == b.sign(kp, b"x")
    assert a.verify(kp.public, b"x", sig) and b.verify(kp.public, b"x", sig)
    with pytest.raises(ValueError):
        a.register(crypto.default_schemes()[0])


@pytest.mark.parametrize("scheme", list(SchemeId))
def test_key_envelope_round_trip(keys, scheme):
    kp = keys[scheme]
    raw = crypto.encode_keypair(kp)
    assert raw[0] == scheme.wire_id
    assert int.from_bytes(raw[1:5], "big") == len(kp.public_key)
    assert crypto.decode_keypair(raw) == kp
    text = crypto.keypair_to_text(kp)
    assert text.startswith("-----BEGIN 5GPKI KEY-----\n")
    assert text.rstrip().endswith("-----END 5GPKI KEY-----")
    assert crypto.keypair_from_text(text) == kp


def test_ephemeral_agreement():
    rng = random.Random(4)
    a_priv, a_pub = crypto.ephemeral_keypair(rng.randbytes(32))
    b_priv, b_pub = crypto.ephemeral_keypair(rng.randbytes(32))
    assert crypto.ephemeral_agree(a_priv, b_pub) == crypto.ephemeral_agree(b_priv, a_pub)
    with pytest.raises(ValueError):
        crypto.ephemeral_agree(a_priv, b"\x00" * 32)
