"""Signature-scheme registry.

This is the only module that names concrete algorithms.  Everything else
carries a :class:`SchemeId` around opaquely and calls :func:`sign` /
:func:`verify` through the registry.

Supported schemes: RSA-2048 (PKCS#1 v1.5, SHA-256), ECDSA P-256 (RFC 6979
deterministic nonces, SHA-256) and round-3 Dilithium2.
"""

from __future__ import annotations

import enum
import hashlib
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec, padding, rsa, x25519
from dilithium_py.dilithium import Dilithium2
from dilithium_py.dilithium.default_parameters import DEFAULT_PARAMETERS
from dilithium_py.dilithium.dilithium import Dilithium

from ._wire import DecodeError, Reader, armor, dearmor, lp, u8

HASH_LEN = 32
KEY_ARMOR = "5GPKI KEY"


def H(*parts: bytes) -> bytes:
    """SHA-256 over the concatenation of ``parts``."""
    h = hashlib.sha256()
    for p in parts:
        h.update(p)
    return h.digest()


class SchemeId(enum.Enum):
    RSA_2048 = "RSA-2048"
    ECDSA_P256 = "ECDSA-P-256"
    DILITHIUM2 = "DILITHIUM2"

    @property
    def wire_id(self) -> int:
        return _WIRE_IDS[self]

    @classmethod
    def from_wire(cls, n: int) -> "SchemeId":
        for s, i in _WIRE_IDS.items():
            if i == n:
                return s
        raise UnknownScheme(f"unknown scheme id {n}")

    @classmethod
    def parse(cls, text: str) -> "SchemeId":
        key = text.strip().upper().replace("_", "-")
        aliases = {"RSA": "RSA-2048", "ECDSA": "ECDSA-P-256", "P-256": "ECDSA-P-256",
                   "P256": "ECDSA-P-256", "ECC": "ECDSA-P-256", "DILITHIUM-2": "DILITHIUM2"}
        key = aliases.get(key, key)
        for s in cls:
            if s.value == key:
                return s
        raise UnknownScheme(f"unknown scheme {text!r}")


_WIRE_IDS = {SchemeId.RSA_2048: 1, SchemeId.ECDSA_P256: 2, SchemeId.DILITHIUM2: 3}


class CryptoError(Exception):
    pass


class UnknownScheme(CryptoError, ValueError):
    pass


class SchemeFailure(CryptoError):
    """A provider raised while signing; the original error is chained."""


@dataclass(frozen=True)
class PublicKey:
    scheme: SchemeId
    data: bytes

    def encode(self) -> bytes:
        return u8(self.scheme.wire_id) + self.data

    @classmethod
    def decode(cls, raw: bytes) -> "PublicKey":
        if not raw:
            raise DecodeError("empty public key")
        return cls(SchemeId.from_wire(raw[0]), bytes(raw[1:]))

    def fingerprint(self) -> str:
        return H(self.encode()).hex()[:16]


@dataclass(frozen=True)
class Signature:
    scheme: SchemeId
    value: bytes

    def encode(self) -> bytes:
        return u8(self.scheme.wire_id) + self.value

    @classmethod
    def decode(cls, raw: bytes) -> "Signature":
        if not raw:
            raise DecodeError("empty signature")
        return cls(SchemeId.from_wire(raw[0]), bytes(raw[1:]))


@dataclass(frozen=True)
class KeyPair:
    scheme: SchemeId
    public_key: bytes
    private_key: bytes = field(repr=False)
    # False when a seed was requested but the scheme cannot honour it (RSA).
    deterministic: bool = field(default=True, compare=False)

    @property
    def public(self) -> PublicKey:
        return PublicKey(self.scheme, self.public_key)


@dataclass(frozen=True)
class Scheme:
    scheme_id: SchemeId
    keygen: Callable[[random.Random | None], tuple[bytes, bytes, bool]]
    sign: Callable[[bytes, bytes], bytes]
    verify: Callable[[bytes, bytes, bytes], bool]
    public_key_size: int | None = None


# -- RSA-2048 -------------------------------------------------------------

@lru_cache(maxsize=256)
def _rsa_priv(der: bytes) -> rsa.RSAPrivateKey:
    return serialization.load_der_private_key(der, password=None)


@lru_cache(maxsize=1024)
def _rsa_pub(der: bytes) -> rsa.RSAPublicKey:
    key = serialization.load_der_public_key(der)
    if not isinstance(key, rsa.RSAPublicKey):
        raise ValueError("not an RSA key")
    return key


def _rsa_keygen(rng):
    key = rsa.generate_private_key(public_exponent=65537, key_size=2048)
    pub = key.public_key().public_bytes(serialization.Encoding.DER,
                                        serialization.PublicFormat.SubjectPublicKeyInfo)
    priv = key.private_bytes(serialization.Encoding.DER, serialization.PrivateFormat.PKCS8,
                             serialization.NoEncryption())
    return pub, priv, rng is None


def _rsa_sign(priv: bytes, msg: bytes) -> bytes:
    return _rsa_priv(priv).sign(msg, padding.PKCS1v15(), hashes.SHA256())


def _rsa_verify(pub: bytes, msg: bytes, sig: bytes) -> bool:
    try:
        _rsa_pub(pub).verify(sig, msg, padding.PKCS1v15(), hashes.SHA256())
    except (InvalidSignature, ValueError):
        return False
    return True


# -- ECDSA P-256 ----------------------------------------------------------

_P256_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
_ECDSA = ec.ECDSA(hashes.SHA256(), deterministic_signing=True)


@lru_cache(maxsize=1024)
def _ec_priv(raw: bytes) -> ec.EllipticCurvePrivateKey:
    return ec.derive_private_key(int.from_bytes(raw, "big"), ec.SECP256R1())


@lru_cache(maxsize=4096)
def _ec_pub(raw: bytes) -> ec.EllipticCurvePublicKey:
    return ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256R1(), raw)


def _ec_keygen(rng):
    if rng is None:
        key = ec.generate_private_key(ec.SECP256R1())
        scalar = key.private_numbers().private_value
    else:
        scalar = rng.randrange(1, _P256_ORDER)
        key = ec.derive_private_key(scalar, ec.SECP256R1())
    pub = key.public_key().public_bytes(serialization.Encoding.X962,
                                        serialization.PublicFormat.UncompressedPoint)
    return pub, scalar.to_bytes(32, "big"), True


def _ec_sign(priv: bytes, msg: bytes) -> bytes:
    return _ec_priv(priv).sign(msg, _ECDSA)


def _ec_verify(pub: bytes, msg: bytes, sig: bytes) -> bool:
    try:
        _ec_pub(pub).verify(sig, msg, _ECDSA)
    except (InvalidSignature, ValueError):
        return False
    return True


# -- Dilithium2 -----------------------------------------------------------

DILITHIUM2_PUBLIC_KEY_SIZE = 1312
DILITHIUM2_SECRET_KEY_SIZE = 2528
DILITHIUM2_SIGNATURE_SIZE = 2420


def _dil_keygen(rng):
    if rng is None:
        pk, sk = Dilithium2.keygen()
    else:
        # Private instance so the seeded entropy source never leaks into the shared one.
        inst = Dilithium(DEFAULT_PARAMETERS["dilithium2"])
        inst.random_bytes = rng.randbytes
        pk, sk = inst.keygen()
    return pk, sk, True


def _dil_sign(priv: bytes, msg: bytes) -> bytes:
    if len(priv) != DILITHIUM2_SECRET_KEY_SIZE:
        raise ValueError("bad Dilithium2 secret key length")
    return Dilithium2.sign(priv, msg)


def _dil_verify(pub: bytes, msg: bytes, sig: bytes) -> bool:
    if len(pub) != DILITHIUM2_PUBLIC_KEY_SIZE or len(sig) != DILITHIUM2_SIGNATURE_SIZE:
        return False
    try:
        return bool(Dilithium2.verify(pub, msg, sig))
    except Exception:
        return False


class SchemeRegistry:
    """Maps each :class:`SchemeId` to exactly one (keygen, sign, verify) triple."""

    def __init__(self, schemes=()):
        self._schemes: dict[SchemeId, Scheme] = {}
        for s in schemes:
            self.register(s)

    def register(self, scheme: Scheme) -> None:
        if scheme.scheme_id in self._schemes:
            raise ValueError(f"{scheme.scheme_id.value} already registered")
        self._schemes[scheme.scheme_id] = scheme

    def get(self, scheme_id: SchemeId) -> Scheme:
        try:
            return self._schemes[scheme_id]
        except KeyError:
            raise UnknownScheme(f"scheme {scheme_id!r} is not registered") from None

    def __contains__(self, scheme_id) -> bool:
        return scheme_id in self._schemes

    def ids(self) -> list[SchemeId]:
        return list(self._schemes)

    def generate_keypair(self, scheme: SchemeId, rng_seed: int | None = None) -> KeyPair:
        impl = self.get(scheme)
        rng = random.Random(rng_seed) if rng_seed is not None else None
        pub, priv, deterministic = impl.keygen(rng)
        return KeyPair(scheme, pub, priv, deterministic)

    def sign(self, key: KeyPair, message: bytes) -> Signature:
        impl = self.get(key.scheme)
        if not key.private_key:
            raise SchemeFailure("key pair carries no private key")
        try:
            value = impl.sign(key.private_key, bytes(message))
        except Exception as exc:
            raise SchemeFailure(str(exc)) from exc
        return Signature(key.scheme, value)

    def verify(self, public_key: PublicKey, message: bytes, sig: Signature) -> bool:
        try:
            if sig is None or public_key is None or sig.scheme != public_key.scheme:
                return False
            if not sig.value or not public_key.data:
                return False
            impl = self._schemes.get(sig.scheme)
            if impl is None:
                return False
            return bool(impl.verify(public_key.data, bytes(message), sig.value))
        except Exception:
            return False


def default_schemes() -> list[Scheme]:
    return [
        Scheme(SchemeId.RSA_2048, _rsa_keygen, _rsa_sign, _rsa_verify),
        Scheme(SchemeId.ECDSA_P256, _ec_keygen, _ec_sign, _ec_verify, public_key_size=65),
        Scheme(SchemeId.DILITHIUM2, _dil_keygen, _dil_sign, _dil_verify,
               public_key_size=DILITHIUM2_PUBLIC_KEY_SIZE),
    ]


REGISTRY = SchemeRegistry(default_schemes())


def generate_keypair(scheme: SchemeId, rng_seed: int | None = None) -> KeyPair:
    return REGISTRY.generate_keypair(scheme, rng_seed)


def sign(key: KeyPair, message: bytes) -> Signature:
    return REGISTRY.sign(key, message)


def verify(public_key: PublicKey, message: bytes, sig: Signature) -> bool:
    return REGISTRY.verify(public_key, message, sig)


# -- key envelope ---------------------------------------------------------

def encode_keypair(kp: KeyPair) -> bytes:
    return u8(kp.scheme.wire_id) + lp(kp.public_key) + lp(kp.private_key)


def decode_keypair(raw: bytes) -> KeyPair:
    r = Reader(raw)
    scheme = SchemeId.from_wire(r.u8())
    pub = r.lp()
    priv = r.lp()
    r.finish()
    return KeyPair(scheme, pub, priv)


def keypair_to_text(kp: KeyPair) -> str:
    return armor(encode_keypair(kp), KEY_ARMOR)


def keypair_from_text(text: str) -> KeyPair:
    return decode_keypair(dearmor(text, KEY_ARMOR))


# -- ephemeral agreement (handshake only) ---------------------------------

def ephemeral_keypair(secret: bytes) -> tuple[bytes, bytes]:
    """X25519 key pair from 32 caller-supplied random bytes: (private, public)."""
    priv = x25519.X25519PrivateKey.from_private_bytes(secret)
    pub = priv.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
    return secret, pub


def ephemeral_agree(private: bytes, peer_public: bytes) -> bytes:
    """Shared secret; raises ValueError for malformed or low-order peer keys."""
    priv = x25519.X25519PrivateKey.from_private_bytes(private)
    return priv.exchange(x25519.X25519PublicKey.from_public_bytes(peer_public))
