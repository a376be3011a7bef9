"""Timing of certificate operations and handshakes, with CDF and CSV output.

CertReq is key generation plus assembly of the request body (subject,
public key, validity); no CSR signature is computed.  CertSign is the CA
signing the canonical certificate bytes.  Each run is preceded by untimed
warm-up iterations.
"""

from __future__ import annotations

import csv
import enum
import itertools
import os
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import crypto
from .certmodel import EntityKind, EntityName, FiveGCert, canonical_encode, sign_cert
from .crypto import SchemeId
from .handshake import intra_plmn_handshake
from .topology import Topology

WARMUP = 10
CSV_HEADER = ("op", "scheme", "iter", "seconds")


class Operation(enum.Enum):
    CERT_REQ = "CertReq"
    CERT_SIGN = "CertSign"
    HANDSHAKE = "Handshake"


@dataclass
class BenchResult:
    operation: Operation
    scheme: SchemeId | None
    samples: list[float]
    mean: float
    p50: float
    p95: float
    p99: float

    @classmethod
    def from_samples(cls, operation: Operation, scheme: SchemeId | None, samples: Iterable[float]) -> "BenchResult":
        xs = list(samples)
        if not xs:
            raise ValueError("no samples")
        if len(xs) == 1:
            q = xs * 99
        else:
            # interpolation can be off by an ulp: keep cut points inside the range and non-decreasing
            lo, hi = min(xs), max(xs)
            q = [min(max(v, lo), hi) for v in statistics.quantiles(xs, n=100, method="inclusive")]
            q = list(itertools.accumulate(q, max))
        return cls(operation, scheme, xs, statistics.fmean(xs), q[49], q[94], q[98])

    @property
    def scheme_label(self) -> str:
        return self.scheme.value if self.scheme is not None else "n/a"


def _request(scheme: SchemeId, i: int) -> FiveGCert:
    kp = crypto.generate_keypair(scheme)
    subject = EntityName("bench", EntityKind.SEPP, f"*.sepp{i}.bench.example")
    issuer = EntityName("bench", EntityKind.PLMN_CA, "plmn-ca.bench")
    body = FiveGCert(subject, kp.public, issuer, i + 1, 0, 10_000)
    canonical_encode(body)
    return body


def bench_cert_ops(scheme: SchemeId | str, iterations: int = 1000,
                   warmup: int = WARMUP) -> tuple[BenchResult, BenchResult]:
    scheme = SchemeId.parse(scheme) if isinstance(scheme, str) else scheme
    crypto.REGISTRY.get(scheme)
    if iterations < 1:
        raise ValueError("need at least one iteration")
    ca_key = crypto.generate_keypair(scheme)
    clock = time.perf_counter
    req_t, sign_t = [], []
    for i in range(warmup + iterations):
        t0 = clock()
        body = _request(scheme, i)
        t1 = clock()
        sign_cert(body, ca_key)
        t2 = clock()
        if i >= warmup:
            req_t.append(t1 - t0)
            sign_t.append(t2 - t1)
    return (BenchResult.from_samples(Operation.CERT_REQ, scheme, req_t),
            BenchResult.from_samples(Operation.CERT_SIGN, scheme, sign_t))


def bench_handshake(topo: Topology, iterations: int = 100, warmup: int = WARMUP,
                    pair: tuple[str, str] | None = None) -> BenchResult:
    """Latency of honest intra-PLMN handshakes between two NFs of the first PLMN."""
    if pair is None:
        nfs = next(iter(topo.plmns.values())).nfs
        if len(nfs) < 2:
            raise ValueError("handshake benchmark needs two NFs in the first PLMN")
        pair = (nfs[0], nfs[1])
    a, b = topo.entity(pair[0]), topo.entity(pair[1])
    samples = []
    for i in range(warmup + iterations):
        t0 = time.perf_counter()
        t = intra_plmn_handshake(topo, a, b)
        dt = time.perf_counter() - t0
        if not t.established:
            raise RuntimeError(f"benchmark handshake rejected: {t.reason}")
        if i >= warmup:
            samples.append(dt)
    return BenchResult.from_samples(Operation.HANDSHAKE, None, samples)


def cdf_points(samples: Iterable[float]) -> list[tuple[float, float]]:
    xs = sorted(samples)
    n = len(xs)
    return [(x, (i + 1) / n) for i, x in enumerate(xs)]


def emit_cdf(result: BenchResult, path: str | os.PathLike) -> Path:
    """Write ``sample_seconds cumulative_fraction`` lines, ascending; the last fraction is 1.0."""
    if not result.samples:
        raise ValueError("no samples")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for x, f in cdf_points(result.samples):
            fh.write(f"{x!r} {f!r}\n")
    return path


def read_cdf(path: str | os.PathLike) -> list[tuple[float, float]]:
    with open(path) as fh:
        return [(float(a), float(b)) for a, b in (line.split() for line in fh if line.strip())]


def write_csv(results: Iterable[BenchResult], path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in results:
            for i, s in enumerate(r.samples):
                w.writerow((r.operation.value, r.scheme_label, i, repr(s)))
    return path


def read_csv(path: str | os.PathLike) -> list[BenchResult]:
    groups: dict[tuple[str, str], list[float]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: expected columns {','.join(CSV_HEADER)}")
        for row in reader:
            groups.setdefault((row["op"], row["scheme"]), []).append(float(row["seconds"]))
    return [BenchResult.from_samples(Operation(op), None if sch == "n/a" else SchemeId.parse(sch), xs)
            for (op, sch), xs in groups.items()]


__all__ = [
    "Operation", "BenchResult", "bench_cert_ops", "bench_handshake", "cdf_points", "emit_cdf", "read_cdf",
    "write_csv", "read_csv", "CSV_HEADER", "WARMUP",
]
