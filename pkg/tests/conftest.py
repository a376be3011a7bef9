import random

import pytest

from fivegpki import authorities as au
from fivegpki import crypto
from fivegpki.certmodel import EntityKind, EntityName, TrustAnchor
from fivegpki.crypto import SchemeId
from fivegpki.translog import MerkleLog


class MiniPki:
    """Root -> inter-PLMN CA -> PLMN CA, one intra-PLMN CA and one CT log, all seeded."""

    def __init__(self, seed=1, plmn="plmn1", n_logs=1):
        self.seed = seed
        self._n = 0
        s = SchemeId.ECDSA_P256
        self.root = au.new_ca(au.CaTier.ROOT, "global", "root-ca", s, self.next_seed())
        self.inter = au.new_ca(au.CaTier.INTER_PLMN, "global", "inter-plmn-ca", s, self.next_seed())
        au.certify_ca(self.root, self.inter, 0)
        self.plmn_ca = au.new_ca(au.CaTier.PLMN, plmn, f"plmn-ca.{plmn}", s, self.next_seed())
        au.certify_ca(self.inter, self.plmn_ca, 0)
        self.intra = au.new_ca(au.CaTier.INTRA_PLMN, plmn, f"intra-ca.{plmn}", s, self.next_seed())
        self.logs = [MerkleLog(EntityName("global", EntityKind.CT_LOG, f"ct-log-{i + 1}"),
                               self.key(), accepted_roots=self.root_anchors)
                     for i in range(n_logs)]
        self.clients = [au.LogClient(log) for log in self.logs]
        self.plmn = plmn

    def next_seed(self):
        self._n += 1
        return self.seed * 1000 + self._n

    def key(self, scheme=SchemeId.ECDSA_P256):
        return crypto.generate_keypair(scheme, self.next_seed())

    @property
    def root_anchors(self):
        return [TrustAnchor(self.root.name, self.root.public_key)]

    @property
    def intra_anchors(self):
        return [TrustAnchor(self.intra.name, self.intra.public_key)]

    def nf(self, label, kind=EntityKind.NF, plmn=None):
        return EntityName(plmn or self.plmn, kind, label)

    def sepp_name(self, plmn=None):
        plmn = plmn or self.plmn
        return EntityName(plmn, EntityKind.SEPP, f"*.sepp.{plmn}.example")


@pytest.fixture
def pki():
    return MiniPki()


@pytest.fixture
def rng():
    return random.Random(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda x: int(x.split()[1])):
            terminalreporter.write_line(line)
