"""Three-tier PKI for the 5G service-based architecture, with a CT log, handshakes and an attack simulator."""

__version__ = "0.1.0"
