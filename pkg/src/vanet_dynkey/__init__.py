"""Dynamic PKI key distribution and targeted revocation for VANETs.

A deterministic discrete-event simulator of vehicles, road side units (RSUs),
RSU managers and a certificate authority running a six-message key
acquisition handshake, ledger-driven revocation and scripted attacks.
"""

__version__ = "0.1.0"
