"""Deterministic seed derivation: one root integer reproduces a whole run."""

import hashlib


def derive_seed(root, label):
    """Stable 63-bit child seed for a named component of a run."""
    digest = hashlib.sha256(f"{int(root)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") & (2**63 - 1)
