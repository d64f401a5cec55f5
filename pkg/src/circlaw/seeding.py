"""Deterministic seed derivation and RNG construction.

Every random quantity in the package is a pure function of a 64-bit root
seed plus integer/string labels.  Derivation uses splitmix64 over a chain
of labels, so the same (seed, labels) always yields the same stream on any
platform; the constants below are part of the documented file-format
contract (CSV outputs are reproducible across runs).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# splitmix64 constants
_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_MUL1 = 0xBF58476D1CE4E5B9
_SM_MUL2 = 0x94D049BB133111EB

# FNV-1a 64-bit constants (for hashing string labels)
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(x: int) -> int:
    """One splitmix64 finalization step."""
    z = (x + _SM_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * _SM_MUL1) & _MASK64
    z = ((z ^ (z >> 27)) * _SM_MUL2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def fnv1a64(text: str) -> int:
    """FNV-1a hash of a UTF-8 string, for experiment tags."""
    h = _FNV_OFFSET
    for b in text.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def mix_seed(root: int, *parts: int | str) -> int:
    """Derive a child seed from a root seed and a label chain.

    Strings are FNV-1a hashed; integers are used as-is (mod 2^64).
    """
    h = root & _MASK64
    for p in parts:
        v = fnv1a64(p) if isinstance(p, str) else (p & _MASK64)
        h = splitmix64(h ^ v)
    return h


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream).

    Philox keys keep independent streams (e.g. sparse masks vs entry
    values) decoupled without any seed bookkeeping by the caller.
    """
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
