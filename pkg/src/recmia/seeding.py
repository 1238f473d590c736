"""Seed discipline for the whole package.

Every random choice (user shuffles, factor initialization, SGD visit
order, MLP weight init, batch shuffles) flows through a numpy
``Generator`` over the PCG64 bit stream, so goldens frozen in the test
suite stay valid across platforms.  Pipeline stages get their own seeds
derived from one master seed by hashing the stage name; changing the
randomness consumed by one stage therefore never perturbs another.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, stage: str) -> int:
    """Map (master seed, stage name) to a stable 63-bit seed via SHA-256."""
    digest = hashlib.sha256(f"{stage}:{master}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def generator(seed: int) -> np.random.Generator:
    """The one PRNG used everywhere in this package: PCG64."""
    return np.random.Generator(np.random.PCG64(seed))
