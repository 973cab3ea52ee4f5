"""Deterministic random streams.

A run has one master seed.  Every component draws from its own stream,
derived from ``(seed, tag, replica)`` with numpy's ``SeedSequence`` hashing,
so results do not depend on the order (or the worker) in which components
run.
"""
import zlib

import numpy as np


def tag_key(tag):
    return zlib.crc32(str(tag).encode("utf-8"))


def derive_seed_sequence(seed, tag="", replica=0):
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, tag_key(tag), int(replica)])


def derive_rng(seed, tag="", replica=0):
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(seed, tag, replica)))
