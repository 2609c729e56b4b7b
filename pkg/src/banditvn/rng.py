"""Reproducible random streams.

Every run owns a private counter-based Philox generator. Per-run seeds are
derived from the experiment base seed as ``base_seed XOR splitmix64(run_id)``,
so distinct runs get decorrelated streams and the whole experiment is a pure
function of ``(config, base_seed)``. Gaussian variates come from numpy's
ziggurat sampler; both choices are fixed for this build so traces reproduce
bit for bit on a given numpy version.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64(x: int) -> int:
    """One output of the splitmix64 sequence seeded at ``x`` (mod 2^64)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def run_seed(base_seed: int, run_id: int) -> int:
    """64-bit seed for run ``run_id`` of an experiment seeded with ``base_seed``."""
    return (int(base_seed) ^ splitmix64(int(run_id))) & _MASK64


def make_generator(seed: int) -> np.random.Generator:
    """Philox-backed generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))
