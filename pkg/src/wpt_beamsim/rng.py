"""Seed derivation and Gaussian sampling.

Each trial owns its generator. Trial seeds come from ``base_seed + index``
passed through a splitmix64 finalizer, so trial ``k`` draws the same numbers
no matter which worker runs it or in what order.
"""

import math

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step: advance by the golden gamma and scramble."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def trial_seed(base_seed: int, trial_index: int) -> int:
    return splitmix64((base_seed + trial_index) & _MASK64)


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & _MASK64))


def box_muller(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` circular-symmetric complex normals with unit variance.

    One uniform pair per entry; the two Box-Muller outputs become the real
    and imaginary parts, each scaled to variance 1/2.
    """
    u1 = 1.0 - rng.random(n)  # (0, 1], keeps log finite
    u2 = rng.random(n)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * math.pi * u2
    return (radius * np.cos(angle) + 1j * radius * np.sin(angle)) / math.sqrt(2.0)
