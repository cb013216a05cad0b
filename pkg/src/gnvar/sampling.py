"""Deterministic sampling: splitmix64 generator, box points, random polynomial configs.

splitmix64 (Steele, Lea, Flood 2014)::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

all modulo 2**64.  A double in [0, 1) is ``(z >> 11) * 2**-53``.
"""

from __future__ import annotations

from typing import Sequence

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, n: int) -> int:
        """Integer in ``[0, n)`` (modulo bias is negligible for small ``n``)."""
        return self.next_u64() % n


def box_points(rng: SplitMix64, lo: Sequence[float], hi: Sequence[float],
               count: int) -> list[tuple[float, float, float, float]]:
    return [tuple(rng.uniform(a, b) for a, b in zip(lo, hi)) for _ in range(count)]


_MONOMIALS = [(i,) for i in range(4)] + [(i, j) for i in range(4) for j in range(i, 4)]


def random_polynomial(rng: SplitMix64, scale: float = 0.2, terms: int = 3,
                      constant: float = 0.0) -> str:
    """A short random polynomial of degree at most two, as expression text."""
    parts = [f"{constant + rng.uniform(-scale, scale):.6f}"]
    for _ in range(terms):
        mono = _MONOMIALS[rng.randint(len(_MONOMIALS))]
        c = rng.uniform(-scale, scale)
        parts.append(f"{c:.6f}*" + "*".join(f"x{k}" for k in mono))
    return " + ".join(parts).replace("+ -", "- ")


def random_config_strings(rng: SplitMix64, scale: float = 0.2):
    """Tetrad near the identity, random connection and spinor polynomials."""
    theta = [random_polynomial(rng, scale, constant=1.0 if a == m else 0.0)
             for a in range(4) for m in range(4)]
    omega = [random_polynomial(rng, scale) for _ in range(24)]
    psi = [random_polynomial(rng, 1.0, constant=0.0) for _ in range(8)]
    return theta, omega, psi


def random_lift_strings(rng: SplitMix64, scale: float = 0.5):
    xi = [random_polynomial(rng, scale) for _ in range(4)]
    xi_v = [random_polynomial(rng, scale) for _ in range(6)]
    return xi, xi_v
