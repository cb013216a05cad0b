"""Dirac-representation gamma matrices for signature (+,-,-,-)."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

ETA = np.diag([1.0, -1.0, -1.0, -1.0])

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# (a, b) pairs with a < b, in the storage order of so(1,3) elements
PLANES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


@dataclass(frozen=True)
class GammaRep:
    gammas: np.ndarray  # gamma^a, upper index, shape (4, 4, 4)
    eta: np.ndarray = field(default_factory=lambda: ETA.copy())

    @property
    def lower(self) -> np.ndarray:
        """gamma_a = eta_ab gamma^b."""
        return np.einsum("ab,bij->aij", self.eta, self.gammas)

    @property
    def gamma_ab(self) -> np.ndarray:
        """Spin generators, shape (4, 4, 4, 4), ``gamma_ab = [gamma_b, gamma_a] / 2``.

        The ordering inside the commutator makes ``so_to_spin`` a Lie algebra
        homomorphism for the mixed-index matrix bracket; see ``so_bracket``.
        """
        g = self.lower
        return 0.5 * (np.einsum("bij,ajk->abik", g, g) - np.einsum("aij,bjk->abik", g, g))


@lru_cache(maxsize=None)
def _dirac() -> GammaRep:
    g = np.zeros((4, 4, 4), dtype=complex)
    g[0] = np.diag([1, 1, -1, -1])
    for k in range(3):
        g[k + 1][:2, 2:] = SIGMA[k]
        g[k + 1][2:, :2] = -SIGMA[k]
    return GammaRep(g)


def build_gamma(rep: str = "dirac") -> GammaRep:
    if rep != "dirac":
        raise ValueError(f"unsupported gamma representation {rep!r}")
    return _dirac()


def anticommutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y + y @ x


def so_from_planes(values) -> np.ndarray:
    """Antisymmetric 4x4 matrix A^{ab} from its six independent entries."""
    a = np.zeros((4, 4), dtype=np.result_type(np.asarray(values), float))
    for (i, j), v in zip(PLANES, values):
        a[i, j] = v
        a[j, i] = -v
    return a


def planes_from_so(a: np.ndarray) -> np.ndarray:
    return np.array([a[i, j] for i, j in PLANES])


def so_bracket(a: np.ndarray, b: np.ndarray, eta: np.ndarray = ETA) -> np.ndarray:
    """Bracket of A^{ab}, B^{ab} as mixed-index matrices: [A eta, B eta] eta^-1."""
    am, bm = a @ eta, b @ eta
    return (am @ bm - bm @ am) @ np.linalg.inv(eta)


def so_to_spin(a: np.ndarray, g: GammaRep | None = None) -> np.ndarray:
    """``-1/4 A^{ab} gamma_ab`` summed over all a, b."""
    g = g or build_gamma()
    return -0.25 * np.einsum("ab,abij->ij", a, g.gamma_ab)


def dirac_adjoint(psi: np.ndarray, g: GammaRep | None = None) -> np.ndarray:
    g = g or build_gamma()
    return np.conj(psi) @ g.gammas[0]
