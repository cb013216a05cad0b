"""Einstein-Cartan and Dirac Lagrangian densities.

Each density is the coefficient of ``dx^0 ^ dx^1 ^ dx^2 ^ dx^3``.  Functions
taking a :class:`PointGeometry` evaluate one density; the ``*_lagrangian``
factories return callables ``L(x, y)`` over first-order jet coordinates
``y`` of shape ``(48, 5)``, which is the form the variational engine consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import jets
from .clifford import GammaRep
from .geometry import (PointGeometry, covariant_derivative_adjoint, covariant_derivative_spinor,
                       geometry_from_slots)
from .jets import Jet

# field orders consumed by every density below: first jets of theta, omega, psi
FIRST_ORDER = {"theta": 1, "omega": 1, "psi": 1}


@dataclass(frozen=True)
class LagrangianDensity:
    value: Jet
    tag: str
    field_orders: dict

    def __add__(self, other: "LagrangianDensity") -> "LagrangianDensity":
        return LagrangianDensity(self.value + other.value, f"{self.tag}+{other.tag}",
                                 dict(self.field_orders))


def lambda_EC(geom: PointGeometry, k: float) -> LagrangianDensity:
    """``-(1/2k) Omega_ab ^ eps^{ab}`` reduced to ``(1/2k) det e_a^m e_b^n Omega^{ab}_{mn}``."""
    t = jets.prod("abmn,bn->am", geom.curvature, geom.e)
    scal = jets.prod("am,am->", t, geom.e)
    return LagrangianDensity(geom.det * scal * (0.5 / k), "EC", dict(FIRST_ORDER))


def lambda_D(geom: PointGeometry, alpha: float, m: float,
             g: GammaRep | None = None) -> LagrangianDensity:
    """Real part of ``det [(i alpha/2)(psibar gamma^a nabla_a psi - nabla_a psibar gamma^a psi) - m psibar psi]``."""
    g = g or geom.gamma
    g0 = g.gammas[0]
    psibar = jets.contract("j,jk->k", geom.psi.conj(), g0)
    nab = covariant_derivative_spinor(geom)
    nabbar = covariant_derivative_adjoint(geom)
    gpsi = jets.contract("k,aik->ai", geom.psi, g.gammas)  # gamma^a psi
    t1 = _trace_kinetic(psibar, nab, g)
    t2 = jets.prod("ai,ai->", nabbar, gpsi)
    mass = jets.prod("i,i->", psibar, geom.psi)
    bracket = (t1 - t2) * (0.5j * alpha) - mass * m
    return LagrangianDensity((geom.det * bracket).real, "D", dict(FIRST_ORDER))


def _trace_kinetic(psibar: Jet, nab: Jet, g: GammaRep) -> Jet:
    """``psibar gamma^a nabla_a psi``."""
    gn = jets.contract("ak,aik->i", nab, g.gammas)
    return jets.prod("i,i->", psibar, gn)


def lambda_total(geom: PointGeometry, k: float, alpha: float, m: float,
                 g: GammaRep | None = None) -> LagrangianDensity:
    return lambda_EC(geom, k) + lambda_D(geom, alpha, m, g)


def _slot_lagrangian(fn) -> Callable[[Jet, Jet], Jet]:
    def L(x: Jet, y: Jet) -> Jet:
        return fn(geometry_from_slots(y)).value

    return L


def ec_lagrangian(k: float = 1.0):
    return _slot_lagrangian(lambda geom: lambda_EC(geom, k))


def dirac_lagrangian(alpha: float = 1.0, m: float = 1.0):
    return _slot_lagrangian(lambda geom: lambda_D(geom, alpha, m))


def total_lagrangian(k: float = 1.0, alpha: float = 1.0, m: float = 1.0):
    return _slot_lagrangian(lambda geom: lambda_total(geom, k, alpha, m))
