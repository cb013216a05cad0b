"""Noether current, superpotential and identity suites for the EC-Dirac system.

Conventions (all densities are coefficients of ``dx^0 ^ ... ^ dx^3``, currents
are dual coefficients ``J^mu`` of 3-forms):

* ``eps_a`` has dual coefficients ``det theta * e_a^mu``.
* ``eps_ab = e_a _| (e_b _| eps)``, components ``e_b^m e_a^n eps_{mnrs}``.
  This is minus the ordering returned by :func:`geometry.volume_forms`.
* The reported current is ``-(Xi_V . p + xi L)``.  With this sign the tetrad
  term of a pure Dirac field along ``xi = d_0`` is the positive rest-frame
  energy ``T^0_0 = m psibar psi``.

Field-equation tensors are read off the Euler-Lagrange rows:

* ``G^a_b = k E^EC[theta^b_nu] theta^a_nu / det``
* ``T^a_b = -E^D[theta^b_nu] theta^a_nu / det``
* ``u_ab^c = (1/2) E^D[omega^ab_mu] theta^c_mu / det``
* the torsion term ``(1/2k) D eps_ab`` is dual to ``(1/2) E^EC[omega^ab]``.

With these the current splits as

    J = xi^b (-(1/k) G^a_b + T^a_b) eps_a
        + Xi_v^ab ((1/2k) D eps_ab - u_ab^c eps_c) + d_H nu,
    nu = -(1/2k) Xi_v^ab eps_ab,

and the split is checked numerically rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import forms, jets
from .clifford import PLANES, GammaRep, build_gamma
from .fieldlang import coordinate_jets, section_slots
from .geometry import (OMEGA, THETA, FieldConfig, PointGeometry, covariant_exterior_derivative,
                       geometry_from_slots, volume_forms)
from .jets import Jet, JetOrderError
from .lagrangians import dirac_lagrangian, ec_lagrangian, total_lagrangian
from .lifts import InfinitesimalAutomorphism, lift_components, planes_to_matrix
from .variational import (Lagrangian, bergmann_bianchi_check, canonical_current, euler_lagrange,
                          naturality_check)


def lagrangians(cfg: FieldConfig) -> tuple[Lagrangian, Lagrangian, Lagrangian]:
    """``(lambda_EC, lambda_D, lambda)`` for the config's constants."""
    return (Lagrangian(ec_lagrangian(cfg.k), name="EC"),
            Lagrangian(dirac_lagrangian(cfg.alpha, cfg.m), name="D"),
            Lagrangian(total_lagrangian(cfg.k, cfg.alpha, cfg.m), name="EC+D"))


def _theta_block(E: Jet) -> Jet:
    return E[THETA].reshape(4, 4)


def _omega_block(E: Jet) -> Jet:
    """Half the connection rows as an antisymmetric ``[a, b, mu]`` array.

    Contracting with ``Xi_v^ab`` over all ``a, b`` reproduces the sum over
    independent planes.
    """
    return planes_to_matrix(E[OMEGA].reshape(6, 4)) * 0.5


def eps_pairs(geom: PointGeometry) -> Jet:
    """``eps_ab`` in the ordering used throughout this module."""
    return -volume_forms(geom)[2]


def _mixed(block: Jet, geom: PointGeometry, n: int) -> Jet:
    """``block[b, nu] theta^a_nu / det`` -> ``[a, b]``."""
    th = geom.theta.truncate(n)
    return jets.prod("bn,an->ab", block, th) / geom.det.truncate(n)


@dataclass(frozen=True)
class FieldEquationForms:
    G: Jet        # G^a_b
    T: Jet        # T^a_b
    u: Jet        # u_ab^c, antisymmetric in (a, b)
    torsion: Jet  # (1/2) E^EC rows of the connection, [a, b, mu]
    E_ec: Jet
    E_d: Jet

    @property
    def on_shell_residual(self) -> float:
        return float(np.max(np.abs((self.E_ec + self.E_d).value)))


def _check_tetrad(geom: PointGeometry) -> None:
    from .geometry import SingularTetrad
    if abs(complex(geom.det.value)) < 1e-12:
        raise SingularTetrad("tetrad is singular at the point")


def field_equation_forms(cfg: FieldConfig, point: Sequence[float], order: int = 0,
                         field: Jet | None = None) -> FieldEquationForms:
    """``G``, ``T``, ``u`` and the torsion sector at ``point`` as jets of ``order``."""
    field = cfg.field_jets(point, order + 2) if field is None else field
    LEC, LD, _ = lagrangians(cfg)
    geom = geometry_from_slots(section_slots(field, 1, order))
    _check_tetrad(geom)
    E_ec = euler_lagrange(LEC, field, point, order)
    E_d = euler_lagrange(LD, field, point, order)
    G = _mixed(_theta_block(E_ec), geom, order) * cfg.k
    T = -_mixed(_theta_block(E_d), geom, order)
    om_d = _omega_block(E_d)
    u = jets.prod("abm,cm->abc", om_d, geom.theta) / geom.det  # [a, b, c]
    return FieldEquationForms(G, T, u, _omega_block(E_ec), E_ec, E_d)


@dataclass(frozen=True)
class Superpotential:
    nu: Jet  # 2-form components [r, s]

    @property
    def components(self) -> np.ndarray:
        """Six independent coefficients ``nu_rs`` (r < s) at the point."""
        v = self.nu.value.real
        return np.array([v[r, s] for r, s in PLANES])

    def current(self) -> Jet:
        """``d_H nu`` as dual coefficients, one order lower."""
        return exact_current(self.nu)


def exact_current(nu: Jet) -> Jet:
    """Dual coefficients of ``d nu``: ``d_n N^{mn}`` with ``N = *nu``."""
    N = forms.dual2(nu)
    return forms.divergence(N)


@dataclass(frozen=True)
class _LiftData:
    xi: Jet     # xi^mu
    xi_v: Jet   # Xi_v^ab
    geom: PointGeometry
    field: Jet


def _lift_data(cfg: FieldConfig, aut: InfinitesimalAutomorphism, point, order: int,
               gamma: GammaRep | None) -> _LiftData:
    field = cfg.field_jets(point, order + 2)
    lc = lift_components(aut, field, point, gamma)
    return _LiftData(lc.xi, lc.xi_v, lc.geom, field)


def superpotential(cfg: FieldConfig, aut: InfinitesimalAutomorphism, point,
                   order: int = 0, gamma: GammaRep | None = None) -> Superpotential:
    """``nu = -(1/2k) Xi_v^ab eps_ab`` as a 2-form jet of ``order``."""
    field = cfg.field_jets(point, order + 1 if order >= 1 else 2)
    lc = lift_components(aut, field, point, gamma)
    n = order
    nu = jets.prod("ab,abrs->rs", lc.xi_v.truncate(n), eps_pairs(lc.geom).truncate(n))
    return Superpotential(nu * (-0.5 / cfg.k))


@dataclass(frozen=True)
class NoetherCurrent:
    total: Jet     # -(Xi_V . p + xi L), computed from the momentum
    einstein: Jet  # -(1/k) xi^b G^a_b eps_a
    matter: Jet    # xi^b T^a_b eps_a
    torsion: Jet   # (1/2k) Xi_v^ab D eps_ab
    spin: Jet      # -Xi_v^ab u_ab^c eps_c
    exact: Jet     # d_H nu
    fields: FieldEquationForms | None = field(default=None, compare=False, repr=False)

    @property
    def value(self) -> np.ndarray:
        return self.total.value.real

    def breakdown_sum(self) -> Jet:
        return self.einstein + self.matter + self.torsion + self.spin + self.exact

    @property
    def bookkeeping_residual(self) -> float:
        return float(np.max(np.abs((self.total - self.breakdown_sum()).coeffs)))

    def as_dict(self) -> dict:
        return {name: [float(v) for v in getattr(self, name).value.real]
                for name in ("total", "einstein", "matter", "torsion", "spin", "exact")}


def noether_current(cfg: FieldConfig, aut: InfinitesimalAutomorphism, point,
                    order: int = 0, gamma: GammaRep | None = None) -> NoetherCurrent:
    """Current and its field-equation breakdown at ``point`` as jets of ``order``."""
    if order < 0:
        raise JetOrderError("order must be non-negative")
    gamma = gamma or build_gamma()
    ld = _lift_data(cfg, aut, point, order, gamma)
    field, n = ld.field, order
    _, _, LT = lagrangians(cfg)
    x = coordinate_jets(point, field.order)
    xi, Xi = aut.lift_fn(gamma)(x, field)
    total = -canonical_current(LT, field, xi, Xi, point, n)

    fe = field_equation_forms(cfg, point, n, field)
    geom = ld.geom
    det = geom.det.truncate(n)
    e = geom.e.truncate(n)
    xi_int = jets.prod("am,m->a", geom.theta.truncate(n), ld.xi.truncate(n))  # xi^a
    eps_a = jets.prod(",am->am", det, e)  # dual coefficients of eps_a
    einstein = -jets.prod("b,bm->m", xi_int, jets.prod("ab,am->bm", fe.G, eps_a)) * (1.0 / cfg.k)
    matter = jets.prod("b,bm->m", xi_int, jets.prod("ab,am->bm", fe.T, eps_a))

    xv = ld.xi_v
    eab = eps_pairs(geom)  # order n + 1
    De = forms.dual3(covariant_exterior_derivative(eab, 2, geom.omega))  # [a, b, mu]
    torsion = jets.prod("ab,abm->m", xv.truncate(n), De.truncate(n)) * (0.5 / cfg.k)
    spin = -jets.prod("ab,abm->m", xv.truncate(n), jets.prod("abc,cm->abm", fe.u, eps_a))
    nu = jets.prod("ab,abrs->rs", xv, eab) * (-0.5 / cfg.k)
    exact = exact_current(nu).truncate(n)
    return NoetherCurrent(total, einstein, matter, torsion, spin, exact, fe)


def current_divergence(cfg: FieldConfig, aut: InfinitesimalAutomorphism, point,
                       gamma: GammaRep | None = None) -> float:
    """``|d_H J|`` at ``point`` from the canonical current alone."""
    gamma = gamma or build_gamma()
    _, _, LT = lagrangians(cfg)
    field = cfg.field_jets(point, 3)
    xi, Xi = aut.lift_fn(gamma)(coordinate_jets(point, 3), field)
    J = canonical_current(LT, field, xi, Xi, point, 1)
    return abs(complex(forms.divergence(J).value))


# -- checks ----------------------------------------------------------------------

@dataclass(frozen=True)
class ConservationResiduals:
    divergence: float        # |d_H J|
    double_exact: float      # |d_H d_H nu|
    exact_two_path: float    # |(J - field-equation terms) - d_H nu|
    on_shell: float          # max |E| at the point
    bookkeeping: float = 0.0  # |J - (breakdown sum)|
    j0: float = 0.0           # J^0 at the point

    def as_dict(self) -> dict:
        return {"divergence": self.divergence, "double_exact": self.double_exact,
                "exact_two_path": self.exact_two_path, "on_shell": self.on_shell,
                "bookkeeping": self.bookkeeping, "J0": self.j0}


def conservation_check(cfg: FieldConfig, aut: InfinitesimalAutomorphism, point,
                       gamma: GammaRep | None = None) -> ConservationResiduals:
    """Residuals of ``d_H J = 0``, ``d_H d_H nu = 0`` and ``exact = d_H nu``."""
    cur = noether_current(cfg, aut, point, 1, gamma)
    div = forms.divergence(cur.total)
    sp = superpotential(cfg, aut, point, 2, gamma)
    dd = forms.divergence(sp.current())
    field_terms = cur.einstein + cur.matter + cur.torsion + cur.spin
    gap = (cur.total - field_terms) - sp.current().truncate(1)
    return ConservationResiduals(abs(complex(div.value)), abs(complex(dd.value)),
                                 float(np.max(np.abs(gap.coeffs))),
                                 cur.fields.on_shell_residual, cur.bookkeeping_residual,
                                 float(cur.value[0]))


@dataclass(frozen=True)
class IdentityResidual:
    point: tuple[float, ...]
    bergmann_bianchi: float  # Xi_V . J(Xi_V), lift held fixed
    naturality: float
    noether_identity: float | None = None  # lift varied too; vanishes identically


def noether_identity_suite(cfg: FieldConfig, aut: InfinitesimalAutomorphism,
                           points: Sequence[Sequence[float]],
                           gamma: GammaRep | None = None,
                           with_identity: bool = False) -> list[IdentityResidual]:
    """Bergmann-Bianchi contraction and naturality residual of ``lambda`` per point.

    ``with_identity`` also evaluates the contraction with the lift's field
    dependence varied, which must vanish for any lift of an invariant
    Lagrangian.
    """
    gamma = gamma or build_gamma()
    _, _, LT = lagrangians(cfg)
    lift = aut.lift_fn(gamma)
    out = []
    for p in points:
        p = tuple(float(v) for v in p)
        field = cfg.field_jets(p, 4)
        bb = bergmann_bianchi_check(LT, field, lift, p)
        nat = naturality_check(LT, field, lift, p)
        ident = None
        if with_identity:
            ident = abs(bergmann_bianchi_check(LT, field, lift, p, vary_lift=True).value)
        out.append(IdentityResidual(p, abs(bb.value), abs(nat), ident))
    return out


__all__ = [
    "FieldEquationForms", "field_equation_forms", "NoetherCurrent", "noether_current",
    "Superpotential", "superpotential", "exact_current", "eps_pairs", "lagrangians",
    "ConservationResiduals", "conservation_check", "IdentityResidual",
    "noether_identity_suite", "current_divergence",
]
