"""Lifts of infinitesimal principal automorphisms to the tetrad, connection
and spinor fields, the Kosmann lift, and generalized Lie derivatives.

Conventions (all internal indices move with eta):

* ``G^{ab}`` is the total generator of the automorphism and
  ``Xi_v = G + xi _| omega`` its vertical part with respect to ``omega``.
* The lifted vector field has components

      Xi(theta)^a_mu = G^a_b theta^b_mu - theta^a_nu d_mu xi^nu
      Xi(omega)_mu   = -(d_mu G + [omega_mu, G]) - omega_nu d_mu xi^nu
      Xi(psi)        = s(G) psi,       s(A) = -1/4 A^{ab} gamma_ab

  (matrix commutators in mixed-index form), and ``L y = xi^mu d_mu y - Xi(y)``.
  With these signs ``L omega = xi _| Omega + D Xi_v`` and the Einstein-Cartan
  and Dirac densities are invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from typing import Mapping, Sequence

import numpy as np

from . import jets
from .clifford import ETA, PLANES, GammaRep, build_gamma
from .fieldlang import Expr, field_jets, parse_expression, section_slots
from .geometry import (PLANE_EMBED, PointGeometry, covariant_derivative_spinor,
                       geometry_from_slots, transposed_covariant_derivative)
from .jets import Jet

ZERO = parse_expression("0")


@dataclass(frozen=True)
class InfinitesimalAutomorphism:
    """Base field ``xi^mu`` plus a vertical part: explicit ``Xi_v`` planes or Kosmann.

    ``offset`` (six plane Exprs) is added to the vertical part in either mode.
    """

    xi: tuple[Expr, ...]
    xi_v: tuple[Expr, ...] | None = None
    offset: tuple[Expr, ...] | None = None
    consts: Mapping[str, float] = dc_field(default_factory=dict)

    def __post_init__(self):
        if len(self.xi) != 4:
            raise ValueError("xi needs 4 expressions")
        for name in ("xi_v", "offset"):
            v = getattr(self, name)
            if v is not None and len(v) != 6:
                raise ValueError(f"{name} needs 6 plane expressions")

    @property
    def mode(self) -> str:
        return "kosmann" if self.xi_v is None else "explicit"

    @classmethod
    def kosmann(cls, xi: Sequence[str], **kw) -> "InfinitesimalAutomorphism":
        return cls(tuple(parse_expression(s) for s in xi), None, **kw)

    @classmethod
    def explicit(cls, xi: Sequence[str], xi_v: Sequence[str], **kw) -> "InfinitesimalAutomorphism":
        return cls(tuple(parse_expression(s) for s in xi),
                   tuple(parse_expression(s) for s in xi_v), **kw)

    def perturbed(self, plane: int, amount: float) -> "InfinitesimalAutomorphism":
        off = [ZERO] * 6 if self.offset is None else list(self.offset)
        off[plane] = _add_const(off[plane], amount)
        return replace(self, offset=tuple(off))

    def xi_jets(self, point, order: int) -> tuple[Jet, Jet]:
        """``(xi, dxi[l, mu])`` with ``xi`` of ``order`` and ``dxi`` of ``order - 1``."""
        full = field_jets(self.xi, point, order, self.consts)
        return full, full.grad()

    def lift_fn(self, gamma: GammaRep | None = None):
        """Callable ``(x, field) -> (xi, Xi)`` for the variational engine."""
        gamma = gamma or build_gamma()

        def lift(x: Jet, field: Jet):
            lc = lift_components(self, field, _point(x), gamma)
            return lc.xi, lc.Xi

        return lift


def _add_const(e: Expr, amount: float) -> Expr:
    from .fieldlang import BinOp, Const
    return BinOp("+", e, Const(float(amount)))


def _point(x: Jet) -> tuple[float, ...]:
    return tuple(float(v) for v in np.real(x.value))


def planes_to_matrix(planes: Jet) -> Jet:
    """(6, ...) plane jets -> antisymmetric (4, 4, ...) jets."""
    lead = "xyz"[: planes.ndim - 1]
    return jets.contract(f"p{lead},pab->ab{lead}", planes, PLANE_EMBED)


def matrix_to_planes(m: Jet) -> Jet:
    return jets.stack([m[a, b] for a, b in PLANES])


def mixed(A: Jet) -> Jet:
    """``A^a_b = A^{ac} eta_cb`` on the first two axes."""
    return jets.contract("ac...,cb->ab...".replace("...", "xyz"[: A.ndim - 2]), A, ETA)


def upper(M: Jet) -> Jet:
    """Inverse of :func:`mixed`."""
    return jets.contract("ac...,cb->ab...".replace("...", "xyz"[: M.ndim - 2]), M, ETA)


def kosmann_lift(geom: PointGeometry, xi: Jet, dxi: Jet) -> Jet:
    """``Xi_v^{ab} = -nabla~^[a xi^b]`` as a (4, 4) jet."""
    return -transposed_covariant_derivative(geom, xi, dxi)


def vertical_generator(aut: InfinitesimalAutomorphism, geom: PointGeometry, xi: Jet,
                       dxi: Jet, point) -> Jet:
    """``Xi_v^{ab}`` at the geometry's order."""
    n = geom.order
    if aut.mode == "kosmann":
        xv = kosmann_lift(geom, xi.truncate(n), dxi.truncate(n))
    else:
        xv = planes_to_matrix(field_jets(aut.xi_v, point, n, aut.consts))
    if aut.offset is not None:
        xv = xv + planes_to_matrix(field_jets(aut.offset, point, n, aut.consts))
    return xv


def total_generator(xi_v: Jet, xi: Jet, omega: Jet) -> Jet:
    """``G^{ab} = Xi_v^{ab} - xi^mu omega^{ab}_mu``."""
    return xi_v - jets.prod("abm,m->ab", omega, xi)


@dataclass(frozen=True)
class LiftComponents:
    xi: Jet        # xi^mu, order N - 2
    Xi: Jet        # lifted components in field order, shape (48,), order N - 2
    G: Jet         # total generator, order N - 1
    xi_v: Jet      # vertical generator, order N - 1
    geom: PointGeometry  # geometry at order N - 1


def spin_action(G: Jet, gamma: GammaRep) -> Jet:
    """``s(G) = -1/4 G^{ab} gamma_ab`` as a (4, 4) complex jet."""
    return jets.contract("ab,abij->ij", G, -0.25 * gamma.gamma_ab)


def spinor_to_components(psi: Jet) -> Jet:
    """Complex (4,) -> (re, im) pairs (8,)."""
    return jets.stack([psi.real, psi.imag], axis=-1).reshape(8)


def generator_action(G: Jet, dG: Jet, geom: PointGeometry, gamma: GammaRep):
    """Lift components linear in the generator: ``(theta, omega, psi)`` parts
    ``(G theta, -(dG + [omega, G]), s(G) psi)`` at ``dG``'s order."""
    n = dG.order
    G = G.truncate(n)
    Gm = mixed(G)
    th = jets.prod("ab,bm->am", Gm, geom.theta.truncate(n))
    wm = mixed(geom.omega.truncate(n))  # [a, c, mu]
    comm = jets.prod("acm,cb->abm", wm, Gm) - jets.prod("ac,cbm->abm", Gm, wm)
    om = -(dG + upper(comm))  # [a, b, mu]
    ps = jets.prod("ij,j->i", spin_action(G, gamma), geom.psi.truncate(n))
    return th, om, ps


def drag_terms(geom: PointGeometry, dxi: Jet):
    """Parts depending on ``d xi`` only: ``(-theta_nu d_mu xi^nu, -omega_nu d_mu xi^nu)``."""
    n = dxi.order
    th = -jets.prod("an,nm->am", geom.theta.truncate(n), dxi)
    om = -jets.prod("abn,nm->abm", geom.omega.truncate(n), dxi)
    return th, om


def pack(theta: Jet, omega: Jet, psi_c: Jet) -> Jet:
    """Assemble (4,4), (4,4,4) and complex (4,) jets into the 48-component layout."""
    om = matrix_to_planes(omega).reshape(24)
    return jets.concat([theta.reshape(16), om, spinor_to_components(psi_c)])


def lift_components(aut: InfinitesimalAutomorphism, field: Jet, point,
                    gamma: GammaRep | None = None) -> LiftComponents:
    """Lifted vector field along the section; field jets of order ``N >= 2``."""
    gamma = gamma or build_gamma()
    N = field.order
    if N < 2:
        raise jets.JetOrderError("lift needs field jets of order 2")
    geom = geometry_from_slots(section_slots(field, 1, N - 1), gamma)
    xi_full, dxi = aut.xi_jets(point, N)
    xi = xi_full.truncate(N - 1)
    xv = vertical_generator(aut, geom, xi, dxi, point)
    G = total_generator(xv, xi, geom.omega)
    dG = G.grad()  # [a, b, mu], order N - 2
    th, om, ps = generator_action(G, dG, geom, gamma)
    dth, dom = drag_terms(geom, dxi.truncate(N - 2))
    Xi = pack(th + dth, om + dom, ps)
    return LiftComponents(xi_full.truncate(N - 2), Xi, G, xv, geom)


# -- Lie derivatives -------------------------------------------------------------

def lie_derivative_section(aut: InfinitesimalAutomorphism, field: Jet, point,
                           gamma: GammaRep | None = None) -> Jet:
    """``L y = xi^mu d_mu y - Xi(y)`` for all 48 components, order ``N - 2``."""
    lc = lift_components(aut, field, point, gamma)
    n = lc.Xi.order
    dy = field.grad().truncate(n)
    return jets.prod("im,m->i", dy, lc.xi) - lc.Xi


def lie_derivative_tetrad(geom: PointGeometry, xi: Jet, dxi: Jet, xi_v: Jet) -> Jet:
    """``xi^n d_n theta^a_m + theta^a_n d_m xi^n - (Xi_v - xi _| omega)^a_b theta^b_m``.

    All inputs at the geometry's order; ``dxi[l, mu] = d_mu xi^l``.
    """
    n = geom.order
    xi, dxi = xi.truncate(n), dxi.truncate(n)
    G = total_generator(xi_v, xi, geom.omega)
    return (jets.prod("amn,n->am", geom.dtheta, xi)
            + jets.prod("an,nm->am", geom.theta, dxi)
            - jets.prod("ab,bm->am", mixed(G), geom.theta))


def lie_derivative_connection(geom: PointGeometry, xi: Jet, xi_v: Jet) -> Jet:
    """``xi^n Omega^{ab}_{n m} + d_m Xi_v^{ab} + omega^a_{c m} Xi_v^{cb} + omega^b_{c m} Xi_v^{ac}``.

    Result has one order less than ``geom``.
    """
    n = geom.order - 1
    dxv = xi_v.grad()  # [a, b, m]
    wm = mixed(geom.omega.truncate(n))
    xv = xi_v.truncate(n)
    curv = jets.prod("abnm,n->abm", geom.curvature.truncate(n), xi.truncate(n))
    t1 = jets.prod("acm,cb->abm", wm, xv)
    t2 = jets.prod("bcm,ac->abm", wm, xv)
    return curv + dxv + t1 + t2


def lie_derivative_spinor(geom: PointGeometry, xi: Jet, xi_v: Jet,
                          gamma: GammaRep | None = None) -> Jet:
    """``xi^a nabla_a psi - 1/4 Xi_{v ab} gamma^a gamma^b psi`` (complex (4,))."""
    gamma = gamma or geom.gamma
    n = geom.order
    nab = covariant_derivative_spinor(geom)  # [a, k]
    xi_int = jets.prod("am,m->a", geom.theta, xi.truncate(n))  # xi^a = theta^a_mu xi^mu
    low = _lower2(xi_v)
    gg = np.einsum("aij,bjk->abik", gamma.gammas, gamma.gammas)
    rot = jets.prod("ab,k->abk", low, geom.psi)
    rot = jets.contract("abk,abik->i", rot, gg)
    return jets.prod("a,ak->k", xi_int, nab) - rot * 0.25


def _lower2(A: Jet) -> Jet:
    return upper(jets.contract("ab,ac->cb", A, ETA))


def lie_derivative_components(geom: PointGeometry, xi: Jet, dxi: Jet, xi_v: Jet,
                              gamma: GammaRep | None = None) -> Jet:
    """The three formula-based Lie derivatives packed into 48 components
    (order one less than ``geom``)."""
    n = geom.order - 1
    lt = lie_derivative_tetrad(geom, xi, dxi, xi_v).truncate(n)
    lw = lie_derivative_connection(geom, xi, xi_v)
    lp = lie_derivative_spinor(geom, xi, xi_v, gamma).truncate(n)
    return pack(lt, lw, lp)


@dataclass(frozen=True)
class VerticalRelation:
    lie: Jet           # formula Lie derivative, 48 components
    xi_V: Jet          # Xi_V from the lift
    split_residual: float   # spinor: Xi_V - (Xi_v(psi) - xi^mu omega~_mu psi - xi^mu d_mu psi)

    @property
    def residual(self) -> float:
        return float(np.max(np.abs((self.xi_V + self.lie).coeffs)))


def vertical_part_relation_check(aut: InfinitesimalAutomorphism, field: Jet, point,
                                 gamma: GammaRep | None = None) -> VerticalRelation:
    """Compare ``Xi_V`` with ``-L`` componentwise, and check the spinor split
    of ``Xi_V`` into its vertical, connection and drag parts."""
    gamma = gamma or build_gamma()
    lc = lift_components(aut, field, point, gamma)
    n = lc.Xi.order
    dy = field.grad().truncate(n)
    XiV = lc.Xi - jets.prod("im,m->i", dy, lc.xi)
    geom = lc.geom
    xi_full, dxi = aut.xi_jets(point, field.order)
    lie = lie_derivative_components(geom, xi_full.truncate(geom.order), dxi, lc.xi_v, gamma)
    # spinor split: s(Xi_v) psi - xi^mu omega~_mu psi - xi^mu d_mu psi
    psi, dpsi = geom.psi.truncate(n), geom.dpsi.truncate(n)
    xi = lc.xi
    vert = jets.prod("ij,j->i", spin_action(lc.xi_v.truncate(n), gamma), psi)
    conn = jets.prod("mi,m->i", jets.prod("mij,j->mi", geom.omega_spin.truncate(n), psi), xi)
    drag = jets.prod("km,m->k", dpsi, xi)
    split = spinor_to_components(vert - conn - drag)
    res = float(np.max(np.abs((XiV[40:] - split).coeffs)))
    return VerticalRelation(lie.truncate(n), XiV, res)


# -- bracket ---------------------------------------------------------------------

def _drag_tetrad(theta: Jet, xi: Jet, dxi: Jet, Gm: Jet) -> Jet:
    """``xi^n d_n theta_m + theta_n d_m xi^n - G theta_m`` on a tetrad-valued jet."""
    n = theta.order - 1
    dth = theta.grad()
    return (jets.prod("amn,n->am", dth, xi.truncate(n))
            + jets.prod("an,nm->am", theta.truncate(n), dxi.truncate(n))
            - jets.prod("ab,bm->am", Gm.truncate(n), theta.truncate(n)))


def lie_bracket_homomorphism_check(aut1: InfinitesimalAutomorphism,
                                   aut2: InfinitesimalAutomorphism, field: Jet, point) -> float:
    """``[L_1, L_2] theta - L_[1,2] theta`` with the generators frozen along
    the section; the bracket has base part ``[xi1, xi2]`` and generator
    ``xi1(G2) - xi2(G1) - [G1, G2]``.  Needs field jets of order 4."""
    if field.order < 4:
        raise jets.JetOrderError("bracket check needs field jets of order 4")
    theta = field[:16].reshape(4, 4).truncate(3)
    omega = planes_to_matrix(field[16:40].reshape(6, 4)).truncate(3)
    x1, dx1 = aut1.xi_jets(point, 4)
    x2, dx2 = aut2.xi_jets(point, 4)

    def gen(aut, xi):
        if aut.mode != "explicit":
            raise ValueError("bracket check needs explicit automorphisms")
        xv = planes_to_matrix(field_jets(aut.xi_v, point, 3, aut.consts))
        return mixed(total_generator(xv, xi.truncate(3), omega))

    G1, G2 = gen(aut1, x1), gen(aut2, x2)
    l2 = _drag_tetrad(theta, x2, dx2, G2)  # order 2
    l1 = _drag_tetrad(theta, x1, dx1, G1)
    l12 = _drag_tetrad(l2, x1, dx1, G1)  # order 1
    l21 = _drag_tetrad(l1, x2, dx2, G2)
    # bracket automorphism, order 2 -> 1
    xb = jets.prod("nm,m->n", dx2.truncate(3), x1.truncate(3)) - \
        jets.prod("nm,m->n", dx1.truncate(3), x2.truncate(3))
    dG1, dG2 = G1.grad(), G2.grad()
    Gb = (jets.prod("abm,m->ab", dG2, x1.truncate(2)) - jets.prod("abm,m->ab", dG1, x2.truncate(2))
          - jets.prod("ac,cb->ab", G1.truncate(2), G2.truncate(2))
          + jets.prod("ac,cb->ab", G2.truncate(2), G1.truncate(2)))
    lb = _drag_tetrad(theta.truncate(2), xb.truncate(2), xb.grad(), Gb)
    diff = (l12 - l21).truncate(1) - lb.truncate(1)
    return float(np.max(np.abs(diff.value)))
