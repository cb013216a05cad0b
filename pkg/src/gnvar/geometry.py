"""Tetrad, spin connection and spinor geometry at a chart point.

Field components form one flat system ordered tetrad block, connection block,
spinor block:

* ``theta[a, mu]``            16 components, index ``4*a + mu``
* ``omega[p, mu]``            24 components, plane ``p`` over ``PLANES`` (a<b)
* ``psi[k]`` as (re, im)       8 components, ``2*k`` real and ``2*k+1`` imaginary

Internal (Lorentz) indices move with ``ETA``; world indices are never raised
or lowered implicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import forms, jets
from .clifford import ETA, PLANES, GammaRep, build_gamma
from .fieldlang import Expr, coordinate_jets, field_jets, parse_expression, section_slots
from .jets import Jet, JetOrderError

N_THETA, N_OMEGA, N_PSI = 16, 24, 8
N_FIELDS = N_THETA + N_OMEGA + N_PSI
THETA = slice(0, N_THETA)
OMEGA = slice(N_THETA, N_THETA + N_OMEGA)
PSI = slice(N_THETA + N_OMEGA, N_FIELDS)

# plane (6) -> antisymmetric (4, 4)
PLANE_EMBED = np.zeros((6, 4, 4))
for _p, (_a, _b) in enumerate(PLANES):
    PLANE_EMBED[_p, _a, _b] = 1.0
    PLANE_EMBED[_p, _b, _a] = -1.0

# (re, im) pairs (8) -> complex spinor (4)
SPINOR_EMBED = np.zeros((8, 4), dtype=complex)
for _k in range(4):
    SPINOR_EMBED[2 * _k, _k] = 1.0
    SPINOR_EMBED[2 * _k + 1, _k] = 1.0j


def component_names() -> list[str]:
    names = [f"theta[{a}][{m}]" for a in range(4) for m in range(4)]
    names += [f"omega[{a}{b}][{m}]" for a, b in PLANES for m in range(4)]
    names += [f"psi[{k}].{part}" for k in range(4) for part in ("re", "im")]
    return names


class SingularTetrad(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class FieldConfig:
    """Analytic tetrad, spin connection and spinor on one chart."""

    theta: tuple[Expr, ...]
    omega: tuple[Expr, ...]
    psi: tuple[Expr, ...]
    constants: Mapping[str, float] = field(default_factory=dict)
    k: float = 1.0
    alpha: float = 1.0
    m: float = 1.0
    order: int = 2

    def __post_init__(self):
        for name, n in (("theta", N_THETA), ("omega", N_OMEGA), ("psi", N_PSI)):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} needs {n} expressions, got {len(getattr(self, name))}")

    @classmethod
    def from_strings(cls, theta: Sequence[str], omega: Sequence[str], psi: Sequence[str],
                     **kw) -> "FieldConfig":
        p = lambda xs: tuple(parse_expression(s) for s in xs)
        return cls(p(theta), p(omega), p(psi), **kw)

    @property
    def fields(self) -> tuple[Expr, ...]:
        return self.theta + self.omega + self.psi

    @property
    def consts(self) -> dict[str, float]:
        out = dict(self.constants)
        out.setdefault("k", self.k)
        out.setdefault("alpha", self.alpha)
        out.setdefault("m", self.m)
        return out

    def field_jets(self, point: Sequence[float], order: int) -> Jet:
        return field_jets(self.fields, point, order, self.consts)


@dataclass(frozen=True)
class PointGeometry:
    """Jets (common order) of every geometric object at one base point."""

    theta: Jet        # theta^a_mu            [a, mu]
    dtheta: Jet       # d_nu theta^a_mu       [a, mu, nu]
    e: Jet            # e_a^mu                [a, mu]
    det: Jet          # det theta
    g: Jet            # g_{mu nu}             [mu, nu]
    omega: Jet        # omega^{ab}_mu         [a, b, mu]
    domega: Jet       # d_nu omega^{ab}_mu    [a, b, mu, nu]
    omega_spin: Jet   # -1/4 omega^{ab}_mu gamma_ab   [mu, i, j]
    curvature: Jet    # Omega^{ab}_{mu nu}    [a, b, mu, nu]
    psi: Jet          # [k]
    dpsi: Jet         # d_mu psi              [k, mu]
    gamma: GammaRep

    @property
    def order(self) -> int:
        return self.theta.order

    def omega_mixed(self) -> Jet:
        """omega^a_{b mu} = omega^{ac}_mu eta_cb."""
        return jets.contract("acm,cb->abm", self.omega, ETA)

    def lower_internal(self, t: Jet, n: int = 2) -> Jet:
        """Lower the first ``n`` internal indices of ``t`` with eta."""
        for i in range(n):
            letters = "abcdefgh"[: t.ndim]
            out = letters.replace(letters[i], "z")
            t = jets.contract(f"{letters},{letters[i]}z->{out}", t, ETA)
        return t


def unpack_slots(y: Jet):
    """Split jet coordinates (48, nslot) into tensor blocks.

    Returns ``theta[a,mu]``, ``dtheta[a,mu,nu]``, ``omega[a,b,mu]``,
    ``domega[a,b,mu,nu]``, ``psi[k]`` and ``dpsi[k,mu]``.
    """
    if y.shape[1] < 5:
        raise JetOrderError("first-order jet coordinates required")
    th = y[THETA].reshape(4, 4, y.shape[1])
    om = y[OMEGA].reshape(6, 4, y.shape[1])
    ps = y[PSI]
    theta = th[:, :, 0]
    dtheta = th[:, :, 1:5]
    omega = jets.contract("pm,pab->abm", om[:, :, 0], PLANE_EMBED)
    domega = jets.contract("pmn,pab->abmn", om[:, :, 1:5], PLANE_EMBED)
    psi = jets.contract("r,rk->k", ps[:, 0], SPINOR_EMBED)
    dpsi = jets.contract("rn,rk->kn", ps[:, 1:5], SPINOR_EMBED)
    return theta, dtheta, omega, domega, psi, dpsi


def curvature_from(omega: Jet, domega: Jet) -> Jet:
    """Omega^{ab}_{mu nu} = d_mu w_nu - d_nu w_mu + w^a_{c mu} w^{cb}_nu - w^a_{c nu} w^{cb}_mu."""
    dw = domega.transpose(0, 1, 3, 2) - domega  # [a,b,mu,nu]: d_mu w_nu - d_nu w_mu
    wm = jets.contract("acm,cd->adm", omega, ETA)  # omega^a_{d mu}
    quad = jets.prod("acm,cbn->abmn", wm, omega)
    return dw + quad - quad.transpose(0, 1, 3, 2)


def spinor_connection(omega: Jet, gamma: GammaRep | None = None) -> Jet:
    """``-1/4 omega^{ab}_mu gamma_ab`` for each mu: shape (4, 4, 4)."""
    gamma = gamma or build_gamma()
    return jets.contract("abm,abij->mij", omega, -0.25 * gamma.gamma_ab)


def geometry_from_slots(y: Jet, gamma: GammaRep | None = None) -> PointGeometry:
    gamma = gamma or build_gamma()
    theta, dtheta, omega, domega, psi, dpsi = unpack_slots(y)
    if abs(np.linalg.det(theta.value)) < 1e-14:
        raise SingularTetrad("tetrad is singular at the base point")
    e = jets.inv(theta).transpose()  # inv(theta)[mu, a] -> e[a, mu]
    det = jets.det4(theta)
    g = _metric(theta)
    return PointGeometry(
        theta=theta, dtheta=dtheta, e=e, det=det, g=g, omega=omega, domega=domega,
        omega_spin=spinor_connection(omega, gamma), curvature=curvature_from(omega, domega),
        psi=psi, dpsi=dpsi, gamma=gamma,
    )


def _metric(theta: Jet) -> Jet:
    lowered = jets.contract("am,ab->bm", theta, ETA)
    return jets.prod("bm,bn->mn", lowered, theta)


def evaluate_geometry(cfg: FieldConfig, point: Sequence[float], order: int | None = None,
                      gamma: GammaRep | None = None) -> PointGeometry:
    """All geometric objects at ``point`` as jets of ``order`` (default ``cfg.order``)."""
    order = cfg.order if order is None else order
    y = section_slots(cfg.field_jets(point, order + 1), 1, order)
    return geometry_from_slots(y, gamma)


def curvature(cfg: FieldConfig, point: Sequence[float], order: int | None = None) -> Jet:
    return evaluate_geometry(cfg, point, order).curvature


def covariant_derivative_spinor(geom: PointGeometry) -> Jet:
    """nabla_a psi = e_a^mu (d_mu psi + omega~_mu psi): shape [a, k]."""
    conn = jets.prod("mij,j->im", geom.omega_spin, geom.psi)
    return jets.prod("am,im->ai", geom.e, geom.dpsi + conn)


def covariant_derivative_adjoint(geom: PointGeometry) -> Jet:
    """nabla_a psibar = e_a^mu (d_mu psibar - psibar omega~_mu): shape [a, k]."""
    g0 = geom.gamma.gammas[0]
    psibar = jets.contract("j,jk->k", geom.psi.conj(), g0)
    dpsibar = jets.contract("jm,jk->km", geom.dpsi.conj(), g0)
    conn = jets.prod("j,mjk->km", psibar, geom.omega_spin)
    return jets.prod("am,km->ak", geom.e, dpsibar - conn)


def volume_forms(geom: PointGeometry):
    """``(eps, eps_a, eps_ab)`` as form components.

    ``eps`` is the 4-form ``det theta * LC``; ``eps_a = e_a _| eps`` (3-form);
    ``eps_ab = e_b _| (e_a _| eps)`` (2-form), i.e. components
    ``e_a^m e_b^n eps_{m n r s}``.
    """
    eps = jets.contract(",mnrs->mnrs", geom.det, forms.LC)
    eps_a = jets.prod("am,mnrs->anrs", geom.e, eps)
    eps_ab = jets.prod("bn,anrs->abrs", geom.e, eps_a)
    return eps, eps_a, eps_ab


def covariant_exterior_derivative(form: Jet, p: int, omega: Jet) -> Jet:
    """``D F_ab = dF_ab - omega^c_a ^ F_cb - omega^c_b ^ F_ac`` for a p-form
    with two lower internal indices; ``omega`` is ``omega^{ab}_mu``.

    The result is one jet order lower than ``form``.
    """
    dF = forms.d(form, p)
    w = jets.contract("cdm,da->cam", omega, ETA).truncate(dF.order)  # omega^c_{a mu}
    Fl = form.truncate(dF.order)
    t1 = forms.wedge(w, 1, Fl, p, "ca,cb->ab")
    t2 = forms.wedge(w, 1, Fl, p, "cb,ac->ab")
    return dF - t1 - t2


def linear_connection(geom: PointGeometry) -> Jet:
    """Gamma^l_{mu nu} = e_c^l (d_mu theta^c_nu + omega^c_{d mu} theta^d_nu): [l, mu, nu]."""
    dth = geom.dtheta.transpose(0, 2, 1)  # [c, mu, nu] = d_mu theta^c_nu
    wm = geom.omega_mixed()  # [c, d, mu]
    rot = jets.prod("cdm,dn->cmn", wm, geom.theta)
    return jets.prod("cl,cmn->lmn", geom.e, dth + rot)


def transposed_covariant_derivative(geom: PointGeometry, xi: Jet, dxi: Jet) -> Jet:
    """Antisymmetrized internal components ``nabla~^[a xi^b]`` as a (4, 4) jet.

    ``xi[l]`` and ``dxi[l, mu] = d_mu xi^l`` must share the geometry's order.
    The transposed connection swaps the lower indices:
    ``nabla~_mu xi^l = d_mu xi^l + Gamma^l_{nu mu} xi^nu``.
    """
    gam = linear_connection(geom)
    nab = dxi + jets.prod("lnm,n->lm", gam, xi)  # [l, mu]
    mixed = _internal(geom, nab)
    up = jets.contract("cb,ac->ab", mixed, ETA)  # raise first index
    return (up - up.transpose()) * 0.5


def _internal(geom: PointGeometry, nab: Jet) -> Jet:
    """``e_a^mu theta^b_l nab[l, mu]`` -> [a, b]."""
    t = jets.prod("bl,lm->bm", geom.theta, nab)
    return jets.prod("am,bm->ab", geom.e, t)


def xi_jets(xi: Sequence[Expr], point: Sequence[float], order: int,
            consts: Mapping[str, float] | None = None):
    """``(xi[l], dxi[l, mu])`` as jets of ``order`` from four expressions."""
    full = field_jets(xi, point, order + 1, consts)
    return full.truncate(order), full.grad()


__all__ = [
    "FieldConfig", "PointGeometry", "SingularTetrad", "evaluate_geometry", "curvature",
    "spinor_connection", "covariant_derivative_spinor", "covariant_derivative_adjoint",
    "volume_forms", "covariant_exterior_derivative", "transposed_covariant_derivative",
    "linear_connection", "geometry_from_slots", "unpack_slots", "component_names",
    "coordinate_jets", "xi_jets",
]
