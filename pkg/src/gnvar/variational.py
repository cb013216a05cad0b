"""Jet-level variational calculus along sections.

Every quantity is evaluated along a section given by its field jets at a base
point (a :class:`Jet` of shape ``(ncomp,)``).  A Lagrangian is a callable
``L(x, y)`` of the coordinate jets ``x`` (shape ``(4,)``) and the jet
coordinates ``y`` (shape ``(ncomp, nslot)``, slots ordered as
``jets.multi_indices(order)``).

Partial derivatives with respect to jet coordinates are never formed
symbolically.  Two seeding schemes are used:

* slot seeding: each ``y^i_alpha`` gets its own first-order channel, so the
  channel part of ``L`` is ``dL/dy^i_alpha`` as an x-jet;
* field seeding: the section itself is perturbed by the monomials
  ``(x - x0)^g / g!`` in one component.  This works for composite section
  functionals (whose total derivatives were already taken) and is undone by
  a triangular recursion, see :func:`euler_from_field_response`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import forms, jets
from .fieldlang import Expr, coordinate_jets, field_jets, section_slots, slot_indices
from .jets import Jet, JetOrderError, index_of, multi_indices, ncoef

LagrangianFn = Callable[[Jet, Jet], Jet]
# lift(x, field) -> (xi[4], Xi[ncomp]) as x-jets along the section
LiftFn = Callable[[Jet, Jet], "tuple[Jet, Jet]"]


@dataclass(frozen=True)
class Lagrangian:
    fn: LagrangianFn
    order: int = 1
    name: str = "L"

    def __call__(self, x: Jet, y: Jet) -> Jet:
        return self.fn(x, y)


@dataclass(frozen=True)
class FieldSystem:
    """Named field components with closed-form sections."""

    names: tuple[str, ...]
    fields: tuple[Expr, ...]
    consts: Mapping[str, float] = dc_field(default_factory=dict)

    def __post_init__(self):
        if len(self.names) != len(self.fields):
            raise ValueError("one name per field component")

    @property
    def ncomp(self) -> int:
        return len(self.fields)

    def jets(self, point: Sequence[float], order: int) -> Jet:
        return field_jets(self.fields, point, order, self.consts)


@dataclass(frozen=True)
class EulerLagrangeForm:
    values: np.ndarray  # E_i at the point
    names: tuple[str, ...] = ()


@dataclass(frozen=True)
class MomentumForm:
    values: np.ndarray  # p^mu_i at the point, shape (ncomp, 4)
    names: tuple[str, ...] = ()


def _need(jet: Jet, order: int, what: str) -> None:
    if jet.order < order:
        raise JetOrderError(f"{what} needs jets of order {order}, have {jet.order}")


def _fit(jet: Jet, order: int) -> Jet:
    return jet.truncate(order) if jet.order >= order else jet.pad(order)


def _total(jet: Jet, alpha: Sequence[int]) -> Jet:
    for mu, k in enumerate(alpha):
        for _ in range(k):
            jet = jet.partial(mu)
    return jet


# -- partial derivatives by slot seeding --------------------------------------

def _slot_seeds(ncomp: int, nslot: int, order: int, comps: Sequence[int]) -> Jet:
    seeds = np.zeros((len(comps) * nslot, ncomp, nslot, ncoef(order)))
    n = 0
    for i in comps:
        for k in range(nslot):
            seeds[n, i, k, 0] = 1.0
            n += 1
    return Jet(seeds, order)


def _seeded_output(L: Lagrangian, field: Jet, point, order: int, comps) -> Jet:
    _need(field, order + L.order, "slot gradient")
    y = section_slots(field, L.order, order)
    ncomp, nslot = y.shape
    comps = range(ncomp) if comps is None else comps
    ys = jets.seeded(y, d1=_slot_seeds(ncomp, nslot, order, list(comps)))
    return L(coordinate_jets(point, order), ys)


def slot_gradient(L: Lagrangian, field: Jet, point, order: int, comps=None) -> Jet:
    """``dL/dy^i_alpha`` along the section, shape ``(len(comps), nslot)``, as x-jets."""
    out = _seeded_output(L, field, point, order, comps)
    nslot = len(slot_indices(L.order))
    if out.d1 is None:  # L ignores the fields entirely
        ncomp = field.shape[0] if comps is None else len(list(comps))
        return Jet.constant(np.zeros((ncomp, nslot)), order)
    return out.channel("d1").reshape(-1, nslot)


def euler_from_gradient(grad: Jet, lag_order: int, order: int) -> Jet:
    """``sum_alpha (-1)^|alpha| D_alpha grad[..., alpha]`` truncated to ``order``."""
    acc = None
    for k, alpha in enumerate(slot_indices(lag_order)):
        t = _total(grad[..., k], alpha).truncate(order)
        t = t if sum(alpha) % 2 == 0 else -t
        acc = t if acc is None else acc + t
    return acc


def euler_lagrange(L: Lagrangian, field: Jet, point, order: int = 0, comps=None) -> Jet:
    """Euler-Lagrange expressions ``E_i`` as x-jets of ``order``; needs field
    jets of order ``order + 2 r``."""
    _need(field, order + 2 * L.order, "euler_lagrange")
    grad = slot_gradient(L, field, point, order + L.order, comps)
    return euler_from_gradient(grad, L.order, order)


def euler_lagrange_form(L: Lagrangian, system: FieldSystem, point) -> EulerLagrangeForm:
    e = euler_lagrange(L, system.jets(point, 2 * L.order), point)
    return EulerLagrangeForm(e.value.copy(), system.names)


def momentum(L: Lagrangian, field: Jet, point, order: int = 0) -> Jet:
    """First-order momentum ``p^mu_i = dL/dy^i_mu``: shape ``(ncomp, 4)``."""
    if L.order != 1:
        raise NotImplementedError("momentum is implemented for first-order Lagrangians only")
    grad = slot_gradient(L, field, point, order)
    return grad[:, 1:5]


def momentum_form(L: Lagrangian, system: FieldSystem, point) -> MomentumForm:
    p = momentum(L, system.jets(point, 1), point)
    return MomentumForm(p.value.copy(), system.names)


# -- lifted vector fields ------------------------------------------------------

def vertical_part(field: Jet, xi: Jet, Xi: Jet) -> Jet:
    """``Xi_V^i = Xi^i - y^i_g xi^g`` along the section."""
    order = min(field.order - 1, xi.order, Xi.order)
    dy = field.grad().truncate(order)  # [i, g]
    return Xi.truncate(order) - jets.prod("ig,g->i", dy, xi.truncate(order))


def split_lifted_vector(field: Jet, xi: Jet, Xi: Jet, lag_order: int, order: int):
    """Return ``(xi, Xi_V, jXi_V, jXi)`` at ``order``.

    ``jXi_V[i, alpha] = D_alpha Xi_V^i`` is the vertical prolongation and
    ``jXi[i, alpha] = jXi_V[i, alpha] + y^i_{alpha+g} xi^g`` the full one.
    """
    XiV = vertical_part(field, xi, Xi)
    _need(XiV, order + lag_order, "prolongation")
    cols = [_total(XiV, a).truncate(order) for a in slot_indices(lag_order)]
    jXiV = jets.stack(cols, axis=-1)
    y_up = section_slots(field, lag_order + 1, order)
    idx = index_of(lag_order + 1)
    x0 = xi.truncate(order)
    full = []
    for k, a in enumerate(slot_indices(lag_order)):
        shift = None
        for g in range(4):
            b = list(a)
            b[g] += 1
            t = y_up[:, idx[tuple(b)]] * x0[g]
            shift = t if shift is None else shift + t
        full.append(jXiV[:, k] + shift)
    return x0, XiV.truncate(order), jXiV, jets.stack(full, axis=-1)


def horizontal_differential(current: Jet) -> Jet:
    """``d_H`` of a current given by its dual coefficients ``J^mu`` (last axis)."""
    return forms.divergence(current)


def canonical_current(L: Lagrangian, field: Jet, xi: Jet, Xi: Jet, point, order: int) -> Jet:
    """``J^mu = Xi_V^i p^mu_i + xi^mu L`` (first-order L), shape ``(4,)``."""
    XiV = vertical_part(field, xi, Xi).truncate(order)
    p = momentum(L, field, point, order)
    lag = L(coordinate_jets(point, order), section_slots(field, 1, order))
    return jets.prod("i,im->m", XiV, p) + jets.prod("m,->m", xi.truncate(order), lag)


@dataclass(frozen=True)
class TwoPath:
    lhs: Jet
    rhs: Jet

    @property
    def residual(self) -> float:
        return float(np.max(np.abs((self.lhs - self.rhs).coeffs)))


def variational_lie_derivative(L: Lagrangian, field: Jet, xi: Jet, Xi: Jet, point,
                               order: int = 0) -> TwoPath:
    """Both sides of the first variation formula at ``order``.

    lhs: drag of the density along the prolonged lift,
    ``sum_alpha jXi^i_alpha dL/dy^i_alpha + xi^mu d_mu L + L D_mu xi^mu``;
    rhs: ``Xi_V . E + D_mu(Xi_V^i p^mu_i + xi^mu L)``.
    Needs field jets of order ``order + 2`` and lift jets of order ``order + 1``.
    """
    if L.order != 1:
        raise NotImplementedError("two-path check implemented for first-order Lagrangians")
    xi0, XiV, jXiV, jXi = split_lifted_vector(field, xi, Xi, 1, order)
    x = coordinate_jets(point, order)
    y = section_slots(field, 1, order)
    dragged = L(jets.seeded(x, d1=xi0[None]), jets.seeded(y, d1=jXi[None]))
    div_xi = forms.divergence(xi.truncate(order + 1))
    lhs = dragged.channel("d1")[0] + dragged.drop_channels() * div_xi
    E = euler_lagrange(L, field, point, order)
    J = canonical_current(L, field, xi, Xi, point, order + 1)
    rhs = jets.prod("i,i->", XiV, E) + forms.divergence(J)
    return TwoPath(lhs, rhs)


# -- second variation and Jacobi morphism ----------------------------------------

def second_variation(L: Lagrangian, field: Jet, eta: Jet, point, order: int = 0) -> Jet:
    """``d^2/de^2 L(y + e eta)`` at ``e = 0`` via two channels seeded along eta."""
    r = L.order
    _need(field, order + r, "second_variation")
    eta = eta.truncate(field.order) if eta.order > field.order else eta
    f = jets.seeded(field.truncate(eta.order), d1=eta[None], d2=eta[None])
    out = L(coordinate_jets(point, order), section_slots(f, r, order))
    if out.d12 is None:  # at most linear in the fields
        return Jet.constant(np.zeros(out.shape), order)
    return out.channel("d12")[0, 0]


def jacobi_morphism(L: Lagrangian, field: Jet, eta: Jet, point, order: int = 0,
                    comps=None) -> Jet:
    """Linearized Euler-Lagrange expressions ``d/de E_i(y + e eta)``."""
    n = min(field.order, eta.order)
    _need(field, order + 2 * L.order, "jacobi_morphism")
    f = jets.seeded(field.truncate(n), d2=eta.truncate(n)[None])
    out = _seeded_output(L, f, point, order + L.order, comps)
    nslot = len(slot_indices(L.order))
    if out.d12 is None:
        ncomp = field.shape[0] if comps is None else len(list(comps))
        dgrad = Jet.constant(np.zeros((ncomp, nslot)), order + L.order)
    else:
        dgrad = out.channel("d12")[0].reshape(-1, nslot)
    return euler_from_gradient(dgrad, L.order, order)


@dataclass(frozen=True)
class Lattice:
    """Uniform periodic lattice; a direction with one point is collapsed,
    which requires the integrand not to depend on that coordinate."""

    dims: tuple[int, int, int, int]
    periods: tuple[float, float, float, float] = (2 * math.pi,) * 4
    origin: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def points(self) -> list[tuple[float, ...]]:
        axes = [
            [o + p * k / n for k in range(n)]
            for n, p, o in zip(self.dims, self.periods, self.origin)
        ]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)
        return [tuple(float(c) for c in row) for row in grid]

    @property
    def weight(self) -> float:
        return float(np.prod([p / n for n, p in zip(self.dims, self.periods)]))


class NonPeriodicPerturbation(ValueError):
    pass


def check_periodic(eta: Callable[[Sequence[float], int], Jet], lattice: Lattice,
                   probes: Sequence[Sequence[float]], tol: float = 1e-10) -> None:
    for p in probes:
        base = eta(p, 1)
        for mu in range(4):
            if lattice.dims[mu] == 1:
                if np.max(np.abs(base.partial(mu).value)) > tol:
                    raise NonPeriodicPerturbation(f"perturbation depends on collapsed x{mu}")
                continue
            q = list(p)
            q[mu] += lattice.periods[mu]
            if np.max(np.abs(eta(q, 0).value - base.value)) > tol:
                raise NonPeriodicPerturbation(f"perturbation is not periodic in x{mu}")


def quadratic_form(L: Lagrangian, field_fn, eta1, eta2, lattice: Lattice, rows=None) -> float:
    """``sum_lattice w eta1 . J(eta2)``; ``rows`` limits the components of J
    (those where eta1 can be nonzero)."""
    r = L.order
    parts = []
    for p in lattice.points():
        e2 = eta2(p, 2 * r)
        Jv = jacobi_morphism(L, field_fn(p, 2 * r), e2, p, 0, rows).value
        e1 = eta1(p, 0).value
        e1 = e1 if rows is None else e1[list(rows)]
        parts.append(float(np.dot(e1, Jv)))
    return math.fsum(parts) * lattice.weight


@dataclass(frozen=True)
class SelfAdjointness:
    q12: float
    q21: float

    @property
    def asymmetry(self) -> float:
        return abs(self.q12 - self.q21) / max(abs(self.q12), abs(self.q21), 1.0)


def self_adjointness_check(L: Lagrangian, field_fn, eta1, eta2, lattice: Lattice,
                           rows=None, probes=None) -> SelfAdjointness:
    """Asymmetry of the lattice quadratic form of the Jacobi morphism.

    ``field_fn(point, order)`` and ``eta*(point, order)`` return field jets.
    """
    probes = probes or lattice.points()[:2]
    for eta in (eta1, eta2):
        check_periodic(eta, lattice, probes)
    return SelfAdjointness(quadratic_form(L, field_fn, eta1, eta2, lattice, rows),
                           quadratic_form(L, field_fn, eta2, eta1, lattice, rows))


# -- field seeding -------------------------------------------------------------

def field_seeds(ncomp: int, order: int, channels: Sequence[tuple[int, tuple[int, ...]]]) -> Jet:
    """Directions ``(x - x0)^g / g!`` in component ``j`` for each ``(j, g)``."""
    idx = index_of(order)
    h = np.zeros((len(channels), ncomp, ncoef(order)))
    for n, (j, g) in enumerate(channels):
        h[n, j, idx[tuple(g)]] = 1.0 / jets.factorial(g)
    return Jet(h, order)


def euler_from_field_response(resp: np.ndarray, max_order: int) -> np.ndarray:
    """Euler-Lagrange values from field-seeded responses.

    ``resp[j, n]`` holds the Taylor coefficients (order ``max_order``) of the
    first-order response of a section functional ``F`` to the perturbation
    ``(x - x0)^g / g!`` of component ``j``, with ``g = multi_indices(max_order)[n]``.
    The response equals ``sum_{b <= g} c_b (x - x0)^(g-b) / (g-b)!`` where
    ``c_b = dF/dy_b``; the recursion recovers every ``c_b`` and returns
    ``E_j = sum_b (-1)^|b| b! c_b[b]``.
    """
    gammas = multi_indices(max_order)
    idx = index_of(max_order)
    ncomp = resp.shape[0]
    c = np.zeros_like(resp)
    for n, g in enumerate(gammas):
        cur = resp[:, n].copy()
        for m, b in enumerate(gammas[:n]):
            d = tuple(gi - bi for gi, bi in zip(g, b))
            if min(d) < 0:
                continue
            # subtract c_b times (x - x0)^d / d!
            w = 1.0 / jets.factorial(d)
            for k, kappa in enumerate(gammas):
                src = tuple(ki - di for ki, di in zip(kappa, d))
                if min(src) >= 0:
                    cur[:, k] -= w * c[:, m, idx[src]]
        c[:, n] = cur
    out = np.zeros(ncomp)
    for n, g in enumerate(gammas):
        out = out + (-1) ** sum(g) * jets.factorial(g) * c[:, n, idx[g]].real
    return out


def euler_by_field_seeding(functional: Callable[[Jet], Jet], field: Jet, max_order: int,
                           loss: int) -> np.ndarray:
    """Euler-Lagrange values of a section functional of order ``max_order``.

    ``functional(field)`` maps field jets of order ``N`` to a scalar x-jet of
    order ``N - loss``; the field must satisfy ``N - loss >= max_order``.
    """
    _need(field, max_order + loss, "field seeding")
    ncomp = field.shape[0]
    chans = [(j, g) for j in range(ncomp) for g in multi_indices(max_order)]
    h = field_seeds(ncomp, field.order, chans)
    out = functional(jets.seeded(field, d1=h)).channel("d1").truncate(max_order)
    resp = out.coeffs.reshape(ncomp, len(multi_indices(max_order)), -1)
    return euler_from_field_response(resp, max_order)


# -- Bergmann-Bianchi and naturality ---------------------------------------------

def _vertical_from_lift(lift: LiftFn, x: Jet, field: Jet) -> tuple[Jet, Jet]:
    xi, Xi = lift(x, field)
    return xi, vertical_part(field, xi, Xi)


@dataclass(frozen=True)
class BergmannBianchi:
    value: float
    inner_el: np.ndarray  # E_j of the inner density at the point
    xi_v: np.ndarray      # Xi_V^j at the point


def bergmann_bianchi_check(L: Lagrangian, field: Jet, lift: LiftFn, point,
                           chunk: int = 48, rows="auto",
                           vary_lift: bool = False) -> BergmannBianchi:
    """``Xi_V . E(Xi_V . E(L))`` at ``point`` for a first-order ``L``.

    By default ``Xi_V`` is a variation vector field: its values along the
    section are held fixed while the outer Euler-Lagrange operator varies the
    fields, so the inner ``E`` is the Jacobi morphism ``J(Xi_V)`` and the
    result is ``Xi_V . J(Xi_V)``.  With ``vary_lift=True`` the dependence of
    the lift on the fields is varied as well; for an invariant ``L`` the
    inner density is then a null Lagrangian and the result vanishes
    identically.

    The lift may depend on the fields through up to two derivatives; the
    field jets must have order 4.  The inner density ``w = Xi_V . E(L)``
    equals ``jXi_V . dL/dy - D_mu(Xi_V . dL/dy_mu)``; the divergence has no
    Euler-Lagrange part, so ``E(w)`` is extracted by field seeding from

        d_h w' = [(d_h Xi_V) . E] + d_h[jXi_V . dL/dy]

    with ``Xi_V`` frozen inside the second bracket (the first bracket only
    with ``vary_lift``).  The frozen prolongation needs
    ``Xi_V`` to order 3 but the lift only supplies order 2; the zero-padded
    top coefficients only reach response coefficients of order 2 of terms
    whose true coefficient functions ``c_b`` (``|b| = 2``) vanish, so the
    extracted values are exact.

    ``rows="auto"`` skips components where ``Xi_V`` vanishes at the point,
    since they cannot contribute to the contraction; skipped entries of
    ``inner_el`` are NaN.
    """
    if L.order != 1:
        raise NotImplementedError("implemented for first-order Lagrangians")
    _need(field, 4, "bergmann_bianchi_check")
    field = field.truncate(4)
    ncomp = field.shape[0]
    x4 = coordinate_jets(point, 4)
    x2 = coordinate_jets(point, 2)
    xi, XiV = _vertical_from_lift(lift, x4, field)
    _need(XiV, 2, "lift")
    XiV = XiV.truncate(2)
    xv = XiV.value.real
    if isinstance(rows, str):
        rows = [j for j in range(ncomp) if xv[j] != 0.0]
    rows = list(rows)
    E = euler_lagrange(L, field, point, 2) if vary_lift else None
    cols = [XiV] + [_fit(XiV.partial(mu), 2) for mu in range(4)]
    D = jets.stack(cols, axis=-1)[None]  # one frozen direction over all slots

    gam2 = multi_indices(2)
    chans = [(j, g) for j in rows for g in gam2]
    resp = np.zeros((len(chans), ncoef(2)))
    for start in range(0, len(chans), chunk):
        part = chans[start:start + chunk]
        fs = jets.seeded(field, d1=field_seeds(ncomp, 4, part))
        y = jets.seeded(section_slots(fs, 1, 2), d2=D)
        total = L(x2, y).channel("d12")[0]  # [chan]
        if vary_lift:
            _, XiVs = _vertical_from_lift(lift, x4, fs)
            dXi = _fit(XiVs.channel("d1"), 2)  # [chan, i]
            total = total + jets.prod("ni,i->n", dXi, E)
        resp[start:start + len(part)] = total.coeffs.real
    inner = np.full(ncomp, np.nan)
    if rows:
        inner[rows] = euler_from_field_response(resp.reshape(len(rows), len(gam2), -1), 2)
    value = float(sum(xv[j] * inner[j] for j in rows))
    return BergmannBianchi(value, inner, xv)


def inner_lie_density(L: Lagrangian, field: Jet, lift: LiftFn, point, order: int) -> Jet:
    """``mu = L_{jXi_V} L`` along the section, as an x-jet of ``order``."""
    x = coordinate_jets(point, field.order)
    _, XiV = _vertical_from_lift(lift, x, field)
    _need(XiV, order + L.order, "inner_lie_density")
    n = order + L.order
    f = jets.seeded(field.truncate(n), d1=XiV.truncate(n)[None])
    out = L(coordinate_jets(point, order), section_slots(f, L.order, order))
    return out.channel("d1")[0]


def naturality_check(L: Lagrangian, field: Jet, lift: LiftFn, point) -> float:
    """``D_g(xi^g mu)`` at the point with ``mu = L_{jXi_V} L``."""
    mu = inner_lie_density(L, field, lift, point, 1)
    xi, _ = lift(coordinate_jets(point, field.order), field)
    flux = jets.prod("g,->g", xi.truncate(1), mu)
    return float(forms.divergence(flux).value)
