"""Verification suites run by the command line tool.

Each suite evaluates named residuals at the sampled points (or, for the
clifford and jacobi-selfadjoint suites, at sampled algebra pairs and
perturbation pairs) and compares them to one tolerance class.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import forms
from .clifford import ETA, anticommutator, build_gamma, so_bracket, so_from_planes, so_to_spin
from .fieldlang import coordinate_jets, field_jets, parse_expression
from .geometry import PSI, evaluate_geometry, volume_forms
from .lifts import vertical_part_relation_check
from .noether import conservation_check, lagrangians, noether_identity_suite
from .sampling import SplitMix64, box_points
from .scenario import SUITES, Scenario
from .variational import Lattice, naturality_check, self_adjointness_check, \
    variational_lie_derivative

SUITE_INFO = {
    "geometry-sanity": ("exact", "tetrad inverse, metric, curvature antisymmetry, d(d eps_ab) = 0"),
    "clifford": ("exact", "gamma anticommutators and the so(1,3) -> spin homomorphism"),
    "theorem1": ("two_path", "first variation formula: drag of lambda vs Xi_V.E + d_H J"),
    "oh-oh": ("two_path", "vertical part of the lift equals minus the Lie derivative"),
    "conservation": ("two_path", "d_H J = 0, d_H d_H nu = 0, exact term = d_H nu"),
    "noether-identity": ("two_path", "Bergmann-Bianchi contraction Xi_V.J(Xi_V)"),
    "jacobi-selfadjoint": ("lattice", "lattice quadratic form of the Jacobi morphism is symmetric"),
    "naturality": ("two_path", "horizontal drag of L_{jXi_V} lambda vanishes"),
}

U_NOTE = ("u_ab^c is read from the connection rows of the Dirac Euler-Lagrange form; "
          "the current breakdown is checked against the canonical current")


@dataclass
class PointResult:
    index: int
    point: tuple[float, ...]
    residuals: dict[str, float]
    info: dict[str, float] = field(default_factory=dict)
    passed: bool = True


@dataclass
class SuiteResult:
    name: str
    tolerance_class: str
    tolerance: float
    points: list[PointResult]
    error: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.error is None and all(p.passed for p in self.points)

    @property
    def max_residual(self) -> float | None:
        vals = [v for p in self.points for v in p.residuals.values()]
        return max(vals) if vals else None

    def first_failure(self) -> dict | None:
        for p in self.points:
            if not p.passed:
                q, r = max(p.residuals.items(), key=lambda kv: kv[1])
                return {"index": p.index, "point": list(p.point), "quantity": q, "residual": r}
        return None


def thread_count() -> int:
    env = os.environ.get("GNVAR_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _maxabs(x) -> float:
    return float(np.max(np.abs(np.asarray(x)))) if np.size(x) else 0.0


# -- per-point suites -------------------------------------------------------------

def _geometry(sc: Scenario, p, order: int):
    geom = evaluate_geometry(sc.config, p, max(order, 2))
    th, e, g = geom.theta.value, geom.e.value, geom.g.value
    R = geom.curvature.value
    eab = volume_forms(geom)[2]
    dd = forms.d(forms.d(eab, 2), 3)
    res = {
        "tetrad_inverse": _maxabs(th @ e.T - np.eye(4)),
        "metric_symmetry": _maxabs(g - g.T),
        "metric_frame": _maxabs(e @ g @ e.T - ETA),
        "curvature_internal": _maxabs(R + R.transpose(1, 0, 2, 3)),
        "curvature_world": _maxabs(R + R.transpose(0, 1, 3, 2)),
        "dd_eps_ab": _maxabs(dd.coeffs),
    }
    return res, {"det": float(np.real(geom.det.value))}


def _theorem1(sc: Scenario, p, order: int):
    _, _, LT = lagrangians(sc.config)
    F = sc.config.field_jets(p, 4)
    xi, Xi = sc.automorphism.lift_fn()(coordinate_jets(p, 4), F)
    tp = variational_lie_derivative(LT, F, xi, Xi, p, min(order, 1))
    return {"two_path": tp.residual}, {}


def _ohoh(sc: Scenario, p, order: int):
    F = sc.config.field_jets(p, min(order + 2, 4))
    rel = vertical_part_relation_check(sc.automorphism, F, p)
    return {"xi_v_plus_lie": rel.residual, "spinor_split": rel.split_residual}, {}


def _conservation(sc: Scenario, p, order: int):
    c = conservation_check(sc.config, sc.automorphism, p)
    res = {"divergence": c.divergence, "double_exact": c.double_exact,
           "exact_two_path": c.exact_two_path, "bookkeeping": c.bookkeeping}
    info = {"on_shell": c.on_shell, "J0": c.j0}
    return res, info


def _noether_identity(sc: Scenario, p, order: int):
    r = noether_identity_suite(sc.config, sc.automorphism, [p], with_identity=True)[0]
    return {"bergmann_bianchi": r.bergmann_bianchi, "lift_varied": r.noether_identity}, {}


def _naturality(sc: Scenario, p, order: int):
    _, _, LT = lagrangians(sc.config)
    F = sc.config.field_jets(p, 4)
    return {"naturality": abs(naturality_check(LT, F, sc.automorphism.lift_fn(), p))}, {}


POINT_SUITES = {
    "geometry-sanity": _geometry, "theorem1": _theorem1, "oh-oh": _ohoh,
    "conservation": _conservation, "noether-identity": _noether_identity,
    "naturality": _naturality,
}


# -- pair suites ------------------------------------------------------------------

def clifford_residuals(rng: SplitMix64, count: int) -> list[tuple[tuple[float, ...], dict]]:
    g = build_gamma()
    acomm = max(_maxabs(anticommutator(g.gammas[a], g.gammas[b]) - 2 * g.eta[a, b] * np.eye(4))
                for a in range(4) for b in range(4))
    out = []
    for _ in range(count):
        pa = [rng.uniform(-1, 1) for _ in range(6)]
        pb = [rng.uniform(-1, 1) for _ in range(6)]
        A, B = so_from_planes(pa), so_from_planes(pb)
        sa, sb = so_to_spin(A, g), so_to_spin(B, g)
        hom = _maxabs(sa @ sb - sb @ sa - so_to_spin(so_bracket(A, B), g))
        out.append((tuple(pa + pb), {"anticommutator": acomm, "homomorphism": hom}))
    return out


def periodic_perturbation(rng: SplitMix64, spec, comps: Sequence[int], ncomp: int = 48,
                          modes: int = 2, scale: float = 0.3) -> list[str]:
    """Random trigonometric polynomial per component in ``comps``, periodic on
    the lattice and independent of its collapsed directions."""
    exprs = ["0"] * ncomp
    live = [mu for mu in range(4) if spec.dims[mu] > 1]
    for c in comps:
        terms = []
        for mu in live:
            w = 2 * math.pi / spec.periods[mu]
            for n in range(1, modes + 1):
                a, b = rng.uniform(-scale, scale), rng.uniform(-scale, scale)
                terms.append(f"{a:.6f}*cos({n * w:.15g}*x{mu})")
                terms.append(f"{b:.6f}*sin({n * w:.15g}*x{mu})")
        terms.append(f"{rng.uniform(-scale, scale):.6f}")
        exprs[c] = " + ".join(terms).replace("+ -", "- ")
    return exprs


def jacobi_residuals(sc: Scenario, rng: SplitMix64, threads: int):
    spec = sc.lattice
    lattice = Lattice(spec.dims, spec.periods, spec.origin)
    comps = list(range(PSI.start, PSI.stop)) if spec.components == "psi" else list(range(48))
    _, _, LT = lagrangians(sc.config)
    cfg = sc.config

    def field_fn(p, order):
        return cfg.field_jets(p, order)

    def make(exprs):
        parsed = [parse_expression(s) for s in exprs]
        return lambda p, order: field_jets(parsed, p, order)

    pairs = [(periodic_perturbation(rng, spec, comps), periodic_perturbation(rng, spec, comps))
             for _ in range(spec.pairs)]

    def one(pair):
        e1, e2 = make(pair[0]), make(pair[1])
        sa = self_adjointness_check(LT, field_fn, e1, e2, lattice, rows=comps)
        return {"asymmetry": sa.asymmetry}, {"q12": sa.q12, "q21": sa.q21}

    return [(tuple(spec.origin), *one(pr)) for pr in pairs]


# -- driver -----------------------------------------------------------------------

def sample_points(sc: Scenario, count: int | None = None, seed: int | None = None):
    rng = SplitMix64(sc.sampling.seed if seed is None else seed)
    n = sc.sampling.points if count is None else count
    return box_points(rng, sc.sampling.lo, sc.sampling.hi, n)


def run_suite(name: str, sc: Scenario, points, order: int, seed: int,
              threads: int | None = None) -> SuiteResult:
    cls, _ = SUITE_INFO[name]
    tol = sc.tolerances[cls]
    threads = thread_count() if threads is None else threads
    result = SuiteResult(name, cls, tol, [])
    if name in ("conservation", "noether-identity"):
        result.notes.append(U_NOTE)
    try:
        if name in POINT_SUITES:
            fn = POINT_SUITES[name]
            rows = _map(lambda p: (p, *fn(sc, p, order)), list(points), threads)
        elif name == "clifford":
            rng = SplitMix64(seed ^ 0xC11F)
            rows = [(pp, r, {}) for pp, r in clifford_residuals(rng, len(points))]
        else:
            rng = SplitMix64(seed ^ 0x7AC0)
            rows = jacobi_residuals(sc, rng, threads)
            result.notes.append(
                f"lattice dims {list(sc.lattice.dims)}, perturbed components "
                f"{sc.lattice.components}")
    except Exception as err:  # recorded, the run continues
        result.error = f"{type(err).__name__}: {err}"
        return result
    for i, (p, res, info) in enumerate(rows):
        res = {k: float(v) for k, v in res.items() if v is not None}
        ok = all(math.isfinite(v) and v <= tol for v in res.values())
        result.points.append(PointResult(i, tuple(float(c) for c in p), res,
                                         {k: float(v) for k, v in info.items()}, ok))
    return result


__all__ = ["SUITE_INFO", "SUITES", "PointResult", "SuiteResult", "run_suite", "sample_points",
           "thread_count", "clifford_residuals", "periodic_perturbation"]
