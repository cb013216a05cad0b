"""Horizontal forms on the chart as fully antisymmetric component jets.

A p-form is stored by its components ``w[..., m1, ..., mp]`` (the last p tensor
axes), with ``w = (1/p!) w_{m1..mp} dx^m1 ^ ... ^ dx^mp``.  Leading tensor axes
are batch axes (internal indices and the like).
"""

from __future__ import annotations

from itertools import permutations
from math import factorial

from . import jets
from .jets import Jet

LC = jets.levi_civita()


def _perm_sign(p) -> int:
    inv = sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])
    return -1 if inv % 2 else 1


def _move_last(jet: Jet, p: int, perm) -> Jet:
    lead = jet.ndim - p
    return jet.transpose(*range(lead), *(lead + q for q in perm))


def d(w: Jet, p: int) -> Jet:
    """Exterior derivative of a p-form: ``(dw)_{m0..mp} = sum_k (-1)^k d_mk w_{..^mk..}``."""
    g = w.grad()  # last axis is the derivative index
    lead = w.ndim - p
    out = None
    for k in range(p + 1):
        # target axis order (m0..mp): slot k comes from the derivative axis
        src = [q for q in range(p + 1) if q != k]
        # g has axes (lead..., m_src[0], ..., m_src[p-1], m_k)
        order = [0] * (p + 1)
        for pos, q in enumerate(src):
            order[q] = pos
        order[k] = p
        term = g.transpose(*range(lead), *(lead + o for o in order))
        term = term if k % 2 == 0 else -term
        out = term if out is None else out + term
    return out


def wedge(a: Jet, p: int, b: Jet, q: int, spec: str = "") -> Jet:
    """Wedge product of a p-form and a q-form sharing leading batch axes.

    ``spec`` contracts leading batch axes, e.g. ``"ac,cb->ab"``; default is
    elementwise over identical leading axes.
    """
    r = p + q
    letters = "mnopqrst"
    fa, fb = letters[:p], letters[p:r]
    if spec:
        ins, out = spec.split("->")
        la, lb = ins.split(",")
    else:
        la = lb = out = "abcdefghijkl"[: a.ndim - p]
    raw = jets.prod(f"{la}{fa},{lb}{fb}->{out}{fa}{fb}", a, b)
    lead = raw.ndim - r
    acc = None
    for perm in permutations(range(r)):
        # antisymmetrize and divide by p! q!
        term = raw.transpose(*range(lead), *(lead + x for x in perm))
        term = term * float(_perm_sign(perm))
        acc = term if acc is None else acc + term
    return acc * (1.0 / (factorial(p) * factorial(q)))


def dual3(j: Jet) -> Jet:
    """``J^m = (1/3!) eps^{m n r s} j_{n r s}`` for a 3-form (last three axes)."""
    lead = "abcd"[: j.ndim - 3]
    return jets.contract(f"{lead}nrs,mnrs->{lead}m", j, LC / 6.0)


def dual2(b: Jet) -> Jet:
    """``B^{m n} = (1/2) eps^{m n r s} b_{r s}``."""
    lead = "abcd"[: b.ndim - 2]
    return jets.contract(f"{lead}rs,mnrs->{lead}mn", b, LC / 2.0)


def top(w: Jet) -> Jet:
    """Coefficient of ``dx^0 ^ dx^1 ^ dx^2 ^ dx^3`` of a 4-form."""
    lead = "abcd"[: w.ndim - 4]
    return jets.contract(f"{lead}mnrs,mnrs->{lead}", w, LC / 24.0)


def from_dual3(J: Jet) -> Jet:
    """3-form ``J^m d_m _| vol`` from its dual coefficients."""
    lead = "abcd"[: J.ndim - 1]
    return jets.contract(f"{lead}m,mnrs->{lead}nrs", J, LC)


def divergence(J: Jet) -> Jet:
    """``d_m J^m`` (the coefficient of d of the dual 3-form)."""
    return sum((J[..., mu].partial(mu) for mu in range(1, 4)), J[..., 0].partial(0))
