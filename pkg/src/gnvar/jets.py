"""Truncated multivariate Taylor arithmetic over the four chart coordinates.

A :class:`Jet` stores Taylor-normalized coefficients (``d^a f / a!``) for all
multi-indices ``a`` with ``|a| <= order`` over ``x0..x3``, in graded
lexicographic order.  A jet may carry a tensor of such series (shape
``jet.shape``) and up to two groups of first-order perturbation channels::

    f = v + sum_k eps_k d1[k] + sum_j del_j d2[j] + sum_jk del_j eps_k d12[j, k]

with ``eps_k**2 = del_j**2 = eps_k eps_l = 0``.  Channel coefficients are
themselves x-jets, so a single evaluation yields partial derivatives with
respect to seeded quantities *as functions of the base point*.

Internally every part is stored with two leading channel axes
``(N2, N1, *shape, P)`` (size 1 when the channel group is absent), so numpy
broadcasting does the channel bookkeeping.
"""

from __future__ import annotations

import functools
import math
from itertools import permutations, product
from typing import Callable, Sequence

import numpy as np

NVARS = 4
MAX_ORDER = 6

_LETTERS = "abcdefghijklmnopqrstuvwxy"


class JetOrderError(ValueError):
    """Raised when jets of different orders meet or an order is insufficient."""


@functools.lru_cache(maxsize=None)
def multi_indices(order: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices with ``|a| <= order``, graded then lex-descending."""
    if not 0 <= order <= MAX_ORDER:
        raise JetOrderError(f"jet order {order} outside [0, {MAX_ORDER}]")
    out = []
    for deg in range(order + 1):
        level = [a for a in product(range(deg + 1), repeat=NVARS) if sum(a) == deg]
        level.sort(reverse=True)
        out.extend(level)
    return tuple(out)


@functools.lru_cache(maxsize=None)
def index_of(order: int) -> dict[tuple[int, ...], int]:
    return {a: i for i, a in enumerate(multi_indices(order))}


def ncoef(order: int) -> int:
    return math.comb(order + NVARS, NVARS)


def factorial(alpha: Sequence[int]) -> int:
    return math.prod(math.factorial(k) for k in alpha)


@functools.lru_cache(maxsize=None)
def _tables(order: int):
    alphas = multi_indices(order)
    idx = index_of(order)
    I, J, K = [], [], []
    for i, a in enumerate(alphas):
        for j, b in enumerate(alphas):
            c = tuple(x + y for x, y in zip(a, b))
            k = idx.get(c)
            if k is not None:
                I.append(i)
                J.append(j)
                K.append(k)
    scatter = np.zeros((len(K), len(alphas)))
    scatter[np.arange(len(K)), K] = 1.0
    degree = np.array([sum(a) for a in alphas])
    return np.array(I), np.array(J), scatter, degree


@functools.lru_cache(maxsize=None)
def _shift_table(order: int, mu: int):
    """Source indices and weights for d/dx^mu: order -> order - 1."""
    src = index_of(order)
    dst = multi_indices(order - 1)
    pos = np.empty(len(dst), dtype=int)
    weight = np.empty(len(dst))
    for n, b in enumerate(dst):
        up = list(b)
        up[mu] += 1
        pos[n] = src[tuple(up)]
        weight[n] = up[mu]
    return pos, weight


@functools.lru_cache(maxsize=None)
def _truncate_table(order: int, new_order: int):
    src = index_of(order)
    return np.array([src[a] for a in multi_indices(new_order)])


@functools.lru_cache(maxsize=None)
def _matmul_plan(spec: str):
    """Split an einsum spec into batch, free and contracted letters, or None
    when the spec needs einsum (repeated or summed-out letters)."""
    ins, out = spec.split("->")
    sa, sb = ins.split(",")
    if len(set(sa)) != len(sa) or len(set(sb)) != len(sb) or len(set(out)) != len(out):
        return None
    if any(c not in sb and c not in out for c in sa) or any(c not in sa and c not in out for c in sb):
        return None
    batch = [c for c in out if c in sa and c in sb]
    fa = [c for c in out if c in sa and c not in sb]
    fb = [c for c in out if c in sb and c not in sa]
    con = [c for c in sa if c in sb and c not in out]
    return sa, sb, out, batch, fa, fb, con


def _conv(spec: str, x: np.ndarray, y: np.ndarray, order: int) -> np.ndarray:
    """Truncated Taylor product of two raw part arrays under an einsum spec.

    Parts carry two leading channel axes, so the product is lowered to one
    broadcast ``matmul`` over (channels, pair, batch) with the free and
    contracted letters flattened; this reaches BLAS where einsum with an
    ellipsis does not.
    """
    I, J, scatter, _ = _tables(order)
    plan = _matmul_plan(spec)
    if plan is None:
        ins, out = spec.split("->")
        sa, sb = ins.split(",")
        z = np.einsum(f"...{sa}z,...{sb}z->...{out}z", x[..., I], y[..., J], optimize=True)
        return z @ scatter
    sa, sb, out, batch, fa, fb, con = plan
    dims = dict(zip(sa, x.shape[2:-1]))
    dims.update(zip(sb, y.shape[2:-1]))
    xa = x[..., I].transpose([0, 1, x.ndim - 1] + [2 + sa.index(c) for c in batch + fa + con])
    yb = y[..., J].transpose([0, 1, y.ndim - 1] + [2 + sb.index(c) for c in batch + con + fb])
    nb = tuple(dims[c] for c in batch)
    nfa = math.prod(dims[c] for c in fa)
    nfb = math.prod(dims[c] for c in fb)
    nc = math.prod(dims[c] for c in con)
    z = xa.reshape(xa.shape[:3] + nb + (nfa, nc)) @ yb.reshape(yb.shape[:3] + nb + (nc, nfb))
    z = z.reshape(z.shape[:3 + len(nb)] + tuple(dims[c] for c in fa + fb))
    cur = batch + fa + fb
    z = z.transpose([0, 1] + [3 + cur.index(c) for c in out] + [2])
    return z @ scatter


def _add(p, q):
    if p is None:
        return q
    if q is None:
        return p
    return p + q


def _lead(arr: np.ndarray, tshape_ndim: int, kind: str) -> np.ndarray:
    """Reshape a user-supplied part to the internal two-leading-axes layout."""
    arr = np.asarray(arr)
    if kind == "v":
        return arr.reshape((1, 1) + arr.shape)
    if kind == "d1":
        return arr.reshape((1,) + arr.shape)
    if kind == "d2":
        return arr.reshape((arr.shape[0], 1) + arr.shape[1:])
    return arr


class Jet:
    """Tensor of truncated Taylor series with optional perturbation channels."""

    __slots__ = ("v", "d1", "d2", "d12", "order")
    __array_priority__ = 1000

    def __init__(self, v, order, d1=None, d2=None, d12=None, *, raw=False):
        self.order = int(order)
        if raw:
            self.v, self.d1, self.d2, self.d12 = v, d1, d2, d12
        else:
            v = np.asarray(v)
            nd = v.ndim - 1
            self.v = _lead(v, nd, "v")
            self.d1 = None if d1 is None else _lead(d1, nd, "d1")
            self.d2 = None if d2 is None else _lead(d2, nd, "d2")
            self.d12 = None if d12 is None else np.asarray(d12)
        if self.v.shape[-1] != ncoef(self.order):
            raise JetOrderError(
                f"coefficient axis has {self.v.shape[-1]} entries, expected "
                f"{ncoef(self.order)} for order {self.order}"
            )

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, order: int) -> "Jet":
        value = np.asarray(value)
        v = np.zeros(value.shape + (ncoef(order),), dtype=np.result_type(value, float))
        v[..., 0] = value
        return cls(v, order)

    @classmethod
    def variable(cls, mu: int, point: Sequence[float], order: int) -> "Jet":
        """The coordinate function ``x^mu`` expanded at ``point``."""
        if mu not in range(NVARS):
            raise ValueError(f"variable index {mu} outside 0..3")
        v = np.zeros(ncoef(order))
        v[0] = point[mu]
        if order >= 1:
            e = [0] * NVARS
            e[mu] = 1
            v[index_of(order)[tuple(e)]] = 1.0
        return cls(v, order)

    def _wrap(self, v, d1=None, d2=None, d12=None, order=None) -> "Jet":
        return Jet(v, self.order if order is None else order, d1, d2, d12, raw=True)

    def _parts(self):
        return self.v, self.d1, self.d2, self.d12

    def _map(self, fn: Callable[[np.ndarray], np.ndarray], order=None) -> "Jet":
        return self._wrap(*(None if p is None else fn(p) for p in self._parts()), order=order)

    # -- introspection ------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.v.shape[2:-1]

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def has_channels(self) -> bool:
        return self.d1 is not None or self.d2 is not None or self.d12 is not None

    @property
    def coeffs(self) -> np.ndarray:
        """Taylor coefficients of the unperturbed part, shape ``(*shape, P)``."""
        return self.v[0, 0]

    @property
    def value(self) -> np.ndarray:
        return self.v[0, 0, ..., 0]

    def taylor(self, alpha: Sequence[int]) -> np.ndarray:
        return self.coeffs[..., index_of(self.order)[tuple(alpha)]]

    def derivative(self, alpha: Sequence[int]) -> np.ndarray:
        """Raw partial derivative ``d^alpha f`` at the base point."""
        return self.taylor(alpha) * factorial(alpha)

    def channel(self, name: str) -> Jet:
        """Extract a channel part as a plain (channel-free) jet with the
        channel axes leading the tensor shape."""
        part = getattr(self, name)
        if part is None:
            zshape = {"d1": (0,), "d2": (0,), "d12": (0, 0)}[name]
            return Jet(np.zeros(zshape + self.shape + (ncoef(self.order),)), self.order)
        if name == "d1":
            part = part[0]
        elif name == "d2":
            part = part[:, 0]
        return Jet(part, self.order)

    def drop_channels(self) -> Jet:
        return self._wrap(self.v)

    def __repr__(self) -> str:
        ch = "".join(f"+{n}" for n in ("d1", "d2", "d12") if getattr(self, n) is not None)
        return f"Jet(order={self.order}, shape={self.shape}{ch})"

    # -- indexing -----------------------------------------------------------
    def __getitem__(self, key) -> Jet:
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            at = next(i for i, k in enumerate(key) if k is Ellipsis)
            rest = [k for k in key if k is not Ellipsis and k is not None]
            key = key[:at] + (slice(None),) * (self.ndim - len(rest)) + key[at + 1:]
        full = (slice(None), slice(None)) + key + (slice(None),)
        return self._map(lambda p: p[full])

    def reshape(self, *shape) -> Jet:
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return self._map(lambda p: p.reshape(p.shape[:2] + tuple(shape) + p.shape[-1:]))

    def transpose(self, *axes) -> Jet:
        n = self.ndim
        axes = axes or tuple(reversed(range(n)))
        perm = (0, 1) + tuple(a + 2 for a in axes) + (n + 2,)
        return self._map(lambda p: np.transpose(p, perm))

    def sum(self, axis=None) -> Jet:
        if axis is None:
            axis = tuple(range(self.ndim))
        elif isinstance(axis, int):
            axis = (axis,)
        ax = tuple((a % self.ndim) + 2 for a in axis)
        return self._map(lambda p: p.sum(axis=ax))

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: Jet) -> None:
        if other.order != self.order:
            raise JetOrderError(f"jet order mismatch: {self.order} vs {other.order}")

    def _coerce(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return other
        return Jet.constant(other, self.order)

    def __add__(self, other) -> Jet:
        o = self._coerce(other)
        return self._wrap(self.v + o.v, _add(self.d1, o.d1), _add(self.d2, o.d2), _add(self.d12, o.d12))

    __radd__ = __add__

    def __neg__(self) -> Jet:
        return self._map(np.negative)

    def __sub__(self, other) -> Jet:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> Jet:
        return self._coerce(other) - self

    def __mul__(self, other) -> Jet:
        if isinstance(other, Jet):
            self._check(other)
            if self.ndim == other.ndim:
                s = _LETTERS[: self.ndim]
                return prod(f"{s},{s}->{s}", self, other)
            if other.ndim == 0:
                s = _LETTERS[: self.ndim]
                return prod(f"{s},->{s}", self, other)
            if self.ndim == 0:
                s = _LETTERS[: other.ndim]
                return prod(f",{s}->{s}", self, other)
            raise ValueError(f"cannot multiply jets of shapes {self.shape} and {other.shape}")
        c = np.asarray(other)
        if c.ndim == 0:
            return self._map(lambda p: p * c)
        return self._map(lambda p: p * c[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other) -> Jet:
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self * (1.0 / np.asarray(other))

    def __rtruediv__(self, other) -> Jet:
        return reciprocal(self) * other

    def __pow__(self, n: int) -> Jet:
        if int(n) != n:
            raise ValueError("jet powers take integer exponents only")
        n = int(n)
        if n < 0:
            return reciprocal(self) ** (-n)
        result = Jet.constant(np.ones(self.shape), self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def conj(self) -> Jet:
        return self._map(np.conj)

    @property
    def real(self) -> Jet:
        return self._map(np.real)

    @property
    def imag(self) -> Jet:
        return self._map(np.imag)

    # -- calculus -----------------------------------------------------------
    def partial(self, mu: int) -> Jet:
        """Derivative along ``x^mu``; the result has one lower order."""
        if self.order < 1:
            raise JetOrderError("cannot differentiate an order-0 jet")
        pos, w = _shift_table(self.order, mu)
        return self._map(lambda p: p[..., pos] * w, order=self.order - 1)

    def grad(self) -> Jet:
        """Stack of the four partials along a new trailing tensor axis."""
        return stack([self.partial(mu) for mu in range(NVARS)], axis=-1)

    def pad(self, order: int) -> Jet:
        """Embed into a higher order with zero top coefficients.

        Only valid where the caller knows the missing coefficients cannot
        reach the quantities it reads.
        """
        if order < self.order:
            raise JetOrderError(f"cannot pad jet order {self.order} down to {order}")
        sel = _truncate_table(order, self.order)

        def grow(p):
            out = np.zeros(p.shape[:-1] + (ncoef(order),), dtype=p.dtype)
            out[..., sel] = p
            return out

        return self._map(grow, order=order)

    def truncate(self, order: int) -> Jet:
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        sel = _truncate_table(self.order, order)
        return self._map(lambda p: p[..., sel], order=order)


# -- products and linear maps ---------------------------------------------------

def prod(spec: str, a: Jet, b: Jet) -> Jet:
    """Einsum-style product over tensor axes with Taylor convolution.

    ``spec`` uses lowercase letters for tensor axes only, e.g. ``"ab,bc->ac"``.
    """
    a._check(b)
    s = a.order

    def P(x, y):
        if x is None or y is None:
            return None
        return _conv(spec, x, y, s)

    v = P(a.v, b.v)
    d1 = _add(P(a.v, b.d1), P(a.d1, b.v))
    d2 = _add(P(a.v, b.d2), P(a.d2, b.v))
    d12 = _add(_add(P(a.v, b.d12), P(a.d12, b.v)), _add(P(a.d1, b.d2), P(a.d2, b.d1)))
    return Jet(v, s, d1, d2, d12, raw=True)


def contract(spec: str, a: Jet, c) -> Jet:
    """Contract a jet with a constant array: ``spec`` like ``"ab,bc->ac"``."""
    ins, out = spec.split("->")
    sa, sc = ins.split(",")
    c = np.asarray(c)
    return a._map(lambda p: np.einsum(f"...{sa}z,{sc}->...{out}z", p, c, optimize=True))


def stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    order = jets[0].order
    for j in jets:
        if j.order != order:
            raise JetOrderError("cannot stack jets of different orders")
    ax = (axis % (jets[0].ndim + 1)) + 2
    parts = []
    for name in ("v", "d1", "d2", "d12"):
        ps = [getattr(j, name) for j in jets]
        present = [p for p in ps if p is not None]
        if not present:
            parts.append(None)
            continue
        lead = np.broadcast_shapes(*(p.shape[:2] for p in present))
        dtype = np.result_type(*present)
        filled = [
            np.zeros(lead + j.v.shape[2:], dtype=dtype) if p is None
            else np.broadcast_to(p, lead + p.shape[2:])
            for j, p in zip(jets, ps)
        ]
        parts.append(np.stack(filled, axis=ax))
    return Jet(parts[0], order, *parts[1:], raw=True)


def seeded(base: Jet, d1: Jet | None = None, d2: Jet | None = None) -> Jet:
    """Attach perturbation channels to a jet.

    ``d1`` / ``d2`` are plain jets of shape ``(N, *base.shape)`` holding one
    direction per leading entry; they become the first / second channel group.
    """
    if (d1 is not None and base.d1 is not None) or (d2 is not None and base.d2 is not None) \
            or base.d12 is not None:
        raise ValueError("channel group already in use")
    for c in (d1, d2):
        if c is not None:
            base._check(c)
            if c.shape[1:] != base.shape:
                raise ValueError(f"direction shape {c.shape[1:]} does not match {base.shape}")
    p1 = base.d1 if d1 is None else d1.v[0, 0][None]
    p2 = base.d2 if d2 is None else d2.v[0, 0][:, None]
    return Jet(base.v, base.order, p1, p2, None, raw=True)


def concat(parts: Sequence[Jet], axis: int = 0) -> Jet:
    """Concatenate jets along an existing tensor axis."""
    order = parts[0].order
    for j in parts:
        if j.order != order:
            raise JetOrderError("cannot concatenate jets of different orders")
    ax = (axis % parts[0].ndim) + 2
    out = []
    for name in ("v", "d1", "d2", "d12"):
        ps = [getattr(j, name) for j in parts]
        present = [p for p in ps if p is not None]
        if not present:
            out.append(None)
            continue
        lead = np.broadcast_shapes(*(p.shape[:2] for p in present))
        dtype = np.result_type(*present)
        filled = [
            np.zeros(lead + j.v.shape[2:], dtype=dtype) if p is None
            else np.broadcast_to(p, lead + p.shape[2:])
            for j, p in zip(parts, ps)
        ]
        out.append(np.concatenate(filled, axis=ax))
    return Jet(out[0], order, *out[1:], raw=True)


def zeros(shape: tuple[int, ...], order: int, dtype=float) -> Jet:
    return Jet(np.zeros(tuple(shape) + (ncoef(order),), dtype=dtype), order)


# -- nonlinear functions via nilpotent expansion ------------------------------

def _nil_depth(a: Jet) -> int:
    """Largest power of the nilpotent remainder that can be nonzero."""
    return a.order + (a.d1 is not None or a.d12 is not None) + (a.d2 is not None or a.d12 is not None)


def _series(a: Jet, derivs: Callable[[np.ndarray, int], list[np.ndarray]]) -> Jet:
    """``f(a) = sum_k f^(k)(a0) n^k / k!`` with ``n = a - a0`` nilpotent."""
    a0 = a.value
    K = _nil_depth(a)
    ds = derivs(a0, K)
    n = a - Jet.constant(a0, a.order)
    out = Jet.constant(ds[0], a.order)
    power = None
    for k in range(1, K + 1):
        power = n if power is None else power * n
        out = out + power * (ds[k] / math.factorial(k))
    return out


def _exp_derivs(x, K):
    e = np.exp(x)
    return [e] * (K + 1)


def _sin_derivs(x, K):
    cyc = [np.sin(x), np.cos(x), -np.sin(x), -np.cos(x)]
    return [cyc[k % 4] for k in range(K + 1)]


def _cos_derivs(x, K):
    cyc = [np.cos(x), -np.sin(x), -np.cos(x), np.sin(x)]
    return [cyc[k % 4] for k in range(K + 1)]


def _recip_derivs(x, K):
    return [(-1) ** k * math.factorial(k) / x ** (k + 1) for k in range(K + 1)]


def exp(a: Jet) -> Jet:
    return _series(a, _exp_derivs)


def sin(a: Jet) -> Jet:
    return _series(a, _sin_derivs)


def cos(a: Jet) -> Jet:
    return _series(a, _cos_derivs)


def reciprocal(a: Jet) -> Jet:
    if np.any(a.value == 0):
        raise ZeroDivisionError("division by a jet whose value part is zero")
    return _series(a, _recip_derivs)


UNARY = {"sin": sin, "cos": cos, "exp": exp}


def inv(a: Jet) -> Jet:
    """Matrix inverse of a jet-valued square matrix (last two tensor axes)."""
    a0 = a.value
    try:
        inv0 = np.linalg.inv(a0)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular matrix at the base point") from exc
    if not np.all(np.isfinite(inv0)) or abs(np.linalg.det(a0)) < 1e-300:
        raise np.linalg.LinAlgError("singular matrix at the base point")
    n = a - Jet.constant(a0, a.order)
    c0 = Jet.constant(inv0, a.order)
    step = -prod("ab,bc->ac", c0, n)
    out = c0
    term = c0
    for _ in range(_nil_depth(a)):
        term = prod("ab,bc->ac", step, term)
        out = out + term
    return out


_EPS4 = np.zeros((4, 4, 4, 4))
for _p in permutations(range(4)):
    _inv = sum(1 for i in range(4) for j in range(i + 1, 4) if _p[i] > _p[j])
    _EPS4[_p] = -1.0 if _inv % 2 else 1.0


def levi_civita() -> np.ndarray:
    """Permutation symbol with eps[0,1,2,3] = +1."""
    return _EPS4.copy()


def det4(a: Jet) -> Jet:
    """Determinant of a 4x4 jet matrix by the Levi-Civita sum over rows.

    ``det = eps_{abcd} a[a,0] a[b,1] a[c,2] a[d,3]``.
    """
    t = prod("a,b->ab", a[:, 0], a[:, 1])
    t = prod("ab,c->abc", t, a[:, 2])
    t = prod("abc,d->abcd", t, a[:, 3])
    return contract("abcd,abcd->", t, _EPS4)
