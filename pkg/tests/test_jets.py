import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gnvar import jets
from gnvar.jets import Jet, JetOrderError, multi_indices, ncoef


def rand_jet(rng, shape, order, complex_=False):
    v = rng.normal(size=tuple(shape) + (ncoef(order),))
    if complex_:
        v = v + 1j * rng.normal(size=v.shape)
    return Jet(v, order)


def naive_product(spec, a, b):
    """Reference truncated product by explicit multi-index loops."""
    order = a.order
    idx = jets.index_of(order)
    ins, out = spec.split("->")
    sa, sb = ins.split(",")
    res = None
    for al in multi_indices(order):
        for be in multi_indices(order):
            ga = tuple(x + y for x, y in zip(al, be))
            if sum(ga) > order:
                continue
            term = np.einsum(f"{sa},{sb}->{out}", a.coeffs[..., idx[al]], b.coeffs[..., idx[be]])
            if res is None:
                res = np.zeros(term.shape + (ncoef(order),), dtype=term.dtype)
            res[..., idx[ga]] += term
    return res


def test_multi_index_layout():
    assert multi_indices(1) == ((0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0),
                                (0, 0, 0, 1))
    assert [ncoef(s) for s in range(5)] == [1, 5, 15, 35, 70]
    degrees = [sum(a) for a in multi_indices(4)]
    assert degrees == sorted(degrees)


@pytest.mark.parametrize("spec,sa,sb", [
    ("ab,bc->ac", (3, 4), (4, 2)),
    ("acm,cbn->abmn", (4, 4, 4), (4, 4, 4)),
    ("i,im->m", (5,), (5, 4)),
    ("ab,ab->", (4, 4), (4, 4)),
    (",am->am", (), (4, 4)),
    ("am,bn->abmn", (2, 3), (2, 3)),
    ("abm,m->ab", (4, 4, 4), (4,)),
    ("ab,ba->", (3, 3), (3, 3)),
    ("aa,b->b", (3, 3), (2,)),  # repeated letter, einsum fallback
    ("ab,c->a", (3, 2), (4,)),  # summed-out letters, einsum fallback
])
@pytest.mark.parametrize("order", [0, 2, 3])
def test_prod_matches_naive_convolution(spec, sa, sb, order):
    rng = np.random.default_rng(0)
    a, b = rand_jet(rng, sa, order), rand_jet(rng, sb, order, complex_=True)
    got = jets.prod(spec, a, b).coeffs
    assert np.max(np.abs(got - naive_product(spec, a, b))) <= 1e-12


def test_prod_with_channels_is_bilinear():
    rng = np.random.default_rng(1)
    a, b = rand_jet(rng, (3,), 2), rand_jet(rng, (3,), 2)
    da, db = rand_jet(rng, (2, 3), 2), rand_jet(rng, (5, 3), 2)
    A, B = jets.seeded(a, d1=da), jets.seeded(b, d2=db)
    out = jets.prod("i,i->i", A, B)
    assert np.allclose(out.channel("d1").coeffs, naive_product("ni,i->ni", da, b), atol=1e-13)
    assert np.allclose(out.channel("d2").coeffs, naive_product("i,ni->ni", a, db), atol=1e-13)
    assert np.allclose(out.channel("d12").coeffs, naive_product("ki,ni->nki", da, db), atol=1e-13)


def test_order_mismatch_raises():
    with pytest.raises(JetOrderError):
        Jet.constant(1.0, 1) + Jet.constant(1.0, 2)
    with pytest.raises(JetOrderError):
        Jet.constant(1.0, 1).truncate(2)


def test_partial_and_grad():
    # f = x0^2 x1 at (1, 2, 0, 0)
    p = (1.0, 2.0, 0.0, 0.0)
    x0, x1 = Jet.variable(0, p, 3), Jet.variable(1, p, 3)
    f = x0 * x0 * x1
    d0 = f.partial(0)
    assert d0.order == 2 and d0.value == pytest.approx(4.0)
    assert d0.derivative((1, 0, 0, 0)) == pytest.approx(4.0)  # d00 f = 2 x1
    g = f.grad()
    assert g.shape == (4,) and g.value.tolist() == pytest.approx([4.0, 1.0, 0, 0])


def test_pad_then_truncate_is_identity():
    rng = np.random.default_rng(2)
    a = rand_jet(rng, (2, 2), 2)
    assert np.array_equal(a.pad(4).truncate(2).coeffs, a.coeffs)


def test_inverse_and_det():
    rng = np.random.default_rng(3)
    m = Jet(np.eye(4)[..., None] * np.eye(1, ncoef(2))[0] + 0.2 * rng.normal(size=(4, 4, ncoef(2))), 2)
    inv = jets.inv(m)
    ident = jets.prod("ab,bc->ac", m, inv).coeffs
    target = np.zeros_like(ident)
    target[..., 0] = np.eye(4)
    assert np.max(np.abs(ident - target)) <= 1e-12
    assert jets.det4(m).value == pytest.approx(np.linalg.det(m.value), rel=1e-12)
    # det(AB) = det A det B at jet level
    m2 = Jet(np.eye(4)[..., None] * np.eye(1, ncoef(2))[0] + 0.2 * rng.normal(size=(4, 4, ncoef(2))), 2)
    lhs = jets.det4(jets.prod("ab,bc->ac", m, m2))
    rhs = jets.det4(m) * jets.det4(m2)
    assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) <= 1e-12


def test_singular_inverse():
    with pytest.raises(np.linalg.LinAlgError):
        jets.inv(Jet.constant(np.zeros((4, 4)), 1))


def test_reciprocal_of_zero():
    with pytest.raises(ZeroDivisionError):
        1.0 / Jet.constant(0.0, 2)


def test_levi_civita():
    lc = jets.levi_civita()
    assert lc[0, 1, 2, 3] == 1 and lc[1, 0, 2, 3] == -1 and lc[0, 0, 1, 2] == 0
    assert np.abs(lc).sum() == 24


def test_seeded_rejects_double_use():
    a = Jet.constant(np.ones(2), 1)
    s = jets.seeded(a, d1=Jet.constant(np.ones((1, 2)), 1))
    with pytest.raises(ValueError):
        jets.seeded(s, d1=Jet.constant(np.ones((1, 2)), 1))


def test_stack_and_concat():
    a, b = Jet.constant(np.ones(2), 1), Jet.constant(np.zeros(3), 1)
    assert jets.concat([a, b]).shape == (5,)
    assert jets.stack([a, a], axis=-1).shape == (2, 2)
    with pytest.raises(JetOrderError):
        jets.stack([a, Jet.constant(np.ones(2), 2)])


series_args = st.floats(-1.5, 1.5, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(series_args, series_args)
def test_trig_identity(u, v):
    p = (u, v, 0.0, 0.0)
    z = Jet.variable(0, p, 4) * Jet.variable(1, p, 4)
    one = jets.sin(z) * jets.sin(z) + jets.cos(z) * jets.cos(z)
    assert abs(one.value - 1) <= 1e-14 and np.max(np.abs(one.coeffs[1:])) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(series_args, series_args, st.integers(-3, 4))
def test_integer_powers(u, v, n):
    p = (u + 2.0, v, 0.0, 0.0)
    a = Jet.variable(0, p, 3) + Jet.variable(1, p, 3) * 0.3
    lhs = a ** n * a
    rhs = a ** (n + 1)
    assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) <= 1e-11 * max(1.0, np.max(np.abs(rhs.coeffs)))
