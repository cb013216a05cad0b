import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gnvar import jets
from gnvar.fieldlang import coordinate_jets, field_jets, parse_expression
from gnvar.geometry import evaluate_geometry
from gnvar.jets import Jet, JetOrderError
from gnvar.noether import lagrangians
from gnvar.variational import (FieldSystem, Lagrangian, Lattice, NonPeriodicPerturbation,
                               bergmann_bianchi_check, canonical_current, euler_lagrange,
                               euler_lagrange_form, horizontal_differential, jacobi_morphism,
                               momentum, momentum_form, naturality_check, second_variation,
                               self_adjointness_check, split_lifted_vector,
                               variational_lie_derivative, vertical_part)

from _support import plane_wave, random_config, random_point


def P(*srcs):
    return [parse_expression(s) for s in srcs]


def toy(p, order, *srcs):
    return field_jets(P(*srcs), p, order)


# one-field toy Lagrangians over y[0, slot]; slots are (value, d0, d1, d2, d3)
HALF_V2 = Lagrangian(lambda x, y: 0.5 * y[0, 1] * y[0, 1], name="v^2/2")
OSC = Lagrangian(lambda x, y: 0.5 * y[0, 1] * y[0, 1] - 0.5 * y[0, 0] * y[0, 0], name="osc")
LINEAR = Lagrangian(lambda x, y: y[0, 0] * 3.0 + y[0, 2] * x[1], name="linear")
SQUARE = Lagrangian(lambda x, y: 0.5 * y[0, 0] * y[0, 0], name="y^2/2")
COORD = Lagrangian(lambda x, y: x[0] * x[1] + x[2], name="coordinates")


def lift_from(xi_srcs, Xi_srcs):
    """Toy lift with closed-form (xi, Xi) independent of the fields."""
    xi_e, Xi_e = P(*xi_srcs), P(*Xi_srcs)

    def lift(x, field):
        p = tuple(float(v) for v in x.value.real)
        return field_jets(xi_e, p, x.order), field_jets(Xi_e, p, x.order)

    return lift


class TestSplit:
    p = (0.3, -0.2, 0.5, 0.1)

    def test_pure_vertical(self):
        f = toy(self.p, 3, "sin(x0)*x1")
        Xi = toy(self.p, 2, "x2 + x0^2")
        xi = Jet.constant(np.zeros(4), 2)
        assert np.max(np.abs((vertical_part(f, xi, Xi) - Xi).coeffs)) == 0

    def test_holonomic_drag_is_horizontal(self):
        f = toy(self.p, 3, "sin(x0)*x1", "x3^2")
        xi = toy(self.p, 2, "1 + x1", "x0", "0.5", "x2*x3")
        Xi = jets.prod("ig,g->i", f.grad().truncate(2), xi)
        assert np.max(np.abs(vertical_part(f, xi, Xi).coeffs)) <= 1e-15

    def test_prolongation_against_first_prolongation_formula(self):
        f = toy(self.p, 4, "sin(x0)*x1", "exp(x2) - x3")
        xi = toy(self.p, 3, "x1*x2", "1 + x0", "cos(x3)", "x0*x0")
        Xi = toy(self.p, 3, "x0 + x1*x3", "sin(x2)")
        _, XiV, _, jXi = split_lifted_vector(f, xi, Xi, 1, 1)
        dy = f.grad()
        for mu in range(4):
            # Xi^i_mu = D_mu Xi^i - y^i_nu D_mu xi^nu
            oracle = Xi.partial(mu) - jets.prod("in,n->i", dy.truncate(2), xi.partial(mu))
            assert np.max(np.abs((jXi[:, 1 + mu] - oracle.truncate(1)).coeffs)) <= 1e-13
        assert np.max(np.abs((jXi[:, 0] - Xi.truncate(1)).coeffs)) <= 1e-15


class TestHorizontalDifferential:
    def test_constant_current(self):
        J = Jet.constant(np.array([1.0, 2.0, 3.0, 4.0]), 2)
        assert horizontal_differential(J).value == 0

    def test_identity_current(self):
        y = toy((0.2, 0, 0, 0), 2, "x0")[0]
        J = jets.stack([y, y * 0.0, y * 0.0, y * 0.0])
        assert horizontal_differential(J).value == 1

    def test_double_divergence_vanishes(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            p = random_point(rng)
            srcs = ["x0*x1^2", "sin(x2)*x3", "exp(x0 - x1)", "x2^3 + x0*x3", "cos(x1*x2)", "x3*x0^2"]
            b = toy(p, 3, *srcs)
            k = 0
            B = [[None] * 4 for _ in range(4)]
            for m in range(4):
                B[m][m] = b[0] * 0.0
                for n in range(m + 1, 4):
                    B[m][n], B[n][m] = b[k], -b[k]
                    k += 1
            J = jets.stack([sum((B[m][n].partial(n) for n in range(1, 4)), B[m][0].partial(0))
                            for m in range(4)])
            assert abs(horizontal_differential(J).value) <= 1e-11


class TestEulerLagrange:
    def test_oscillator_on_shell(self):
        p = (0.7, 0.1, 0.2, 0.3)
        assert abs(euler_lagrange(OSC, toy(p, 2, "sin(x0)"), p).value[0]) <= 1e-12

    def test_oscillator_hand_formula(self):
        p = (0.7, 0.1, 0.2, 0.3)
        E = euler_lagrange(OSC, toy(p, 3, "x0^3*x1"), p, 1)
        # E = -y_00 - y = -6 x0 x1 - x0^3 x1
        oracle = toy(p, 1, "-6*x0*x1 - x0^3*x1")
        assert np.max(np.abs((E - oracle).coeffs)) <= 1e-12

    def test_field_independent(self):
        p = (0.1, 0.2, 0.3, 0.4)
        assert euler_lagrange(COORD, toy(p, 2, "sin(x0)"), p).value[0] == 0

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3),
           st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 4))
    def test_random_null_lagrangians(self, c, p):
        # D_0(c0 y x1) + D_1(c1 y^2) + D_3(c2 y x3^2)
        L = Lagrangian(lambda x, y: (y[0, 1] * x[1]) * c[0] + (y[0, 0] * y[0, 2] * 2.0) * c[1]
                       + (y[0, 4] * x[3] * x[3] + y[0, 0] * x[3] * 2.0) * c[2])
        E = euler_lagrange(L, toy(p, 2, "sin(x0)*x1 + x3^2*x2"), p)
        assert abs(E.value[0]) <= 1e-11 * max(1.0, *map(abs, c))

    @pytest.mark.parametrize("src", ["sin(x0)*x1", "exp(x2)*x3 + x0^2", "x1^4"])
    def test_null_lagrangian(self, src):
        # L = D_0(y x1) + D_1(y^2) = y_0 x1 + 2 y y_1 is a total divergence
        L = Lagrangian(lambda x, y: y[0, 1] * x[1] + y[0, 0] * y[0, 2] * 2.0)
        p = (0.3, 0.4, -0.5, 0.6)
        assert abs(euler_lagrange(L, toy(p, 2, src), p).value[0]) <= 1e-11

    def test_needs_order(self):
        p = (0,) * 4
        with pytest.raises(JetOrderError):
            euler_lagrange(OSC, toy(p, 1, "x0"), p)

    def test_form_wrapper(self):
        system = FieldSystem(("y",), tuple(P("sin(x0)")))
        form = euler_lagrange_form(OSC, system, (0.3, 0, 0, 0))
        assert form.names == ("y",) and abs(form.values[0]) <= 1e-12

    def test_plane_wave_dirac_rows(self):
        cfg = plane_wave()
        _, LD, _ = lagrangians(cfg)
        p = (0.37, -0.4, 0.2, 0.9)
        E = euler_lagrange(LD, cfg.field_jets(p, 2), p, 0, comps=range(40, 48))
        assert np.max(np.abs(E.value)) <= 1e-10


class TestMomentum:
    def test_velocity(self):
        p = (0.4, 0, 0, 0)
        pm = momentum(HALF_V2, toy(p, 1, "x0^2"), p)
        assert pm.value[0].tolist() == [0.8, 0, 0, 0]

    def test_no_derivative_dependence(self):
        p = (0.4, 0, 0, 0)
        assert np.max(np.abs(momentum(SQUARE, toy(p, 1, "x0^2"), p).value)) == 0

    def test_form_wrapper(self):
        system = FieldSystem(("y",), tuple(P("x0^2")))
        assert momentum_form(HALF_V2, system, (0.5, 0, 0, 0)).values[0, 0] == 1.0

    def test_higher_order_unsupported(self):
        with pytest.raises(NotImplementedError):
            momentum(Lagrangian(HALF_V2.fn, order=2), toy((0,) * 4, 2, "x0"), (0,) * 4)

    @pytest.mark.parametrize("seed", range(3))
    def test_dirac_momentum(self, seed):
        cfg = random_config(seed, alpha=0.8)
        _, LD, _ = lagrangians(cfg)
        p = random_point(np.random.default_rng(seed))
        pm = momentum(LD, cfg.field_jets(p, 1), p).value[40:]
        geom = evaluate_geometry(cfg, p, 0)
        g = geom.gamma
        psibar = geom.psi.value.conj() @ g.gammas[0]
        Pc = geom.det.value * np.einsum("am,aj->jm", geom.e.value,
                                        np.einsum("i,aij->aj", psibar, g.gammas))
        alpha = cfg.alpha
        assert np.max(np.abs(pm[0::2] + alpha * Pc.imag)) <= 1e-12
        assert np.max(np.abs(pm[1::2] + alpha * Pc.real)) <= 1e-12
        # same values by central differences in the derivative slots
        from gnvar.fieldlang import section_slots
        y = section_slots(cfg.field_jets(p, 1), 1, 0)
        x = coordinate_jets(p, 0)
        h = 1e-6
        for i in (40, 43, 46):
            for mu in range(4):
                dv = np.zeros((48, 5, 1))
                dv[i, 1 + mu, 0] = h
                up = LD(x, y + Jet(dv, 0)).value
                dn = LD(x, y - Jet(dv, 0)).value
                assert abs((up - dn) / (2 * h) - pm[i - 40, mu]) <= 1e-7


class TestFirstVariation:
    def test_zero_field(self):
        p = (0.1, 0.2, 0.3, 0.4)
        f = toy(p, 3, "sin(x0)")
        tp = variational_lie_derivative(HALF_V2, f, Jet.constant(np.zeros(4), 2),
                                        Jet.constant(np.zeros(1), 2), p)
        assert tp.lhs.value == 0 and tp.rhs.value == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_toy_vertical(self, seed):
        rng = np.random.default_rng(seed)
        p = random_point(rng)
        c = rng.uniform(-1, 1, 3)
        f = toy(p, 3, f"{c[0]:.5f}*x0^3 + x1*x0 + {c[1]:.5f}*x2^2")
        Xi = toy(p, 2, f"{c[2]:.5f}*x0^2 + x3")
        tp = variational_lie_derivative(HALF_V2, f, Jet.constant(np.zeros(4), 2), Xi, p, 1)
        assert tp.residual <= 1e-11
        assert np.max(np.abs(tp.lhs.coeffs)) > 1e-3

    @pytest.mark.parametrize("seed", range(3))
    def test_full_theory_arbitrary_vector_field(self, seed):
        """A generic (non gauge-natural) vector field drags lambda nontrivially."""
        cfg = random_config(seed)
        _, _, LT = lagrangians(cfg)
        rng = np.random.default_rng(seed)
        p = random_point(rng)
        f = cfg.field_jets(p, 3)
        xi = toy(p, 2, "0.3*x1", "x0*x2", "0.2", "sin(x3)")
        Xi = field_jets(P(*[f"{rng.uniform(-1, 1):.4f}*x{k % 4} + {rng.uniform(-1, 1):.4f}"
                            for k in range(48)]), p, 2)
        tp = variational_lie_derivative(LT, f, xi, Xi, p, 1)
        assert tp.residual <= 1e-10
        assert abs(tp.lhs.value) > 1e-3


class TestSecondVariation:
    p = (0.6, 0.1, 0.2, 0.3)

    def test_linear(self):
        f = toy(self.p, 1, "x0*x1")
        assert second_variation(LINEAR, f, toy(self.p, 1, "sin(x0)"), self.p).value == 0

    def test_square(self):
        f = toy(self.p, 1, "x0*x1")
        assert second_variation(SQUARE, f, toy(self.p, 1, "1"), self.p).value == 1

    def test_velocity_squared(self):
        f = toy(self.p, 2, "x0^3 + x2")
        sv = second_variation(HALF_V2, f, toy(self.p, 2, "sin(x0)"), self.p, 1)
        oracle = toy(self.p, 1, "cos(x0)^2")
        assert np.max(np.abs((sv - oracle).coeffs)) <= 1e-12


class TestJacobi:
    p = (0.6, -0.3, 0.2, 0.1)

    def test_oscillator(self):
        f = toy(self.p, 3, "x0^3*x1 + x2")
        eta = toy(self.p, 3, "sin(x0)*x3 + x0^2")
        J = jacobi_morphism(OSC, f, eta, self.p, 1)
        oracle = toy(self.p, 1, "-(-sin(x0)*x3 + 2) - (sin(x0)*x3 + x0^2)")
        assert np.max(np.abs((J - oracle).coeffs)) <= 1e-12

    def test_linear_lagrangian(self):
        f = toy(self.p, 2, "x0^3")
        assert jacobi_morphism(LINEAR, f, toy(self.p, 2, "sin(x0)"), self.p).value[0] == 0

    def test_zero_direction(self):
        f = toy(self.p, 2, "x0^3")
        assert jacobi_morphism(OSC, f, toy(self.p, 2, "0"), self.p).value[0] == 0

    def test_linearity_full_theory(self):
        cfg = random_config(3)
        _, _, LT = lagrangians(cfg)
        f = cfg.field_jets(self.p, 2)
        rng = np.random.default_rng(4)
        e1 = Jet(rng.normal(size=(48, jets.ncoef(2))), 2)
        e2 = Jet(rng.normal(size=(48, jets.ncoef(2))), 2)
        a, b = 0.7, -1.3
        lhs = jacobi_morphism(LT, f, e1 * a + e2 * b, self.p)
        rhs = jacobi_morphism(LT, f, e1, self.p) * a + jacobi_morphism(LT, f, e2, self.p) * b
        assert np.max(np.abs((lhs - rhs).coeffs)) <= 1e-11 * max(1, np.max(np.abs(lhs.coeffs)))

    def test_matches_extrapolated_difference_quotient(self):
        cfg = random_config(6)
        _, _, LT = lagrangians(cfg)
        f = cfg.field_jets(self.p, 2)
        rng = np.random.default_rng(6)
        eta = Jet(0.3 * rng.normal(size=(48, jets.ncoef(2))), 2)
        J = jacobi_morphism(LT, f, eta, self.p).value

        def quotient(eps):
            up = euler_lagrange(LT, f + eta * eps, self.p).value
            dn = euler_lagrange(LT, f - eta * eps, self.p).value
            return (up - dn) / (2 * eps)

        h = 1e-3
        d1, d2 = quotient(h), quotient(h / 2)
        fd = (4 * d2 - d1) / 3
        assert np.max(np.abs(J - fd)) <= 1e-7 * max(1.0, np.max(np.abs(J)))


def _periodic_1d(srcs):
    exprs = P(*srcs)
    return lambda p, order: field_jets(exprs, p, order)


class TestSelfAdjointness:
    lattice = Lattice((16, 1, 1, 1), (2 * math.pi, 1, 1, 1))

    def test_oscillator(self):
        field = _periodic_1d(["sin(x0)"])
        e1 = _periodic_1d(["0.3*cos(x0) + 0.2*sin(2*x0)"])
        e2 = _periodic_1d(["0.5*sin(3*x0) - 0.1*cos(2*x0) + 0.3*sin(2*x0) + 0.4"])
        sa = self_adjointness_check(OSC, field, e1, e2, self.lattice)
        assert sa.asymmetry <= 1e-8
        assert abs(sa.q12) > 1e-3

    def test_same_direction(self):
        field = _periodic_1d(["sin(x0)"])
        e = _periodic_1d(["0.3*cos(x0)"])
        assert self_adjointness_check(OSC, field, e, e, self.lattice).asymmetry == 0

    def test_rejects_non_periodic(self):
        field = _periodic_1d(["sin(x0)"])
        with pytest.raises(NonPeriodicPerturbation):
            self_adjointness_check(OSC, field, _periodic_1d(["x0"]), _periodic_1d(["1"]),
                                   self.lattice)
        with pytest.raises(NonPeriodicPerturbation):
            self_adjointness_check(OSC, field, _periodic_1d(["x1"]), _periodic_1d(["1"]),
                                   self.lattice)

    def test_lattice_points_and_weight(self):
        lat = Lattice((4, 2, 1, 1), (1.0, 2.0, 3.0, 4.0), (0.5, 0, 0, 0))
        pts = lat.points()
        assert len(pts) == 8 and pts[0] == (0.5, 0, 0, 0) and pts[-1] == (1.25, 1.0, 0, 0)
        assert lat.weight == pytest.approx(0.25 * 1.0 * 3.0 * 4.0)

    def test_second_variation_integrates_to_quadratic_form(self):
        """sum d^2 L = sum eta . J(eta) on a periodic lattice (the divergence drops)."""
        cfg = plane_wave()
        _, _, LT = lagrangians(cfg)
        lat = Lattice((8, 1, 1, 1), (2 * math.pi, 1, 1, 1))
        srcs = ["0"] * 40 + ["0.2*cos(x0)", "0.1*sin(2*x0)", "0.3*sin(x0)", "0",
                             "0", "0.1*cos(2*x0)", "0.05", "0.2*sin(x0)"]
        eta = _periodic_1d(srcs)
        sv = [second_variation(LT, cfg.field_jets(p, 1), eta(p, 1), p).value for p in lat.points()]
        q = self_adjointness_check(LT, cfg.field_jets, eta, eta, lat, rows=range(40, 48)).q12
        assert abs(math.fsum(sv) * lat.weight - q) <= 1e-7 * max(1.0, abs(q))
        assert abs(q) > 1e-3


class TestBergmannBianchi:
    p = (0.4, -0.2, 0.3, 0.1)

    def test_zero_lift(self):
        f = toy(self.p, 4, "sin(x0)*x1")
        bb = bergmann_bianchi_check(HALF_V2, f, lift_from(["0"] * 4, ["0"]), self.p)
        assert bb.value == 0

    def test_toy_hand_expansion(self):
        # inner density -Xi y_00, whose E-L value is -Xi_00; contracted: -Xi Xi_00 = sin^2
        f = toy(self.p, 4, "x0^3*x1 + cos(x2)")
        bb = bergmann_bianchi_check(HALF_V2, f, lift_from(["0"] * 4, ["sin(x0)"]), self.p)
        assert bb.value == pytest.approx(math.sin(self.p[0]) ** 2, abs=1e-13)
        assert bb.inner_el[0] == pytest.approx(math.sin(self.p[0]), abs=1e-13)

    def test_equals_jacobi_contraction(self):
        f = toy(self.p, 4, "x0^3*x1 + cos(x2)", "x1*x3")
        L = Lagrangian(lambda x, y: 0.5 * y[0, 1] * y[1, 2] + y[0, 0] * y[1, 0] * y[1, 0] * 0.3)
        lift = lift_from(["0.2", "x1", "0", "0"], ["x0*x2", "sin(x3)"])
        bb = bergmann_bianchi_check(L, f, lift, self.p)
        xi, Xi = lift(coordinate_jets(self.p, 4), f)
        XiV = vertical_part(f, xi, Xi)
        J = jacobi_morphism(L, f, XiV.pad(4), self.p)
        # frozen reading: Xi_V . J(Xi_V) (the lift here is field dependent only through y)
        want = float(np.dot(XiV.value, J.value))
        assert bb.value == pytest.approx(want, abs=1e-12)

    def test_needs_fourth_order_jets(self):
        with pytest.raises(JetOrderError):
            bergmann_bianchi_check(HALF_V2, toy(self.p, 3, "x0"), lift_from(["0"] * 4, ["1"]),
                                   self.p)


class TestNaturality:
    p = (0.2, 0.1, -0.3, 0.4)

    def test_zero_base_field(self):
        cfg = random_config(2)
        _, _, LT = lagrangians(cfg)
        lift = lift_from(["0"] * 4, ["0.1*x0"] * 48)
        assert naturality_check(LT, cfg.field_jets(self.p, 3), lift, self.p) == 0

    def test_zero_vertical_part(self):
        f = toy(self.p, 3, "sin(x0)")
        lift = lift_from(["1", "0", "0", "0"], ["cos(x0)"])  # Xi = y_0 xi^0, so Xi_V = 0
        assert abs(naturality_check(HALF_V2, f, lift, self.p)) <= 1e-15


def test_canonical_current_toy():
    p = (0.5, 0, 0, 0)
    f = toy(p, 2, "x0^2")
    J = canonical_current(HALF_V2, f, Jet.constant(np.zeros(4), 1), toy(p, 1, "1"), p, 0)
    # Xi_V p^0 = y_0 = 2 x0
    assert J.value.tolist() == [1.0, 0, 0, 0]
