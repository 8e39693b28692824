import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from conelab.errors import ConelabError, DegeneracyError
from conelab.field import GridDomain, gradient_central, hessian_central
from conelab.operators import (DegeneracyParams, RadialSolution, barrier, barrier_hessian,
                               degenerate_op, p_laplacian, pucci, radial_jet, radial_solution,
                               stress, stress_jacobian, sym_eigvals)

finite = st.floats(-10.0, 10.0, allow_nan=False)
sym2 = arrays(float, (2, 2), elements=finite).map(lambda A: 0.5 * (A + A.T))
vec2 = arrays(float, (2,), elements=finite)
params_st = st.builds(lambda g, lam, ratio: DegeneracyParams(g, lam, lam * ratio),
                      st.floats(0.0, 3.0), st.floats(0.1, 5.0), st.floats(1.0, 5.0))


class TestParams:
    @pytest.mark.parametrize("kw", [dict(gamma=-1), dict(lam=2, Lam=1), dict(lam=0),
                                    dict(gamma=float("nan"))])
    def test_invalid(self, kw):
        with pytest.raises(ConelabError):
            DegeneracyParams(**kw)

    def test_alpha(self):
        assert DegeneracyParams(1.0).alpha == 0.5


class TestPucci:
    def test_identity(self):
        p = DegeneracyParams(0, 1, 2)
        assert pucci(np.eye(2), p, "plus") == 4
        assert pucci(np.eye(2), p, "minus") == 2

    def test_indefinite(self):
        p = DegeneracyParams(0, 1, 2)
        M = np.diag([1.0, -1.0])
        assert pucci(M, p, "plus") == 1
        assert pucci(M, p, "minus") == -1

    def test_eigvals_match_numpy(self, rng):
        A = rng.normal(size=(500, 2, 2))
        A = A + np.swapaxes(A, 1, 2)
        np.testing.assert_allclose(sym_eigvals(A), np.linalg.eigvalsh(A), atol=1e-12)

    def test_bad_sign(self):
        with pytest.raises(ConelabError):
            pucci(np.eye(2), DegeneracyParams(), "both")

    def test_nonfinite(self):
        with pytest.raises(ConelabError):
            pucci(np.array([[np.inf, 0], [0, 1.0]]), DegeneracyParams())

    @given(sym2, params_st)
    def test_duality(self, M, params):
        assert abs(pucci(-M, params, "plus") + pucci(M, params, "minus")) <= 1e-12 * (
            1 + np.abs(M).max())

    @given(sym2, sym2, params_st)
    def test_subadditivity(self, M, N, params):
        tol = 1e-12 * (1 + np.abs(M).max() + np.abs(N).max()) * params.Lam
        lo = pucci(M, params, "minus") + pucci(N, params, "minus")
        mid = pucci(M + N, params, "minus")
        hi = pucci(M, params, "minus") + pucci(N, params, "plus")
        assert lo <= mid + tol
        assert mid <= hi + tol

    @given(sym2, params_st)
    def test_minus_below_plus(self, M, params):
        assert pucci(M, params, "minus") <= pucci(M, params, "plus") + 1e-12

    def test_equality_cases(self, rng):
        M = rng.normal(size=(2, 2))
        M = M + M.T
        iso = DegeneracyParams(0, 1.5, 1.5)
        assert pucci(M, iso, "minus") == pytest.approx(pucci(M, iso, "plus"), abs=1e-14)
        aniso = DegeneracyParams(0, 1, 2)
        assert pucci(np.zeros((2, 2)), aniso, "minus") == pucci(np.zeros((2, 2)), aniso, "plus")
        assert pucci(M, aniso, "minus") < pucci(M, aniso, "plus")


class TestDegenerate:
    def test_example(self):
        p = DegeneracyParams(1, 1, 2)
        assert degenerate_op(np.array([0.5, 0]), 2 * np.eye(2), p, "plus") == pytest.approx(4.0)

    def test_zero_gradient(self, rng):
        p = DegeneracyParams(1, 1, 2)
        M = rng.normal(size=(2, 2))
        assert degenerate_op(np.zeros(2), M + M.T, p) == 0.0

    @given(vec2, sym2, params_st, st.floats(0.01, 100.0))
    def test_gradient_homogeneity(self, p, M, params, a):
        lhs = degenerate_op(a * p, M, params)
        rhs = a ** params.gamma * degenerate_op(p, M, params)
        assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)


class TestStress:
    def test_identity_when_linear(self, rng):
        p = rng.normal(size=(20, 2))
        np.testing.assert_array_equal(stress(p, 0.0), p)

    def test_example(self):
        np.testing.assert_allclose(stress(np.array([3.0, 4.0]), 1.0), [15.0, 20.0])

    @given(vec2.filter(lambda p: np.linalg.norm(p) > 1e-3), st.floats(0.0, 3.0),
           st.floats(0.01, 100.0))
    def test_homogeneity(self, p, g, a):
        want = a ** (1 + g) * stress(p, g)
        # relative to |V|: a subnormal component has no relative precision of its own
        assert np.linalg.norm(stress(a * p, g) - want) <= 1e-12 * np.linalg.norm(want)


class TestStressJacobian:
    def test_linear_case(self, rng):
        M = rng.normal(size=(2, 2))
        M = M + M.T
        full, sym = stress_jacobian(rng.normal(size=2), M, 0.0)
        np.testing.assert_allclose(full, M, rtol=1e-15)
        np.testing.assert_allclose(sym, M, rtol=1e-15)

    def test_example(self):
        full, _ = stress_jacobian(np.array([1.0, 0.0]), np.eye(2), 1.0)
        np.testing.assert_allclose(full, np.diag([2.0, 1.0]))

    def test_degenerate_point(self):
        with pytest.raises(DegeneracyError):
            stress_jacobian(np.zeros(2), np.eye(2), 1.0)

    @given(vec2.filter(lambda p: np.linalg.norm(p) > 1e-3), st.floats(0.0, 3.0))
    def test_determinant(self, p, g):
        ph = p / np.linalg.norm(p)
        assert np.linalg.det(np.eye(2) + g * np.outer(ph, ph)) == pytest.approx(1 + g, rel=1e-12)

    @given(vec2.filter(lambda p: np.linalg.norm(p) > 1e-3), sym2, st.floats(0.0, 3.0))
    def test_trace_is_p_laplacian(self, p, M, g):
        full, sym = stress_jacobian(p, M, g)
        scale = np.linalg.norm(p) ** g * (1 + np.abs(M).max()) * (1 + g)
        assert abs(np.trace(full) - p_laplacian(p, M, g)) <= 1e-12 * scale
        assert abs(np.trace(sym) - np.trace(full)) <= 1e-12 * scale
        np.testing.assert_allclose(sym, sym.T, atol=1e-12 * scale)

    def test_matches_finite_difference(self, rng):
        # D[V(Du)] for a smooth u, against differencing V(Du) directly
        g = 1.5
        jac = lambda x: np.array([np.cos(x[0]) + x[1], x[0] + 2 * x[1]])
        hess = lambda x: np.array([[-np.sin(x[0]), 1.0], [1.0, 2.0]])
        x = np.array([0.3, 0.7])
        full, _ = stress_jacobian(jac(x), hess(x), g)
        e = 1e-6
        fd = np.column_stack([(stress(jac(x + e * v), g) - stress(jac(x - e * v), g)) / (2 * e)
                              for v in np.eye(2)])
        np.testing.assert_allclose(full, fd, rtol=1e-7)


class TestPLaplacian:
    def test_laplacian(self):
        assert p_laplacian(np.array([0.3, -0.2]), -np.eye(2), 0.0) == pytest.approx(-2.0)

    def test_zero_gradient(self):
        assert p_laplacian(np.zeros(2), np.eye(2), 2.0) == 0.0

    @pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0, 2.0])
    @pytest.mark.parametrize("K", [0.5, 1.0, 3.0])
    def test_concave_cone(self, gamma, K, rng):
        from conelab.cones import Cone, cone_jet

        alpha = 1 / (1 + gamma)
        cone = Cone("concave", K, (0.1, -0.2), 0.3, alpha)
        for x in rng.uniform(-1, 1, size=(20, 2)):
            jet = cone_jet(cone, x)
            assert p_laplacian(jet.grad, jet.hess, gamma) == pytest.approx(
                -2 * K ** (1 + gamma), rel=1e-10)


class TestRadial:
    def test_laplacian_quadratic(self):
        rs = RadialSolution(0.5, DegeneracyParams(0, 1, 1))
        d = GridDomain.box(-1, 1, 9, 2)
        u, fp, fm = radial_solution(rs, d)
        np.testing.assert_allclose(u.values, 0.5 * np.sum(d.coords() ** 2, -1), rtol=1e-14)
        assert fp == pytest.approx(2.0) and fm == pytest.approx(2.0)

    def test_degenerate_constant(self):
        rs = RadialSolution(1.0, DegeneracyParams(1, 1, 2))
        fp, fm = rs.constants(2)
        assert fp == pytest.approx(27 / 4)
        assert fp / fm == pytest.approx(2.0)

    def test_negative_coefficient(self):
        fp, fm = RadialSolution(-1.0, DegeneracyParams(1, 1, 2)).constants(2)
        assert fm < fp < 0

    def test_zero_coefficient(self):
        with pytest.raises(ConelabError):
            RadialSolution(0.0, DegeneracyParams()).constants(2)

    def test_jet_operator_exact(self, rng):
        params = DegeneracyParams(1, 1, 2)
        rs = RadialSolution(1.0, params)
        x = rng.uniform(-1, 1, size=(50, 2))
        _, grad, hess = radial_jet(rs, x)
        np.testing.assert_allclose(degenerate_op(grad, hess, params, "plus"), 27 / 4, rtol=1e-12)

    def test_finite_differences_at_half(self):
        params = DegeneracyParams(1, 1, 2)
        d = GridDomain.box(-1, 1, 513, 2)
        u, fp, _ = radial_solution(RadialSolution(1.0, params), d)
        val = degenerate_op(gradient_central(u).values, hessian_central(u).matrices, params)
        r = np.linalg.norm(d.coords(), axis=-1)
        ring = np.abs(r - 0.5) < d.h
        assert np.max(np.abs(val[ring] / fp - 1)) < 0.02

    def test_annulus(self):
        params = DegeneracyParams(1, 1, 2)
        d = GridDomain.box(-1, 1, 257, 2)
        u, fp, _ = radial_solution(RadialSolution(1.0, params), d)
        val = degenerate_op(gradient_central(u).values, hessian_central(u).matrices, params)
        r = np.linalg.norm(d.coords(), axis=-1)
        ann = (r >= 0.2) & (r <= 0.8)
        assert np.max(np.abs(val[ann] / fp - 1)) < 0.05


class TestBarrier:
    params = DegeneracyParams(1, 1, 2)

    def test_zero_level(self):
        v, _, _ = barrier(np.array([0.75, 0.0]), 2, self.params)
        assert v == pytest.approx(0.0, abs=1e-15)

    def test_gradient_norm(self):
        _, g, _ = barrier(np.array([0.0, 0.5]), 2, self.params)
        assert np.linalg.norm(g) == pytest.approx(8.0)

    def test_pucci_closed_form(self):
        x = np.array([0.3, 0.4])
        _, _, pm = barrier(x, 2, self.params)
        assert pm == pytest.approx(((3) * 1 - 2) / 0.5 ** 4)
        assert pm == pytest.approx(pucci(barrier_hessian(x, 2), self.params, "minus"), rel=1e-12)

    def test_against_sampled_hessian(self):
        h = 1e-3
        d = GridDomain.box(0.5 - 20 * h, 0.5 + 20 * h, 41, 2)
        x = d.coords()
        r = np.linalg.norm(x, axis=-1)
        from conelab.field import ScalarField

        phi = ScalarField(d, (r ** -2.0 - 0.75 ** -2.0) / 2)
        H = hessian_central(phi).matrices[20, 20]
        _, _, pm = barrier(d.point((20, 20)), 2, self.params)
        assert pucci(H, self.params, "minus") == pytest.approx(pm, rel=0.02)

    @pytest.mark.parametrize("x,p", [((0.1, 0.0), 2), ((0.5, 0.0), 0), ((0.5, 0.0), 1.5)])
    def test_invalid(self, x, p):
        with pytest.raises(ConelabError):
            barrier(np.array(x), p, self.params)
