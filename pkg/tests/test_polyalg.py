"""Polynomial and operator algebra: arithmetic identities, matrix-valued
first-order operators, finite matrix representations, gauge conjugation,
and the equivalence of algebraic and pointwise transformed actions."""

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracqes import (
    GaugeTransform,
    PhysicalParams,
    Poly,
    PoleError,
    PolySpinor,
    PotentialSpec,
    Premultiply,
    ProblemInstance,
    RadialOperator,
    ScalarDiffOp,
    StructureError,
    ValidationError,
    VarChange,
    conjugate,
    gauge_equivalence_residual,
    matrix_rep_with_shape,
    nullspace,
    overflow_rows,
    radial_operator,
    sigma_min,
    sl2_generators,
)

# small integer coefficients keep every identity exact in double precision
_coeffs = st.lists(st.integers(min_value=-9, max_value=9).map(float),
                   min_size=0, max_size=6).map(tuple)


class TestPoly:
    def test_basic_accessors(self):
        p = Poly((1.0, 0.0, 3.0))
        assert p.degree == 2
        assert p[0] == 1.0 and p[1] == 0.0 and p[5] == 0.0
        assert not p.is_zero()
        assert Poly.zero().is_zero()
        assert Poly.zero().degree == -1
        assert Poly.const(1.5).coeffs == (1.5,)
        assert Poly.monomial(3, 2.0).coeffs == (0.0, 0.0, 0.0, 2.0)

    def test_evaluation_and_derivative(self):
        p = Poly((1.0, -2.0, 3.0))
        assert p(2.0) == 1.0 - 4.0 + 12.0
        assert p.deriv().coeffs == (-2.0, 6.0)
        assert p.deriv_at(2.0) == -2.0 + 12.0

    def test_shift_and_scale(self):
        p = Poly((1.0, 2.0))
        assert p.shift(2).coeffs == (0.0, 0.0, 1.0, 2.0)
        assert p.scale(3.0).coeffs == (3.0, 6.0)

    @given(_coeffs, _coeffs, st.integers(min_value=-3, max_value=3).map(float))
    @settings(deadline=None, max_examples=60)
    def test_ring_identities_pointwise(self, a, b, x):
        p, q = Poly(a), Poly(b)
        assert (p + q)(x) == p(x) + q(x)
        assert (p - q)(x) == p(x) - q(x)
        assert (p * q)(x) == p(x) * q(x)

    @given(_coeffs, _coeffs)
    @settings(deadline=None, max_examples=60)
    def test_product_rule(self, a, b):
        p, q = Poly(a), Poly(b)
        lhs = (p * q).deriv()
        rhs = p.deriv() * q + p * q.deriv()
        assert (lhs - rhs).is_zero


class TestScalarDiffOp:
    def test_apply_matches_termwise_definition(self):
        # (2 x d/dx + 1) x^2 = 5 x^2
        A = ScalarDiffOp.from_dict({(1, 1): 2.0, (0, 0): 1.0})
        out = A.apply(Poly((0.0, 0.0, 1.0)))
        assert out.coeffs == (0.0, 0.0, 5.0)

    def test_compose_agrees_with_sequential_apply(self):
        A = ScalarDiffOp.from_dict({(1, 1): 2.0, (0, 0): 1.0})
        B = ScalarDiffOp.from_dict({(0, 1): 1.0, (2, 0): 0.5})
        p = Poly((1.0, -2.0, 3.0, 0.5))
        assert A.compose(B).apply(p).coeffs == A.apply(B.apply(p)).coeffs

    def test_second_order_composition(self):
        D = ScalarDiffOp.from_dict({(0, 1): 1.0})
        p = Poly((0.0, 0.0, 0.0, 1.0))
        assert D.compose(D).apply(p).coeffs == (0.0, 6.0)

    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_ladder_commutator(self, n):
        gens = sl2_generators(n)
        comm = gens["J+"].compose(gens["J-"]) - gens["J-"].compose(gens["J+"])
        assert comm.isclose(gens["J0"].scaled(-2.0))

    @pytest.mark.parametrize("n", [1, 3])
    def test_raising_operator_preserves_degree_cap(self, n):
        Jp = sl2_generators(n)["J+"]
        for k in range(n + 1):
            out = Jp.apply(Poly.monomial(k))
            assert out.degree <= n


class TestRadialOperatorStructure:
    def test_double_pole_rejected(self):
        with pytest.raises(StructureError):
            RadialOperator({(-2, 0): 1.0}, {}, {}, {})

    def test_higher_derivative_rejected(self):
        with pytest.raises(StructureError):
            RadialOperator({(0, 2): 1.0}, {}, {}, {})

    def test_apply_derivative_and_multiplication(self):
        op = RadialOperator({(0, 1): 1.0}, {(1, 0): 2.0}, {}, {(0, 1): 1.0})
        phi = PolySpinor(Poly((0.0, 1.0)), Poly((3.0,)))
        out = op.apply(phi)
        assert out.upper.coeffs == (1.0, 6.0)   # d/dr(r) + 2 r * 3
        assert out.lower.coeffs == ()           # d/dr(3) = 0

    def test_uncancelled_pole_raises(self):
        op = RadialOperator({(-1, 0): 1.0}, {}, {}, {})
        with pytest.raises(PoleError):
            op.apply(PolySpinor(Poly((1.0,)), Poly.zero()))

    def test_pole_cancels_on_divisible_input(self):
        op = RadialOperator({(-1, 0): 1.0}, {}, {}, {})
        out = op.apply(PolySpinor(Poly((0.0, 2.0)), Poly.zero()))
        assert out.upper.coeffs == (2.0,)


class TestOperatorConstruction:
    def test_entries_follow_channel_conventions(self):
        M, kappa, mu = 1.5, -2.0, 0.7
        eps = 0.25
        inst = ProblemInstance(
            PhysicalParams(M=M, kappa=kappa, mu_n=mu),
            PotentialSpec(alpha=0.3, beta=0.2, alpha_poly=(0.4, 0.6),
                          beta_poly=(0.8,), gamma_poly=(0.9, 1.1)),
        )
        op = radial_operator(inst, eps)
        # diagonal: d/dr -+ kappa/r -+ mu_n E
        assert op.entry(0, 0) == pytest.approx(
            {(0, 1): 1.0, (-1, 0): -kappa, (0, 0): -mu * 0.9, (1, 0): -mu * 1.1})
        assert op.entry(1, 1) == pytest.approx(
            {(0, 1): 1.0, (-1, 0): kappa, (0, 0): mu * 0.9, (1, 0): mu * 1.1})
        # off-diagonal: M -+ eps -+ V + W
        assert op.entry(0, 1) == pytest.approx(
            {(-1, 0): -0.3 + 0.2, (0, 0): M - eps, (1, 0): -0.4 + 0.8,
             (2, 0): -0.6})
        assert op.entry(1, 0) == pytest.approx(
            {(-1, 0): 0.3 + 0.2, (0, 0): M + eps, (1, 0): 0.4 + 0.8,
             (2, 0): 0.6})


def _oscillator_level_transform(M: float, eps: float, kappa: float,
                                mu: float) -> GaugeTransform:
    return GaugeTransform(
        theta_upper=kappa,
        theta_lower=kappa - 1.0,
        lambda2=mu,
        shear=2.0 * mu / (M + eps),
        premultiply=Premultiply.R,
        variable_change=VarChange.X_EQUALS_R_SQUARED,
    )


def _oscillator_instance(M: float, kappa: float, mu: float) -> ProblemInstance:
    return ProblemInstance(
        PhysicalParams(M=M, kappa=kappa, mu_n=mu),
        PotentialSpec(gamma_poly=(0.0, -1.0)),
    )


class TestConjugatedOscillatorForm:
    """The confining instance, conjugated and sheared, becomes polynomial
    with an invariant subspace of fixed degree."""

    M, KAPPA, MU = 1.0, 1.0, 1.0
    EPS = math.sqrt(5.0)   # first excited level of this family

    def _display(self):
        inst = _oscillator_instance(self.M, self.KAPPA, self.MU)
        g = _oscillator_level_transform(self.M, self.EPS, self.KAPPA, self.MU)
        return conjugate(radial_operator(inst, self.EPS), g)

    def test_entries_close_in_x(self):
        op = self._display()
        assert op.var == "x"
        assert op.entry(0, 0) == pytest.approx({(1, 1): 2.0})
        shear = 2.0 * self.MU / (self.M + self.EPS)
        assert op.entry(0, 1) == pytest.approx(
            {(1, 1): 2.0 * shear, (0, 0): self.M - self.EPS})
        assert op.entry(1, 0) == pytest.approx({(1, 0): self.M + self.EPS})
        assert op.entry(1, 1) == pytest.approx(
            {(1, 1): 2.0, (0, 0): 2.0 * self.KAPPA - 1.0})

    def test_kernel_vector_ratio(self):
        mat, rows_upper, _ = matrix_rep_with_shape(self._display(), 0, 1)
        vecs = nullspace(mat, 1e-10)
        assert len(vecs) == 1
        u0, v0, v1 = vecs[0]
        assert abs(v0) < 1e-12
        assert v1 / u0 == pytest.approx(-(self.M + self.EPS) / 3.0, rel=1e-12)

    def test_overflow_rows_distinguish_quantized_energy(self):
        op = self._display()
        mat, ru, _ = matrix_rep_with_shape(op, 0, 1)
        quantized = overflow_rows(mat, 0, 1, ru)
        assert np.max(np.abs(quantized)) < 1e-9

        eps_off = self.EPS + 1e-3
        inst = _oscillator_instance(self.M, self.KAPPA, self.MU)
        g_off = _oscillator_level_transform(self.M, eps_off, self.KAPPA, self.MU)
        mat_off, ru2, _ = matrix_rep_with_shape(
            conjugate(radial_operator(inst, eps_off), g_off), 0, 1)
        assert np.max(np.abs(overflow_rows(mat_off, 0, 1, ru2))) > 1e-4


class TestNullspaceAndSingularValues:
    def test_zero_matrix_full_basis(self):
        assert len(nullspace(np.zeros((2, 2)), 1e-10)) == 2

    def test_zero_size_rejected(self):
        with pytest.raises(ValidationError):
            nullspace(np.zeros((0, 3)), 1e-10)

    def test_external_scale_controls_threshold(self):
        # all-tiny matrix: against its own norm it is full rank, against
        # an order-one external scale it is numerically zero
        tiny = 1e-300 * np.eye(2)
        assert len(nullspace(tiny, 1e-10, scale=1.0)) == 2

    def test_rank_deficient_direction(self):
        vecs = nullspace(np.array([[1.0, 0.0], [0.0, 0.0]]), 1e-10)
        assert len(vecs) == 1
        assert abs(abs(vecs[0][1]) - 1.0) < 1e-14

    def test_sigma_min_value(self):
        assert sigma_min(np.diag([3.0, 1.0, 0.5])) == pytest.approx(0.5)


def _draw_family_op(rng) -> RadialOperator:
    def diag(sign):
        return {(0, 1): 1.0, (-1, 0): sign * rng.uniform(-2, 2),
                (0, 0): rng.uniform(-2, 2), (1, 0): rng.uniform(-2, 2)}

    def off():
        return {(-1, 0): rng.uniform(-2, 2), (0, 0): rng.uniform(-2, 2),
                (1, 0): rng.uniform(-2, 2), (2, 0): rng.uniform(-2, 2)}

    return RadialOperator(diag(1), off(), off(), diag(-1))


def _draw_spinor(rng) -> PolySpinor:
    # divisible by r^2 so pole terms of the transformed operator cancel
    upper = (0.0, 0.0) + tuple(rng.uniform(-1, 1, 3))
    lower = (0.0, 0.0) + tuple(rng.uniform(-1, 1, 4))
    return PolySpinor(Poly(upper), Poly(lower))


def _draw_transform(rng, matched_exponents: bool) -> GaugeTransform:
    theta = rng.uniform(0.2, 2.0)
    left = ((1.0, rng.uniform(-0.6, 0.6)), (rng.uniform(-0.6, 0.6), 1.0))
    right = ((1.0, rng.uniform(-0.6, 0.6)), (rng.uniform(-0.6, 0.6), 1.0))
    common = dict(lambda1=rng.uniform(-1, 1), lambda2=rng.uniform(0.1, 1.5),
                  omega=rng.uniform(-1.2, 1.2), shear=rng.uniform(-1, 1),
                  constant_left=left, constant_right=right,
                  variable_change=VarChange.NONE)
    if matched_exponents:
        return GaugeTransform(theta_upper=theta, theta_lower=theta,
                              premultiply=Premultiply.ONE, **common)
    return GaugeTransform(theta_upper=theta, theta_lower=theta + 1.0,
                          premultiply=Premultiply.R, **common)


class TestGaugeEquivalence:
    RADII = (0.37, 0.8, 1.13, 1.6, 2.05)

    def test_random_draws_agree_pointwise(self):
        rng = np.random.default_rng(1234)
        worst = 0.0
        for i in range(50):
            op = _draw_family_op(rng)
            phi = _draw_spinor(rng)
            g = _draw_transform(rng, matched_exponents=(i % 2 == 0))
            worst = max(worst,
                        gauge_equivalence_residual(op, g, phi, self.RADII))
        assert worst < 1e-12

    def test_fractional_exponent_mismatch_rejected(self):
        op = _draw_family_op(np.random.default_rng(0))
        g = GaugeTransform(theta_upper=0.5, theta_lower=1.0)
        with pytest.raises(StructureError):
            conjugate(op, g)
