"""Banded recurrences derived from the auxiliary polynomial equations."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import polynomial as P

from confluent_heun.errors import IrregularPoint, NotAnExponent, Resonance
from confluent_heun.frobenius import (
    PolyOde,
    indicial_exponents,
    local_recurrence,
    obstruction,
    run_recurrence,
    taylor_shift,
)
from confluent_heun.heun import HeunParams, build_eq3, build_eq25

import forms

P1 = HeunParams(0.3 + 0.1j, 0.4, 0.7, 1.3, 0.5 - 0.2j)
NS = np.arange(1, 31)


def random_params(rng):
    g = rng.uniform(-1.5, 0.9) + 0.3j * rng.uniform(-1, 1)
    d = rng.uniform(-1.5, 1.5) + 0.3j * rng.uniform(-1, 1)
    e = rng.uniform(0.2, 2.0) * rng.choice([-1, 1])
    a = rng.uniform(0.2, 2.0) * rng.choice([-1, 1])
    q = rng.uniform(-2, 2) + 1j * rng.uniform(-1, 1)
    return HeunParams(g, d, e, a, q)


class TestTaylorShift:
    def test_square(self):
        np.testing.assert_allclose(taylor_shift([0, 0, 1], 1), [1, 2, 1])

    def test_constant(self):
        np.testing.assert_array_equal(taylor_shift([3.5], 0.7 + 2j), [3.5])

    @settings(max_examples=50, deadline=None)
    @given(coeffs=st.lists(st.floats(-5, 5), min_size=1, max_size=8),
           re=st.floats(-2, 2), im=st.floats(-2, 2))
    def test_round_trip(self, coeffs, re, im):
        c = re + 1j * im
        back = taylor_shift(taylor_shift(coeffs, c), -c)
        scale = max(max(abs(x) for x in coeffs), 1e-300) * (1 + abs(c)) ** len(coeffs)
        assert np.max(np.abs(back - np.asarray(coeffs))) <= 1e-13 * scale

    @settings(max_examples=30, deadline=None)
    @given(coeffs=st.lists(st.floats(-5, 5), min_size=1, max_size=8), c=st.floats(-2, 2),
           w=st.floats(-1, 1))
    def test_evaluation_preserved(self, coeffs, c, w):
        shifted = taylor_shift(coeffs, c)
        lhs, rhs = P.polyval(w, shifted), P.polyval(w + c, coeffs)
        assert abs(lhs - rhs) <= 1e-12 * (1 + np.sum(np.abs(coeffs)) * 3 ** len(coeffs))


class TestIndicialExponents:
    def test_centers(self):
        ode = build_eq3(P1)
        assert indicial_exponents(ode, 0)[1] == pytest.approx(P1.gamma)
        assert indicial_exponents(ode, 1)[1] == pytest.approx(P1.delta)
        assert indicial_exponents(ode, P1.z0)[1] == pytest.approx(2)

    def test_ordinary_point(self):
        assert indicial_exponents(build_eq3(P1), 0.3 + 0.3j) == (0, 1)

    def test_irregular(self):
        ode = PolyOde([0, 0, 1], [1], [1])
        with pytest.raises(IrregularPoint):
            indicial_exponents(ode, 0)


class TestBandwidth:
    @pytest.mark.parametrize("center, mu, width", [(0, "gamma", 4), (0, 0, 4), (1, "delta", 4),
                                                   (0.4 + 0.2j, 0, 5), ("z0", 2, 4), ("z0", 0, 4)])
    def test_eq3(self, center, mu, width):
        ode = build_eq3(P1)
        center = P1.z0 if center == "z0" else center
        mu = {"gamma": P1.gamma, "delta": P1.delta}.get(mu, mu)
        assert local_recurrence(ode, center, mu).bandwidth == width

    def test_eq25(self):
        ode, _, _ = build_eq25(P1)
        assert local_recurrence(ode, 0, 0).bandwidth == 6

    def test_wrong_exponent(self):
        with pytest.raises(NotAnExponent):
            local_recurrence(build_eq3(P1), 0, 0.37)


class TestReferenceForms:
    """Engine coefficients against the closed leading/trailing forms."""

    @pytest.mark.parametrize("mu", [0, P1.gamma])
    def test_center0(self, mu):
        T = local_recurrence(build_eq3(P1), 0, mu).coeff_table(30)
        assert forms.ratio_spread(T[1:, 0], forms.lead_center0(P1, mu, NS)) < 1e-10
        assert forms.ratio_spread(T[4:, 3], forms.trail_center0(P1, mu, NS[3:])) < 1e-10

    def test_generic_center(self):
        c = 0.4 + 0.2j
        T = local_recurrence(build_eq3(P1), c, 1).coeff_table(30)
        assert forms.ratio_spread(T[1:, 0], forms.lead_generic(P1, 1, NS, c)) < 1e-10
        assert forms.ratio_spread(T[5:, 4], forms.trail_generic(P1, 1, NS[4:])) < 1e-10

    @pytest.mark.parametrize("mu", [0, 2])
    def test_z0(self, mu):
        T = local_recurrence(build_eq3(P1), P1.z0, mu).coeff_table(30)
        assert forms.ratio_spread(T[3:, 0], forms.lead_z0(P1, mu, NS[2:])) < 1e-10

    @pytest.mark.parametrize("mu", [0, P1.gamma])
    def test_second_type(self, mu):
        ode, z1, z2 = build_eq25(P1)
        T = local_recurrence(ode, 0, mu).coeff_table(30)
        assert forms.ratio_spread(T[1:, 0], forms.lead_second_type(z1, z2, P1, mu, NS)) < 1e-10
        assert np.all(T[5:, 5] == forms.trail_second_type(P1))

    @pytest.mark.parametrize("center, offsets", [(0, (1, 2)), (0.4 + 0.2j, (1, 2, 3))])
    def test_middle_coefficients_quadratic_in_n(self, center, offsets):
        T = local_recurrence(build_eq3(P1), center, 0).coeff_table(30)
        for j in offsets:
            assert forms.quadratic_fit_residual(T[1:, j], NS) < 1e-10

    def test_random_draws(self, rng):
        for _ in range(10):
            p = random_params(rng)
            ode = build_eq3(p)
            T = local_recurrence(ode, 0, p.gamma).coeff_table(30)
            assert forms.ratio_spread(T[1:, 0], forms.lead_center0(p, p.gamma, NS)) < 1e-10
            assert forms.ratio_spread(T[4:, 3], forms.trail_center0(p, p.gamma, NS[3:])) < 1e-10


class TestDegenerations:
    def test_q_zero_kills_leading_row(self):
        rec = local_recurrence(build_eq3(P1.replace(q=0)), 0, 0, check_exponent=False)
        T = rec.coeff_table(20)
        assert np.all(T[:, 0] == 0)

    def test_alpha_zero_kills_trailing_row(self):
        ode = build_eq3(P1.replace(alpha=0), allow_alpha_zero=True)
        T = local_recurrence(ode, 0, 0, check_exponent=False).coeff_table(20)
        assert np.all(T[:, 3] == 0)


class TestRunRecurrence:
    def test_normalised(self):
        s = run_recurrence(local_recurrence(build_eq3(P1), 0, P1.gamma), 10)
        assert s.coeffs[0] == 1

    def test_relation_holds(self):
        rec = local_recurrence(build_eq3(P1), 0, P1.gamma)
        a = run_recurrence(rec, 25).coeffs
        T = rec.coeff_table(25)
        for n in range(1, 26):
            row = sum(T[n, j] * a[n - j] for j in range(min(rec.bandwidth, n + 1)))
            assert abs(row) <= 1e-13 * max(abs(T[n, j] * a[n - j]) for j in range(min(4, n + 1)))

    @pytest.mark.parametrize("mu", [0, 2])
    def test_apparent_singularity_passes_resonance(self, mu):
        rec = local_recurrence(build_eq3(P1), P1.z0, mu)
        s = run_recurrence(rec, 30)
        assert np.all(np.isfinite(s.coeffs))
        if mu == 0:
            assert s.free_indices == (2,)
            scale = max(abs(rec.coeff(2, j) * s.coeffs[2 - j]) for j in (1, 2))
            assert abs(obstruction(rec, 2, s.coeffs)) < 1e-10 * scale

    def test_second_type_apparent_singularities(self):
        ode, z1, z2 = build_eq25(P1)
        for z in (z1, z2):
            s = run_recurrence(local_recurrence(ode, z, 0), 30)
            assert np.all(np.isfinite(s.coeffs))

    def test_genuine_resonance_detected(self):
        # exponents 0 and 1 at z = 0 with a logarithmic partner
        ode = PolyOde([0, 1], [0], [1])
        with pytest.raises(Resonance):
            run_recurrence(local_recurrence(ode, 0, 0), 3)

    @pytest.mark.parametrize("center, mu", [(0, P1.gamma), (1, P1.delta), (0.4 + 0.2j, 0),
                                            (0.4 + 0.2j, 1)])
    @pytest.mark.parametrize("n", [10, 20, 40])
    def test_substitution_residual(self, center, mu, n):
        """Truncated series leaves a residual bounded by the first omitted term."""
        ode = build_eq3(P1)
        rec = local_recurrence(ode, center, mu)
        s = run_recurrence(rec, n)
        nxt = run_recurrence(rec, n + 1).coeffs[n + 1]
        power = n + mu + (0 if rec.singular else -1)
        for w in np.linspace(0.05, 0.3, 5):
            z = center + w
            v, dv, d2v = s.evaluate(z, deriv=2)
            parts = [P.polyval(z, ode.A) * d2v, P.polyval(z, ode.B) * dv, P.polyval(z, ode.C) * v]
            omitted = abs(rec.coeff(n + 1, 0) * nxt * w ** power)
            floor = 1e-14 * sum(abs(x) for x in parts)
            assert abs(sum(parts)) <= 100 * (omitted + floor)
