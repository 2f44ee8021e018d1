"""Termination conditions, q-polynomials, certificates and finite sums."""
import json

import numpy as np
import pytest
from numpy.polynomial import polynomial as P

from confluent_heun.errors import CertificationFailed, ConfigError, DegreeMismatch, EpsilonZero
from confluent_heun.expansions import eval_expansion, make_spec
from confluent_heun.frobenius import local_recurrence, run_recurrence
from confluent_heun.heun import HeunParams, build_eq3, build_eq25
from confluent_heun.termination import (
    QPolynomial,
    _q_recurrence,
    alpha_condition,
    certify,
    certify_five_term,
    evaluate_finite_sum,
    finite_sum_solution,
    five_term_termination,
    four_term_termination,
    q_polynomial,
    solve_roots,
)

G, D, E = 0.5, 0.3, 1.0


def tail_ratio(N, mu_choice, center, g, d, e, q):
    """|a_{N+1}| / max|a_0..a_N| from the numeric recurrence."""
    mu = {"zero": 0, "gamma": g, "delta": d}[mu_choice]
    alpha = alpha_condition(N, mu, g, d, e)
    rec = local_recurrence(build_eq3(HeunParams(g, d, e, alpha, q)), center, mu)
    a = run_recurrence(rec, N + 1).coeffs
    return abs(a[N + 1]) / np.max(np.abs(a[: N + 1]))


class TestAlphaCondition:
    def test_examples(self):
        assert alpha_condition(1, 0, 0, 0, 1) == -2
        assert alpha_condition(2, 0.5, 0.5, 0.3, 2) == pytest.approx(-5.4, abs=1e-15)

    def test_epsilon_zero(self):
        with pytest.raises(EpsilonZero):
            alpha_condition(1, 0, 0.5, 0.3, 0)

    @pytest.mark.parametrize("N", [1, 2, 3])
    @pytest.mark.parametrize("mu", ["zero", "gamma"])
    def test_trailing_coefficient_vanishes_at_N(self, N, mu):
        g, d, e = 0.3 + 0.2j, -0.4, 0.8
        m = 0 if mu == "zero" else g
        p = HeunParams(g, d, e, alpha_condition(N, m, g, d, e), 0.7)
        rec = local_recurrence(build_eq3(p), 0, m)
        # the trailing column at row n carries the factor for index n - 3
        col = np.abs(rec.coeff_table(N + 6)[:, 3])
        assert col[N + 3] < 1e-13 * np.max(col[4:])


class TestQPolynomial:
    def test_degree_gamma(self):
        assert q_polynomial(1, "gamma", 0, G, D, E).degree == 2

    def test_degree_zero_exponent_is_short(self):
        # the termination factor for mu = 0 has degree N, one short of N + 1
        assert q_polynomial(1, "zero", 0, G, D, E, check_degree=False).degree == 1
        with pytest.raises(DegreeMismatch):
            q_polynomial(1, "zero", 0, G, D, E)

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_numerator_degree(self, N):
        for mu in ("zero", "gamma"):
            p = q_polynomial(N, mu, 0, G, D, E, form="numerator", check_degree=False)
            assert p.degree == N + 1 + (mu == "gamma")

    def test_center_one(self):
        assert q_polynomial(2, "delta", 1, G, D, E).degree == 3

    def test_monic(self):
        p = q_polynomial(2, "gamma", 0, G, D, E)
        assert p.coeffs[-1] == 1

    def test_unknown_form(self):
        with pytest.raises(ConfigError):
            q_polynomial(1, "gamma", 0, G, D, E, form="other")

    def test_bad_exponent(self):
        with pytest.raises(ConfigError):
            q_polynomial(1, "delta", 0, G, D, E)

    def test_q_zero_reduced_relation(self):
        """At q = 0 only the one-step term survives in the cleared numerators."""
        b, lead, alpha = _q_recurrence(3, G, 0, G, D, E, 6)
        T = local_recurrence(build_eq3(HeunParams(G, D, E, alpha, 0)), 0, G,
                             check_exponent=False).coeff_table(6)
        for n in range(7):
            direct = np.prod([-T[k, 1] for k in range(1, n + 1)])
            assert abs(P.polyval(0, b[n]) - direct) <= 1e-12 * max(1.0, abs(direct))

    @pytest.mark.parametrize("q", [0.7, -1.3 + 0.4j, 1e-3])
    def test_numerator_matches_numeric_recurrence(self, q):
        N = 2
        b, lead, alpha = _q_recurrence(N, G, 0, G, D, E, N + 1)
        exact = P.polyval(q, b[N + 1]) / np.prod([P.polyval(q, lead[k]) for k in range(1, N + 2)])
        rec = local_recurrence(build_eq3(HeunParams(G, D, E, alpha, q)), 0, G)
        numeric = run_recurrence(rec, N + 1).coeffs[N + 1]
        # leading coefficients carry a factor q, so roundoff grows like 1/|q|
        assert abs(exact - numeric) < 1e-12 * max(1, 1 / abs(q)) * abs(numeric)

    def test_scaling_of_a0(self):
        b, _, _ = _q_recurrence(2, G, 0, G, D, E, 3)
        scaled = 3.7 - 2j
        monic = lambda c: c / c[-1]
        np.testing.assert_allclose(monic(scaled * b[3]), monic(b[3]), rtol=1e-15)


class TestSolveRoots:
    def test_square(self):
        roots = np.sort(np.real(solve_roots(QPolynomial((-1, 0, 1)))))
        np.testing.assert_allclose(roots, [-1, 1], atol=1e-14)

    def test_triple_root(self):
        p = QPolynomial(tuple(complex(c) for c in P.polyfromroots([2, 2, 2])))
        assert all(abs(r - 2) < 1e-4 for r in solve_roots(p))

    def test_planted_roots(self, rng):
        planted = rng.uniform(-2, 2, 6) + 1j * rng.uniform(-2, 2, 6)
        p = QPolynomial(tuple(complex(c) for c in P.polyfromroots(planted)))
        got = solve_roots(p)
        for r in planted:
            assert min(abs(r - g) for g in got) < 1e-9

    def test_residual(self):
        p = q_polynomial(3, "gamma", 0, G, D, E)
        scale = max(abs(c) for c in p.coeffs)
        assert all(abs(p(r)) < 1e-10 * scale for r in solve_roots(p))


class TestCertify:
    def test_roots_certify(self):
        for r in solve_roots(q_polynomial(1, "gamma", 0, G, D, E)):
            cert = certify(1, "gamma", 0, G, D, E, r)
            assert cert.passed
            assert max(cert.a_tail_norms) < 1e-9 and cert.max_residual < 1e-9
            assert cert.a_last > 1e-6

    def test_perturbed_root_fails(self):
        r = solve_roots(q_polynomial(1, "gamma", 0, G, D, E))[0]
        with pytest.raises(CertificationFailed):
            certify(1, "gamma", 0, G, D, E, r + 1e-3)

    def test_report_without_raising(self):
        r = solve_roots(q_polynomial(1, "gamma", 0, G, D, E))[0]
        assert not certify(1, "gamma", 0, G, D, E, r + 1e-3, raise_on_fail=False).passed

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_away_from_roots_no_termination(self, N):
        roots = solve_roots(q_polynomial(N, "gamma", 0, G, D, E))
        for q in (0.37 + 0.91j, -2.2, 3.1 - 0.5j):
            assert min(abs(q - r) for r in roots) > 0.1
            assert tail_ratio(N, "gamma", 0, G, D, E, q) > 1e-3

    def test_to_json(self):
        r = solve_roots(q_polynomial(1, "gamma", 0, G, D, E))[0]
        data = certify(1, "gamma", 0, G, D, E, r).to_json()
        assert set(data) == {"q", "epsilon", "a_last", "a_tail_norms", "max_residual", "passed"}
        json.dumps(data)


class TestFourTermReport:
    @pytest.mark.parametrize("N", [1, 2])
    def test_gamma_clean(self, N):
        res = four_term_termination(N, "gamma", 0, G, D, E)
        assert res.count_found == res.count_expected == N + 1
        assert res.flags == []

    def test_zero_exponent_flagged(self):
        res = four_term_termination(1, "zero", 0, G, D, E)
        assert res.count_found == 1
        assert set(res.flags) == {"DegreeMismatch", "CountMismatch"}
        assert res.extra["numerator_degree"] == 2

    def test_json_schema(self):
        out = four_term_termination(1, "gamma", 0, G, D, E).to_json()
        for key in ("N", "mu", "alpha", "roots", "certificates", "count_expected", "count_found"):
            assert key in out
        json.dumps(out)


class TestSecondTypeNonTermination:
    def test_trailing_constant(self, rng):
        for _ in range(10):
            v = rng.uniform(-2, 2, 5) + 1j * rng.uniform(-2, 2, 5)
            p = HeunParams(*v)
            ode, _, _ = build_eq25(p)
            T = local_recurrence(ode, 0, 0).coeff_table(20)
            e = p.epsilon
            assert np.all(T[5:, 5] == -(e * e) / 4)
            assert np.all(T[5:, 5] != 0)


@pytest.fixture(scope="module")
def obj():
    r = solve_roots(q_polynomial(1, "gamma", 0, G, D, E))[0]
    return finite_sum_solution(1, "gamma", 0, G, D, E, r)


class TestFiniteSum:
    def test_structure(self, obj):
        assert len(obj["basis"]) == 2
        assert len(obj["coeffs"]) == 2
        assert obj["certificate"]["passed"]

    def test_round_trip_bit_identical(self, obj):
        text = json.dumps(obj)
        assert evaluate_finite_sum(text, 0.5) == evaluate_finite_sum(obj, 0.5)

    def test_matches_expansion(self, obj):
        params = HeunParams(**{k: complex(*v) for k, v in obj["params"].items()})
        spec = make_spec(obj["kind"], params, None, complex(*obj["mu"]))
        for z in np.linspace(0.05, 0.95, 10):
            ref = eval_expansion(spec, z, 2).value
            assert abs(evaluate_finite_sum(obj, z) - ref) <= 1e-12 * abs(ref)

    def test_center_one(self):
        r = solve_roots(q_polynomial(1, "delta", 1, G, D, E))[0]
        obj = finite_sum_solution(1, "delta", 1, G, D, E, r)
        assert obj["kind"] == "type1beta1"
        assert np.isfinite(evaluate_finite_sum(obj, 0.3))


class TestFiveTerm:
    def test_mu_two_small_grid_certifies(self):
        res = five_term_termination(1, 2, G, D, grid=12)
        assert res.count_expected == 6
        assert 0 < res.count_found <= 6
        for c in res.certificates:
            assert c.passed and c.max_residual < 1e-8

    def test_mu_zero_is_a_curve(self):
        res = five_term_termination(1, 0, G, D, grid=8)
        assert res.count_expected == 1
        assert "NotZeroDimensional" in res.flags

    def test_spurious_pair_fails(self):
        res = five_term_termination(1, 2, G, D, grid=12)
        q, eps = res.roots[0]
        cert = certify_five_term(1, 2, G, D, q + 1e-3, eps)
        assert not cert.passed

    @pytest.mark.slow
    def test_mu_two_full_grid(self):
        res = five_term_termination(1, 2, G, D)
        assert res.count_found == 6
        assert res.flags == []
