"""Termination of the first-type expansions into finite sums.

A first-type series stops after the term a_N when the trailing recurrence
coefficient vanishes at n = N + 3 (which fixes alpha) and a_{N+1} and
a_{N+2} vanish.  For expansions at 0 or 1 the second condition is a single
polynomial equation in q; at the apparent singularity z0 = q/alpha both q and
epsilon are unknown and the system is solved numerically.
"""
from dataclasses import dataclass, field
import itertools
import json

import numpy as np
from numpy.polynomial import polynomial as P

from ._validation import as_complex, check_count
from .errors import (
    CertificationFailed,
    ConfigError,
    DegreeMismatch,
    EpsilonZero,
    HeunError,
    IndicialDegeneracy,
    NoConvergence,
)
from .expansions import eval_expansion, expansion_residual, make_spec
from .frobenius import local_recurrence, run_recurrence, taylor_shift
from .heun import HeunParams, build_eq3

CERT_TOL = 1e-9
FIVE_TERM_TOL = 1e-8
DEDUPE_TOL = 1e-6
CERT_POINTS = np.linspace(0.05, 0.95, 7)


def alpha_condition(N, mu, gamma, delta, epsilon):
    """alpha forcing the trailing coefficient to vanish at the last term N."""
    N = check_count(N, "N", 0)
    mu, gamma, delta, epsilon = (as_complex(v, k) for v, k in
                                 ((mu, "mu"), (gamma, "gamma"), (delta, "delta"),
                                  (epsilon, "epsilon")))
    if epsilon == 0:
        raise EpsilonZero("with epsilon = 0 the condition needs alpha = 0 (three-term case)")
    return -epsilon * (1 + N - gamma - delta + mu)


# --- exact polynomial arithmetic in q -------------------------------------

def _bivariate_eq3(gamma, delta, epsilon, alpha):
    """A, B, C of the cleared derivative equation as arrays [z_power, q_power]."""
    g, d, e, a = gamma, delta, epsilon, alpha

    def zq(*rows):
        out = np.zeros((4, 3), dtype=complex)
        for i, row in enumerate(rows):
            out[i, : len(row)] = row
        return out

    zz1 = np.array([0, -1, 1], dtype=complex)           # z(z-1)
    lin = zq([0, -1], [a])                               # alpha z - q
    A = _mul_z(zz1, lin)
    B = ((1 - g) * _mul_z(np.array([-1, 1], complex), lin)
         + (1 - d) * _mul_z(np.array([0, 1], complex), lin)
         + e * A)
    B[:3, 0] -= a * zz1
    C = zq([0, e - g * e, 1], [a * g * e, -(2 * a + e * (2 - d - g))],
           [a * (a - (d + g - 1) * e)])
    return A, B, C


def _mul_z(p, biv):
    """Product of a z-polynomial with a bivariate [z, q] array."""
    out = np.zeros((len(p) + biv.shape[0] - 1, biv.shape[1]), dtype=complex)
    for i, c in enumerate(p):
        out[i: i + biv.shape[0]] += c * biv
    return out[:4]


def _shift_bivariate(biv, center):
    return np.stack([taylor_shift(biv[:, k], center) for k in range(biv.shape[1])], axis=1)


def _trim(p, tol=0.0):
    p = np.array(p, dtype=complex)
    scale = np.max(np.abs(p)) if p.size else 0.0
    while len(p) > 1 and abs(p[-1]) <= tol * scale:
        p = p[:-1]
    return p


@dataclass(frozen=True)
class QPolynomial:
    """Monic polynomial in q with ascending coefficients."""

    coeffs: tuple

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, q):
        return complex(P.polyval(q, np.array(self.coeffs)))


def _q_recurrence(N, mu, center, gamma, delta, epsilon, n_last):
    """Cleared numerators b_n(q) with a_n = b_n / prod_{k<=n} lead_k(q)."""
    alpha = alpha_condition(N, mu, gamma, delta, epsilon)
    A, B, C = _bivariate_eq3(gamma, delta, epsilon, alpha)
    A, B, C = (_shift_bivariate(X, center) for X in (A, B, C))
    if np.any(np.abs(A[0]) > 1e-12 * np.max(np.abs(A))):
        raise ConfigError("q_polynomial centers must be singular points (0 or 1)")

    def coeff(n, j):
        m = n - j + mu
        i = j + 1
        out = np.zeros(3, dtype=complex)
        if i < 4:
            out += A[i] * m * (m - 1)
        if i - 1 < 4:
            out += B[i - 1] * m
        if 0 <= i - 2 < 4:
            out += C[i - 2]
        return _trim(out)

    lead = [None] + [coeff(n, 0) for n in range(1, n_last + 1)]
    for n in range(1, n_last + 1):
        if not np.any(lead[n]):
            raise IndicialDegeneracy(f"leading coefficient vanishes identically at n={n}")
    b = [np.array([1 + 0j])]
    for n in range(1, n_last + 1):
        acc = np.zeros(1, dtype=complex)
        for j in range(1, min(4, n + 1)):
            term = P.polymul(coeff(n, j), b[n - j])
            for k in range(n - j + 1, n):
                term = P.polymul(term, lead[k])
            acc = P.polysub(acc, term) if acc.size or term.size else acc
        b.append(_trim(acc))
    return b, lead, alpha


def _strip_root(p, root, tol=1e-11):
    """Divide out (q - root) while it is an exact factor."""
    p = _trim(p)
    while len(p) > 1 and abs(P.polyval(root, p)) <= tol * np.sum(np.abs(p) * max(1, abs(root)) ** np.arange(len(p))):
        quo, rem = P.polydiv(p, np.array([-root, 1]))
        p = _trim(quo)
    return p


def _numerator(N, mu, center, gamma, delta, epsilon, index):
    b, lead, alpha = _q_recurrence(N, mu, center, gamma, delta, epsilon, index)
    spurious = 0j if center == 0 else alpha
    return _trim(_strip_root(b[index], spurious), 1e-13)


def _relative_value(p, r):
    return abs(P.polyval(r, p)) / float(np.sum(np.abs(p) * max(1.0, abs(r)) ** np.arange(len(p))))


def q_polynomial(N, mu_choice, center, gamma, delta, epsilon, *, form="termination",
                 check_degree=True):
    """Monic polynomial in q whose roots terminate the series after a_N.

    ``mu_choice`` is ``"zero"`` or ``"gamma"`` at center 0 and ``"zero"`` or
    ``"delta"`` at center 1.  The coefficients a_n are carried as exact
    polynomial numerators over the cleared leading coefficients, whose own
    factors (q at center 0, q - alpha at center 1) are divided out.

    ``form="numerator"`` returns that numerator of a_{N+1}.  The default
    ``form="termination"`` keeps only the factor it shares with the
    numerator of a_{N+2}, i.e. the q values where both vanish.  The degree
    is checked against N + 1 unless ``check_degree`` is false.
    """
    N = check_count(N, "N", 1)
    gamma, delta, epsilon = (as_complex(v, k) for v, k in
                             ((gamma, "gamma"), (delta, "delta"), (epsilon, "epsilon")))
    center = _center(center)
    mu = _mu_value(mu_choice, center, gamma, delta)
    p1 = _numerator(N, mu, center, gamma, delta, epsilon, N + 1)
    if form == "numerator":
        p = p1
    elif form == "termination":
        p2 = _numerator(N, mu, center, gamma, delta, epsilon, N + 2)
        shared = [r for r in np.roots(p1[::-1]) if _relative_value(p2, r) < 1e-9]
        p = P.polyfromroots(shared) if shared else np.array([1 + 0j])
    else:
        raise ConfigError(f"unknown polynomial form {form!r}")
    p = np.asarray(p, dtype=complex)
    poly = QPolynomial(tuple(complex(c) for c in p / p[-1]))
    if check_degree and poly.degree != N + 1:
        raise DegreeMismatch(f"{form} polynomial for a_{N + 1} has degree {poly.degree} in q, "
                             f"expected {N + 1}", polynomial=poly)
    return poly


def _center(center):
    c = as_complex(center, "center")
    if c not in (0, 1):
        raise ConfigError("four-term termination is posed at center 0 or 1")
    return c


def _mu_value(mu_choice, center, gamma, delta):
    key = str(mu_choice).lower()
    if key in ("zero", "0"):
        return 0j
    if center == 0 and key == "gamma":
        return gamma
    if center == 1 and key == "delta":
        return delta
    raise ConfigError(f"mu choice {mu_choice!r} is not an exponent at center {center}")


def solve_roots(p, *, newton_steps=8):
    """All complex roots of a polynomial, from companion eigenvalues plus Newton."""
    coeffs = np.array(p.coeffs if isinstance(p, QPolynomial) else p, dtype=complex)
    coeffs = _trim(coeffs)
    if len(coeffs) < 2:
        raise ConfigError("polynomial must have degree >= 1")
    roots = np.roots(coeffs[::-1])
    d1 = P.polyder(coeffs)
    polished = []
    for r in roots:
        for _ in range(newton_steps):
            f, df = P.polyval(r, coeffs), P.polyval(r, d1)
            if df == 0:
                break
            step = f / df
            trial = r - step
            if abs(P.polyval(trial, coeffs)) >= abs(f):
                break
            r = trial
        polished.append(complex(r))
    cmax = float(np.max(np.abs(coeffs)))
    for r in polished:
        scale = cmax * max(1.0, abs(r)) ** (len(coeffs) - 1)
        if abs(P.polyval(r, coeffs)) > 1e-10 * scale:
            raise NoConvergence(f"root {r} leaves residual {abs(P.polyval(r, coeffs)):.3e}")
    return sorted(polished, key=lambda r: (r.real, r.imag))


# --- certification ---------------------------------------------------------

@dataclass
class Certificate:
    q: complex
    epsilon: complex
    a_last: float
    a_tail_norms: tuple
    max_residual: float
    passed: bool

    def to_json(self):
        return {"q": _cjson(self.q), "epsilon": _cjson(self.epsilon), "a_last": self.a_last,
                "a_tail_norms": list(self.a_tail_norms), "max_residual": self.max_residual,
                "passed": self.passed}


def _cjson(z):
    z = complex(z)
    return [z.real, z.imag]


def _spec_for(N, mu_choice, center, gamma, delta, epsilon, q):
    gamma, delta, epsilon = (as_complex(v, k) for v, k in
                             ((gamma, "gamma"), (delta, "delta"), (epsilon, "epsilon")))
    center = _center(center)
    mu = _mu_value(mu_choice, center, gamma, delta)
    alpha = alpha_condition(N, mu, gamma, delta, epsilon)
    params = HeunParams(gamma, delta, epsilon, alpha, as_complex(q, "q"))
    kind = "type1beta0" if center == 0 else "type1beta1"
    return make_spec(kind, params, None, mu)


def certify(N, mu_choice, center, gamma, delta, epsilon, q_root, *, tol=CERT_TOL, raise_on_fail=True):
    """Check that q_root really truncates the series after a_N.

    a_{N+1}, a_{N+2}, a_{N+3} are recomputed numerically and must all be
    below ``tol`` times max|a_0..a_N|; the finite sum with N+1 terms and its
    constant must solve the confluent Heun equation at 7 points in (0.05, 0.95).
    """
    spec = _spec_for(N, mu_choice, center, gamma, delta, epsilon, q_root)
    rec = local_recurrence(spec.ode, spec.center, spec.mu)
    a = run_recurrence(rec, N + 3).coeffs
    scale = float(np.max(np.abs(a[: N + 1])))
    tails = tuple(float(abs(a[N + k]) / scale) for k in (1, 2, 3))
    worst = 0.0
    try:
        for z in CERT_POINTS:
            res, sc = expansion_residual(spec, z, N + 1, coeffs=a[: N + 1])
            worst = max(worst, abs(res) / sc)
    except HeunError:
        worst = float("inf")
    a_last = float(abs(a[N]) / scale)
    passed = max(tails) < tol and worst < tol and a_last > 1e-6
    cert = Certificate(complex(q_root), spec.params.epsilon, a_last,
                       tails, float(worst), bool(passed))
    if not passed and raise_on_fail:
        raise CertificationFailed(
            f"q={q_root}: tail norms {tails}, residual {worst:.3e}", certificate=cert)
    return cert


# --- reports ---------------------------------------------------------------

@dataclass
class TerminationResult:
    N: int
    mu: complex
    alpha: object
    roots: list
    certificates: list
    count_expected: int
    count_found: int
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_json(self):
        alpha = (_cjson(self.alpha) if not isinstance(self.alpha, str) else self.alpha)
        roots = []
        for r in self.roots:
            if isinstance(r, tuple):
                roots.append({"q": _cjson(r[0]), "eps": _cjson(r[1])})
            else:
                roots.append({"q": _cjson(r)})
        out = {"N": self.N, "mu": _cjson(self.mu), "alpha": alpha, "roots": roots,
               "certificates": [c.to_json() for c in self.certificates],
               "count_expected": self.count_expected, "count_found": self.count_found,
               "flags": list(self.flags)}
        out.update(self.extra)
        return out


def four_term_termination(N, mu_choice, center, gamma, delta, epsilon):
    """Roots of the termination polynomial with one certificate each.

    Roots of the a_{N+1} numerator that fail certification are listed in the
    report too, so a degree shortfall is visible rather than hidden.
    """
    center = _center(center)
    gamma, delta, epsilon = (as_complex(v, k) for v, k in
                             ((gamma, "gamma"), (delta, "delta"), (epsilon, "epsilon")))
    mu = _mu_value(mu_choice, center, gamma, delta)
    term = q_polynomial(N, mu_choice, center, gamma, delta, epsilon, check_degree=False)
    numer = q_polynomial(N, mu_choice, center, gamma, delta, epsilon, form="numerator",
                         check_degree=False)
    roots = solve_roots(term) if term.degree else []
    certs = [certify(N, mu_choice, center, gamma, delta, epsilon, r, raise_on_fail=False)
             for r in roots]
    found = sum(c.passed for c in certs)
    flags = []
    if term.degree != N + 1:
        flags.append("DegreeMismatch")
    if found != N + 1:
        flags.append("CountMismatch")
    extra = {"polynomial": [_cjson(c) for c in term.coeffs],
             "numerator_degree": numer.degree, "termination_degree": term.degree}
    return TerminationResult(N, mu, alpha_condition(N, mu, gamma, delta, epsilon), roots, certs,
                             N + 1, found, flags, extra)


# --- five-term case at the apparent singularity -----------------------------

def _free_unknown(N, mu):
    """At z0 with mu = 0 the coefficient a_2 is free; it is an unknown unless
    N = 1, where a_2 = a_{N+1} itself must vanish."""
    return mu == 0 and N >= 2


def _five_term_tail(N, mu, gamma, delta, q, eps, n_last, a2=0j):
    alpha = alpha_condition(N, mu, gamma, delta, eps)
    params = HeunParams(gamma, delta, eps, alpha, q)
    ode = build_eq3(params)
    rec = local_recurrence(ode, q / alpha, mu, check_exponent=False)
    a = run_recurrence(rec, n_last, free_value=a2).coeffs
    return a, ode, q / alpha


def _five_term_system(N, mu, gamma, delta, x):
    """(a_{N+1}, a_{N+2}) at z0 = q/alpha for x = (q, eps[, a_2]); a lean copy
    of the generic engine path, which certification re-runs independently."""
    q, eps = complex(x[0]), complex(x[1])
    a2 = complex(x[2]) if len(x) > 2 else 0j
    alpha = -eps * (1 + N - gamma - delta + mu)
    if alpha == 0:
        raise ZeroDivisionError("alpha vanishes")
    z0 = q / alpha
    A, B, C = _bivariate_eq3(gamma, delta, eps, alpha)
    qp = np.array([1, q, q * q])
    A, B, C = (taylor_shift(X @ qp, z0) for X in (A, B, C))
    a = [1 + 0j]
    for n in range(1, N + 3):
        rhs = 0j
        lead = 0j
        row_scale = 0.0
        for j in range(0, min(4, n + 1)):
            m = n - j + mu
            i = j + 1
            c = A[i] * m * (m - 1) if i < 4 else 0j
            c += B[i - 1] * m
            if i >= 2:
                c += C[i - 2]
            row_scale = max(row_scale, abs(c))
            if j == 0:
                lead = c
            else:
                rhs -= c * a[n - j]
        if abs(lead) <= 1e-12 * row_scale:
            a.append(a2)        # resonance of the apparent singularity
        else:
            a.append(rhs / lead)
    return np.array([a[N + 1], a[N + 2]])


def _jacobian(fun, x, rel):
    f0 = fun(x)
    J = np.empty((len(f0), len(x)), dtype=complex)
    for k in range(len(x)):
        h = rel * max(1.0, abs(x[k]))
        dx = np.zeros(len(x), dtype=complex)
        dx[k] = h
        J[:, k] = (fun(x + dx) - fun(x - dx)) / (2 * h)
    return f0, J


_FAIL = (HeunError, ZeroDivisionError, FloatingPointError, np.linalg.LinAlgError)


def _newton(fun, x0, steps=60, tol=1e-14):
    """Damped Gauss-Newton with a finite-difference Jacobian; None on failure."""
    x = np.array(x0, dtype=complex)
    for _ in range(steps):
        try:
            f, J = _jacobian(fun, x, 1e-7)
        except _FAIL:
            return None
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(J))) or np.max(np.abs(x)) > 1e6:
            return None
        step = np.linalg.lstsq(J, -f, rcond=1e-12)[0]
        lam = 1.0
        fn = np.linalg.norm(f)
        while lam > 1e-4:
            trial = x + lam * step
            try:
                ft = fun(trial)
            except _FAIL:
                ft = None
            if ft is not None and np.all(np.isfinite(ft)) and np.linalg.norm(ft) < fn:
                break
            lam /= 2
        else:
            return x if fn < tol else None
        x = trial
        if np.linalg.norm(lam * step) < tol * (1 + np.linalg.norm(x)):
            return x
    return x


def _jacobian_rank(fun, x):
    _, J = _jacobian(fun, np.asarray(x, dtype=complex), 1e-6)
    s = np.linalg.svd(J, compute_uv=False)
    return int(np.sum(s > 1e-7 * max(s[0], 1e-300)))


def certify_five_term(N, mu, gamma, delta, q, eps, a2=0j, *, tol=FIVE_TERM_TOL):
    """Tail norms and the polynomial-ODE residual of the finite local sum at z0.

    The finite sum v is a polynomial, so the residual of the derivative
    equation is evaluated with exact derivatives; u then follows by one
    quadrature plus its constant.
    """
    a, ode, z0 = _five_term_tail(N, mu, gamma, delta, q, eps, N + 3, a2)
    scale = float(np.max(np.abs(a[: N + 1])))
    tails = tuple(float(abs(a[N + k]) / scale) for k in (1, 2, 3))
    n = np.arange(N + 1)
    worst = 0.0
    for z in CERT_POINTS:
        w = z - z0
        e = n + mu
        v = np.sum(a[: N + 1] * w ** e)
        dv = np.sum(a[: N + 1] * e * w ** np.maximum(e - 1, 0))
        d2v = np.sum(a[: N + 1] * e * (e - 1) * w ** np.maximum(e - 2, 0))
        A, B, C = (P.polyval(z, X) for X in (ode.A, ode.B, ode.C))
        res = A * d2v + B * dv + C * v
        sc = abs(A * d2v) + abs(B * dv) + abs(C * v) or 1.0
        worst = max(worst, abs(res) / sc)
    a_last = float(abs(a[N]) / scale)
    passed = max(tails) < tol and worst < tol and a_last > 1e-6
    return Certificate(complex(q), complex(eps), a_last, tails, float(worst), bool(passed))


def five_term_termination(N, mu, gamma, delta, *, grid=40, radius=20.0, seed=12345):
    """(q, epsilon) pairs terminating the series at z0 = q/alpha after a_N.

    Damped Gauss-Newton runs from a grid x grid set of complex seeds; the
    distinct limits are certified and counted against N**2 (mu = 0) or
    (N+1)(N+2) (mu = 2).  When the Jacobian at a solution has rank below
    the number of unknowns the solutions are not isolated; this is
    reported as a flag and the count is then only the number of sampled
    points.
    """
    N = check_count(N, "N", 1)
    mu = int(mu)
    if mu not in (0, 2):
        raise ConfigError("mu must be 0 or 2 at the apparent singularity")
    gamma, delta = as_complex(gamma, "gamma"), as_complex(delta, "delta")
    free = _free_unknown(N, mu)
    fun = lambda x: _five_term_system(N, mu, gamma, delta, x)
    rng = np.random.default_rng(seed)

    def seeds(k):
        r = np.exp(rng.uniform(np.log(0.05), np.log(radius), k))
        return r * np.exp(2j * np.pi * rng.uniform(0, 1, k))

    found = []

    def attempt(x0):
        x = _newton(fun, x0)
        if x is None or not np.all(np.isfinite(x)):
            return
        q, e = complex(x[0]), complex(x[1])
        alpha = -e * (1 + N - gamma - delta + mu)
        if abs(e) < 1e-4 or abs(alpha) < 1e-9:
            return                  # the epsilon -> 0 asymptote, not a solution
        z0 = q / alpha
        if abs(z0) < 1e-6 or abs(z0 - 1) < 1e-6 or abs(z0) > 1e3:
            return
        if np.linalg.norm(fun(x)) > 1e-10 * max(1.0, abs(q)) ** 2:
            return
        if any(np.all(np.abs(x - f) <= DEDUPE_TOL * np.maximum(1, np.abs(f))) for f in found):
            return
        found.append(x)

    with np.errstate(all="ignore"):
        extra = seeds(grid) if free else [None]
        for q0, e0 in itertools.product(seeds(grid), seeds(grid)):
            x0 = (q0, e0) if not free else (q0, e0, extra[len(found) % grid])
            attempt(x0)
        if gamma.imag == 0 and delta.imag == 0:
            # real gamma, delta: solutions come in conjugate pairs
            for x in list(found):
                attempt(np.conj(x))
    found.sort(key=lambda x: tuple(round(v, 9) for c in x for v in (c.real, c.imag)))
    certs = [certify_five_term(N, mu, gamma, delta, *x) for x in found]
    ranks = [_jacobian_rank(fun, x) for x in found]
    n_unknowns = 3 if free else 2
    isolated = all(r == n_unknowns for r in ranks)
    expected = N * N if mu == 0 else (N + 1) * (N + 2)
    count = sum(c.passed for c in certs)
    flags = []
    if count != expected:
        flags.append("CountMismatch")
    if not isolated:
        flags.append("NotZeroDimensional")
    if any(not c.passed for c in certs):
        flags.append("CertificationFailed")
    roots = [(complex(x[0]), complex(x[1])) for x in found]
    info = {"zero_dimensional": isolated, "unknowns": n_unknowns}
    if free:
        info["free_a2"] = [_cjson(x[2]) for x in found]
    return TerminationResult(N, complex(mu), "-eps(1+N-gamma-delta+mu)", roots, certs,
                             expected, count, flags, info)


# --- finite sums -----------------------------------------------------------

def finite_sum_solution(N, mu_choice, center, gamma, delta, epsilon, q_root):
    """Serializable closed-form object of a certified finite sum."""
    cert = certify(N, mu_choice, center, gamma, delta, epsilon, q_root)
    spec = _spec_for(N, mu_choice, center, gamma, delta, epsilon, q_root)
    rec = local_recurrence(spec.ode, spec.center, spec.mu)
    a = run_recurrence(rec, N).coeffs
    ev = eval_expansion(spec, 0.5, N + 1, coeffs=a)
    p = spec.params
    if spec.family == "beta0":
        basis = [f"B({1 + n}-gamma+mu, 1-delta; z)" for n in range(N + 1)]
    else:
        basis = [f"(-1)^{n} B(1-gamma, {1 + n}-delta+mu; z)" for n in range(N + 1)]
    return {
        "kind": spec.kind,
        "params": {k: _cjson(v) for k, v in p.as_dict().items()},
        "mu": _cjson(spec.mu),
        "c0": _cjson(ev.c0),
        "coeffs": [_cjson(c) for c in a],
        "basis": basis,
        "certificate": cert.to_json(),
    }


def evaluate_finite_sum(obj, z):
    """Evaluate a finite-sum object (dict or JSON text) at z."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    params = HeunParams(**{k: complex(*v) for k, v in obj["params"].items()})
    spec = make_spec(obj["kind"], params, None, complex(*obj["mu"]))
    a = np.array([complex(*c) for c in obj["coeffs"]])
    return eval_expansion(spec, z, len(a), c0=complex(*obj["c0"]), coeffs=a).value
