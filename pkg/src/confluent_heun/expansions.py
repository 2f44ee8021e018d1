"""Incomplete-Beta and Appell-F1 expansions of confluent Heun solutions.

Every expansion has the shape

    u(z) = g(z) * [C0 + sum_n a_n T_n(z)],

where the a_n are Frobenius coefficients of the derivative equation at the
expansion center and ``T_n' = z**-gamma (1-z)**-delta V_n`` with ``V_n`` the
n-th local power.  First-type kinds have ``g = 1`` and take their a_n from
the derivative equation of u; second-type kinds have ``g = exp(-eps z/2)``
and take them from the derivative equation of ``w = exp(eps z/2) u``.

Basis terms are integrals from the origin with the real-interval branch
``z**-gamma (1-z)**-delta`` on 0 < z < 1, so constant prefactors such as
``(-1)**delta`` are dropped; any constant multiple of a solution is a
solution.  Relative factors between terms, ``(-1)**n`` and ``(-z1)**n``,
are kept literally.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import cmath
import math

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import roots_jacobi

from ._validation import as_complex, check_count, is_integer, nonpositive_integer, term_cap
from .errors import (
    ConditionViolated,
    ConfigError,
    DegenerateGammaDelta,
    EpsilonZero,
    InvalidMu,
    NotAnExponent,
    OutsideDomain,
    ProbeDegenerate,
    ProbesDisagree,
    Unavailable,
)
from .frobenius import local_recurrence, run_recurrence
from .heun import HeunParams, build_eq3, build_eq25, heun_coefficients, pi_eq23
from .special import SeriesDiagnostics, appell_f1, incomplete_beta_array

KINDS = ("type1beta0", "type1beta1", "type1appell", "type2beta0", "type2beta1", "type2appell")
DEFAULT_TERMS = 120
PROBE_RTOL = 1e-8
CONVERGED_RTOL = 1e-13
TERMINATION_RTOL = 1e-12


def _canonical_kind(kind):
    k = str(kind).lower().replace("_", "")
    if k not in KINDS:
        raise ConfigError(f"unknown expansion kind {kind!r}; expected one of {KINDS}")
    return k


@dataclass(frozen=True)
class ExpansionSpec:
    kind: str
    params: HeunParams
    center: complex
    mu: complex
    ode: object = field(repr=False, compare=False)
    roots: tuple = field(default=(), repr=False, compare=False)

    @property
    def second_type(self):
        return self.kind.startswith("type2")

    @property
    def family(self):
        return self.kind[5:]   # beta0 / beta1 / appell


@dataclass(frozen=True)
class EvaluatedExpansion:
    c0: complex
    partial_sums: np.ndarray
    value: complex
    diagnostics: SeriesDiagnostics
    derivative: complex = None
    second_derivative: complex = None


def _resolve_mu(mu, params):
    if isinstance(mu, str):
        key = mu.strip().lower()
        if key in ("gamma", "delta"):
            return getattr(params, key)
        try:
            return as_complex(complex(key), "mu")
        except ValueError as exc:
            raise ConfigError(f"mu must be a number, 'gamma' or 'delta', got {mu!r}") from exc
    return as_complex(mu, "mu")


def make_spec(kind, params, center=None, mu=0):
    """Validate an expansion choice and build its auxiliary ODE."""
    kind = _canonical_kind(kind)
    if not isinstance(params, HeunParams):
        params = HeunParams(**params)
    mu = _resolve_mu(mu, params)
    family = kind[5:]
    if family == "beta0":
        if center not in (None, 0):
            raise ConfigError("beta0 expansions are centred at z = 0")
        center = 0j
    elif family == "beta1":
        if center not in (None, 1):
            raise ConfigError("beta1 expansions are centred at z = 1")
        center = 1 + 0j
    else:
        if center is None:
            raise ConfigError("appell expansions need an explicit center")
        center = as_complex(center, "center")
        if abs(center) < 1e-12 or abs(center - 1) < 1e-12:
            raise ConfigError("appell centers must differ from 0 and 1; use a beta kind")
    roots = ()
    if kind.startswith("type2"):
        if params.epsilon == 0:
            raise EpsilonZero("second-type expansions need epsilon != 0")
        ode, z1, z2 = build_eq25(params)
        roots = (z1, z2)
    else:
        ode = build_eq3(params)
    ode = ode.cancel_common_factors()
    g = params.gamma
    if family == "beta0" and nonpositive_integer(1 - g + mu) is not None:
        raise DegenerateGammaDelta(f"B(1+n-gamma+mu, ...) hits a pole for gamma={g}, mu={mu}")
    if family in ("beta1", "appell") and nonpositive_integer(1 - g) is not None:
        raise DegenerateGammaDelta(f"1 - gamma = {1 - g} is a non-positive integer")
    try:
        local_recurrence(ode, center, mu)
    except NotAnExponent as exc:
        raise InvalidMu(str(exc)) from exc
    if family == "appell" and not is_integer(mu):
        raise InvalidMu(f"appell expansions use integer exponents, got mu={mu}")
    return ExpansionSpec(kind, params, center, mu, ode, roots)


def coefficients(spec, n_terms):
    """a_0..a_{n_terms-1} of the derivative-equation series at the center."""
    n_terms = check_count(n_terms, "n_terms", 1)
    cap = term_cap()
    if n_terms > cap:
        raise ConfigError(f"n_terms={n_terms} exceeds the term cap {cap} (HEUN_MAX_TERMS)")
    rec = local_recurrence(spec.ode, spec.center, spec.mu)
    return _apply_termination(run_recurrence(rec, n_terms - 1).coeffs, rec.bandwidth)


def _apply_termination(a, width, rtol=TERMINATION_RTOL):
    """Zero the tail once width - 1 consecutive coefficients vanish.

    The banded relation then forces every later coefficient to vanish; what
    the forward recurrence produces there is amplified rounding.
    """
    run = width - 1
    mags = np.abs(a)
    prior = np.maximum.accumulate(mags)
    for k in range(1, len(a) - run + 1):
        if np.all(mags[k:k + run] <= rtol * prior[k - 1]):
            out = a.copy()
            out[k:] = 0
            return out
    return a


def c0_closed_form(spec):
    """Constant term where a closed form is known for the chosen kind."""
    p = spec.params
    g, mu = p.gamma, spec.mu
    fam = spec.family
    if fam == "appell":
        raise Unavailable("no closed-form constant for appell expansions; use c0_numeric")
    if fam == "beta0":
        if (1 - g + mu).real <= 0:
            raise ConditionViolated("needs Re(1 - gamma + mu) > 0")
        denom = p.q - (g * p.epsilon / 2 if spec.second_type else 0)
        if denom == 0:
            raise ConditionViolated("closed form divides by zero")
        return -mu / denom
    if (1 - g).real <= 0:
        raise ConditionViolated("needs Re(1 - gamma) > 0")
    return 0j


# --- basis terms ----------------------------------------------------------

def _quad_ok(spec):
    g = spec.params.gamma
    return g.imag == 0 and g.real < 1


def _route(spec, route):
    if spec.family != "appell":
        return "beta"
    if route == "auto":
        if spec.params.delta == 0 or spec.params.gamma == 0:
            return "reduced"
        return "quad" if _quad_ok(spec) else "series"
    if route == "quad" and not _quad_ok(spec):
        raise ConfigError("the quadrature route needs real gamma < 1")
    if route not in ("series", "double", "reduced", "quad"):
        raise ConfigError(f"unknown appell route {route!r}")
    if route == "reduced" and not (spec.params.delta == 0 or spec.params.gamma == 0):
        raise ConfigError("the reduced route needs delta = 0 or gamma = 0")
    return route


def _appell_series_terms(spec, m, z):
    """z**(1-g)/(1-g) F1(1-g; delta, -m; 2-g; z, z/z1) for integer array m.

    Uses F1 = sum_i (delta)_i/i! x**i * a y**(-a-i) B(a+i, m+1; y), a = 1-g,
    the expansion in x of the Euler integral; B is evaluated stably also for
    y beyond 1 because its second parameter is a positive integer.
    """
    g, d = spec.params.gamma, spec.params.delta
    a = 1 - g
    z1 = spec.center
    y = z / z1
    log_shift = cmath.log(z) - cmath.log(y)
    if abs(z) >= 1:
        raise OutsideDomain("appell terms need |z| < 1")
    n_i = 1 if d == 0 else int(min(20000, 40 + math.log(1e-18) / math.log(max(abs(z), 1e-3))))
    i = np.arange(n_i)
    coef = np.ones(n_i, dtype=complex)
    if n_i > 1:
        coef[1:] = np.cumprod((d + i[:-1]) / (i[:-1] + 1))
    keep = np.abs(coef) * abs(z) ** i * (i + 1.0) ** 2 > 1e-300
    i, coef = i[keep], coef[keep]
    B = incomplete_beta_array(a + i[None, :], (m + 1)[:, None].astype(complex), y)
    weights = coef * np.exp((a + i) * log_shift)
    return B @ weights


@lru_cache(maxsize=32)
def _jacobi_rule(n_nodes, gamma):
    """Nodes and weights for the weight s**-gamma on [0, 1]."""
    x, w = roots_jacobi(n_nodes, 0.0, -gamma)
    return (x + 1) / 2, w * 2.0 ** (gamma - 1)


def _appell_quad_terms(spec, m, z):
    """z**(1-g)/(1-g) F1(1-g; delta, -m; 2-g; z, z/z1) by Gauss-Jacobi quadrature.

    With t = z s the Euler integral is z**(1-g) times the integral of
    s**-g (1 - z s)**-delta (1 - z s/z1)**m over [0, 1]; the polynomial
    part is integrated exactly and (1 - z s)**-delta is analytic for |z| < 1.
    """
    if abs(z) >= 1:
        raise OutsideDomain("appell terms need |z| < 1")
    g, d = spec.params.gamma.real, spec.params.delta
    z1 = spec.center
    # fixed per term count so the rule (and its rounding) is smooth in z
    n_nodes = 16 * (int(max(m)) // 32 + 1) + 80
    s, w = _jacobi_rule(n_nodes, g)
    base = np.exp(-d * np.log(1 - z * s)) * w
    t = 1 - z * s / z1
    powers = np.exp(np.outer(m, np.log(t.astype(complex))))
    return cmath.exp((1 - g) * cmath.log(z)) * (powers @ base)


def _basis(spec, z, n_terms, route="auto"):
    """(T_n(z), V_n(z), V_n'(z)) for n = 0..n_terms-1."""
    p, mu = spec.params, spec.mu
    g, d = p.gamma, p.delta
    n = np.arange(n_terms)
    fam = spec.family
    z = complex(z)
    if fam == "beta0":
        T = incomplete_beta_array(1 + n - g + mu, 1 - d, z)
        e = n + mu
        V = np.exp(e * cmath.log(z))
        dV = e * np.exp((e - 1) * cmath.log(z))
        return T, V, dV
    if fam == "beta1":
        sign = (-1.0) ** n
        T = sign * incomplete_beta_array(1 - g, 1 + n - d + mu, z)
        e = n + mu
        lz = cmath.log(1 - z)
        V = sign * np.exp(e * lz)
        dV = -sign * e * np.exp((e - 1) * lz)
        return T, V, dV
    z1 = spec.center
    mi = int(round(mu.real))
    m = n + mi
    s = 1 - z / z1
    V = (z - z1) ** n * s ** mi
    dV = np.where(m > 0, m * (-z1) ** n * s ** np.maximum(m - 1, 0) * (-1 / z1), 0)
    r = _route(spec, route)
    if r == "quad":
        T = (-z1) ** n * _appell_quad_terms(spec, m, z)
    elif r == "series":
        T = (-z1) ** n * _appell_series_terms(spec, m, z)
    elif r == "double":
        a = 1 - g
        pref = cmath.exp(a * cmath.log(z)) / a
        T = np.array([(-z1) ** k * pref * appell_f1(a, d, -int(mk), 1 + a, z, z / z1)[0]
                      for k, mk in zip(n, m)])
    elif d == 0:
        y = z / z1
        a = 1 - g
        pref = cmath.exp(a * (cmath.log(z) - cmath.log(y)))
        T = (-z1) ** n * pref * incomplete_beta_array(a, 1 + m, y)
    else:
        # gamma = 0: integrals taken from z1, constant offsets are absorbed by C0
        x = (z - z1) / (1 - z1)
        pref = (-z1) ** (-mi) * cmath.exp((mi + 1 - d) * cmath.log(1 - z1))
        T = pref * (1 - z1) ** n * incomplete_beta_array(1 + m, 1 - d, x)
    return T, V, dV


def _prefactor_logs(spec, z):
    """log of z**-gamma (1-z)**-delta and its derivative."""
    g, d = spec.params.gamma, spec.params.delta
    lg = -g * cmath.log(z) - d * cmath.log(1 - z)
    dlg = -g / z + d / (1 - z)
    return lg, dlg


def _operator(spec, z):
    """(p, r) of the operator the bracketed sum must satisfy at z."""
    p = spec.params
    if spec.second_type:
        c = pi_eq23(p)
        return (p.gamma / z + p.delta / (z - 1),
                P.polyval(z, c) / (z * (z - 1)))
    return heun_coefficients(p, z)


def _term_data(spec, z, n_terms, route):
    """Per-term values, first and second derivatives at z."""
    z = as_complex(z, "z")
    if z == 0 or z == 1:
        raise OutsideDomain("expansions are evaluated away from z = 0, 1")
    T, V, dV = _basis(spec, z, n_terms, route)
    lg, dlg = _prefactor_logs(spec, z)
    gz = cmath.exp(lg)
    dT = gz * V
    d2T = gz * (dlg * V + dV)
    return T, dT, d2T


def _residual_contributions(spec, a, z, route):
    """a_n L[T_n](z) and the coefficient r(z) of the constant term."""
    T, dT, d2T = _term_data(spec, z, len(a), route)
    p, r = _operator(spec, z)
    return a * (d2T + p * dT + r * T), r


def c0_numeric(spec, probe_z=None, N=DEFAULT_TERMS, *, second_probe=None, route="auto",
               coeffs=None, cumulative=False):
    """Constant term from the residual, which is linear in it, at a probe point.

    The value is cross-checked at a second probe.  With ``cumulative=True``
    the array of constants for every truncation 1..N is returned.
    """
    a = coefficients(spec, N) if coeffs is None else coeffs
    p1, p2 = _default_probes(spec) if probe_z is None else (
        as_complex(probe_z, "probe_z"),
        as_complex(second_probe, "second_probe") if second_probe is not None
        else _default_probes(spec, avoid=as_complex(probe_z, "probe_z"))[1])
    out = []
    for pz in (p1, p2):
        contrib, r = _residual_contributions(spec, a, pz, route)
        scale = float(np.max(np.abs(contrib))) or 1.0
        if abs(r) < 1e-12 * scale:
            raise ProbeDegenerate(f"constant term drops out of the residual at z={pz}")
        out.append(-np.cumsum(contrib) / r)
    c1, c2 = out[0][-1], out[1][-1]
    if abs(c1 - c2) > PROBE_RTOL * max(abs(c1), abs(c2), _c0_floor(spec)):
        raise ProbesDisagree(f"probes give C0 = {c1} and {c2}")
    return out[0] if cumulative else complex(c1)


def _c0_floor(spec):
    p = spec.params
    return 1e-3 * max(1.0, abs(spec.mu) / max(abs(p.q), 1e-300))


def radius_estimate(spec):
    """Distance from the center to the nearest other singular point of the ODE."""
    pts = [0j, 1 + 0j]
    try:
        pts += [complex(r) for r in spec.ode.singular_points()]
    except np.linalg.LinAlgError:
        pass
    dist = [abs(p - spec.center) for p in pts if abs(p - spec.center) > 1e-9]
    return min(dist) if dist else 1.0


def _constant_zeros(spec):
    """Points where the constant term drops out of the residual."""
    p = spec.params
    if spec.second_type:
        return [complex(r) for r in P.polyroots(pi_eq23(p))]
    return [p.q / p.alpha] if p.alpha != 0 else []


def _default_probes(spec, avoid=None):
    c = spec.center
    R = radius_estimate(spec)
    if spec.family == "beta0":
        direction = 1
    elif spec.family == "beta1":
        direction = -1
    else:
        direction = (0.5 - c) / abs(0.5 - c) if abs(0.5 - c) > 1e-9 else -1
    bad = _constant_zeros(spec) + ([avoid] if avoid is not None else [])
    probes = [c + f * R * direction for f in (0.3, 0.45, 0.2, 0.38, 0.25, 0.15)]
    probes = [pz for pz in probes if all(abs(pz - b) > 0.04 * R for b in bad)]
    return probes[0], probes[1]


def eval_expansion(spec, z, N=DEFAULT_TERMS, *, c0="auto", route="auto", probe_z=None,
                   coeffs=None):
    """Evaluate the truncated expansion at ``z``.

    ``c0`` may be ``"auto"`` (closed form for beta0 kinds when its condition
    holds, the residual solve otherwise), ``"closed"``, ``"numeric"``, an explicit number, or an array with the
    constant for every truncation (as returned by ``c0_numeric(...,
    cumulative=True)``).  With a
    numeric constant the partial sums re-solve it at every truncation, so
    they converge together with the z-dependent part.
    """
    N = check_count(N, "N", 1)
    z = as_complex(z, "z")
    a = coefficients(spec, N) if coeffs is None else coeffs
    T, dT, d2T = _term_data(spec, z, len(a), route)
    S = np.cumsum(a * T)
    if isinstance(c0, str):
        mode = c0
        if mode == "auto":
            mode = "numeric"
            if spec.family == "beta0":
                try:
                    c0_closed_form(spec)
                    mode = "closed"
                except ConditionViolated:
                    pass
        if mode == "closed":
            c0_arr = np.full(len(a), c0_closed_form(spec))
        elif mode == "numeric":
            c0_arr = c0_numeric(spec, probe_z, len(a), route=route, coeffs=a, cumulative=True)
        elif mode != "closed":
            raise ConfigError(f"unknown c0 mode {c0!r}")
    elif np.ndim(c0) == 1:
        c0_arr = np.asarray(c0, dtype=complex)
        if len(c0_arr) != len(a):
            raise ConfigError("a c0 array needs one entry per truncation")
    else:
        c0_arr = np.full(len(a), as_complex(c0, "c0"))
    pref = cmath.exp(-spec.params.epsilon * z / 2) if spec.second_type else 1
    partial = pref * (c0_arr + S)
    value = complex(partial[-1])
    C0 = complex(c0_arr[-1])
    inner = C0 + S[-1]
    d_inner = complex(np.sum(a * dT))
    d2_inner = complex(np.sum(a * d2T))
    if spec.second_type:
        h = -spec.params.epsilon / 2
        du = pref * (d_inner + h * inner)
        d2u = pref * (d2_inner + 2 * h * d_inner + h * h * inner)
    else:
        du, d2u = d_inner, d2_inner
    steps = np.abs(np.diff(partial)) if len(partial) > 1 else np.array([0.0])
    tol = CONVERGED_RTOL * (1 + abs(value))
    tail = steps[-2:]
    converged = bool(np.all(tail <= tol))
    # terms needed: one past the last step that still moved the sum
    moving = np.flatnonzero(steps > tol)
    used = int(moving[-1]) + 2 if len(moving) else 1
    diag = SeriesDiagnostics(used, float(tail[-1]), converged)
    return EvaluatedExpansion(C0, partial, value, diag, du, d2u)


def expansion_residual(spec, z, N=DEFAULT_TERMS, **kw):
    """Residual of the confluent Heun equation for the expansion at z, using
    the exact derivatives of the truncated sum."""
    ev = eval_expansion(spec, z, N, **kw)
    p, r = heun_coefficients(spec.params, complex(z))
    res = ev.second_derivative + p * ev.derivative + r * ev.value
    scale = abs(ev.second_derivative) + abs(p * ev.derivative) + abs(r * ev.value)
    return res, scale


def empirical_domain(spec, ray_angle=0.0, *, N=DEFAULT_TERMS, r_max=2.0, iterations=30):
    """Largest radius along a ray from the center where the partial sums still
    decay geometrically (ratio below 0.98 over the last 20 terms, for three
    successive windows).  Returns ``math.inf`` for a terminating series."""
    a = coefficients(spec, N)
    nz = np.flatnonzero(np.abs(a) > 1e-14 * np.max(np.abs(a)))
    if nz[-1] < N - 4:
        return math.inf
    direction = cmath.exp(1j * ray_angle)

    def ok(r):
        z = spec.center + r * direction
        try:
            ev = eval_expansion(spec, z, N, coeffs=a)
        except Exception:
            return False
        d = np.abs(np.diff(ev.partial_sums))
        if not np.all(np.isfinite(d)):
            return False
        floor = 1e-15 * (1 + abs(ev.value))
        for end in (len(d), len(d) - 5, len(d) - 10):
            lo, hi = d[end - 21], d[end - 1]
            if hi <= floor:
                continue
            if lo <= 0 or (hi / lo) ** (1 / 20) >= 0.98:
                return False
        return True

    lo, hi = 0.0, r_max
    if ok(hi):
        return hi
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo
