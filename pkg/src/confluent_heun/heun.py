"""The confluent Heun equation, its reference solutions and auxiliary ODEs.

The equation is taken in the form

    u'' + (gamma/z + delta/(z-1) + epsilon) u' + (alpha z - q)/(z(z-1)) u = 0,

with epsilon and alpha independent.  Two reference solvers are provided
that share no code: a Frobenius series at z = 0 driven by its own explicit
three-term recurrence, and an adaptive Runge-Kutta integrator along
straight-line paths.
"""
from dataclasses import dataclass, fields
import cmath

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import solve_ivp

from ._validation import as_complex, as_complex_array, check_count, nonpositive_integer
from .errors import (
    AlphaZero,
    AtSingularity,
    BranchAmbiguity,
    EpsilonZero,
    IndicialDegeneracy,
    NoConvergence,
    OutsideRadius,
    PathTooCloseToSingularity,
    StepUnderflow,
)
from .frobenius import PolyOde
from .special import SeriesDiagnostics

SINGULAR_CLEARANCE = 1e-3


@dataclass(frozen=True)
class HeunParams:
    gamma: complex
    delta: complex
    epsilon: complex
    alpha: complex
    q: complex

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, as_complex(getattr(self, f.name), f.name))

    @property
    def z0(self):
        """Apparent singularity q/alpha of the derivative equation."""
        if self.alpha == 0:
            raise AlphaZero("z0 = q/alpha is undefined for alpha = 0")
        return self.q / self.alpha

    def replace(self, **changes):
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return HeunParams(**values)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def heun_coefficients(params, z):
    """(p, r) in u'' + p u' + r u = 0."""
    g, d, e, a, q = params.gamma, params.delta, params.epsilon, params.alpha, params.q
    return g / z + d / (z - 1) + e, (a * z - q) / (z * (z - 1))


def heun_residual(params, z, u, du, d2u):
    z = as_complex(z, "z")
    if z == 0 or z == 1:
        raise AtSingularity(f"the equation is singular at z={z}")
    p, r = heun_coefficients(params, z)
    return d2u + p * du + r * u


# --- Frobenius oracle ------------------------------------------------------

@dataclass(frozen=True)
class OracleSolution:
    params: HeunParams
    exponent: complex
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=complex).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)


def frobenius_heun(params, exponent_choice="zero", n_terms=200):
    """Local solution ``z**rho * sum c_k z**k`` at the origin, ``c_0 = 1``.

    ``exponent_choice`` is ``"zero"`` (rho = 0) or ``"one_minus_gamma"``.
    """
    n_terms = check_count(n_terms, "n_terms", 1)
    g, d, e, a, q = params.gamma, params.delta, params.epsilon, params.alpha, params.q
    if exponent_choice == "zero":
        rho = 0j
        if nonpositive_integer(g) is not None:
            raise IndicialDegeneracy(f"gamma={g} gives a logarithmic second solution")
    elif exponent_choice == "one_minus_gamma":
        rho = 1 - g
        if nonpositive_integer(2 - g) is not None:
            raise IndicialDegeneracy(f"2 - gamma = {2 - g} is a non-positive integer")
    else:
        raise ValueError(f"unknown exponent choice {exponent_choice!r}")
    c = np.zeros(n_terms, dtype=complex)
    c[0] = 1
    for m in range(1, n_terms):
        k = m - 1 + rho
        rhs = c[m - 1] * (k * (m + rho - 2) + (g + d - e) * k - q)
        if m >= 2:
            rhs += c[m - 2] * (e * (m - 2 + rho) + a)
        c[m] = rhs / ((m + rho) * (m + rho - 1 + g))
    return OracleSolution(params, rho, c)


def eval_oracle_derivs(sol, z, tol=1e-15):
    """(u, u', u'', diagnostics) of an oracle series at ``z``."""
    z = as_complex(z, "z")
    if abs(z) >= 1:
        raise OutsideRadius(f"oracle series needs |z| < 1, got |z|={abs(z):.6g}")
    c = sol.coeffs
    rho = sol.exponent
    n = np.arange(len(c))
    if z == 0:
        if rho == 0:
            return complex(c[0]), complex(c[1]) if len(c) > 1 else 0j, \
                complex(2 * c[2]) if len(c) > 2 else 0j, SeriesDiagnostics(1, 0.0, True)
        if rho.real > 0:
            return 0j, complex("nan"), complex("nan"), SeriesDiagnostics(1, 0.0, True)
        raise AtSingularity("oracle branch is singular at z=0")
    zn = z ** n
    terms = c * zn
    s0 = complex(np.sum(terms))
    s1 = complex(np.sum(c[1:] * n[1:] * zn[:-1])) if len(c) > 1 else 0j
    s2 = complex(np.sum(c[2:] * n[2:] * (n[2:] - 1) * zn[:-2])) if len(c) > 2 else 0j
    tail = np.abs(terms[-2:])
    converged = bool(np.all(tail < tol * (1 + abs(s0)))) or not np.any(c[-2:])
    diag = SeriesDiagnostics(len(c), float(tail[-1]), converged)
    if rho == 0:
        return s0, s1, s2, diag
    zr = cmath.exp(rho * cmath.log(z))
    u = zr * s0
    du = zr * (s1 + rho * s0 / z)
    d2u = zr * (s2 + 2 * rho * s1 / z + rho * (rho - 1) * s0 / z ** 2)
    return u, du, d2u, diag


def eval_oracle(sol, z, *, strict=True):
    """Value of the truncated oracle series at ``z`` with diagnostics."""
    u, _, _, diag = eval_oracle_derivs(sol, z)
    if strict and not diag.converged:
        raise NoConvergence(
            f"oracle series not converged at z={z} with {diag.terms_used} terms "
            f"(last term {diag.last_term_magnitude:.3e})"
        )
    return u, diag


# --- path integrator ------------------------------------------------------

def _segment_clearance(za, zb, point):
    d = zb - za
    if d == 0:
        return abs(za - point)
    t = ((point - za) * d.conjugate()).real / abs(d) ** 2
    t = min(1.0, max(0.0, t))
    return abs(za + t * d - point)


def integrate_heun(params, path, init, *, rtol=1e-13, atol=1e-15):
    """Integrate the equation along straight segments joining ``path``.

    Returns a list of ``(z, u, du)`` at every waypoint, starting with the
    initial data.
    """
    pts = as_complex_array(path, "path")
    if len(pts) < 1:
        raise ValueError("path needs at least one waypoint")
    u0, du0 = (as_complex(v, "init") for v in init)
    for za, zb in zip(pts[:-1], pts[1:]):
        for sing in (0, 1):
            if _segment_clearance(complex(za), complex(zb), sing) < SINGULAR_CLEARANCE:
                raise PathTooCloseToSingularity(
                    f"segment {complex(za)} -> {complex(zb)} passes within "
                    f"{SINGULAR_CLEARANCE} of z={sing}"
                )
    out = [(complex(pts[0]), u0, du0)]
    y = np.array([u0, du0], dtype=complex)
    for za, zb in zip(pts[:-1], pts[1:]):
        za, zb = complex(za), complex(zb)
        dz = zb - za

        def rhs(t, yy, za=za, dz=dz):
            z = za + t * dz
            p, r = heun_coefficients(params, z)
            return np.array([yy[1], -p * yy[1] - r * yy[0]]) * dz

        sol = solve_ivp(rhs, (0.0, 1.0), y, method="DOP853", rtol=rtol, atol=atol)
        if sol.status != 0:
            raise StepUnderflow(f"integration failed on {za} -> {zb}: {sol.message}")
        y = sol.y[:, -1]
        out.append((zb, complex(y[0]), complex(y[1])))
    return out


# --- auxiliary equations --------------------------------------------------

def build_eq3(params, *, allow_alpha_zero=False):
    """Polynomial form of the equation obeyed by v = z**gamma (z-1)**delta u'.

    The rational form is cleared with ``alpha * z (z-1) (z - z0)``, which keeps
    every coefficient polynomial in q and alpha and stays meaningful at
    alpha = 0 (z0 at infinity).
    """
    g, d, e, a, q = params.gamma, params.delta, params.epsilon, params.alpha, params.q
    if a == 0 and not allow_alpha_zero:
        raise AlphaZero("the derivative equation needs alpha != 0 (z0 = q/alpha)")
    if a == 0 and q == 0:
        raise AlphaZero("alpha = q = 0: the derivative equation degenerates")
    zz = np.array([0, 1], dtype=complex)
    zm1 = np.array([-1, 1], dtype=complex)
    lin = np.array([-q, a], dtype=complex)          # alpha z - q
    zzm1 = P.polymul(zz, zm1)
    A = P.polymul(zzm1, lin)
    B = P.polyadd(P.polyadd((1 - g) * P.polymul(zm1, lin), (1 - d) * P.polymul(zz, lin)),
                  P.polysub(e * A, a * zzm1))
    C = np.array([
        q * (q + e - g * e),
        a * g * e - q * (2 * a + e * (2 - d - g)),
        a * (a - (d + g - 1) * e),
    ], dtype=complex)
    return PolyOde(_pad(A, 4), _pad(B, 4), _pad(C, 3))


def pi_eq23(params):
    """Coefficients (ascending) of the quadratic in the w-equation, u = exp(-eps z/2) w."""
    g, d, e, a, q = params.gamma, params.delta, params.epsilon, params.alpha, params.q
    return np.array([(2 * g * e - 4 * q) / 4, (4 * a - 2 * (g + d) * e + e * e) / 4, -e * e / 4],
                    dtype=complex)


def eq23_roots(params):
    """Roots z1, z2 of the quadratic, ordered by (real, imag)."""
    c0, c1, c2 = pi_eq23(params)
    if c2 == 0:
        raise EpsilonZero("the quadratic degenerates for epsilon = 0")
    disc = cmath.sqrt(c1 * c1 - 4 * c2 * c0)
    sgn = 1 if (c1.conjugate() * disc).real >= 0 else -1
    t = -(c1 + sgn * disc) / 2
    r1 = t / c2
    r2 = c0 / t if t != 0 else -c1 / c2 - r1
    return tuple(sorted((r1, r2), key=lambda w: (w.real, w.imag)))


def build_eq25(params):
    """Polynomial form of the derivative equation after u = exp(-eps z/2) w.

    Returns ``(ode, z1, z2)``; the ODE itself is assembled from the symmetric
    functions of z1, z2 so no root-finding error enters its coefficients.
    """
    g, d, e = params.gamma, params.delta, params.epsilon
    if e == 0:
        raise EpsilonZero("the second-type expansions need epsilon != 0")
    c0, c1, c2 = pi_eq23(params)
    p0 = -e * e / 4
    quad = np.array([c0 / p0, c1 / p0, 1], dtype=complex)   # (z - z1)(z - z2)
    quad[2] = 1
    zz = np.array([0, 1], dtype=complex)
    zm1 = np.array([-1, 1], dtype=complex)
    zzm1 = P.polymul(zz, zm1)
    A = P.polymul(zzm1, quad)
    dquad = np.array([quad[1], 2], dtype=complex)           # 2z - (z1 + z2)
    B = P.polyadd(P.polyadd((1 - g) * P.polymul(zm1, quad), (1 - d) * P.polymul(zz, quad)),
                  -P.polymul(zzm1, dquad))
    C = p0 * P.polymul(quad, quad)
    z1, z2 = eq23_roots(params)
    return PolyOde(_pad(A, 5), _pad(B, 5), _pad(C, 5)), z1, z2


def _pad(p, n):
    out = np.zeros(n, dtype=complex)
    p = np.asarray(p, dtype=complex)[:n]
    out[: len(p)] = p
    return out


def v_from_u(params, z, du, *, convention="principal"):
    """v = z**gamma (z-1)**delta u'.

    ``convention="interval"`` uses ``(1-z)**delta`` instead, the natural real
    choice on 0 < z < 1; it differs from the principal form by a constant.
    """
    z = as_complex(z, "z")
    g, d = params.gamma, params.delta
    if du == 0:
        return 0j
    if convention == "interval":
        base = 1 - z
    elif convention == "principal":
        base = z - 1
        if base.imag == 0 and base.real < 0 and d != 0 and not d.imag == 0 == d.real % 1:
            raise BranchAmbiguity(f"z - 1 = {base} lies on the branch cut of w**delta")
    else:
        raise ValueError(f"unknown convention {convention!r}")
    if z.imag == 0 and z.real < 0 and g != 0 and not g.imag == 0 == g.real % 1:
        raise BranchAmbiguity(f"z = {z} lies on the branch cut of z**gamma")
    if z == 0 or base == 0:
        raise AtSingularity("v is evaluated at a singular point")
    return cmath.exp(g * cmath.log(z) + d * cmath.log(base)) * du
