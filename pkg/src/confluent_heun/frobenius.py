"""Local Frobenius machinery for second-order ODEs with polynomial coefficients.

An ODE ``A v'' + B v' + C v = 0`` is shifted to the local variable
``w = z - center``; substituting ``v = w**mu * sum(a_n w**n)`` then gives a
banded recurrence whose coefficients follow directly from the shifted
polynomial coefficients.  Nothing about a particular equation is hard-coded
here: the four-, five- and six-term relations of the confluent Heun
auxiliary equations all come out of :func:`local_recurrence`.
"""
from dataclasses import dataclass, field
import cmath

import numpy as np
from numpy.polynomial import polynomial as P

from ._validation import as_complex, check_count
from .errors import IrregularPoint, NotAnExponent, Resonance

ZERO_REL = 1e-12        # a coefficient is "zero" below this fraction of its row
CONSISTENT_REL = 1e-10  # resonance remainder tolerance


def as_poly(coeffs):
    """Ascending-degree complex coefficient array."""
    arr = np.atleast_1d(np.asarray(coeffs, dtype=complex)).copy()
    arr.setflags(write=False)
    return arr


def taylor_shift(p, z1):
    """Coefficients of ``p(w + z1)`` in powers of ``w`` (Horner shift)."""
    c = np.array(p, dtype=complex)
    n = len(c)
    z1 = complex(z1)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            c[j] += z1 * c[j + 1]
    return c


@dataclass(frozen=True)
class PolyOde:
    """``A v'' + B v' + C v = 0`` with ascending coefficient arrays.

    Trailing zeros are kept on purpose: the nominal degrees fix the
    recurrence bandwidth even when a parameter makes a coefficient vanish.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, as_poly(getattr(self, name)))
        if not np.any(self.A):
            raise ValueError("A must not be identically zero")

    def shifted(self, center):
        return PolyOde(taylor_shift(self.A, center), taylor_shift(self.B, center),
                       taylor_shift(self.C, center))

    def residual(self, z, v, dv, d2v):
        return (P.polyval(z, self.A) * d2v + P.polyval(z, self.B) * dv
                + P.polyval(z, self.C) * v)

    def singular_points(self):
        a = np.trim_zeros(self.A, "b")
        return np.roots(a[::-1]) if len(a) > 1 else np.array([], dtype=complex)

    def cancel_common_factors(self):
        """Divide out every linear factor shared by A, B and C.

        Such a factor marks a point where two singularities have merged
        (q = 0 or q = alpha in the derivative equation); after cancelling
        it the relation there is shorter by one term.
        """
        ode = self
        for r in self.singular_points():
            r = complex(np.round(r.real, 12), np.round(r.imag, 12))
            if all(abs(P.polyval(r, X)) <= ZERO_REL * _scale(X, r) for X in (ode.A, ode.B, ode.C)):
                div = np.array([-r, 1])
                ode = PolyOde(*(P.polydiv(X, div)[0] if len(X) > 1 else X
                                for X in (ode.A, ode.B, ode.C)))
        return ode


def _scale(p, z):
    return float(np.sum(np.abs(p) * abs(z) ** np.arange(len(p)))) or 1.0


def indicial_exponents(ode, center):
    """Local exponents at ``center``: {0, 1} at an ordinary point."""
    c = as_complex(center, "center")
    a0 = P.polyval(c, ode.A)
    if abs(a0) > ZERO_REL * _scale(ode.A, c):
        return 0j, 1 + 0j
    a1 = P.polyval(c, P.polyder(ode.A)) if len(ode.A) > 1 else 0j
    if abs(a1) <= ZERO_REL * _scale(P.polyder(ode.A), c):
        raise IrregularPoint(f"A has a multiple root at {c}")
    b0 = P.polyval(c, ode.B)
    return 0j, 1 - b0 / a1


@dataclass(frozen=True)
class LocalRecurrence:
    """Banded relation ``sum_j coeff(n, j) a_{n-j} = 0`` for j = 0..bandwidth-1.

    ``coeff(n, 0)`` multiplies the newest coefficient and vanishes only at
    the indicial roots.
    """

    center: complex
    mu: complex
    bandwidth: int
    shifted: PolyOde = field(repr=False)
    singular: bool

    def coeff(self, n, j):
        s = 1 if self.singular else 0
        m = n - j + self.mu
        A, B, C = self.shifted.A, self.shifted.B, self.shifted.C
        i = j + s
        out = 0j
        if i < len(A):
            out += A[i] * m * (m - 1)
        if 0 <= i - 1 < len(B):
            out += B[i - 1] * m
        if 0 <= i - 2 < len(C):
            out += C[i - 2]
        return out

    def coeff_table(self, n_max):
        """Array ``T[n, j] = coeff(n, j)`` for n = 0..n_max."""
        n = np.arange(n_max + 1)[:, None]
        j = np.arange(self.bandwidth)[None, :]
        s = 1 if self.singular else 0
        m = n - j + self.mu
        i = j + s
        A, B, C = (np.concatenate([p, np.zeros(self.bandwidth + 2, complex)])
                   for p in (self.shifted.A, self.shifted.B, self.shifted.C))
        table = A[i] * m * (m - 1) + np.where(i >= 1, B[np.maximum(i - 1, 0)], 0) * m
        table = table + np.where(i >= 2, C[np.maximum(i - 2, 0)], 0)
        return table


def local_recurrence(ode, center, mu, *, check_exponent=True):
    """Derive the banded coefficient recurrence at ``center`` for exponent ``mu``."""
    c = as_complex(center, "center")
    mu = as_complex(mu, "mu")
    sh = ode.shifted(c)
    A = np.array(sh.A)
    singular = abs(A[0]) <= ZERO_REL * _scale(ode.A, c)
    if singular:
        A[0] = 0
    sh = PolyOde(A, sh.B, sh.C)
    if check_exponent:
        roots = indicial_exponents(ode, c)
        if min(abs(mu - r) for r in roots) > 1e-10 * (1 + abs(mu)):
            raise NotAnExponent(f"mu={mu} is not an exponent at {c}; exponents are {roots}")
    depth = max(len(sh.A) - 1, len(sh.B), len(sh.C) + 1)
    bandwidth = depth + 1 - (1 if singular else 0)
    return LocalRecurrence(c, mu, bandwidth, sh, bool(singular))


@dataclass(frozen=True)
class LocalSeries:
    """``v = (z - center)**mu * sum a_n (z - center)**n`` with ``a_0 = 1``."""

    center: complex
    mu: complex
    coeffs: np.ndarray
    free_indices: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", as_poly(self.coeffs))

    def evaluate(self, z, deriv=0):
        """Value and first ``deriv`` derivatives of the truncated series at ``z``."""
        w = complex(z) - self.center
        a = self.coeffs
        n = np.arange(len(a))
        outs = []
        for d in range(deriv + 1):
            # d-th derivative of sum a_n w**(n + mu)
            e = n + self.mu
            fac = np.ones(len(a), dtype=complex)
            for k in range(d):
                fac = fac * (e - k)
            if w == 0:
                powers = np.where(np.abs(e - d) < 1e-14, 1.0, 0.0).astype(complex)
            else:
                powers = np.exp((e - d) * cmath.log(w))
            outs.append(complex(np.sum(a * fac * powers)))
        return outs if deriv else outs[0]


def run_recurrence(rec, n_max, *, free_value=0.0):
    """Solve the banded relation forward for a_1..a_{n_max} with a_0 = 1.

    Where the leading coefficient vanishes (a resonance) the remainder must
    vanish as well; the free coefficient is then set to ``free_value``.
    """
    n_max = check_count(n_max, "n_max")
    table = rec.coeff_table(n_max)
    a = np.zeros(n_max + 1, dtype=np.clongdouble)
    a[0] = 1
    free = []
    for n in range(1, n_max + 1):
        row = table[n]
        parts = [np.clongdouble(row[j]) * a[n - j] for j in range(1, min(rec.bandwidth, n + 1))]
        rhs = -sum(parts, np.clongdouble(0))
        lead = row[0]
        row_scale = float(np.max(np.abs(row)))
        if abs(lead) <= ZERO_REL * row_scale:
            contrib = max([abs(complex(p)) for p in parts] + [0.0])
            running = row_scale * float(np.max(np.abs(a[:n])))
            if abs(complex(rhs)) > CONSISTENT_REL * max(contrib, running, 1e-300) and contrib > 0:
                raise Resonance(
                    f"resonance at n={n}: remainder {abs(complex(rhs)):.3e} "
                    f"relative to {contrib:.3e}"
                )
            a[n] = free_value
            free.append(n)
            continue
        a[n] = rhs / np.clongdouble(lead)
    return LocalSeries(rec.center, rec.mu, a.astype(complex), tuple(free))


def obstruction(rec, n, coeffs):
    """Remainder of the relation at index ``n`` given earlier coefficients."""
    row = rec.coeff_table(n)[n]
    return complex(sum(row[j] * coeffs[n - j] for j in range(1, min(rec.bandwidth, n + 1))))
