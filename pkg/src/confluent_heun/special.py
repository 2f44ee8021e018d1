"""Complex-parameter hypergeometric-class evaluators.

All routines accept complex scalars and return ``(value, SeriesDiagnostics)``
where a series is involved.  Principal branches are used throughout, with
the cut of ``z**a`` and of log-gamma along the negative real axis.
"""
from dataclasses import dataclass
import cmath

import numpy as np
from scipy import special as _sp

from ._validation import as_complex, nonpositive_integer, term_cap
from .errors import (
    GammaPole,
    NoConvergence,
    NonPositiveIntegerA,
    OutsideDomain,
    PoleAtC,
)

SUM_TOL = 1e-16
F1_DIAGONAL_CAP = 4000


@dataclass(frozen=True)
class SeriesDiagnostics:
    terms_used: int
    last_term_magnitude: float
    converged: bool


EXACT = SeriesDiagnostics(0, 0.0, True)


def log_gamma(z):
    """Principal branch of log Gamma(z)."""
    z = as_complex(z, "z")
    if nonpositive_integer(z) is not None:
        raise GammaPole(f"log_gamma has a pole at z={z}")
    return complex(_sp.loggamma(z))


def _rgamma_log(z):
    """log(1/Gamma(z)), or None when 1/Gamma(z) vanishes."""
    if nonpositive_integer(z) is not None:
        return None
    return -complex(_sp.loggamma(z))


def gamma_ratio(numer, denom):
    """prod Gamma(numer) / prod Gamma(denom); zero if a denominator is a pole."""
    total = 0j
    for w in numer:
        total += log_gamma(w)
    for w in denom:
        r = _rgamma_log(complex(w))
        if r is None:
            return 0j
        total += r
    return cmath.exp(total)


def _polynomial_order(*params):
    """Smallest m with some parameter equal to -m (series stops after m)."""
    orders = [m for m in (nonpositive_integer(p) for p in params) if m is not None]
    return min(orders) if orders else None


def _sum_ratio_series(ratio, cap, tol=SUM_TOL, first=1.0 + 0j):
    """Sum t_0 + t_1 + ... with t_{k+1} = t_k * ratio(k).

    Stops when two consecutive terms are below ``tol * (1 + |S|)``.
    """
    total = first
    term = first
    small_prev = False
    for k in range(cap):
        term = term * ratio(k)
        total += term
        small = abs(term) < tol * (1.0 + abs(total))
        if small and small_prev:
            return total, SeriesDiagnostics(k + 2, abs(term), True)
        small_prev = small
    return total, SeriesDiagnostics(cap + 1, abs(term), False)


def gauss_2f1(a, b, c, z, *, max_terms=None, tol=SUM_TOL):
    """Gauss hypergeometric function by its defining power series.

    Terminating series (``a`` or ``b`` in {0, -1, ...}) are summed exactly and
    may be evaluated anywhere.  At ``z == 1`` Gauss's summation theorem is
    used when ``Re(c - a - b) > 0``.
    """
    a, b, c, z = (as_complex(v, n) for v, n in ((a, "a"), (b, "b"), (c, "c"), (z, "z")))
    cap = term_cap() if max_terms is None else max_terms
    m = _polynomial_order(a, b)
    k_c = nonpositive_integer(c)
    if k_c is not None and (m is None or m > k_c):
        raise PoleAtC(f"c={c} is a non-positive integer and the series does not stop first")
    if m is not None:
        total = term = 1 + 0j
        for k in range(m):
            term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
            total += term
        return total, SeriesDiagnostics(m + 1, abs(term) if m else 0.0, True)
    if abs(z - 1) < 1e-15:
        if (c - a - b).real <= 0:
            raise OutsideDomain("2F1 at z=1 needs Re(c-a-b) > 0")
        return gamma_ratio([c, c - a - b], [c - a, c - b]), EXACT
    if abs(z) >= 1:
        raise OutsideDomain(f"2F1 series needs |z| < 1, got |z|={abs(z):.6g}")
    total, diag = _sum_ratio_series(
        lambda k: (a + k) * (b + k) / ((c + k) * (k + 1)) * z, cap, tol
    )
    if not diag.converged:
        raise NoConvergence(f"2F1 did not converge within {cap} terms")
    return total, diag


def incomplete_beta(a, b, z, *, max_terms=None):
    """B(a, b; z) = z**a / a * 2F1(a, 1 - b; a + 1; z)."""
    a, b, z = as_complex(a, "a"), as_complex(b, "b"), as_complex(z, "z")
    if nonpositive_integer(a) is not None:
        raise NonPositiveIntegerA(f"incomplete Beta needs a not in {{0,-1,...}}, got {a}")
    if abs(z - 1) < 1e-15 and b.real <= 0:
        raise OutsideDomain("B(a, b; 1) needs Re(b) > 0")
    f, diag = gauss_2f1(a, 1 - b, a + 1, z, max_terms=max_terms)
    if z == 0:
        if a.real <= 0:
            raise OutsideDomain(f"B(a, b; z) diverges at z=0 for Re(a) <= 0, got a={a}")
        return 0j, diag
    return cmath.exp(a * cmath.log(z)) / a * f, diag


def complete_beta(a, b):
    a, b = as_complex(a, "a"), as_complex(b, "b")
    return gamma_ratio([a, b], [a + b])


def appell_f1(a, b1, b2, c, x, y, *, max_diagonals=F1_DIAGONAL_CAP, tol=SUM_TOL):
    """Appell F1 double series summed along diagonals m + n = s.

    A direction whose parameter is in {0, -1, ...} terminates and is then
    allowed outside the unit disc.
    """
    a, b1, b2, c, x, y = (
        as_complex(v, n)
        for v, n in ((a, "a"), (b1, "b1"), (b2, "b2"), (c, "c"), (x, "x"), (y, "y"))
    )
    m1, m2, ma = nonpositive_integer(b1), nonpositive_integer(b2), nonpositive_integer(a)
    k_c = nonpositive_integer(c)
    if k_c is not None and (ma is None or ma > k_c):
        raise PoleAtC(f"c={c} is a non-positive integer")
    if ma is None:
        if m1 is None and abs(x) >= 1:
            raise OutsideDomain("Appell F1 needs |x| < 1")
        if m2 is None and abs(y) >= 1:
            raise OutsideDomain("Appell F1 needs |y| < 1")
    cap = max_diagonals if ma is None else min(max_diagonals, ma + 1)

    def direction(b, t, n):
        k = np.arange(n - 1)
        ratios = (b + k) / (k + 1) * t
        out = np.empty(n, dtype=complex)
        out[0] = 1
        out[1:] = np.cumprod(ratios)
        return out

    total = 0j
    weight = 1 + 0j
    small_prev = False
    n_block = 64
    px = direction(b1, x, n_block)
    py = direction(b2, y, n_block)
    last = 0.0
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for s in range(cap):
            if s >= n_block:
                n_block = min(2 * n_block, max(cap, n_block + 1))
                px = direction(b1, x, n_block)
                py = direction(b2, y, n_block)
            diag = complex(np.dot(px[: s + 1], py[s::-1]))
            term = weight * diag
            total += term
            last = abs(term)
            small = last < tol * (1.0 + abs(total))
            if small and small_prev:
                return total, SeriesDiagnostics(s + 1, last, True)
            small_prev = small
            weight *= (a + s) / (c + s)
            if weight == 0:
                return total, SeriesDiagnostics(s + 1, last, True)
    if ma is not None:
        return total, SeriesDiagnostics(cap, last, True)
    raise NoConvergence(f"Appell F1 did not converge within {cap} diagonals")


def appell_f1_at_one(a1, b1, b2, y):
    """Limit x -> 1- of F1(a1; b1, b2; a1 + 1; x, y) via a Gauss 2F1."""
    a1, b1, b2, y = (as_complex(v, n) for v, n in ((a1, "a1"), (b1, "b1"), (b2, "b2"), (y, "y")))
    if (1 - b1).real <= 0:
        raise OutsideDomain("appell_f1_at_one needs Re(1 - b1) > 0")
    if abs(y) >= 1:
        raise OutsideDomain("appell_f1_at_one needs |y| < 1")
    for w in (a1 + 1, 1 - b1, a1 + 1 - b1):
        if nonpositive_integer(w) is not None:
            raise GammaPole(f"Gamma pole at argument {w}")
    pref = cmath.exp(log_gamma(a1 + 1) + log_gamma(1 - b1) - log_gamma(a1 + 1 - b1))
    f, _ = gauss_2f1(a1, b2, a1 + 1 - b1, y)
    return pref * f


# --- batched incomplete Beta used by the expansion terms -------------------

def _batched_ratio_sum(p, r, x, cap, tol=SUM_TOL):
    """Vectorised sum_k t_k, t_0 = 1, t_{k+1} = t_k (p + k)/(r + k) x."""
    total = np.ones(p.shape, dtype=complex)
    term = np.ones(p.shape, dtype=complex)
    small_prev = np.zeros(p.shape, dtype=bool)
    done = np.zeros(p.shape, dtype=bool)
    for k in range(cap):
        term = term * (p + k) / (r + k) * x
        total = total + term
        small = np.abs(term) < tol * (1.0 + np.abs(total))
        done |= small & small_prev
        small_prev = small
        if done.all():
            return total, True
    return total, bool(done.all())


def incomplete_beta_array(a, b, z, *, max_terms=None):
    """B(a_k, b_k; z) for parameter arrays sharing one argument ``z``.

    Chooses per entry between
    ``z**a (1-z)**b / a * 2F1(a+b, 1; a+1; z)`` and the reflection
    ``B(a, b) - B(b, a; 1-z)``, the latter only where it does not cancel.
    A positive-integer ``b`` lets ``z`` sit anywhere with ``|1 - z| < 1``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    a, b = a.ravel().copy(), b.ravel().copy()
    z = as_complex(z, "z")
    cap = term_cap() if max_terms is None else max_terms
    if any(nonpositive_integer(v) is not None for v in a):
        raise NonPositiveIntegerA("incomplete Beta needs a not in {0,-1,...}")
    out = np.full(a.shape, np.nan + 0j)
    x = 1 - z
    log_z = cmath.log(z) if z != 0 else None
    pending = np.ones(a.shape, dtype=bool)

    with np.errstate(over="ignore", invalid="ignore", under="ignore", divide="ignore"):
        if abs(x) < 1 and z != 0 and (abs(z) > 0.5 or abs(z) >= 1):
            ok = np.array(
                [nonpositive_integer(bb) is None and nonpositive_integer(aa + bb) is None
                 for aa, bb in zip(a, b)]
            )
            if ok.any():
                aa, bb = a[ok], b[ok]
                s, conv = _batched_ratio_sum(aa + bb, bb + 1, x, cap)
                if not conv:
                    raise NoConvergence("incomplete Beta reflection series did not converge")
                comp = np.exp(bb * cmath.log(x) + aa * log_z) / bb * s
                lg = _sp.loggamma(aa) + _sp.loggamma(bb) - _sp.loggamma(aa + bb)
                full = np.exp(lg)
                good = np.isfinite(comp) & np.isfinite(full)
                if abs(z) < 1:
                    good &= np.abs(comp) <= 0.5 * np.abs(full)
                idx = np.flatnonzero(ok)[good]
                out[idx] = full[good] - comp[good]
                pending[idx] = False
        if pending.any():
            if z == 0:
                out[pending] = 0
                pending[:] = False
            elif abs(z) >= 1:
                raise OutsideDomain(f"incomplete Beta needs |z| < 1 here, got z={z}")
            else:
                aa, bb = a[pending], b[pending]
                s, conv = _batched_ratio_sum(aa + bb, aa + 1, z, cap)
                if not conv:
                    raise NoConvergence("incomplete Beta series did not converge")
                vals = np.exp(aa * log_z + bb * cmath.log(x)) / aa * s
                bad = ~np.isfinite(vals)
                if bad.any():
                    # overflow of the scaled form; fall back to the definition
                    for j in np.flatnonzero(bad):
                        vals[j] = incomplete_beta(aa[j], bb[j], z, max_terms=cap)[0]
                out[pending] = vals
    return out.reshape(shape)
