"""Closed-form leading and trailing recurrence coefficients.

Each function returns the expected coefficient for row ``n`` of the banded
relation, up to an n-independent factor.  Row ``n`` multiplies a_n at
offset 0 and a_{n-j} at offset j.
"""
import numpy as np


def lead_center0(p, mu, n):
    return p.q * (n + mu) * (n - p.gamma + mu)


def trail_center0(p, mu, n):
    m = n - 3
    return p.alpha * (p.alpha + p.epsilon * (1 + m - p.gamma - p.delta + mu))


def lead_generic(p, mu, n, center):
    z0 = p.q / p.alpha
    return center * (center - 1) * (center - z0) * (n + mu) * (n - 1 + mu)


def trail_generic(p, mu, n):
    m = n - 4
    return p.alpha + p.epsilon * (1 + m - p.gamma - p.delta + mu)


def lead_z0(p, mu, n):
    z0 = p.q / p.alpha
    return z0 * (z0 - 1) * (n + mu) * (n - 2 + mu)


def lead_second_type(z1, z2, p, mu, n):
    return -z1 * z2 * (mu + n) * (mu + n - p.gamma)


def trail_second_type(p):
    return -(p.epsilon * p.epsilon) / 4


def ratio_spread(engine, reference):
    """Relative variance of engine / reference over the sampled rows."""
    r = np.asarray(engine, dtype=complex) / np.asarray(reference, dtype=complex)
    return float(np.var(r) / abs(np.mean(r)) ** 2)


def quadratic_fit_residual(values, ns):
    """Scaled least-squares residual of a degree-2 polynomial fit in n."""
    v = np.asarray(values, dtype=complex)
    V = np.vander(np.asarray(ns, dtype=float), 3)
    coef = np.linalg.lstsq(V, v, rcond=None)[0]
    return float(np.max(np.abs(V @ coef - v)) / max(np.max(np.abs(v)), 1e-300))
