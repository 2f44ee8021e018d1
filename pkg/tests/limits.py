"""x -> 1 limits of Appell F1 by Richardson extrapolation."""
import mpmath as mp

from confluent_heun.special import appell_f1


def richardson_limit(vals, b1):
    """Limit of a sequence sampled at h = 2**-k, k consecutive.

    The approach to x = 1 is a sum of powers h**(1-b1), h, h**(2-b1), h**2,
    ...; each pass eliminates the next power.
    """
    for p in (1 - b1, 1, 2 - b1, 2, 3 - b1):
        r = 2.0 ** -p
        vals = [(v1 - r * v0) / (1 - r) for v0, v1 in zip(vals, vals[1:])]
    return vals[-1]


def extrapolated_limit(a1, b1, b2, y, kmin=4, kmax=11):
    vals = [appell_f1(a1, b1, b2, a1 + 1, 1 - 2.0 ** -k, y, max_diagonals=200000)[0]
            for k in range(kmin, kmax + 1)]
    return richardson_limit(vals, b1)


def mpmath_limit(a1, b1, b2, y, kmin=4, kmax=12):
    vals = [complex(mp.appellf1(a1, b1, b2, a1 + 1, 1 - mp.mpf(2) ** -k, y))
            for k in range(kmin, kmax + 1)]
    return richardson_limit(vals, b1)
