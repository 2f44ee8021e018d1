"""Input checking helpers used across the package."""
import cmath
import os

import numpy as np

from .errors import ConfigError, NonFiniteInput

DEFAULT_TERM_CAP = 100_000


def as_complex(value, name="value"):
    """Coerce ``value`` to a finite Python complex, raising on NaN/Inf."""
    try:
        out = complex(value)
    except (TypeError, ValueError) as exc:
        raise NonFiniteInput(f"{name} is not a number: {value!r}") from exc
    if not cmath.isfinite(out):
        raise NonFiniteInput(f"{name} must be finite, got {out!r}")
    return out


def as_complex_array(values, name="values"):
    arr = np.atleast_1d(np.asarray(values, dtype=complex))
    if arr.ndim != 1:
        raise ConfigError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains non-finite entries")
    return arr


def nonpositive_integer(x, tol=1e-12):
    """Return ``-x`` as an int when ``x`` is in {0, -1, -2, ...}, else None."""
    x = complex(x)
    if abs(x.imag) > tol or x.real > tol:
        return None
    k = round(x.real)
    if abs(x.real - k) > tol * max(1.0, abs(k)):
        return None
    return -k


def is_integer(x, tol=1e-12):
    x = complex(x)
    return abs(x.imag) <= tol and abs(x.real - round(x.real)) <= tol * max(1.0, abs(x.real))


def term_cap(default=DEFAULT_TERM_CAP):
    """Global series term cap; ``HEUN_MAX_TERMS`` overrides ``default``."""
    raw = os.environ.get("HEUN_MAX_TERMS")
    if raw is None:
        return default
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigError(f"HEUN_MAX_TERMS must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ConfigError("HEUN_MAX_TERMS must be positive")
    return cap


def check_count(n, name, minimum=0):
    if isinstance(n, bool) or int(n) != n or n < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {n!r}")
    return int(n)
