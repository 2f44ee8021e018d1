"""scikit-learn style wrapper around a single expansion.

``fit`` builds the expansion (validation, recurrence coefficients and the
constant term); ``predict`` evaluates u at the given points.  There is no
training data: the parameters fully determine the model, so ``fit``
accepts and ignores ``X`` and ``y`` in the usual estimator position.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_complex_array
from .expansions import DEFAULT_TERMS, c0_closed_form, coefficients, eval_expansion, make_spec
from .errors import ConditionViolated
from .heun import HeunParams


def _points(X):
    """Accept a 1-d array of points or an (n, 1) / (n, 2) real array."""
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    elif arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    return as_complex_array(np.atleast_1d(arr), "X")


class HeunExpansion(TransformerMixin, BaseEstimator):
    """Confluent Heun solution evaluated through one expansion kind.

    Parameters
    ----------
    kind : str
        One of ``type1beta0``, ``type1beta1``, ``type1appell``,
        ``type2beta0``, ``type2beta1``, ``type2appell``.
    gamma, delta, epsilon, alpha, q : complex
        Equation parameters.
    center : complex or None
        Expansion center; only used by the appell kinds.
    mu : complex or str
        Local exponent, or ``"gamma"`` / ``"delta"``.
    n_terms : int
        Number of series terms.
    c0 : {"auto", "closed", "numeric"} or complex
        How the constant term is obtained.

    Attributes
    ----------
    spec_ : ExpansionSpec
    coeffs_ : ndarray of complex
    c0_ : complex
        Constant at full truncation (``nan`` when re-solved per point).
    """

    def __init__(self, kind="type1beta0", gamma=0.3, delta=0.4, epsilon=0.2, alpha=1.0, q=0.5,
                 center=None, mu=0, n_terms=DEFAULT_TERMS, c0="auto"):
        self.kind = kind
        self.gamma = gamma
        self.delta = delta
        self.epsilon = epsilon
        self.alpha = alpha
        self.q = q
        self.center = center
        self.mu = mu
        self.n_terms = n_terms
        self.c0 = c0

    def fit(self, X=None, y=None):
        params = HeunParams(self.gamma, self.delta, self.epsilon, self.alpha, self.q)
        self.spec_ = make_spec(self.kind, params, self.center, self.mu)
        self.coeffs_ = coefficients(self.spec_, self.n_terms)
        if self._per_point():
            # re-solved at every truncation during evaluation
            self.c0_ = complex("nan+nanj")
        elif self.c0 in ("auto", "closed"):
            self.c0_ = c0_closed_form(self.spec_)
        else:
            self.c0_ = complex(self.c0)
        return self

    def _per_point(self):
        if self.c0 == "numeric":
            return True
        if self.c0 != "auto":
            return False
        if self.spec_.family != "beta0":
            return True
        try:
            c0_closed_form(self.spec_)
        except ConditionViolated:
            return True
        return False

    def _evaluate(self, X):
        check_is_fitted(self, "spec_")
        c0 = "numeric" if self._per_point() else self.c0_
        return [eval_expansion(self.spec_, z, self.n_terms, c0=c0, coeffs=self.coeffs_)
                for z in _points(X)]

    def predict(self, X):
        """Values u(z) as a complex array."""
        return np.array([ev.value for ev in self._evaluate(X)])

    def transform(self, X):
        """Columns Re u, Im u, Re u', Im u' at each point."""
        rows = [(ev.value.real, ev.value.imag, ev.derivative.real, ev.derivative.imag)
                for ev in self._evaluate(X)]
        return np.array(rows, dtype=float).reshape(-1, 4)

    def converged(self, X):
        """Per-point convergence flags of the partial sums."""
        return np.array([ev.diagnostics.converged for ev in self._evaluate(X)])
