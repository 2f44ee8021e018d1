"""scikit-learn style wrapper."""
import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from confluent_heun import HeunExpansion
from confluent_heun.errors import ConfigError, ConditionViolated
from confluent_heun.expansions import eval_expansion, make_spec
from confluent_heun.heun import HeunParams

Z = np.array([0.1, 0.25, 0.4, 0.3 + 0.2j])


@pytest.fixture
def model():
    return HeunExpansion(gamma=0.3, delta=0.4, epsilon=0.2, alpha=1.0, q=0.5).fit()


class TestFit:
    def test_fit_returns_self(self):
        est = HeunExpansion()
        assert est.fit() is est

    def test_fitted_attributes(self, model):
        assert model.spec_.kind == "type1beta0"
        assert model.coeffs_.shape == (model.n_terms,)
        assert np.isfinite(model.c0_)

    def test_ignores_training_data(self):
        a = HeunExpansion().fit().predict(Z)
        b = HeunExpansion().fit(np.zeros((3, 2)), np.ones(3)).predict(Z)
        np.testing.assert_array_equal(a, b)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            HeunExpansion().predict(Z)

    def test_bad_kind(self):
        with pytest.raises(ConfigError):
            HeunExpansion(kind="type3").fit()

    def test_closed_form_refused(self):
        # Re(1 - gamma + mu) <= 0 violates the condition for the closed constant
        with pytest.raises(ConditionViolated):
            HeunExpansion(gamma=1.5, c0="closed").fit()

    def test_explicit_constant(self):
        m = HeunExpansion(c0=0.25).fit()
        assert m.c0_ == 0.25


class TestPredict:
    def test_matches_eval_expansion(self, model):
        spec = make_spec("type1beta0", HeunParams(0.3, 0.4, 0.2, 1.0, 0.5), None, 0)
        ref = [eval_expansion(spec, z, model.n_terms).value for z in Z]
        np.testing.assert_allclose(model.predict(Z), ref, rtol=1e-14)

    @pytest.mark.parametrize("shape", ["flat", "column", "pairs"])
    def test_input_shapes(self, model, shape):
        real = np.array([0.1, 0.2, 0.3])
        X = {"flat": real, "column": real[:, None],
             "pairs": np.column_stack([real, np.zeros(3)])}[shape]
        np.testing.assert_allclose(model.predict(X), model.predict(real), rtol=0)

    def test_scalar_point(self, model):
        assert model.predict(0.3).shape == (1,)

    def test_transform_columns(self, model):
        out = model.transform(Z)
        u = model.predict(Z)
        assert out.shape == (len(Z), 4)
        np.testing.assert_array_equal(out[:, 0], u.real)
        np.testing.assert_array_equal(out[:, 1], u.imag)

    def test_converged(self, model):
        assert model.converged([0.1, 0.3]).all()

    def test_rejects_nonfinite(self, model):
        with pytest.raises(Exception):
            model.predict([np.nan])

    def test_numeric_constant_is_per_point(self):
        m = HeunExpansion(kind="type1beta1", n_terms=40).fit()
        assert np.isnan(m.c0_)

    @pytest.mark.parametrize("kind, center, points", [
        ("type1beta1", None, [0.9, 0.8]),
        ("type1appell", 0.25, [0.2, 0.3]),
        ("type2beta0", None, [0.1, 0.2]),
        ("type2beta1", None, [0.9, 0.8]),
        ("type2appell", 0.25, [0.2, 0.3]),
    ])
    def test_other_kinds(self, kind, center, points):
        m = HeunExpansion(kind=kind, center=center, n_terms=40).fit()
        assert np.all(np.isfinite(m.predict(points)))
        assert m.converged(points).all()


class TestSklearnProtocol:
    def test_get_params(self):
        est = HeunExpansion(q=0.7, n_terms=40)
        params = est.get_params()
        assert params["q"] == 0.7 and params["n_terms"] == 40

    def test_set_params(self):
        est = HeunExpansion().set_params(alpha=2.0)
        assert est.alpha == 2.0

    def test_clone_is_unfitted(self, model):
        twin = clone(model)
        assert twin.get_params() == model.get_params()
        assert not hasattr(twin, "spec_")

    def test_fit_transform(self):
        out = HeunExpansion().fit_transform(Z)
        assert out.shape == (len(Z), 4)
