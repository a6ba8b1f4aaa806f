import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from romlab.closure import ClosureDataset
from romlab.errors import EvaluationError, ValidationError
from romlab.regress import (SrConfig, SymbolicModel, fit_symbolic, load_symbolic, parse,
                            save_symbolic)
from romlab.regress.expr import depth, evaluate, length
from romlab.regress.gp import fitness_from_sse, run_gp
from romlab.regress.lm import levenberg_marquardt

SMALL = dict(population=60, generations=5)


def test_fitness_definition():
    assert fitness_from_sse(0.0, 2.0) == 1.0
    assert fitness_from_sse(1.0, 4.0) == 0.75
    assert fitness_from_sse(np.nan, 1.0) == -np.inf
    assert fitness_from_sse(0.0, 0.0) == 1.0
    assert fitness_from_sse(1e-3, 0.0) == -np.inf


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e6), st.floats(1e-9, 1e6))
def test_fitness_bounded_by_one(sse, sst):
    f = fitness_from_sse(sse, sst)
    assert f <= 1.0
    assert (f == 1.0) == (sse <= 1e-12 * sst) or sse / sst < 1e-12


def test_constant_target_is_fit_exactly():
    X = np.random.default_rng(0).standard_normal((50, 2))
    with pytest.warns(RuntimeWarning):
        tree, fit, info = run_gp(X, np.full(50, 0.37), SrConfig(primitive_set=1, **SMALL))
    assert fit == 1.0 and info["constant_target"]
    assert np.allclose(evaluate(tree, X), 0.37, atol=1e-10)


@pytest.mark.parametrize("max_length", [5, 10, 25])
def test_caps_are_respected(max_length):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((80, 3))
    y = np.sin(X[:, 0]) * X[:, 1] + X[:, 2] ** 2
    tree, fit, _ = run_gp(X, y, SrConfig(primitive_set=6, max_length=max_length, **SMALL))
    assert depth(tree) <= 5 and length(tree) <= max_length
    assert np.isfinite(fit)


def test_determinism():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((60, 2))
    ds = ClosureDataset(X, np.c_[X[:, 0] * X[:, 1], np.cos(X[:, 0])], np.arange(60.0), 2, 3)
    cfg = SrConfig(primitive_set=4, max_length=15, seed=3, **SMALL)
    a, b = fit_symbolic(ds, cfg), fit_symbolic(ds, cfg)
    assert a.expressions() == b.expressions()
    c = fit_symbolic(ds, cfg, seed=4)
    assert c.meta["config"]["seed"] == 4


def test_easy_target_is_recovered_quickly():
    rng = np.random.default_rng(3)
    X = rng.uniform(-2, 2, (200, 2))
    y = 0.5 * X[:, 0] * X[:, 1]
    tree, fit, info = run_gp(X, y, SrConfig(primitive_set=1, max_length=10,
                                            population=200, generations=10))
    assert fit >= 1 - 1e-9
    assert len(info["history"]) <= 10


def test_lm_fits_linear_model_in_one_go():
    X = np.linspace(-1, 1, 30)
    y = 2.0 * X - 0.5

    def model(p, jacobian):
        f = p[0] * X + p[1]
        return (f, np.column_stack([X, np.ones_like(X)])) if jacobian else f

    p, sse = levenberg_marquardt(model, y, np.zeros(2), max_iter=10)
    assert np.allclose(p, [2.0, -0.5], atol=1e-6) and sse < 1e-10


def test_symbolic_model_interface(tmp_path):
    m = SymbolicModel([parse("0.5u1 * u2"), parse("sin(u1) - 0.3")])
    U = np.array([[1.0, 2.0], [0.0, -1.0]])
    assert np.allclose(m.predict(U), [[1.0, np.sin(1) - 0.3], [0.0, -0.3]])
    assert m.parameter_count == 2
    save_symbolic(m, tmp_path / "m.txt")
    back = load_symbolic(tmp_path / "m.txt")
    assert back.expressions() == m.expressions()
    assert back.predict(U).tobytes() == m.predict(U).tobytes()
    assert np.array_equal(m.predict(U), m.predict(U))


def test_symbolic_non_finite_prediction():
    m = SymbolicModel([parse("u1 * 1e200 * 1e200")])
    with pytest.raises(EvaluationError):
        m.predict(np.array([1.0]))


def test_config_grid_membership():
    assert SrConfig(max_length=20, generations=25).on_default_grid
    assert not SrConfig(population=60).on_default_grid
    with pytest.raises(ValidationError):
        SrConfig(primitive_set=9)
