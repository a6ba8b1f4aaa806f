import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from romlab.errors import ParseError
from romlab.regress import count_occurrences, parse, simplify, to_string
from romlab.regress.expr import (EXP_CLAMP, LOG_EPS, Node, count_constants, depth, evaluate,
                                 evaluate_with_jacobian, get_params, length, set_params)

# a learned g_1 expression in LaTeX-style notation
TABLE_G1 = r"0.015u_1 + 0.010u_4 + \sin(0.191u_1 - 0.100u_5 + \sin(0.064u_4) - 1.569) + 0.979"


def _g1(U):
    u1, u4, u5 = U[:, 0], U[:, 3], U[:, 4]
    return 0.015 * u1 + 0.010 * u4 + np.sin(0.191 * u1 - 0.100 * u5 + np.sin(0.064 * u4)
                                            - 1.569) + 0.979


def test_table_expression_counts():
    assert count_occurrences(simplify(parse(TABLE_G1))) == {"u1": 2, "u4": 2, "u5": 1, "sin": 2}


def test_table_expression_evaluates_like_formula():
    U = np.random.default_rng(0).uniform(-5, 5, (100, 5))
    tree = parse(TABLE_G1)
    assert np.allclose(evaluate(tree, U), _g1(U), rtol=1e-13, atol=1e-13)
    assert np.allclose(evaluate(simplify(tree), U), _g1(U), rtol=1e-13, atol=1e-13)
    zero = evaluate(tree, np.zeros((1, 5)))[0]
    assert np.isclose(zero, np.sin(-1.569) + 0.979, rtol=1e-15)


def test_simplify_examples():
    assert to_string(simplify(parse("u1 + 0"))) == "u1"
    assert to_string(simplify(parse("sin(0.5 * (2 * u1))"))) == "sin(u1)"
    assert to_string(simplify(parse("1 * u2"))) == "u2"


def test_count_examples():
    assert count_occurrences(parse("0.3 + 2.5")) == {}
    assert count_occurrences(parse("u1 * u1")) == {"u1": 2}
    assert count_occurrences(parse("square(u2) + log(exp(u1)) - cos(u2)")) == {
        "u2": 2, "u1": 1, "square": 1, "log": 1, "exp": 1, "cos": 1}


def test_parse_variants():
    U = np.random.default_rng(1).standard_normal((10, 3))
    pairs = [("u_1^2", U[:, 0] ** 2), ("0.5u_2^2", 0.5 * U[:, 1] ** 2),
             ("-u1 + 2", 2 - U[:, 0]), ("u_{3} \\cdot u1", U[:, 2] * U[:, 0]),
             ("-(u1 - u2)", U[:, 1] - U[:, 0]), ("1e-3u1", 1e-3 * U[:, 0])]
    for text, ref in pairs:
        assert np.allclose(evaluate(parse(text), U), ref, rtol=1e-15), text


@pytest.mark.parametrize("text", ["u1 +", "sin(u1", "u0", "u1 $ 2", "(u1))"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_protected_primitives():
    X = np.array([[0.0], [1e4]])
    assert np.allclose(evaluate(parse("log(u1)"), X), np.log(np.abs(X[:, 0]) + LOG_EPS))
    assert np.allclose(evaluate(parse("exp(u1)"), X), np.exp(np.minimum(X[:, 0], EXP_CLAMP)))


def test_tree_measures():
    tree = parse("sin(u1 * 0.5) + u2")
    assert length(tree) == 6 and depth(tree) == 4
    assert count_constants(tree) == 1
    assert count_constants(parse("0.5u1 + u2")) == 1


# -- random trees for property tests --------------------------------------------

_UN = ("sin", "cos", "exp", "log", "square")
_BIN = ("add", "sub", "mul")


@st.composite
def trees(draw, max_depth=4):
    if max_depth <= 1 or draw(st.booleans()):
        if draw(st.booleans()):
            return Node.const(draw(st.floats(-5, 5, allow_nan=False)))
        w = draw(st.sampled_from([1.0, draw(st.floats(-3, 3, allow_nan=False))]))
        return Node.var(draw(st.integers(0, 2)), w)
    op = draw(st.sampled_from(_UN + _BIN))
    n = 1 if op in _UN else 2
    return Node(op, [draw(trees(max_depth=max_depth - 1)) for _ in range(n)])


_POINTS = np.random.default_rng(2).uniform(-2, 2, (1000, 3))


@settings(max_examples=150, deadline=None)
@given(trees())
def test_print_parse_round_trip(tree):
    text = to_string(tree)
    back = parse(text)
    assert to_string(back) == text
    with np.errstate(all="ignore"):
        a, b = evaluate(tree, _POINTS), evaluate(back, _POINTS)
    assert np.array_equal(a, b, equal_nan=True)


@settings(max_examples=150, deadline=None)
@given(trees())
def test_simplify_preserves_values(tree):
    with np.errstate(all="ignore"):
        a = evaluate(tree, _POINTS)
        b = evaluate(simplify(tree), _POINTS)
    ok = np.isfinite(a) & (np.abs(a) < 1e12)
    assert np.all(np.abs(a[ok] - b[ok]) <= 1e-9 * np.maximum(1.0, np.abs(a[ok])))


def _one_sided_differences(tree, X, p, k, h):
    """Forward and backward differences in parameter ``k``."""
    f0 = evaluate(tree, X)
    q = p.copy()
    q[k] = p[k] + h
    set_params(tree, q)
    fp = evaluate(tree, X)
    q[k] = p[k] - h
    set_params(tree, q)
    fm = evaluate(tree, X)
    set_params(tree, p)
    return (fp - f0) / h, (f0 - fm) / h


@settings(max_examples=60, deadline=None)
@given(trees(max_depth=3))
def test_jacobian_matches_finite_differences(tree):
    X = _POINTS[:20]
    with np.errstate(all="ignore"):
        v, J = evaluate_with_jacobian(tree, X)
        p = get_params(tree)
        if not np.all(np.isfinite(J)) or np.max(np.abs(J)) > 1e6:
            return
        for k in range(p.size):
            forward, backward = _one_sided_differences(tree, X, p, k, 1e-6 * max(1.0, abs(p[k])))
            # the two sides disagree across a |x| kink, where no derivative exists
            smooth = np.isfinite(forward) & np.isclose(forward, backward, rtol=1e-3, atol=1e-4)
            central = 0.5 * (forward + backward)
            assert np.allclose(J[smooth, k], central[smooth], rtol=1e-4, atol=1e-5)
    assert np.array_equal(v, evaluate(tree, X), equal_nan=True)
