import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothent.dist import (
    Alphabet,
    FactorSequence,
    conditional_entropy,
    joint_from_json,
    load_joint,
    product_joint,
    shannon_entropy,
    unconditional,
    validate_joint,
)
from smoothent.errors import EmptyMatrix, NegativeEntry, NotNormalized, ShapeMismatch, SmoothEntError
from smoothent.tightness import family


def test_valid_tables():
    j = validate_joint([[0.5, 0], [0, 0.5]])
    assert (j.x_size, j.y_size) == (2, 2)
    j = validate_joint([[0.5], [0.25], [0.25]])
    assert j.is_unconditional
    np.testing.assert_array_equal(j.p_y, [1.0])


@pytest.mark.parametrize("raw, err", [
    ([[0.6, 0.6]], NotNormalized),
    ([[1.2, -0.2]], NegativeEntry),
    ([], EmptyMatrix),
    ([[]], EmptyMatrix),
])
def test_invalid_tables(raw, err):
    with pytest.raises(err):
        validate_joint(raw)


def test_no_silent_normalization():
    with pytest.raises(NotNormalized):
        validate_joint([[0.5, 0.5 + 1e-9]])
    validate_joint([[0.5, 0.5 + 1e-13]])


def test_table_is_read_only():
    j = validate_joint([[0.5, 0.5]])
    with pytest.raises(ValueError):
        j.p[0, 0] = 1.0


def test_alphabet_labels():
    assert Alphabet(3).label(2) == "2"
    with pytest.raises(SmoothEntError):
        Alphabet(2, ("a", "a"))
    with pytest.raises(SmoothEntError):
        Alphabet(0)


@pytest.mark.parametrize("j, expected", [
    (unconditional([0.5, 0.5]), 1.0),
    (family(5).distribution, 2.0),
    (validate_joint([[0.5, 0], [0, 0.5]]), 0.0),
])
def test_conditional_entropy_values(j, expected):
    assert conditional_entropy(j) == pytest.approx(expected, abs=1e-12)


def test_conditional_marginals():
    j = validate_joint([[0.4, 0.1], [0.1, 0.4]])
    np.testing.assert_allclose(j.conditional.sum(axis=0), 1.0)
    assert conditional_entropy(j) == pytest.approx(shannon_entropy([0.8, 0.2]))


def test_product_ordering():
    a = unconditional([0.25, 0.75])
    b = unconditional([0.1, 0.9])
    p = product_joint([a, b])
    # x1 is the most significant digit
    assert p.p[1 * 2 + 0, 0] == pytest.approx(0.75 * 0.1)


def test_factor_sequence():
    f = family(3).distribution
    fs = FactorSequence.repeat(f, 5)
    assert len(fs) == 5 and fs.x_size == 3
    assert fs.entropy() == pytest.approx(7.5)
    with pytest.raises(ShapeMismatch):
        FactorSequence((f, unconditional([0.5, 0.5])))


def test_json_round_trip(tmp_path):
    j = validate_joint([[0.4, 0.1], [0.1, 0.4]], x_labels=["a", "b"])
    path = tmp_path / "j.json"
    path.write_text(json.dumps(j.to_json()))
    assert load_joint(path) == j
    with pytest.raises(ShapeMismatch):
        joint_from_json({"x_size": 3, "y_size": 2, "p": [[0.4, 0.1], [0.1, 0.4]]})
    with pytest.raises(SmoothEntError):
        joint_from_json({"p": [[1.0]]})


tables = st.integers(1, 4).flatmap(
    lambda xs: st.integers(1, 4).flatmap(
        lambda ys: st.lists(st.floats(0.0, 1.0), min_size=xs * ys, max_size=xs * ys)
        .filter(lambda v: sum(v) > 0.1)
        .map(lambda v: np.array(v).reshape(xs, ys) / sum(v))
    )
)


@settings(max_examples=60, deadline=None)
@given(tables)
def test_entropy_range_and_permutation(p):
    j = validate_joint(p / p.sum())
    h = conditional_entropy(j)
    assert -1e-12 <= h <= math.log2(j.x_size) + 1e-12
    q = p[::-1, ::-1]
    assert conditional_entropy(validate_joint(q / q.sum())) == pytest.approx(h, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=5), st.lists(st.floats(0.01, 1), min_size=1, max_size=4))
def test_independent_y_gives_marginal_entropy(px, py):
    px = np.array(px) / sum(px)
    py = np.array(py) / sum(py)
    p = np.outer(px, py)
    j = validate_joint(p / p.sum())
    assert conditional_entropy(j) == pytest.approx(shannon_entropy(px), abs=1e-10)
