import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gswalk.errors import InfeasibleError, InputError, NumericalError
from gswalk.linalg import (
    TOL_ORTH,
    TOL_RESID,
    as_vector_set,
    min_norm_coefficients,
    null_space_vector,
    numerical_rank,
    orthonormal_basis,
    project_orthogonal,
    split_against_span,
)

E = np.eye(3)
# unit-scale data: magnitudes below 1e-12 are flushed to zero
finite = st.floats(-1, 1, allow_nan=False, allow_infinity=False).map(lambda x: 0.0 if abs(x) < 1e-12 else x)


def cols(*vs):
    return np.column_stack(vs)


def test_project_already_orthogonal():
    np.testing.assert_allclose(project_orthogonal(E[0], cols(E[1])), E[0], atol=1e-15)


def test_project_vector_in_span():
    np.testing.assert_allclose(project_orthogonal(E[0], cols(E[0])), 0, atol=1e-15)


def test_project_removes_component():
    v = np.array([1.0, 1.0, 0.0])
    r = project_orthogonal(v, cols(E[0]))
    np.testing.assert_allclose(r, [0, 1, 0], atol=1e-15)
    assert abs(r @ E[0]) <= TOL_ORTH


def test_project_empty_span_is_identity():
    v = np.array([0.3, -0.2, 0.1])
    np.testing.assert_array_equal(project_orthogonal(v, np.zeros((3, 0))), v)


def test_project_dimension_mismatch():
    with pytest.raises(InputError):
        project_orthogonal(np.ones(2), cols(E[0]))


def test_min_norm_simple():
    np.testing.assert_allclose(min_norm_coefficients(E[0], cols(E[0], E[1])), [1, 0], atol=1e-15)


def test_min_norm_zero_target():
    rng = np.random.default_rng(0)
    c = min_norm_coefficients(np.zeros(3), rng.standard_normal((3, 5)))
    np.testing.assert_array_equal(c, 0)


def test_min_norm_duplicated_column_splits_evenly():
    np.testing.assert_allclose(min_norm_coefficients(E[0], cols(E[0], E[0])), [0.5, 0.5], atol=1e-12)


def test_min_norm_infeasible():
    with pytest.raises(InfeasibleError):
        min_norm_coefficients(E[2], cols(E[0], E[1]))


def test_null_space_independent():
    assert null_space_vector(cols(E[0], E[1]), [0, 1]) is None


def test_null_space_duplicate():
    z = null_space_vector(cols(E[0], E[0]), [0, 1])
    assert z is not None
    np.testing.assert_allclose(np.abs(z), [1, 1], atol=1e-12)
    assert z[0] == -z[1]


def test_null_space_three_in_plane():
    v = cols(E[0], E[1], (E[0] + E[1]) / np.sqrt(2))
    z = null_space_vector(v, [0, 1, 2])
    z = z if z[2] < 0 else -z
    np.testing.assert_allclose(z, [1 / np.sqrt(2), 1 / np.sqrt(2), -1], atol=1e-12)
    assert np.max(np.abs(z)) == pytest.approx(1.0)
    assert np.linalg.norm(v @ z) <= TOL_RESID


def test_null_space_respects_support():
    v = cols(E[0], E[1], E[0], E[1])
    z = null_space_vector(v, [1, 3])
    assert z[0] == 0 and z[2] == 0
    assert np.linalg.norm(v @ z) <= TOL_RESID


def test_as_vector_set_rejects_nonfinite():
    with pytest.raises(InputError):
        as_vector_set(np.array([[np.nan, 1.0]]))


def test_numerical_rank_relative_threshold():
    v = cols(E[0], E[0] * (1 + 1e-13))
    assert numerical_rank(v) == 1
    assert numerical_rank(cols(E[0], 1e-6 * E[1])) == 2


def test_split_matches_svd_path_on_dependent_input():
    rng = np.random.default_rng(3)
    b = rng.standard_normal((4, 3))
    b = np.column_stack([b, b[:, 0] + b[:, 1]])
    v = rng.standard_normal(4)
    c, r = split_against_span(v, b)
    np.testing.assert_allclose(r, project_orthogonal(v, b), atol=1e-10)
    np.testing.assert_allclose(c, min_norm_coefficients(v - r, b), atol=1e-8)


@settings(max_examples=200, deadline=None)
@given(
    arrays(float, (4,), elements=finite),
    arrays(float, (4, 3), elements=finite),
)
def test_projection_properties(v, span):
    r = project_orthogonal(v, span)
    q = orthonormal_basis(span)
    assert np.all(np.abs(span.T @ r) <= TOL_ORTH)
    # v - r lies in the span
    rest = v - r
    np.testing.assert_allclose(q @ (q.T @ rest), rest, atol=1e-9)
    np.testing.assert_allclose(project_orthogonal(r, span), r, atol=TOL_ORTH)
    assert abs(v @ v - r @ r - rest @ rest) <= 10 * TOL_ORTH * max(np.linalg.norm(v), 1e-300) + 1e-15


@settings(max_examples=200, deadline=None)
@given(arrays(float, (5, 3), elements=finite), arrays(float, (3,), elements=finite))
def test_min_norm_matches_direct_solve(b, c_true):
    if np.linalg.cond(b) > 1e6:
        return
    target = b @ c_true
    c = min_norm_coefficients(target, b)
    direct = np.linalg.lstsq(b, target, rcond=None)[0]
    assert np.linalg.norm(b @ c - target) <= TOL_RESID
    np.testing.assert_allclose(c, direct, atol=1e-6)


@settings(max_examples=200, deadline=None)
@given(arrays(float, (3, 4), elements=finite), arrays(float, (3,), elements=finite))
def test_split_against_span_properties(b, v):
    c, r = split_against_span(v, b)
    assert np.linalg.norm(v - r - b @ c) <= TOL_RESID
    s = np.linalg.svd(b, compute_uv=False)
    kept = s[s > 1e-10 * s[0]] if s[0] > 0 else s[:0]
    if kept.size == 0 or kept[0] / kept[-1] <= 1e6:
        assert np.all(np.abs(b.T @ r) <= TOL_ORTH)
    else:
        # orthogonality error grows like eps * cond * ||v||
        assert np.all(np.abs(b.T @ r) <= 1e-15 * kept[0] / kept[-1] * 100)


def test_split_ill_conditioned_does_not_raise():
    b = np.array([[0, 0, 0.5, 0], [0, 1e-6, 1, 0], [0, 1, 0, 0.25]])
    v = np.ones(3)
    c, r = split_against_span(v, b)
    np.testing.assert_allclose(b @ c + r, v, atol=1e-12)
    assert np.linalg.norm(r) <= 1e-6


def test_split_numerically_zero_basis():
    b = np.full((3, 4), 2.2e-313)
    b[0, 0] = 1e-310
    with pytest.raises(NumericalError):
        split_against_span(np.ones(3), b)
