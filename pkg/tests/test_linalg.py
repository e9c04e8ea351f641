import numpy as np
import pytest
from hypothesis import given, strategies as st

from strengthlab import linalg
from strengthlab.field import FieldSpec

from oracles import brute_rank

SMALL = [FieldSpec(2), FieldSpec(3), FieldSpec(5), FieldSpec(2, 2)]


@st.composite
def matrices(draw, max_rows=4, max_cols=4):
    F = draw(st.sampled_from(SMALL))
    m = draw(st.integers(1, max_rows))
    n = draw(st.integers(1, max_cols))
    seed = draw(st.integers(0, 10 ** 6))
    rng = np.random.default_rng(seed)
    A = rng.integers(0, F.q, size=(m, n))
    if draw(st.booleans()):
        A = np.where(rng.random((m, n)) < 0.5, A, 0)
    return F, A


@given(matrices(max_rows=3))
def test_rank_matches_row_space_size(FA):
    F, A = FA
    assert linalg.rank(F, A) == brute_rank(F, A)


@given(matrices())
def test_rref_is_reduced(FA):
    F, A = FA
    R, piv = linalg.rref(F, A)
    assert len(piv) == linalg.rank(F, A)
    for i, c in enumerate(piv):
        assert R[i, c] == 1
        assert all(R[k, c] == 0 for k in range(R.shape[0]) if k != i)
    assert not R[len(piv):].any()


@given(matrices())
def test_nullspace(FA):
    F, A = FA
    N = linalg.nullspace(F, A)
    assert N.shape[0] == A.shape[1] - linalg.rank(F, A)
    if N.shape[0]:
        assert not linalg.matmul(F, A, N.T).any()
        assert linalg.rank(F, N) == N.shape[0]


@given(matrices(), st.integers(0, 10 ** 6))
def test_solve(FA, seed):
    F, A = FA
    rng = np.random.default_rng(seed)
    x0 = rng.integers(0, F.q, size=A.shape[1])
    b = linalg.matmul(F, A, x0[:, None])[:, 0]
    x = linalg.solve(F, A, b)
    assert x is not None
    assert np.array_equal(linalg.matmul(F, A, x[:, None])[:, 0], b)
    c = rng.integers(0, F.q, size=A.shape[0])
    y = linalg.solve(F, A, c)
    aug = np.concatenate([A, c[:, None]], axis=1)
    consistent = linalg.rank(F, aug) == linalg.rank(F, A)
    assert (y is not None) == consistent


@pytest.mark.parametrize("F", SMALL + [FieldSpec(7), FieldSpec(3, 2)])
def test_inverse(F):
    rng = np.random.default_rng(3)
    done = 0
    while done < 5:
        A = rng.integers(0, F.q, size=(3, 3))
        if linalg.rank(F, A) < 3:
            with pytest.raises(ValueError):
                linalg.inverse(F, A)
            continue
        Ainv = linalg.inverse(F, A)
        assert np.array_equal(linalg.matmul(F, A, Ainv), np.eye(3, dtype=np.int64))
        done += 1


@given(st.sampled_from(SMALL), st.integers(0, 10 ** 6))
def test_batch_rank_matches_rank(F, seed):
    rng = np.random.default_rng(seed)
    stack = rng.integers(0, F.q, size=(6, 3, 4))
    stack[0] = 0
    assert linalg.batch_rank(F, stack).tolist() == [linalg.rank(F, M) for M in stack]
