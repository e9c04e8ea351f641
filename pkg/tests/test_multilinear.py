from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from strengthlab import linalg
from strengthlab.field import FieldSpec
from strengthlab.multilinear import (
    IndexPartition,
    MultilinearForm,
    ShapeError,
    flatten_family,
    ideal_element,
    ideal_membership,
    kernel_of_restriction,
    outer_product,
    random_form,
    restrict,
)

F5 = FieldSpec(5)


def e(i, n=2):
    v = np.zeros(n, dtype=np.int64)
    v[i] = 1
    return v


@st.composite
def forms(draw, fields=(FieldSpec(3), FieldSpec(5), FieldSpec(2, 2)), max_d=3):
    F = draw(st.sampled_from(fields))
    d = draw(st.integers(1, max_d))
    shape = tuple(draw(st.integers(1, 3)) for _ in range(d))
    rng = np.random.default_rng(draw(st.integers(0, 10 ** 6)))
    return random_form(F, shape, rng, density=draw(st.sampled_from([0.3, 1.0]))), rng


def test_eval_diagonal_examples():
    P = MultilinearForm.diagonal(F5, (2, 2, 2), 2)
    assert P.eval([e(0), e(0), e(0)]) == 1
    assert P.eval([e(0), e(1), e(0)]) == 0


@given(forms())
def test_eval_is_multilinear(Prng):
    P, rng = Prng
    F = P.field
    vecs = [rng.integers(0, F.q, size=n) for n in P.shape]
    u2 = rng.integers(0, F.q, size=P.shape[0])
    c = int(rng.integers(0, F.q))
    lhs = P.eval([F.vadd(vecs[0], F.vmul(u2, c))] + vecs[1:])
    rhs = F.add(P.eval(vecs), F.mul(c, P.eval([u2] + vecs[1:])))
    assert lhs == rhs


@given(forms())
def test_eval_matches_coefficient_sum(Prng):
    P, rng = Prng
    F = P.field
    vecs = [rng.integers(0, F.q, size=n) for n in P.shape]
    acc = 0
    for idx in product(*[range(n) for n in P.shape]):
        term = int(P.coeffs[idx])
        for v, i in zip(vecs, idx):
            term = F.mul(term, int(v[i]))
        acc = F.add(acc, term)
    assert P.eval(vecs) == acc


def test_outer_product_example():
    A = MultilinearForm.linear(F5, e(0))
    B = MultilinearForm.from_entries(F5, (2, 2), {(0, 0): 1})
    P = outer_product(A, B, IndexPartition((0,), (1, 2)))
    assert P == MultilinearForm.from_entries(F5, (2, 2, 2), {(0, 0, 0): 1})


def test_outer_product_with_zero_factor():
    A = MultilinearForm(F5, (2,))
    B = random_form(F5, (2, 3), np.random.default_rng(0))
    assert outer_product(A, B, IndexPartition((0,), (1, 2))).is_zero()


def test_outer_product_of_bilinear_forms_is_rank_one():
    from strengthlab.rankcalc import DecompositionCertificate, verify_certificate

    A = MultilinearForm(F5, (2, 2), np.eye(2, dtype=np.int64))
    B = MultilinearForm(F5, (2, 2), [[0, 1], [4, 0]])
    part = IndexPartition((0, 1), (2, 3))
    P = outer_product(A, B, part)
    assert verify_certificate(P, DecompositionCertificate("tensor", [(part, A, B)]))


@given(forms(max_d=3), st.integers(0, 10 ** 6))
def test_outer_product_evaluates_as_product(Prng, seed):
    P, rng = Prng
    if P.d < 2:
        return
    F = P.field
    Q = random_form(F, P.shape[1:], rng)
    A = random_form(F, P.shape[:1], rng)
    part = IndexPartition((0,), tuple(range(1, P.d)))
    T = outer_product(A, Q, part)
    vecs = [rng.integers(0, F.q, size=n) for n in P.shape]
    assert T.eval(vecs) == F.mul(A.eval(vecs[:1]), Q.eval(vecs[1:]))


def test_partition_validation():
    with pytest.raises(ShapeError):
        IndexPartition((0,), (0, 1))
    with pytest.raises(ShapeError):
        IndexPartition((), (0, 1))


def test_flatten_family_diagonal():
    P = MultilinearForm.diagonal(F5, (2, 2, 2), 2)
    fam = flatten_family(P, pivot=0, second=1)
    for z in product(range(5), repeat=2):
        assert fam.eval(z).tolist() == [[z[0], 0], [0, z[1]]]


def test_flatten_family_rank_one_has_rank_at_most_one():
    A = MultilinearForm.linear(F5, [1, 2])
    B = MultilinearForm(F5, (2, 2), [[1, 3], [0, 2]])
    P = outer_product(A, B, IndexPartition((0,), (1, 2)))
    fam = flatten_family(P, 0, 1)
    for z in product(range(5), repeat=2):
        assert linalg.rank(F5, fam.eval(z)) <= 1


def test_flatten_family_zero_tensor():
    fam = flatten_family(MultilinearForm(F5, (2, 2, 3)), 0, 1)
    assert all(c.is_zero() for row in fam.entries for c in row)


@given(forms(max_d=3), st.integers(0, 10 ** 6))
def test_flatten_family_fiber_is_kernel(Prng, seed):
    """P(., v, w) = 0 exactly when v lies in the kernel of P_W(w)."""
    P, rng = Prng
    if P.d != 3:
        return
    F = P.field
    fam = flatten_family(P, 0, 1)
    w = rng.integers(0, F.q, size=P.shape[2])
    M = fam.eval(w)
    for v in product(range(F.q), repeat=P.shape[1]):
        v = np.array(v)
        zero = not P.contract(2, w).contract(1, v).coeffs.any()
        assert zero == (not linalg.matmul(F, M, v[:, None]).any())


def test_restrict_examples():
    P = MultilinearForm.diagonal(F5, (2, 2, 2), 2)
    R = restrict(P, 0, [e(0)])
    assert R == MultilinearForm.from_entries(F5, (1, 2, 2), {(0, 0, 0): 1})
    assert restrict(P, 1, [e(0), e(1)]) == P


@given(forms(max_d=3), st.integers(0, 10 ** 6))
def test_restrict_commutes_with_eval(Prng, seed):
    P, rng = Prng
    F = P.field
    n = P.shape[0]
    B = np.eye(n, dtype=np.int64)[: max(1, n - 1)]
    B = F.vadd(B, np.triu(rng.integers(0, F.q, size=B.shape), 1))
    R = restrict(P, 0, B)
    vecs = [rng.integers(0, F.q, size=k) for k in R.shape]
    lifted = linalg.matmul(F, vecs[0][None, :], B)[0]
    assert R.eval(vecs) == P.eval([lifted] + vecs[1:])


def test_membership_examples():
    P = MultilinearForm.from_entries(F5, (2, 2, 2), {(0, 0, 0): 1})
    gens = [((0,), MultilinearForm.linear(F5, e(0)))]
    res = ideal_membership(P, gens)
    assert res.member
    assert res.cofactors[0] == MultilinearForm.from_entries(F5, (2, 2), {(0, 0): 1})
    Q = MultilinearForm.diagonal(F5, (2, 2, 2), 2)
    assert not ideal_membership(Q, gens).member
    Z = ideal_membership(MultilinearForm(F5, (2, 2, 2)), gens)
    assert Z.member and all(c.is_zero() for c in Z.cofactors)


@given(forms(max_d=3), st.integers(0, 10 ** 6))
def test_membership_of_constructed_elements(Prng, seed):
    P, rng = Prng
    if P.d < 2:
        return
    F = P.field
    gens = []
    for I in [(0,), (P.d - 1,)]:
        G = random_form(F, tuple(P.shape[a] for a in I), rng)
        gens.append((I, G))
    cof = [random_form(F, tuple(n for a, n in enumerate(P.shape) if a not in I), rng) for I, _ in gens]
    T = ideal_element(P.shape, gens, cof, F)
    res = ideal_membership(T, gens)
    assert res.member
    assert ideal_element(P.shape, gens, res.cofactors, F) == T


def test_kernel_of_restriction_examples():
    gens = kernel_of_restriction(F5, (2, 2), 0, [e(0)])
    assert len(gens) == 1
    I, ell = gens[0]
    assert I == (0,) and ell.coeffs.tolist() == [0, 1]
    assert kernel_of_restriction(F5, (2, 2), 0, [e(0), e(1)]) == []


@given(st.integers(0, 10 ** 6))
def test_forms_vanishing_on_subspace_are_members(seed):
    rng = np.random.default_rng(seed)
    F = FieldSpec(3)
    shape = (3, 2, 2)
    basis = [np.array([1, int(rng.integers(0, 3)), 0])]
    gens = kernel_of_restriction(F, shape, 0, basis)
    # P = sum_l l(x) Q_l(y, z) restricts to zero on span(basis)
    P = ideal_element(shape, gens, [random_form(F, (2, 2), rng) for _ in gens], F)
    assert restrict(P, 0, basis).is_zero()
    assert ideal_membership(P, gens).member
