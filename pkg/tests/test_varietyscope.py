from itertools import product

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from oracles import brute_ZP_count, to_sympy
from strengthlab.field import FieldSpec
from strengthlab.multilinear import MultilinearForm, random_form
from strengthlab.polyring import HomogeneousPoly, Poly, fermat, random_homogeneous
from strengthlab.varietyscope import (
    BudgetExceeded,
    CountProfile,
    LevelCount,
    c_invariant,
    c_prime_invariant,
    complete_intersection_codim,
    corank_strata,
    count_collection,
    count_hypersurfaces,
    count_sing,
    count_tb,
    count_ZP,
    count_ZP_bruteforce,
    count_Zsym,
    diagonal_consistency,
    estimate_dimension,
    g_invariant,
    g_sym_invariant,
    min_hitting_set,
    projective_reps,
    rank_stratification,
    stratified_estimate,
    structured_codim,
    tb_rank,
    union_members,
)

F3 = FieldSpec(3)
F5 = FieldSpec(5)
F7 = FieldSpec(7)


def sym_hessian_fn(f):
    xs = sympy.symbols(f"x0:{f.nvars}")
    H = sympy.hessian(to_sympy(f, xs), xs)
    entries = [[sympy.lambdify(xs, h, "math") for h in row] for row in H.tolist()]
    return lambda *x: [[int(h(*x)) for h in row] for row in entries]


def brute_Zsym(f):
    """Pairs (v, x) with H_f(x) v = 0, Hessian taken by sympy."""
    F = f.field
    n = f.nvars
    Hf = sym_hessian_fn(f)
    total = 0
    for x in product(range(F.q), repeat=n):
        H = np.array(Hf(*x), dtype=np.int64) % F.p
        for v in product(range(F.q), repeat=n):
            if not (H.dot(np.array(v)) % F.p).any():
                total += 1
    return total


def brute_hypersurface(polys):
    F = polys[0].field
    n = polys[0].nvars
    xs = sympy.symbols(f"x0:{n}")
    fns = [sympy.lambdify(xs, to_sympy(g, xs), "math") for g in polys]
    return sum(1 for x in product(range(F.q), repeat=n) if all(fn(*x) % F.p == 0 for fn in fns))


def brute_sing(f):
    F = f.field
    n = f.nvars
    xs = sympy.symbols(f"x0:{n}")
    expr = to_sympy(f, xs)
    fns = [sympy.lambdify(xs, g, "math") for g in [expr] + [sympy.diff(expr, x) for x in xs]]
    return sum(1 for x in product(range(F.q), repeat=n) if all(fn(*x) % F.p == 0 for fn in fns))


# -- enumeration helpers ------------------------------------------------------------


@pytest.mark.parametrize("F,n", [(F3, 2), (F5, 2), (F3, 3), (FieldSpec(2, 2), 2)])
def test_projective_reps_count_and_normalisation(F, n):
    reps = projective_reps(F, n)
    assert len(reps) == (F.q ** n - 1) // (F.q - 1)
    for r in reps:
        nz = np.nonzero(r)[0]
        assert r[nz[0]] == 1
    assert len({tuple(r) for r in reps}) == len(reps)


# -- Z_P ------------------------------------------------------------------------------


def test_zero_tensor_counts_whole_space():
    P = MultilinearForm(F5, (2, 2, 3))
    prof = count_ZP(P, tower=1)
    assert prof.N(1) == 5 ** 5


def test_rank_one_tensor_hand_count():
    P = MultilinearForm.diagonal(F5, (2, 2, 2), 1)
    q = 5
    # P(., y, z) = y1 z1 e_1: zero iff y1 z1 = 0
    assert count_ZP(P, tower=1).N(1) == (2 * q - 1) * q ** 2


@pytest.mark.parametrize("r", [1, 2, 3])
def test_diagonal_tensor_counts(r):
    P = MultilinearForm.diagonal(F5, (3, 3, 3), r)
    q = 5
    assert count_ZP(P, tower=1).N(1) == (2 * q - 1) ** r * q ** (2 * (3 - r))


@given(st.integers(0, 10 ** 6), st.sampled_from([F3, F5, FieldSpec(2, 2)]),
       st.sampled_from([(2, 2, 2), (2, 3, 2), (3, 2), (2, 2, 1, 2)]))
def test_ZP_matches_bruteforce_oracle(seed, F, shape):
    rng = np.random.default_rng(seed)
    P = random_form(F, shape, rng, density=float(rng.choice([0.3, 1.0])))
    want = brute_ZP_count(P)
    assert count_ZP(P, tower=1).N(1) == want
    assert count_ZP(P, tower=1, cone=False).N(1) == want
    assert count_ZP_bruteforce(P) == want


def test_ZP_extension_level_matches_oracle():
    rng = np.random.default_rng(3)
    P = random_form(F3, (2, 2, 2), rng)
    big, emb = F3.tower(2)[1]
    prof = count_ZP(P, tower=2)
    assert prof.N(2) == brute_ZP_count(P, big, emb)
    assert prof.N(2) == count_ZP_bruteforce(P, big, emb)


@given(st.integers(0, 10 ** 6))
def test_ZP_kernel_factor_choice_gives_same_count(seed):
    # the fiber side is a computational choice; the count must not depend on it
    P = random_form(F3, (2, 2, 3, 2), np.random.default_rng(seed), density=0.5)
    counts = {count_ZP(P, tower=1, kernel_factor=k).N(1) for k in range(1, 4)}
    assert len(counts) == 1


def test_budget_exceeded_is_raised():
    P = MultilinearForm.diagonal(F5, (4, 4, 4), 2)
    with pytest.raises(BudgetExceeded) as info:
        count_ZP(P, tower=1, budget=10)
    assert info.value.budget == 10


def test_rank_stratification_diagonal():
    P = MultilinearForm.diagonal(F5, (2, 2, 2), 2)
    strata = rank_stratification(P, tower=1, cone=False)[1]
    # contracting the last factor gives diag(z1, z2)
    assert strata == {0: 1, 1: 2 * 4, 2: 16}


def test_stratified_estimate_diagonal():
    P = MultilinearForm.diagonal(F5, (2, 2, 2), 2)
    est = stratified_estimate(P, tower=2)
    assert est.codim == 2


# -- Z^sym, Sing, hypersurfaces --------------------------------------------------------


def test_zsym_fermat_closed_form():
    q = 7
    for n in (2, 3):
        f = fermat(F7, n, 3)
        # H_f(x) = diag(6 x_i): zero iff x_i v_i = 0 for all i
        assert count_Zsym(f, tower=1).N(1) == (2 * q - 1) ** n


def test_zsym_zero_form():
    f = HomogeneousPoly(F5, 2, 3)
    assert count_Zsym(f, tower=1).N(1) == 5 ** 4


@given(st.integers(0, 10 ** 6), st.sampled_from([(F3, 2, 3), (F5, 2, 3), (F3, 2, 4), (F5, 2, 2)]))
def test_zsym_matches_sympy_oracle(seed, params):
    F, n, d = params
    f = random_homogeneous(F, n, d, np.random.default_rng(seed), density=0.7)
    want = brute_Zsym(f)
    assert count_Zsym(f, tower=1).N(1) == want
    assert count_Zsym(f, tower=1, cone=False).N(1) == want


def test_sing_examples():
    assert count_sing(fermat(F7, 3, 3), tower=1).N(1) == 1
    f = HomogeneousPoly(F5, 2, 3, {(2, 1): 1})
    # grad (x^2 y) = (2xy, x^2) vanishes on the line x = 0
    assert count_sing(f, tower=1).N(1) == 5
    assert count_sing(HomogeneousPoly(F5, 3, 2), tower=1).N(1) == 125


@given(st.integers(0, 10 ** 6), st.sampled_from([(F5, 2, 3), (F7, 2, 3), (F5, 3, 2), (F3, 2, 3)]))
def test_sing_matches_sympy_oracle(seed, params):
    F, n, d = params
    f = random_homogeneous(F, n, d, np.random.default_rng(seed), density=0.6)
    assert count_sing(f, tower=1).N(1) == brute_sing(f)


def test_hypersurface_examples():
    xy = HomogeneousPoly(F5, 2, 2, {(1, 1): 1})
    assert count_hypersurfaces([xy], tower=1).N(1) == 9
    x = HomogeneousPoly(F5, 2, 1, {(1, 0): 1})
    y = HomogeneousPoly(F5, 2, 1, {(0, 1): 1})
    assert count_hypersurfaces([x, y], tower=1).N(1) == 1


@given(st.integers(0, 10 ** 6))
def test_hypersurfaces_match_sympy_oracle(seed):
    rng = np.random.default_rng(seed)
    polys = [random_homogeneous(F5, 3, 2, rng, density=0.5) for _ in range(int(rng.integers(1, 3)))]
    assert count_hypersurfaces(polys, tower=1).N(1) == brute_hypersurface(polys)


def test_corank_strata_fermat():
    q = 7
    f = fermat(F7, 3, 3)
    strata = corank_strata(f, tower=1)
    V = brute_hypersurface([f])
    assert strata[0].N(1) == V
    assert strata[3].N(1) == 1
    # corank >= 1 on V means some coordinate vanishes
    xs = [x for x in product(range(q), repeat=3)
          if sum(c ** 3 for c in x) % q == 0 and 0 in x]
    assert strata[1].N(1) == len(xs)


# -- Thom-Boardman -------------------------------------------------------------------


def test_tb_linear_and_constant_maps():
    lin = [Poly.variable(F5, 2, 0), Poly.variable(F5, 2, 1)]
    # dphi is the identity, so Z_phi = X x {0}
    assert count_tb(lin, tower=1).N(1) == 25
    assert tb_rank(lin).codim == 2
    const = [Poly.constant(F5, 2, 1), Poly.constant(F5, 2, 3)]
    assert count_tb(const, tower=1).N(1) == 5 ** 4
    assert tb_rank(const).codim == 0


def test_tb_fermat_polar_map():
    f = fermat(F7, 2, 3)
    polar = [f.partial(i) for i in range(2)]
    assert tb_rank(polar).codim == 2


# -- dimension estimates ----------------------------------------------------------------


def test_slope_estimate_examples():
    prof = CountProfile("t", 4, 5, [LevelCount(1, 5, 5 ** 3), LevelCount(2, 25, 25 ** 3)])
    est = estimate_dimension(prof)
    assert est.dim == 3 and est.codim == 1 and est.method == "slope"
    empty = CountProfile("t", 4, 5, [LevelCount(1, 5, 0), LevelCount(2, 25, 0)])
    assert estimate_dimension(empty).empty


def test_slope_estimate_on_hypersurface():
    xy = HomogeneousPoly(F5, 3, 2, {(1, 1, 0): 1})
    est = estimate_dimension(count_hypersurfaces([xy], tower=2))
    assert est.dim == 2


def test_min_hitting_set():
    assert min_hitting_set([{0}, {1}, {2}]) == 3
    assert min_hitting_set([{0, 1}, {1, 2}]) == 1
    assert min_hitting_set([{0, 1}, {2, 3}, {0, 2}]) == 2
    assert min_hitting_set([]) == 0


def test_structured_codim_cases():
    assert structured_codim([{(1, 1): 1}], 2) == 1
    assert structured_codim([{(1, 0): 1, (0, 1): 1}], 2) is None
    assert structured_codim([{(0, 0): 3}], 2) == 3
    assert structured_codim([{}], 2) == 0


@pytest.mark.parametrize("r", [1, 2, 3])
def test_g_structured_diagonal(r):
    est = g_invariant(MultilinearForm.diagonal(F5, (3, 3, 3), r))
    assert est.exact and est.codim == r


@pytest.mark.parametrize("n", [2, 3, 4])
def test_fermat_structured_invariants(n):
    f = fermat(F7, n, 3)
    assert g_sym_invariant(f).codim == n
    assert c_invariant(f).codim == n
    assert g_sym_invariant(f).exact


def test_structured_agrees_with_slopes_on_diag():
    est = g_invariant(MultilinearForm.diagonal(F5, (2, 2, 2), 2), use_counts=True)
    assert est.codim == 2
    assert "slope-differs" not in est.flags


def test_complete_intersection_codim_monomials():
    x3 = HomogeneousPoly(F7, 3, 3, {(3, 0, 0): 1})
    y3 = HomogeneousPoly(F7, 3, 3, {(0, 3, 0): 1})
    assert complete_intersection_codim([x3, y3]).codim == 2


# -- collections ------------------------------------------------------------------------


def test_collection_of_one_matches_single_counts():
    rng = np.random.default_rng(5)
    P = random_form(F3, (2, 2, 2), rng)
    prof, _ = count_collection([P], "ZP", tower=1)
    assert prof.N(1) == count_ZP(P, tower=1).N(1)
    f = random_homogeneous(F5, 2, 3, rng)
    prof, _ = count_collection([f], "Zsym", tower=1)
    assert prof.N(1) == count_Zsym(f, tower=1).N(1)


def test_collection_cubes_S_count():
    x3 = HomogeneousPoly(F7, 2, 3, {(3, 0): 1})
    y3 = HomogeneousPoly(F7, 2, 3, {(0, 3): 1})
    prof, _ = count_collection([x3, y3], "S", tower=1)
    # Jacobian diag(3x^2, 3y^2) drops rank iff xy = 0
    assert prof.N(1) == 13
    assert c_prime_invariant([x3, y3]).codim == 1


def test_duplicated_pair_fills_space():
    f = fermat(F5, 2, 3)
    prof, _ = count_collection([f, f], "S", tower=1)
    assert prof.N(1) == 25


@given(st.integers(0, 10 ** 6), st.sampled_from(["ZP", "Zsym", "S", "S+f"]))
def test_union_formula_matches_member_oracle(seed, which):
    rng = np.random.default_rng(seed)
    s = int(rng.integers(1, 3))
    if which == "ZP":
        targets = [random_form(F3, (2, 2, 2), rng, density=0.5) for _ in range(s)]
    else:
        targets = [random_homogeneous(F3 if which == "Zsym" else F5, 2, 3, rng, density=0.6) for _ in range(s)]
    prof, checks = count_collection(targets, which, tower=1, verify_union=True, cone=False)
    assert all(c.ok for c in checks)
    _, member = union_members(targets, which)
    assert prof.N(1) == int(member.sum())


@given(st.integers(0, 10 ** 6))
def test_diagonal_consistency_random(seed):
    rng = np.random.default_rng(seed)
    s = int(rng.integers(1, 3))
    targets = [random_homogeneous(F5, 2, 3, rng, density=0.7) for _ in range(s)]
    assert diagonal_consistency(targets).ok


def test_diagonal_consistency_rejects_bad_char():
    # d - 1 = 3 is divisible by 3
    with pytest.raises(ValueError):
        diagonal_consistency([fermat(F3, 2, 4)])
