from itertools import product

import numpy as np
import pytest

from strengthlab import audit
from strengthlab.audit import (
    HOLDS,
    HOLDS_EST,
    SKIP_CHAR,
    SKIP_INEXACT,
    VIOLATED,
    Operand,
    compare,
)
from strengthlab.field import FieldSpec
from strengthlab.multilinear import MultilinearForm
from strengthlab.polyring import HomogeneousPoly, Poly, fermat, multidegree_component, random_homogeneous

F3 = FieldSpec(3)
F5 = FieldSpec(5)
F7 = FieldSpec(7)


def brute_theta(n):
    """Ordered tuples of disjoint nonempty blocks whose union misses some element of [n]."""
    total = 0
    for labels in product(range(n + 1), repeat=n):
        if 0 not in labels:
            continue
        used = sorted(set(labels) - {0})
        if used and used == list(range(1, len(used) + 1)):
            total += 1
    return total


def statuses(rep):
    return {r.id: r.status for r in rep.rows}


# -- constants ----------------------------------------------------------------------


@pytest.mark.parametrize("n", range(1, 7))
def test_theta_matches_bruteforce(n):
    assert audit.theta(n) == brute_theta(n)
    assert audit.theta_closed(n) == audit.theta(n)


def test_theta_sym_closed_and_enumerated_agree():
    for n in range(1, 9):
        assert audit.theta_sym(n) == audit.theta_sym_enumerated(n) == 2 ** (n - 1) - 1


def test_C_d_published_values():
    assert (audit.C_d(3), audit.C_d(4), audit.C_d(5)) == (2, 4, 14)


def test_constants_table_shape():
    table = audit.constants_table(max_d=5, max_n=8)
    assert table["C"] == {3: 2, 4: 4, 5: 14}
    assert all(a == b for a, b in table["theta_sym"].values())
    assert len(table["theta"]) == 8


# -- comparison semantics ---------------------------------------------------------------


def test_compare_statuses():
    ex = lambda v: Operand(v, "exact")
    est = lambda v: Operand(v, "estimate")
    assert compare("r", ex(1), ex(2)).status == HOLDS
    assert compare("r", est(1), ex(2)).status == HOLDS_EST
    assert compare("r", ex(3), ex(2)).status == VIOLATED
    assert compare("r", est(3), ex(2)).status == SKIP_INEXACT
    assert compare("r", Operand(None, "empty"), ex(2)).status == SKIP_INEXACT


def test_row_kv_is_single_line():
    row = compare("g<=rk", Operand(2, "exact-structured"), Operand(2, "certificate"))
    line = row.kv()
    assert "\n" not in line
    assert line.startswith("row id=g<=rk ")
    assert "status=holds" in line


# -- tensors ------------------------------------------------------------------------


@pytest.mark.parametrize("r", [1, 2, 3])
def test_diagonal_tensor_audit_holds(r):
    rep = audit.audit_tensor(MultilinearForm.diagonal(F5, (r, r, r), r))
    st = statuses(rep)
    assert st["g<=rk"] == HOLDS
    assert st["rk<=C_d*g"] == HOLDS
    assert not rep.violated


def test_zero_tensor_rows_are_skipped():
    rep = audit.audit_tensor(MultilinearForm(F5, (2, 2, 2)))
    assert set(statuses(rep).values()) == {SKIP_INEXACT}


def test_tensor_collection_audit():
    P1 = MultilinearForm.diagonal(F5, (2, 2, 2), 2)
    P2 = MultilinearForm.diagonal(F5, (2, 2, 2), 1)
    rep = audit.audit_collection([P1, P2])
    assert not rep.violated
    assert "rk<=C_d*(g+s-1)" in statuses(rep)


# -- polynomials ----------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4])
def test_fermat_cubic_audit_has_no_violations(n):
    rep = audit.audit_poly(fermat(F7, n, 3))
    st = statuses(rep)
    assert not rep.violated
    for rid in ("g_sym<=4rk", "rk<=2^(d-3)*g_sym", "c/2<=rk", "g_sym<=(d+1)c", "g_sym<=d*c", "c<=g_sym"):
        assert st[rid] == HOLDS, rid


def test_char_dividing_degree_skips_rows():
    rep = audit.audit_poly(fermat(F3, 3, 3))
    st = statuses(rep)
    assert st["rk<=2^(d-3)*g_sym"] == SKIP_CHAR
    assert st["c/2<=rk"] == SKIP_CHAR
    assert not rep.violated


def test_char_dividing_d_minus_one():
    # d = 4, p = 3 divides d - 1
    rep = audit.audit_poly(fermat(FieldSpec(3), 2, 4))
    assert statuses(rep)["c<=g_sym"] == SKIP_CHAR


def test_zero_form_rows_are_skipped():
    rep = audit.audit_poly(HomogeneousPoly(F7, 2, 3))
    assert set(statuses(rep).values()) == {SKIP_INEXACT}


def test_cube_pair_collection_audit():
    x3 = HomogeneousPoly(F7, 3, 3, {(3, 0, 0): 1})
    y3 = HomogeneousPoly(F7, 3, 3, {(0, 3, 0): 1})
    rep = audit.audit_collection([x3, y3])
    assert not rep.violated
    assert len(rep.rows) >= 3


# -- derivatives ------------------------------------------------------------------------


def test_sample_directions_are_nonzero_and_seeded():
    a = audit.sample_directions(F3, 2, k=20, seed=4)
    b = audit.sample_directions(F3, 2, k=20, seed=4)
    assert a == b
    assert all(any(v) for v in a)


def test_hessian_tensor_matches_third_derivative_component():
    rng = np.random.default_rng(0)
    f = random_homogeneous(F7, 3, 3, rng)
    T = audit.hessian_tensor(f)
    comp = multidegree_component(f, (1, 1, 1))
    for _ in range(10):
        u, v, x = (rng.integers(0, 7, size=3) for _ in range(3))
        assert T.eval([u, v, x]) == comp.eval(u, v, x)


def test_derivative_audit_on_fermat_direction():
    f = fermat(F7, 4, 3)
    rep = audit.audit_derivative(f, directions=[(1, 1, 1, 1)])
    st = statuses(rep)
    assert not rep.violated
    assert "2^(2-d)rk(f)<=rk(d_v f)" in st
    assert st["rk(f^(1,1,1))<=(2^(d-3)+1)g_sym"] in (HOLDS, HOLDS_EST)


def test_derivative_rows_never_report_violated():
    # random directions over a tiny field are often degenerate; such rows must be downgraded
    x, y, z = (Poly.variable(F5, 3, i) for i in range(3))
    f = HomogeneousPoly.from_poly(x * y * z + x ** 3)
    for seed in range(5):
        rep = audit.audit_derivative(f, k=3, seed=seed)
        assert not rep.violated


def test_full_audit_reports_every_row_once():
    rep = audit.full_poly_audit(fermat(F7, 3, 3), k=4)
    ids = [r.id for r in rep.rows]
    assert len(ids) == len(set(ids))
    assert "summary rows=" in rep.kv().splitlines()[-1]
