"""Acceptance suite: one test per criterion, each timed against its limit.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line; the lines are
also collected and repeated in the pytest terminal summary.
"""

import io
import os
import time
from contextlib import contextmanager

import numpy as np
import sympy

import calculus
from families import low_rank_family, random_phis_alpha
from oracles import brute_ZP_count, to_sympy
from strengthlab import audit, cli, linalg
from strengthlab import formats as fm
from strengthlab import rankcalc as rc
from strengthlab import varietyscope as vs
from strengthlab.detkernel import GenericPointError, check_minors, generic_point, kappa, kernel_sections
from strengthlab.field import FieldSpec
from strengthlab.multilinear import MultilinearForm, random_form
from strengthlab.polyring import fermat, hessian, multidegree_component, random_homogeneous, vandermonde_extract

INSTANCES = os.path.join(os.path.dirname(__file__), "..", "instances")
RESULTS = []

F5 = FieldSpec(5)
F7 = FieldSpec(7)


@contextmanager
def criterion(number, title, limit):
    t0 = time.perf_counter()
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        line = f"ACCEPTANCE {number} FAIL {title} ({time.perf_counter() - t0:.2f}s): {exc!r}"[:300]
        print(line)
        RESULTS.append(line)
        raise
    elapsed = time.perf_counter() - t0
    ok = elapsed < limit
    extra = " ".join(f"{k}={v}" for k, v in detail.items())
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'} {title} ({elapsed:.2f}s, limit {limit:g}s) {extra}".rstrip()
    print(line)
    RESULTS.append(line)
    assert ok, f"runtime {elapsed:.2f}s exceeds {limit}s"


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run_command(argv, out, err)
    return code, out.getvalue()


# 1 ---------------------------------------------------------------------------------------


def test_acceptance_1_constants():
    with criterion(1, "constants C_3, C_4, C_5 and theta^sym", 1.0) as info:
        code, out = run_cli(["constants", "--max-d", "5", "--max-n", "8", "--format", "kv"])
        assert code == 0
        C = {}
        sym = {}
        for line in out.splitlines():
            tag, *rest = line.split()
            kv = dict(p.split("=") for p in rest)
            if tag == "C":
                C[int(kv["d"])] = int(kv["value"])
            elif tag == "theta_sym":
                sym[int(kv["n"])] = (int(kv["closed"]), int(kv["enumerated"]))
        assert C == {3: 2, 4: 4, 5: 14}
        assert sorted(sym) == list(range(1, 9))
        for n, (closed, enum) in sym.items():
            assert closed == enum == 2 ** (n - 1) - 1
        info["C"] = ",".join(str(C[d]) for d in (3, 4, 5))


# 2 ---------------------------------------------------------------------------------------


def test_acceptance_2_diagonal_tensors():
    with criterion(2, "diagonal tensors r=1..3 over F_5", 30.0) as info:
        for r in (1, 2, 3):
            P = MultilinearForm.diagonal(F5, (r, r, r), r)
            g = vs.g_invariant(P, tower=2, use_counts=True)
            assert g.exact and g.codim == r
            assert "slope-differs" not in g.flags
            rk = rc.schmidt_rank_tensor(P, tower=2)
            assert rk.exact and rk.upper == r
            assert rc.verify_certificate(P, rk.certificate)
            rep = audit.audit_tensor(P, rk, g, tower=2)
            st = {row.id: row.status for row in rep.rows}
            assert st == {"g<=rk": audit.HOLDS, "rk<=C_d*g": audit.HOLDS}
        info["ranks"] = "1,2,3"


# 3 ---------------------------------------------------------------------------------------


def test_acceptance_3_fermat_cubics():
    with criterion(3, "Fermat cubics n=2..4 over F_7", 60.0) as info:
        rows = 0
        for n in (2, 3, 4):
            f = fermat(F7, n, 3)
            c = vs.c_invariant(f, tower=2, use_counts=n < 4)
            gs = vs.g_sym_invariant(f, tower=2, use_counts=n < 4)
            assert c.exact and c.codim == n
            assert gs.exact and gs.codim == n
            assert "slope-differs" not in c.flags + gs.flags
            sr = rc.strength_poly(f, tower=2)
            assert sr.exact and sr.upper == -(-n // 2)
            rep = audit.audit_poly(f, sr, gs, c, tower=2)
            rep.extend(audit.audit_derivative(f, k=8, seed=0, strength_result=sr, gsym=gs, tower=2))
            assert not rep.violated, [r.kv() for r in rep.violated]
            for rid in ("g_sym<=4rk", "rk<=2^(d-3)*g_sym", "c/2<=rk", "rk<=2^(d-3)(d+1)c", "rk<=2^(d-3)d*c",
                        "g_sym<=(d+1)c", "g_sym<=d*c", "c<=g_sym"):
                assert any(r.id == rid and r.status == audit.HOLDS for r in rep.rows), rid
            rows += len(rep.rows)
        info["rows"] = rows
        info["violated"] = 0


# 4 ---------------------------------------------------------------------------------------


def test_acceptance_4_product_of_quadrics():
    with criterion(4, "q1(x) q2(y) over F_7", 10.0) as info:
        inst = fm.parse_instance(os.path.join(INSTANCES, "q1q2.inst"))
        f = inst.first("poly")
        assert f == cli.q1q2(F7)
        # both quadric factors are nondegenerate: constant Hessians of full rank 2
        (cert,) = inst.certificates
        for q in cert.terms[0]:
            H = np.array([[h.eval([0] * 4) for h in row] for row in hessian(q)], dtype=np.int64)
            assert linalg.rank(F7, H) == 2
        sr = rc.strength_poly(f, certificates=inst.certificates, tower=2)
        assert sr.exact and sr.upper == 1
        gs = vs.g_sym_invariant(f, tower=2)
        assert gs.codim <= 4
        info["strength"] = sr.upper
        info["g_sym"] = f"{gs.codim}({gs.method})"


# 5 ---------------------------------------------------------------------------------------


def _second_taylor_component_oracle(f, v, x):
    """Coefficient of t^2 in f(x + t v), via sympy: this is f^(2, d-2)(v, x)."""
    n = f.nvars
    xs = sympy.symbols(f"x0:{n}")
    t = sympy.Symbol("t")
    expr = to_sympy(f, xs).subs({xs[k]: int(x[k]) + t * int(v[k]) for k in range(n)}, simultaneous=True)
    return int(sympy.expand(expr).coeff(t, 2)) % f.field.p


def test_acceptance_5_derivative_calculus():
    with criterion(5, "calculus identities on 1000 polys + 100 Vandermonde", 60.0) as info:
        rng = np.random.default_rng(20240605)
        skipped = tested = 0
        while tested < 1000:
            n = int(rng.integers(1, 5))
            d = int(rng.integers(1, 6))
            f = random_homogeneous(F7, n, d, rng, density=float(rng.choice([0.3, 0.7])))
            if f.is_zero():
                continue
            tested += 1
            p = int(rng.integers(1, min(3, d) + 1))
            cuts = sorted(int(c) for c in rng.integers(0, d + 1, size=p - 1))
            md = tuple(b - a for a, b in zip([0] + cuts, cuts + [d]))
            if not calculus.multinomial_evaluation(f, md):
                skipped += 1
            i = int(rng.integers(0, p))
            m = int(rng.integers(0, md[i] + 1))
            pts = [rng.integers(0, 7, size=n) for _ in range(p)]
            calculus.derivative_of_component(f, md, i, m, pts)
            calculus.taylor_sum(f, rng.integers(0, 7, size=n))
            if d >= 2 and not calculus.euler_relation(f):
                skipped += 1
        for _ in range(100):
            n = int(rng.integers(1, 5))
            d = int(rng.integers(2, 6))
            f = random_homogeneous(F7, n, d, rng)
            lambdas = [int(a) for a in rng.permutation(7)[: d + 1]]
            res = vandermonde_extract(f, lambdas)
            assert res.combination == res.component
            v, x = rng.integers(0, 7, size=(2, n))
            comp = multidegree_component(f, (2, d - 2))
            assert comp.eval(v, x) == _second_taylor_component_oracle(f, v, x)
        info["polys"] = tested
        info["char_excluded"] = skipped


# 6 ---------------------------------------------------------------------------------------


def _poly_identity_zero(F, fam, vec):
    """fam . vec == 0 as polynomials, expanded independently by sympy."""
    xs = sympy.symbols(f"x0:{max(fam.nvars, 1)}")[: fam.nvars]
    for row in fam.entries:
        expr = sum(to_sympy(a, xs) * to_sympy(b, xs) for a, b in zip(row, vec))
        expanded = sympy.Poly(sympy.expand(expr), *xs) if xs else sympy.Integer(sympy.expand(expr))
        coeffs = expanded.coeffs() if xs else [expanded]
        if any(int(c) % F.p for c in coeffs):
            return False
    return True


def test_acceptance_6_kappa_and_kernel_sections():
    with criterion(6, "kappa_r on 200 families + kernel sections", 30.0) as info:
        rng = np.random.default_rng(77)
        done = sections = 0
        while done < 200:
            fam, r = low_rank_family(F5, rng)
            if r + 1 > fam.cols:
                continue
            assert check_minors(fam, r + 1).vanish
            phis, alpha = random_phis_alpha(F5, fam, r, rng)
            res = kappa(fam, r, phis, alpha)
            assert res.precondition.vanish and res.in_kernel
            assert _poly_identity_zero(F5, fam, res.vector)
            done += 1
            x0, rank0 = generic_point(fam)
            try:
                ks = kernel_sections(fam, x0)
            except GenericPointError:
                continue
            at = ks.at(x0)
            assert len(ks.sections) == fam.cols - rank0
            if ks.sections:
                assert not linalg.matmul(F5, fam.eval(x0), at.T).any()
                assert linalg.rank(F5, at) == len(ks.sections)
                for s in ks.sections:
                    assert _poly_identity_zero(F5, fam, s)
            sections += 1
        info["families"] = done
        info["kernel_checks"] = sections


# 7 ---------------------------------------------------------------------------------------


def _collection_instance(rng):
    s = int(rng.integers(1, 4))
    kind = ["ZP", "Zsym", "S", "S+f"][int(rng.integers(0, 4))]
    if kind == "ZP":
        while True:
            shape = tuple(int(a) for a in rng.integers(1, 4, size=int(rng.integers(2, 4))))
            if sum(shape[1:]) <= 6:
                break
        return kind, [random_form(F5, shape, rng, density=0.5) for _ in range(s)]
    n = int(rng.integers(1, 4))
    d = int(rng.choice([2, 3, 4]))
    return kind, [random_homogeneous(F5, n, d, rng, density=0.6) for _ in range(s)]


def test_acceptance_7_union_and_diagonal():
    with criterion(7, "union formula and diagonal consistency on 50 collections over F_5", 120.0) as info:
        rng = np.random.default_rng(2024)
        points = diag = 0
        for _ in range(50):
            kind, targets = _collection_instance(rng)
            prof, checks = vs.count_collection(targets, kind, tower=1, cone=False, verify_union=True)
            assert all(c.ok for c in checks)
            vecs, member = vs.union_members(targets, kind)
            assert len(member) <= 5 ** 6
            assert prof.N(1) == int(member.sum())
            points += checks[0].points
            if kind != "ZP":
                dc = vs.diagonal_consistency(targets)
                assert dc.ok, dc
                diag += 1
        info["points"] = points
        info["diagonal_checks"] = diag


# 8 ---------------------------------------------------------------------------------------


def test_acceptance_8_fiber_formula():
    with criterion(8, "corank summation vs brute force on 50 tensors", 60.0) as info:
        rng = np.random.default_rng(8)
        ext = 0
        for i in range(50):
            while True:
                shape = tuple(int(a) for a in rng.integers(1, 4, size=int(rng.integers(2, 5))))
                if 5 ** sum(shape[1:]) <= 5 ** 6:
                    break
            P = random_form(F5, shape, rng, density=float(rng.choice([0.3, 0.6, 1.0])))
            want = vs.count_ZP_bruteforce(P, budget=5 ** 6)
            prof = vs.count_ZP(P, tower=1)
            assert prof.N(1) == want
            if 5 ** sum(shape[1:]) <= 5 ** 4:
                assert brute_ZP_count(P) == want
            if i % 10 == 0 and sum(shape[1:]) <= 3:
                big, emb = F5.tower(2)[1]
                assert vs.count_ZP(P, tower=2).N(2) == vs.count_ZP_bruteforce(P, big, emb, budget=5 ** 6)
                ext += 1
        info["tensors"] = 50
        info["extension_checks"] = ext


# 9 ---------------------------------------------------------------------------------------


def test_acceptance_9_regression_corpus():
    with criterion(9, "regression corpus with 200 random audits", 600.0) as info:
        code, out = run_cli(["corpus", "--random", "200", "--dir", INSTANCES, "--format", "kv"])
        last = dict(p.split("=") for p in out.splitlines()[-1].split()[1:])
        assert last["violated"] == "0"
        assert code == 0
        info.update(last)
