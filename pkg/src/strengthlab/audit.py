"""Machine-checkable inequalities between ranks and codimension invariants.

Each row compares a left and a right operand.  An operand is exact when it
is backed by a certificate, by a certified invariant lower bound, or by the
exact-structured codimension oracle; anything from a slope estimate is an
estimate.  A row is reported violated only when both operands are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import char_admissible
from .multilinear import MultilinearForm
from .polyring import Poly, directional_derivative, multidegree_component
from . import rankcalc as rc
from . import varietyscope as vs

HOLDS = "holds"
HOLDS_EST = "holds (estimated)"
VIOLATED = "violated"
SKIP_CHAR = "skipped-char"
SKIP_INEXACT = "skipped-inexact"

EXACT_SOURCES = ("certificate", "certified-lower", "exact-structured", "trivial", "exact")


# -- constants -----------------------------------------------------------------


def theta(n: int) -> int:
    """Ordered collections of disjoint nonempty subsets whose union is a proper subset of [1, n].

    Counted by direct enumeration over the set of already-used elements.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    full = (1 << n) - 1
    memo: dict = {}

    def extend(used):
        if used in memo:
            return memo[used]
        total = 1 if used and used != full else 0
        free = full & ~used
        sub = free
        while sub:
            total += extend(used | sub)
            sub = (sub - 1) & free
        memo[used] = total
        return total

    return extend(0)


def theta_closed(n: int) -> int:
    """sum_k C(n, k) * (ordered set partitions of a k-set), k < n."""
    fubini = [1]
    for m in range(1, n + 1):
        fubini.append(sum(math.comb(m, j) * fubini[m - j] for j in range(1, m + 1)))
    return sum(math.comb(n, k) * fubini[k] for k in range(1, n))


def theta_sym(n: int) -> int:
    if n < 1:
        raise ValueError("n must be positive")
    return 2 ** (n - 1) - 1


def _compositions(k: int):
    if k == 0:
        yield ()
        return
    for first in range(1, k + 1):
        for rest in _compositions(k - first):
            yield (first,) + rest


def theta_sym_enumerated(n: int) -> int:
    """Number of positive compositions of some k with 1 <= k < n."""
    return sum(1 for k in range(1, n) for _ in _compositions(k))


def C_d(d: int) -> int:
    if d < 3:
        raise ValueError("C_d is defined for d >= 3")
    return max(2 + theta(d - 2), 2 ** (d - 2) - 1)


def constants_table(max_d: int = 5, max_n: int = 8) -> dict:
    return {
        "theta": {n: theta(n) for n in range(1, max_n + 1)},
        "theta_sym": {n: (theta_sym(n), theta_sym_enumerated(n)) for n in range(1, max_n + 1)},
        "C": {d: C_d(d) for d in range(3, max_d + 1)},
    }


# -- report types ------------------------------------------------------------------


@dataclass
class Operand:
    value: float | int | None
    source: str

    @property
    def exact(self) -> bool:
        return self.value is not None and self.source in EXACT_SOURCES


@dataclass
class AuditRow:
    id: str
    lhs: Operand
    rhs: Operand
    status: str
    note: str = ""

    def kv(self) -> str:
        def fmt(x):
            if x is None:
                return "none"
            if isinstance(x, float) and not x.is_integer():
                return f"{x:.4g}"
            return str(int(x))

        parts = [
            f"row id={self.id}",
            f"lhs={fmt(self.lhs.value)}",
            f"rhs={fmt(self.rhs.value)}",
            f"status={self.status.replace(' ', '-').replace('(', '').replace(')', '')}",
            f"lhs_src={self.lhs.source}",
            f"rhs_src={self.rhs.source}",
        ]
        if self.note:
            parts.append("note=" + self.note.replace(" ", "_"))
        return " ".join(parts)


@dataclass
class AuditReport:
    instance: str
    rows: list = dc_field(default_factory=list)
    info: dict = dc_field(default_factory=dict)

    @property
    def violated(self) -> list:
        return [r for r in self.rows if r.status == VIOLATED]

    def counts(self) -> dict:
        out: dict = {}
        for r in self.rows:
            out[r.status] = out.get(r.status, 0) + 1
        return out

    def human(self) -> str:
        lines = [f"audit: {self.instance}"]
        for k, v in self.info.items():
            lines.append(f"  {k}: {v}")
        for r in self.rows:
            lines.append(
                f"  [{r.status}] {r.id}: {r.lhs.value} vs {r.rhs.value} ({r.lhs.source} / {r.rhs.source})"
                + (f" - {r.note}" if r.note else "")
            )
        c = self.counts()
        lines.append("  summary: " + ", ".join(f"{k}={v}" for k, v in sorted(c.items())))
        return "\n".join(lines)

    def kv(self) -> str:
        lines = [f"audit instance={self.instance.replace(' ', '_')}"]
        for k, v in self.info.items():
            lines.append(f"info {k}={str(v).replace(' ', '_')}")
        lines += [r.kv() for r in self.rows]
        c = self.counts()
        lines.append(
            f"summary rows={len(self.rows)} violated={c.get(VIOLATED, 0)} holds={c.get(HOLDS, 0)} "
            f"holds_estimated={c.get(HOLDS_EST, 0)} skipped_char={c.get(SKIP_CHAR, 0)} "
            f"skipped_inexact={c.get(SKIP_INEXACT, 0)}"
        )
        return "\n".join(lines)

    def extend(self, other: "AuditReport"):
        self.rows.extend(other.rows)


def compare(row_id: str, lhs: Operand, rhs: Operand, note: str = "") -> AuditRow:
    """Row for the claim lhs <= rhs."""
    if lhs.value is None or rhs.value is None:
        return AuditRow(row_id, lhs, rhs, SKIP_INEXACT, note or "operand unavailable")
    ok = lhs.value <= rhs.value
    both = lhs.exact and rhs.exact
    if ok:
        return AuditRow(row_id, lhs, rhs, HOLDS if both else HOLDS_EST, note)
    if both:
        return AuditRow(row_id, lhs, rhs, VIOLATED, note)
    return AuditRow(row_id, lhs, rhs, SKIP_INEXACT, (note + "; " if note else "") + "estimate fails the bound")


def skipped(row_id: str, status: str, note: str) -> AuditRow:
    return AuditRow(row_id, Operand(None, "n/a"), Operand(None, "n/a"), status, note)


def _inv(est: vs.DimensionEstimate | None) -> Operand:
    if est is None or est.empty:
        return Operand(None, "empty")
    return Operand(est.codim, "exact-structured" if est.exact else "estimate")


def _scaled(op: Operand, factor, offset=0) -> Operand:
    if op.value is None:
        return op
    return Operand(factor * (op.value + offset), op.source)


def _rk_upper(res: rc.RankResult) -> Operand:
    return Operand(res.upper, "certificate")


def _rk_lower(res: rc.RankResult) -> Operand:
    return Operand(res.lower, "certified-lower")


# -- tensors ------------------------------------------------------------------------


def audit_tensor(P: MultilinearForm, rank_result: rc.RankResult | None = None,
                 g_estimate: vs.DimensionEstimate | None = None, tower=2, budget=None,
                 search_budget=None, name: str | None = None) -> AuditReport:
    rep = AuditReport(name or f"tensor shape={'x'.join(map(str, P.shape))} over {P.field}")
    if P.is_zero():
        for rid in ("g<=rk", "rk<=C_d*g"):
            rep.rows.append(skipped(rid, SKIP_INEXACT, "zero tensor: rank-0 convention outside scope"))
        return rep
    if rank_result is None:
        rank_result = rc.schmidt_rank_tensor(P, search_budget, tower, budget)
    if g_estimate is None:
        g_estimate = vs.g_invariant(P, tower, budget)
    rep.info["rank"] = rank_result.describe()
    rep.info["g"] = str(g_estimate)
    g = _inv(g_estimate)
    rep.rows.append(compare("g<=rk", g, _rk_upper(rank_result)))
    if P.d >= 3:
        rep.rows.append(compare("rk<=C_d*g", _rk_lower(rank_result), _scaled(g, C_d(P.d)),
                                "g' taken from the counted rational points"))
    return rep


def audit_tensor_collection(targets, rank_result: rc.RankResult | None = None, tower=2, budget=None,
                            search_budget=None, name: str | None = None) -> AuditReport:
    targets = list(targets)
    s = len(targets)
    P0 = targets[0]
    rep = AuditReport(name or f"tensor collection s={s} shape={'x'.join(map(str, P0.shape))} over {P0.field}")
    if rank_result is None:
        rank_result = rc.collection_rank(targets, search_budget, tower=1)
    rep.info["rank"] = rank_result.describe()
    if rank_result.upper == 0:
        rep.rows.append(skipped("rk<=C_d*(g+s-1)", HOLDS, "rank 0: bound vacuous"))
        return rep
    g = _inv(vs.g_collection_invariant(targets, tower, budget))
    if P0.d >= 3:
        rep.rows.append(compare("rk<=C_d*(g+s-1)", _rk_lower(rank_result), _scaled(g, C_d(P0.d), s - 1)))
    rep.rows.append(compare("g<=rk (s=1 slice)", _inv(vs.g_invariant(targets[0], tower, budget)),
                            _rk_upper(rc.schmidt_rank_tensor(targets[0], search_budget, tower, budget))))
    return rep


# -- polynomials -----------------------------------------------------------------------


def _gates(field, d):
    flags = char_admissible(field, max(d, 2))
    return flags


def audit_poly(f: Poly, strength_result: rc.RankResult | None = None,
               gsym: vs.DimensionEstimate | None = None, c: vs.DimensionEstimate | None = None,
               tower=2, budget=None, search_budget=None, certificates=(), name: str | None = None) -> AuditReport:
    d = f.degree
    F = f.field
    rep = AuditReport(name or f"poly n={f.nvars} d={d} over {F}")
    if f.is_zero():
        rep.rows.append(skipped("g_sym<=4rk", SKIP_INEXACT, "zero form: rank-0 convention outside scope"))
        return rep
    if strength_result is None:
        strength_result = rc.strength_poly(f, search_budget, certificates, tower, budget)
    if gsym is None:
        gsym = vs.g_sym_invariant(f, tower, budget)
    if c is None:
        c = vs.c_invariant(f, tower, budget)
    rep.info["strength"] = strength_result.describe()
    rep.info["g_sym"] = str(gsym)
    rep.info["c"] = str(c)
    flags = _gates(F, d)
    G, Cc = _inv(gsym), _inv(c)
    up, lo = _rk_upper(strength_result), _rk_lower(strength_result)
    rep.rows.append(compare("g_sym<=4rk", G, _scaled(up, 4)))
    thm = d >= 3 and flags.theorem_ok
    why = f"char {F.p} divides d(d-1)" if d >= 3 else "needs d >= 3"
    if thm:
        rep.rows.append(compare("rk<=2^(d-3)*g_sym", lo, _scaled(G, 2 ** (d - 3)), "g'_sym from rational points"))
        rep.rows.append(compare("c/2<=rk", _scaled(Cc, 0.5), up))
        rep.rows.append(compare("rk<=2^(d-3)(d+1)c", lo, _scaled(Cc, 2 ** (d - 3) * (d + 1))))
        if d % 2:
            rep.rows.append(compare("rk<=2^(d-3)d*c", lo, _scaled(Cc, 2 ** (d - 3) * d)))
    else:
        for rid in ("rk<=2^(d-3)*g_sym", "c/2<=rk", "rk<=2^(d-3)(d+1)c"):
            rep.rows.append(skipped(rid, SKIP_CHAR, why))
    rep.rows.append(compare("g_sym<=(d+1)c", G, _scaled(Cc, d + 1)))
    if d % 2:
        if flags.divides_2:
            rep.rows.append(skipped("g_sym<=d*c", SKIP_CHAR, "char 2"))
        else:
            rep.rows.append(compare("g_sym<=d*c", G, _scaled(Cc, d)))
    if flags.divides_dminus1:
        rep.rows.append(skipped("c<=g_sym", SKIP_CHAR, f"char {F.p} divides d-1"))
    else:
        rep.rows.append(compare("c<=g_sym", Cc, G))
    return rep


def _ci_operand(targets, tower, budget):
    return vs.complete_intersection_codim(targets, tower, budget)


def audit_collection(targets, rank_result: rc.RankResult | None = None, tower=2, budget=None,
                     search_budget=None, name: str | None = None) -> AuditReport:
    targets = list(targets)
    if isinstance(targets[0], MultilinearForm):
        return audit_tensor_collection(targets, rank_result, tower, budget, search_budget, name)
    s = len(targets)
    f0 = targets[0]
    d = max(g.nominal_degree for g in targets)
    F = f0.field
    rep = AuditReport(name or f"poly collection s={s} n={f0.nvars} d={d} over {F}")
    if rank_result is None:
        rank_result = rc.collection_rank(targets, search_budget, tower=1)
    rep.info["rank"] = rank_result.describe()
    if rank_result.upper == 0:
        rep.rows.append(AuditRow("collection-thresholds", Operand(0, "certificate"), Operand(0, "trivial"), HOLDS,
                                 "rank 0: all thresholds vacuous"))
        return rep
    flags = _gates(F, d)
    cprime = vs.c_prime_invariant(targets, tower, budget)
    gs = vs.g_sym_collection_invariant(targets, tower, budget)
    ci = _ci_operand(targets, tower, budget)
    rep.info["c'"] = str(cprime)
    rep.info["g_sym(fbar)"] = str(gs)
    rep.info["codim V(fbar)"] = str(ci)
    Cp, G = _inv(cprime), _inv(gs)
    up, lo = _rk_upper(rank_result), _rk_lower(rank_result)
    thm = d >= 3 and flags.theorem_ok
    is_ci = ci.codim == s and not ci.empty
    if thm:
        rep.rows.append(compare("rk<=2^(d-3)(g_sym+s-1)", lo, _scaled(G, 2 ** (d - 3), s - 1)))
        rep.rows.append(compare("c'/2<=rk", _scaled(Cp, 0.5), up))
        factor = d if d % 2 else d + 1
        if is_ci:
            rep.rows.append(compare("rk<=2^(d-3)k(c'+s-1) [ci]", lo, _scaled(Cp, 2 ** (d - 3) * factor, s - 1),
                                    "" if ci.exact else "complete intersection estimated"))
        else:
            rep.rows.append(AuditRow("rk<=2^(d-3)k(c'+s-1) [ci]", lo, _inv(ci),
                                     HOLDS if ci.exact else HOLDS_EST, "vacuous: not a complete intersection"))
        threshold = 2 ** (d - 3) * factor * (2 * s - 1)
        hyp = rank_result.lower >= threshold
        if not hyp:
            rep.rows.append(AuditRow("rk>=threshold=>ci", lo, Operand(threshold, "exact"), HOLDS,
                                     "hypothesis not established: implication vacuous"))
        elif is_ci:
            rep.rows.append(AuditRow("rk>=threshold=>ci", lo, _inv(ci), HOLDS if ci.exact else HOLDS_EST))
        else:
            rep.rows.append(AuditRow("rk>=threshold=>ci", lo, _inv(ci), VIOLATED if ci.exact else SKIP_INEXACT,
                                     "rank threshold met but codim V(fbar) != s"))
    else:
        for rid in ("rk<=2^(d-3)(g_sym+s-1)", "c'/2<=rk", "rk>=threshold=>ci"):
            rep.rows.append(skipped(rid, SKIP_CHAR, f"char {F.p} divides d(d-1)"))
    rep.rows.append(compare("g_sym<=(d+1)c'+d(s-1)", G, _scaled(Cp, d + 1, d * (s - 1) / (d + 1))))
    if d % 2 and not flags.divides_2:
        rep.rows.append(compare("g_sym<=d*c'+(d-1)(s-1)", G, _scaled(Cp, d, (d - 1) * (s - 1) / d)))
    if flags.divides_dminus1:
        rep.rows.append(skipped("c'<=g_sym [ci]", SKIP_CHAR, f"char {F.p} divides d-1"))
    elif is_ci:
        rep.rows.append(compare("c'<=g_sym [ci]", Cp, G))
    return rep


# -- derivatives -----------------------------------------------------------------------------


def sample_directions(field, n: int, k: int = 16, seed: int = 0):
    """k seeded nonzero directions in F_q^n (the zero vector is never returned)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < k:
        v = rng.integers(0, field.q, size=n)
        if v.any():
            out.append(tuple(int(a) for a in v))
    return out


def hessian_tensor(f: Poly) -> MultilinearForm:
    """f^(1,1,1)(u, v, x) of a cubic, as a trilinear form."""
    n = f.nvars
    comp = multidegree_component(f, (1, 1, 1)).poly
    entries = {}
    for exp, c in comp.terms.items():
        entries[(exp[:n].index(1), exp[n:2 * n].index(1), exp[2 * n:].index(1))] = c
    return MultilinearForm.from_entries(f.field, (n, n, n), entries)


def audit_derivative(f: Poly, directions=None, k: int = 16, seed: int = 0, strength_result=None,
                     gsym: vs.DimensionEstimate | None = None, tower=2, budget=None, search_budget=None,
                     name: str | None = None) -> AuditReport:
    d = f.degree
    F = f.field
    n = f.nvars
    rep = AuditReport(name or f"derivatives of poly n={n} d={d} over {F}")
    if f.is_zero() or d < 3:
        rep.rows.append(skipped("deriv-rank", SKIP_INEXACT, "needs a nonzero form of degree >= 3"))
        return rep
    if directions is None:
        directions = sample_directions(F, n, k, seed)
    directions = [tuple(int(a) for a in v) for v in directions if any(v)]
    flags = _gates(F, d)
    if strength_result is None:
        strength_result = rc.strength_poly(f, search_budget, (), tower, budget)
    if gsym is None:
        gsym = vs.g_sym_invariant(f, tower, budget)
    best_rank, best_rank_v = None, None
    best_c, best_c_v = None, None
    for v in directions:
        g = directional_derivative(f, v)
        if g.is_zero():
            continue
        rr = rc.strength_poly(g, search_budget, (), tower, budget)
        if best_rank is None or rr.upper > best_rank.upper:
            best_rank, best_rank_v = rr, v
        cp = vs.c_prime_invariant([g], tower, budget)
        if best_c is None or (cp.codim, cp.exact) > (best_c.codim, best_c.exact):
            best_c, best_c_v = cp, v
    rep.info["directions"] = len(directions)
    note = "best of sampled directions; genericity is not certified"
    if best_rank is None:
        rep.rows.append(skipped("deriv-rank", SKIP_INEXACT, "every sampled derivative vanished"))
    elif flags.theorem_ok:
        rep.info["rank witness"] = best_rank_v
        row = compare("2^(2-d)rk(f)<=rk(d_v f)", _scaled(_rk_lower(strength_result), 2.0 ** (2 - d)),
                      _rk_upper(best_rank), note)
        if row.status == VIOLATED:
            row.status, row.note = SKIP_INEXACT, note + "; sampled directions may be non-generic"
        rep.rows.append(row)
    else:
        rep.rows.append(skipped("2^(2-d)rk(f)<=rk(d_v f)", SKIP_CHAR, f"char {F.p} divides d(d-1)"))
    if best_c is not None and n > 1:
        rep.info["c' witness"] = best_c_v
        row = compare("g_sym-s+1<=c'(d_v f) [s=1]", _inv(gsym), _inv(best_c), note)
        if row.status == VIOLATED:
            row.status, row.note = SKIP_INEXACT, note + "; sampled directions may be non-generic"
        rep.rows.append(row)
    if n > 2 and len(directions) >= 2:
        pairs = [(directions[i], directions[i + 1]) for i in range(0, min(len(directions), 8) - 1, 2)]
        best2 = None
        for v1, v2 in pairs:
            gs2 = [directional_derivative(f, v1), directional_derivative(f, v2)]
            cp = vs.estimate_dimension(vs.count_collection(gs2, "S", tower, budget)[0])
            if best2 is None or cp.codim > best2.codim:
                best2 = cp
        if best2 is not None:
            row = compare("g_sym-s+1<=c'(d_v f) [s=2]", _scaled(_inv(gsym), 1, -1), _inv(best2), note)
            if row.status == VIOLATED:
                row.status = SKIP_INEXACT
            rep.rows.append(row)
    if d == 3:
        T = hessian_tensor(f)
        gT = vs.g_invariant(T, tower, budget)
        if gT.empty:
            rep.rows.append(skipped("rk(f^(1,1,1))<=(2^(d-3)+1)g_sym", SKIP_INEXACT, "empty variety"))
        else:
            lhs = Operand(-(-gT.codim // 3), "certified-lower" if gT.exact else "estimate")
            rep.rows.append(compare("rk(f^(1,1,1))<=(2^(d-3)+1)g_sym", lhs, _scaled(_inv(gsym), 2 ** (d - 3) + 1),
                                    "lhs is ceil(g(T)/3), a lower bound for the polynomial strength of T"))
    return rep


def full_poly_audit(f: Poly, tower=2, budget=None, search_budget=None, certificates=(), seed: int = 0,
                    k: int = 16, name: str | None = None) -> AuditReport:
    sr = rc.strength_poly(f, search_budget, certificates, tower, budget)
    rep = audit_poly(f, sr, tower=tower, budget=budget, search_budget=search_budget, name=name)
    if f.degree >= 3 and not f.is_zero():
        rep.extend(audit_derivative(f, k=k, seed=seed, strength_result=sr, tower=tower, budget=budget,
                                    search_budget=search_budget))
    return rep
