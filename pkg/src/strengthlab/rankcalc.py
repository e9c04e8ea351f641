"""Schmidt rank and strength: certificates, bounded searches and certified lower bounds.

Upper bounds always come with a decomposition certificate that has been
re-verified.  Lower bounds are certified only when they come from an exact
invariant (valid over the algebraic closure, hence over every field);
slope-estimated invariants are kept separately as estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from itertools import combinations, product

import numpy as np

from . import linalg
from .field import FieldSpec, char_admissible
from .multilinear import (
    IndexPartition,
    MultilinearForm,
    ShapeError,
    ideal_membership,
    outer_product,
)
from .polyring import Poly, hessian, monomials, truncated_ideal_membership
from . import varietyscope as vs

DEFAULT_SEARCH_BUDGET = 10 ** 5


class CertificateError(ValueError):
    pass


class _Exhausted(Exception):
    pass


# -- certificates -------------------------------------------------------------------


@dataclass
class DecompositionCertificate:
    """kind "tensor": terms (IndexPartition, P_I, P_J); kind "poly": terms (g, h)."""

    kind: str
    terms: list = dc_field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("tensor", "poly"):
            raise CertificateError(f"unknown certificate kind {self.kind!r}")

    @property
    def rank(self) -> int:
        return len(self.terms)

    def __add__(self, other: "DecompositionCertificate") -> "DecompositionCertificate":
        if self.kind != other.kind:
            raise CertificateError("cannot join certificates of different kinds")
        return DecompositionCertificate(self.kind, list(self.terms) + list(other.terms))

    def reconstruct(self, field: FieldSpec, target_shape=None, nvars=None):
        if self.kind == "tensor":
            total = MultilinearForm(field, target_shape)
            for part, A, B in self.terms:
                total = total + outer_product(A, B, part)
            return total
        total = Poly.zero(field, nvars)
        for g, h in self.terms:
            total = total + g * h
        return total


def _check_terms(target, cert: DecompositionCertificate):
    if cert.kind == "tensor":
        if not isinstance(target, MultilinearForm):
            raise CertificateError("tensor certificate for a non-tensor target")
        for part, A, B in cert.terms:
            if not isinstance(part, IndexPartition) or part.d != target.d:
                raise CertificateError("term partition does not match the tensor order")
            if A.shape != tuple(target.shape[a] for a in part.I) or B.shape != tuple(
                target.shape[b] for b in part.J
            ):
                raise CertificateError("factor shape does not match the partition")
            if A.field != target.field or B.field != target.field:
                raise CertificateError("factor over a different field")
        return
    if not isinstance(target, Poly):
        raise CertificateError("polynomial certificate for a non-polynomial target")
    d = target.degree if not target.is_zero() else getattr(target, "d", None)
    for g, h in cert.terms:
        if g.nvars != target.nvars or h.nvars != target.nvars:
            raise CertificateError("factor in a different number of variables")
        if g.field != target.field or h.field != target.field:
            raise CertificateError("factor over a different field")
        for x in (g, h):
            if x.is_zero() or not x.is_homogeneous() or x.degree < 1:
                raise CertificateError("factors must be nonzero homogeneous of positive degree")
        if d is not None and g.degree + h.degree != d:
            raise CertificateError(f"factor degrees {g.degree}+{h.degree} do not sum to {d}")


def verify_certificate(target, cert: DecompositionCertificate) -> bool:
    """True iff the certificate's terms sum exactly to ``target``.

    Malformed certificates (degree-0 factors, wrong shapes) raise CertificateError.
    """
    _check_terms(target, cert)
    if cert.kind == "tensor":
        return cert.reconstruct(target.field, target.shape) == target
    return cert.reconstruct(target.field, nvars=target.nvars) == Poly(target.field, target.nvars, target.terms)


# -- results --------------------------------------------------------------------------


@dataclass
class RankResult:
    lower: int
    lower_source: str
    upper: int | None = None
    certificate: DecompositionCertificate | None = None
    estimated_lower: int | None = None
    estimated_source: str | None = None
    budget_exhausted: bool = False
    notes: list = dc_field(default_factory=list)
    per_field: dict = dc_field(default_factory=dict)
    combination: tuple | None = None
    field: FieldSpec | None = None

    def __post_init__(self):
        if self.upper is not None and self.lower > self.upper:
            raise AssertionError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def exact(self) -> bool:
        return self.upper is not None and self.lower == self.upper

    @property
    def value(self) -> int | None:
        return self.upper if self.exact else None

    def describe(self) -> str:
        if self.exact:
            return f"exact {self.upper} (lower via {self.lower_source}, certificate with {self.upper} terms)"
        up = "none" if self.upper is None else str(self.upper)
        est = f", estimated lower {self.estimated_lower} via {self.estimated_source}" if self.estimated_lower else ""
        return f"{self.lower} <= rk <= {up} (lower via {self.lower_source}{est})"


# -- subspace enumeration ---------------------------------------------------------------


def _rref_slots(N: int, pivots):
    piv = set(pivots)
    return [(a, j) for a, c in enumerate(pivots) for j in range(c + 1, N) if j not in piv]


def max_subspace_weight(N: int, k: int) -> int:
    return k * (N - k)


def rref_subspaces(field: FieldSpec, N: int, k: int, weight: int | None = None):
    """k x N reduced row echelon matrices of rank k (one per k-dim subspace of F_q^N).

    Ordered by the number of nonzero non-pivot entries, then pivot set, so that
    sparse subspaces come first.  With ``weight`` only that layer is produced.
    """
    if k == 0:
        if weight in (None, 0):
            yield np.zeros((0, N), dtype=np.int64)
        return
    if k > N:
        return
    weights = [weight] if weight is not None else range(max_subspace_weight(N, k) + 1)
    nonzero = range(1, field.q)
    for w in weights:
        for pivots in combinations(range(N), k):
            slots = _rref_slots(N, pivots)
            if w > len(slots):
                continue
            base = np.zeros((k, N), dtype=np.int64)
            for a, c in enumerate(pivots):
                base[a, c] = 1
            for chosen in combinations(slots, w):
                for vals in product(nonzero, repeat=w):
                    M = base.copy()
                    for (a, j), v in zip(chosen, vals):
                        M[a, j] = v
                    yield M


def count_subspaces(q: int, N: int, k: int) -> int:
    num = den = 1
    for i in range(k):
        num *= q ** (N - i) - 1
        den *= q ** (k - i) - 1
    return num // den


def _weight_splits(total, caps):
    if not caps:
        if total == 0:
            yield ()
        return
    for w in range(min(total, caps[0]) + 1):
        for rest in _weight_splits(total - w, caps[1:]):
            yield (w,) + rest


def subspace_tuples(field: FieldSpec, specs):
    """Tuples of subspaces, one per (N, k) in ``specs``, sparsest total first."""
    caps = [max_subspace_weight(N, k) for N, k in specs]
    for W in range(sum(caps) + 1):
        for split in _weight_splits(W, caps):
            yield from _lazy_product(field, specs, split)


def _lazy_product(field, specs, split):
    if not specs:
        yield ()
        return
    (N, k), w = specs[0], split[0]
    for U in rref_subspaces(field, N, k, w):
        for rest in _lazy_product(field, specs[1:], split[1:]):
            yield (U,) + rest


def compositions(r: int, parts: int):
    """Weak compositions of r into ``parts`` parts, reverse-lexicographic."""
    if parts == 1:
        yield (r,)
        return
    for first in range(r, -1, -1):
        for rest in compositions(r - first, parts - 1):
            yield (first,) + rest


class _Counter:
    def __init__(self, budget):
        self.budget = DEFAULT_SEARCH_BUDGET if budget is None else budget
        self.used = 0

    def tick(self):
        self.used += 1
        if self.used > self.budget:
            raise _Exhausted()


# -- tensors ----------------------------------------------------------------------------


def partition_types(shape):
    """Unordered two-part splits of the factors as (small side S, complement), canonical order."""
    d = len(shape)
    seen = set()
    types = []
    for size in range(1, d):
        for I in combinations(range(d), size):
            J = tuple(a for a in range(d) if a not in I)
            key = frozenset([I, J])
            if key in seen:
                continue
            seen.add(key)
            dim = lambda side: math.prod(shape[a] for a in side)
            S = min((I, J), key=lambda side: (dim(side), len(side), side))
            types.append(S)
    types.sort(key=lambda S: (len(S), S))
    return types


def _side_basis(field, shape, S, rows):
    """Rows of a subspace of V_S^* as multilinear forms on the factors in S."""
    sshape = tuple(shape[a] for a in S)
    return [MultilinearForm(field, sshape, row.reshape(sshape)) for row in rows]


def flattening_certificate(P: MultilinearForm, S) -> DecompositionCertificate:
    """Matrix-rank decomposition of P across the split S | complement."""
    F = P.field
    d = P.d
    S = tuple(sorted(S))
    J = tuple(a for a in range(d) if a not in S)
    M = np.moveaxis(P.coeffs, list(S) + list(J), list(range(d))).reshape(
        math.prod(P.shape[a] for a in S), -1
    )
    R, pivots = linalg.rref(F, M)
    # M = M[:, pivots] @ R[:rank]
    part = IndexPartition(S, J)
    cols = M[:, pivots]
    coeff_rows = R[: len(pivots)]
    terms = []
    for t in range(len(pivots)):
        A = MultilinearForm(F, tuple(P.shape[a] for a in S), cols[:, t].reshape([P.shape[a] for a in S]))
        B = MultilinearForm(F, tuple(P.shape[b] for b in J), coeff_rows[t].reshape([P.shape[b] for b in J]))
        terms.append((part, A, B))
    return DecompositionCertificate("tensor", terms)


def best_flattening(P: MultilinearForm) -> DecompositionCertificate:
    best = None
    for S in partition_types(P.shape):
        cert = flattening_certificate(P, S)
        if best is None or cert.rank < best.rank:
            best = cert
    return best


def _tensor_certificate_from(P, gens_by_type, cofactors):
    terms = []
    d = P.d
    for (S, G), Q in zip(gens_by_type, cofactors):
        if Q.is_zero():
            continue
        J = tuple(a for a in range(d) if a not in S)
        terms.append((IndexPartition(S, J), G, Q))
    return DecompositionCertificate("tensor", terms)


def search_tensor_rank(P: MultilinearForm, r: int, counter: _Counter):
    """A certificate with at most r terms, or None if none exists over the base field."""
    F = P.field
    types = partition_types(P.shape)
    dims = [math.prod(P.shape[a] for a in S) for S in types]
    for comp in compositions(r, len(types)):
        if any(c > N for c, N in zip(comp, dims)):
            continue
        active = [(S, N, c) for S, N, c in zip(types, dims, comp) if c]
        for subs in subspace_tuples(F, [(N, c) for _, N, c in active]):
            counter.tick()
            gens = []
            for (S, N, c), U in zip(active, subs):
                gens.extend((S, G) for G in _side_basis(F, P.shape, S, U))
            res = ideal_membership(P, gens)
            if res.member:
                return _tensor_certificate_from(P, gens, res.cofactors)
    return None


def schmidt_rank_tensor(P: MultilinearForm, budget=None, tower=2, count_budget=None,
                        use_invariants: bool = True, cap: int | None = None,
                        certificates=()) -> RankResult:
    """Schmidt rank bounds for a multilinear form.

    The upper bound starts from the best flattening and is improved by an
    exhaustive search over the base field from the lower bound upward.
    """
    if P.d < 2:
        raise ShapeError("Schmidt rank needs at least two factors")
    if P.is_zero():
        return RankResult(0, "zero form", 0, DecompositionCertificate("tensor", []), field=P.field)
    lower, source = 1, "nonzero form"
    est, est_src = None, None
    notes = []
    if P.d == 2:
        cert = flattening_certificate(P, (0,))
        return RankResult(cert.rank, "matrix rank", cert.rank, cert, field=P.field)
    if use_invariants:
        g = vs.g_invariant(P, tower, count_budget)
        if g.exact and not g.empty and g.codim > lower:
            lower, source = g.codim, "g(P) exact-structured"
        elif not g.exact:
            try:
                g = vs.estimate_dimension(vs.count_ZP(P, tower, count_budget))
                est, est_src = g.codim, "g(P) slope estimate"
            except vs.BudgetExceeded:
                notes.append("g(P) count skipped: budget")
    best = best_flattening(P)
    for cert in certificates:
        if verify_certificate(P, cert) and cert.rank < best.rank:
            best = cert
    counter = _Counter(budget)
    exhausted = False
    top = best.rank - 1 if cap is None else min(best.rank - 1, cap)
    try:
        for r in range(lower, top + 1):
            cert = search_tensor_rank(P, r, counter)
            if cert is not None:
                best = cert
                break
        else:
            if top >= lower:
                notes.append(f"no certificate with fewer than {best.rank} terms over the base field")
    except _Exhausted:
        exhausted = True
        notes.append(f"search budget of {counter.budget} candidates exhausted")
    if not verify_certificate(P, best):  # pragma: no cover - internal consistency
        raise AssertionError("search produced an invalid certificate")
    upper = best.rank
    lower = min(lower, upper)
    return RankResult(lower, source, upper, best, est, est_src, exhausted, notes, field=P.field)


def extend_restricted_certificate(P: MultilinearForm, basis, restricted_cert: DecompositionCertificate):
    """Lift a certificate for P restricted to span(basis) in factor 0 to one for P.

    The lift has at most rank(restricted) + codim terms: the restricted terms
    pulled back along a projection, plus one term l_i * R_i per annihilating
    linear form l_i.
    """
    F = P.field
    n1 = P.shape[0]
    B = linalg.as_matrix(basis, n1)
    k = B.shape[0]
    # A: k x n1 with A @ B^T = I, so t = A v recovers coordinates on span(B)
    R, pivots = linalg.rref(F, B)
    Binv = linalg.inverse(F, B[:, pivots])
    A = np.zeros((k, n1), dtype=np.int64)
    A[:, pivots] = Binv.T
    terms = []
    for part, X, Y in restricted_cert.terms:
        # factor 0 is the leading axis of whichever side contains it
        form = X if 0 in part.I else Y
        lifted = np.moveaxis(_lift_axis(F, form.coeffs, A), -1, 0)
        new = MultilinearForm(F, lifted.shape, lifted)
        terms.append((part, new, Y) if 0 in part.I else (part, X, new))
    base = DecompositionCertificate("tensor", terms)
    residual = P - base.reconstruct(F, P.shape)
    from .multilinear import kernel_of_restriction

    gens = kernel_of_restriction(F, P.shape, 0, B)
    res = ideal_membership(residual, gens)
    if not res.member:
        raise CertificateError("restricted certificate does not match P on the subspace")
    d = P.d
    extra = []
    for (I, G), Q in zip(gens, res.cofactors):
        if not Q.is_zero():
            extra.append((IndexPartition(I, tuple(a for a in range(d) if a not in I)), G, Q))
    return base + DecompositionCertificate("tensor", extra)


def _lift_axis(F, coeffs, A):
    """Replace the leading axis (length k) by the pullback along A (k x n1)."""
    T = np.moveaxis(coeffs, 0, -1)  # (..., k)
    out = F.vdot(T[..., :, None], A, axis=-2)  # (..., n1)
    return out


# -- polynomials --------------------------------------------------------------------------


def _as_poly(f) -> Poly:
    return Poly(f.field, f.nvars, f.terms)


def trivial_poly_certificate(f: Poly) -> DecompositionCertificate:
    """f = sum_i x_i h_i, grouping monomials by their first variable."""
    F = f.field
    n = f.nvars
    groups: dict = {}
    for exp, c in f.terms.items():
        i = next(j for j, a in enumerate(exp) if a)
        e = list(exp)
        e[i] -= 1
        groups.setdefault(i, {})[tuple(e)] = c
    terms = []
    for i in sorted(groups):
        terms.append((Poly.variable(F, n, i), Poly(F, n, groups[i])))
    return DecompositionCertificate("poly", terms)


def _poly_from_row(F, n, monos, row) -> Poly:
    return Poly(F, n, {m: int(c) for m, c in zip(monos, row) if c})


def _vanishes_on(f: Poly, U: np.ndarray, points_cache: dict) -> bool:
    """Does f vanish identically on the subspace annihilated by the rows of U?

    Exact when d < q (a polynomial of degree < q in each variable that
    vanishes on all of F_q^m is zero); otherwise falls back to membership.
    """
    F = f.field
    n = f.nvars
    if f.degree >= F.q:
        lins = [_poly_from_row(F, n, [tuple(int(i == j) for i in range(n)) for j in range(n)], u) for u in U]
        return truncated_ideal_membership(f, lins, f.degree, homogeneous=True).member
    K = linalg.nullspace(F, U)
    m = K.shape[0]
    if m == 0:
        return True
    if m not in points_cache:
        q = F.q
        points_cache[m] = np.array(np.unravel_index(np.arange(q ** m), (q,) * m)).T.reshape(-1, m)
    T = points_cache[m]
    X = F.vdot(T[:, :, None], K[None, :, :], axis=1)
    return bool((f.eval_batch(X) == 0).all())


def _slice_certificate(f: Poly, U: np.ndarray) -> DecompositionCertificate:
    F = f.field
    n = f.nvars
    unit = [tuple(int(i == j) for i in range(n)) for j in range(n)]
    lins = [_poly_from_row(F, n, unit, u) for u in U]
    res = truncated_ideal_membership(f, lins, f.degree, homogeneous=True)
    if not res.member:  # pragma: no cover - guarded by _vanishes_on
        raise AssertionError("subspace containment without ideal membership")
    return DecompositionCertificate("poly", [(g, h) for g, h in zip(lins, res.cofactors) if not h.is_zero()])


@dataclass
class SliceRankResult:
    s: int | None
    witness: np.ndarray | None
    certificate: DecompositionCertificate | None
    exhausted: bool
    candidates: int


def slice_rank_search(f: Poly, start: int, stop: int, budget=None) -> SliceRankResult:
    """Smallest s in [start, stop] with a codim-s subspace inside (f = 0), over f's field."""
    counter = _Counter(budget)
    n = f.nvars
    cache: dict = {}
    try:
        for s in range(max(start, 1), min(stop, n) + 1):
            for U in rref_subspaces(f.field, n, s):
                counter.tick()
                if _vanishes_on(f, U, cache):
                    return SliceRankResult(s, U, _slice_certificate(f, U), False, counter.used)
    except _Exhausted:
        return SliceRankResult(None, None, None, True, counter.used)
    return SliceRankResult(None, None, None, False, counter.used)


def _poly_lower_bounds(f: Poly, tower, count_budget, use_invariants):
    """Certified and estimated lower bounds for rk^S(f)."""
    lower, source = 1, "nonzero form"
    est, est_src = None, None
    notes = []
    if not use_invariants:
        return lower, source, est, est_src, notes
    d = f.degree
    if d == 2:
        # f = sum l_i l'_i forces rank H_f <= 2r in any characteristic
        H = np.array([[h.eval([0] * f.nvars) for h in row] for row in hessian(f)], dtype=np.int64)
        b = -(-linalg.rank(f.field, H) // 2)
        return max(lower, b), "ceil(rank H_f / 2)", est, est_src, notes
    ok = d >= 3 and char_admissible(f.field, d).theorem_ok
    c = vs.c_structured(f)
    gsym = vs.g_sym_structured(f)
    if c is not None and not c.empty and ok:
        b = -(-c.codim // 2)
        if b > lower:
            lower, source = b, "ceil(c/2), c exact-structured"
    if gsym is not None and not gsym.empty:
        b = -(-gsym.codim // 4)
        if b > lower:
            lower, source = b, "ceil(g_sym/4), g_sym exact-structured"
    if c is None or gsym is None:
        try:
            cands = []
            if c is None and ok:
                ce = vs.estimate_dimension(vs.count_sing(f, tower, count_budget))
                if not ce.empty:
                    cands.append((-(-ce.codim // 2), "ceil(c/2), c slope estimate"))
            if gsym is None:
                ge = vs.estimate_dimension(vs.count_Zsym(f, tower, count_budget))
                cands.append((-(-ge.codim // 4), "ceil(g_sym/4), g_sym slope estimate"))
            if cands:
                est, est_src = max(cands)
        except vs.BudgetExceeded:
            notes.append("invariant counts skipped: budget")
    return lower, source, est, est_src, notes


def slice_rank_cubic(f: Poly, budget=None, extensions=(2, 3), tower=2, count_budget=None,
                     use_invariants: bool = True) -> RankResult:
    """Slice rank of a cubic (equal to its strength), exhaustive over the base field."""
    if f.degree != 3 and not f.is_zero():
        raise ShapeError("slice_rank_cubic needs a cubic form")
    F = f.field
    if f.is_zero():
        return RankResult(0, "zero form", 0, DecompositionCertificate("poly", []), field=F)
    lower, source, est, est_src, notes = _poly_lower_bounds(f, tower, count_budget, use_invariants)
    trivial = trivial_poly_certificate(f)
    res = slice_rank_search(f, lower, trivial.rank - 1, budget)
    if res.s is not None:
        cert = res.certificate
        per = {F.e: res.s}
    else:
        cert = trivial
        per = {F.e: None if res.exhausted else trivial.rank}
    exhausted = res.exhausted
    if exhausted:
        notes.append("slice-rank search budget exhausted over the base field")
    result = RankResult(min(lower, cert.rank), source, cert.rank, cert, est, est_src, exhausted, notes,
                        per, field=F)
    if not result.exact:
        for k in extensions:
            big = F.extension(k)
            fb = f.embed(big, F.embedding(big))
            r = slice_rank_search(fb, lower, cert.rank - 1, budget)
            result.per_field[big.e] = r.s if r.s is not None else (None if r.exhausted else cert.rank)
            if r.s is not None and r.s < cert.rank:
                result.notes.append(f"over GF({big.p}^{big.e}) the slice rank drops to {r.s}")
    return result


def _type_specs(f: Poly):
    d = f.degree
    return [k for k in range(1, d // 2 + 1)]


def search_strength(f: Poly, r: int, counter: _Counter):
    """A strength certificate with at most r terms over f's field, or None."""
    F = f.field
    n = f.nvars
    d = f.degree
    ks = _type_specs(f)
    bases = {k: monomials(n, k) for k in ks}
    dims = {k: len(bases[k]) for k in ks}
    for comp in compositions(r, len(ks)):
        if any(c > dims[k] for c, k in zip(comp, ks)):
            continue
        active = [(k, c) for k, c in zip(ks, comp) if c]
        for subs in subspace_tuples(F, [(dims[k], c) for k, c in active]):
            counter.tick()
            gens = []
            for (k, c), U in zip(active, subs):
                gens.extend(_poly_from_row(F, n, bases[k], row) for row in U)
            res = truncated_ideal_membership(f, gens, d, homogeneous=True)
            if res.member:
                terms = [(g, h) for g, h in zip(gens, res.cofactors) if not h.is_zero()]
                return DecompositionCertificate("poly", terms)
    return None


def strength_poly(f: Poly, budget=None, certificates=(), tower=2, count_budget=None,
                  use_invariants: bool = True, cap: int | None = None, extensions=()) -> RankResult:
    """Strength bounds: certified invariant lower bound, certificate-backed upper bound."""
    F = f.field
    if f.is_zero():
        return RankResult(0, "zero form", 0, DecompositionCertificate("poly", []), field=F)
    if not f.is_homogeneous() or f.degree < 2:
        raise ShapeError("strength needs a homogeneous form of degree >= 2")
    f = _as_poly(f)
    lower, source, est, est_src, notes = _poly_lower_bounds(f, tower, count_budget, use_invariants)
    best = trivial_poly_certificate(f)
    for cert in certificates:
        if verify_certificate(f, cert) and cert.rank < best.rank:
            best = cert
            notes.append(f"caller certificate with {cert.rank} terms accepted")
    top = best.rank - 1 if cap is None else min(best.rank - 1, cap)
    exhausted = False
    per = {}
    if f.degree == 3:
        res = slice_rank_search(f, lower, top, budget)
        exhausted = res.exhausted
        if res.s is not None:
            best = res.certificate
        if not exhausted:
            per[F.e] = best.rank
    else:
        counter = _Counter(budget)
        try:
            for r in range(lower, top + 1):
                cert = search_strength(f, r, counter)
                if cert is not None:
                    best = cert
                    break
            per[F.e] = best.rank
        except _Exhausted:
            exhausted = True
    if exhausted:
        notes.append("search budget exhausted; upper bound is the best certificate found")
    if not verify_certificate(f, best):  # pragma: no cover - internal consistency
        raise AssertionError("search produced an invalid certificate")
    result = RankResult(min(lower, best.rank), source, best.rank, best, est, est_src, exhausted, notes,
                        per, field=F)
    if f.degree == 3 and not result.exact:
        for k in extensions:
            big = F.extension(k)
            r = slice_rank_search(f.embed(big, F.embedding(big)), lower, best.rank - 1, budget)
            result.per_field[big.e] = r.s if r.s is not None else (None if r.exhausted else best.rank)
    return result


# -- collections ----------------------------------------------------------------------------


def _is_dependent(targets) -> bool:
    F = targets[0].field
    if isinstance(targets[0], MultilinearForm):
        rows = np.stack([t.coeffs.reshape(-1) for t in targets])
    else:
        monos = sorted(set().union(*[t.terms for t in targets]))
        rows = np.array([[t.terms.get(m, 0) for m in monos] for t in targets], dtype=np.int64)
        if rows.size == 0:
            return True
    return linalg.rank(F, rows) < len(targets)


def collection_rank(targets, budget=None, tower=2) -> RankResult:
    """min over nonzero c (projectively, over the tower) of the rank of sum c_i target_i.

    Over a finite tower this is only an upper bound for the minimum over the
    algebraic closure; the lower bound is 0 or 1 depending on linear
    (in)dependence, which is field independent.
    """
    targets = list(targets)
    if not targets:
        raise ValueError("empty collection")
    is_tensor = isinstance(targets[0], MultilinearForm)
    F = targets[0].field
    s = len(targets)
    dependent = _is_dependent(targets)
    lower = 0 if dependent else 1
    source = "targets linearly dependent" if dependent else "targets linearly independent"
    best = None
    levels = F.tower(tower) if isinstance(tower, int) else tower
    exhausted = False
    notes = ["minimum over the finite tower bounds the closure minimum from above"]
    for big, emb in levels:
        tb = [t.embed(big, emb) for t in targets]
        for c in vs.projective_reps(big, s):
            if big != F and all(int(x) < F.p for x in c):
                continue  # already covered at the base level
            if is_tensor:
                comb = MultilinearForm(big, tb[0].shape)
                for ci, t in zip(c, tb):
                    comb = comb + t.scale(int(ci))
            else:
                comb = Poly.zero(big, tb[0].nvars)
                for ci, t in zip(c, tb):
                    comb = comb + t.scale(int(ci))
            cap = None if best is None else best.upper - 1
            if comb.is_zero():
                res = RankResult(0, "zero combination", 0, DecompositionCertificate("poly" if not is_tensor else "tensor", []),
                                 field=big)
            elif best is not None and best.upper <= lower:
                continue
            elif is_tensor:
                res = schmidt_rank_tensor(comb, budget, use_invariants=False, cap=cap)
            else:
                res = strength_poly(comb, budget, use_invariants=False, cap=cap)
            exhausted |= res.budget_exhausted
            if best is None or res.upper < best.upper:
                res.combination = tuple(int(x) for x in c)
                res.field = big
                best = res
            if best.upper <= lower:
                break
        if best is not None and best.upper <= lower:
            break
    out = RankResult(min(lower, best.upper), source, best.upper, best.certificate,
                     budget_exhausted=exhausted, notes=notes, combination=best.combination, field=best.field)
    return out
