"""Point counts over F_{p^e} and dimension estimates for the rank-related varieties.

Every variety here is a cone in each of its factor spaces, so counts only
enumerate one representative per line (plus the origin) and weight it by
q - 1.  Fibers that are linear spaces are never enumerated: a point w
contributes q^corank instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from itertools import product

import numpy as np

from . import linalg
from .field import FieldSpec, char_admissible
from .multilinear import MultilinearForm, ShapeError
from .polyring import Poly, PowerCache, hessian

DEFAULT_BUDGET = 10 ** 8
CHUNK_ELEMENTS = 1 << 21


class BudgetExceeded(RuntimeError):
    """Raised when an enumeration would exceed its evaluation budget."""

    def __init__(self, needed: int, budget: int, what: str = "count"):
        super().__init__(f"{what} needs {needed} evaluations, budget is {budget}")
        self.needed = needed
        self.budget = budget


@dataclass
class LevelCount:
    e: int
    q: int
    N: int
    histogram: dict = dc_field(default_factory=dict)
    evaluations: int = 0


@dataclass
class CountProfile:
    tag: str
    ambient: int
    p: int
    levels: list = dc_field(default_factory=list)

    @property
    def counts(self) -> list[tuple[int, int]]:
        return [(lv.e, lv.N) for lv in self.levels]

    def N(self, e: int) -> int:
        for lv in self.levels:
            if lv.e == e:
                return lv.N
        raise KeyError(e)


@dataclass
class DimensionEstimate:
    dim: int | None
    codim: int
    ambient: int
    method: str
    flags: tuple = ()
    profile: CountProfile | None = None
    slope: float | None = None

    @property
    def exact(self) -> bool:
        return self.method == "exact-structured"

    @property
    def empty(self) -> bool:
        return self.dim is None

    def __str__(self):
        tail = f" flags={','.join(self.flags)}" if self.flags else ""
        if self.empty:
            return f"empty (codim {self.codim} sentinel) [{self.method}]{tail}"
        return f"codim {self.codim} (dim {self.dim} of {self.ambient}) [{self.method}]{tail}"


# -- enumeration ----------------------------------------------------------------


def projective_reps(field: FieldSpec, n: int) -> np.ndarray:
    """Vectors of F_q^n whose first nonzero coordinate is 1."""
    q = field.q
    blocks = []
    for lead in range(n):
        tail = n - lead - 1
        m = q ** tail
        block = np.zeros((m, n), dtype=np.int64)
        block[:, lead] = 1
        if tail:
            block[:, lead + 1:] = np.array(np.unravel_index(np.arange(m), (q,) * tail)).T
        blocks.append(block)
    return np.concatenate(blocks) if blocks else np.zeros((0, n), dtype=np.int64)


def _factor_points(field: FieldSpec, n: int, cone: bool):
    """(points, nonzero flag) for one factor space."""
    if cone:
        pts = np.concatenate([np.zeros((1, n), dtype=np.int64), projective_reps(field, n)])
        nz = np.ones(len(pts), dtype=bool)
        nz[0] = False
        return pts, nz
    q = field.q
    pts = np.array(np.unravel_index(np.arange(q ** n), (q,) * n)).T.reshape(-1, n).astype(np.int64)
    return pts, np.zeros(len(pts), dtype=bool)


def enumeration_size(field: FieldSpec, dims, cone: bool = True) -> int:
    total = 1
    for n in dims:
        total *= (1 + (field.q ** n - 1) // (field.q - 1)) if cone else field.q ** n
    return total


def histogram_over(field: FieldSpec, dims, fn, cone: bool = True, budget: int | None = None,
                   what: str = "count") -> tuple[dict, int]:
    """Weighted histogram of ``fn`` over the product of factor spaces F_q^{n_a}.

    ``fn`` receives one (B, n_a) array per factor and returns an int array of
    values; negative values are dropped.  With ``cone`` each factor is
    enumerated projectively, which is valid when ``fn`` is invariant under
    scaling any factor by a nonzero scalar.
    """
    budget = DEFAULT_BUDGET if budget is None else budget
    dims = list(dims)
    size = enumeration_size(field, dims, cone)
    if size > budget:
        raise BudgetExceeded(size, budget, what)
    factors = [_factor_points(field, n, cone) for n in dims]
    sizes = [len(pts) for pts, _ in factors]
    k = len(dims)
    width = max(1, sum(dims))
    chunk = max(1, CHUNK_ELEMENTS // (width * 8))
    hist: dict = {}
    for start in range(0, size, chunk):
        flat = np.arange(start, min(size, start + chunk))
        idx = np.unravel_index(flat, sizes) if k else ()
        vecs = [factors[a][0][idx[a]] for a in range(k)]
        nnz = np.zeros(len(flat), dtype=np.int64)
        for a in range(k):
            nnz += factors[a][1][idx[a]]
        vals = np.asarray(fn(vecs) if k else fn([]), dtype=np.int64).reshape(-1)
        if not k:
            vals = vals[:1]
        keep = vals >= 0
        if not keep.any():
            continue
        key = vals[keep] * (k + 1) + nnz[keep]
        for kk, cnt in zip(*np.unique(key, return_counts=True)):
            v, m = divmod(int(kk), k + 1)
            hist[v] = hist.get(v, 0) + int(cnt) * (field.q - 1) ** m
    return hist, size


def _q_weighted(hist: dict, q: int) -> int:
    return sum(cnt * q ** c for c, cnt in hist.items())


def _levels(obj_field: FieldSpec, tower):
    """Normalise a tower argument into [(big field, embedding, e)]."""
    if tower is None:
        tower = 2
    if isinstance(tower, int):
        tower = obj_field.tower(tower)
    return [(big, emb, big.e // obj_field.e if obj_field.e else 1) for big, emb in tower]


# -- matrices attached to the objects -------------------------------------------


def _contract_rest(F: FieldSpec, T: np.ndarray, vecs) -> np.ndarray:
    """Contract trailing axes of T (shape (a, b, n_3, ..)) with batched vectors."""
    B = vecs[0].shape[0] if vecs else 1
    out = np.broadcast_to(T, (B,) + T.shape)
    for v in reversed(vecs):
        shape = (B,) + (1,) * (out.ndim - 2) + (v.shape[1],)
        out = F.vdot(out, v.reshape(shape), axis=-1)
    return np.asarray(out)


def _zp_axes(P: MultilinearForm, kernel_factor: int | None):
    if P.d < 2:
        raise ShapeError("Z_P needs d >= 2")
    others = list(range(1, P.d))
    if kernel_factor is None:
        kernel_factor = max(others, key=lambda a: (P.shape[a], a))
    if kernel_factor not in others:
        raise ShapeError("the kernel factor must be one of the factors 2..d")
    rest = [a for a in others if a != kernel_factor]
    return kernel_factor, rest


def zp_matrix_fn(P: MultilinearForm, kernel_factor: int | None = None):
    """Matrix-valued map w -> P_W(w) (rows V_1, cols V_k) and the enumerated factors."""
    k, rest = _zp_axes(P, kernel_factor)
    T = np.moveaxis(P.coeffs, [0, k] + rest, list(range(P.d)))
    F = P.field

    def fn(vecs):
        return _contract_rest(F, T, vecs)

    return fn, k, rest


def hessian_matrix_fn(f: Poly):
    H = hessian(f)
    n = f.nvars
    F = f.field

    def fn(vecs):
        X = vecs[0]
        cache = PowerCache(F, X)
        M = np.zeros((X.shape[0], n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i, n):
                if not H[i][j].is_zero():
                    vals = H[i][j].eval_batch(X, cache)
                    M[:, i, j] = vals
                    M[:, j, i] = vals
        return M

    return fn


def jacobian_matrix_fn(polys, with_values: bool = False):
    """x -> Jacobian of ``polys`` at x (rows polys), optionally with values appended as a column."""
    polys = list(polys)
    F = polys[0].field
    n = polys[0].nvars
    parts = [[g.partial(i) for i in range(n)] for g in polys]

    def fn(vecs):
        X = vecs[0]
        cache = PowerCache(F, X)
        cols = n + (1 if with_values else 0)
        M = np.zeros((X.shape[0], len(polys), cols), dtype=np.int64)
        for a, row in enumerate(parts):
            for i, g in enumerate(row):
                if not g.is_zero():
                    M[:, a, i] = g.eval_batch(X, cache)
            if with_values and not polys[a].is_zero():
                M[:, a, n] = polys[a].eval_batch(X, cache)
        return M

    return fn


def _corank_fn(F, matfn, ncols):
    def fn(vecs):
        M = matfn(vecs)
        return ncols - linalg.batch_rank(F, M)

    return fn


def _rank_below_fn(F, matfn, s):
    def fn(vecs):
        M = matfn(vecs)
        return np.where(linalg.batch_rank(F, M) < s, 0, -1)

    return fn


# -- single-object counts ---------------------------------------------------------


def count_ZP(P: MultilinearForm, tower=2, budget=None, cone: bool = True,
             kernel_factor: int | None = None) -> CountProfile:
    """|Z_P(F_q)| = sum over w of q^{corank P_W(w)}; w ranges over all factors but V_1, V_k."""
    ambient = sum(P.shape[1:])
    prof = CountProfile("Z_P", ambient, P.field.p)
    if P.d == 1:
        for big, emb, e in _levels(P.field, tower):
            prof.levels.append(LevelCount(e, big.q, 1 if P.is_zero() else 0))
        return prof
    k, rest = _zp_axes(P, kernel_factor)
    for big, emb, e in _levels(P.field, tower):
        Pb = P.embed(big, emb)
        matfn, _, _ = zp_matrix_fn(Pb, k)
        hist, used = histogram_over(big, [P.shape[a] for a in rest], _corank_fn(big, matfn, P.shape[k]),
                                    cone, budget, "Z_P count")
        prof.levels.append(LevelCount(e, big.q, _q_weighted(hist, big.q), hist, used))
    return prof


def count_ZP_bruteforce(P: MultilinearForm, field: FieldSpec | None = None, emb=None, budget=None) -> int:
    """Oracle: test P(., w) == 0 at every point w of V_2 x ... x V_d."""
    F = field or P.field
    if field is not None and field != P.field:
        P = P.embed(F, emb or P.field.embedding(F))
    if P.d == 1:
        return 1 if P.is_zero() else 0
    T = P.coeffs

    def fn(vecs):
        M = _contract_rest(F, T, vecs)
        return np.where((M == 0).all(axis=1), 0, -1)

    hist, _ = histogram_over(F, list(P.shape[1:]), fn, cone=False, budget=budget, what="brute-force count")
    return hist.get(0, 0)


def count_Zsym(f: Poly, tower=2, budget=None, cone: bool = True) -> CountProfile:
    """|Z^sym_f(F_q)| = sum over x of q^{corank H_f(x)}."""
    n = f.nvars
    prof = CountProfile("Z^sym", 2 * n, f.field.p)
    for big, emb, e in _levels(f.field, tower):
        fb = f.embed(big, emb)
        if fb.is_zero():
            hist = {n: big.q ** n}
            used = 0
        else:
            hist, used = histogram_over(big, [n], _corank_fn(big, hessian_matrix_fn(fb), n), cone, budget,
                                        "Z^sym count")
        prof.levels.append(LevelCount(e, big.q, _q_weighted(hist, big.q), hist, used))
    return prof


def count_sing(f: Poly, tower=2, budget=None, cone: bool = True) -> CountProfile:
    """|Sing(f = 0)(F_q)|: points with grad f = 0 and f = 0.

    When char does not divide d, Euler's identity makes f = 0 redundant; the
    implication is checked on every enumerated point.
    """
    n = f.nvars
    d = f.degree
    prof = CountProfile("Sing", n, f.field.p)
    euler = d > 0 and d % f.field.p != 0
    for big, emb, e in _levels(f.field, tower):
        fb = f.embed(big, emb)
        if fb.is_zero():
            prof.levels.append(LevelCount(e, big.q, big.q ** n))
            continue
        jac = jacobian_matrix_fn([fb], with_values=True)

        def fn(vecs, jac=jac):
            M = jac(vecs)[:, 0, :]
            grad0 = (M[:, :n] == 0).all(axis=1)
            if euler and np.any(grad0 & (M[:, n] != 0)):
                raise AssertionError("Euler identity violated: grad f = 0 but f != 0")
            return np.where(grad0 & (M[:, n] == 0), 0, -1)

        hist, used = histogram_over(big, [n], fn, cone, budget, "Sing count")
        prof.levels.append(LevelCount(e, big.q, hist.get(0, 0), hist, used))
    return prof


def count_hypersurfaces(polys, tower=2, budget=None, cone: bool = True) -> CountProfile:
    """|V(f_1, ..., f_s)(F_q)| for homogeneous f_i."""
    polys = list(polys)
    n = polys[0].nvars
    prof = CountProfile("V", n, polys[0].field.p)
    for big, emb, e in _levels(polys[0].field, tower):
        pb = [g.embed(big, emb) for g in polys]

        def fn(vecs, pb=pb):
            X = vecs[0]
            cache = PowerCache(big, X)
            ok = np.ones(X.shape[0], dtype=bool)
            for g in pb:
                if not g.is_zero():
                    ok &= g.eval_batch(X, cache) == 0
            return np.where(ok, 0, -1)

        hist, used = histogram_over(big, [n], fn, cone, budget, "V count")
        prof.levels.append(LevelCount(e, big.q, hist.get(0, 0), hist, used))
    return prof


def count_tb(polys, tower=2, budget=None) -> CountProfile:
    """|Z_phi| = sum over x of q^{corank dphi_x} for the map phi = (polys)."""
    polys = list(polys)
    n = polys[0].nvars
    degs = {g.degree for g in polys if not g.is_zero()}
    cone = len(degs) == 1 and all(g.is_homogeneous() for g in polys) and min(degs) >= 1
    prof = CountProfile("Z_phi", 2 * n, polys[0].field.p)
    for big, emb, e in _levels(polys[0].field, tower):
        pb = [g.embed(big, emb) for g in polys]
        hist, used = histogram_over(big, [n], _corank_fn(big, jacobian_matrix_fn(pb), n), cone, budget,
                                    "Thom-Boardman count")
        prof.levels.append(LevelCount(e, big.q, _q_weighted(hist, big.q), hist, used))
    return prof


# -- collections --------------------------------------------------------------------


@dataclass
class UnionCheck:
    points: int
    mismatches: int

    @property
    def ok(self) -> bool:
        return self.mismatches == 0


def _check_union(F: FieldSpec, M: np.ndarray, s: int) -> np.ndarray:
    """Per point: (rank M < s) == (some projective c has c^T M == 0)."""
    C = projective_reps(F, s)
    comb = F.vdot(C[None, :, :, None], M[:, None, :, :], axis=2)
    in_union = (comb == 0).all(axis=2).any(axis=1)
    low = linalg.batch_rank(F, M) < s
    return low != in_union


def _collection_setup(targets, which):
    targets = list(targets)
    if not targets:
        raise ValueError("empty collection")
    s = len(targets)
    F = targets[0].field
    if which == "ZP":
        P0 = targets[0]
        if any(P.shape != P0.shape for P in targets):
            raise ShapeError("collection members must share a shape")
        return F, s, list(P0.shape[1:])
    n = targets[0].nvars
    if any(g.nvars != n for g in targets):
        raise ShapeError("collection members must share variables")
    if which == "Zsym":
        return F, s, [n, n]
    if which in ("S", "S+f"):
        return F, s, [n]
    raise ValueError(f"unknown collection variety {which!r}")


def collection_matrix_fn(targets, which: str, big: FieldSpec, emb):
    """Point -> the s-row matrix whose rank drop defines the collection variety."""
    targets = list(targets)
    if which == "ZP":
        stacked = np.stack([P.embed(big, emb).coeffs for P in targets])

        def fn(vecs):
            return _contract_rest(big, stacked, vecs)

        return fn
    tb = [g.embed(big, emb) for g in targets]
    if which == "Zsym":
        Hs = [hessian(g) for g in tb]
        n = tb[0].nvars

        def fn(vecs):
            V, X = vecs
            cache = PowerCache(big, X)
            M = np.zeros((X.shape[0], len(tb), n), dtype=np.int64)
            for a, H in enumerate(Hs):
                for j in range(n):
                    acc = np.zeros(X.shape[0], dtype=np.int64)
                    for k in range(n):
                        if not H[j][k].is_zero():
                            acc = big.vadd(acc, big.vmul(H[j][k].eval_batch(X, cache), V[:, k]))
                    M[:, a, j] = acc
            return M

        return fn
    return jacobian_matrix_fn(tb, with_values=(which == "S+f"))


def count_collection(targets, which: str = "ZP", tower=2, budget=None, cone: bool = True,
                     verify_union: bool = False) -> tuple[CountProfile, list]:
    """Count points where the collection's s-row matrix has rank < s.

    which: "ZP" (tensors, over V_2 x .. x V_d), "Zsym" (polys, over V x V with
    factors ordered (v, x)), "S" (Jacobian rank < s) or "S+f" (Jacobian with
    the values column, i.e. the union of Sing(f_c = 0)).
    Returns the profile and, if requested, one UnionCheck per level.
    """
    F, s, dims = _collection_setup(targets, which)
    ambient = sum(dims)
    prof = CountProfile({"ZP": "Z_Pbar", "Zsym": "Z^sym_fbar", "S": "S(fbar)", "S+f": "Sing-union"}[which],
                        ambient, F.p)
    checks = []
    for big, emb, e in _levels(F, tower):
        matfn = collection_matrix_fn(targets, which, big, emb)
        mism = [0]
        npts = [0]

        def fn(vecs, matfn=matfn, mism=mism, npts=npts):
            M = matfn(vecs)
            if verify_union:
                mism[0] += int(_check_union(big, M, s).sum())
                npts[0] += M.shape[0]
            return np.where(linalg.batch_rank(big, M) < s, 0, -1)

        hist, used = histogram_over(big, dims, fn, cone, budget, f"{which} collection count")
        prof.levels.append(LevelCount(e, big.q, hist.get(0, 0), hist, used))
        if verify_union:
            checks.append(UnionCheck(npts[0], mism[0]))
    return prof, checks


def union_members(targets, which: str, field: FieldSpec | None = None):
    """Oracle for the union formulas: the set of F_q points in some member variety.

    Forms every combination c over P^{s-1}(F_q) explicitly (as a tensor or a
    polynomial) and tests the single-target condition on all points.
    """
    targets = list(targets)
    F = field or targets[0].field
    emb = targets[0].field.embedding(F)
    tb = [t.embed(F, emb) for t in targets]
    s = len(tb)
    _, _, dims = _collection_setup(tb, which)
    pts = [_factor_points(F, n, False)[0] for n in dims]
    grids = np.array(list(product(*[range(len(p)) for p in pts])), dtype=np.int64)
    vecs = [pts[a][grids[:, a]] for a in range(len(dims))]
    member = np.zeros(len(grids), dtype=bool)
    for c in projective_reps(F, s):
        if which == "ZP":
            comb = MultilinearForm(F, tb[0].shape)
            for ci, P in zip(c, tb):
                comb = comb + P.scale(int(ci))
            M = _contract_rest(F, comb.coeffs, vecs)
            member |= (M == 0).all(axis=1)
        else:
            comb = Poly.zero(F, tb[0].nvars)
            for ci, g in zip(c, tb):
                comb = comb + g.scale(int(ci))
            if which == "Zsym":
                if comb.is_zero():
                    member[:] = True
                    continue
                H = hessian_matrix_fn(comb)(vecs[1:])
                Hv = F.vdot(H, vecs[0][:, None, :], axis=2)
                member |= (Hv == 0).all(axis=1)
            else:
                M = jacobian_matrix_fn([comb], with_values=(which == "S+f"))(vecs)[:, 0, :]
                member |= (M == 0).all(axis=1)
    return vecs, member


@dataclass
class DiagonalCheck:
    points: int
    mismatches_S: int
    mismatches_sing: int | None

    @property
    def ok(self) -> bool:
        return self.mismatches_S == 0 and not self.mismatches_sing


def diagonal_consistency(targets, field: FieldSpec | None = None) -> DiagonalCheck:
    """Compare {x : (x, x) in Z^sym_fbar} with S(fbar) pointwise (char not dividing d-1).

    For a single form with char not dividing d, also compare with Sing(f = 0).
    """
    targets = list(targets)
    F = field or targets[0].field
    emb = targets[0].field.embedding(F)
    d = max(g.nominal_degree for g in targets)
    flags = char_admissible(F, d)
    if flags.divides_dminus1:
        raise ValueError("diagonal consistency needs char not dividing d - 1")
    s = len(targets)
    n = targets[0].nvars
    X = _factor_points(F, n, False)[0]
    Mdiag = collection_matrix_fn(targets, "Zsym", F, emb)([X, X])
    J = collection_matrix_fn(targets, "S", F, emb)([X])
    diag = linalg.batch_rank(F, Mdiag) < s
    S = linalg.batch_rank(F, J) < s
    sing_mism = None
    if s == 1 and not flags.divides_d:
        Jf = collection_matrix_fn(targets, "S+f", F, emb)([X])[:, 0, :]
        sing = (Jf == 0).all(axis=1)
        sing_mism = int((sing != diag).sum())
    return DiagonalCheck(len(X), int((diag != S).sum()), sing_mism)


# -- dimension estimation ----------------------------------------------------------


def estimate_dimension(profile: CountProfile) -> DimensionEstimate:
    """Slope estimate dim ~ log_q N_e from the two largest tower levels."""
    amb = profile.ambient
    p = profile.p
    levels = sorted(profile.levels, key=lambda lv: lv.e)
    nonzero = [lv for lv in levels if lv.N > 0]
    flags = []
    if not nonzero:
        return DimensionEstimate(None, amb + 1, amb, "slope", ("empty",), profile)
    if any(lv.N < p ** lv.e for lv in nonzero):
        flags.append("small-count")
    if len(nonzero) < len(levels):
        flags.append("missing-rational-points")

    def clamp(x):
        return int(min(max(round(x), 0), amb))

    if len(nonzero) == 1:
        lv = nonzero[0]
        slope = math.log(lv.N) / (lv.e * math.log(p))
        flags.append("single-level")
        dim = clamp(slope)
    else:
        a, b = nonzero[-2], nonzero[-1]
        slope = (math.log(b.N) - math.log(a.N)) / ((b.e - a.e) * math.log(p))
        dim = clamp(slope)
        if len(nonzero) >= 3:
            c = nonzero[0]
            low = (math.log(a.N) - math.log(c.N)) / ((a.e - c.e) * math.log(p))
            if clamp(low) != dim:
                flags.append("slope-disagreement")
    return DimensionEstimate(dim, amb - dim, amb, "slope", tuple(flags), profile, slope)


def min_hitting_set(supports) -> int:
    """Smallest number of variables meeting every support set."""
    supports = [frozenset(s) for s in supports]
    supports = [s for s in supports if not any(t < s for t in supports)]
    supports = list(dict.fromkeys(supports))
    best = [len(supports)]

    def rec(remaining, chosen):
        if chosen >= best[0]:
            return
        if not remaining:
            best[0] = chosen
            return
        first = min(remaining, key=len)
        for v in sorted(first):
            rec([s for s in remaining if v not in s], chosen + 1)

    rec(supports, 0)
    return best[0]


def structured_codim(equations, ambient: int):
    """Exact codimension when every equation is a single monomial (or zero).

    ``equations`` are sparse term dicts {exponent tuple: coeff}.  Returns
    None when some equation has two or more terms, ambient + 1 for an empty
    variety (a nonzero constant), else the minimum hitting-set size.
    """
    supports = []
    for terms in equations:
        terms = {e: c for e, c in terms.items() if c}
        if not terms:
            continue
        if len(terms) > 1:
            return None
        (exp,) = terms
        sup = frozenset(i for i, a in enumerate(exp) if a)
        if not sup:
            return ambient + 1
        supports.append(sup)
    return min_hitting_set(supports) if supports else 0


def _structured_estimate(codim, ambient):
    if codim is None:
        return None
    if codim > ambient:
        return DimensionEstimate(None, ambient + 1, ambient, "exact-structured", ("empty",))
    return DimensionEstimate(ambient - codim, codim, ambient, "exact-structured")


def zp_equations(P: MultilinearForm):
    """P(e_j, v_2, ..., v_d) as term dicts in the concatenated coordinates of V_2..V_d."""
    offsets = np.cumsum([0] + list(P.shape[1:]))
    nv = int(offsets[-1])
    eqs = []
    for j in range(P.shape[0]):
        sl = P.coeffs[j]
        terms = {}
        for idx in zip(*np.nonzero(sl)):
            exp = [0] * nv
            for a, t in enumerate(idx):
                exp[offsets[a] + t] = 1
            terms[tuple(exp)] = int(sl[idx])
        eqs.append(terms)
    return eqs


def zsym_equations(f: Poly):
    """Components of H_f(x) v as term dicts in (v, x)."""
    n = f.nvars
    H = hessian(f)
    eqs = []
    for j in range(n):
        terms = {}
        for k in range(n):
            for exp, c in H[j][k].terms.items():
                key = tuple(int(i == k) for i in range(n)) + exp
                terms[key] = c
        eqs.append(terms)
    return eqs


def sing_equations(f: Poly):
    eqs = [f.partial(i).terms for i in range(f.nvars)]
    d = f.degree
    if d > 0 and d % f.field.p == 0:
        eqs.append(f.terms)
    return eqs


def g_structured(P: MultilinearForm):
    return _structured_estimate(structured_codim(zp_equations(P), sum(P.shape[1:])), sum(P.shape[1:]))


def g_sym_structured(f: Poly):
    return _structured_estimate(structured_codim(zsym_equations(f), 2 * f.nvars), 2 * f.nvars)


def c_structured(f: Poly):
    return _structured_estimate(structured_codim(sing_equations(f), f.nvars), f.nvars)


def _with_profile(structured, count, use_counts):
    if structured is not None and not use_counts:
        return structured
    est = estimate_dimension(count())
    if structured is None:
        return est
    structured.profile = est.profile
    structured.slope = est.slope
    if est.codim != structured.codim:
        structured.flags = structured.flags + ("slope-differs",)
    return structured


def g_invariant(P: MultilinearForm, tower=2, budget=None, use_counts: bool = False) -> DimensionEstimate:
    """g(P) = codim Z_P: exact when structured, slope estimate otherwise."""
    return _with_profile(g_structured(P), lambda: count_ZP(P, tower, budget), use_counts)


def g_sym_invariant(f: Poly, tower=2, budget=None, use_counts: bool = False) -> DimensionEstimate:
    return _with_profile(g_sym_structured(f), lambda: count_Zsym(f, tower, budget), use_counts)


def c_invariant(f: Poly, tower=2, budget=None, use_counts: bool = False) -> DimensionEstimate:
    return _with_profile(c_structured(f), lambda: count_sing(f, tower, budget), use_counts)


def c_prime_invariant(targets, tower=2, budget=None, use_counts: bool = False) -> DimensionEstimate:
    """c'(fbar) = codim S(fbar), the Jacobian rank-drop locus."""
    targets = list(targets)
    structured = None
    if len(targets) == 1:
        f = targets[0]
        eqs = [f.partial(i).terms for i in range(f.nvars)]
        structured = _structured_estimate(structured_codim(eqs, f.nvars), f.nvars)
    return _with_profile(structured, lambda: count_collection(targets, "S", tower, budget)[0], use_counts)


def g_collection_invariant(targets, tower=2, budget=None) -> DimensionEstimate:
    targets = list(targets)
    if len(targets) == 1:
        return g_invariant(targets[0], tower, budget)
    return estimate_dimension(count_collection(targets, "ZP", tower, budget)[0])


def g_sym_collection_invariant(targets, tower=2, budget=None) -> DimensionEstimate:
    targets = list(targets)
    if len(targets) == 1:
        return g_sym_invariant(targets[0], tower, budget)
    return estimate_dimension(count_collection(targets, "Zsym", tower, budget)[0])


def complete_intersection_codim(targets, tower=2, budget=None) -> DimensionEstimate:
    """codim V(fbar); structured when every f_i is a monomial."""
    targets = list(targets)
    n = targets[0].nvars
    structured = _structured_estimate(structured_codim([g.terms for g in targets], n), n)
    return _with_profile(structured, lambda: count_hypersurfaces(targets, tower, budget), False)


def tb_rank(polys, tower=2, budget=None) -> DimensionEstimate:
    """Thom-Boardman rank: codim of {(x, v) : dphi_x(v) = 0} in 2n."""
    polys = list(polys)
    n = polys[0].nvars
    eqs = []
    for j in range(len(polys)):
        terms = {}
        for k in range(n):
            for exp, c in polys[j].partial(k).terms.items():
                terms[exp + tuple(int(i == k) for i in range(n))] = c
        eqs.append(terms)
    structured = _structured_estimate(structured_codim(eqs, 2 * n), 2 * n)
    return _with_profile(structured, lambda: count_tb(polys, tower, budget), False)


def corank_strata(f: Poly, tower=2, budget=None, cone: bool = True) -> dict:
    """r -> CountProfile of {x : f(x) = 0, corank H_f(x) >= r}, r = 0..n."""
    n = f.nvars
    out = {r: CountProfile(f"S_>={r}", n, f.field.p) for r in range(n + 1)}
    for big, emb, e in _levels(f.field, tower):
        fb = f.embed(big, emb)
        hfn = hessian_matrix_fn(fb)

        def fn(vecs, fb=fb, hfn=hfn):
            X = vecs[0]
            on = fb.eval_batch(X) == 0 if not fb.is_zero() else np.ones(X.shape[0], dtype=bool)
            cor = n - linalg.batch_rank(big, hfn(vecs))
            return np.where(on, cor, -1)

        hist, used = histogram_over(big, [n], fn, cone, budget, "corank strata")
        for r in range(n + 1):
            N = sum(cnt for c, cnt in hist.items() if c >= r)
            out[r].levels.append(LevelCount(e, big.q, N, {}, used))
    return out


def rank_stratification(P: MultilinearForm, kernel_factor: int | None = None, tower=1, budget=None,
                        cone: bool = True) -> dict:
    """e -> {r: number of enumerated base points w with rank P_W(w) = r}."""
    k, rest = _zp_axes(P, kernel_factor)
    out = {}
    for big, emb, e in _levels(P.field, tower):
        matfn, _, _ = zp_matrix_fn(P.embed(big, emb), k)

        def fn(vecs, matfn=matfn):
            return linalg.batch_rank(big, matfn(vecs))

        hist, _ = histogram_over(big, [P.shape[a] for a in rest], fn, cone, budget, "rank stratification")
        out[e] = dict(sorted(hist.items()))
    return out


def stratified_estimate(P: MultilinearForm, kernel_factor: int | None = None, tower=2, budget=None):
    """dim Z_P ~ max over rank strata of (dim stratum + n_k - r), from per-stratum slopes."""
    k, rest = _zp_axes(P, kernel_factor)
    strata = rank_stratification(P, k, tower, budget)
    ambient = sum(P.shape[1:])
    base = sum(P.shape[a] for a in rest)
    ranks = sorted({r for h in strata.values() for r in h})
    best = None
    for r in ranks:
        prof = CountProfile(f"rank={r}", base, P.field.p,
                            [LevelCount(e, P.field.q ** e, h.get(r, 0)) for e, h in strata.items()])
        est = estimate_dimension(prof)
        if est.dim is None:
            continue
        cand = est.dim + P.shape[k] - r
        best = cand if best is None else max(best, cand)
    if best is None:
        return DimensionEstimate(None, ambient + 1, ambient, "exact-stratified", ("empty",))
    best = min(best, ambient)
    return DimensionEstimate(best, ambient - best, ambient, "exact-stratified", ("estimated-strata",))
