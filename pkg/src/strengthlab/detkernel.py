"""Exterior-algebra contractions and polynomial kernel sections of matrix families.

A matrix family is an m x n matrix of polynomials in a fixed set of base
variables, viewed as a map V_1 = k^n -> V_2 = k^m at every base point.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from itertools import combinations, product

import numpy as np

from . import linalg
from .field import FieldSpec
from .polyring import Poly, truncated_ideal_membership


class ExteriorError(ValueError):
    pass


def _as_poly(F, nvars, c) -> Poly:
    if isinstance(c, Poly):
        if c.nvars != nvars or c.field != F:
            raise ExteriorError("coefficient lives in a different ring")
        return c
    return Poly.constant(F, nvars, int(c))


class ExteriorElement:
    """An element of Lambda^k(k[x]^dim), keyed by ascending index tuples."""

    __slots__ = ("field", "nvars", "dim", "k", "coeffs")

    def __init__(self, field: FieldSpec, nvars: int, dim: int, k: int, coeffs=None):
        self.field = field
        self.nvars = nvars
        self.dim = dim
        self.k = k
        clean = {}
        for S, c in (coeffs or {}).items():
            S = tuple(S)
            if len(S) != k or list(S) != sorted(set(S)) or any(not 0 <= i < dim for i in S):
                raise ExteriorError(f"bad basis index {S} for degree {k} in dimension {dim}")
            c = _as_poly(field, nvars, c)
            if not c.is_zero():
                clean[S] = c
        self.coeffs = clean

    @classmethod
    def vector(cls, field, nvars, vec) -> "ExteriorElement":
        return cls(field, nvars, len(vec), 1, {(i,): c for i, c in enumerate(vec)})

    @classmethod
    def wedge_of(cls, field, nvars, vectors, dim=None) -> "ExteriorElement":
        vectors = list(vectors)
        if dim is None:
            if not vectors:
                raise ExteriorError("dimension needed for an empty wedge")
            dim = len(vectors[0])
        out = cls(field, nvars, dim, 0, {(): 1})
        for v in vectors:
            out = wedge(out, cls.vector(field, nvars, v))
        return out

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, ExteriorElement):
            return NotImplemented
        return (self.dim, self.k, self.coeffs) == (other.dim, other.k, other.coeffs)

    def __add__(self, other):
        if (self.dim, self.k) != (other.dim, other.k):
            raise ExteriorError("degree or dimension mismatch")
        out = dict(self.coeffs)
        for S, c in other.coeffs.items():
            out[S] = out[S] + c if S in out else c
        return ExteriorElement(self.field, self.nvars, self.dim, self.k, out)

    def scale(self, c) -> "ExteriorElement":
        c = _as_poly(self.field, self.nvars, c)
        return ExteriorElement(self.field, self.nvars, self.dim, self.k,
                               {S: v * c for S, v in self.coeffs.items()})

    def as_vector(self) -> list[Poly]:
        if self.k != 1:
            raise ExteriorError("only degree-1 elements are vectors")
        zero = Poly.zero(self.field, self.nvars)
        return [self.coeffs.get((i,), zero) for i in range(self.dim)]

    def __repr__(self):
        parts = [f"({c.to_str()})e{'^'.join(str(i + 1) for i in S)}" for S, c in sorted(self.coeffs.items())]
        return f"ExteriorElement(k={self.k}: {' + '.join(parts) or '0'})"


def _merge_sign(S, T):
    """Sign of sorting S + T, or 0 if they overlap."""
    if set(S) & set(T):
        return 0
    inversions = sum(1 for a in S for b in T if a > b)
    return -1 if inversions % 2 else 1


def wedge(a: ExteriorElement, b: ExteriorElement) -> ExteriorElement:
    if a.dim != b.dim:
        raise ExteriorError("dimension mismatch")
    out: dict = {}
    for S, c in a.coeffs.items():
        for T, d in b.coeffs.items():
            sign = _merge_sign(S, T)
            if sign == 0:
                continue
            U = tuple(sorted(S + T))
            term = c * d
            if sign < 0:
                term = -term
            out[U] = out[U] + term if U in out else term
    return ExteriorElement(a.field, a.nvars, a.dim, a.k + b.k, out)


def contract(phi, alpha: ExteriorElement) -> ExteriorElement:
    """Interior product iota_phi(alpha) for a covector ``phi`` (constants or polys).

    iota_phi(e_{i_1} ^ ... ^ e_{i_k}) = sum_j (-1)^j phi(e_{i_j}) e_{..omit i_j..}.
    """
    if alpha.k == 0:
        raise ExteriorError("cannot contract a degree-0 element")
    if len(phi) != alpha.dim:
        raise ExteriorError("covector length does not match the dimension")
    F, nv = alpha.field, alpha.nvars
    phi = [_as_poly(F, nv, c) for c in phi]
    out: dict = {}
    for S, c in alpha.coeffs.items():
        for j, i in enumerate(S):
            if phi[i].is_zero():
                continue
            term = phi[i] * c
            if j % 2:
                term = -term
            U = S[:j] + S[j + 1:]
            out[U] = out[U] + term if U in out else term
    return ExteriorElement(F, nv, alpha.dim, alpha.k - 1, out)


class MatrixFamily:
    """An m x n matrix whose entries are polynomials in ``nvars`` base variables."""

    def __init__(self, field: FieldSpec, nvars: int, entries):
        self.field = field
        self.nvars = int(nvars)
        rows = [[_as_poly(field, self.nvars, c) for c in row] for row in entries]
        if not rows or len({len(r) for r in rows}) != 1 or not rows[0]:
            raise ExteriorError("matrix family needs a nonempty rectangular entry grid")
        self.entries = rows

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @classmethod
    def constant(cls, field, matrix, nvars: int = 0) -> "MatrixFamily":
        M = np.asarray(matrix, dtype=np.int64)
        return cls(field, nvars, [[int(x) for x in row] for row in M])

    def eval(self, x) -> np.ndarray:
        return np.array([[c.eval(x) for c in row] for row in self.entries], dtype=np.int64)

    def eval_batch(self, X) -> np.ndarray:
        """Matrices at each row of X, shape (B, rows, cols)."""
        from .polyring import PowerCache

        X = np.asarray(X, dtype=np.int64)
        cache = PowerCache(self.field, X)
        out = np.zeros((X.shape[0], self.rows, self.cols), dtype=np.int64)
        for i, row in enumerate(self.entries):
            for j, c in enumerate(row):
                if not c.is_zero():
                    out[:, i, j] = c.eval_batch(X, cache)
        return out

    def apply(self, vec) -> list[Poly]:
        """fam * vec for a vector of polynomials."""
        F = self.field
        vec = [_as_poly(F, self.nvars, c) for c in vec]
        if len(vec) != self.cols:
            raise ExteriorError("vector length does not match the column count")
        out = []
        for row in self.entries:
            acc = Poly.zero(F, self.nvars)
            for a, v in zip(row, vec):
                if not a.is_zero() and not v.is_zero():
                    acc = acc + a * v
            out.append(acc)
        return out

    def pullback(self, phi) -> list[Poly]:
        """f^vee phi: the covector j -> sum_i phi_i f_ij."""
        F = self.field
        phi = [_as_poly(F, self.nvars, c) for c in phi]
        if len(phi) != self.rows:
            raise ExteriorError("covector length does not match the row count")
        out = []
        for j in range(self.cols):
            acc = Poly.zero(F, self.nvars)
            for i in range(self.rows):
                if not phi[i].is_zero() and not self.entries[i][j].is_zero():
                    acc = acc + phi[i] * self.entries[i][j]
            out.append(acc)
        return out

    def minor(self, rows, cols) -> Poly:
        return _det(self.field, self.nvars, [[self.entries[i][j] for j in cols] for i in rows])

    def minors(self, k: int):
        """Yield (rows, cols, determinant) over all k x k minors."""
        for rs in combinations(range(self.rows), k):
            for cs in combinations(range(self.cols), k):
                yield rs, cs, self.minor(rs, cs)

    def max_rank_on(self, points) -> tuple[int, np.ndarray | None]:
        pts = np.asarray(list(points), dtype=np.int64).reshape(-1, self.nvars)
        if pts.shape[0] == 0:
            return -1, None
        ranks = linalg.batch_rank(self.field, self.eval_batch(pts))
        best = int(np.argmax(ranks))
        return int(ranks[best]), pts[best]


def _det(F, nvars, M) -> Poly:
    """Determinant by Laplace expansion along the first row, memoised on column sets."""
    k = len(M)
    if k == 0:
        return Poly.constant(F, nvars, 1)
    memo: dict = {}

    def rec(row, cols):
        if row == k:
            return Poly.constant(F, nvars, 1)
        key = cols
        if key in memo:
            return memo[key]
        acc = Poly.zero(F, nvars)
        for pos, c in enumerate(cols):
            a = M[row][c]
            if a.is_zero():
                continue
            sub = rec(row + 1, cols[:pos] + cols[pos + 1:])
            if sub.is_zero():
                continue
            term = a * sub
            acc = acc - term if pos % 2 else acc + term
        memo[key] = acc
        return acc

    return rec(0, tuple(range(k)))


@dataclass
class MinorCheck:
    """Outcome of checking that all k x k minors vanish (identically or on a locus)."""

    k: int
    vanish: bool
    witness: tuple | None = None
    checked: int = 0


def check_minors(fam: MatrixFamily, k: int, locus=None) -> MinorCheck:
    if k > min(fam.rows, fam.cols):
        return MinorCheck(k, True)
    count = 0
    for rs, cs, m in fam.minors(k):
        count += 1
        if m.is_zero():
            continue
        if locus:
            res = truncated_ideal_membership(m, locus, m.degree)
            if res.member:
                continue
        return MinorCheck(k, False, (rs, cs), count)
    return MinorCheck(k, True, None, count)


@dataclass
class KappaResult:
    vector: list[Poly]
    precondition: MinorCheck
    in_kernel: bool

    def eval(self, x) -> np.ndarray:
        return np.array([c.eval(x) for c in self.vector], dtype=np.int64)


def _vanishes_mod(c: Poly, locus) -> bool:
    if c.is_zero():
        return True
    return bool(locus) and truncated_ideal_membership(c, locus, c.degree).member


def kappa(fam: MatrixFamily, r: int, phis, alpha: ExteriorElement, locus=None) -> KappaResult:
    """iota_{f^vee phi_1} ... iota_{f^vee phi_r} alpha.

    The innermost contraction uses phi_r.  The minor-vanishing
    precondition is checked (on ``locus`` if given) and reported; the
    contraction is always computed.
    """
    phis = list(phis)
    if len(phis) != r:
        raise ExteriorError(f"expected {r} covectors, got {len(phis)}")
    if alpha.k != r + 1 or alpha.dim != fam.cols:
        raise ExteriorError(f"alpha must lie in degree {r + 1} over {fam.cols} columns")
    pre = check_minors(fam, r + 1, locus)
    out = alpha
    for phi in reversed(phis):
        out = contract(fam.pullback(phi), out)
    vec = out.as_vector()
    image = fam.apply(vec)
    return KappaResult(vec, pre, all(_vanishes_mod(c, locus) for c in image))


class GenericPointError(ValueError):
    pass


@dataclass
class KernelSections:
    sections: list[list[Poly]]
    rank: int
    x0: tuple
    kernel_basis: np.ndarray
    minors: MinorCheck
    annihilated: list[bool] = dc_field(default_factory=list)

    def at(self, x) -> np.ndarray:
        if not self.sections:
            return np.zeros((0, 0), dtype=np.int64)
        return np.array([[c.eval(x) for c in s] for s in self.sections], dtype=np.int64)


def locus_points(field: FieldSpec, nvars: int, locus=None, limit: int = 1 << 16):
    """All F_q points of the base satisfying the locus equations (None if too many)."""
    if field.q ** nvars > limit:
        return None
    X = np.array(list(product(range(field.q), repeat=nvars)), dtype=np.int64).reshape(-1, nvars)
    if locus:
        mask = np.ones(X.shape[0], dtype=bool)
        for g in locus:
            mask &= g.eval_batch(X) == 0
        X = X[mask]
    return X


def generic_point(fam: MatrixFamily, locus=None, points=None):
    """A base point of maximal rank among ``points`` (default: the whole F_q locus)."""
    if points is None:
        points = locus_points(fam.field, fam.nvars, locus)
        if points is None:
            raise GenericPointError("base too large to enumerate; pass points explicitly")
    r, pt = fam.max_rank_on(points)
    if pt is None:
        raise GenericPointError("the locus has no rational points")
    return tuple(int(a) for a in pt), r


def _left_inverse_rows(F, Y):
    """Covectors phi_a with phi_a(Y[:, b]) = delta_ab (Y is m x r of rank r)."""
    m, r = Y.shape
    _, piv_rows = linalg.rref(F, Y.T)
    M = Y[piv_rows, :]
    Minv = linalg.inverse(F, M)
    phis = np.zeros((r, m), dtype=np.int64)
    phis[:, piv_rows] = Minv
    return phis


def kernel_sections(fam: MatrixFamily, x0, locus=None, check_generic: bool = True) -> KernelSections:
    """Polynomial sections s_1..s_{n-r} with fam * s_j = 0 on the locus.

    r is the rank of fam(x0); the s_j(x0) form a basis of ker fam(x0).
    ``locus`` is a list of polynomials cutting out the base; None means the
    whole affine space, where vanishing must hold identically.
    """
    F = fam.field
    x0 = tuple(int(a) for a in x0)
    if len(x0) != fam.nvars:
        raise ExteriorError("base point has the wrong number of coordinates")
    for g in locus or []:
        if g.eval(x0):
            raise ExteriorError("base point is not on the locus")
    A = fam.eval(x0)
    r = linalg.rank(F, A)
    minors = check_minors(fam, r + 1, locus)
    if check_generic and not minors.vanish:
        pts = locus_points(F, fam.nvars, locus)
        higher = None
        if pts is not None and len(pts):
            higher, _ = fam.max_rank_on(pts)
        if pts is None or locus is None or (higher is not None and higher > r):
            raise GenericPointError(
                f"fam has rank {r} at {x0} but a nonvanishing {r + 1}-minor; pick a generic point"
            )
    K = linalg.nullspace(F, A)
    _, pivots = linalg.rref(F, A)
    n = fam.cols
    W = np.zeros((r, n), dtype=np.int64)
    for a, c in enumerate(pivots):
        W[a, c] = 1
    sections = []
    annihilated = []
    if r:
        Y = linalg.matmul(F, A, W.T)
        phis = _left_inverse_rows(F, Y)
    else:
        phis = np.zeros((0, fam.rows), dtype=np.int64)
    for k in K:
        alpha = ExteriorElement.wedge_of(F, fam.nvars, list(W) + [k], dim=n)
        out = alpha
        for phi in reversed(list(phis)):
            out = contract(fam.pullback(phi), out)
        vec = out.as_vector()
        at = [c.eval(x0) for c in vec]
        # at = lambda * k for a unit lambda (a sign); normalise so s(x0) = k
        j = int(np.flatnonzero(k)[0])
        lam = F.div(at[j], int(k[j]))
        vec = [c.scale(F.inv(lam)) for c in vec]
        sections.append(vec)
        image = fam.apply(vec)
        annihilated.append(all(_vanishes_mod(c, locus) for c in image))
    return KernelSections(sections, r, x0, K, minors, annihilated)
