"""Sparse polynomials over F_q and the derivative calculus on them.

Polynomials are dicts from exponent tuples to int-encoded coefficients.
The multidegree component ``f^{(n_1,...,n_p)}`` is the part of
``f(v_1 + ... + v_p)`` of multidegree (n_1, ..., n_p); the Hessian is the
(1, 1, d-2) component and the polar map is the gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb, factorial

import numpy as np

from . import linalg
from .field import FieldError, FieldSpec
from .multilinear import MultilinearForm


class DegreeError(ValueError):
    pass


class Poly:
    """A polynomial in ``nvars`` variables over ``field``."""

    __slots__ = ("field", "nvars", "terms")

    def __init__(self, field: FieldSpec, nvars: int, terms=None):
        self.field = field
        self.nvars = int(nvars)
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(a) for a in exp)
            if len(exp) != self.nvars or any(a < 0 for a in exp):
                raise DegreeError(f"bad exponent vector {exp} for {nvars} variables")
            if c:
                clean[exp] = int(c)
        self.terms = clean

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, field, nvars):
        return cls(field, nvars)

    @classmethod
    def constant(cls, field, nvars, c: int):
        return cls(field, nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, field, nvars, i: int, c: int = 1):
        exp = [0] * nvars
        exp[i] = 1
        return cls(field, nvars, {tuple(exp): c})

    @classmethod
    def linear_form(cls, field, coeffs):
        coeffs = [int(c) for c in coeffs]
        n = len(coeffs)
        return cls(field, n, {tuple(int(j == i) for j in range(n)): c for i, c in enumerate(coeffs)})

    # -- basic queries ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    @property
    def nominal_degree(self) -> int:
        """Degree, falling back to the declared degree for a zero homogeneous form."""
        if self.terms:
            return self.degree
        return getattr(self, "d", -1)

    def is_homogeneous(self, d: int | None = None) -> bool:
        degs = {sum(e) for e in self.terms}
        if d is None:
            return len(degs) <= 1
        return degs <= {d}

    def homogeneous_component(self, k: int) -> "Poly":
        return Poly(self.field, self.nvars, {e: c for e, c in self.terms.items() if sum(e) == k})

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.field == other.field and self.nvars == other.nvars and self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.field, self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        return f"Poly({self.to_str()})"

    def to_str(self, names=None) -> str:
        if not self.terms:
            return "0"
        names = names or [f"x{i + 1}" for i in range(self.nvars)]
        parts = []
        for exp in sorted(self.terms, reverse=True):
            c = self.terms[exp]
            mono = "*".join(
                names[i] if a == 1 else f"{names[i]}^{a}" for i, a in enumerate(exp) if a
            )
            cs = self.field.format(c)
            if self.field.e > 1:
                cs = f"[{cs}]"
            if not mono:
                parts.append(cs)
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts)

    # -- arithmetic ---------------------------------------------------------------

    def _same(self, other):
        if not isinstance(other, Poly) or other.field != self.field or other.nvars != self.nvars:
            raise DegreeError("polynomials live in different rings")

    def __add__(self, other):
        self._same(other)
        F = self.field
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = F.add(out.get(e, 0), c)
        return Poly(F, self.nvars, out)

    def __sub__(self, other):
        self._same(other)
        F = self.field
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = F.sub(out.get(e, 0), c)
        return Poly(F, self.nvars, out)

    def __neg__(self):
        F = self.field
        return Poly(F, self.nvars, {e: F.neg(c) for e, c in self.terms.items()})

    def __mul__(self, other):
        self._same(other)
        F = self.field
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = F.add(out.get(e, 0), F.mul(c1, c2))
        return Poly(F, self.nvars, out)

    def __pow__(self, k: int):
        result = Poly.constant(self.field, self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c: int) -> "Poly":
        F = self.field
        return Poly(F, self.nvars, {e: F.mul(v, c) for e, v in self.terms.items()})

    # -- evaluation and substitution ------------------------------------------

    def eval(self, point) -> int:
        F = self.field
        point = [int(x) for x in point]
        if len(point) != self.nvars:
            raise DegreeError(f"point has {len(point)} coordinates, expected {self.nvars}")
        acc = 0
        for exp, c in self.terms.items():
            term = c
            for x, a in zip(point, exp):
                if a:
                    term = F.mul(term, F.pow(x, a))
            acc = F.add(acc, term)
        return acc

    def eval_batch(self, X, powers=None) -> np.ndarray:
        """Evaluate at each row of ``X`` (shape (B, nvars))."""
        F = self.field
        X = np.asarray(X, dtype=np.int64)
        out = np.zeros(X.shape[0], dtype=np.int64)
        if powers is None:
            powers = PowerCache(F, X)
        for exp, c in self.terms.items():
            term = None
            for i, a in enumerate(exp):
                if a:
                    pw = powers.get(i, a)
                    term = pw if term is None else F.vmul(term, pw)
            if term is None:
                out = F.vadd(out, c)
            else:
                out = F.vadd(out, F.vmul(term, c) if c != 1 else term)
        return out

    def partial(self, i: int) -> "Poly":
        """Formal partial derivative in variable ``i``."""
        F = self.field
        out = {}
        for exp, c in self.terms.items():
            a = exp[i]
            if a:
                e = list(exp)
                e[i] -= 1
                out[tuple(e)] = F.add(out.get(tuple(e), 0), F.mul(c, F.scalar(a)))
        return Poly(F, self.nvars, out)

    def compose_linear(self, M) -> "Poly":
        """Substitute x_i = sum_j M[i][j] t_j (new ring has M.shape[1] vars)."""
        F = self.field
        M = np.asarray(M, dtype=np.int64)
        if M.shape[0] != self.nvars:
            raise DegreeError("substitution matrix has the wrong number of rows")
        m = M.shape[1]
        lins = [Poly.linear_form(F, M[i]) if m else Poly.zero(F, 0) for i in range(self.nvars)]
        cache: dict = {}

        def power(i, a):
            key = (i, a)
            if key not in cache:
                cache[key] = lins[i] if a == 1 else power(i, a - 1) * lins[i]
            return cache[key]

        total = Poly.zero(F, m)
        for exp, c in self.terms.items():
            term = Poly.constant(F, m, c)
            for i, a in enumerate(exp):
                if a:
                    term = term * power(i, a)
            total = total + term
        return total

    def shift(self, v0) -> "Poly":
        """The polynomial v -> f(v + v0)."""
        F = self.field
        n = self.nvars
        lins = [Poly.variable(F, n, i) + Poly.constant(F, n, int(v0[i])) for i in range(n)]
        total = Poly.zero(F, n)
        for exp, c in self.terms.items():
            term = Poly.constant(F, n, c)
            for i, a in enumerate(exp):
                if a:
                    term = term * lins[i] ** a
            total = total + term
        return total

    def partial_eval(self, assignment: dict) -> "Poly":
        """Substitute values for some variables; the ring keeps ``nvars``."""
        F = self.field
        out: dict = {}
        for exp, c in self.terms.items():
            e = list(exp)
            for i, val in assignment.items():
                if e[i]:
                    c = F.mul(c, F.pow(int(val), e[i]))
                    e[i] = 0
            if c:
                e = tuple(e)
                out[e] = F.add(out.get(e, 0), c)
        return Poly(F, self.nvars, out)

    def select_vars(self, keep) -> "Poly":
        """Drop the variables not in ``keep`` (they must not occur)."""
        keep = list(keep)
        out = {}
        for exp, c in self.terms.items():
            if any(a for i, a in enumerate(exp) if i not in keep):
                raise DegreeError("dropping a variable that occurs")
            out[tuple(exp[i] for i in keep)] = c
        return Poly(self.field, len(keep), out)

    def extend(self, nvars: int, offset: int = 0) -> "Poly":
        """Place this polynomial's variables at positions offset.. of a bigger ring."""
        out = {}
        for exp, c in self.terms.items():
            e = [0] * nvars
            e[offset:offset + self.nvars] = exp
            out[tuple(e)] = c
        return Poly(self.field, nvars, out)

    def embed(self, big: FieldSpec, emb) -> "Poly":
        return Poly(big, self.nvars, {e: emb(c) for e, c in self.terms.items()})

    def coefficient_vector(self, monomials) -> np.ndarray:
        return np.array([self.terms.get(m, 0) for m in monomials], dtype=np.int64)


class HomogeneousPoly(Poly):
    """A form of degree ``d`` in ``n`` variables."""

    __slots__ = ("d",)

    def __init__(self, field: FieldSpec, n: int, d: int, terms=None):
        if n < 1:
            raise DegreeError("need at least one variable")
        if d < 0:
            raise DegreeError("degree must be nonnegative")
        super().__init__(field, n, terms)
        for exp in self.terms:
            if sum(exp) != d:
                raise DegreeError(f"exponent {exp} does not sum to {d}")
        self.d = d

    @property
    def n(self) -> int:
        return self.nvars

    @classmethod
    def from_poly(cls, poly: Poly, d: int | None = None) -> "HomogeneousPoly":
        if d is None:
            d = max(poly.degree, 0)
        return cls(poly.field, poly.nvars, d, poly.terms)

    def __repr__(self):
        return f"HomogeneousPoly(n={self.n}, d={self.d}: {self.to_str()})"

    def embed(self, big, emb):
        return HomogeneousPoly(big, self.n, self.d, {e: emb(c) for e, c in self.terms.items()})


class PowerCache:
    """Lazily computed powers x_i^a of a batch of points."""

    def __init__(self, field, X):
        self.field = field
        self.X = X
        self._cache: dict = {}

    def get(self, i, a):
        key = (i, a)
        if key not in self._cache:
            if a == 1:
                self._cache[key] = self.X[:, i]
            else:
                self._cache[key] = self.field.vmul(self.get(i, a - 1), self.X[:, i])
        return self._cache[key]


def monomials(n: int, d: int) -> list[tuple[int, ...]]:
    """Exponent vectors of total degree d in n variables, lexicographically descending."""
    out = []
    for combo in combinations_with_replacement(range(n), d):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return sorted(out, reverse=True)


def multinomial(n: int, parts) -> int:
    out = factorial(n)
    for k in parts:
        out //= factorial(k)
    return out


def _compositions(total: int, parts: int, caps):
    if parts == 1:
        if total <= caps[0]:
            yield (total,)
        return
    for first in range(min(total, caps[0]) + 1):
        for rest in _compositions(total - first, parts - 1, caps[1:]):
            yield (first,) + rest


@dataclass
class MultigradedComponent:
    """f^{(n_1,...,n_p)} as a polynomial in p groups of ``group_size`` variables."""

    group_size: int
    multidegree: tuple[int, ...]
    poly: Poly

    @property
    def groups(self) -> int:
        return len(self.multidegree)

    def eval(self, *points) -> int:
        flat = [int(x) for pt in points for x in pt]
        return self.poly.eval(flat)

    def substitute(self, group: int, point) -> "Poly":
        """Fix one group of variables to ``point``."""
        n = self.group_size
        return self.poly.partial_eval({group * n + i: int(x) for i, x in enumerate(point)})


def multidegree_component(f: Poly, multidegree) -> MultigradedComponent:
    """The component of f(v_1 + ... + v_p) of multidegree (n_1, ..., n_p)."""
    multidegree = tuple(int(k) for k in multidegree)
    if any(k < 0 for k in multidegree):
        raise DegreeError("multidegree entries must be nonnegative")
    if not f.is_homogeneous():
        raise DegreeError("multidegree components need a homogeneous polynomial")
    if f.terms and sum(multidegree) != f.degree:
        raise DegreeError(f"multidegree {multidegree} does not sum to deg f = {f.degree}")
    F = f.field
    n = f.nvars
    p = len(multidegree)
    out: dict = {}
    for exp, c in f.terms.items():
        # distribute each variable's exponent over the p groups
        def rec(i, used, acc_exp, coef):
            if i == n:
                if tuple(used) == multidegree:
                    key = tuple(acc_exp)
                    val = F.mul(c, F.scalar(coef))
                    out[key] = F.add(out.get(key, 0), val)
                return
            caps = [multidegree[k] - used[k] for k in range(p)]
            for split in _compositions(exp[i], p, caps):
                new_used = [u + s for u, s in zip(used, split)]
                new_exp = list(acc_exp)
                for k, s in enumerate(split):
                    new_exp[k * n + i] = s
                rec(i + 1, new_used, new_exp, coef * multinomial(exp[i], split))

        rec(0, [0] * p, [0] * (p * n), 1)
    return MultigradedComponent(n, multidegree, Poly(F, p * n, out))


def taylor_shift_component(f: Poly, v0, order: int) -> Poly:
    """f^{(order)}_{v0}: the degree-``order`` part of v -> f(v + v0)."""
    v0 = [int(x) for x in v0]
    if f.is_homogeneous() and not f.is_zero():
        d = f.degree
        if not 0 <= order <= d:
            raise DegreeError(f"order {order} outside [0, {d}]")
        comp = multidegree_component(f, (order, d - order))
        shifted = comp.substitute(1, v0).select_vars(range(f.nvars))
        return HomogeneousPoly.from_poly(shifted, order)
    if order < 0 or (order > f.degree and not f.is_zero()):
        raise DegreeError(f"order {order} outside [0, {f.degree}]")
    return HomogeneousPoly.from_poly(f.shift(v0).homogeneous_component(order), order)


def mixed_derivative(f: Poly, v0, groups, subset) -> MultilinearForm:
    """The (V_{i_1}, ..., V_{i_m})-mixed derivative of f at v0.

    ``groups`` lists the sizes of the direct summands V_1, ..., V_n (their
    variables are consecutive); ``subset`` holds 0-based group indices.
    """
    groups = [int(g) for g in groups]
    if sum(groups) != f.nvars or any(g < 1 for g in groups):
        raise DegreeError(f"splitting {groups} does not cover {f.nvars} variables")
    subset = sorted(set(subset))
    m = len(subset)
    if m > max(f.degree, 0):
        raise DegreeError(f"|I| = {m} exceeds deg f = {f.degree}")
    if any(not 0 <= i < len(groups) for i in subset):
        raise DegreeError("subset index out of range")
    starts = np.cumsum([0] + groups)
    comp = taylor_shift_component(f, v0, m)
    shape = tuple(groups[i] for i in subset)
    entries = {}
    for exp, c in comp.terms.items():
        idx = []
        ok = True
        for g in range(len(groups)):
            block = exp[starts[g]:starts[g + 1]]
            total = sum(block)
            if g in subset:
                if total != 1:
                    ok = False
                    break
                idx.append(block.index(1))
            elif total:
                ok = False
                break
        if ok:
            entries[tuple(idx)] = c
    return MultilinearForm.from_entries(f.field, shape, entries)


def hessian(f: Poly) -> list[list[HomogeneousPoly]]:
    """H_f = f^{(1,1,d-2)}: entry (i, j) is the coefficient of u_i v_j."""
    d = f.degree if not f.is_zero() else getattr(f, "d", 2)
    if d < 2:
        raise DegreeError("the Hessian needs d >= 2")
    n = f.nvars
    F = f.field
    comp = multidegree_component(f, (1, 1, d - 2)).poly if not f.is_zero() else Poly(F, 3 * n)
    H = [[{} for _ in range(n)] for _ in range(n)]
    for exp, c in comp.terms.items():
        i = exp[:n].index(1)
        j = exp[n:2 * n].index(1)
        H[i][j][tuple(exp[2 * n:])] = c
    return [[HomogeneousPoly(F, n, d - 2, H[i][j]) for j in range(n)] for i in range(n)]


def directional_derivative(f: Poly, v) -> HomogeneousPoly:
    """d_v f = sum_i v_i df/dx_i, i.e. f^{(1,d-1)}(v, .)."""
    F = f.field
    total = Poly.zero(F, f.nvars)
    for i, vi in enumerate(v):
        vi = int(vi)
        if vi:
            total = total + f.partial(i).scale(vi)
    d = f.degree if not f.is_zero() else getattr(f, "d", 1)
    return HomogeneousPoly.from_poly(total, max(d - 1, 0))


def polar_map(f: Poly) -> tuple[HomogeneousPoly, ...]:
    """x -> df|_x, as the tuple of partial derivatives."""
    d = f.degree if not f.is_zero() else getattr(f, "d", 2)
    if d < 2:
        raise DegreeError("the polar map needs d >= 2")
    return tuple(HomogeneousPoly.from_poly(f.partial(i), d - 1) for i in range(f.nvars))


def jacobian(polys) -> list[list[Poly]]:
    return [[g.partial(i) for i in range(g.nvars)] for g in polys]


@dataclass
class VandermondeResult:
    """sum_i coefficients[i] * f(lambdas[i] * v + x) == f^{(2,d-2)}(v, x)."""

    coefficients: list[int]
    lambdas: list[int]
    component: Poly
    combination: Poly


def _combination(f: Poly, coeffs, lambdas) -> Poly:
    F = f.field
    n = f.nvars
    total = Poly.zero(F, 2 * n)
    for c, lam in zip(coeffs, lambdas):
        # A(v, x) = lam * v + x
        M = np.zeros((n, 2 * n), dtype=np.int64)
        for i in range(n):
            M[i, i] = lam
            M[i, n + i] = 1
        total = total + f.compose_linear(M).scale(c)
    return total


def vandermonde_extract(f: Poly, lambdas, odd_variant: bool = False) -> VandermondeResult:
    """Express f^{(2,d-2)}(v, x) as a combination of f(lambda_i v + x).

    General case: d+1 distinct scalars.  With ``odd_variant`` (d odd,
    char != 2) pass (d-1)/2 nonzero scalars with distinct squares; the
    combination then uses f(x) and f(+-lambda_i v + x), d terms in all.
    """
    F = f.field
    d = f.degree if not f.is_zero() else getattr(f, "d", 0)
    lambdas = [int(x) for x in lambdas]
    if len(set(lambdas)) != len(lambdas):
        raise FieldError("repeated lambda values")
    if not odd_variant:
        if F.q < d + 1:
            raise FieldError(f"{F} has fewer than d+1 = {d + 1} elements")
        if len(lambdas) != d + 1:
            raise FieldError(f"need exactly d+1 = {d + 1} distinct scalars")
        V = np.array([[F.pow(lam, k) for lam in lambdas] for k in range(d + 1)], dtype=np.int64)
        rhs = np.zeros(d + 1, dtype=np.int64)
        if d >= 2:
            rhs[2] = 1
        coeffs = linalg.solve(F, V, rhs)
        coeffs = [int(c) for c in coeffs]
        used_lambdas = lambdas
    else:
        if d % 2 == 0 or F.p == 2:
            raise FieldError("odd variant needs odd d and char != 2")
        half = (d - 1) // 2
        if len(lambdas) != half or 0 in lambdas:
            raise FieldError(f"need {half} nonzero scalars")
        squares = [F.mul(lam, lam) for lam in lambdas]
        if len(set(squares)) != half:
            raise FieldError("lambda squares must be distinct")
        V = np.zeros((half + 1, half + 1), dtype=np.int64)
        V[0, :] = 1
        for j in range(1, half + 1):
            for i, sq in enumerate(squares):
                V[j, i + 1] = F.pow(sq, j)
        rhs = np.zeros(half + 1, dtype=np.int64)
        rhs[1] = 1
        sol = [int(c) for c in linalg.solve(F, V, rhs)]
        inv2 = F.inv(F.scalar(2))
        coeffs = [sol[0]]
        used_lambdas = [0]
        for c, lam in zip(sol[1:], lambdas):
            coeffs += [F.mul(c, inv2), F.mul(c, inv2)]
            used_lambdas += [lam, F.neg(lam)]
    component = multidegree_component(f, (2, d - 2)).poly if d >= 2 else Poly.zero(F, 2 * f.nvars)
    combination = _combination(f, coeffs, used_lambdas)
    if combination != component:
        raise AssertionError("Vandermonde combination failed to reproduce f^(2,d-2)")
    return VandermondeResult(coeffs, used_lambdas, component, combination)


@dataclass
class PolyMembership:
    member: bool
    cofactors: list | None = None


def monomials_upto(n: int, D: int) -> list[tuple[int, ...]]:
    out = []
    for k in range(D + 1):
        out.extend(monomials(n, k))
    return out


def truncated_ideal_membership(h: Poly, gens, degree_bound: int, homogeneous: bool = False) -> PolyMembership:
    """Is h in span{g * m : g in gens, m monomial, deg(g m) <= D}?

    A certificate-style check: success proves ideal membership, failure only
    rules out witnesses of degree at most D.  With ``homogeneous`` the
    multipliers are restricted to degree exactly D - deg g.
    """
    F = h.field
    n = h.nvars
    D = int(degree_bound)
    if not h.is_zero() and h.degree > D:
        raise DegreeError(f"deg h = {h.degree} exceeds the degree bound {D}")
    gens = list(gens)
    if h.is_zero():
        return PolyMembership(True, [Poly.zero(F, n) for _ in gens])
    columns = []
    owners = []
    for gi, g in enumerate(gens):
        if g.is_zero():
            continue
        budget = D - g.degree
        if budget < 0:
            continue
        mults = monomials(n, budget) if homogeneous else monomials_upto(n, budget)
        for m in mults:
            prod_terms = {tuple(a + b for a, b in zip(e, m)): c for e, c in g.terms.items()}
            columns.append(prod_terms)
            owners.append((gi, m))
    if not columns:
        return PolyMembership(False)
    rows = sorted(set(h.terms).union(*[set(c) for c in columns]))
    index = {mono: k for k, mono in enumerate(rows)}
    A = np.zeros((len(rows), len(columns)), dtype=np.int64)
    for j, col in enumerate(columns):
        for mono, c in col.items():
            A[index[mono], j] = c
    b = np.zeros(len(rows), dtype=np.int64)
    for mono, c in h.terms.items():
        b[index[mono]] = c
    x = linalg.solve(F, A, b)
    if x is None:
        return PolyMembership(False)
    cof = [dict() for _ in gens]
    for (gi, m), val in zip(owners, x):
        if val:
            cof[gi][m] = int(val)
    return PolyMembership(True, [Poly(F, n, c) for c in cof])


def random_homogeneous(field: FieldSpec, n: int, d: int, rng, density: float = 1.0) -> HomogeneousPoly:
    terms = {}
    for m in monomials(n, d):
        if density >= 1.0 or rng.random() < density:
            terms[m] = int(rng.integers(0, field.q))
    return HomogeneousPoly(field, n, d, terms)


def fermat(field: FieldSpec, n: int, d: int, coeffs=None) -> HomogeneousPoly:
    coeffs = coeffs or [1] * n
    return HomogeneousPoly(field, n, d, {tuple(d * int(j == i) for j in range(n)): coeffs[i] for i in range(n)})


def binomial_mod(n: int, k: int, p: int) -> int:
    return comb(n, k) % p
