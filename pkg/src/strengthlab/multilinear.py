"""Dense d-linear forms on V_1 x ... x V_d and their tensor ideals."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import prod

import numpy as np

from . import linalg
from .field import FieldSpec

MAX_DENSE_SIZE = 1 << 22


class ShapeError(ValueError):
    pass


class MultilinearForm:
    """A d-linear form stored as a dense array of int-encoded field elements.

    ``coeffs[i_1, ..., i_d]`` is the value on basis vectors
    ``(e_{i_1}, ..., e_{i_d})``.  Order-0 forms (scalars) are allowed as
    cofactors inside tensor ideals.
    """

    __slots__ = ("field", "coeffs")

    def __init__(self, field: FieldSpec, shape, coeffs=None):
        shape = tuple(int(n) for n in shape)
        if any(n < 1 for n in shape):
            raise ShapeError(f"dimensions must be positive, got {shape}")
        if prod(shape) > MAX_DENSE_SIZE:
            raise ShapeError(f"dense size {prod(shape)} exceeds {MAX_DENSE_SIZE}")
        if coeffs is None:
            arr = np.zeros(shape, dtype=np.int64)
        else:
            arr = np.array(coeffs, dtype=np.int64).reshape(shape)
            if arr.size and (arr.min() < 0 or arr.max() >= field.q):
                raise ValueError("coefficients must be encoded field elements")
        arr.setflags(write=False)
        self.field = field
        self.coeffs = arr

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape

    @property
    def d(self) -> int:
        return self.coeffs.ndim

    @classmethod
    def from_entries(cls, field, shape, entries: dict) -> "MultilinearForm":
        arr = np.zeros(tuple(shape), dtype=np.int64)
        for idx, val in entries.items():
            if len(idx) != len(shape) or any(not 0 <= i < n for i, n in zip(idx, shape)):
                raise ShapeError(f"index {idx} outside shape {tuple(shape)}")
            arr[tuple(idx)] = val
        return cls(field, shape, arr)

    @classmethod
    def linear(cls, field, vec) -> "MultilinearForm":
        vec = np.asarray(vec, dtype=np.int64).reshape(-1)
        return cls(field, (vec.size,), vec)

    @classmethod
    def diagonal(cls, field, shape, r: int, values=None) -> "MultilinearForm":
        """sum_{i<r} a_i x_i y_i z_i ... (a_i = 1 by default)."""
        values = values if values is not None else [1] * r
        return cls.from_entries(field, shape, {(i,) * len(shape): values[i] for i in range(r)})

    def entries(self) -> dict:
        return {tuple(int(i) for i in idx): int(self.coeffs[idx]) for idx in zip(*np.nonzero(self.coeffs))}

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def __eq__(self, other):
        return (
            isinstance(other, MultilinearForm)
            and self.field == other.field
            and self.shape == other.shape
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def __hash__(self):
        return hash((self.field, self.shape, self.coeffs.tobytes()))

    def __repr__(self):
        return f"MultilinearForm(shape={self.shape}, nnz={len(self.entries())})"

    def _check(self, other):
        if self.field != other.field or self.shape != other.shape:
            raise ShapeError("forms live on different spaces")

    def __add__(self, other):
        self._check(other)
        return MultilinearForm(self.field, self.shape, self.field.vadd(self.coeffs, other.coeffs))

    def __sub__(self, other):
        self._check(other)
        return MultilinearForm(self.field, self.shape, self.field.vsub(self.coeffs, other.coeffs))

    def __neg__(self):
        return MultilinearForm(self.field, self.shape, self.field.vneg(self.coeffs))

    def scale(self, c: int) -> "MultilinearForm":
        return MultilinearForm(self.field, self.shape, self.field.vmul(self.coeffs, c))

    def embed(self, big: FieldSpec, emb) -> "MultilinearForm":
        table = np.array([emb(a) for a in range(self.field.q)], dtype=np.int64)
        return MultilinearForm(big, self.shape, table[self.coeffs])

    def contract(self, axis: int, vec) -> "MultilinearForm":
        """Plug ``vec`` into slot ``axis``; the result has order d-1."""
        vec = np.asarray(vec, dtype=np.int64).reshape(-1)
        if vec.size != self.shape[axis]:
            raise ShapeError(f"vector of length {vec.size} for slot of dim {self.shape[axis]}")
        bshape = [1] * self.d
        bshape[axis] = vec.size
        out = self.field.vdot(self.coeffs, vec.reshape(bshape), axis=axis)
        return MultilinearForm(self.field, out.shape, out)

    def eval(self, vectors) -> int:
        if len(vectors) != self.d:
            raise ShapeError(f"expected {self.d} vectors, got {len(vectors)}")
        form = self
        for axis in reversed(range(self.d)):
            form = form.contract(axis, vectors[axis])
        return int(form.coeffs)


@dataclass(frozen=True)
class IndexPartition:
    """A split [0, d) = I u J into two nonempty parts (0-based factor indices)."""

    I: tuple[int, ...]
    J: tuple[int, ...]

    def __post_init__(self):
        I, J = tuple(sorted(self.I)), tuple(sorted(self.J))
        object.__setattr__(self, "I", I)
        object.__setattr__(self, "J", J)
        if not I or not J:
            raise ShapeError("both parts of a partition must be nonempty")
        if set(I) & set(J) or sorted(I + J) != list(range(len(I) + len(J))):
            raise ShapeError(f"{I} | {J} is not a partition of [0, {len(I) + len(J)})")

    @property
    def d(self) -> int:
        return len(self.I) + len(self.J)

    @classmethod
    def from_side(cls, I, d: int) -> "IndexPartition":
        I = tuple(sorted(I))
        return cls(I, tuple(a for a in range(d) if a not in I))


def _broadcast_into(form: MultilinearForm, axes, d: int) -> np.ndarray:
    """View ``form`` as an array of order ``d`` with its axes at ``axes``."""
    shape = [1] * d
    for ax, n in zip(axes, form.shape):
        shape[ax] = n
    return form.coeffs.reshape(shape)


def outer_product(P_I: MultilinearForm, P_J: MultilinearForm, partition: IndexPartition) -> MultilinearForm:
    """The form (v_1..v_d) -> P_I(v_I) * P_J(v_J)."""
    if P_I.field != P_J.field:
        raise ShapeError("factors over different fields")
    if P_I.d != len(partition.I) or P_J.d != len(partition.J):
        raise ShapeError("factor orders do not match the partition")
    d = partition.d
    a = _broadcast_into(P_I, partition.I, d)
    b = _broadcast_into(P_J, partition.J, d)
    return MultilinearForm(P_I.field, np.broadcast(a, b).shape, P_I.field.vmul(a, b))


def _general_outer(G: MultilinearForm, I, Q: MultilinearForm, J, d: int) -> MultilinearForm:
    a = _broadcast_into(G, I, d)
    b = _broadcast_into(Q, J, d)
    return MultilinearForm(G.field, np.broadcast(a, b).shape, G.field.vmul(a, b))


def restrict(P: MultilinearForm, factor: int, basis) -> MultilinearForm:
    """Restrict slot ``factor`` to span(basis), expressed in that basis."""
    F = P.field
    B = linalg.as_matrix(basis, P.shape[factor])
    if B.shape[1] != P.shape[factor]:
        raise ShapeError("basis vectors have the wrong length")
    if linalg.rank(F, B) != B.shape[0]:
        raise ValueError("restriction basis is linearly dependent")
    T = np.moveaxis(P.coeffs, factor, -1)
    out = F.vdot(T[..., None, :], B, axis=-1)
    return MultilinearForm(F, np.moveaxis(out, -1, factor).shape, np.moveaxis(out, -1, factor))


@dataclass
class MembershipResult:
    member: bool
    cofactors: list | None = None


def ideal_membership(P: MultilinearForm, gens) -> MembershipResult:
    """Decide P in the tensor ideal generated by ``gens = [(I, P_I), ...]``.

    The ideal is the image of (Q_1, ..., Q_r) -> sum P_{I_i} * Q_{J_i}, so
    membership is solvability of one linear system over the field.
    """
    F = P.field
    d = P.d
    N = P.coeffs.size
    gens = [(tuple(sorted(I)), G) for I, G in gens]
    if P.is_zero():
        return MembershipResult(True, [_zero_cofactor(F, P.shape, I) for I, _ in gens])
    if not gens:
        return MembershipResult(False)
    blocks = []
    jshapes = []
    idx = np.indices(P.shape).reshape(d, -1)
    for I, G in gens:
        if G.field != F or G.shape != tuple(P.shape[a] for a in I):
            raise ShapeError(f"generator on {I} has shape {G.shape}")
        J = tuple(a for a in range(d) if a not in I)
        jshape = tuple(P.shape[b] for b in J)
        jshapes.append((J, jshape))
        nj = prod(jshape)
        jflat = np.ravel_multi_index(tuple(idx[b] for b in J), jshape) if J else np.zeros(N, dtype=np.int64)
        gvals = np.broadcast_to(_broadcast_into(G, I, d), P.shape).reshape(-1)
        block = np.zeros((N, nj), dtype=np.int64)
        block[np.arange(N), jflat] = gvals
        blocks.append(block)
    A = np.concatenate(blocks, axis=1)
    x = linalg.solve(F, A, P.coeffs.reshape(-1))
    if x is None:
        return MembershipResult(False)
    cofactors = []
    pos = 0
    for J, jshape in jshapes:
        nj = prod(jshape)
        cofactors.append(MultilinearForm(F, jshape, x[pos:pos + nj]))
        pos += nj
    return MembershipResult(True, cofactors)


def _zero_cofactor(F, shape, I):
    jshape = tuple(n for a, n in enumerate(shape) if a not in I)
    return MultilinearForm(F, jshape)


def ideal_element(shape, gens, cofactors, field) -> MultilinearForm:
    """sum_i P_{I_i} * Q_{J_i} as a form on ``shape``."""
    d = len(shape)
    total = MultilinearForm(field, shape)
    for (I, G), Q in zip(gens, cofactors):
        I = tuple(sorted(I))
        J = tuple(a for a in range(d) if a not in I)
        total = total + _general_outer(G, I, Q, J, d)
    return total


def kernel_of_restriction(field: FieldSpec, shape, factor: int, basis) -> list:
    """Linear forms l_1..l_c on V_factor cutting out span(basis).

    A form restricts to zero on span(basis) in slot ``factor`` exactly when
    it lies in the tensor ideal generated by these forms.
    """
    n = shape[factor]
    B = linalg.as_matrix(basis, n)
    if B.shape[0] and linalg.rank(field, B) != B.shape[0]:
        raise ValueError("restriction basis is linearly dependent")
    ells = linalg.nullspace(field, B) if B.shape[0] else np.eye(n, dtype=np.int64)
    return [((factor,), MultilinearForm.linear(field, ell)) for ell in ells]


def flatten_family(P: MultilinearForm, pivot: int = 0, second: int | None = None):
    """The family w -> P_W(w) of (n_pivot x n_second) matrices over W.

    W is the product of the remaining factors, in increasing factor order;
    matrix entries are multilinear polynomials in the concatenated
    coordinates of W.  ``ker P_W(w)`` is the fiber of Z_P over w.
    """
    from .detkernel import MatrixFamily
    from .polyring import Poly

    if P.d < 3:
        raise ShapeError("flatten_family needs d >= 3")
    if second is None:
        second = next(a for a in range(P.d) if a != pivot)
    if second == pivot:
        raise ShapeError("pivot and second factor must differ")
    rest = [a for a in range(P.d) if a not in (pivot, second)]
    offsets = np.cumsum([0] + [P.shape[a] for a in rest])
    nvars = int(offsets[-1])
    T = np.moveaxis(P.coeffs, [pivot, second] + rest, list(range(P.d)))
    entries = []
    for i in range(P.shape[pivot]):
        row = []
        for j in range(P.shape[second]):
            terms = {}
            sub = T[i, j]
            for idx in zip(*np.nonzero(sub)):
                exp = [0] * nvars
                for k, t in enumerate(idx):
                    exp[offsets[k] + t] = 1
                terms[tuple(exp)] = int(sub[idx])
            row.append(Poly(P.field, nvars, terms))
        entries.append(row)
    return MatrixFamily(P.field, nvars, entries)


def random_form(field: FieldSpec, shape, rng, density: float = 1.0) -> MultilinearForm:
    arr = rng.integers(0, field.q, size=shape)
    if density < 1.0:
        arr = np.where(rng.random(shape) < density, arr, 0)
    return MultilinearForm(field, shape, arr)


def all_vectors(field: FieldSpec, n: int):
    for digits in product(range(field.q), repeat=n):
        yield np.array(digits, dtype=np.int64)
