"""Exact arithmetic in prime fields F_p and extensions F_{p^e}.

Elements are encoded as python ints in ``[0, q)``: the base-``p`` digits of
the integer are the residue coefficients (little-endian) modulo the defining
polynomial.  Prime-field elements keep the same encoding in every extension,
so embedding F_p into F_{p^e} is the identity on ints.

Scalar methods (``add``, ``mul``, ...) work on python ints.  The ``v*``
methods work elementwise on int64 numpy arrays and support broadcasting.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

MAX_CHARACTERISTIC = 1 << 16
_TABLE_LIMIT = 1024
_LOG_LIMIT = 1 << 22


class FieldError(ValueError):
    """Domain error in field arithmetic (inverse of zero, bad modulus, ...)."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    k = 2
    while k * k <= n:
        if n % k == 0:
            out.append(k)
            while n % k == 0:
                n //= k
        k += 1
    if n > 1:
        out.append(n)
    return out


# -- dense polynomials over F_p, little-endian coefficient lists --------------

def _ptrim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _psub(a, b, p):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return _ptrim([(x - y) % p for x, y in zip(a, b)])


def _pmul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _ptrim(out)


def _pdivmod(a, m, p):
    a = _ptrim(a)
    m = _ptrim(m)
    if not m:
        raise ZeroDivisionError("polynomial division by zero")
    inv_lead = pow(m[-1], p - 2, p)
    quot = [0] * max(len(a) - len(m) + 1, 0)
    while len(a) >= len(m):
        c = a[-1] * inv_lead % p
        shift = len(a) - len(m)
        quot[shift] = c
        for i, y in enumerate(m):
            a[shift + i] = (a[shift + i] - c * y) % p
        a = _ptrim(a)
    return _ptrim(quot), a


def _pmod(a, m, p):
    return _pdivmod(a, m, p)[1]


def _pmulmod(a, b, m, p):
    return _pmod(_pmul(a, b, p), m, p)


def _ppowmod(a, k, m, p):
    result = [1]
    base = _pmod(a, m, p)
    while k:
        if k & 1:
            result = _pmulmod(result, base, m, p)
        base = _pmulmod(base, base, m, p)
        k >>= 1
    return result


def _pgcd(a, b, p):
    a, b = _ptrim(a), _ptrim(b)
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def has_root(poly, p: int) -> bool:
    for x in range(p):
        acc = 0
        for c in reversed(poly):
            acc = (acc * x + c) % p
        if acc == 0:
            return True
    return False


def is_irreducible(modulus, p: int) -> bool:
    """Irreducibility of a monic polynomial over F_p.

    Degrees up to 3 are irreducible iff rootless; higher degrees use the
    Frobenius/gcd (Rabin) test.
    """
    m = _ptrim(modulus)
    e = len(m) - 1
    if e < 1:
        return False
    if e == 1:
        return True
    if e <= 3:
        return not has_root(m, p)
    x = [0, 1]
    if _psub(_ppowmod(x, p**e, m, p), x, p):
        return False
    for r in prime_factors(e):
        h = _psub(_ppowmod(x, p ** (e // r), m, p), x, p)
        if len(_pgcd(m, h, p)) != 1:
            return False
    return True


def find_irreducible(p: int, e: int) -> tuple[int, ...]:
    """Lexicographically first monic irreducible of degree e over F_p."""
    if e == 1:
        return (0, 1)
    for code in range(p**e):
        coeffs = [(code // p**i) % p for i in range(e)] + [1]
        if coeffs[0] != 0 and is_irreducible(coeffs, p):
            return tuple(coeffs)
    raise FieldError(f"no irreducible polynomial of degree {e} over F_{p}")


@dataclass(frozen=True)
class CharFlags:
    """Which characteristic hypotheses fail for a degree ``d``."""

    divides_d: bool
    divides_dminus1: bool
    divides_2: bool

    @property
    def theorem_ok(self) -> bool:
        # char does not divide d(d-1)
        return not (self.divides_d or self.divides_dminus1)


class FieldSpec:
    """The finite field GF(p^e) = F_p[t]/(modulus).  Immutable."""

    def __init__(self, p: int, e: int = 1, modulus=None):
        if not is_prime(p):
            raise FieldError(f"{p} is not prime")
        if p >= MAX_CHARACTERISTIC:
            raise FieldError(f"characteristic {p} exceeds desk-scale limit 2^16")
        if e < 1:
            raise FieldError("extension degree must be >= 1")
        if e == 1:
            modulus = (0, 1)
        elif modulus is None:
            modulus = find_irreducible(p, e)
        else:
            modulus = tuple(int(c) % p for c in modulus)
            if len(modulus) != e + 1 or modulus[-1] != 1:
                raise FieldError(f"modulus must be monic of degree {e}")
            if not is_irreducible(modulus, p):
                raise FieldError(f"modulus {modulus} is reducible over F_{p}")
        self.p = p
        self.e = e
        self.modulus = tuple(modulus)
        self.q = p**e

    # -- identity -------------------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and (self.p, self.e, self.modulus) == (
            other.p,
            other.e,
            other.modulus,
        )

    def __hash__(self):
        return hash((self.p, self.e, self.modulus))

    def __repr__(self):
        return f"FieldSpec({self})"

    def __str__(self):
        return f"GF({self.p}^{self.e}; modulus={','.join(map(str, self.modulus))})"

    @classmethod
    def parse(cls, text: str) -> "FieldSpec":
        """Parse ``GF(p^e; modulus=c0,...,1)``, ``GF(p^e)`` or ``GF(p)``."""
        m = re.fullmatch(
            r"\s*GF\(\s*(\d+)\s*(?:\^\s*(\d+))?\s*(?:;\s*modulus\s*=\s*([\d,\s]+))?\)\s*",
            text,
        )
        if not m:
            raise FieldError(f"malformed field header {text!r}")
        p = int(m.group(1))
        e = int(m.group(2) or 1)
        modulus = None
        if m.group(3):
            modulus = tuple(int(c) for c in m.group(3).replace(" ", "").split(",") if c)
            if e == 1:
                if modulus != (0, 1):
                    raise FieldError("prime field modulus placeholder must be 0,1")
                modulus = None
        return cls(p, e, modulus)

    @property
    def is_prime_field(self) -> bool:
        return self.e == 1

    # -- encoding -------------------------------------------------------------

    def digits(self, a: int) -> tuple[int, ...]:
        p = self.p
        return tuple((a // p**i) % p for i in range(self.e))

    def from_digits(self, ds) -> int:
        ds = list(ds)
        if len(ds) > self.e:
            raise FieldError(f"too many residue digits for {self}")
        if any(not 0 <= d < self.p for d in ds):
            raise FieldError("residue digits must lie in [0, p)")
        return sum(d * self.p**i for i, d in enumerate(ds))

    def scalar(self, n: int) -> int:
        """Image of the integer ``n`` under Z -> F."""
        return n % self.p

    def format(self, a: int) -> str:
        return ",".join(map(str, self.digits(a)))

    def parse_element(self, text: str) -> int:
        try:
            ds = [int(t) for t in text.strip().split(",")]
        except ValueError as exc:
            raise FieldError(f"malformed element {text!r}") from exc
        return self.from_digits(ds)

    def elements(self) -> range:
        return range(self.q)

    def __call__(self, value) -> "FieldElem":
        if isinstance(value, (list, tuple)):
            return FieldElem(self, self.from_digits(value))
        return FieldElem(self, self.scalar(int(value)))

    # -- polynomial-arithmetic fallback for extension fields ------------------

    def _to_poly(self, a):
        return _ptrim(self.digits(a))

    def _from_poly(self, coeffs):
        coeffs = list(coeffs) + [0] * (self.e - len(coeffs))
        return sum(c * self.p**i for i, c in enumerate(coeffs[: self.e]))

    def _poly_mul(self, a, b):
        return self._from_poly(
            _pmulmod(self._to_poly(a), self._to_poly(b), self.modulus, self.p)
        )

    def _digit_add(self, a, b, sign=1):
        p = self.p
        out, place = 0, 1
        for _ in range(self.e):
            out += ((a % p + sign * (b % p)) % p) * place
            a //= p
            b //= p
            place *= p
        return out

    @cached_property
    def _log_tables(self):
        if self.q > _LOG_LIMIT:
            raise FieldError(f"{self} too large for table-based arithmetic")
        q = self.q
        order = q - 1
        factors = prime_factors(order)
        gen = None
        for g in range(self.p, q):
            if all(self._poly_pow(g, order // r) != 1 for r in factors):
                gen = g
                break
        if gen is None:  # q - 1 == 1 cannot happen for e > 1
            raise FieldError("no primitive element found")
        exp = np.zeros(2 * order, dtype=np.int64)
        x = 1
        for k in range(order):
            exp[k] = x
            x = self._poly_mul(x, gen)
        exp[order:] = exp[:order]
        log = np.zeros(q, dtype=np.int64)
        log[exp[:order]] = np.arange(order)
        return exp, log

    def _poly_pow(self, a, k):
        return self._from_poly(_ppowmod(self._to_poly(a), k, self.modulus, self.p))

    @cached_property
    def _tables(self):
        """Full add/mul tables (numpy and list form) for small extensions."""
        q, p = self.q, self.p
        exp, log = self._log_tables
        a = np.arange(q)
        dig = np.stack([(a // p**i) % p for i in range(self.e)], axis=1)
        place = p ** np.arange(self.e)
        add = (((dig[:, None, :] + dig[None, :, :]) % p) * place).sum(-1)
        neg = (((-dig) % p) * place).sum(-1)
        la = log[:, None] + log[None, :]
        mul = exp[la]
        mul[0, :] = 0
        mul[:, 0] = 0
        inv = np.zeros(q, dtype=np.int64)
        inv[1:] = exp[(q - 1 - log[1:]) % (q - 1)]
        return {
            "add": add.astype(np.int64),
            "neg": neg.astype(np.int64),
            "mul": mul.astype(np.int64),
            "inv": inv,
            "add_l": add.tolist(),
            "neg_l": neg.tolist(),
            "mul_l": mul.tolist(),
            "inv_l": inv.tolist(),
        }

    @property
    def _small(self) -> bool:
        return self.e > 1 and self.q <= _TABLE_LIMIT

    # -- scalar arithmetic -----------------------------------------------------

    def add(self, a: int, b: int) -> int:
        if self.e == 1:
            return (a + b) % self.p
        if self._small:
            return self._tables["add_l"][a][b]
        return self._digit_add(a, b)

    def neg(self, a: int) -> int:
        if self.e == 1:
            return -a % self.p
        if self._small:
            return self._tables["neg_l"][a]
        return self._digit_add(0, a, -1)

    def sub(self, a: int, b: int) -> int:
        if self.e == 1:
            return (a - b) % self.p
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.e == 1:
            return a * b % self.p
        if self._small:
            return self._tables["mul_l"][a][b]
        if a == 0 or b == 0:
            return 0
        if self.q <= _LOG_LIMIT:
            exp, log = self._log_tables
            return int(exp[log[a] + log[b]])
        return self._poly_mul(a, b)

    def inv(self, a: int) -> int:
        if a == 0:
            raise FieldError("inverse of zero")
        if self.e == 1:
            return pow(a, self.p - 2, self.p)
        if self._small:
            return self._tables["inv_l"][a]
        return self.pow(a, self.q - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, k: int) -> int:
        if k < 0:
            return self.pow(self.inv(a), -k)
        if self.e == 1:
            return pow(a, k, self.p)
        result, base = 1, a
        while k:
            if k & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            k >>= 1
        return result

    def sum(self, values) -> int:
        acc = 0
        for v in values:
            acc = self.add(acc, v)
        return acc

    def frobenius(self, a: int) -> int:
        return self.pow(a, self.p)

    # -- vectorized arithmetic -------------------------------------------------

    def vadd(self, a, b):
        if self.e == 1:
            return (np.asarray(a) + b) % self.p
        if self._small:
            return self._tables["add"][a, b]
        p = self.p
        a = np.asarray(a)
        b = np.asarray(b)
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        place = 1
        for _ in range(self.e):
            out += ((a % p + b % p) % p) * place
            a = a // p
            b = b // p
            place *= p
        return out

    def vneg(self, a):
        if self.e == 1:
            return (-np.asarray(a)) % self.p
        if self._small:
            return self._tables["neg"][a]
        p = self.p
        a = np.asarray(a)
        out = np.zeros(a.shape, dtype=np.int64)
        place = 1
        for _ in range(self.e):
            out += ((-(a % p)) % p) * place
            a = a // p
            place *= p
        return out

    def vsub(self, a, b):
        if self.e == 1:
            return (np.asarray(a) - b) % self.p
        return self.vadd(a, self.vneg(b))

    def vmul(self, a, b):
        if self.e == 1:
            return (np.asarray(a) * b) % self.p
        if self._small:
            return self._tables["mul"][a, b]
        exp, log = self._log_tables
        a = np.asarray(a)
        b = np.asarray(b)
        out = exp[log[a] + log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def vinv(self, a):
        a = np.asarray(a)
        if np.any(a == 0):
            raise FieldError("inverse of zero")
        if self.e == 1:
            return self._prime_inv_table[a]
        if self._small:
            return self._tables["inv"][a]
        exp, log = self._log_tables
        return exp[(self.q - 1 - log[a]) % (self.q - 1)]

    @cached_property
    def _prime_inv_table(self):
        p = self.p
        inv = np.zeros(p, dtype=np.int64)
        for a in range(1, p):
            inv[a] = pow(a, p - 2, p)
        return inv

    def vdot(self, a, b, axis=-1):
        """Field dot product of two broadcastable arrays along ``axis``."""
        if self.e == 1:
            return (np.asarray(a) * b % self.p).sum(axis=axis) % self.p
        prod = self.vmul(a, b)
        prod = np.moveaxis(prod, axis, 0)
        acc = prod[0]
        for k in range(1, prod.shape[0]):
            acc = self.vadd(acc, prod[k])
        return acc

    def vsum(self, a, axis=0):
        if self.e == 1:
            return np.asarray(a).sum(axis=axis) % self.p
        a = np.moveaxis(np.asarray(a), axis, 0)
        if a.shape[0] == 0:
            return np.zeros(a.shape[1:], dtype=np.int64)
        acc = a[0]
        for k in range(1, a.shape[0]):
            acc = self.vadd(acc, a[k])
        return acc

    # -- towers and embeddings -------------------------------------------------

    def extension(self, k: int) -> "FieldSpec":
        """The degree-``k`` extension of this field, F_{p^{e k}}."""
        if k == 1:
            return self
        return FieldSpec(self.p, self.e * k)

    def embedding(self, big: "FieldSpec"):
        """Return an int->int map embedding this field into ``big``.

        Maps the generator t to a root of this field's modulus in ``big``.
        """
        if big.p != self.p or big.e % self.e:
            raise FieldError(f"{self} does not embed into {big}")
        if self.e == 1 or big == self:
            return _identity
        root = None
        for beta in big.elements():
            acc = 0
            for c in reversed(self.modulus):
                acc = big.add(big.mul(acc, beta), c)
            if acc == 0:
                root = beta
                break
        if root is None:  # pragma: no cover - guaranteed by field theory
            raise FieldError("modulus has no root in extension")
        powers = [big.pow(root, i) for i in range(self.e)]
        table = []
        for a in self.elements():
            acc = 0
            for d, pw in zip(self.digits(a), powers):
                acc = big.add(acc, big.mul(d, pw))
            table.append(acc)
        return _TableMap(tuple(table))

    def tower(self, levels: int) -> list[tuple["FieldSpec", object]]:
        """[(F_{q^k}, embedding) for k = 1..levels]."""
        out = []
        for k in range(1, levels + 1):
            big = self.extension(k)
            out.append((big, self.embedding(big)))
        return out


def _identity(a: int) -> int:
    return a


@dataclass(frozen=True)
class _TableMap:
    table: tuple

    def __call__(self, a: int) -> int:
        return self.table[a]


@dataclass(frozen=True)
class FieldElem:
    """A field element with operator overloading; wraps the int encoding."""

    field: FieldSpec
    value: int

    def __post_init__(self):
        if not 0 <= self.value < self.field.q:
            raise FieldError(f"encoding {self.value} out of range for {self.field}")

    @property
    def residue(self) -> tuple[int, ...]:
        return self.field.digits(self.value)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElem):
            if other.field != self.field:
                raise FieldError("elements belong to different fields")
            return other.value
        if isinstance(other, int):
            return self.field.scalar(other)
        return NotImplemented

    def __add__(self, other):
        b = self._coerce(other)
        return FieldElem(self.field, self.field.add(self.value, b))

    __radd__ = __add__

    def __sub__(self, other):
        b = self._coerce(other)
        return FieldElem(self.field, self.field.sub(self.value, b))

    def __rsub__(self, other):
        b = self._coerce(other)
        return FieldElem(self.field, self.field.sub(b, self.value))

    def __mul__(self, other):
        b = self._coerce(other)
        return FieldElem(self.field, self.field.mul(self.value, b))

    __rmul__ = __mul__

    def __truediv__(self, other):
        b = self._coerce(other)
        return FieldElem(self.field, self.field.div(self.value, b))

    def __neg__(self):
        return FieldElem(self.field, self.field.neg(self.value))

    def __pow__(self, k: int):
        return FieldElem(self.field, self.field.pow(self.value, k))

    def inv(self) -> "FieldElem":
        return FieldElem(self.field, self.field.inv(self.value))

    def __bool__(self):
        return self.value != 0

    def __str__(self):
        return self.field.format(self.value)


def char_admissible(spec: FieldSpec, d: int) -> CharFlags:
    """Report which characteristic hypotheses fail for degree ``d``."""
    if d < 2:
        raise ValueError("degree must be >= 2")
    p = spec.p
    return CharFlags(
        divides_d=d % p == 0,
        divides_dminus1=(d - 1) % p == 0,
        divides_2=p == 2,
    )
