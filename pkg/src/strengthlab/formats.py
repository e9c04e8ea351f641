"""Line-oriented text formats for instances, certificates and matrix families.

An instance file is a field header followed by blocks::

    field GF(7^1; modulus=0,1)
    name fermat3_n4
    poly 4 3
    3 0 0 0 : 1
    ...
    end
    oracle g_sym=4 source=structured

Blocks: ``tensor d n_1 .. n_d`` (lines ``i_1 .. i_d : elem``, 0-based),
``poly n d`` (lines ``e_1 .. e_n : elem``), ``collection s`` (followed by s
tensor or poly blocks), ``cert rank=r kind=tensor|poly`` (r ``term``
entries, each followed by its two factor blocks), ``matrix rows cols nvars``
(lines ``i j | e_1 .. e_nvars : elem``), ``locus k`` (k poly blocks) and
``point x_1 .. x_n``.  Blank lines and ``#`` comments are ignored.
Elements are comma-separated little-endian residue digits.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .detkernel import MatrixFamily
from .field import FieldError, FieldSpec
from .multilinear import IndexPartition, MultilinearForm, ShapeError
from .polyring import HomogeneousPoly, Poly
from .rankcalc import DecompositionCertificate

ORACLE_KEYS = ("rank", "strength", "g", "g_sym", "c", "c_prime", "codim_v", "tb", "source")


class ParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(where + msg)


@dataclass
class InstanceFile:
    field: FieldSpec
    name: str | None = None
    objects: list = dc_field(default_factory=list)  # (kind, obj); kind in tensor, poly, collection
    certificates: list = dc_field(default_factory=list)
    matrices: list = dc_field(default_factory=list)
    locus: list | None = None
    point: tuple | None = None
    oracles: dict = dc_field(default_factory=dict)

    def first(self, kind=None):
        for k, obj in self.objects:
            if kind is None or k == kind:
                return obj
        return None


# -- lexing ---------------------------------------------------------------------------


class _Lines:
    def __init__(self, text: str):
        self.items = []
        for no, raw in enumerate(text.splitlines(), 1):
            body = raw.split("#", 1)[0].rstrip()
            if body.strip():
                self.items.append((no, body))
        self.pos = 0

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else (None, None)

    def next(self, what="a line"):
        if self.pos >= len(self.items):
            last = self.items[-1][0] if self.items else None
            raise ParseError(f"unexpected end of input, expected {what}", last)
        self.pos += 1
        return self.items[self.pos - 1]


def _col(line: str, token: str, start: int = 0) -> int:
    i = line.find(token, start)
    return i + 1 if i >= 0 else 1


def _ints(tokens, line, no, what):
    out = []
    for t in tokens:
        try:
            out.append(int(t))
        except ValueError:
            raise ParseError(f"expected integer {what}, got {t!r}", no, _col(line, t)) from None
    return out


def _element(F: FieldSpec, tok: str, line: str, no: int) -> int:
    try:
        return F.parse_element(tok)
    except FieldError as exc:
        raise ParseError(str(exc), no, _col(line, tok, line.find(":"))) from None


def _split_entry(line: str, no: int):
    if ":" not in line:
        raise ParseError("expected 'indices : element'", no, len(line) + 1)
    left, right = line.split(":", 1)
    rt = right.split()
    if len(rt) != 1:
        raise ParseError("expected exactly one element after ':'", no, line.find(":") + 2)
    return left.split(), rt[0]


# -- blocks -------------------------------------------------------------------------


def _parse_tensor(F, header, no, lines: _Lines) -> MultilinearForm:
    toks = header.split()
    nums = _ints(toks[1:], header, no, "dimension")
    if not nums or nums[0] != len(nums) - 1:
        raise ParseError("tensor header must be 'tensor d n_1 .. n_d'", no, 1)
    d, shape = nums[0], tuple(nums[1:])
    if d < 1 or any(n < 1 for n in shape):
        raise ParseError("tensor dimensions must be positive", no, 1)
    entries = {}
    while True:
        lno, line = lines.next("'end' closing the tensor block")
        if line.strip() == "end":
            break
        left, el = _split_entry(line, lno)
        idx = tuple(_ints(left, line, lno, "index"))
        if len(idx) != d:
            raise ParseError(f"expected {d} indices, got {len(idx)}", lno, 1)
        for a, (i, n) in enumerate(zip(idx, shape)):
            if not 0 <= i < n:
                raise ParseError(f"index {i} out of range for factor {a} of size {n}", lno,
                                 _col(line, str(i)) if a == 0 else None)
        if idx in entries:
            raise ParseError(f"duplicate entry {idx}", lno, 1)
        entries[idx] = _element(F, el, line, lno)
    try:
        return MultilinearForm.from_entries(F, shape, entries)
    except ShapeError as exc:
        raise ParseError(str(exc), no) from None


def _parse_poly(F, header, no, lines: _Lines) -> HomogeneousPoly:
    toks = header.split()
    nums = _ints(toks[1:], header, no, "size")
    if len(nums) != 2:
        raise ParseError("poly header must be 'poly n d'", no, 1)
    n, d = nums
    if n < 1 or d < 0:
        raise ParseError("poly needs n >= 1 and d >= 0", no, 1)
    terms = {}
    while True:
        lno, line = lines.next("'end' closing the poly block")
        if line.strip() == "end":
            break
        left, el = _split_entry(line, lno)
        exp = tuple(_ints(left, line, lno, "exponent"))
        if len(exp) != n:
            raise ParseError(f"expected {n} exponents, got {len(exp)}", lno, 1)
        if any(a < 0 for a in exp):
            raise ParseError("negative exponent", lno, 1)
        if sum(exp) != d:
            raise ParseError(f"exponent sum {sum(exp)} differs from d = {d}", lno, 1)
        if exp in terms:
            raise ParseError(f"duplicate monomial {exp}", lno, 1)
        terms[exp] = _element(F, el, line, lno)
    return HomogeneousPoly(F, n, d, terms)


def _parse_object(F, lines: _Lines, allowed=("tensor", "poly")):
    no, line = lines.next("an object block")
    kw = line.split()[0]
    if kw not in allowed:
        raise ParseError(f"expected one of {', '.join(allowed)}, got {kw!r}", no, 1)
    if kw == "tensor":
        return kw, _parse_tensor(F, line, no, lines)
    return kw, _parse_poly(F, line, no, lines)


def _kv(tokens, line, no, allowed):
    out = {}
    for t in tokens:
        if "=" not in t:
            raise ParseError(f"expected key=value, got {t!r}", no, _col(line, t))
        k, v = t.split("=", 1)
        if k not in allowed:
            raise ParseError(f"unknown key {k!r}", no, _col(line, t))
        if k in out:
            raise ParseError(f"repeated key {k!r}", no, _col(line, t))
        out[k] = v
    return out


def _parse_cert(F, header, no, lines: _Lines) -> DecompositionCertificate:
    kv = _kv(header.split()[1:], header, no, ("rank", "kind"))
    if "rank" not in kv or "kind" not in kv:
        raise ParseError("cert header needs rank= and kind=", no, 1)
    kind = kv["kind"]
    if kind not in ("tensor", "poly"):
        raise ParseError(f"unknown certificate kind {kind!r}", no, _col(header, "kind="))
    rank = _ints([kv["rank"]], header, no, "rank")[0]
    terms = []
    for _ in range(rank):
        tno, tline = lines.next("a 'term' line")
        tt = tline.split()
        if tt[0] != "term":
            raise ParseError(f"expected 'term', got {tt[0]!r}", tno, 1)
        if kind == "tensor":
            tkv = _kv(tt[1:], tline, tno, ("I", "J"))
            try:
                I = tuple(int(a) for a in tkv["I"].split(","))
                J = tuple(int(a) for a in tkv["J"].split(","))
                part = IndexPartition(I, J)
            except (KeyError, ValueError) as exc:
                raise ParseError(f"bad term partition: {exc}", tno, 1) from None
            _, A = _parse_object(F, lines, ("tensor",))
            _, B = _parse_object(F, lines, ("tensor",))
            terms.append((part, A, B))
        else:
            if len(tt) != 1:
                raise ParseError("poly certificate terms take no keys", tno, _col(tline, tt[1]))
            _, g = _parse_object(F, lines, ("poly",))
            _, h = _parse_object(F, lines, ("poly",))
            terms.append((g, h))
    eno, eline = lines.next("'end' closing the certificate")
    if eline.strip() != "end":
        raise ParseError(f"certificate declares rank={rank} but has more terms", eno, 1)
    return DecompositionCertificate(kind, terms)


def _parse_matrix(F, header, no, lines: _Lines) -> MatrixFamily:
    nums = _ints(header.split()[1:], header, no, "size")
    if len(nums) != 3:
        raise ParseError("matrix header must be 'matrix rows cols nvars'", no, 1)
    m, n, nv = nums
    if m < 1 or n < 1 or nv < 0:
        raise ParseError("matrix needs rows, cols >= 1", no, 1)
    grid = [[{} for _ in range(n)] for _ in range(m)]
    while True:
        lno, line = lines.next("'end' closing the matrix block")
        if line.strip() == "end":
            break
        if "|" not in line:
            raise ParseError("expected 'i j | exponents : element'", lno, 1)
        pos, rest = line.split("|", 1)
        ij = _ints(pos.split(), line, lno, "position")
        if len(ij) != 2 or not (0 <= ij[0] < m and 0 <= ij[1] < n):
            raise ParseError(f"matrix position {ij} out of range", lno, 1)
        left, el = _split_entry(rest, lno)
        exp = tuple(_ints(left, line, lno, "exponent"))
        if len(exp) != nv or any(a < 0 for a in exp):
            raise ParseError(f"expected {nv} nonnegative exponents", lno, line.find("|") + 2)
        cell = grid[ij[0]][ij[1]]
        if exp in cell:
            raise ParseError(f"duplicate monomial in entry {tuple(ij)}", lno, 1)
        cell[exp] = _element(F, el, line, lno)
    return MatrixFamily(F, nv, [[Poly(F, nv, c) for c in row] for row in grid])


def parse_text(text: str, default_field: FieldSpec | None = None) -> InstanceFile:
    lines = _Lines(text)
    no, line = lines.peek()
    F = default_field
    if line is not None and line.split()[0] == "field":
        lines.next()
        try:
            F = FieldSpec.parse(line.split(None, 1)[1] if len(line.split()) > 1 else "")
        except FieldError as exc:
            raise ParseError(str(exc), no, 7) from None
    if F is None:
        raise ParseError("missing field header", no or 1, 1)
    inst = InstanceFile(F)
    while lines.peek()[0] is not None:
        no, line = lines.next()
        toks = line.split()
        kw = toks[0]
        if kw in ("tensor", "poly"):
            lines.pos -= 1
            inst.objects.append(_parse_object(F, lines))
        elif kw == "collection":
            s = _ints(toks[1:], line, no, "size")
            if len(s) != 1 or s[0] < 1:
                raise ParseError("collection header must be 'collection s' with s >= 1", no, 1)
            members = [_parse_object(F, lines) for _ in range(s[0])]
            kinds = {k for k, _ in members}
            if len(kinds) != 1:
                raise ParseError("collection members must all be tensors or all polys", no, 1)
            objs = [o for _, o in members]
            if len({getattr(o, "shape", None) or (o.nvars, o.d) for o in objs}) != 1:
                raise ParseError("collection members must share shape / (n, d)", no, 1)
            inst.objects.append(("collection", objs))
        elif kw == "cert":
            inst.certificates.append(_parse_cert(F, line, no, lines))
        elif kw == "matrix":
            inst.matrices.append(_parse_matrix(F, line, no, lines))
        elif kw == "locus":
            k = _ints(toks[1:], line, no, "count")
            if len(k) != 1 or k[0] < 0:
                raise ParseError("locus header must be 'locus k'", no, 1)
            inst.locus = [_parse_object(F, lines, ("poly",))[1] for _ in range(k[0])]
        elif kw == "point":
            inst.point = tuple(_element(F, t, line, no) for t in toks[1:])
        elif kw == "name":
            if len(toks) != 2:
                raise ParseError("name takes one token", no, 1)
            inst.name = toks[1]
        elif kw == "oracle":
            kv = _kv(toks[1:], line, no, ORACLE_KEYS)
            for k, v in kv.items():
                if k != "source":
                    inst.oracles[k] = _ints([v], line, no, "oracle value")[0]
            if "source" in kv:
                inst.oracles["source"] = kv["source"]
        elif kw == "field":
            raise ParseError("field header must come first and only once", no, 1)
        else:
            raise ParseError(f"unknown keyword {kw!r}", no, 1)
    return inst


def parse_instance(path, default_field: FieldSpec | None = None) -> InstanceFile:
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read(), default_field)


# -- emission ---------------------------------------------------------------------


def emit_tensor(P: MultilinearForm) -> list[str]:
    F = P.field
    out = [f"tensor {P.d} " + " ".join(map(str, P.shape))]
    for idx in zip(*np.nonzero(P.coeffs)):
        out.append(" ".join(str(int(i)) for i in idx) + " : " + F.format(int(P.coeffs[idx])))
    out.append("end")
    return out


def emit_poly(f: Poly, d: int | None = None) -> list[str]:
    F = f.field
    if d is None:
        d = getattr(f, "d", None)
        if d is None:
            d = max(f.degree, 0)
    out = [f"poly {f.nvars} {d}"]
    for exp in sorted(f.terms, reverse=True):
        out.append(" ".join(map(str, exp)) + " : " + F.format(f.terms[exp]))
    out.append("end")
    return out


def _emit_obj(kind, obj):
    return emit_tensor(obj) if kind == "tensor" else emit_poly(obj)


def emit_cert(cert: DecompositionCertificate) -> list[str]:
    out = [f"cert rank={cert.rank} kind={cert.kind}"]
    for term in cert.terms:
        if cert.kind == "tensor":
            part, A, B = term
            out.append(f"term I={','.join(map(str, part.I))} J={','.join(map(str, part.J))}")
            out += emit_tensor(A) + emit_tensor(B)
        else:
            g, h = term
            out.append("term")
            out += emit_poly(g) + emit_poly(h)
    out.append("end")
    return out


def emit_matrix(fam: MatrixFamily) -> list[str]:
    F = fam.field
    out = [f"matrix {fam.rows} {fam.cols} {fam.nvars}"]
    for i, row in enumerate(fam.entries):
        for j, c in enumerate(row):
            for exp in sorted(c.terms, reverse=True):
                out.append(f"{i} {j} | " + " ".join(map(str, exp)) + " : " + F.format(c.terms[exp]))
    out.append("end")
    return out


def emit(inst: InstanceFile) -> str:
    F = inst.field
    out = [f"field {F}"]
    if inst.name:
        out.append(f"name {inst.name}")
    for kind, obj in inst.objects:
        if kind == "collection":
            out.append(f"collection {len(obj)}")
            sub = "tensor" if isinstance(obj[0], MultilinearForm) else "poly"
            for o in obj:
                out += _emit_obj(sub, o)
        else:
            out += _emit_obj(kind, obj)
    for cert in inst.certificates:
        out += emit_cert(cert)
    for fam in inst.matrices:
        out += emit_matrix(fam)
    if inst.locus is not None:
        out.append(f"locus {len(inst.locus)}")
        for g in inst.locus:
            out += emit_poly(g)
    if inst.point is not None:
        out.append("point " + " ".join(F.format(a) for a in inst.point))
    if inst.oracles:
        keys = [k for k in ORACLE_KEYS if k in inst.oracles and k != "source"]
        parts = [f"{k}={inst.oracles[k]}" for k in keys]
        if "source" in inst.oracles:
            parts.append(f"source={inst.oracles['source']}")
        out.append("oracle " + " ".join(parts))
    return "\n".join(out) + "\n"
