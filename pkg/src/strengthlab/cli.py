"""strengthlab command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 budget exhausted, 3 an audit
row reports a violation.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import audit as au
from . import detkernel as dk
from . import formats as fm
from . import rankcalc as rc
from . import varietyscope as vs
from .field import FieldError, FieldSpec
from .multilinear import MultilinearForm, random_form
from .polyring import (
    HomogeneousPoly,
    Poly,
    fermat,
    hessian,
    random_homogeneous,
    taylor_shift_component,
    vandermonde_extract,
)

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_VIOLATION = 0, 1, 2, 3
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_field(text: str) -> FieldSpec:
    """``p[,e[,modulus digits...]]`` or a ``GF(...)`` header."""
    text = text.strip()
    if text.startswith("GF"):
        return FieldSpec.parse(text)
    parts = [int(t) for t in text.split(",")]
    if len(parts) == 1:
        return FieldSpec(parts[0])
    if len(parts) == 2:
        return FieldSpec(parts[0], parts[1])
    return FieldSpec(parts[0], parts[1], tuple(parts[2:]))


def _env_int(name):
    val = os.environ.get(name)
    if val is None or val == "":
        return None
    try:
        return int(val)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {val!r}") from None


class Config:
    """Resolved settings: flags > STRENGTHLAB_* environment > defaults."""

    def __init__(self, args):
        self.field = parse_field(args.field) if args.field else None
        self.tower = args.tower
        budget = args.budget if args.budget is not None else _env_int("STRENGTHLAB_BUDGET")
        self.search_budget = budget if budget is not None else rc.DEFAULT_SEARCH_BUDGET
        self.count_budget = budget if budget is not None else vs.DEFAULT_BUDGET
        seed = args.seed if args.seed is not None else _env_int("STRENGTHLAB_SEED")
        self.seed = seed if seed is not None else DEFAULT_SEED
        self.format = args.format


class Emitter:
    """Single sequential writer; ``kv`` lines are machine-readable."""

    def __init__(self, fmt: str, stream=None):
        self.fmt = fmt
        self.stream = stream or sys.stdout

    def human(self, text: str):
        if self.fmt == "human":
            print(text, file=self.stream)

    def kv(self, tag: str, /, **fields):
        if self.fmt == "kv":
            body = " ".join(f"{k}={_kvval(v)}" for k, v in fields.items())
            print(f"{tag} {body}".rstrip(), file=self.stream)

    def raw(self, text: str):
        print(text, file=self.stream)


def _kvval(v):
    if v is None:
        return "none"
    if isinstance(v, (list, tuple)):
        return ",".join(map(str, v))
    return str(v).replace(" ", "_")


# -- helpers ----------------------------------------------------------------------------


def _load(path, cfg: Config) -> fm.InstanceFile:
    return fm.parse_instance(path, cfg.field)


def _target(inst: fm.InstanceFile):
    for kind, obj in inst.objects:
        return kind, obj
    raise UsageError("instance has no tensor, poly or collection")


def _rank_of(kind, obj, inst, cfg):
    if kind == "tensor":
        return rc.schmidt_rank_tensor(obj, cfg.search_budget, cfg.tower, cfg.count_budget,
                                      certificates=[c for c in inst.certificates if c.kind == "tensor"])
    if kind == "poly":
        return rc.strength_poly(obj, cfg.search_budget, [c for c in inst.certificates if c.kind == "poly"],
                                cfg.tower, cfg.count_budget)
    return rc.collection_rank(obj, cfg.search_budget, tower=1)


# -- subcommands ---------------------------------------------------------------------------


def cmd_constants(args, cfg, out: Emitter):
    table = au.constants_table(args.max_d, args.max_n)
    out.human("theta_n (ordered collections of disjoint nonempty subsets, union proper):")
    for n, v in table["theta"].items():
        out.human(f"  theta_{n} = {v}")
        out.kv("theta", n=n, value=v, closed=au.theta_closed(n))
    out.human("theta^sym_n = 2^(n-1) - 1 (closed form / enumerated compositions):")
    for n, (c, e) in table["theta_sym"].items():
        out.human(f"  theta^sym_{n} = {c} / {e}")
        out.kv("theta_sym", n=n, closed=c, enumerated=e, match=int(c == e))
    out.human("C_d = max(2 + theta_{d-2}, 2^(d-2) - 1):")
    for d, v in table["C"].items():
        out.human(f"  C_{d} = {v}")
        out.kv("C", d=d, value=v)
    return EXIT_OK


def _inv_line(out, key, est):
    out.human(f"  {key}: {est}" + (f" flags={','.join(est.flags)}" if est.flags else ""))
    out.kv("invariant", name=key, codim=est.codim, dim=est.dim, ambient=est.ambient, method=est.method,
           flags=",".join(est.flags) or "none")


def cmd_invariants(args, cfg, out):
    inst = _load(args.instance, cfg)
    kind, obj = _target(inst)
    t, b = cfg.tower, cfg.count_budget
    out.human(f"invariants of {inst.name or kind} over {inst.field}")
    if kind == "tensor":
        _inv_line(out, "g", vs.g_invariant(obj, t, b))
    elif kind == "poly":
        _inv_line(out, "g_sym", vs.g_sym_invariant(obj, t, b))
        _inv_line(out, "c", vs.c_invariant(obj, t, b))
        _inv_line(out, "c_prime", vs.c_prime_invariant([obj], t, b))
        _inv_line(out, "tb", vs.tb_rank([obj.partial(i) for i in range(obj.nvars)], t, b))
    else:
        if isinstance(obj[0], MultilinearForm):
            _inv_line(out, "g", vs.g_collection_invariant(obj, t, b))
        else:
            _inv_line(out, "g_sym", vs.g_sym_collection_invariant(obj, t, b))
            _inv_line(out, "c_prime", vs.c_prime_invariant(obj, t, b))
            _inv_line(out, "codim_v", vs.complete_intersection_codim(obj, t, b))
            _inv_line(out, "tb", vs.tb_rank(obj, t, b))
    return EXIT_OK


def cmd_rank(args, cfg, out):
    inst = _load(args.instance, cfg)
    kind, obj = _target(inst)
    res = _rank_of(kind, obj, inst, cfg)
    out.human(f"rank of {inst.name or kind}: {res.describe()}")
    for note in res.notes:
        out.human(f"  note: {note}")
    out.kv("rank", lower=res.lower, upper=res.upper, exact=int(res.exact), lower_source=res.lower_source,
           estimated_lower=res.estimated_lower, budget_exhausted=int(res.budget_exhausted))
    if res.certificate is not None:
        text = "\n".join(fm.emit_cert(res.certificate))
        if args.cert_out:
            Path(args.cert_out).write_text(f"field {inst.field}\n" + text + "\n", encoding="utf-8")
        else:
            out.raw(text)
    return EXIT_BUDGET if res.budget_exhausted else EXIT_OK


def cmd_counts(args, cfg, out):
    inst = _load(args.instance, cfg)
    kind, obj = _target(inst)
    t, b = cfg.tower, cfg.count_budget
    which = args.which
    if kind == "tensor":
        prof = vs.count_ZP(obj, t, b)
    elif kind == "poly":
        prof = {"Zsym": lambda: vs.count_Zsym(obj, t, b), "sing": lambda: vs.count_sing(obj, t, b),
                "V": lambda: vs.count_hypersurfaces([obj], t, b),
                "tb": lambda: vs.count_tb([obj.partial(i) for i in range(obj.nvars)], t, b)}.get(
            which or "Zsym", lambda: None)()
        if prof is None:
            raise UsageError(f"--which {which} does not apply to a polynomial")
    else:
        w = which or ("ZP" if isinstance(obj[0], MultilinearForm) else "Zsym")
        if w == "V":
            prof = vs.count_hypersurfaces(obj, t, b)
        else:
            prof = vs.count_collection(obj, w, t, b)[0]
    est = vs.estimate_dimension(prof)
    out.human(f"counts for {prof.tag} (ambient dim {prof.ambient}):")
    for lv in prof.levels:
        out.human(f"  e={lv.e} q={lv.q} N={lv.N} evaluations={lv.evaluations} histogram={dict(sorted(lv.histogram.items()))}")
        hist = ",".join(f"{k}:{v}" for k, v in sorted(lv.histogram.items()))
        out.kv("level", e=lv.e, q=lv.q, N=lv.N, evaluations=lv.evaluations, histogram=hist or "none")
    out.human(f"  estimate: {est}")
    out.kv("summary", name=prof.tag, ambient=prof.ambient, levels=len(prof.levels), dim=est.dim, codim=est.codim,
           slope=None if est.slope is None else f"{est.slope:.4f}", flags=",".join(est.flags) or "none")
    return EXIT_OK


def oracle_rows(inst: fm.InstanceFile, cfg: Config, rank_result=None):
    """Rows comparing declared oracle values with exact computed ones."""
    rows = []
    kind, obj = _target(inst)
    t, b = cfg.tower, cfg.count_budget
    getters = {
        "rank": lambda: rank_result,
        "strength": lambda: rank_result,
        "g": lambda: vs.g_invariant(obj, t, b) if kind == "tensor" else None,
        "g_sym": lambda: vs.g_sym_invariant(obj, t, b) if kind == "poly" else None,
        "c": lambda: vs.c_invariant(obj, t, b) if kind == "poly" else None,
        "c_prime": lambda: vs.c_prime_invariant(obj if kind == "collection" else [obj], t, b) if kind != "tensor" else None,
        "codim_v": lambda: vs.complete_intersection_codim(obj if kind == "collection" else [obj], t, b)
        if kind != "tensor" else None,
        "tb": lambda: vs.tb_rank(obj if kind == "collection" else [obj.partial(i) for i in range(obj.nvars)], t, b)
        if kind != "tensor" else None,
    }
    for key, want in inst.oracles.items():
        if key == "source":
            continue
        val = getters[key]()
        rid = f"oracle:{key}"
        declared = au.Operand(want, "exact")
        if val is None:
            rows.append(au.skipped(rid, au.SKIP_INEXACT, "oracle key does not apply"))
        elif isinstance(val, rc.RankResult):
            got = au.Operand(val.upper, "certificate" if val.exact else "estimate")
            if val.exact:
                st = au.HOLDS if val.upper == want else au.VIOLATED
            else:
                st = au.HOLDS_EST if val.lower <= want <= val.upper else au.VIOLATED
            rows.append(au.AuditRow(rid, got, declared, st, "" if val.exact else "declared value inside bounds"))
        else:
            got = au._inv(val)
            if got.value == want:
                st = au.HOLDS if got.exact else au.HOLDS_EST
            else:
                st = au.VIOLATED if got.exact else au.SKIP_INEXACT
            rows.append(au.AuditRow(rid, got, declared, st))
    return rows


def audit_instance(inst: fm.InstanceFile, cfg: Config, k: int = 16) -> au.AuditReport:
    kind, obj = _target(inst)
    t, b, sb = cfg.tower, cfg.count_budget, cfg.search_budget
    name = inst.name
    if kind == "tensor":
        rr = rc.schmidt_rank_tensor(obj, sb, t, b, certificates=[c for c in inst.certificates if c.kind == "tensor"])
        rep = au.audit_tensor(obj, rr, tower=t, budget=b, search_budget=sb, name=name)
    elif kind == "poly":
        rr = rc.strength_poly(obj, sb, [c for c in inst.certificates if c.kind == "poly"], t, b)
        rep = au.audit_poly(obj, rr, tower=t, budget=b, search_budget=sb, name=name)
        if obj.degree >= 3:
            rep.extend(au.audit_derivative(obj, k=k, seed=cfg.seed, strength_result=rr, tower=t, budget=b,
                                           search_budget=sb))
    else:
        rr = rc.collection_rank(obj, sb, tower=1)
        rep = au.audit_collection(obj, rr, tower=t, budget=b, search_budget=sb, name=name)
    rep.rows.extend(oracle_rows(inst, cfg, rr))
    if rr.budget_exhausted:
        rep.info["budget"] = "search budget exhausted; rank operands are bounds"
    return rep


def _emit_report(rep: au.AuditReport, out: Emitter):
    if out.fmt == "kv":
        out.raw(rep.kv())
    else:
        out.raw(rep.human())


def cmd_audit(args, cfg, out):
    inst = _load(args.instance, cfg)
    rep = audit_instance(inst, cfg, args.directions)
    _emit_report(rep, out)
    return EXIT_VIOLATION if rep.violated else EXIT_OK


def _random_phis_alpha(fam, r, rng):
    F = fam.field
    phis = [rng.integers(0, F.q, size=fam.rows) for _ in range(r)]
    vecs = [rng.integers(0, F.q, size=fam.cols) for _ in range(r + 1)]
    alpha = dk.ExteriorElement.wedge_of(F, fam.nvars, vecs, dim=fam.cols)
    return phis, alpha


def cmd_kappa(args, cfg, out):
    inst = _load(args.instance, cfg)
    if not inst.matrices:
        raise UsageError("instance has no matrix family")
    fam = inst.matrices[0]
    r = args.r
    if r is None:
        pts = dk.locus_points(fam.field, fam.nvars, inst.locus)
        if pts is None:
            raise UsageError("base too large to scan; pass --r")
        r, _ = fam.max_rank_on(pts)
    if r + 1 > fam.cols:
        raise UsageError(f"need r + 1 <= cols, got r={r}")
    rng = np.random.default_rng(cfg.seed)
    phis, alpha = _random_phis_alpha(fam, r, rng)
    res = dk.kappa(fam, r, phis, alpha, inst.locus)
    out.human(f"kappa_{r}: minors of size {r + 1} vanish: {res.precondition.vanish}")
    for i, c in enumerate(res.vector):
        out.human(f"  v[{i}] = {c.to_str()}")
    out.human(f"  fam * v == 0 {'on the locus' if inst.locus else 'identically'}: {res.in_kernel}")
    out.kv("kappa", r=r, minors_vanish=int(res.precondition.vanish), in_kernel=int(res.in_kernel),
           nonzero=int(any(not c.is_zero() for c in res.vector)))
    return EXIT_OK


def cmd_kernel_sections(args, cfg, out):
    inst = _load(args.instance, cfg)
    if not inst.matrices:
        raise UsageError("instance has no matrix family")
    fam = inst.matrices[0]
    x0 = inst.point
    if x0 is None:
        x0, _ = dk.generic_point(fam, inst.locus)
    ks = dk.kernel_sections(fam, x0, inst.locus)
    at = ks.at(x0)
    out.human(f"kernel sections at x0={tuple(x0)}: rank {ks.rank}, {len(ks.sections)} sections")
    for j, s in enumerate(ks.sections):
        out.human(f"  s_{j} = ({', '.join(c.to_str() for c in s)}) ; s_{j}(x0) = {at[j].tolist()}")
    out.kv("kernel_sections", x0=list(x0), rank=ks.rank, sections=len(ks.sections),
           minors_vanish=int(ks.minors.vanish), annihilated=int(all(ks.annihilated)))
    return EXIT_OK


def cmd_derive(args, cfg, out):
    inst = _load(args.instance, cfg)
    f = inst.first("poly")
    if f is None:
        raise UsageError("derive needs a poly instance")
    F = f.field
    v0 = inst.point or tuple([0] * f.nvars)
    out.human(f"f = {f.to_str()}")
    for k in range(f.degree + 1):
        comp = taylor_shift_component(f, v0, k)
        out.human(f"  f^({k})_v0 at v0={tuple(v0)}: {comp.to_str()}")
        out.kv("taylor", order=k, terms=len(comp.terms))
    H = hessian(f)
    out.human("  Hessian (f^(1,1,d-2) convention):")
    for row in H:
        out.human("    [" + ", ".join(h.to_str() for h in row) + "]")
    out.kv("hessian", size=len(H), nonzero=sum(1 for row in H for h in row if not h.is_zero()))
    d = f.degree
    if d >= 2:
        try:
            lambdas = list(range(d + 1))
            res = vandermonde_extract(f, lambdas)
            out.human(f"  Vandermonde lambdas={lambdas}: f^(2,d-2) has {len(res.component.terms)} terms")
            out.kv("vandermonde", lambdas=lambdas, terms=len(res.component.terms), ok=1)
        except FieldError as exc:
            out.human(f"  Vandermonde extraction unavailable: {exc}")
            out.kv("vandermonde", ok=0, reason=str(exc))
    return EXIT_OK


# -- corpus ----------------------------------------------------------------------------------


def builtin_instances():
    """The fixed regression instances."""
    F5, F7 = FieldSpec(5), FieldSpec(7)
    out = []
    for r in (1, 2, 3):
        inst = fm.InstanceFile(F5, name=f"diag_r{r}", objects=[("tensor", MultilinearForm.diagonal(F5, (r, r, r), r))],
                               oracles={"g": r, "rank": r})
        out.append(inst)
    for n in (2, 3, 4):
        inst = fm.InstanceFile(F7, name=f"fermat3_n{n}", objects=[("poly", fermat(F7, n, 3))],
                               oracles={"g_sym": n, "c": n, "strength": -(-n // 2)})
        out.append(inst)
    out.append(fm.InstanceFile(F7, name="q1q2", objects=[("poly", q1q2(F7))], oracles={"strength": 1}))
    x = [Poly.variable(F7, 3, i) for i in range(3)]
    out.append(fm.InstanceFile(F7, name="cubes_pair", objects=[
        ("collection", [HomogeneousPoly.from_poly(x[0] ** 3), HomogeneousPoly.from_poly(x[1] ** 3)])]))
    return out


def q1q2(F: FieldSpec) -> HomogeneousPoly:
    """(x1^2 + x2^2)(y1^2 + y2^2) in variables (x1, x2, y1, y2)."""
    v = [Poly.variable(F, 4, i) for i in range(4)]
    return HomogeneousPoly.from_poly((v[0] ** 2 + v[1] ** 2) * (v[2] ** 2 + v[3] ** 2))


def random_instance(i: int, seed: int) -> fm.InstanceFile:
    """Seeded small instance; the kind cycles tensor, cubic, collection."""
    rng = np.random.default_rng([seed, i])
    F = FieldSpec(int(rng.choice([3, 5])))
    kind = i % 3
    if kind == 0:
        shape = tuple(int(a) for a in rng.integers(1, 4, size=3))
        P = random_form(F, shape, rng, density=float(rng.choice([0.3, 0.6, 1.0])))
        return fm.InstanceFile(F, name=f"random_tensor_{i}", objects=[("tensor", P)])
    if kind == 1:
        F = FieldSpec(int(rng.choice([5, 7])))
        n = int(rng.integers(2, 4))
        f = random_homogeneous(F, n, 3, rng, density=float(rng.choice([0.3, 0.6])))
        return fm.InstanceFile(F, name=f"random_cubic_{i}", objects=[("poly", f)])
    n = int(rng.integers(2, 4))
    s = int(rng.integers(1, 3))
    fs = [random_homogeneous(F, n, 3, rng, density=0.5) for _ in range(s)]
    return fm.InstanceFile(F, name=f"random_collection_{i}", objects=[("collection", fs)])


def run_corpus(cfg: Config, n_random: int = 200, directory=None, out: Emitter | None = None, k_random: int = 4):
    """Audit every corpus instance; returns (reports, violated count)."""
    insts = [(inst, 16) for inst in builtin_instances()]
    if directory is not None:
        for path in sorted(Path(directory).glob("*.inst")) + sorted(Path(directory).glob("*.tensor")):
            inst = fm.parse_instance(path)
            if inst.objects:  # matrix-only files have nothing to audit
                insts.append((inst, 16))
    insts += [(random_instance(i, cfg.seed), k_random) for i in range(n_random)]
    reports = []
    violated = 0
    for inst, k in insts:
        rep = audit_instance(inst, cfg, k)
        reports.append(rep)
        violated += len(rep.violated)
        if out is not None:
            c = rep.counts()
            out.human(f"{rep.instance}: " + ", ".join(f"{k}={v}" for k, v in sorted(c.items())))
            out.kv("instance", name=rep.instance, rows=len(rep.rows), violated=c.get(au.VIOLATED, 0))
            for row in rep.violated:
                out.raw(row.kv())
    return reports, violated


def cmd_corpus(args, cfg, out):
    t0 = time.perf_counter()
    reports, violated = run_corpus(cfg, args.random, args.dir, out)
    rows = sum(len(r.rows) for r in reports)
    out.human(f"corpus: {len(reports)} instances, {rows} rows, {violated} violated, {time.perf_counter() - t0:.1f}s")
    out.kv("corpus", instances=len(reports), rows=rows, violated=violated)
    return EXIT_VIOLATION if violated else EXIT_OK


# -- entry point ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--field", help="p[,e[,modulus digits]] for files without a field header")
    common.add_argument("--tower", type=int, default=2, help="number of tower levels for point counts")
    common.add_argument("--budget", type=int, default=None, help="search candidates / count evaluations")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--format", choices=("human", "kv"), default="human")

    parser = _Parser(prog="strengthlab", description="Schmidt rank, strength and codimension invariants.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("constants", parents=[common])
    p.add_argument("--max-d", type=int, default=5)
    p.add_argument("--max-n", type=int, default=8)
    p.set_defaults(func=cmd_constants)

    for name, func in (("invariants", cmd_invariants), ("derive", cmd_derive),
                       ("kernel-sections", cmd_kernel_sections)):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("instance")
        p.set_defaults(func=func)

    p = sub.add_parser("rank", parents=[common])
    p.add_argument("instance")
    p.add_argument("--cert-out", default=None)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("counts", parents=[common])
    p.add_argument("instance")
    p.add_argument("--which", choices=("ZP", "Zsym", "sing", "V", "S", "S+f", "tb"), default=None)
    p.set_defaults(func=cmd_counts)

    p = sub.add_parser("audit", parents=[common])
    p.add_argument("instance")
    p.add_argument("--directions", type=int, default=16)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("kappa", parents=[common])
    p.add_argument("instance")
    p.add_argument("--r", type=int, default=None)
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("corpus", parents=[common])
    p.add_argument("--random", type=int, default=200)
    p.add_argument("--dir", default=None, help="extra instance files (*.inst, *.tensor)")
    p.set_defaults(func=cmd_corpus)
    return parser


def run_command(argv, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = Config(args)
        out = Emitter(cfg.format, stdout)
        return args.func(args, cfg, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except (fm.ParseError, FieldError, OSError, dk.ExteriorError, dk.GenericPointError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except vs.BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=stderr)
        return EXIT_BUDGET


def main(argv=None) -> int:
    code = run_command(sys.argv[1:] if argv is None else argv)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
