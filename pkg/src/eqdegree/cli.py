"""Command line: ``eqdegree analyze|degree|realize|verify --config PATH``.

Exit codes: 0 ok, 1 other engine error, 2 invalid input, 3 degenerate zero,
4 hypothesis violated under --strict, 5 property failure.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import build_domains, build_maps, load_config
from .degree import HYPOTHESIS_WARNING, DegreeVector, equivariant_degree
from .domain import stratify
from .errors import (
    DegenerateZero,
    EqDegreeError,
    NotAnOtopy,
    Overlap,
    ValidationError,
)
from .maps import ScalingOtopy, check_equivariance, check_locality
from .otopy import check_slices, straight_line_otopy, verify_additivity, verify_otopy_invariance
from .realize import dump_atoms, linearize, realize
from .report import Report, fmt_num, fmt_point

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_DEGENERATE = 3
EXIT_HYPOTHESIS = 4
EXIT_PROPERTY = 5


class _Exit(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _setup(args):
    cfg = load_config(args.config)
    overrides = {}
    if args.delta is not None:
        if args.delta <= 0:
            raise ValidationError("--delta must be positive")
        overrides["delta"] = args.delta
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg.options = cfg.options.with_(**overrides)
    built = build_domains(cfg)
    return cfg, built


def _stratify(cfg, built, rep, stable=False):
    strat = stratify(built.omega, stable=stable, options=cfg.options)
    for e in strat.table:
        for w in strat.chart(e.id).warnings:
            rep.warn(f"stratum {e.id}: {w}")
    return strat


def _hypothesis(args, strat, rep):
    hyp = strat.hypothesis
    rep.section("hypothesis", [hyp.describe()])
    rep.data["hypothesis"] = {"holds": hyp.holds, "zero_in_domain": hyp.zero_in_domain, "fixed_dim": hyp.fixed_dim}
    if not hyp.holds:
        if args.strict:
            rep.status = "hypothesis violated"
            raise _Exit(EXIT_HYPOTHESIS, "hypothesis violated (--strict)")
        rep.warn(HYPOTHESIS_WARNING)


def _validate(f, cfg, rep, label="map"):
    eq = check_equivariance(f, samples=64, seed=cfg.options.seed, tol=cfg.options.tol_equiv)
    loc = check_locality(f, cfg.options.margin, cfg.options.eta_loc)
    lines = [
        f"{label}: {f.describe()}",
        f"equivariance: {'pass' if eq.passed else 'FAIL'} (max defect {fmt_num(eq.max_defect)}, "
        f"{'exact' if eq.exact else 'float'}, {eq.samples} samples)",
        f"locality: {'pass' if loc.passed else 'FAIL'} (min |f| on margin shell {fmt_num(loc.min_norm)}, "
        f"{loc.samples} samples)",
    ]
    for x, g, d in eq.failures[:3]:
        lines.append(f"  equivariance witness x={fmt_point(x)} generator={g} defect={fmt_num(d)}")
    for x, v in loc.offending[:3]:
        lines.append(f"  locality witness x={fmt_point(x)} |f|={fmt_num(v)}")
    rep.section(f"validation ({label})", lines)
    rep.data.setdefault("validation", {})[label] = {"equivariance": eq.passed, "locality": loc.passed}
    if not eq.passed or not loc.passed:
        rep.status = "invalid map"
        raise _Exit(EXIT_INVALID, f"{label} failed validation")


def _degree_lines(result):
    lines = []
    for sid, s in sorted(result.strata.items()):
        lines.append(f"stratum H={sid}: raw sign sums {dict(sorted(s.raw.items()))}")
        orbits = {}
        for z in s.zeros:
            orbits.setdefault((z.component, z.orbit), []).append(z)
        for (a, o), zs in sorted(orbits.items()):
            z = zs[0]
            lines.append(
                f"  alpha={a} orbit={o} size={len(zs)} sign={z.sign:+d} rep={fmt_point(z.point)} "
                f"|det|={fmt_num(z.margin)}"
            )
    return lines


def cmd_analyze(args, rep):
    cfg, built = _setup(args)
    G = built.group
    strat = _stratify(cfg, built, rep, stable=True)
    rep.section("group", [f"order {G.order}", f"dimension {G.dim}", f"arithmetic {'exact' if G.is_exact else 'float'}"])
    types = []
    lines = []
    for e in strat.table:
        chart = strat.chart(e.id)
        lines.append(
            f"H={e.id} |H|={e.H.order} members={list(e.H.members)} dim_VH={e.dim} "
            f"|WH|={e.weyl.order} conjugates={len(e.conjugates)} n={chart.n_quot}"
        )
        types.append({
            "id": e.id, "order": e.H.order, "members": list(e.H.members), "dim": e.dim,
            "weyl_order": e.weyl.order, "conjugates": len(e.conjugates), "components": chart.n_quot,
            "history": [[fmt_num(d), c] for d, c in strat.history.get(e.id, [])],
        })
    rep.section("orbit types", lines)
    rel = [f"(H{i}) <= (H{j})" for i, j in strat.table.order_relation if i != j]
    rep.section("partial order", rel or ["(no strict relations)"])
    hist = []
    for e in strat.table:
        steps = ", ".join(f"delta={fmt_num(d)}:n={c}" for d, c in strat.history.get(e.id, []))
        hist.append(f"H={e.id}: {steps}")
    rep.section("refinement", hist)
    rep.data.update({"group_order": G.order, "exact": G.is_exact, "orbit_types": types})
    _hypothesis(args, strat, rep)


def cmd_degree(args, rep):
    cfg, built = _setup(args)
    strat = _stratify(cfg, built, rep)
    build_maps(cfg, built, strat.table)
    if built.f is None:
        raise ValidationError("[map] section required for degree")
    _validate(built.f, cfg, rep)
    _hypothesis(args, strat, rep)
    result = equivariant_degree(built.f, strat, cfg.options)
    for w in result.warnings:
        rep.warn(w)
    rep.section("zeros", _degree_lines(result))
    rep.data["zeros"] = [
        {"H": z.orbit_type, "alpha": z.component, "orbit": z.orbit, "sign": z.sign,
         "point": [fmt_num(v) for v in z.point]}
        for z in result.zeros
    ]
    rep.vector = result.vector


def cmd_realize(args, rep):
    cfg, built = _setup(args)
    strat = _stratify(cfg, built, rep)
    target = DegreeVector({**{k: 0 for k in strat.keys()}, **cfg.target})
    _hypothesis(args, strat, rep)
    f, atoms = realize(target, strat, options=cfg.options)
    rep.section("atoms", [
        f"H={a.orbit_type} sign={a.sign:+d} center={fmt_point(a.center)} radius={fmt_num(a.radius)}"
        for a in atoms
    ] or ["(empty map)"])
    serial = dump_atoms(atoms)
    rep.section("serialized", [serial])
    rep.data["atoms"] = serial
    back = equivariant_degree(f, strat, cfg.options).vector
    ok = back == target
    rep.section("round trip", [f"target   {target!r}", f"realized {back!r}", "match" if ok else "MISMATCH"])
    rep.vector = back
    if not ok:
        rep.status = "round trip failed"
        raise _Exit(EXIT_PROPERTY, "round trip failed")


def _invariance_lines(report):
    return [
        f"t={fmt_num(t)} {'inconclusive' if v is None else repr(v)} [{status}]"
        for t, v, status in report.rows
    ]


def cmd_verify(args, rep):
    cfg, built = _setup(args)
    strat = _stratify(cfg, built, rep)
    build_maps(cfg, built, strat.table)
    opts = cfg.options
    failures = []
    if cfg.otopy_kind == "expression":
        h = built.otopy
        try:
            check_slices(h, opts.margin, options=opts)
        except NotAnOtopy as exc:
            rep.section("otopy", [f"NotAnOtopy: {exc}", f"witness t={fmt_num(exc.t)} x={fmt_point(exc.point)}"])
            failures.append("otopy")
            h = None
        if h is not None:
            inv = verify_otopy_invariance(h, strat, opts.t_samples, opts)
            rep.section("otopy invariance", _invariance_lines(inv) + [f"result: {'pass' if inv.passed else 'FAIL'}"])
            if not inv.passed:
                failures.append("otopy invariance")
            rep.vector = inv.vectors[0] if inv.vectors else None
    elif built.g is not None and built.domain2 is not None:
        if built.f is None:
            raise ValidationError("[map] section required for verify")
        _validate(built.f, cfg, rep, "map")
        _validate(built.g, cfg, rep, "map2")
        try:
            add = verify_additivity(built.f, built.g, strat, opts)
        except Overlap as exc:
            rep.section("additivity", [f"Overlap: {exc}"])
            failures.append("additivity")
        else:
            rep.section("additivity", [
                f"deg f     {add.first!r}", f"deg g     {add.second!r}", f"deg f u g {add.union!r}",
                f"result: {'pass' if add.passed else 'FAIL'}",
            ])
            rep.vector = add.union
            if not add.passed:
                failures.append("additivity")
    elif built.g is not None:
        _validate(built.f, cfg, rep, "map")
        try:
            h = straight_line_otopy(built.f, built.g, opts.margin, options=opts)
        except NotAnOtopy as exc:
            rep.section("otopy", [f"NotAnOtopy: {exc}", f"witness t={fmt_num(exc.t)} x={fmt_point(exc.point)}"])
            failures.append("otopy")
        else:
            inv = verify_otopy_invariance(h, strat, opts.t_samples, opts)
            rep.section("otopy invariance", _invariance_lines(inv) + [f"result: {'pass' if inv.passed else 'FAIL'}"])
            rep.vector = inv.vectors[0] if inv.vectors else None
            if not inv.passed:
                failures.append("otopy invariance")
    else:
        if built.f is None:
            raise ValidationError("verify needs [map], [map2] or [otopy]")
        _validate(built.f, cfg, rep)
        inv = verify_otopy_invariance(ScalingOtopy(built.f), strat, opts.t_samples, opts)
        rep.section("scaling otopy", _invariance_lines(inv) + [f"result: {'pass' if inv.passed else 'FAIL'}"])
        if not inv.passed:
            failures.append("scaling otopy")
        rep.vector = inv.vectors[0] if inv.vectors else None
        if cfg.otopy_kind != "scaling":
            result = equivariant_degree(built.f, strat, opts)
            lines = []
            for z in result.zeros:
                atom, h = linearize(built.f, z, strat, opts)
                lin = verify_otopy_invariance(h, strat, opts.t_samples, opts)
                lines.append(
                    f"zero {fmt_point(z.point)} H={z.orbit_type} radius={fmt_num(atom.radius)} "
                    f"{'pass' if lin.passed else 'FAIL'}"
                )
                if not lin.passed:
                    failures.append("linearization")
            rep.section("linearization otopies", lines or ["(no zeros)"])
    rep.data["failures"] = failures
    if failures:
        rep.status = "property failure: " + ", ".join(failures)
        raise _Exit(EXIT_PROPERTY, rep.status)


COMMANDS = {"analyze": cmd_analyze, "degree": cmd_degree, "realize": cmd_realize, "verify": cmd_verify}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eqdegree", description="Equivariant degree of local maps under finite groups.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--strict", action="store_true", help="fail (exit 4) when the classification hypothesis is violated")
    p.add_argument("--delta", type=float, default=None, help="chart cell size override")
    p.add_argument("--seed", type=int, default=None, help="sampling seed override")
    p.add_argument("--json", action="store_true", help="machine-readable JSON report")
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = make_parser().parse_args(argv)
    rep = Report(args.command)
    code = EXIT_OK
    try:
        COMMANDS[args.command](args, rep)
    except _Exit as exc:
        code = exc.code
    except ValidationError as exc:
        rep.status = f"invalid input: {exc}"
        code = EXIT_INVALID
    except DegenerateZero as exc:
        rep.status = f"degenerate zero: {exc}"
        code = EXIT_DEGENERATE
    except EqDegreeError as exc:
        rep.status = f"{type(exc).__name__}: {exc}"
        code = EXIT_ERROR
    out.write(rep.to_json() if args.json else rep.to_text())
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
