"""Command-line workbench: ``graphrd --config cfg.yaml <command> ...``.

Every command writes a JSON or CSV artifact to the output directory and a
short summary to stdout. Exit codes: 0 success, 1 a verification failed,
2 bad input (config, element syntax, window).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

from . import config as cfgmod
from .enumeration import (WindowError, ball, factorisations, factorisations_clique, left_divisors,
                          p2_decompose, right_divisors, verify_p1, verify_p2)
from .normal_form import NormalFormError, format_element, parse_element
from .rd_verifier import clique_rd_constants, rd_scan, vanishing_check

log = logging.getLogger("graphrd")


class _Emitter:
    def __init__(self, out_dir: Path, fmt: str):
        self.out_dir = out_dir
        self.fmt = fmt

    def write(self, name: str, records: list, payload: dict | None = None) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if self.fmt == "json":
            path = self.out_dir / f"{name}.json"
            body = payload if payload is not None else {"rows": records}
            path.write_text(json.dumps(body, indent=1, default=str) + "\n", encoding="utf-8")
        else:
            path = self.out_dir / f"{name}.csv"
            path.write_text(_records_csv(records), encoding="utf-8")
        return path

    def write_text(self, filename: str, text: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / filename
        path.write_text(text, encoding="utf-8")
        return path


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (list, tuple, set, frozenset)):
        return " ".join(str(x) for x in v)
    return str(v)


def _records_csv(records: list) -> str:
    buf = io.StringIO()
    if not records:
        return ""
    cols = list(records[0])
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([_cell(r.get(c, "")) for c in cols])
    return buf.getvalue()


def _elem(g) -> dict:
    return {"element": format_element(g), "lambda": g.lam, "ell": g.ell}


def _parse_clique(graph, text: str) -> frozenset:
    try:
        J = frozenset(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise NormalFormError(f"bad clique {text!r}; expected vertex ids like '0,1'") from None
    if not graph.is_clique(J):
        raise WindowError(f"{sorted(J)} is not a clique of the graph")
    return J


# -- commands -----------------------------------------------------------------

def cmd_normal_form(args, cfg, emit):
    g = parse_element(cfg.graph, args.expr)
    rec = _elem(g)
    emit.write("normal_form", [rec], rec)
    print(f"{format_element(g) or '(identity)'}  lambda={g.lam} ell={g.ell}")
    return 0


def cmd_sphere(args, cfg, emit):
    b = ball(cfg.graph, cfg.window)
    elems = b.sorted_sphere(args.k)
    recs = [_elem(g) for g in elems]
    emit.write(f"sphere_{args.k}", recs, {"k": args.k, "size": len(elems), "elements": recs})
    cap = cfg.window.ell_cap(cfg.graph)
    print(f"sphere {args.k}: {len(elems)} elements (window lambda<={cfg.window.lambda_max}"
          f"{'' if cap is None else f', ell<={cap}'})")
    return 0


def cmd_divisors(args, cfg, emit):
    g = parse_element(cfg.graph, args.expr)
    if not 0 <= args.k <= g.lam:
        raise WindowError(f"divisor length k = {args.k} not in [0, lambda(g) = {g.lam}]")
    divs = right_divisors(g, args.k) if args.right else left_divisors(g, args.k)
    side = "right" if args.right else "left"
    recs = [dict(_elem(d), side=side) for d in divs]
    emit.write("divisors", recs, {"g": format_element(g), "k": args.k, "side": side,
                                  "divisors": recs})
    print(f"{len(divs)} {side} divisors of length {args.k}")
    for d in divs:
        print(f"  {format_element(d) or '(identity)'}")
    return 0


def cmd_factor(args, cfg, emit):
    g = parse_element(cfg.graph, args.expr)
    if args.clique is None:
        if g.lam != args.k + args.l:
            raise WindowError(f"lambda(g) = {g.lam} but k + l = {args.k + args.l}")
        pairs = factorisations(g, args.k, args.l)
        recs = [{"g1": format_element(a), "s": "", "g2": format_element(b)} for a, b in pairs]
    else:
        J = _parse_clique(cfg.graph, args.clique)
        if g.lam != args.k + args.l + len(J):
            raise WindowError(f"lambda(g) = {g.lam} but k + l + |J| = {args.k + args.l + len(J)}")
        fs = factorisations_clique(g, args.k, args.l, J)
        recs = [{"g1": format_element(f.g1), "s": format_element(f.s), "g2": format_element(f.g2)}
                for f in fs]
    emit.write("factor", recs, {"g": format_element(g), "k": args.k, "l": args.l,
                                "clique": args.clique, "count": len(recs), "factorisations": recs})
    print(f"{len(recs)} factorisations")
    return 0


def cmd_p2(args, cfg, emit):
    h1 = parse_element(cfg.graph, args.expr1)
    h2 = parse_element(cfg.graph, args.expr2)
    d = p2_decompose(h1, h2)
    rec = {"g1": format_element(d.g1), "s1": format_element(d.s1), "w": format_element(d.w),
           "s2": format_element(d.s2), "g2": format_element(d.g2), "J": sorted(d.J), "q": d.q}
    emit.write("p2", [rec], rec)
    print(f"q={d.q} J={sorted(d.J)} lambda(w)={d.w.lam}")
    for key in ("g1", "s1", "w", "s2", "g2"):
        print(f"  {key}: {rec[key] or '(identity)'}")
    return 0


def cmd_verify_lemma1(args, cfg, emit):
    rep = verify_p1(cfg.graph, cfg.window, cfg.rd.k_max, cfg.rd.l_max)
    emit.write("verify_lemma1", rep["rows"], rep)
    bad = [r for r in rep["rows"] if not r["ok"]]
    print(f"factorisation bound: {len(rep['rows'])} (J, k, l) cases, {len(bad)} failures; "
          f"unconstrained-syllable injectivity: {'ok' if rep['injective'] else 'FAILED'}")
    return 0 if rep["ok"] else 1


def cmd_verify_lemma2(args, cfg, emit):
    rep = verify_p2(cfg.graph, cfg.window, min(cfg.rd.k_max, cfg.rd.l_max))
    emit.write("verify_lemma2", rep["failures"], rep)
    print(f"decomposition: {rep['pairs']} pairs, {len(rep['failures'])} failures")
    return 0 if rep["ok"] else 1


def cmd_vanishing(args, cfg, emit):
    rep = vanishing_check(cfg.graph, cfg.window, cfg.rd.trials, cfg.rd.k_max, cfg.rd.l_max,
                          args.seed)
    emit.write("vanishing", rep["rows"], rep)
    bad = [r for r in rep["rows"] if not r["ok"]]
    print(f"vanishing: {len(rep['rows'])} (mode, k, l) cases, {len(bad)} failures")
    return 0 if rep["ok"] else 1


def cmd_rd_scan(args, cfg, emit):
    rd = cfg.rd
    rep = rd_scan(cfg.graph, cfg.window, rd.k_max, rd.l_max, rd.budget, args.seed,
                  max_iter=rd.max_iter, tol=rd.tol, threads=args.threads)
    if emit.fmt == "json":
        emit.write_text("rd_scan.json", rep.to_json() + "\n")
    else:
        emit.write_text("rd_scan.csv", rep.to_csv())
        emit.write_text("rd_fits.csv", rep.fits_csv())
    viol = rep.violations
    print(f"rd-scan: {len(rep.rows)} rows, {len(viol)} violations")
    for key, f in sorted(rep.fits.items()):
        print(f"  family {key}: slope={f['slope']:.4f} rms={f['residual_rms']:.3g}")
    for row in viol:
        print(f"  VIOLATION k={row['k']} l={row['l']} m={row['m']} {row['mode']}: "
              f"ratio/bound={row['ratio_over_bound']:.6g} witness={json.dumps(row.get('witness'))}")
    return 0 if not viol else 1


def cmd_clique_constants(args, cfg, emit):
    rd = cfg.rd
    recs = []
    for J in cfg.graph.cliques():
        if len(J) > cfg.window.lambda_max:
            continue
        rc = clique_rd_constants(cfg.graph, J, cfg.window, rd.budget, args.seed,
                                 r_grid=tuple(rd.r_grid), stability_tol=rd.stability_tol,
                                 max_iter=rd.max_iter, tol=rd.tol)
        recs.append({"J": sorted(J), "c": rc.c, "r": rc.r, "exact": rc.exact})
        print(f"  J={sorted(J)}: c={rc.c:.6g} r={rc.r:g}{' (whole group)' if rc.exact else ''}")
    c = max(r["c"] for r in recs)
    r = max(r["r"] for r in recs)
    emit.write("clique_constants", recs, {"cliques": recs, "c": c, "r": r})
    print(f"c = {c:.6g}, r = {r:g}")
    return 0


COMMANDS = {
    "normal-form": cmd_normal_form,
    "sphere": cmd_sphere,
    "divisors": cmd_divisors,
    "factor": cmd_factor,
    "p2": cmd_p2,
    "verify-lemma1": cmd_verify_lemma1,
    "verify-lemma2": cmd_verify_lemma2,
    "vanishing": cmd_vanishing,
    "rd-scan": cmd_rd_scan,
    "clique-constants": cmd_clique_constants,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="workbench YAML config")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="graphrd", parents=[common],
                                description="Graph products of groups: normal forms, "
                                            "factorisations and rapid-decay checks")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("normal-form", parents=[common], help="canonical form, lambda and ell")
    s.add_argument("expr")
    s = sub.add_parser("sphere", parents=[common], help="elements of syllable length k")
    s.add_argument("k", type=int)
    s = sub.add_parser("divisors", parents=[common], help="left (or right) divisors of length k")
    s.add_argument("expr")
    s.add_argument("k", type=int)
    s.add_argument("--right", action="store_true")
    s = sub.add_parser("factor", parents=[common], help="factorisations g = g1 [s] g2")
    s.add_argument("expr")
    s.add_argument("k", type=int)
    s.add_argument("l", type=int)
    s.add_argument("--clique", help="clique J as comma-separated vertex ids")
    s = sub.add_parser("p2", parents=[common], help="cancellation decomposition of h1 h2")
    s.add_argument("expr1")
    s.add_argument("expr2")
    for name in ("verify-lemma1", "verify-lemma2", "vanishing", "rd-scan", "clique-constants"):
        sub.add_parser(name, parents=[common])
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if not hasattr(args, "config"):
            raise cfgmod.ConfigError("--config is required")
        cfg = cfgmod.load(args.config)
    except (cfgmod.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    args.seed = getattr(args, "seed", cfg.rd.seed)
    args.threads = getattr(args, "threads", os.cpu_count() or 1)
    out = Path(getattr(args, "out", cfg.output.dir))
    emit = _Emitter(out, getattr(args, "format", cfg.output.format))
    try:
        return COMMANDS[args.command](args, cfg, emit)
    except (NormalFormError, WindowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
