"""Command line entry point: one job per invocation, one JSON report.

Exit status: 0 ok, 1 a check failed or a reported degree is not stabilized
(unless --allow-unstable), 2 configuration error, 3 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from fractions import Fraction
from itertools import product

from . import __version__
from .cache import Cache, cache_gc, default_dir

TASKS = ("betti", "ls-betti", "bv-betti", "check-mc", "check-d2", "check-coassoc",
         "check-comodule", "check-les", "compare", "sbg", "cache-gc")
FLAVORS = ("GraphsD", "GraphsM", "GraphsM_NoTadpole", "graphsM_reduced", "graphsM_forest", "bv")

log = logging.getLogger("confgraph")


class ConfigError(ValueError):
    pass


def build_parser():
    p = argparse.ArgumentParser(prog="confgraph",
                                description="Graph complex models of configuration spaces.")
    p.add_argument("--task", required=True, choices=TASKS)
    p.add_argument("--manifold", help="builtin algebra name, e.g. S^2, T^2, Sigma_2")
    p.add_argument("--algebra-file", help="Poincare duality algebra in JSON")
    p.add_argument("--mc", default="z0", help="'z0' or a Maurer-Cartan element file")
    p.add_argument("--n", type=int, help="number of (framed) external points")
    p.add_argument("--k", type=int, default=0, help="unframed points for framed tasks")
    p.add_argument("--deg-min", type=int)
    p.add_argument("--deg-max", type=int)
    p.add_argument("--kmax", type=int, default=2, help="truncation level")
    p.add_argument("--kprobe", type=int, help="probe level (default kmax + 1)")
    p.add_argument("--flavor", choices=FLAVORS, help="complex flavor (default GraphsM)")
    p.add_argument("--dim", type=int, help="dimension for GraphsD without an algebra")
    p.add_argument("--surface", help="surface for framed tasks (defaults to --manifold)")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--cache-dir", help="cache directory (default: $CONFGRAPH_CACHE_DIR)")
    p.add_argument("--no-cache", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--allow-unstable", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


# configuration

def _algebra(args, name=None):
    from .pdalgebra import ParseError, UnknownBuiltin, ValidationError, builtin, load_algebra
    name = name or args.manifold
    try:
        if args.algebra_file and not name:
            return load_algebra(args.algebra_file)
        if name:
            return builtin(name)
    except (UnknownBuiltin, ParseError, ValidationError, OSError) as e:
        raise ConfigError(f"{type(e).__name__}: {e}") from None
    raise ConfigError("--manifold or --algebra-file is required for this task")


def _mc(args, A):
    from .gc import z0, load_mc
    from .pdalgebra import ParseError
    if args.mc == "z0":
        return z0(A)
    try:
        B, z = load_mc(args.mc, A)
    except (ParseError, OSError) as e:
        raise ConfigError(f"cannot read MC element: {e}") from None
    return z


def _need(args, *names):
    for nm in names:
        if getattr(args, nm.replace("-", "_")) is None:
            raise ConfigError(f"--{nm} is required for task {args.task}")


def _window(args, lo=None, hi=None):
    lo = args.deg_min if args.deg_min is not None else lo
    hi = args.deg_max if args.deg_max is not None else hi
    if lo is None or hi is None:
        raise ConfigError(f"--deg-min/--deg-max are required for task {args.task}")
    if hi < lo:
        raise ConfigError("empty degree window")
    return lo, hi


def _file_digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def config_dict(args):
    """The semantic part of the configuration (what the result depends on)."""
    cfg = {"task": args.task}
    for nm in ("manifold", "n", "k", "deg_min", "deg_max", "kmax", "kprobe", "flavor", "dim",
               "surface"):
        cfg[nm] = getattr(args, nm)
    if args.algebra_file:
        try:
            cfg["algebra_file_sha256"] = _file_digest(args.algebra_file)
        except OSError as e:
            raise ConfigError(str(e)) from None
    if args.mc != "z0":
        try:
            cfg["mc_sha256"] = _file_digest(args.mc)
        except OSError as e:
            raise ConfigError(str(e)) from None
    else:
        cfg["mc"] = "z0"
    return cfg


def config_hash(cfg):
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# tasks; each returns (result, checks, stable)

def _betti_result(bt):
    d = bt.as_dict()
    d["euler"] = bt.euler()
    for key in ("k_max", "k_probe", "sector_max", "tadpoles_excluded", "betti_probe"):
        if key in bt.extra:
            d[key] = bt.extra[key]
    return d


def _flavor(args, A, kind=None):
    from .complexes import make_flavor
    kind = kind or args.flavor or "GraphsM"
    if kind == "GraphsD":
        D = args.dim if args.dim is not None else (A.D if A is not None else None)
        if D is None:
            raise ConfigError("GraphsD needs --dim or an algebra")
        return make_flavor("GraphsD", D=D)
    if kind == "bv":
        raise ConfigError("use --task bv-betti for framed complexes")
    return make_flavor(kind, A, mc=_mc(args, A))


def task_betti(args, ctx):
    from .complexes import betti
    _need(args, "n")
    if args.flavor == "bv":
        raise ConfigError("use --task bv-betti for framed complexes")
    A = None if (args.flavor == "GraphsD" and args.dim is not None) else _algebra(args)
    fl = _flavor(args, A)
    lo, hi = _window(args)
    bt = betti(fl, args.n, lo, hi, args.kmax, args.kprobe, cache=ctx["cache"],
               workers=args.workers)
    return {"betti": _betti_result(bt)}, [], bt.all_stabilized()


def task_ls_betti(args, ctx):
    from .lsmodel import build_F, ls_betti
    _need(args, "n")
    A = _algebra(args)
    top = A.D * args.n
    lo, hi = _window(args, 0, top)
    bt = ls_betti(A, args.n, lo, hi)
    return {"ls_betti": _betti_result(bt)}, [], True


def _surface(args):
    A = _algebra(args, args.surface or args.manifold)
    if A.D != 2:
        raise ConfigError("framed tasks need a surface")
    return A


def task_bv_betti(args, ctx):
    from .bvframed import BVFlavor
    from .complexes import betti
    _need(args, "n")
    A = _surface(args)
    lo, hi = _window(args)
    bvf = BVFlavor(A, args.n, args.k, _mc(args, A))
    bt = betti(bvf.flavor(), bvf.n_ext, lo, hi, args.kmax, args.kprobe, cache=ctx["cache"],
               workers=args.workers)
    return {"bv_betti": _betti_result(bt)}, [], bt.all_stabilized()


def task_check_mc(args, ctx):
    from .gc import check_mc
    A = _algebra(args)
    z = _mc(args, A)
    rep = check_mc(z, A)
    return {"check_mc": rep.as_dict()}, [("maurer-cartan", rep.holds)], True


def task_check_d2(args, ctx):
    from .bvframed import BVFlavor
    from .complexes import check_d2, make_flavor
    A = _algebra(args)
    z = _mc(args, A)
    ns = [args.n] if args.n is not None else [1, 2, 3]
    lo, hi = _window(args, -1, 3)
    kinds = [args.flavor] if args.flavor else \
        ["GraphsD", "GraphsM", "GraphsM_NoTadpole", "graphsM_reduced", "graphsM_forest"] + \
        (["bv"] if A.D == 2 else [])
    out, checks = [], []
    for kind in kinds:
        for n in ns:
            if kind == "bv":
                fl = BVFlavor(A, n, 0, z).flavor()
            elif kind == "GraphsD":
                fl = make_flavor("GraphsD", D=A.D)
            else:
                fl = make_flavor(kind, A, mc=z)
            rep = check_d2(fl, n, lo, hi, args.kmax)
            out.append(rep.as_dict())
            checks.append((f"d2 {kind} n={n}", rep.holds))
    return {"check_d2": out}, checks, True


def task_check_coassoc(args, ctx):
    from .operad import coassociativity_defect, gra_graphs, set_partitions
    D = args.dim if args.dim is not None else _algebra(args).D
    nmax = args.n if args.n is not None else 4
    max_edges = 3
    cases = bad = 0
    first = None
    for n in range(1, nmax + 1):
        for g in gra_graphs(D, n, max_edges):
            for coarse in set_partitions(range(1, n + 1)):
                for fine in product(*[list(set_partitions(b)) for b in coarse]):
                    cases += 1
                    if coassociativity_defect(g, coarse, list(fine)):
                        bad += 1
                        if first is None:
                            from .graphs import literal
                            first = {"graph": literal(g), "coarse": coarse, "fine": list(fine)}
    res = {"D": D, "n_max": nmax, "max_edges": max_edges, "cases": cases, "failures": bad,
           "witness": first}
    return {"check_coassoc": res}, [("coassociativity", bad == 0)], True


def task_check_comodule(args, ctx):
    from .complexes import coact_graphs, d_graphs, enumerate_basis, make_flavor
    from .operad import comodule_defect, gra_graphs, set_partitions
    A = _algebra(args)
    nmax = args.n if args.n is not None else 2
    cases = bad = 0
    for n in range(1, nmax + 1):
        for g in gra_graphs(A.D, n, 2, A, A.D):
            for blocks in set_partitions(range(1, n + 1)):
                cases += 1
                if comodule_defect(g, blocks, A):
                    bad += 1
    res = {"gra_level": {"n_max": nmax, "cases": cases, "failures": bad}}
    checks = [("comodule (no internal vertices)", bad == 0)]
    # lifted to graphs with one internal vertex, where the coaction is defined
    fl = make_flavor("GraphsM", A, mc=_mc(args, A))
    if not fl.tadpoles_excluded:
        fD = make_flavor("GraphsD", D=A.D)
        cases2 = bad2 = 0
        for n in range(1, nmax + 1):
            gs = [g for p in range(-A.D, 2 * A.D + 1) for g in enumerate_basis(fl, n, p, 1)
                  if len(g.edges) <= 2]
            for g in gs:
                for blocks in set_partitions(range(1, n + 1)):
                    cases2 += 1
                    if coaction_defect(g, fl, fD, blocks, coact_graphs, d_graphs):
                        bad2 += 1
        res["graphs_level"] = {"n_max": nmax, "cases": cases2, "failures": bad2}
        checks.append(("comodule (one internal vertex)", bad2 == 0))
    else:
        res["graphs_level"] = "skipped: nonzero Euler characteristic removes the tadpoles"
    return {"check_comodule": res}, checks, True


def coaction_defect(g, fl, fD, blocks, coact_graphs, d_graphs):
    """coact(d g) - (d (x) id + id (x) d) coact(g), Koszul signs on the factors."""
    lhs = {}
    for h, c in d_graphs(g, fl).items():
        for f, cc in coact_graphs(h, fl, blocks).items():
            lhs[f] = lhs.get(f, 0) + c * cc
    rhs = {}
    for f, c in coact_graphs(g, fl, blocks).items():
        for h, cc in d_graphs(f[0], fl).items():
            key = (h,) + f[1:]
            rhs[key] = rhs.get(key, 0) + c * cc
        sgn = -1 if f[0].degree() % 2 else 1
        for j in range(1, len(f)):
            for h, cc in d_graphs(f[j], fD).items():
                key = f[:j] + (h,) + f[j + 1:]
                rhs[key] = rhs.get(key, 0) + sgn * c * cc
            if f[j].degree() % 2:
                sgn = -sgn
    return {k: lhs.get(k, 0) - rhs.get(k, 0) for k in set(lhs) | set(rhs)
            if lhs.get(k, 0) != rhs.get(k, 0)}


def task_check_les(args, ctx):
    from .bvframed import les_check
    _need(args, "n")
    A = _surface(args)
    if args.k < 1:
        raise ConfigError("--k >= 1 is required for check-les")
    lo, hi = _window(args)
    rep = les_check(A, args.n, args.k, lo, hi, args.kmax, args.kprobe, mc=_mc(args, A))
    stable = all(rep.stabilized.values())
    return {"check_les": rep.as_dict()}, [("long exact sequence", rep.exact)], stable


def task_compare(args, ctx):
    from .complexes import betti
    from .lsmodel import ls_betti
    _need(args, "n")
    A = _algebra(args)
    if args.flavor in ("GraphsD", "bv"):
        raise ConfigError("compare needs a module flavor")
    fl = _flavor(args, A)
    lo, hi = _window(args, 0, A.D * args.n)
    bt = betti(fl, args.n, lo, hi, args.kmax, args.kprobe, cache=ctx["cache"],
               workers=args.workers)
    lt = ls_betti(A, args.n, lo, hi)
    agree = [bt.betti[p] == lt.betti[p] for p in range(lo, hi + 1) if bt.stabilized[p]]
    res = {"graphs": _betti_result(bt), "ls": _betti_result(lt),
           "agree_in_stabilized_degrees": all(agree), "compared_degrees": len(agree)}
    return {"compare": res}, [("graphs = LS model", all(agree))], bt.all_stabilized()


def task_sbg(args, ctx):
    from .lsmodel import ls_betti, sbg_polynomial
    _need(args, "n")
    A = _algebra(args)
    P = sbg_polynomial(A.poincare_poly(), args.n, A.D)
    res = {"coefficients": P}
    checks = []
    if args.n >= 1:
        bt = ls_betti(A, args.n, 0, len(P) - 1)
        dom = all(P[p] >= bt.betti[p] for p in range(len(P)))
        res["ls_betti"] = list(bt.values())
        res["dominates"] = dom
        checks.append(("sBG dominates Betti", dom))
    return {"sbg": res}, checks, True


def task_cache_gc(args, ctx):
    root = args.cache_dir or default_dir()
    if not os.path.isdir(root):
        raise ConfigError(f"cache directory {root} does not exist")
    return {"cache_gc": cache_gc(root)}, [], True


RUNNERS = {
    "betti": task_betti, "ls-betti": task_ls_betti, "bv-betti": task_bv_betti,
    "check-mc": task_check_mc, "check-d2": task_check_d2, "check-coassoc": task_check_coassoc,
    "check-comodule": task_check_comodule, "check-les": task_check_les, "compare": task_compare,
    "sbg": task_sbg, "cache-gc": task_cache_gc,
}


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def run(args):
    """Execute one job; returns (report dict, exit code)."""
    cfg = config_dict(args)
    cache = None
    if not args.no_cache and args.task != "cache-gc":
        cache = Cache(args.cache_dir or default_dir())
    result, checks, stable = RUNNERS[args.task](args, {"cache": cache})
    passed = all(ok for _, ok in checks)
    if not passed:
        status, code = "check-failed", 1
    elif not stable and not args.allow_unstable:
        status, code = "unstabilized", 1
    else:
        status, code = "ok", 0
    report = {
        "tool": "confgraph",
        "version": __version__,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "checks": [{"name": nm, "passed": bool(ok)} for nm, ok in checks],
        "stabilized": bool(stable),
        "status": status,
        "result": _jsonable(result),
    }
    return report, code


def dumps(report):
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.n is not None and args.n < 0:
            raise ConfigError("--n must be nonnegative")
        if args.kmax < 0:
            raise ConfigError("--kmax must be nonnegative")
        if args.kprobe is not None and args.kprobe <= args.kmax:
            raise ConfigError("--kprobe must exceed --kmax")
        report, code = run(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - last-resort reporting
        log.debug("internal error", exc_info=True)
        print(f"internal error in task {getattr(args, 'task', '?')}: "
              f"{type(e).__name__}: {e}", file=sys.stderr)
        return 3
    text = dumps(report)
    if args.out:
        tmp = args.out + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, args.out)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
