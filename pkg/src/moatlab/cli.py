"""Command-line front end: ``moatlab grow|experiment|gadget|oracle|gap``."""

from __future__ import annotations

import argparse
import inspect
import logging
import os
import sys
from fractions import Fraction

from . import experiments, gadgets, goodplan, growth, mergeplan, oracles, render, subdivide
from .instance import InstanceError, OracleLimitError, as_fraction, fmt, load, save, tmst

log = logging.getLogger("moatlab")

LARGE_INSTANCE = 10 ** 4


class CliError(Exception):
    def __init__(self, msg: str, code: int = 1):
        super().__init__(msg)
        self.code = code


def _frac(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError, TypeError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _approx(q: Fraction) -> str:
    return f"~{float(q):.9f}"


def _load_instance(path: str):
    if not os.path.exists(path):
        raise CliError(f"no such file: {path}", 2)
    try:
        return load(path)
    except (InstanceError, ValueError, KeyError, TypeError) as exc:
        raise CliError(f"cannot read instance {path}: {exc}", 2) from None


def _root_arg(inst, root):
    if root is None:
        return None
    for t in inst.terminals:
        if str(t) == root:
            return t
    raise CliError(f"root {root!r} is not a terminal")


def _build_plan(inst, args) -> mergeplan.MergePlan:
    if args.gamma is not None:
        run = goodplan.relative_greedy(inst, oracles.oracle_cap("hyp", args.cap))
        plan = goodplan.construct_gamma_plan(run, args.gamma)
    elif args.plan == "canonical":
        plan = mergeplan.canonical_plan(inst)
    elif args.plan == "trivial":
        plan = mergeplan.trivial_plan(inst.terminals)
    else:
        if not args.plan_file:
            raise CliError("--plan file needs --plan-file", 2)
        if not os.path.exists(args.plan_file):
            raise CliError(f"no such file: {args.plan_file}", 2)
        with open(args.plan_file) as fh:
            try:
                plan = mergeplan.plan_from_json(fh.read())
            except (ValueError, KeyError, TypeError) as exc:
                raise CliError(f"cannot read plan {args.plan_file}: {exc}", 2) from None
    factor = args.scale * (1 - args.epsilon)
    return plan if factor == 1 else mergeplan.scale(plan, factor)


def cmd_grow(args) -> int:
    inst = _load_instance(args.instance)
    root = _root_arg(inst, args.root)
    plan = _build_plan(inst, args)
    if args.subdivide:
        before = inst.n
        inst = subdivide.make_well_subdivided(inst, plan, root=root)
        print(f"well-subdivided: {inst.n - before} vertices inserted")
    trace, dual = growth.run(inst, plan, root=root)
    val = growth.dual_objective(dual)
    feasible, _ = growth.is_feasible_run(trace)
    T = tmst(inst)[0]
    print(f"{'feasible' if feasible else 'infeasible'}, dual = {fmt(val)} ({_approx(val)})")
    print(f"value(plan) = {fmt(mergeplan.value(plan))}, TMST = {fmt(T)}")
    if T:
        print(f"dual/TMST = {fmt(val / T)} ({_approx(val / T)})")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "trace.json"), "w") as fh:
            fh.write(trace.to_json(indent=1, sort_keys=True) + "\n")
        with open(os.path.join(args.out, "dual.json"), "w") as fh:
            fh.write(dual.to_json(indent=1) + "\n")
        print(f"wrote {args.out}/trace.json and {args.out}/dual.json")
    if args.frames:
        times = [_frac(t) for t in args.frames.split(",") if t.strip()]
        paths = render.write_frames(trace, times, os.path.join(args.out or ".", "frames"))
        print(f"wrote {len(paths)} frames")
    return 0


def cmd_experiment(args) -> int:
    if args.name not in experiments.EXPERIMENTS:
        raise CliError(f"unknown experiment {args.name!r}; known: {', '.join(experiments.EXPERIMENTS)}", 2)
    accepted = inspect.signature(experiments.EXPERIMENTS[args.name]).parameters
    given = {"seed": args.seed, "n": args.n, "terminals": args.terminals, "eps": args.eps,
             "rounds": args.rounds, "n_random": args.n_random, "tol": args.tol}
    params = {k: v for k, v in given.items() if v is not None and k in accepted}
    ignored = sorted(k for k, v in given.items() if v is not None and k not in accepted and k != "seed")
    if ignored:
        log.warning("%s ignores: %s", args.name, ", ".join(ignored))
    rep = experiments.run_experiment(args.name, **params)
    text = rep.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"{args.name}: {'PASS' if rep.passed else 'FAIL'} "
          f"({len(rep.assertions) - len(rep.failures())}/{len(rep.assertions)} assertions)",
          file=sys.stderr)
    return 0 if rep.passed else 1


def cmd_gadget(args) -> int:
    if args.kind == "3x":
        g, _ = gadgets.three_x_gadget(k=args.k)
        inst = g.instance
    elif args.kind == "jump":
        g, _ = gadgets.jump_gadget(k=args.k)
        inst = g.instance
    else:
        g = None
        R = [f"r{i}" for i in range(args.terminals)]
        k = gadgets.k_for_epsilon(args.eps)
        est = args.terminals * (args.terminals - 1) * (args.terminals - 2) * (30 * k * k + 60 * k + 1)
        if est > LARGE_INSTANCE:
            log.warning("composed instance has about %d vertices", est)
        inst = gadgets.lower_bound_instance(R, args.eps)
    print(f"{args.kind}: |V| = {inst.n}, |E| = {inst.m}, |R| = {len(inst.terminals)}")
    if inst.n > LARGE_INSTANCE:
        log.warning("instance has %d vertices (more than %d)", inst.n, LARGE_INSTANCE)
    if g is not None:
        rep = gadgets.verify_gadget_lemma(g)
        for name, ok, got, want in rep.checks:
            print(f"  {'ok  ' if ok else 'FAIL'} {name}: {fmt(got) if isinstance(got, Fraction) else got}"
                  f" (expected {fmt(want)})")
    if args.out:
        save(inst, args.out)
        print(f"wrote {args.out}")
    return 0 if g is None or rep.ok else 1


def cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    root = _root_arg(inst, args.root)
    if args.kind == "bcr":
        val = oracles.bcr_value(inst, root, cap=args.cap)
    elif args.kind == "hyp":
        val = oracles.hyp_value(inst, root, cap=args.cap)
    elif args.kind == "opt":
        val = oracles.opt_value(inst, args.cap)
    else:
        val = oracles.tmst_value(inst)
    print(f"{args.kind} = {fmt(val)} ({_approx(val)})")
    return 0


def cmd_gap(args) -> int:
    if args.instance is None:
        gb = goodplan.gap_bound(args.tol)
        print(f"integral in [{_approx(gb.integral_lo)}, {_approx(gb.integral_hi)}], {gb.pieces} pieces")
        print(f"gap bound <= {_approx(gb.bound_hi)}")
        return 0
    inst = _load_instance(args.instance)
    run = goodplan.relative_greedy(inst, oracles.oracle_cap("hyp", args.cap))
    r = goodplan.rho(run)
    best = goodplan.best_gamma(r)
    print("rho breakpoints: " + (", ".join(fmt(b) for b in r.breakpoints) or "none"))
    print(f"gamma* = {fmt(best.gamma)} ({_approx(best.gamma)})")
    print(f"bound: BCR/TMST >= {fmt(best.bound)} ({_approx(best.bound)})")
    try:
        bcr = oracles.bcr_value(inst)
    except OracleLimitError as exc:
        print(f"BCR not computed: {exc}")
        return 0
    T = run.tmst
    if T:
        print(f"BCR/TMST = {fmt(bcr / T)} ({_approx(bcr / T)})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="moatlab", description="Dual growth for the bidirected cut relaxation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("grow", help="run dual growth on an instance")
    g.add_argument("-i", "--instance", required=True)
    g.add_argument("--plan", choices=["canonical", "file", "trivial"], default="canonical")
    g.add_argument("--plan-file")
    g.add_argument("--scale", type=_frac, default=Fraction(1))
    g.add_argument("--epsilon", type=_frac, default=Fraction(0))
    g.add_argument("--gamma", type=_frac, help="use the gamma-good plan instead of --plan")
    g.add_argument("--root")
    g.add_argument("--subdivide", action="store_true", help="well-subdivide before growing")
    g.add_argument("--frames", help="comma-separated times for SVG frames")
    g.add_argument("--out", help="directory for trace.json, dual.json and frames")
    g.add_argument("--cap", type=int)
    g.set_defaults(func=cmd_grow)

    e = sub.add_parser("experiment", help="run a named experiment and print its JSON report")
    e.add_argument("name")
    e.add_argument("--seed", type=int)
    e.add_argument("--n", type=int)
    e.add_argument("--terminals", type=int)
    e.add_argument("--eps", type=_frac)
    e.add_argument("--rounds", type=int)
    e.add_argument("--n-random", type=int)
    e.add_argument("--tol", type=_frac)
    e.add_argument("--out", help="write the report here instead of stdout")
    e.set_defaults(func=cmd_experiment)

    d = sub.add_parser("gadget", help="build a gadget or the composed lower-bound instance")
    d.add_argument("kind", choices=["3x", "jump", "lowerbound"])
    d.add_argument("--k", type=int, default=1)
    d.add_argument("--eps", type=_frac, default=Fraction(1, 6))
    d.add_argument("--terminals", type=int, default=4)
    d.add_argument("--out")
    d.set_defaults(func=cmd_gadget)

    o = sub.add_parser("oracle", help="exact BCR, HYP, OPT or TMST value")
    o.add_argument("kind", choices=["bcr", "hyp", "opt", "tmst"])
    o.add_argument("-i", "--instance", required=True)
    o.add_argument("--root")
    o.add_argument("--cap", type=int)
    o.set_defaults(func=cmd_oracle)

    q = sub.add_parser("gap", help="gap integral, or rho and gamma* of an instance")
    q.add_argument("-i", "--instance")
    q.add_argument("--cap", type=int)
    q.add_argument("--tol", type=_frac, default=Fraction(1, 10 ** 6))
    q.set_defaults(func=cmd_gap)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (OracleLimitError, InstanceError, growth.GrowthError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
