"""Command-line entry point: ``sparsenas {gen,train,solve,plant,report}``."""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import activations as acts
from .config import PROFILES, ExperimentConfig, parse_config
from .datagen import load_dataset, plant_dataset, save_dataset, write_manifest
from .errors import ConfigError, ContractError, NumericError, SparseNasError
from .experiments import final_winner, run_experiment, save_full_dataset
from .nas import trace_from_csv
from .solvers import fista, ista, iterate_stats, lasso_cd, threshold_for
from .svg import emit_svg

log = logging.getLogger("sparsenas")


class UsageError(SparseNasError):
    pass


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise UsageError("--config is required")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {args.config}: {exc.strerror}") from exc
    return parse_config(text, args.profile)


def _parse_seeds(raw: str | None) -> list[int]:
    if not raw:
        return []
    try:
        seeds = [int(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--seeds expects a comma-separated list of integers, got {raw!r}") from None
    if any(s < 0 for s in seeds):
        raise UsageError("--seeds must be non-negative")
    return seeds


def _run_one(cfg: ExperimentConfig, out: str) -> dict:
    return run_experiment(cfg, out)


def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    seeds = _parse_seeds(args.seeds)
    if not seeds:
        report = run_experiment(cfg, out, on_epoch=_progress)
        print(f"{out}: winner = {report['winner']}")
        return 0
    jobs = [(cfg.with_overrides(seed=s, data_seed=s), str(out / f"seed_{s}")) for s in seeds]
    if args.parallel:
        with ProcessPoolExecutor() as pool:
            reports = list(pool.map(_run_one, *zip(*jobs)))
    else:
        reports = [run_experiment(c, o, on_epoch=_progress) for c, o in jobs]
    summary = {}
    for s, rep in zip(seeds, reports):
        summary[f"seed_{s}.winner"] = rep["winner"]
        print(f"seed {s}: winner = {rep['winner']}")
    write_manifest(out / "sweep.txt", summary)
    return 0


def _progress(rec) -> None:
    best = max(rec.summary, key=rec.summary.get)
    log.info("epoch %d train %.6g val %.6g leader %s %.3f", rec.epoch, rec.train_loss, rec.val_loss,
             best, rec.summary[best])


def cmd_gen(args) -> int:
    cfg = _load_config(args)
    ds = save_full_dataset(cfg, args.out)
    print(f"wrote {ds.size} samples ({ds.provenance}) to {args.out}")
    return 0


def cmd_plant(args) -> int:
    base = load_dataset(args.data)
    lam = 0.01 / base.dictionary.c if args.lam is None else args.lam
    op = acts.from_name(args.op, lam, args.elu_scale)
    ds = plant_dataset(base, op, args.iters, args.eta)
    save_dataset(ds, args.out)
    print(f"planted {op.name} for {args.iters} iterations; fixed-point displacement {ds.displacement:.3e}")
    return 0


def cmd_solve(args) -> int:
    ds = load_dataset(args.data)
    d = ds.dictionary
    if not 0 <= args.column < ds.size:
        raise UsageError(f"--column must lie in [0, {ds.size}), got {args.column}")
    x = ds.X[:, args.column]
    eta = 1.0 / d.c if args.eta is None else args.eta
    # default weight matches the model's shrink threshold 0.01/c at eta = 1/c
    lam = 2.0 * (0.01 / d.c) / eta if args.lam is None else args.lam
    rows = ["iter,objective,residual_norm,l1_norm"]

    def row(k, z):
        obj, res, l1 = iterate_stats(z, x, d, lam)
        rows.append(f"{k},{obj:.17g},{res:.17g},{l1:.17g}")

    def record(k, z):
        if k % args.every == 0 or k == args.iters:
            row(k, z)

    if args.solver == "ista":
        ista(x, d, threshold_for(lam, eta), eta, args.iters, callback=record)
    elif args.solver == "fista":
        fista(x, d, threshold_for(lam, eta), eta, args.iters, callback=record)
    else:
        res = lasso_cd(x, d, lam, tol=args.tol, max_sweeps=args.iters, callback=row)
        if not res.converged:
            log.warning("coordinate descent did not reach tol %g in %d sweeps", args.tol, args.iters)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text("\n".join(rows) + "\n")
    print(f"{args.solver}: {len(rows) - 1} trace rows written to {args.out}")
    return 0


def cmd_report(args) -> int:
    run = Path(args.run)
    trace_path = run / "trace.csv" if run.is_dir() else run
    trace = trace_from_csv(trace_path.read_text())
    if not trace:
        raise ContractError(f"{trace_path} holds no epochs")
    ops = list(trace[0].summary)
    svg_path = Path(args.out) if args.out else trace_path.with_suffix(".svg")
    emit_svg(trace, svg_path, ops)
    last = trace[-1]
    summary = {"epochs": last.epoch, "winner": final_winner(last, ops)}
    summary.update({f"final_weight.{o}": f"{last.summary[o]:.17g}" for o in ops})
    write_manifest(svg_path.with_name("summary.txt"), summary)
    print(f"winner = {summary['winner']} after {last.epoch} epochs; chart at {svg_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparsenas", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = p.add_subparsers(dest="command", required=True)

    def config_flags(sp):
        sp.add_argument("--config", help="flat key = value experiment config")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--profile", choices=sorted(PROFILES), help="default sizes below explicit keys")

    sp = sub.add_parser("train", help="run an architecture-search experiment")
    config_flags(sp)
    sp.add_argument("--seeds", help="comma-separated seed sweep; each run goes to OUT/seed_<s>")
    sp.add_argument("--parallel", action="store_true", help="run a seed sweep in worker processes")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("gen", help="generate and save a dataset")
    config_flags(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("plant", help="plant operator targets into an existing dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--op", required=True, choices=acts.OP_NAMES)
    sp.add_argument("--iters", type=int, default=10000)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--lam", type=float, help="shrink threshold (default 0.01/c)")
    sp.add_argument("--elu-scale", type=float, default=1.0)
    sp.set_defaults(func=cmd_plant)

    sp = sub.add_parser("solve", help="run a reference solver on one dataset column")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True, help="trace CSV path")
    sp.add_argument("--solver", choices=("ista", "fista", "cd"), default="ista")
    sp.add_argument("--column", type=int, default=0)
    sp.add_argument("--iters", type=int, default=1000, help="iterations (sweep budget for cd)")
    sp.add_argument("--every", type=int, default=1, help="trace every N iterations (ista/fista)")
    sp.add_argument("--lam", type=float, help="l1 weight of the objective (default 0.02 at eta=1/c)")
    sp.add_argument("--eta", type=float)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("report", help="re-render chart and summary from a trace")
    sp.add_argument("--run", required=True, help="run directory or trace CSV")
    sp.add_argument("--out", help="SVG path (default next to the trace)")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ContractError as exc:
        print(f"contract error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
