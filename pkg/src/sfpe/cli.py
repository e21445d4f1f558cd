"""Command-line front end: ``sfpe {simulate,oracle,distance,experiment,validate}``.

Exit codes: 0 success, 1 runtime failure, 2 bad config or input file.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import rng as rngmod
from .config import ExperimentConfig, parse_config
from .diagnostics import contraction_check, run_convergence_experiment
from .errors import BudgetExceededError, ConfigError, SfpeError
from .popdyn import iter_population_dynamics
from .serialize import read_values, write_metadata, write_pool_csv, write_report
from .wasserstein import wasserstein_p
from .wbp import (OracleBudget, expected_tree_size, node_count_estimate, oracle_block_size,
                  sample_exact_iid)


def _load(args) -> ExperimentConfig:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    cfg = parse_config(text, require_seed=not args.entropy)
    if args.entropy:
        cfg.seed = rngmod.fresh_seed()
    if getattr(args, "threads", None):
        cfg.threads = args.threads
    if getattr(args, "out", None):
        cfg.directory = args.out
    return cfg


def _meta(cfg: ExperimentConfig, provenance, files):
    return {"provenance": provenance, "seed": cfg.seed, "k": cfg.k, "m": cfg.m,
            "map": cfg.map.to_mapping(), "spec": cfg.spec.to_text(), "init": cfg.init.label,
            "pool_block": rngmod.POOL_BLOCK, "config": cfg.to_text(), "files": files}


def cmd_simulate(cfg: ExperimentConfig) -> int:
    out = Path(cfg.directory)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for pool in iter_population_dynamics(cfg.map, cfg.spec, cfg.k, cfg.m, cfg.init, cfg.seed,
                                         cfg.threads):
        if cfg.pools == "all" or pool.level == cfg.k:
            name = f"pool_level_{pool.level:03d}.csv"
            write_pool_csv(out / name, pool.values, pool.level)
            files.append(name)
    write_metadata(out / "metadata.json", _meta(cfg, "popdyn", files))
    print(f"wrote {len(files)} pool file(s) to {out}")
    return 0


def cmd_oracle(cfg: ExperimentConfig) -> int:
    budget = OracleBudget(max_nodes=cfg.max_nodes)
    size = expected_tree_size(cfg.spec, cfg.k)
    if size is None:
        size = node_count_estimate(cfg.spec, cfg.k, 1000, rngmod.substream(cfg.seed, rngmod.AUX, 1))
    if size > budget.max_nodes:
        raise BudgetExceededError(
            f"estimated {size:.6g} nodes per draw exceeds max_nodes = {budget.max_nodes}", nodes=size)
    try:
        vals = sample_exact_iid(cfg.map, cfg.spec, cfg.k, cfg.init, cfg.n, cfg.seed, budget)
    except BudgetExceededError as exc:
        raise BudgetExceededError(f"{exc} (estimated {size:.6g} nodes per draw)",
                                  nodes=exc.nodes, index=exc.index) from exc
    out = Path(cfg.directory)
    out.mkdir(parents=True, exist_ok=True)
    write_pool_csv(out / "oracle.csv", vals, cfg.k)
    meta = _meta(cfg, "oracle", ["oracle.csv"])
    meta.update(n=cfg.n, oracle_block=oracle_block_size(cfg.spec, cfg.k))
    write_metadata(out / "metadata.json", meta)
    print(f"wrote {cfg.n} oracle draw(s) to {out / 'oracle.csv'}")
    return 0


def cmd_distance(file_a, file_b, p) -> int:
    a, b = read_values(file_a), read_values(file_b)
    print(f"{wasserstein_p(a, b, p):.12g}")
    return 0


def cmd_experiment(cfg: ExperimentConfig) -> int:
    budget = OracleBudget(max_nodes=cfg.max_nodes)
    report = run_convergence_experiment(
        cfg.map, cfg.spec, cfg.p, cfg.k, cfg.m_grid, cfg.replications, cfg.oracle_size, cfg.seed,
        init=cfg.init, q=cfg.q, trials=cfg.trials, threads=cfg.threads, budget=budget)
    if cfg.k >= 2:
        report.contraction = contraction_check(cfg.map, cfg.spec, cfg.p, cfg.k,
                                               cfg.contraction_size or cfg.oracle_size, cfg.seed,
                                               cfg.init, budget)
    out = Path(cfg.directory)
    files = write_report(report, out)
    write_metadata(out / "metadata.json", _meta(cfg, "experiment", files))
    sys.stdout.write((out / "summary.txt").read_text(encoding="utf-8"))
    return 0


def cmd_validate(cfg: ExperimentConfig) -> int:
    print("config OK")
    print(cfg.to_text(), end="")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="sfpe", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (("simulate", "run population dynamics and dump pools"),
                           ("oracle", "draw exact samples from the branching-process oracle"),
                           ("experiment", "run the convergence experiment and write reports"),
                           ("validate", "parse and validate a config")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--out", metavar="DIR", help="output directory (overrides [output] directory)")
        sp.add_argument("--threads", type=int, metavar="N", help="worker threads")
        sp.add_argument("--entropy", action="store_true",
                        help="draw the seed from OS entropy (nondeterministic)")
    sp = sub.add_parser("distance", help="Wasserstein-p distance between two CSV samples")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    sp.add_argument("--p", type=float, default=1.0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "distance":
            if not args.p >= 1:
                raise ConfigError("--p must be >= 1", key="p")
            return cmd_distance(args.file_a, args.file_b, args.p)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1", key="threads")
        cfg = _load(args)
        return {"simulate": cmd_simulate, "oracle": cmd_oracle, "experiment": cmd_experiment,
                "validate": cmd_validate}[args.command](cfg)
    except ConfigError as exc:
        key = f" [key: {exc.key}]" if exc.key else ""
        print(f"error: {exc}{key}", file=sys.stderr)
        return 2
    except SfpeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
