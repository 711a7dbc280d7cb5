"""Command line interface.

Subcommands: simulate, backward, bp-estimate, bounds, verify, sweep.
Scenarios are JSON files (see README for the schema); outputs are CSV
with header rows and 17-significant-digit reals.  Every output embeds
the config hash and seed; existing files are never overwritten without
--force.  Exit status: 0 all verdicts pass, 1 verdict failure, 2 usage
or configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys

import numpy as np

from . import rng as rngmod
from .analytic import analytic_report, fixed_point_q, r0
from .backward import (
    default_t_star,
    explore_susceptibility,
    restricted_susceptibility_size,
)
from .branching import estimate_rho_bp, solve_malthusian
from .config import (
    ExtremalTwoType,
    MarkedSingleProcess,
    ModelConfig,
    load_config,
    mean_matrix,
    validate_config,
)
from .errors import ConfigError, DomainError, InfectorError, NumericError
from .forward import replicate_records, replicate_rho
from .graph import build_graph

__all__ = ["main"]

EXIT_PASS = 0
EXIT_VERDICT = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _config_hash(config: ModelConfig) -> str:
    from .config import config_to_dict

    blob = json.dumps(config_to_dict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class CsvWriter:
    """CSV emission with provenance header lines and overwrite protection."""

    def __init__(self, path: str, force: bool, no_timestamp: bool,
                 config_hash: str = "", seed: int = 0):
        if os.path.exists(path) and not force:
            raise ConfigError(f"refusing to overwrite {path}; pass --force")
        self.path = path
        self.no_timestamp = no_timestamp
        self.config_hash = config_hash
        self.seed = seed

    def write(self, header, rows) -> None:
        with open(self.path, "w") as fh:
            fh.write(f"# config_hash={self.config_hash} seed={self.seed}\n")
            if not self.no_timestamp:
                stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
                fh.write(f"# timestamp={stamp}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")


def _load_valid_config(path: str) -> ModelConfig:
    config = load_config(path)
    violations = validate_config(config)
    if violations:
        raise ConfigError("; ".join(str(v) for v in violations))
    return config


def _out_path(args, name: str) -> str:
    os.makedirs(args.output_dir, exist_ok=True)
    return os.path.join(args.output_dir, name)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = _load_valid_config(args.config)
    seed = config.seed if args.seed is None else args.seed
    records = replicate_records(
        config, args.replicates, threshold=args.threshold,
        master_seed=seed, method=args.method, threads=args.threads,
    )
    k = config.k
    rho_cols = [f"rho_{i}_{j}" for i in range(1, k + 1) for j in range(1, k + 1)]
    header = ["replicate", "large_outbreak", "final_fraction"] + rho_cols
    rows = [
        [rec["replicate"], rec["large_outbreak"], rec["final_fraction"]]
        + list(rec["rho"].ravel())
        for rec in records
    ]
    chash = _config_hash(config)
    CsvWriter(_out_path(args, "replicates.csv"), args.force, args.no_timestamp,
              chash, seed).write(header, rows)

    used = [rec["rho"] for rec in records if rec["large_outbreak"]]
    sum_header = ["statistic"] + rho_cols + ["replicates_used", "replicates_total"]
    sum_rows = []
    if used:
        stack = np.stack(used)
        mean = np.nanmean(stack, axis=0).ravel()
        std = (np.nanstd(stack, axis=0, ddof=1) if len(used) > 1
               else np.full((k, k), np.nan)).ravel()
        stderr = std / np.sqrt(len(used))
        sum_rows.append(["mean"] + list(mean) + [len(used), args.replicates])
        sum_rows.append(["stderr"] + list(stderr) + [len(used), args.replicates])
    else:
        sum_rows.append(["mean"] + [np.nan] * (k * k) + [0, args.replicates])
    CsvWriter(_out_path(args, "summary.csv"), args.force, args.no_timestamp,
              chash, seed).write(sum_header, sum_rows)
    print(f"wrote {args.replicates} replicates ({len(used)} large outbreaks) "
          f"to {args.output_dir}")
    return EXIT_PASS


def cmd_backward(args) -> int:
    config = _load_valid_config(args.config)
    seed = config.seed if args.seed is None else args.seed
    rng = rngmod.stream(seed, "backward-roots")
    graph = build_graph(config, rngmod.stream(seed, "graph"))
    pop = config.population

    if args.roots:
        roots = [int(v) for v in args.roots.split(",")]
    else:
        roots = []
        for j0 in range(pop.k):
            ids = pop.vertices_of_type(j0)
            pick = rng.choice(ids, size=min(args.roots_per_type, len(ids)),
                              replace=False)
            roots.extend(int(v) for v in np.sort(pick))
    if args.t_star is not None:
        t_star = args.t_star
    else:
        alpha = solve_malthusian(config).alpha
        t_star = default_t_star(pop.n, alpha, kappa=args.kappa)

    rows = []
    for v in roots:
        snap = explore_susceptibility(graph, v, t_star)
        j = int(pop.type_of(v)) + 1
        y = restricted_susceptibility_size(graph, v, j, j).y
        rows.append([v, j, len(snap.explored), y, snap.collision_count,
                     snap.flagged])
    header = ["root", "root_type", "explored", "restricted_size",
              "collisions", "flagged"]
    CsvWriter(_out_path(args, "backward.csv"), args.force, args.no_timestamp,
              _config_hash(config), seed).write(header, rows)
    print(f"explored {len(roots)} roots at t_star={t_star:.6g}")
    return EXIT_PASS


def cmd_bp_estimate(args) -> int:
    config = _load_valid_config(args.config)
    seed = config.seed if args.seed is None else args.seed
    rng = rngmod.stream(seed, "bp-estimate", args.type)
    rho, stderr, contrib = estimate_rho_bp(
        config, args.type, args.replicates, horizon=args.horizon,
        rng=rng, cap=args.cap, details=True,
    )
    k = config.k
    chash = _config_hash(config)
    header = ["replicate"] + [f"share_{i}" for i in range(1, k + 1)]
    rows = [[r] + list(contrib[r]) for r in range(args.replicates)]
    CsvWriter(_out_path(args, "bp_replicates.csv"), args.force,
              args.no_timestamp, chash, seed).write(header, rows)
    sum_header = (["target_type"]
                  + [f"rho_{i}_{args.type}" for i in range(1, k + 1)]
                  + [f"stderr_{i}" for i in range(1, k + 1)])
    CsvWriter(_out_path(args, "bp_summary.csv"), args.force,
              args.no_timestamp, chash, seed).write(
        sum_header, [[args.type] + list(rho) + list(stderr)]
    )
    shown = ", ".join(f"rho_{i + 1}{args.type}={rho[i]:.4f}" for i in range(k))
    print(shown)
    return EXIT_PASS


def _bounds_params(args):
    if args.config:
        config = _load_valid_config(args.config)
        kern = config.kernel
        if isinstance(kern, ExtremalTwoType):
            kern = kern.base
        if not isinstance(kern, MarkedSingleProcess) or kern.k != 2:
            raise ConfigError("bounds require a two-type marked_single kernel")
        p1 = float(config.population.proportions[0])
        m1 = float(kern.total_rates[0] * kern.infectious[0].mean())
        m2 = float(kern.total_rates[1] * kern.infectious[1].mean())
        return p1, m1, m2, config
    if args.p1 is None or args.m1 is None or args.m2 is None:
        raise ConfigError("bounds need either --config or all of --p1 --m1 --m2")
    return args.p1, args.m1, args.m2, None


def cmd_bounds(args) -> int:
    p1, m1, m2, config = _bounds_params(args)
    report = analytic_report(p1, m1, m2)
    width = max(len(name) for name, _ in report.rows())
    print(f"{'p1':<{width}}  {p1:.6g}")
    print(f"{'m1_tilde':<{width}}  {m1:.6g}")
    print(f"{'m2_tilde':<{width}}  {m2:.6g}")
    for name, value in report.rows():
        print(f"{name:<{width}}  {value:.12g}")
    if args.output_dir:
        header = ["p1", "m1_tilde", "m2_tilde"] + [n for n, _ in report.rows()]
        row = [p1, m1, m2] + [v for _, v in report.rows()]
        chash = _config_hash(config) if config else ""
        CsvWriter(_out_path(args, "bounds.csv"), args.force, args.no_timestamp,
                  chash, config.seed if config else 0).write(header, [row])
    return EXIT_PASS


def cmd_verify(args) -> int:
    config = _load_valid_config(args.config)
    if args.replicates < 1:
        raise ConfigError("verify needs at least one replicate")
    seed = config.seed if args.seed is None else args.seed
    m = mean_matrix(config)
    basic = r0(m.entries)
    if basic <= 1.0:
        raise DomainError(
            f"supercriticality assumption violated: R0 = {basic:.6g} <= 1"
        )
    checks = []

    fp = fixed_point_q(basic)
    checks.append(("fixed-point-residual", 0.0, fp.residual, 1e-12,
                   fp.residual < 1e-12))
    sol = solve_malthusian(config)
    checks.append(("malthusian-residual", 0.0, sol.residual, 1e-10,
                   sol.residual < 1e-10))

    est = replicate_rho(config, args.replicates, threshold=args.threshold,
                        master_seed=seed, threads=args.threads)
    col_err = float(np.nanmax(np.abs(np.nansum(est.mean, axis=0) - 1.0)))
    checks.append(("attribution-columns-sum", 1.0, 1.0 + col_err, 1e-12,
                   col_err < 1e-12))

    kern = config.kernel
    if isinstance(kern, MarkedSingleProcess) and kern.k == 2:
        p1 = float(config.population.proportions[0])
        m1 = float(kern.total_rates[0] * kern.infectious[0].mean())
        m2 = float(kern.total_rates[1] * kern.infectious[1].mean())
        report = analytic_report(p1, m1, m2)
        rho1 = float(np.nanmean(est.mean[0]))
        inside = report.rho1_minus - args.slack <= rho1 <= report.rho1_plus + args.slack
        checks.append(("sandwich-lower", report.rho1_minus, rho1, args.slack,
                       rho1 >= report.rho1_minus - args.slack))
        checks.append(("sandwich-upper", report.rho1_plus, rho1, args.slack,
                       inside))

    header = ["check", "target", "measured", "tolerance", "verdict"]
    rows = [[name, target, measured, tol, "pass" if ok else "fail"]
            for name, target, measured, tol, ok in checks]
    for name, target, measured, tol, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: measured {measured:.6g} "
              f"(target {target:.6g}, tol {tol:.3g})")
    if args.output_dir:
        CsvWriter(_out_path(args, "verify.csv"), args.force, args.no_timestamp,
                  _config_hash(config), seed).write(header, rows)
    return EXIT_PASS if all(ok for *_, ok in checks) else EXIT_VERDICT


def _grid(text: str):
    return [float(x) for x in text.split(",")]


def cmd_sweep(args) -> int:
    p1s = _grid(args.p1_grid)
    m1s = _grid(args.m1_grid)
    m2s = _grid(args.m2_grid)
    if not (p1s and m1s and m2s):
        raise ConfigError("sweep grid must be nonempty")
    names = ["r0", "q", "q_tilde_1", "q_tilde_2", "q1", "q2",
             "rho1_minus", "rho1_plus"]
    header = ["p1", "m1_tilde", "m2_tilde"] + names + ["error"]
    rows = []
    for p1 in p1s:
        for m1 in m1s:
            for m2 in m2s:
                try:
                    rep = analytic_report(p1, m1, m2)
                    rows.append([p1, m1, m2] + [v for _, v in rep.rows()] + [""])
                except InfectorError as exc:
                    rows.append([p1, m1, m2] + [np.nan] * len(names)
                                + [type(exc).__name__])
    out = _out_path(args, "sweep.csv")
    CsvWriter(out, args.force, args.no_timestamp, "", args.seed or 0).write(header, rows)
    print(f"wrote {len(rows)} grid points to {out}")
    return EXIT_PASS


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _add_common(sub, config_required=True):
    if config_required:
        sub.add_argument("--config", required=True, help="JSON scenario file")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the config seed")
    sub.add_argument("--output-dir", default="out", help="output directory")
    sub.add_argument("--force", action="store_true",
                     help="overwrite existing output files")
    sub.add_argument("--no-timestamp", action="store_true",
                     help="suppress the timestamp header line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infector",
        description="Epidemic attribution: who is the infector?",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    s = sub.add_parser("simulate", help="forward epidemic replicates")
    _add_common(s)
    s.add_argument("--replicates", type=int, required=True)
    s.add_argument("--threshold", type=float, default=0.05)
    s.add_argument("--method", choices=["lazy", "eager"], default="lazy")
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("backward", help="susceptibility-set exploration")
    _add_common(s)
    s.add_argument("--roots", default=None,
                   help="comma-separated explicit root ids")
    s.add_argument("--roots-per-type", type=int, default=10)
    s.add_argument("--t-star", type=float, default=None)
    s.add_argument("--kappa", type=float, default=0.5)
    s.set_defaults(func=cmd_backward)

    s = sub.add_parser("bp-estimate", help="branching-process attribution")
    _add_common(s)
    s.add_argument("--type", type=int, required=True, help="target type j")
    s.add_argument("--replicates", type=int, required=True)
    s.add_argument("--horizon", type=float, default=None,
                   help="default 12/alpha")
    s.add_argument("--cap", type=int, default=1_000_000)
    s.set_defaults(func=cmd_bp_estimate)

    s = sub.add_parser("bounds", help="analytic fixed points and bounds")
    s.add_argument("--config", default=None, help="JSON scenario file")
    s.add_argument("--p1", type=float, default=None)
    s.add_argument("--m1", type=float, default=None)
    s.add_argument("--m2", type=float, default=None)
    s.add_argument("--output-dir", default=None,
                   help="also write bounds.csv here")
    s.add_argument("--force", action="store_true")
    s.add_argument("--no-timestamp", action="store_true")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("verify", help="cross-validation check suite")
    _add_common(s)
    s.add_argument("--replicates", type=int, default=50)
    s.add_argument("--threshold", type=float, default=0.05)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--slack", type=float, default=0.02,
                   help="statistical slack for bound checks")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="analytic report over a parameter grid")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--output-dir", default="out")
    s.add_argument("--force", action="store_true")
    s.add_argument("--no-timestamp", action="store_true")
    s.add_argument("--p1-grid", required=True, help="comma-separated p1 values")
    s.add_argument("--m1-grid", required=True)
    s.add_argument("--m2-grid", required=True)
    s.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, InfectorError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
