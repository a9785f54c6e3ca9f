"""Command-line surface: predict, simulate, and the three bench studies.

Exit status: 0 on success, 1 on a domain/usage error, 2 on a numeric error.
The environment variable ``RAPIDKRIG_SEED`` overrides ``--seed`` when set.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys


from .covariance import CovarianceModel
from .errors import DomainError, NumericError, RapidKrigError
from .exact import fit, predict_exact
from .gridding import build_padded_grid
from .io import build_covariates, load_observations, parse_formula, write_grid_output
from .rapid import build_setup, predict_rapid
from .simulate import RNG_ALGORITHM, generate_ensemble
from .studies import (StudyConfig, run_convergence_study, run_error_study,
                      run_timing)

__all__ = ["cli_main", "main", "console_entry"]


class _UsageError(DomainError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{message}\n\n{self.format_usage()}")


def _parse_dims(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError as err:
        raise DomainError(f"bad grid spec {text!r}; expected e.g. 128x256") from err


def _parse_domain(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise DomainError(f"bad domain spec {text!r}; expected x0,x1,y0,y1")
    return tuple(float(p) for p in parts)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip())


def _build_parser() -> _Parser:
    parser = _Parser(prog="rapidkrig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_flags(p):
        p.add_argument("--sigma2", type=float, required=True, help="process variance")
        p.add_argument("--alpha", type=float, required=True,
                       help="Matern scale, multiplies distance (alpha = 1/range)")
        p.add_argument("--nu", type=float, required=True, help="Matern smoothness")
        p.add_argument("--tau2", type=float, default=0.0, help="nugget variance")

    def add_predict_flags(p):
        p.add_argument("--obs", required=True, help="delimited text with x,y,z columns")
        p.add_argument("--out", required=True, help="output grid file")
        p.add_argument("--grid", required=True, type=_parse_dims, metavar="M1xM2")
        p.add_argument("--domain", type=_parse_domain, default=None,
                       help="x0,x1,y0,y1 (default: data bounding box)")
        p.add_argument("--method", choices=("exact", "rapid"), default="rapid")
        p.add_argument("--L", type=int, default=4, help="neighbor order for rapid")
        p.add_argument("--covariates", default="1",
                       help="fixed-effect formula, terms from 1,x,y,x*y")
        add_model_flags(p)

    p_pred = sub.add_parser("predict", help="fit and predict onto a grid")
    add_predict_flags(p_pred)

    p_sim = sub.add_parser("simulate", help="conditional-simulation ensemble")
    add_predict_flags(p_sim)
    p_sim.add_argument("--draws", type=int, default=100)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--save-draws", action="store_true",
                       help="store every draw in the output file")

    p_err = sub.add_parser("bench-error", help="factorial accuracy study")
    p_err.add_argument("--out", required=True)
    p_err.add_argument("--reps", type=int, default=10)
    p_err.add_argument("--seed", type=int, default=1)
    p_err.add_argument("--n", type=_parse_ints, default=(200,))
    p_err.add_argument("--grids", default="60x60,100x100",
                       help="comma-separated M1xM2 list")

    p_con = sub.add_parser("bench-converge", help="approximation-order study")
    p_con.add_argument("--out", required=True)
    p_con.add_argument("--L", type=int, default=2)
    p_con.add_argument("--range", type=float, default=0.25, dest="corr_range",
                       help="correlation range (divisor convention)")
    p_con.add_argument("--nu-list", type=_parse_floats, default=(0.5, 1.0, 1.5, 2.5))
    p_con.add_argument("--grids", type=_parse_ints,
                       default=tuple(range(20, 201, 20)))

    p_time = sub.add_parser("bench-time", help="timing comparison")
    p_time.add_argument("--out", required=True)
    p_time.add_argument("--ns", type=_parse_ints, default=(200, 1500))
    p_time.add_argument("--grids", default="60x60,100x100,140x140")
    p_time.add_argument("--methods", default="exact,rapid-L4")
    p_time.add_argument("--reps", type=int, default=3)
    p_time.add_argument("--timeout", type=float, default=60.0)
    p_time.add_argument("--seed", type=int, default=1)
    return parser


def _seed_override(seed: int) -> int:
    env = os.environ.get("RAPIDKRIG_SEED")
    return int(env) if env else seed


def _prepare(args):
    table = load_observations(args.obs)
    bbox = table.bbox
    print(f"read {len(table)} observations from {args.obs}; "
          f"bbox x [{bbox[0]:g}, {bbox[1]:g}] y [{bbox[2]:g}, {bbox[3]:g}]")
    domain = args.domain if args.domain is not None else bbox
    model = CovarianceModel(args.sigma2, args.alpha, args.nu, args.tau2)
    terms = parse_formula(args.covariates)
    x_obs = build_covariates(terms, table.locs[:, 0], table.locs[:, 1])
    grid = build_padded_grid(domain, args.grid, max(args.L, 1), table.locs)
    nodes = grid.interior_nodes()
    x_grid = build_covariates(terms, nodes[:, 0], nodes[:, 1])
    krig = fit(model, table.locs, table.z, x_obs)
    return table, model, grid, nodes, x_grid, krig, terms


def _grid_meta(args, model, terms, **extra):
    meta = {"sigma2": model.sigma2, "alpha": model.alpha, "nu": model.nu,
            "tau2": model.tau2, "covariates": "+".join(terms)}
    meta.update(extra)
    return meta


def _write_field_file(args, grid, fields, meta):
    m1, m2 = grid.interior_dims
    write_grid_output(
        args.out, nx=m1, ny=m2, x0=grid.origin[0], y0=grid.origin[1],
        dx=grid.spacing[0], dy=grid.spacing[1], fields=fields, extra=meta)
    print(f"wrote {args.out} ({', '.join(fields)}; {m1}x{m2} grid)")


def _cmd_predict(args) -> int:
    table, model, grid, nodes, x_grid, krig, terms = _prepare(args)
    m1, m2 = grid.interior_dims
    if args.method == "exact":
        field = predict_exact(krig, nodes, x_grid).reshape(m2, m1)
    else:
        setup = build_setup(model, grid, args.L, table.locs)
        field = predict_rapid(setup, krig.c, krig.beta_hat, x_grid)
    meta = _grid_meta(args, model, terms, method=args.method, L=args.L)
    _write_field_file(args, grid, {"prediction": field}, meta)
    return 0


def _cmd_simulate(args) -> int:
    seed = _seed_override(args.seed)
    table, model, grid, nodes, x_grid, krig, terms = _prepare(args)
    setup = build_setup(model, grid, args.L, table.locs)
    ensemble = generate_ensemble(krig, setup, args.draws, seed, x_grid)
    fields = {"mean": ensemble.mean_field, "se": ensemble.empirical_se}
    if args.save_draws:
        for j in range(args.draws):
            fields[f"draw{j:04d}"] = ensemble.draws[j]
    meta = _grid_meta(args, model, terms, method="rapid", L=args.L,
                      draws=args.draws, seed=seed, rng=RNG_ALGORITHM)
    _write_field_file(args, grid, fields, meta)
    return 0


def _write_csv(path, rows, header):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def _cmd_bench_error(args) -> int:
    grids = tuple(_parse_dims(g) for g in args.grids.split(","))
    config = StudyConfig(n_levels=args.n, grid_levels=grids,
                         n_reps=args.reps, seed=_seed_override(args.seed))
    result = run_error_study(config)
    rows = [(c.n, c.corr_dist, c.nu, c.tau2, c.L, f"{c.grid[0]}x{c.grid[1]}",
             f"{c.mean_abs_err:.6e}", f"{c.log10_err:.4f}", c.n_reps, c.failures)
            for c in result.cells]
    _write_csv(args.out, rows,
               ("n", "corr_dist", "nu", "tau2", "L", "grid",
                "mean_abs_err", "log10_err", "reps", "failures"))
    for name, eff in result.factor_effects.items():
        print(f"factor {name:10s}: mean dlog10 = {eff['mean_dlog10']:+.3f} "
              f"(se {eff['se']:.3f}, {eff['n_pairs']} pairs)")
    return 0


def _cmd_bench_converge(args) -> int:
    rows = run_convergence_study(nu_list=args.nu_list, L=args.L,
                                 grid_ladder=args.grids,
                                 corr_range=args.corr_range,
                                 nu_grid_cap={2.5: 140})
    out = [(r.nu, f"{r.kappa_empirical:.4f}", f"{r.kappa_theory:.4f}",
            r.n_points, r.notes) for r in rows]
    _write_csv(args.out, out,
               ("nu", "kappa_empirical", "kappa_theory", "n_points", "notes"))
    return 0


def _cmd_bench_time(args) -> int:
    grids = tuple(_parse_dims(g) for g in args.grids.split(","))
    methods = tuple(m.strip() for m in args.methods.split(","))
    rows = run_timing(ns=args.ns, grid_ladder=grids, methods=methods,
                      reps=args.reps, timeout_seconds=args.timeout,
                      seed=_seed_override(args.seed))
    out = [(r.method, r.n, f"{r.grid[0]}x{r.grid[1]}",
            f"{r.setup_seconds:.6f}", f"{r.predict_seconds:.6f}",
            r.reps, int(r.censored)) for r in rows]
    _write_csv(args.out, out,
               ("method", "n", "grid", "setup_seconds", "predict_seconds",
                "reps", "censored"))
    return 0


_COMMANDS = {
    "predict": _cmd_predict,
    "simulate": _cmd_simulate,
    "bench-error": _cmd_bench_error,
    "bench-converge": _cmd_bench_converge,
    "bench-time": _cmd_bench_time,
}


def cli_main(argv=None) -> int:
    """Run one subcommand; returns the process exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as err:
        print(str(err), file=sys.stderr)
        return 1
    except NumericError as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return 2
    except DomainError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except RapidKrigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


main = cli_main


def console_entry() -> None:
    sys.exit(cli_main())
