"""Command-line entry point: ``manipulable {solve,figure,sweep,simulate,noise,binary}``."""

from __future__ import annotations

import argparse
import re
import sys

import numpy as np

from . import formats
from .binary import BinaryParams, binary_report
from .errors import SolverError, ValidationError
from .model import (
    ModelParams,
    Policy,
    action_moments,
    best_response_beta,
    normalized_loss,
    optimal_intercept,
    welfare_breakdown,
    welfare_loss,
)
from .noise import NoisySpec, calibrate_to_target, deploy_and_evaluate, noised_dataset
from .simulation import decomposition_check, empirical_moments, empirical_welfare, ols_eta_on_x, sample_population
from .solvers import (
    constant_policy,
    fixed_point_policies,
    naive_policy,
    optimal_policy,
    rho_with_three_fixed_points,
    solve_all,
)
from .statics import SweepSpec, run_sweep

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_INTERNAL = 0, 2, 3, 4

PARAM_FLAGS = ("mu_eta", "mu_gamma", "sigma_eta", "sigma_gamma", "m")


class UsageError(Exception):
    pass


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment. Keys mirror long flags."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            sep = "=" if "=" in line else ":" if ":" in line else None
            if sep is None:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split(sep, 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _add_common(p, seed=False, workers=False):
    p.add_argument("--config", help="flat key=value file mirroring these flags; flags win")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    if seed:
        p.add_argument("--seed", type=int, default=0)
    if workers:
        p.add_argument("--workers", type=int, default=1, help="threads for sampling; output is identical for any value")


def _add_params(p, rho_type=float):
    g = p.add_argument_group("model parameters (either moments or --k)")
    g.add_argument("--mu-eta", type=float)
    g.add_argument("--mu-gamma", type=float)
    g.add_argument("--sigma-eta", type=float)
    g.add_argument("--sigma-gamma", type=float)
    g.add_argument("--m", type=float)
    g.add_argument("--k", type=float, help="shorthand: m*sigma_gamma/sigma_eta; slope quantities only")
    g.add_argument("--rho", type=rho_type, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="manipulable", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="naive, constant, fixed-point and optimal policies")
    _add_common(p)
    _add_params(p)

    p = sub.add_parser("figure", help="best-response curve (fig1) or loss decomposition (fig2) as CSV")
    _add_common(p)
    _add_params(p, rho_type=str)
    p.add_argument("--which", choices=("fig1", "fig2"), required=True)
    p.add_argument("--beta-min", type=float, default=0.0)
    p.add_argument("--beta-max", type=float)
    p.add_argument("--points", type=int)

    p = sub.add_parser("sweep", help="beta* and fixed points over a (k, rho) grid")
    _add_common(p)
    p.add_argument("--k-values", type=_float_list)
    p.add_argument("--k-range", type=_float_list, help="min,max,count (log-spaced)")
    p.add_argument("--rho-values", type=_float_list, default=[0.0])

    p = sub.add_parser("simulate", help="Monte Carlo population, OLS fit and empirical welfare")
    _add_common(p, seed=True, workers=True)
    _add_params(p)
    p.add_argument("--policy", choices=("optimal", "fixed-point", "naive", "constant"), default="optimal")
    p.add_argument("--beta", type=float, help="explicit slope (overrides --policy)")
    p.add_argument("--beta0", type=float, help="explicit intercept (default: loss-minimizing)")
    p.add_argument("--n", type=int, default=100_000)

    p = sub.add_parser("noise", help="calibrate training noise to a target slope and deploy")
    _add_common(p, seed=True, workers=True)
    _add_params(p)
    p.add_argument("--train-beta", type=float, help="default: smallest positive fixed point")
    p.add_argument("--target", type=float, help="default: optimal slope")
    p.add_argument("--n", type=int, default=0, help="sample size for the deployment check / dataset (0 skips)")

    p = sub.add_parser("binary", help="binary-action model report")
    _add_common(p)
    p.add_argument("--pi", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    return parser


_NEGATIVE_VALUE = re.compile(r"^-[\d.]")


def _glue_negative_values(argv):
    # argparse takes "-0.5,0" for a flag; rewrite "--opt -0.5,0" as "--opt=-0.5,0"
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and _NEGATIVE_VALUE.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse_args(argv):
    argv = _glue_negative_values(list(argv))
    parser = build_parser()
    path = _config_path(argv)
    command = argv[0] if argv else None
    subparsers = parser._subparsers._group_actions[0].choices
    if path is not None and command in subparsers:
        try:
            cfg = read_config(path)
        except OSError as exc:
            parser.error(f"cannot read config: {exc}")
        except UsageError as exc:
            parser.error(str(exc))
        sub = subparsers[command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known - {"config"})
        if unknown:
            parser.error(f"unknown config keys for {command}: {', '.join(unknown)}")
        sub.set_defaults(**{k: v for k, v in cfg.items() if k != "config"})
        # required options may come from the file
        for action in sub._actions:
            if action.dest in cfg:
                action.required = False
    return parser.parse_args(argv)


def params_from_args(args) -> tuple[ModelParams, bool]:
    """Returns (params, k_mode)."""
    given = {f: getattr(args, f) for f in PARAM_FLAGS if getattr(args, f) is not None}
    rho = float(args.rho)
    if args.k is not None:
        if given:
            raise ValidationError(
                "--k cannot be combined with " + ", ".join("--" + f.replace("_", "-") for f in given)
            )
        return ModelParams.from_k(args.k, rho), True
    return ModelParams(rho=rho, **given), False


def _policy_record(policy, loss, k_mode):
    return {"beta": policy.beta, "beta0": None if k_mode else policy.beta0, "loss": loss}


def cmd_solve(args):
    params, k_mode = params_from_args(args)
    sol = solve_all(params)
    d = sol.diagnostics
    record = {
        "params": {"k": params.k, "rho": params.rho} if k_mode else {**vars_params(params), "k": params.k},
        "naive": _policy_record(sol.naive, d["naive_loss"], k_mode),
        "constant": _policy_record(sol.constant, d["constant_loss"], k_mode),
        "fixed_points": [_policy_record(p, l, k_mode) for p, l in sol.fixed_points],
        "optimal": _policy_record(sol.optimal, sol.optimal_loss, k_mode),
        "diagnostics": d,
    }
    rows = [("naive", sol.naive, d["naive_loss"]), ("constant", sol.constant, d["constant_loss"])]
    rows += [(f"fixed_point[{i}]", p, l) for i, (p, l) in enumerate(sol.fixed_points)]
    rows += [("optimal", sol.optimal, sol.optimal_loss)]

    if args.out:
        if args.format == "json":
            formats.write_json(args.out, record)
        else:
            formats.write_csv(args.out, ["policy", "beta", "beta0", "loss"],
                              [(name, p.beta, None if k_mode else p.beta0, l) for name, p, l in rows])
    out = sys.stdout
    print(f"{'policy':<14} {'beta':>16} {'beta0':>16} {'loss':>16}", file=out)
    for name, p, l in rows:
        b0 = "-" if k_mode else formats.fmt(p.beta0)
        print(f"{name:<14} {formats.fmt(p.beta):>16} {b0:>16} {formats.fmt(l):>16}", file=out)
    print(f"best response at optimum: {formats.fmt(d['best_response_at_optimum'])}", file=out)
    return EXIT_OK


def vars_params(params):
    return {f: getattr(params, f) for f in ("mu_eta", "mu_gamma", "sigma_eta", "sigma_gamma", "rho", "m")}


def _emit_table(args, header, rows):
    if args.format == "csv":
        formats.write_csv(args.out, header, rows)
    else:
        formats.write_json(args.out, [dict(zip(header, r)) for r in rows])


def cmd_figure(args):
    rho_text = str(args.rho).strip().lower()
    if rho_text == "auto":
        if args.which != "fig1":
            raise ValidationError("--rho auto is only meaningful for fig1")
        tmp = argparse.Namespace(**{**vars(args), "rho": 0.0})
        base, _ = params_from_args(tmp)
        rho = rho_with_three_fixed_points(base.k)
        if rho is None:
            raise ValidationError(f"no rho in (-1, 0) gives three fixed points at k={base.k}")
        print(f"rho chosen by discriminant scan: {formats.fmt(rho)}", file=sys.stderr)
    else:
        try:
            rho = float(rho_text)
        except ValueError:
            raise ValidationError(f"--rho must be a number or 'auto', got {args.rho!r}")
    params, _ = params_from_args(argparse.Namespace(**{**vars(args), "rho": rho}))

    if args.which == "fig1":
        beta_max = 2.0 if args.beta_max is None else args.beta_max
        points = args.points or 201
    else:
        beta_max = 1.0 if args.beta_max is None else args.beta_max
        points = args.points or 101
    if points < 2 or not beta_max > args.beta_min:
        raise ValidationError("need --points >= 2 and --beta-max > --beta-min")
    grid = np.linspace(args.beta_min, beta_max, points)

    if args.which == "fig1":
        header = ["beta", "beta_hat", "diagonal"]
        rows = [(float(b), best_response_beta(params, float(b)), float(b)) for b in grid]
    else:
        header = ["beta", "info_loss", "misallocation_loss", "total"]
        rows = []
        for b in grid:
            b = float(b)
            wb = welfare_breakdown(params, Policy(b, optimal_intercept(params, b)))
            rows.append((b, wb.info_loss, wb.misallocation_loss, wb.total))
    if args.format == "json":
        formats.write_json(args.out, {"figure": args.which, "params": vars_params(params),
                                      "rows": [dict(zip(header, r)) for r in rows]})
    else:
        formats.write_csv(args.out, header, rows)
    return EXIT_OK


def cmd_sweep(args):
    if (args.k_values is None) == (args.k_range is None):
        raise ValidationError("give exactly one of --k-values or --k-range")
    if args.k_range is not None:
        if len(args.k_range) != 3 or args.k_range[2] < 1 or args.k_range[0] <= 0:
            raise ValidationError("--k-range takes min,max,count with min > 0")
        lo, hi, count = args.k_range
        ks = np.geomspace(lo, hi, int(count)).tolist()
    else:
        ks = args.k_values
    rows = run_sweep(SweepSpec(ks, args.rho_values))
    header = ["k", "rho", "beta_star", "beta_fp_list", "ratio", "loss_star", "loss_fp", "error"]
    table = [(r.k, r.rho, r.beta_star, list(r.beta_fp_list), r.ratio, r.loss_star, r.loss_fp, r.error) for r in rows]
    _emit_table(args, header, table)
    return EXIT_OK


def _named_policy(params, name):
    if name == "optimal":
        return optimal_policy(params)
    if name == "naive":
        return naive_policy(params)
    if name == "constant":
        return constant_policy(params)
    positive = [p for p in fixed_point_policies(params) if p.beta > 0]
    return positive[0]


def cmd_simulate(args):
    params, _ = params_from_args(args)
    if args.beta is not None:
        b0 = optimal_intercept(params, args.beta) if args.beta0 is None else args.beta0
        policy = Policy(args.beta, b0)
    else:
        policy = _named_policy(params, args.policy)
    sample = sample_population(params, policy, args.n, args.seed, workers=args.workers)
    if args.format == "csv":
        sample.to_csv(args.out)
        return EXIT_OK
    fit = ols_eta_on_x(sample)
    mean_x, var_x, cov = action_moments(params, policy.beta)
    record = {
        "params": vars_params(params),
        "policy": policy,
        "n": sample.n,
        "seed": sample.seed,
        "fit": fit,
        "moments": empirical_moments(sample),
        "analytic": {
            "mean_x": mean_x, "var_x": var_x, "cov_x_eta": cov,
            "best_response_beta": best_response_beta(params, policy.beta),
            "welfare_loss": welfare_loss(params, policy),
        },
        "welfare": empirical_welfare(sample, policy),
        "decomposition": _decomp_record(decomposition_check(sample, policy)),
    }
    formats.write_json(args.out, record)
    return EXIT_OK


def _decomp_record(rep):
    return {
        "info_loss": rep.info_loss,
        "misallocation_loss": rep.misallocation_loss,
        "welfare": rep.welfare,
        "identity_gap": rep.identity_gap,
        "analytic": {"info_loss": rep.analytic_info_loss,
                     "misallocation_loss": rep.analytic_misallocation_loss,
                     "total": rep.analytic_total},
    }


def cmd_noise(args):
    params, _ = params_from_args(args)
    train = args.train_beta
    if train is None:
        train = _named_policy(params, "fixed-point").beta
    target = args.target if args.target is not None else optimal_policy(params).beta
    result = calibrate_to_target(params, train, target)
    if args.format == "csv":
        if args.n < 2:
            raise ValidationError("--n >= 2 is required to write a noised dataset")
        train_policy = Policy(train, optimal_intercept(params, train))
        sample = sample_population(params, train_policy, args.n, args.seed, workers=args.workers)
        ds = noised_dataset(sample, NoisySpec(result.shift_star, result.sigma_eps_star, args.seed), workers=args.workers)
        ds.to_csv(args.out)
        return EXIT_OK
    record = {"params": vars_params(params), "calibration": result,
              "analytic_deployed_loss": welfare_loss(params, result.deployed_policy),
              "optimal_loss": params.sigma_eta**2 * normalized_loss(params.k, params.rho, optimal_policy(params).beta)}
    if args.n:
        dep = deploy_and_evaluate(params, result, args.n, args.seed, workers=args.workers)
        record["deployment"] = {"n": args.n, "seed": args.seed,
                                "empirical_loss": dep.empirical_loss,
                                "mean_allocation": dep.mean_allocation}
    formats.write_json(args.out, record)
    return EXIT_OK


def cmd_binary(args):
    rep = binary_report(BinaryParams(args.pi, args.c))
    if args.format == "json":
        formats.write_json(args.out, rep)
    else:
        header = ["policy", "y0", "y1", "delta", "welfare"]
        formats.write_csv(args.out, header, [
            (name, v["y0"], v["y1"], v["delta"], v["welfare"]) for name, v in rep["policies"].items()
        ])
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "figure": cmd_figure,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "noise": cmd_noise,
    "binary": cmd_binary,
}


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # keep tracebacks away from users
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
