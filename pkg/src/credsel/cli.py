"""Command line entry point: simulate, tune, fit-select, evaluate, reproduce.

Configuration is a flat key=value file with # comments; command line flags
override file values, and unknown keys are rejected against each command's
schema. Every run writes a manifest recording the command, the fully
resolved configuration, the seed, and the package version, which is enough
to reproduce the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .data import (Dataset, DLFixed, DLHyperGrid, LaplaceFixed, LaplaceHyper,
                   NormalFixed, NormalHyper, PriorSpec, load_csv, standardize,
                   write_csv)
from .experiments import (METHODS, ExperimentConfig, run_ase_experiment,
                          run_gamma_experiment, run_roc_experiment,
                          summarize_scores)
from .gibbs import McmcConfig, run_sampler, summarize
from .harness import SimDesign, score_ordering_support, simulate
from .path import build_problem, select_bic, solve_path
from .rng import RngState
from .tuner import (R2Target, closed_form_gamma, default_grid, derived_gamma,
                    tune_by_grid)

SCHEMAS = {
    "simulate": {"n": int, "p": int, "rho": float, "sigma2": float,
                 "reps": int, "seed": int, "out": str},
    "tune": {"data": str, "response": str, "family": str, "grid_lo": float,
             "grid_hi": float, "grid_points": int, "n_draws": int,
             "target_a": float, "target_b": float, "seed": int, "out": str},
    "fit-select": {"data": str, "response": str, "family": str, "hyper": float,
                   "n_iter": int, "n_burn": int, "thin": int, "max_size": int,
                   "seed": int, "out": str},
    "evaluate": {"ordering": str, "truth": str, "out": str},
    "reproduce": {"table": str, "reps": int, "n": int, "p": int, "rho": float,
                  "n_iter": int, "n_burn": int, "seed": int, "jobs": int,
                  "out": str},
}

DEFAULTS = {
    "simulate": {"n": 60, "p": 50, "rho": 0.5, "sigma2": 1.0, "reps": 1,
                 "seed": 0, "out": "out"},
    "tune": {"response": "y", "family": "normal", "grid_points": 50,
             "n_draws": 2000, "target_a": 1.0, "target_b": 1.0, "seed": 0,
             "out": "out"},
    "fit-select": {"response": "y", "family": "normal_hyper", "n_iter": 15000,
                   "n_burn": 5000, "thin": 1, "max_size": 30, "seed": 0,
                   "out": "out"},
    "evaluate": {"out": "out"},
    "reproduce": {"table": "t1", "reps": 20, "n": 60, "p": 50, "rho": 0.5,
                  "n_iter": 15000, "n_burn": 5000, "seed": 0, "jobs": 1,
                  "out": "out"},
}


def parse_config_file(path: str) -> dict:
    """Flat key=value lines; # starts a comment; blank lines ignored."""
    out = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def resolve_config(command: str, file_values: dict, flag_values: dict) -> dict:
    schema = SCHEMAS[command]
    cfg = dict(DEFAULTS[command])
    for source in (file_values, flag_values):
        for key, raw in source.items():
            if key not in schema:
                raise ValueError(f"unknown config key {key!r} for {command}")
            cfg[key] = schema[key](raw)
    return cfg


def write_manifest(out_dir: Path, command: str, cfg: dict) -> None:
    lines = [f"command={command}", f"version={__version__}"]
    lines += [f"{k}={cfg[k]}" for k in sorted(cfg)]
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg: dict) -> int:
    out = _out_dir(cfg)
    root = RngState(cfg["seed"])
    for rep in range(cfg["reps"]):
        design = SimDesign(n=cfg["n"], p=cfg["p"], rho=cfg["rho"],
                           sigma2=cfg["sigma2"], seed=root.substream(rep))
        d, truth = simulate(design)
        write_csv(d, out / f"data_{rep:03d}.csv")
        with (out / f"truth_{rep:03d}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "beta0"])
            for j, b in enumerate(truth.beta0):
                w.writerow([j + 1, format(b, ".17g")])
        print(f"replicate {rep}: wrote data_{rep:03d}.csv")
    write_manifest(out, "simulate", cfg)
    return 0


def cmd_tune(cfg: dict) -> int:
    out = _out_dir(cfg)
    d = standardize(load_csv(cfg["data"], cfg["response"]))
    family = cfg["family"]
    target = R2Target(cfg["target_a"], cfg["target_b"])
    if "grid_lo" in cfg and "grid_hi" in cfg:
        if family == "dl" and not (0 < cfg["grid_lo"] <= cfg["grid_hi"] <= 0.5):
            raise ValueError("DL grid must lie in (0, 1/2]")
        grid = np.geomspace(cfg["grid_lo"], cfg["grid_hi"], cfg["grid_points"])
    else:
        grid = default_grid(family, d.n, d.p, cfg["grid_points"])
    result = tune_by_grid(d, family, grid, target, cfg["n_draws"],
                          RngState(cfg["seed"]))
    order = np.argsort([g[1] for g in result.grid], kind="stable")
    rank = np.empty(len(result.grid), dtype=int)
    rank[order] = np.arange(1, len(result.grid) + 1)
    with (out / "tune_report.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hypervalue", "ks_statistic", "rank"])
        for (h, ks), rk in zip(result.grid, rank):
            w.writerow([format(h, ".17g"), format(ks, ".17g"), rk])
    extra = ""
    if family == "normal":
        gamma = derived_gamma(d, target)
        (out / "closed_form.csv").write_text(
            "closed_form_gamma\n" + format(gamma, ".17g") + "\n")
        extra = f", closed form gamma {gamma:.4g}"
    print(f"tuned {family}: {result.hyperparameter:.6g} "
          f"(ks {result.ks_statistic:.4f}{extra})")
    write_manifest(out, "tune", cfg)
    return 0


def _prior_from_config(cfg: dict) -> PriorSpec:
    family = cfg["family"]
    if family in ("normal", "laplace", "dl") and "hyper" not in cfg:
        raise ValueError(f"family {family!r} needs hyper=<value>")
    if family == "normal":
        return PriorSpec(NormalFixed(cfg["hyper"]))
    if family == "laplace":
        return PriorSpec(LaplaceFixed(cfg["hyper"]))
    if family == "dl":
        return PriorSpec(DLFixed(cfg["hyper"]))
    if family == "normal_hyper":
        return PriorSpec(NormalHyper())
    if family == "laplace_hyper":
        return PriorSpec(LaplaceHyper())
    raise ValueError(f"unknown family {family!r}")


def cmd_fit_select(cfg: dict) -> int:
    out = _out_dir(cfg)
    d = standardize(load_csv(cfg["data"], cfg["response"]))
    family = cfg["family"]
    if family == "dl_hyper":
        prior = PriorSpec(DLHyperGrid(1.0 / max(d.n, d.p), 0.5, 1000))
    else:
        prior = _prior_from_config(cfg)
    mcmc = McmcConfig(n_iter=cfg["n_iter"], n_burn=cfg["n_burn"],
                      thin=cfg["thin"], seed=cfg["seed"])
    draws = run_sampler(d, prior, mcmc)
    summary = summarize(draws)
    np.savetxt(out / "posterior_mean.csv", summary.beta_mean[np.newaxis, :],
               delimiter=",", fmt="%.17g")
    np.savetxt(out / "posterior_cov.csv", summary.beta_cov,
               delimiter=",", fmt="%.17g")
    path = solve_path(build_problem(summary))
    export_path_csv(path, out / "path.csv")
    choice = select_bic(path, d, max_size=cfg["max_size"])
    with (out / "selected.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "coefficient"])
        for j in choice.active:
            w.writerow([j + 1, format(choice.coef[j], ".17g")])
    print(f"selected {len(choice.active)} variables (BIC {choice.bic:.3f})")
    write_manifest(out, "fit-select", cfg)
    return 0


def export_path_csv(path, file) -> None:
    with Path(file).open("w", newline="") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        w.writerow(["step", "lambda", "entering_index", "active_size", "coefficients"])
        for i, step in enumerate(path.steps):
            entering = "" if step.index is None or step.event != "enter" \
                else step.index + 1
            sparse = " ".join(f"{j + 1}:{step.beta[j]:.10g}"
                              for j in np.flatnonzero(step.beta))
            w.writerow([i, format(step.lam, ".17g"), entering,
                        len(step.active), sparse])


def cmd_evaluate(cfg: dict) -> int:
    out = _out_dir(cfg)
    with Path(cfg["truth"]).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    beta0 = np.array([float(r["beta0"]) for r in rows])
    support = [int(r["index"]) - 1 for r in rows if float(r["beta0"]) != 0.0]
    p = beta0.size
    with Path(cfg["ordering"]).open(newline="") as fh:
        steps = list(csv.DictReader(fh))
    order = []
    for r in steps:
        if r["entering_index"]:
            j = int(r["entering_index"]) - 1
            if j not in order:
                order.append(j)
    curves = score_ordering_support(order, support, p)
    with (out / "curves.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "step", "x", "y"])
        for i, (x, y) in enumerate(curves.roc_points):
            w.writerow(["roc", i, format(x, ".10g"), format(y, ".10g")])
        for i, (x, y) in enumerate(curves.prc_points):
            w.writerow(["prc", i, format(x, ".10g"), format(y, ".10g")])
    (out / "areas.csv").write_text(
        "roc_area,prc_area,partial\n"
        f"{curves.roc_area:.10g},{curves.prc_area:.10g},{int(curves.partial)}\n")
    print(f"roc area {curves.roc_area:.4f}, prc area {curves.prc_area:.4f}"
          + (" (partial)" if curves.partial else ""))
    write_manifest(out, "evaluate", cfg)
    return 0


def cmd_reproduce(cfg: dict) -> int:
    out = _out_dir(cfg)
    table = cfg["table"]
    if table not in ("t1", "t2", "t3", "t4", "t5"):
        raise ValueError("table must be one of t1..t5")
    exp = ExperimentConfig(n=cfg["n"], p=cfg["p"], rho=cfg["rho"],
                           n_reps=cfg["reps"], n_iter=cfg["n_iter"],
                           n_burn=cfg["n_burn"], seed=cfg["seed"],
                           jobs=cfg["jobs"])
    if table in ("t1", "t2", "t3"):
        if table == "t2" and cfg["p"] == 50:
            exp = ExperimentConfig(**{**exp.__dict__, "p": 500})
        if table == "t3" and cfg["p"] == 50:
            exp = ExperimentConfig(**{**exp.__dict__, "p": 1000})
        scores = run_roc_experiment(exp)
        with (out / "results.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "replicate", "roc_area", "prc_area", "partial_flag"])
            for s in scores:
                w.writerow([s.method, s.replicate, format(s.roc_area, ".10g"),
                            format(s.prc_area, ".10g"), int(s.partial)])
        summary = summarize_scores(scores)
        with (out / "summary.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "roc_mean", "roc_se", "prc_mean", "prc_se"])
            for method, row in summary.items():
                w.writerow([method, *(format(row[k], ".6g") for k in
                                     ("roc_mean", "roc_se", "prc_mean", "prc_se"))])
        for method, row in summary.items():
            print(f"{method}: roc {row['roc_mean']:.3f} ({row['roc_se']:.4f}) "
                  f"prc {row['prc_mean']:.3f} ({row['prc_se']:.4f})")
    elif table == "t4":
        result = run_ase_experiment(exp)
        with (out / "summary.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["concentration", "ase_mean", "ase_se"])
            for label, row in result.items():
                w.writerow([label, format(row["mean"], ".6g"),
                            format(row["se"], ".6g")])
        for label, row in result.items():
            print(f"a={label}: {row['mean']:.3f} ({row['se']:.4f})")
    else:
        result = run_gamma_experiment(exp)
        with (out / "summary.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["column", "gamma_mean", "gamma_se"])
            for label, row in result.items():
                w.writerow([label, format(row["mean"], ".6g"),
                            format(row["se"], ".6g")])
        for label, row in result.items():
            print(f"{label}: {row['mean']:.2f} ({row['se']:.3f})")
    write_manifest(out, "reproduce", cfg)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "tune": cmd_tune,
    "fit-select": cmd_fit_select,
    "evaluate": cmd_evaluate,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="credsel",
        description="Bayesian variable selection via penalized credible regions")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--jobs", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("overrides", nargs="*", metavar="key=value")
    args = parser.parse_args(argv)

    file_values = parse_config_file(args.config) if args.config else {}
    flag_values = {}
    for item in args.overrides:
        if "=" not in item:
            parser.error(f"override must look like key=value: {item!r}")
        key, value = item.split("=", 1)
        flag_values[key] = value
    if args.seed is not None:
        flag_values["seed"] = args.seed
    if args.jobs is not None:
        flag_values["jobs"] = args.jobs
    if args.out is not None:
        flag_values["out"] = args.out

    try:
        cfg = resolve_config(args.command, file_values, flag_values)
        return COMMANDS[args.command](cfg)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
