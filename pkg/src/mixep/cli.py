"""Command-line front end: simulate / fit / bench.

All floating-point output is serialized with shortest round-trip ``repr``,
so repeated runs with identical flags produce byte-identical files.
Replicate substreams inside ``bench`` come from
``SeedSequence((master_seed, replicate_index))``; replicate r of
``bench --seed S`` equals ``simulate --seed sim_r`` + ``fit --seed fit_r``
with ``(sim_r, fit_r) = replicate_seeds(S, r)``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .epd import unit_variance_eta
from .gem import (
    AllComponentsPrunedError,
    DegenerateModelError,
    FitConfig,
    SingularSystemError,
    fit_lambda_grid,
    gem_fit,
)
from .metrics import aggregate, align_labels, coefficient_names
from .model import Dataset, MixtureModel
from .simgen import CASES, SimSpec, generate, replicate_seeds

DEFAULT_LAMBDA_GRID = (0.0, 0.005, 0.01, 0.02, 0.05)

SIM_DEFAULTS = {"case": None, "n": 400, "seed": 0, "out": "."}
FIT_DEFAULTS = {
    "data": None, "out": ".", "seed": 0, "k_max": 2, "lam": None,
    "lambda_grid": None, "epsilon": 1e-5, "p": None, "p_grid": None,
    "max_iter": 500, "tol": 1e-8, "starts": 10, "residual_floor": 1e-10,
    "intercept": True, "init": None,
}
BENCH_DEFAULTS = {
    "case": None, "n": 400, "seed": 0, "reps": 50, "out": ".", "k_max": 2,
    "lam": None, "lambda_grid": None, "epsilon": 1e-5, "p": None,
    "p_grid": None, "max_iter": 500, "tol": 1e-8, "starts": 10,
    "residual_floor": 1e-10, "init": "random",
}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _parse_grid(text):
    try:
        values = tuple(float(v) for v in str(text).split(",") if v.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad numeric list: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError(f"empty numeric list: {text!r}")
    return values


def _add_fit_flags(sp):
    sp.add_argument("--seed", type=int, help="fit seed (initialization substream)")
    sp.add_argument("--k-max", dest="k_max", type=int, help="initial component count")
    sp.add_argument("--lambda", dest="lam", type=float, help="penalty strength")
    sp.add_argument("--lambda-grid", dest="lambda_grid", type=_parse_grid,
                    help="comma list of penalty strengths, selected by BIC")
    sp.add_argument("--epsilon", type=float, help="penalty offset")
    sp.add_argument("--p", type=float, help="fixed shape exponent")
    sp.add_argument("--p-grid", dest="p_grid", type=_parse_grid,
                    help="comma list of shape exponents, selected by objective")
    sp.add_argument("--max-iter", dest="max_iter", type=int)
    sp.add_argument("--tol", type=float, help="relative objective change threshold")
    sp.add_argument("--starts", type=int, help="random initializations")
    sp.add_argument("--residual-floor", dest="residual_floor", type=float)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixep",
        description="Robust mixture-of-regressions with exponential power errors")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", argument_default=argparse.SUPPRESS,
                        help="draw a benchmark scenario dataset")
    sp.add_argument("--case", choices=CASES)
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("-o", "--out", help="output directory")
    sp.add_argument("--config", help="JSON file supplying any flag")

    sp = sub.add_parser("fit", argument_default=argparse.SUPPRESS,
                        help="fit a CSV dataset")
    sp.add_argument("--data", help="input CSV with a y column")
    sp.add_argument("-o", "--out", help="output directory")
    sp.add_argument("--intercept", action="store_true")
    sp.add_argument("--no-intercept", dest="intercept", action="store_false")
    sp.add_argument("--init", help="model JSON to warm-start from")
    sp.add_argument("--config", help="JSON file supplying any flag")
    _add_fit_flags(sp)

    sp = sub.add_parser("bench", argument_default=argparse.SUPPRESS,
                        help="replicated generate/fit/score benchmark")
    sp.add_argument("--case", choices=CASES)
    sp.add_argument("--n", type=int)
    sp.add_argument("--reps", type=int, help="replicate count")
    sp.add_argument("-o", "--out", help="output directory")
    sp.add_argument("--init", choices=("random", "truth"),
                    help="fit initialization: random starts or the generating parameters")
    sp.add_argument("--config", help="JSON file supplying any flag")
    _add_fit_flags(sp)
    return parser


def _merge_options(ns, defaults):
    given = {k: v for k, v in vars(ns).items() if k != "command"}
    merged = dict(defaults)
    config_path = given.pop("config", None)
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object")
        for key, value in loaded.items():
            dest = {"lambda": "lam", "k-max": "k_max"}.get(key, key.replace("-", "_"))
            if dest not in merged:
                raise ValueError(f"unknown config key: {key!r}")
            if dest in ("lambda_grid", "p_grid") and isinstance(value, (list, tuple)):
                value = tuple(float(v) for v in value)
            merged[dest] = value
    merged.update(given)
    return merged


def _fit_config(opts, k_max=None) -> FitConfig:
    if opts.get("p") is not None and opts.get("p_grid") is not None:
        raise ValueError("--p and --p-grid are mutually exclusive")
    if opts.get("lam") is not None and opts.get("lambda_grid") is not None:
        raise ValueError("--lambda and --lambda-grid are mutually exclusive")
    p_policy = opts["p"] if opts.get("p") is not None else (
        opts["p_grid"] if opts.get("p_grid") is not None else (1.0, 1.5, 2.0))
    return FitConfig(
        k_max=int(k_max if k_max is not None else opts["k_max"]),
        lam=float(opts["lam"]) if opts.get("lam") is not None else 0.0,
        epsilon=float(opts["epsilon"]),
        p_policy=p_policy,
        max_iter=int(opts["max_iter"]),
        tol=float(opts["tol"]),
        n_starts=int(opts["starts"]),
        residual_floor=float(opts["residual_floor"]),
        seed=int(opts["seed"]),
    )


def _sim_rows(draw):
    x = draw.data.x
    for i in range(draw.data.n):
        yield (draw.data.y[i], x[i, 1], x[i, 2], int(draw.labels[i]),
               bool(draw.outlier_mask[i]))


def cmd_simulate(opts) -> int:
    if opts["case"] is None:
        print("simulate: --case is required", file=sys.stderr)
        return 2
    spec = SimSpec(case=opts["case"], n=int(opts["n"]), seed=int(opts["seed"]))
    draw = generate(spec)
    try:
        os.makedirs(opts["out"], exist_ok=True)
        _write_csv(os.path.join(opts["out"], "data.csv"),
                   ["y", "x1", "x2", "label", "outlier"], _sim_rows(draw))
        _write_json(os.path.join(opts["out"], "truth.json"), {
            "spec": {"case": spec.case, "n": spec.n, "seed": spec.seed},
            "truth": draw.truth.to_dict(),
        })
    except OSError as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return 3
    return 0


def _run_single_fit(data, cfg, opts, init_model):
    if opts.get("lambda_grid") is not None:
        result, lam = fit_lambda_grid(data, cfg, opts["lambda_grid"], init_model=init_model)
        return result, lam
    return gem_fit(data, cfg, init_model=init_model), cfg.lam


def cmd_fit(opts) -> int:
    if opts["data"] is None:
        print("fit: --data is required", file=sys.stderr)
        return 2
    try:
        data = Dataset.from_csv(opts["data"], intercept=bool(opts["intercept"]))
        cfg = _fit_config(opts)
        init_model = None
        if opts.get("init"):
            with open(opts["init"], encoding="utf-8") as fh:
                init_model = MixtureModel.from_json(fh.read())
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"fit: {exc}", file=sys.stderr)
        return 2
    try:
        result, lam = _run_single_fit(data, cfg, opts, init_model)
    except (AllComponentsPrunedError, DegenerateModelError, SingularSystemError) as exc:
        print(f"fit: degenerate fit: {exc}", file=sys.stderr)
        return 4
    os.makedirs(opts["out"], exist_ok=True)
    with open(os.path.join(opts["out"], "model.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(result.model.to_json())
        fh.write("\n")
    gamma = result.responsibilities.gamma
    _write_csv(os.path.join(opts["out"], "responsibilities.csv"),
               [f"gamma_{k + 1}" for k in range(result.model.k)], gamma)
    _write_csv(os.path.join(opts["out"], "trace.csv"), ["iteration", "objective"],
               [(i, v) for i, v in enumerate(result.trace)])
    print(f"K={result.model.k} objective={result.objective!r} lambda={lam!r} "
          f"iterations={result.iterations} converged={result.converged}")
    return 0 if result.converged else 1


def _bench_replicate(case, n, master_seed, rep, opts):
    """Returns (aligned K x d estimates, None) or (None, reason)."""
    sim_seed, fit_seed = replicate_seeds(master_seed, rep)
    draw = generate(SimSpec(case=case, n=n, seed=sim_seed))
    cfg = replace(_fit_config(opts), seed=fit_seed)
    init_model = None
    if opts["init"] == "truth":
        pcand = cfg.p_candidates()
        if len(pcand) != 1:
            raise ValueError("--init truth requires a fixed --p")
        p = pcand[0]
        truth = draw.truth
        init_model = MixtureModel.from_arrays(
            truth.pis, truth.betas,
            np.full(truth.k, unit_variance_eta(p)), np.full(truth.k, p))
    try:
        result, _ = _run_single_fit(draw.data, cfg, opts, init_model)
    except (AllComponentsPrunedError, DegenerateModelError, SingularSystemError) as exc:
        return None, f"degenerate: {exc}"
    if not result.converged:
        return None, "not converged"
    if result.model.k != draw.truth.k:
        return None, f"K={result.model.k}"
    perm = align_labels(list(result.model.betas), list(draw.truth.betas))
    aligned = result.model.betas[list(perm)]
    return aligned, None


def cmd_bench(opts) -> int:
    if opts["case"] is None:
        print("bench: --case is required", file=sys.stderr)
        return 2
    reps = int(opts["reps"])
    if reps < 1:
        print("bench: --reps must be >= 1", file=sys.stderr)
        return 2
    if opts.get("lam") is None and opts.get("lambda_grid") is None:
        opts = dict(opts)
        opts["lambda_grid"] = DEFAULT_LAMBDA_GRID
    master_seed = int(opts["seed"])
    n = int(opts["n"])
    aligned_sets = []
    failures = []
    truth = None
    for rep in range(reps):
        if truth is None:
            truth = generate(SimSpec(case=opts["case"], n=n,
                                     seed=replicate_seeds(master_seed, rep)[0])).truth
        aligned, reason = _bench_replicate(opts["case"], n, master_seed, rep, opts)
        if aligned is None:
            failures.append({"replicate": rep, "reason": reason})
        else:
            aligned_sets.append(aligned)
    if not aligned_sets:
        print("bench: every replicate failed", file=sys.stderr)
        return 5
    names = coefficient_names(truth.k, truth.d)
    report = aggregate(aligned_sets, truth.betas, failure_count=len(failures), names=names)
    os.makedirs(opts["out"], exist_ok=True)
    _write_csv(os.path.join(opts["out"], "report.csv"),
               ["coefficient", "truth", "mse", "bias"],
               [(name, t, m, b) for name, t, m, b in
                zip(report.coefficients, report.truth, report.mse, report.bias)])
    doc = report.to_dict()
    doc["failures"] = failures
    doc["case"] = opts["case"]
    doc["n"] = n
    doc["seed"] = master_seed
    _write_json(os.path.join(opts["out"], "report.json"), doc)
    print(f"replicates={reps} ok={report.replicate_count} failures={report.failure_count}")
    return 0 if report.replicate_count >= 0.8 * reps else 5


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.command == "simulate":
            return cmd_simulate(_merge_options(ns, SIM_DEFAULTS))
        if ns.command == "fit":
            return cmd_fit(_merge_options(ns, FIT_DEFAULTS))
        return cmd_bench(_merge_options(ns, BENCH_DEFAULTS))
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"mixep: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
