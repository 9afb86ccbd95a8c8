"""Command-line front end: generate / train / eval / tune / theory.

Every command reads a JSON config, writes its outputs under an output
directory together with a manifest echoing the fully resolved config, and
uses write-temp-then-rename for all files.  Exit codes: 0 success, 2 config
error, 3 data error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import traceback

from .dataset import DatasetError, load_csv, load_suite, save_suite
from .evaluation import SweepResult, sweep, tune
from .model import (
    DgbrModel,
    HyperParams,
    TrainingDataError,
    fit_dgbr,
    fit_dlr,
    fit_gbr,
    fit_lr,
)
from .synthetic import GenSpec, GenerationError, make_suite
from .theory import BoundInputs, expected_alpha, risk_bound

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

FITTERS = {
    "lr": lambda d, hyper: fit_lr(d, hyper.lambda4, hyper.lambda5),
    "dlr": fit_dlr,
    "gbr": fit_gbr,
    "dgbr": fit_dgbr,
}


class ConfigError(ValueError):
    pass


def _atomic_write(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_manifest(out_dir, command, config):
    _atomic_write(
        os.path.join(out_dir, "manifest.json"),
        json.dumps({"command": command, "config": config}, indent=2, sort_keys=True),
    )


def _load_config(args):
    config = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if getattr(args, "seed", None) is not None:
        config["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        config["out"] = args.out
    if "out" not in config:
        raise ConfigError("an output directory is required (config 'out' or --out)")
    return config


def cmd_generate(args) -> int:
    config = _load_config(args)
    try:
        spec = GenSpec.from_dict(
            {**config.get("gen", {}), **({"seed": config["seed"]} if "seed" in config else {})}
        )
    except (DatasetError, TypeError) as exc:
        raise ConfigError(f"bad generation spec: {exc}") from exc
    rates = config.get("test_rates", [0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85])
    suite = make_suite(spec, rates)
    out_dir = config["out"]
    os.makedirs(out_dir, exist_ok=True)
    save_suite(suite, out_dir)
    _write_manifest(out_dir, "generate", {**config, "gen": spec.to_dict(), "test_rates": rates})
    print(f"wrote suite with {len(suite.tests)} test environments to {out_dir}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load_config(args)
    method = config.get("method", "dgbr")
    if method not in FITTERS:
        raise ConfigError(f"unknown method {method!r}; choose from {sorted(FITTERS)}")
    hyper_cfg = dict(config.get("hyper", {}))
    if "seed" in config:
        hyper_cfg.setdefault("seed", config["seed"])
    try:
        hyper = HyperParams.from_dict(hyper_cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad hyperparameters: {exc}") from exc
    if "suite" in config:
        train = load_suite(config["suite"]).train
    elif "train_csv" in config:
        train = load_csv(config["train_csv"])
    else:
        raise ConfigError("config must name 'suite' or 'train_csv'")
    model, trace = FITTERS[method](train, hyper)
    out_dir = config["out"]
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(os.path.join(out_dir, "model.json"), model.to_json())
    _atomic_write(os.path.join(out_dir, "trace.csv"), trace.to_csv())
    _write_manifest(out_dir, "train", {**config, "hyper": hyper.to_dict(), "method": method})
    print(f"trained {method}: final objective {trace.l_mix[-1]:.6g} "
          f"({len(trace.records)} outer iterations)")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _load_config(args)
    if "suite" not in config or "model" not in config:
        raise ConfigError("eval config must name 'suite' and 'model'")
    suite = load_suite(config["suite"])
    with open(config["model"], encoding="utf-8") as fh:
        model = DgbrModel.from_json(fh.read())
    try:
        result = sweep(model, suite)
    except ValueError as exc:
        raise DatasetError(str(exc)) from exc
    out_dir = config["out"]
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(os.path.join(out_dir, "sweep.csv"), result.to_csv())
    _atomic_write(os.path.join(out_dir, "sweep.json"), result.to_json())
    _write_manifest(out_dir, "eval", config)
    print(f"average_error={result.average_error:.6g} "
          f"stability_error={result.stability_error:.6g}")
    return EXIT_OK


def cmd_tune(args) -> int:
    config = _load_config(args)
    method = config.get("method", "gbr")
    if method not in FITTERS:
        raise ConfigError(f"unknown method {method!r}")
    if "suite" in config:
        train = load_suite(config["suite"]).train
    elif "train_csv" in config:
        train = load_csv(config["train_csv"])
    else:
        raise ConfigError("config must name 'suite' or 'train_csv'")
    grid_cfg = config.get("grid")
    if not grid_cfg:
        raise ConfigError("tune config must provide a non-empty 'grid'")
    try:
        grid = [HyperParams.from_dict(g) for g in grid_cfg]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid entry: {exc}") from exc
    best, table = tune(train, grid, FITTERS[method], seed=config.get("seed", 0))
    out_dir = config["out"]
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for row in table:
        entry = {k: v for k, v in row.items() if k != "hyper"}
        entry["hyper"] = row["hyper"].to_dict()
        rows.append(entry)
    _atomic_write(
        os.path.join(out_dir, "tuning.json"),
        json.dumps({"best": best.to_dict(), "table": rows}, indent=2, sort_keys=True),
    )
    _write_manifest(out_dir, "tune", {**config, "method": method})
    print(f"best grid point: {best.to_dict()}")
    return EXIT_OK


def cmd_theory(args) -> int:
    config = _load_config(args)
    out_dir = config["out"]
    os.makedirs(out_dir, exist_ok=True)
    grid = config.get("expected_alpha_grid")
    if grid:
        ns = grid.get("n", [10, 100, 1000, 10000])
        ps = grid.get("p", [3, 5, 7, 9, 11])
        path = os.path.join(out_dir, "expected_alpha.csv")
        tmp = f"{path}.tmp"
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "p", "expected_alpha"])
            for p in ps:
                for n in ns:
                    writer.writerow([n, p, expected_alpha(int(n), int(p))])
        os.replace(tmp, path)
        print(f"wrote expected-imbalance grid to {path}")
    bound_cfg = config.get("bound")
    if bound_cfg:
        b = BoundInputs(
            n=bound_cfg["n"], p=bound_cfg["p"],
            layer_sizes=tuple(bound_cfg["layer_sizes"]),
            lambda4=bound_cfg["lambda4"], lambda5=bound_cfg["lambda5"],
            lambda7=bound_cfg["lambda7"],
            bias_caps=tuple(bound_cfg["bias_caps"]),
            delta=bound_cfg["delta"], loss_sup=bound_cfg["loss_sup"],
            epsilon_l1=bound_cfg["epsilon_l1"],
        )
        result = risk_bound(b)
        _atomic_write(
            os.path.join(out_dir, "bound.json"),
            json.dumps(result.to_dict(), indent=2, sort_keys=True),
        )
        print(f"risk bound total {result.total:.6g}")
    if not grid and not bound_cfg:
        raise ConfigError("theory config must provide 'expected_alpha_grid' or 'bound'")
    _write_manifest(out_dir, "theory", config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablebal",
        description="Balancing-weighted regression for stable prediction",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("generate", cmd_generate), ("train", cmd_train), ("eval", cmd_eval),
        ("tune", cmd_tune), ("theory", cmd_theory),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--out", help="override output directory")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, KeyError, TypeError) as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, TrainingDataError, GenerationError, FileNotFoundError) as exc:
        print(f"data-error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        print(f"runtime-error: {exc}", file=sys.stderr)
        traceback.print_exc()
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
