"""Command-line entry point: ``invlab {datagen,forecast,trees,dqn,benchmark}``.

Every run writes ``run_config.json`` holding the effective settings; passing
that file back with ``--config`` reproduces the run.  Exit codes: 0 success,
1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import copy
import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from invlab import envs, ingest, pipelines
from invlab.dqn import save_weights
from invlab.ensembles import SearchSpace, save_model
from invlab.errors import DataError, NumericError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
PRESET_CHOICES = {"lost-sales": "lost_sales", "dual-sourcing": "dual_sourcing", "multi-echelon": "multi_echelon"}

DEFAULTS = {
    "seed": 42,
    "preset": "lost-sales",
    "input": None,
    "parallel": False,
    "plot_script": False,
    "synth": {k: v for k, v in ingest.SynthConfig().to_dict().items() if k != "seed"},
    "forecast": {"horizon": 180, "threshold": None, "forecaster": {}},
    "trees": {
        "n_iter": 5,
        "cv_folds": 3,
        "learning_curve_folds": 5,
        "test_fraction": 0.2,
        "min_order_threshold": 10.0,
        "search_space": {},
    },
    "dqn": {"tuned": False, "agent": {}, "costs": {}},
    "benchmark": {"test_fraction": 0.2, "n_iter": 3, "cv_folds": 3},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise UsageError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and base[key] and isinstance(value, dict):
            out[key] = _merge(base[key], value, f"{path}{key}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def build_config(args: argparse.Namespace) -> dict:
    """Defaults, then the ``--config`` file, then explicit flags."""
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise UsageError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {args.config} is not valid JSON: {exc}") from exc
        loaded.pop("command", None)
        cfg = _merge(cfg, loaded)
    flags = {
        ("seed",): args.seed,
        ("preset",): args.preset,
        ("input",): args.input,
        ("parallel",): True if args.parallel else None,
        ("plot_script",): True if args.plot_script else None,
        ("synth", "n_days"): args.days,
        ("forecast", "horizon"): getattr(args, "horizon", None),
        ("forecast", "threshold"): getattr(args, "threshold", None),
        ("trees", "n_iter"): getattr(args, "n_iter", None),
        ("dqn", "tuned"): True if getattr(args, "tuned", False) else None,
    }
    for keys, value in flags.items():
        if value is None:
            continue
        target = cfg
        for k in keys[:-1]:
            target = target[k]
        target[keys[-1]] = value
    episodes = getattr(args, "episodes", None)
    if episodes is not None:
        cfg["dqn"]["agent"]["episodes"] = episodes
    if cfg["preset"] not in PRESET_CHOICES:
        raise UsageError(f"preset must be one of {sorted(PRESET_CHOICES)}")
    if args.command == "forecast" and int(cfg["forecast"]["horizon"]) < 1:
        raise UsageError("--horizon must be at least 1 day")
    return cfg


def synth_config(cfg: dict) -> ingest.SynthConfig:
    try:
        return ingest.SynthConfig.from_dict({**cfg["synth"], "seed": cfg["seed"]})
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def load_frame(cfg: dict, kind: str) -> pd.DataFrame:
    """Cleaned, feature-engineered frame from ``--input`` or the synthetic generator."""
    if cfg["input"]:
        raw = ingest.load_dataset(cfg["input"])
    else:
        raw = ingest.generate_synthetic(synth_config(cfg))
    return ingest.engineer_features(ingest.clean(raw), kind, seed=cfg["seed"])


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------


class Outputs:
    """Tracks every file a command writes under the output directory."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.written: list[str] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        if name not in self.written:
            self.written.append(name)
        return p

    def csv(self, name: str, frame: pd.DataFrame) -> None:
        frame.to_csv(self.path(name), index=False, date_format="%Y-%m-%d %H:%M:%S")

    def json(self, name: str, data) -> None:
        self.path(name).write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n",
                                   encoding="utf-8")

    def text(self, name: str, body: str) -> None:
        self.path(name).write_text(body, encoding="utf-8")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (pd.Timestamp, pd.Timedelta)):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Outputs, exclude=("manifest.json", "timings.json")) -> dict:
    manifest = {name: sha256_file(out.root / name) for name in sorted(out.written) if name not in exclude}
    out.json("manifest.json", manifest)
    return manifest


PLOT_RECIPE = '''"""Plot the CSV series in this directory (needs matplotlib)."""
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

here = Path(__file__).parent
for path in sorted(here.glob("**/*.csv")):
    frame = pd.read_csv(path)
    numeric = frame.select_dtypes("number")
    if numeric.shape[1] < 1 or len(frame) < 2:
        continue
    x = frame.columns[0]
    ax = frame.plot(x=x, y=[c for c in numeric.columns if c != x][:4], figsize=(8, 4), title=path.stem)
    ax.figure.tight_layout()
    ax.figure.savefig(path.with_suffix(".png"))
    plt.close(ax.figure)
'''


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_datagen(args, cfg: dict) -> int:
    config = synth_config(cfg)
    frame = ingest.generate_synthetic(config)
    target = Path(args.output) if args.output else Path(args.output_dir) / "data.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    ingest.write_csv(frame, target)
    print(f"wrote {len(frame)} rows to {target}")
    return EXIT_OK


def _n_jobs(cfg: dict) -> int:
    return 4 if cfg["parallel"] else 1


def cmd_forecast(args, cfg: dict, out: Outputs) -> int:
    kind = PRESET_CHOICES[cfg["preset"]]
    frame = load_frame(cfg, kind)
    fc = cfg["forecast"]
    res = pipelines.run_forecast(frame, kind, int(fc["horizon"]), fc["threshold"], fc["forecaster"], _n_jobs(cfg))
    out.csv("forecast.csv", res.forecast)
    metrics = res.cv_metrics.assign(horizon=res.cv_metrics["horizon"].astype(str))
    out.csv("cv_metrics.csv", metrics)
    out.csv("cv_records.csv", res.cv_records)
    for name in ("trend", "weekly", "yearly", "daily", "regressors"):
        out.csv(f"components/{name}.csv", res.components[["ds", name]])
    if res.decisions is not None:
        out.csv("decisions.csv", res.decisions)
    print(f"forecast: {len(res.forecast)} rows, {res.cv_records['cutoff'].nunique()} CV cutoffs -> {out.root}")
    return EXIT_OK


def cmd_trees(args, cfg: dict, out: Outputs) -> int:
    kind = PRESET_CHOICES[cfg["preset"]]
    frame = load_frame(cfg, kind)
    t = cfg["trees"]
    try:
        space = SearchSpace(**{k: tuple(v) for k, v in t["search_space"].items()})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad search_space: {exc}") from exc
    res = pipelines.run_trees(
        frame, kind, seed=cfg["seed"], n_iter=int(t["n_iter"]), cv_folds=int(t["cv_folds"]),
        learning_curve_folds=int(t["learning_curve_folds"]), test_fraction=float(t["test_fraction"]),
        space=space, min_order_threshold=float(t["min_order_threshold"]), n_jobs=_n_jobs(cfg),
    )
    out.csv("metrics.csv", res.metrics)
    out.json("search.json", res.search)
    out.csv("feature_importance.csv", res.importance)
    out.csv("predictions.csv", res.predictions)
    for model_kind, model in res.models.items():
        save_model(model, out.path(f"{model_kind}_model.json"))
        out.csv(f"learning_curve_{model_kind}.csv", res.learning_curves[model_kind])
        hist, qq = res.diagnostics[model_kind]
        out.csv(f"residual_histogram_{model_kind}.csv", hist)
        out.csv(f"residual_qq_{model_kind}.csv", qq)
    if res.orders is not None:
        out.csv("orders.csv", res.orders)
    print(res.metrics.to_string(index=False))
    return EXIT_OK


def _costs(kind: str, overrides: dict) -> envs.CostParams:
    base = envs.CostParams.preset(kind)
    try:
        return dataclasses.replace(base, **{k: tuple(v) if isinstance(v, list) else v for k, v in overrides.items()})
    except TypeError as exc:
        raise UsageError(f"bad costs section: {exc}") from exc


def cmd_dqn(args, cfg: dict, out: Outputs) -> int:
    kind = PRESET_CHOICES[cfg["preset"]]
    frame = load_frame(cfg, kind)
    d = cfg["dqn"]
    agent, config, train_log, trace = pipelines.run_dqn(
        frame, kind, seed=cfg["seed"], tuned=bool(d["tuned"]), agent_overrides=d["agent"],
        costs=_costs(kind, d["costs"]),
    )
    out.csv("train_log.csv", train_log.to_frame())
    save_weights(agent.network, out.path("weights.json"))
    out.csv("episode_trace.csv", trace)
    out.json("agent_config.json", config.to_dict())
    print(f"dqn: {len(train_log.total_rewards)} episodes, epsilon_decay {config.epsilon_decay}, "
          f"final epsilon {train_log.epsilons[-1]:.4g}")
    return EXIT_OK


def cmd_benchmark(args, cfg: dict, out: Outputs) -> int:
    kind = PRESET_CHOICES[cfg["preset"]]
    frame = load_frame(cfg, kind)
    b = cfg["benchmark"]
    report, timings = pipelines.run_benchmark(
        frame, kind, seed=cfg["seed"], test_fraction=float(b["test_fraction"]), n_iter=int(b["n_iter"]),
        cv_folds=int(b["cv_folds"]), tuned=bool(cfg["dqn"]["tuned"]), agent_overrides=cfg["dqn"]["agent"],
        forecaster_overrides=cfg["forecast"]["forecaster"], costs=_costs(kind, cfg["dqn"]["costs"]),
        n_jobs=_n_jobs(cfg),
    )
    out.json("report.json", report)
    out.json("timings.json", {k: round(v, 3) for k, v in timings.items()})
    for name, section in report["methods"].items():
        print(f"{name:>10}: simulated cost {section['simulated']['total_cost']:.2f}")
    return EXIT_OK


HANDLERS = {"forecast": cmd_forecast, "trees": cmd_trees, "dqn": cmd_dqn, "benchmark": cmd_benchmark}


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="dataset CSV; synthetic data is generated when omitted")
    common.add_argument("--output-dir", default="out", help="directory for all outputs (default: out)")
    common.add_argument("--seed", type=int, help="global seed (default 42)")
    common.add_argument("--preset", choices=sorted(PRESET_CHOICES), help="inventory model (default lost-sales)")
    common.add_argument("--config", help="JSON run config; explicit flags override its values")
    common.add_argument("--days", type=_positive_int, help="rows of synthetic data to generate")
    common.add_argument("--parallel", action="store_true", help="run folds, candidates and trees on a thread pool")
    common.add_argument("--plot-script", action="store_true", help="also write a matplotlib recipe for the CSVs")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="invlab", description="Inventory replenishment forecasting and control experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("datagen", parents=[common], help="write a synthetic supermarket dataset")
    p.add_argument("-o", "--output", help="CSV path (default: OUTPUT_DIR/data.csv)")

    p = sub.add_parser("forecast", parents=[common], help="additive forecaster with cross-validation")
    p.add_argument("--horizon", type=_positive_int, help="days to forecast (default 180)")
    p.add_argument("--threshold", type=float, help="write decisions.csv flagging yhat above this level")

    p = sub.add_parser("trees", parents=[common], help="random forest and gradient boosting with tuning")
    p.add_argument("--n-iter", type=_positive_int, help="randomized-search candidates per model (default 5)")

    for name, text in (("dqn", "train a deep Q-network agent"), ("benchmark", "compare all three methods")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--tuned", action="store_true", help="use the tuned agent preset")
        p.add_argument("--episodes", type=_positive_int, help="training episodes (default 100)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        if args.command == "datagen":
            if args.days is not None and args.days < 1:
                raise UsageError("--days must be positive")
            return cmd_datagen(args, cfg)
        out = Outputs(Path(args.output_dir))
        out.json("run_config.json", {"command": args.command, **cfg})
        if cfg["plot_script"]:
            out.text("plot_figures.py", PLOT_RECIPE)
        code = HANDLERS[args.command](args, cfg, out)
        if args.command == "benchmark":
            write_manifest(out)
        return code
    except UsageError as exc:
        print(f"invlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, KeyError) as exc:
        print(f"invlab: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"invlab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"invlab: cannot write output: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
