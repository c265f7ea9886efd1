"""Batch command-line front end for the whole pipeline.

Subcommands: ingest, train, explain, rules, lift, report. Every command is a
pure function of (inputs, config, seed): re-runs write byte-identical
artifacts into the configured output directory. Exit codes: 0 success,
1 internal error, 2 user or configuration error.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .boosting import GbmModel, fit_gbm
from .data import (
    SERIES_IDS,
    Dataset,
    attach_target,
    compute_spreads,
    descriptive_stats,
    parse_yield_csv,
    pearson_correlations,
    temporal_split,
)
from .errors import ConfigError, SpreadscopeError
from .fetch import default_cache_dir, fetch_series
from .forest import ForestModel, fit_forest
from .lift import decile_lift
from .metrics import evaluate
from .rules import (
    MAX_LIFT,
    MAX_SUPPORT,
    dedupe,
    extract_rules,
    labels_report,
    rank_rules,
    ranked_csv,
    rule_hits,
    rules_csv,
    score_rules,
)
from .serialize import dumps_model, load_model
from .shapley import (
    contribution_summary,
    dependence,
    importance,
    shap_values,
)
from .svg import bar_chart, scatter_chart, summary_chart
from .tree import GINI, VARIANCE, TreeParams

_DEFAULTS: dict = {
    "yields_csv": None,
    "recession_csv": None,
    "fetch": None,
    "train_window": ["1970-01", "1999-12"],
    "test_window": ["2000-01", "2020-11"],
    "model": "gbm",
    "seed": None,
    "out": "out",
    "model_file": None,
    "forest": {"B": 500, "mtry": 6, "max_depth": 12, "min_samples_leaf": 5},
    "gbm": {"M": 300, "nu": 0.1, "max_depth": 6, "min_samples_leaf": 5},
    "lift_population": "full",
    "lift_features": None,
    "shap_unit": "auto",
    "rule_filter": "shap-top",
    "explain_top_k": 6,
    "rules_top_k": 5,
    "figures": True,
    "n_jobs": 1,
}


@dataclass
class RunConfig:
    """Validated key-value settings shared by every subcommand."""

    values: dict

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError as exc:
            raise AttributeError(key) from exc

    def out_dir(self) -> Path:
        return Path(self.values["out"])

    def model_path(self) -> Path:
        if self.values["model_file"]:
            return Path(self.values["model_file"])
        return self.out_dir() / f"model_{self.values['model']}.json"


def _read_config_file(path: str) -> dict:
    try:
        text = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if path.endswith(".toml"):
        try:
            import tomllib
        except ImportError as exc:
            raise ConfigError(
                "TOML configs need Python >= 3.11; use JSON here"
            ) from exc
        try:
            return tomllib.loads(text.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def load_config(path: str, overrides: dict) -> RunConfig:
    """Merge defaults <- config file <- command-line flags, then validate."""
    raw = _read_config_file(path)
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a key-value object")
    unknown = sorted(set(raw) - set(_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys {unknown}")
    values = copy.deepcopy(_DEFAULTS)
    for key, value in raw.items():
        if isinstance(values.get(key), dict) and isinstance(value, dict):
            bad = sorted(set(value) - set(values[key]))
            if bad:
                raise ConfigError(f"unknown keys {bad} under {key!r}")
            values[key].update(value)
        else:
            values[key] = value
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    if values["model"] not in ("rf", "gbm"):
        raise ConfigError("model must be 'rf' or 'gbm'")
    if values["lift_population"] not in ("full", "train", "test"):
        raise ConfigError("lift_population must be full, train, or test")
    if values["shap_unit"] not in ("auto", "margin", "probability"):
        raise ConfigError("shap_unit must be auto, margin, or probability")
    if values["rule_filter"] not in ("shap-top", "none"):
        raise ConfigError("rule_filter must be 'shap-top' or 'none'")
    for key in ("explain_top_k", "rules_top_k"):
        if not isinstance(values[key], int) or values[key] < 1:
            raise ConfigError(f"{key} must be a positive integer")
    if values["fetch"] is None and not (
        values["yields_csv"] and values["recession_csv"]
    ):
        raise ConfigError("config needs yields_csv and recession_csv, or fetch")
    return RunConfig(values=values)


def _read_input(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {what} file {path}: {exc}") from exc


def build_dataset(cfg: RunConfig) -> tuple[Dataset, tuple[str, ...]]:
    """Assemble the spread Dataset from files or the fetch cache."""
    if cfg.fetch is not None:
        endpoint = cfg.fetch.get("endpoint")
        if not endpoint:
            raise ConfigError("fetch config needs an endpoint")
        cache = cfg.fetch.get("cache_dir") or default_cache_dir()
        yields_text = fetch_series(",".join(SERIES_IDS), endpoint, cache)
        recession_text = fetch_series("USREC", endpoint, cache)
    else:
        yields_text = _read_input(cfg.yields_csv, "yields")
        recession_text = _read_input(cfg.recession_csv, "recession")
    parsed = parse_yield_csv(yields_text)
    frame = compute_spreads(parsed.panel)
    ds = attach_target(frame, recession_text)
    return ds, parsed.rejected


def split_dataset(cfg: RunConfig, ds: Dataset) -> tuple[Dataset, Dataset]:
    return temporal_split(
        ds,
        cfg.train_window[0],
        cfg.train_window[1],
        cfg.test_window[0],
        cfg.test_window[1],
    )


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _dataset_csv(ds: Dataset) -> str:
    lines = ["date," + ",".join(ds.feature_names) + ",target"]
    for i in range(ds.n):
        cells = [ds.dates[i]]
        cells += [repr(float(v)) for v in ds.features[i]]
        cells.append(str(int(ds.target[i])))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_ingest(cfg: RunConfig) -> None:
    ds, rejected = build_dataset(cfg)
    out = cfg.out_dir()
    _write(out / "dataset.csv", _dataset_csv(ds))
    stats = descriptive_stats(ds.features, ds.feature_names)
    _write(out / "stats.csv", stats.to_csv())
    corr = pearson_correlations(ds.features, ds.feature_names)
    _write(out / "correlations.csv", corr.to_csv())
    _write(out / "partners.csv", corr.partners_csv())
    _write(out / "rejected.csv", "date\n" + "".join(d + "\n" for d in rejected))
    print(f"ingested {ds.n} months ({len(rejected)} rejected) -> {out}")


def _forest_params(cfg: RunConfig) -> TreeParams:
    return TreeParams(
        max_depth=cfg.forest["max_depth"],
        min_samples_leaf=cfg.forest["min_samples_leaf"],
        split_criterion=GINI,
    )


def _gbm_params(cfg: RunConfig) -> TreeParams:
    return TreeParams(
        max_depth=cfg.gbm["max_depth"],
        min_samples_leaf=cfg.gbm["min_samples_leaf"],
        split_criterion=VARIANCE,
    )


def _require_seed(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise ConfigError("training requires a seed (config 'seed' or --seed)")
    return int(cfg.seed)


def cmd_train(cfg: RunConfig) -> None:
    seed = _require_seed(cfg)
    ds, _ = build_dataset(cfg)
    train, test = split_dataset(cfg, ds)
    out = cfg.out_dir()
    kind = cfg.model
    if kind == "rf":
        model = fit_forest(
            train,
            B=cfg.forest["B"],
            mtry=cfg.forest["mtry"],
            params=_forest_params(cfg),
            seed=seed,
            n_jobs=cfg.n_jobs,
        )
        labels = model.label_batch(test.features)
    else:
        model, trace = fit_gbm(
            train,
            M=cfg.gbm["M"],
            nu=cfg.gbm["nu"],
            params=_gbm_params(cfg),
            seed=seed,
        )
        labels = model.label_batch(test.features)
        _write(out / "trace_gbm.csv", trace.to_csv())
    _write(out / f"model_{kind}.json", dumps_model(model))
    report = evaluate(labels, test.target)
    _write(out / f"metrics_{kind}.csv", report.to_csv(model=kind))
    print(f"trained {kind} (seed {seed}) -> {out / f'model_{kind}.json'}")
    print(report.to_text(model=kind))


def _load_model_for(cfg: RunConfig, ds: Dataset) -> ForestModel | GbmModel:
    path = cfg.model_path()
    if not path.exists():
        raise ConfigError(f"model file {path} not found; run train first")
    model = load_model(path)
    if tuple(model.feature_names) != tuple(ds.feature_names):
        raise ConfigError("model features do not match the ingested dataset")
    expected = {"rf": ForestModel, "gbm": GbmModel}[cfg.model]
    if cfg.model_file is None and not isinstance(model, expected):
        raise ConfigError(f"model file {path} does not hold a {cfg.model} model")
    unit = cfg.shap_unit
    if unit != "auto":
        actual = "probability" if isinstance(model, ForestModel) else "margin"
        if unit != actual:
            raise ConfigError(
                f"shap_unit {unit!r} conflicts with the {actual}-space model"
            )
    return model


def cmd_explain(cfg: RunConfig) -> None:
    ds, _ = build_dataset(cfg)
    train, test = split_dataset(cfg, ds)
    model = _load_model_for(cfg, ds)
    out = cfg.out_dir()
    shap_train = shap_values(model, train)
    shap_test = shap_values(model, test)
    imp_train = importance(shap_train)
    imp_test = importance(shap_test)
    train_of = dict(zip(imp_train.names, imp_train.mean_abs))
    lines = ["feature,train_mean_abs,test_mean_abs"]
    for name, test_value in zip(imp_test.names, imp_test.mean_abs):
        lines.append(
            f"{name},{repr(float(train_of[name]))},{repr(float(test_value))}"
        )
    _write(out / "importance.csv", "\n".join(lines) + "\n")
    summary = contribution_summary(shap_test, test)
    _write(out / "contribution_summary.csv", summary.to_csv())
    corr = pearson_correlations(ds.features, ds.feature_names)
    top = imp_test.top(cfg.explain_top_k)
    for feature in top:
        dep = dependence(shap_test, test, feature, corr)
        _write(out / f"dependence_{feature}.csv", dep.to_csv())
    if cfg.figures:
        _write(
            out / "importance.svg",
            bar_chart(
                list(imp_test.names),
                imp_test.mean_abs,
                title=f"mean |attribution| ({shap_test.unit}, test)",
            ),
        )
        k = min(cfg.explain_top_k, len(summary.features))
        _write(
            out / "summary.svg",
            summary_chart(
                list(summary.features[:k]),
                list(summary.phi[:k]),
                list(summary.quantile[:k]),
                title="attribution summary (test)",
            ),
        )
        for feature in top:
            dep = dependence(shap_test, test, feature, corr)
            shade = np.argsort(np.argsort(dep.partner_values)) / max(
                1, len(dep.partner_values) - 1
            )
            _write(
                out / f"dependence_{feature}.svg",
                scatter_chart(
                    dep.x,
                    dep.phi,
                    title=f"{feature} (shade: {dep.partner})",
                    xlabel=feature,
                    ylabel="attribution",
                    shade=shade,
                    line=(dep.smooth_x, dep.smooth_phi),
                ),
            )
    print(f"explained {cfg.model} over {shap_train.n}+{shap_test.n} months -> {out}")


def _shap_top_features(cfg: RunConfig, model, test: Dataset) -> tuple[str, ...]:
    return importance(shap_values(model, test)).top(cfg.explain_top_k)


def cmd_rules(cfg: RunConfig) -> None:
    ds, _ = build_dataset(cfg)
    _, test = split_dataset(cfg, ds)
    model = _load_model_for(cfg, ds)
    out = cfg.out_dir()
    scored = score_rules(dedupe(extract_rules(model)), ds)
    _write(out / "rules_full.csv", rules_csv(scored, ds))
    candidates = scored
    if cfg.rule_filter == "shap-top":
        top = set(_shap_top_features(cfg, model, test))
        kept = tuple(
            r for r in scored.rules if any(c.feature in top for c in r.conditions)
        )
        candidates = replace(scored, rules=kept)
    by_support = rank_rules(candidates, MAX_SUPPORT, cfg.rules_top_k)
    by_lift = rank_rules(candidates, MAX_LIFT, cfg.rules_top_k)
    _write(out / "rules_max_support.csv", ranked_csv(by_support))
    _write(out / "rules_max_lift.csv", ranked_csv(by_lift))
    stats = descriptive_stats(ds.features, ds.feature_names)
    shown = list(by_lift) + [r for r in by_support if r not in by_lift]
    _write(out / "rules_labels.txt", labels_report(shown, stats))
    episodes = max(
        (len(rule_hits(r, ds).episodes) for r in by_lift), default=0
    )
    print(
        f"{len(scored.rules)} rules scored; top lift rules touch "
        f"{episodes} recession episodes -> {out}"
    )


def cmd_lift(cfg: RunConfig) -> None:
    ds, _ = build_dataset(cfg)
    train, test = split_dataset(cfg, ds)
    population = {"full": ds, "train": train, "test": test}[cfg.lift_population]
    if cfg.lift_features:
        features = list(cfg.lift_features)
        unknown = [f for f in features if f not in ds.feature_names]
        if unknown:
            raise ConfigError(f"unknown lift features {unknown}")
    elif cfg.model_path().exists():
        model = _load_model_for(cfg, ds)
        features = list(_shap_top_features(cfg, model, test))
    else:
        features = list(ds.feature_names)
    out = cfg.out_dir()
    for feature in features:
        table = decile_lift(
            population.column(feature), population.target, feature=feature
        )
        _write(out / f"lift_{feature}.csv", table.to_csv())
    print(f"decile lift for {len(features)} features -> {out}")


def cmd_report(cfg: RunConfig) -> None:
    _require_seed(cfg)
    cmd_ingest(cfg)
    for kind in ("rf", "gbm"):
        sub = RunConfig(values={**copy.deepcopy(cfg.values), "model": kind})
        cmd_train(sub)
    cmd_explain(cfg)
    cmd_rules(cfg)
    cmd_lift(cfg)
    print(f"report complete -> {cfg.out_dir()}")


_COMMANDS = {
    "ingest": cmd_ingest,
    "train": cmd_train,
    "explain": cmd_explain,
    "rules": cmd_rules,
    "lift": cmd_lift,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spreadscope",
        description="Term-spread recession indicators: pipeline batch commands.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON (or TOML) config file")
    parser.add_argument("--seed", type=int, default=None, help="training seed")
    parser.add_argument(
        "--model", choices=["rf", "gbm"], default=None, help="model kind"
    )
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument(
        "--model-file", default=None, help="explicit model JSON path"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "seed": args.seed,
        "model": args.model,
        "out": args.out,
        "model_file": args.model_file,
    }
    try:
        cfg = load_config(args.config, overrides)
        _COMMANDS[args.command](cfg)
    except SpreadscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
