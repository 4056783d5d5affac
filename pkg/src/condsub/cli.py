"""Command-line surface.

Commands: importance, effects, fidelity, simulate, depth-sweep, dependence.
Runs are driven by a flat INI-style config (`key = value` under section
headers); unknown sections or keys are rejected before any computation.
Every output file carries a provenance header (config hash, seed, version),
and all randomness flows from --seed, so reruns are byte-identical
regardless of --jobs.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import Dataset, SplitSpec, load_csv, read_schema, split
from .dependence import dependence_report
from .effects import ale, boxplot_summary, cs_pdp, curves_to_csv, curves_to_svg, pdp
from .errors import (CondsubError, ConfigError, DataError, LoadError,
                     ModelBridgeError, ModelError, PartitionError,
                     UnseenLevelError)
from .fidelity import data_fidelity_experiment, summarize_fidelity
from .importance import cs_pfi, depth_sweep
from .models import external_model, fit_cart, fit_forest, fit_knn, fit_ols
from .samplers import CsPermutation, ImputeResidual, MarginalPermutation, NoneSampler
from .simulation import SCENARIOS, TABLE2_METHODS, run_table2, table2_text
from .subgroups import fit_partition, to_json as partition_to_json

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_BRIDGE = 4

_ALLOWED = {
    "data": {"path", "schema", "target", "train_fraction"},
    "model": {"kind", "k", "n_trees", "max_depth", "min_node_size", "command"},
    "importance": {"features", "depth", "min_node_size", "m", "dump_interventions"},
    "effects": {"features", "depth", "min_node_size", "grid_size", "intervals",
                "kinds"},
    "fidelity": {"samplers", "n_features", "n_reps", "depth", "min_features"},
    "simulate": {"scenarios", "methods", "n", "p_total", "replicates", "m",
                 "depth", "impute_trees"},
    "depth_sweep": {"feature", "depths", "m", "min_node_size"},
    "dependence": set(),
}


def _read_config(path: str):
    parser = configparser.ConfigParser()
    try:
        text = Path(path).read_text(encoding="utf-8")
        parser.read_string(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    cfg = {}
    for section in parser.sections():
        if section not in _ALLOWED:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _ALLOWED[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
        cfg[section] = dict(parser[section])
    digest = hashlib.sha256(text.encode()).hexdigest()[:16]
    return cfg, digest


def _get(cfg, section, key, default=None, cast=str):
    try:
        raw = cfg.get(section, {}).get(key)
        if raw is None:
            return default
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes")
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc


def _get_list(cfg, section, key, default=None):
    raw = cfg.get(section, {}).get(key)
    if raw is None:
        return default
    return [part.strip() for part in raw.split(",") if part.strip()]


def _provenance(digest: str, seed: int) -> str:
    return f"# condsub {__version__} config={digest} seed={seed}"


def _write_text(path: Path, header: str, body: str):
    path.write_text(header + "\n" + body, encoding="utf-8")


def _load_data(cfg) -> Dataset:
    path = _get(cfg, "data", "path")
    if path is None:
        raise ConfigError("[data] path is required")
    schema = None
    schema_path = _get(cfg, "data", "schema")
    if schema_path:
        schema = read_schema(schema_path)
    return load_csv(path, schema=schema, target=_get(cfg, "data", "target"))


def _train_test(cfg, data: Dataset, seed: int):
    frac = _get(cfg, "data", "train_fraction", 0.7, float)
    return split(data, SplitSpec((frac, 1.0 - frac), seed))


def _build_model(cfg, train: Dataset, seed: int):
    kind = _get(cfg, "model", "kind", "forest")
    if kind == "ols":
        return fit_ols(train)
    if kind == "knn":
        return fit_knn(train, _get(cfg, "model", "k", 7, int))
    if kind == "forest":
        return fit_forest(train, _get(cfg, "model", "n_trees", 100, int), seed)
    if kind == "cart":
        return fit_cart(train, _get(cfg, "model", "max_depth", 30, int),
                        _get(cfg, "model", "min_node_size", 30, int))
    if kind == "external":
        command = _get(cfg, "model", "command")
        if not command:
            raise ConfigError("[model] command required for kind=external")
        return external_model(command.split(), train.feature_names,
                              train.feature_types)
    raise ConfigError(f"unknown model kind {kind!r}")


def _features(cfg, section, data: Dataset):
    names = _get_list(cfg, section, "features")
    if names is None or names == ["all"]:
        return [n for n in data.feature_names if data.is_numeric(n)]
    for n in names:
        if n not in data.feature_names:
            raise ConfigError(f"unknown feature {n!r} in [{section}] features")
    return names


def cmd_importance(cfg, digest, out: Path, seed: int, jobs: int, dry: bool) -> None:
    data = _load_data(cfg)
    features = _features(cfg, "importance", data)
    depth = _get(cfg, "importance", "depth", 2, int)
    min_node = _get(cfg, "importance", "min_node_size", 30, int)
    m_reps = _get(cfg, "importance", "m", 5, int)
    if dry:
        print(f"plan: importance of {features} at depth {depth}, M={m_reps}, "
              f"seed {seed} -> {out}")
        return
    train, test = _train_test(cfg, data, seed)
    model = _build_model(cfg, train, seed)
    results = []
    bar_rows = []
    for feature in features:
        part = fit_partition(train, feature, max_depth=depth,
                             min_node_size=min_node)
        res = cs_pfi(model, part, test, M=m_reps, seed=seed)
        results.append(res)
        (out / f"partition_{feature}.json").write_text(
            _provenance(digest, seed) + "\n" + partition_to_json(part))
        bar_rows.append({"feature": feature, "marginal_pfi": res.marginal_pfi,
                         "aggregate_cs_pfi": res.aggregate_cs_pfi})
        if _get(cfg, "importance", "dump_interventions", False, bool):
            sampler = CsPermutation(feature, depth, min_node, partition=part)
            sampler.fit(train)
            col = sampler.sample(test, seed, 0)
            body = "replacement\n" + "\n".join(repr(float(v)) for v in col) + "\n"
            _write_text(out / f"intervention_{feature}.csv",
                        _provenance(digest, seed), body)
    payload = json.dumps([json.loads(r.to_json()) for r in results], indent=2,
                         sort_keys=True)
    _write_text(out / "importance.json", _provenance(digest, seed), payload + "\n")
    lines = ["feature,marginal_pfi,aggregate_cs_pfi"]
    for row in bar_rows:
        lines.append(f"{row['feature']},{row['marginal_pfi']!r},"
                     f"{row['aggregate_cs_pfi']!r}")
    _write_text(out / "importance_bars.csv", _provenance(digest, seed),
                "\n".join(lines) + "\n")
    from .plots import importance_figure, save_figure
    save_figure(importance_figure(bar_rows, "feature importance"),
                out / "importance.svg")
    print(f"wrote importance results for {len(features)} feature(s) to {out}")


def cmd_effects(cfg, digest, out: Path, seed: int, jobs: int, dry: bool) -> None:
    data = _load_data(cfg)
    features = _features(cfg, "effects", data)
    depth = _get(cfg, "effects", "depth", 2, int)
    min_node = _get(cfg, "effects", "min_node_size", 30, int)
    grid_size = _get(cfg, "effects", "grid_size", 20, int)
    intervals = _get(cfg, "effects", "intervals", 20, int)
    kinds = _get_list(cfg, "effects", "kinds", ["pdp", "cs_pdp", "ale"])
    if dry:
        print(f"plan: {kinds} curves for {features}, depth {depth}, "
              f"grid {grid_size}, seed {seed} -> {out}")
        return
    train, test = _train_test(cfg, data, seed)
    model = _build_model(cfg, train, seed)
    from .plots import effect_figure, save_figure
    for feature in features:
        curves = []
        if "pdp" in kinds:
            curve = pdp(model, test, feature, grid_size=grid_size)
            curves.append(boxplot_summary(curve, test.columns[feature]))
        if "cs_pdp" in kinds:
            part = fit_partition(train, feature, max_depth=depth,
                                 min_node_size=min_node)
            group_curves = cs_pdp(model, part, test, grid_size=grid_size)
            from .subgroups import assign_groups
            ids = assign_groups(part, test)
            for c in group_curves:
                sample = test.columns[feature][ids == c.group_id]
                curves.append(boxplot_summary(c, sample))
        if "ale" in kinds and data.is_numeric(feature):
            curves.append(ale(model, train, test, feature, intervals))
        _write_text(out / f"effects_{feature}.csv", _provenance(digest, seed),
                    curves_to_csv(curves))
        (out / f"effects_{feature}.svg").write_text(curves_to_svg(curves))
        save_figure(effect_figure(curves, f"effect of {feature}"),
                    out / f"effects_{feature}_report.svg")
    print(f"wrote effect curves for {len(features)} feature(s) to {out}")


_SAMPLER_FACTORIES = {
    "none": lambda f, depth, seed: NoneSampler(f),
    "marginal": lambda f, depth, seed: MarginalPermutation(f),
    "cs_permutation": lambda f, depth, seed: CsPermutation(f, max_depth=depth),
    "impute_residual": lambda f, depth, seed: ImputeResidual(f, seed=seed),
}


def cmd_fidelity(cfg, digest, out: Path, seed: int, jobs: int, dry: bool) -> None:
    data = _load_data(cfg)
    sampler_names = _get_list(cfg, "fidelity", "samplers",
                              ["none", "marginal", "cs_permutation"])
    unknown = set(sampler_names) - set(_SAMPLER_FACTORIES)
    if unknown:
        raise ConfigError(f"unknown sampler(s) {sorted(unknown)}")
    n_features = _get(cfg, "fidelity", "n_features", 10, int)
    n_reps = _get(cfg, "fidelity", "n_reps", 30, int)
    depth = _get(cfg, "fidelity", "depth", 30, int)
    min_features = _get(cfg, "fidelity", "min_features", 8, int)
    if dry:
        print(f"plan: fidelity of {sampler_names} over {n_features} features x "
              f"{n_reps} reps, seed {seed} -> {out}")
        return
    factories = {
        name: (lambda f, name=name: _SAMPLER_FACTORIES[name](f, depth, seed))
        for name in sampler_names}
    results = data_fidelity_experiment(
        data, factories, n_features=n_features, n_reps=n_reps, seed=seed,
        dataset_id=Path(_get(cfg, "data", "path")).stem, n_jobs=jobs,
        min_features=min_features)
    lines = ["dataset,feature,sampler,rep,mmd,data_fidelity,sigma"]
    for r in results:
        lines.append(f"{r.dataset_id},{r.feature},{r.sampler_kind},"
                     f"{r.repetition},{r.mmd!r},{r.data_fidelity!r},{r.sigma!r}")
    _write_text(out / "fidelity.csv", _provenance(digest, seed),
                "\n".join(lines) + "\n")
    summary = summarize_fidelity(results)
    lines = ["sampler,mean_fidelity,mean_rank,n"]
    for row in summary:
        lines.append(f"{row['sampler']},{row['mean_fidelity']!r},"
                     f"{row['mean_rank']!r},{row['n']}")
    _write_text(out / "fidelity_summary.csv", _provenance(digest, seed),
                "\n".join(lines) + "\n")
    from .plots import fidelity_figure, save_figure
    save_figure(fidelity_figure(summary, "data fidelity by sampler"),
                out / "fidelity.svg")
    print(f"wrote {len(results)} fidelity rows to {out}")


def cmd_simulate(cfg, digest, out: Path, seed: int, jobs: int, dry: bool) -> None:
    scenarios = _get_list(cfg, "simulate", "scenarios", list(SCENARIOS))
    methods = _get_list(cfg, "simulate", "methods", list(TABLE2_METHODS))
    n = _get(cfg, "simulate", "n", 3000, int)
    p_total = _get(cfg, "simulate", "p_total", 10, int)
    replicates = _get(cfg, "simulate", "replicates", 50, int)
    m_reps = _get(cfg, "simulate", "m", 5, int)
    depth = _get(cfg, "simulate", "depth", 30, int)
    impute_trees = _get(cfg, "simulate", "impute_trees", 50, int)
    if dry:
        print(f"plan: simulate {scenarios} x {methods}, n={n}, p={p_total}, "
              f"{replicates} replicates, seed {seed} -> {out}")
        return
    rows = run_table2(scenarios=scenarios, methods=methods, n=n,
                      p_total=p_total, n_replicates=replicates, M=m_reps,
                      seed=seed, depth=depth, impute_trees=impute_trees,
                      n_jobs=jobs)
    lines = ["scenario,n,p,method,mse,ground_truth,n_replicates"]
    for r in rows:
        lines.append(f"{r['scenario']},{r['n']},{r['p']},{r['method']},"
                     f"{r['mse']!r},{r['ground_truth']!r},{r['n_replicates']}")
    _write_text(out / "simulate.csv", _provenance(digest, seed),
                "\n".join(lines) + "\n")
    _write_text(out / "simulate.txt", _provenance(digest, seed),
                table2_text(rows) + "\n")
    print(table2_text(rows))


def cmd_depth_sweep(cfg, digest, out: Path, seed: int, jobs: int, dry: bool) -> None:
    data = _load_data(cfg)
    feature = _get(cfg, "depth_sweep", "feature")
    if feature is None:
        raise ConfigError("[depth_sweep] feature is required")
    depths = [int(v) for v in _get_list(cfg, "depth_sweep", "depths",
                                        ["0", "1", "2", "3", "4", "5"])]
    m_reps = _get(cfg, "depth_sweep", "m", 5, int)
    min_node = _get(cfg, "depth_sweep", "min_node_size", 30, int)
    if dry:
        print(f"plan: depth sweep {depths} for {feature!r}, seed {seed} -> {out}")
        return
    train, test = _train_test(cfg, data, seed)
    model = _build_model(cfg, train, seed)
    rows = depth_sweep(model, train, test, feature, depths, M=m_reps,
                       seed=seed, min_node_size=min_node)
    lines = ["depth,n_groups,cs_pfi,marginal_pfi"]
    for r in rows:
        lines.append(f"{r['depth']},{r['n_groups']},{r['cs_pfi']!r},"
                     f"{r['marginal_pfi']!r}")
    _write_text(out / "depth_sweep.csv", _provenance(digest, seed),
                "\n".join(lines) + "\n")
    from .plots import depth_sweep_figure, save_figure
    save_figure(depth_sweep_figure(rows, f"depth sweep for {feature}"),
                out / "depth_sweep.svg")
    print(f"wrote depth sweep over {len(depths)} depth(s) to {out}")


def cmd_dependence(cfg, digest, out: Path, seed: int, jobs: int, dry: bool) -> None:
    data = _load_data(cfg)
    if dry:
        print(f"plan: dependence report for {data.n_features} features, "
              f"seed {seed} -> {out}")
        return
    report = dependence_report(data, seed=seed)
    _write_text(out / "dependence.csv", _provenance(digest, seed), report.to_csv())
    _write_text(out / "dependence.txt", _provenance(digest, seed),
                report.to_text() + "\n")
    print(report.to_text())


COMMANDS = {
    "importance": cmd_importance,
    "effects": cmd_effects,
    "fidelity": cmd_fidelity,
    "simulate": cmd_simulate,
    "depth-sweep": cmd_depth_sweep,
    "dependence": cmd_dependence,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condsub",
        description="Conditional-subgroup feature importance and effects")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="INI-style run config")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--dry-run", action="store_true",
                        help="validate the config and print the plan only")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, digest = _read_config(args.config)
        out = Path(args.out)
        if not args.dry_run:
            out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, digest, out, args.seed, args.jobs,
                               args.dry_run)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelBridgeError as exc:
        print(f"model bridge error: {exc}", file=sys.stderr)
        return EXIT_BRIDGE
    except (LoadError, DataError, PartitionError, UnseenLevelError,
            ModelError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
