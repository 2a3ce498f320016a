"""Command-line interface.

Subcommands: sema, pcma, ersma, bkmr-fit, bkmr-cma, simulate, report.
Options come from an optional JSON config file plus flags (flags win).
Each run writes its artifacts into ``<out>/<subcommand>-<hash>/`` where the
hash digests the resolved configuration, so identical configs map to the
same directory and rerunning produces byte-identical files. Every run
directory contains ``config.json`` (the resolved config including the
seed) and ``manifest.json`` (sha256 of each artifact).

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bkmr import BkmrFit, KernelConfig, cluster_groups, extract_pips, kmbayes
from .bkmr_cma import CmaConfig, mediation_bkmr
from .data import ColumnSchema, load_dataset
from .errors import ConfigError, DataError, NumericalError
from .ersma import ersma
from .mediate import sema
from .pcma import pcma
from .rng import SeededRng
from .sim import BKMR_METHODS, LINEAR_METHODS, Scenario, StudyConfig, run_study

ROLES = {"mediator": "mediator", "outcome": "outcome", "te": "total-effect"}


def _csv_list(text):
    return [t.strip() for t in str(text).split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixmed",
        description="Mediation analysis pipelines for correlated exposure mixtures.",
    )
    parser.add_argument("--version", action="version", version=f"mixmed {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, with_data=True):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--seed", type=int, help="base random seed (default 0)")
        p.add_argument("--out", help="output directory (default ./mixmed-out)")
        p.add_argument("--workers", type=int, help="worker processes (default: all cores)")
        if with_data:
            p.add_argument("--data", help="input CSV path")
            p.add_argument("--exposures", help="comma-separated exposure columns")
            p.add_argument("--mediator", help="mediator column")
            p.add_argument("--outcome", help="outcome column")
            p.add_argument("--confounders", help="comma-separated confounder columns")

    p = sub.add_parser("sema", help="single-exposure mediation analysis")
    add_common(p)
    p.add_argument("--adjust-coexposures", action="store_true", default=None,
                   help="include the remaining exposures as covariates")
    p.add_argument("--no-adjust-coexposures", dest="adjust_coexposures",
                   action="store_false", help=argparse.SUPPRESS)
    p.add_argument("--fdr-level", type=float, help="BH flag threshold (default 0.05)")

    p = sub.add_parser("pcma", help="principal-component mediation analysis")
    add_common(p)
    p.add_argument("--retention", help="cum_variance:0.8 | first_k:3 | kaiser")

    p = sub.add_parser("ersma", help="environmental-risk-score mediation analysis")
    add_common(p)
    p.add_argument("--feature-spec", choices=["main", "main+interactions"],
                   help="risk-score feature set (default main)")

    p = sub.add_parser("bkmr-fit", help="fit one BKMR model by MCMC")
    add_common(p)
    p.add_argument("--role", choices=sorted(ROLES), help="which model to fit")
    p.add_argument("--iterations", type=int, help="MCMC iterations (default 2000)")
    p.add_argument("--selection", choices=["none", "componentwise", "hierarchical"],
                   help="variable-selection mode (default componentwise)")
    p.add_argument("--groups-k", type=int,
                   help="cluster count for hierarchical groups (default 3)")

    p = sub.add_parser("bkmr-cma", help="mediation effects from three BKMR fits")
    add_common(p, with_data=False)
    p.add_argument("--mediator-fit", help="chain.json from a mediator bkmr-fit run")
    p.add_argument("--outcome-fit", help="chain.json from an outcome bkmr-fit run")
    p.add_argument("--te-fit", help="chain.json from a total-effect bkmr-fit run")
    p.add_argument("--a", help="comma-separated comparative exposure levels")
    p.add_argument("--astar", help="comma-separated reference exposure levels")
    p.add_argument("--quantile-contrast", help="e.g. 0.25,0.75: joint shift between "
                   "per-exposure quantiles of the training data")
    p.add_argument("--k-draws", type=int, help="mediator samples per iteration (default 50)")
    p.add_argument("--alpha", type=float, help="credible level alpha (default 0.05)")

    p = sub.add_parser("simulate", help="run the simulation study")
    add_common(p, with_data=False)
    p.add_argument("--scenarios", help="comma list like n2500-r0.4,n1000-r0.1 (default all 4)")
    p.add_argument("--methods", help=f"comma list from {LINEAR_METHODS + BKMR_METHODS}")
    p.add_argument("--replicates", type=int, help="replicates per scenario (default 20)")
    p.add_argument("--bkmr-replicates", type=int, help="cap on BKMR replicates (default 5)")
    p.add_argument("--bkmr-iterations", type=int, help="BKMR iterations (default 2000)")
    p.add_argument("--reference-n", type=int,
                   help="reference dataset size for PC/ERS truths (default 100000)")

    p = sub.add_parser("report", help="re-emit plot-ready tables from a simulate run")
    add_common(p, with_data=False)
    p.add_argument("--metrics", help="metrics.json produced by simulate")
    return parser


def _load_config_file(path):
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


def _merge(args, file_cfg, key, default=None):
    """Flag value if given, else config-file value, else default."""
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    return file_cfg.get(key, default)


def _resolve_schema(args, file_cfg) -> ColumnSchema:
    schema_cfg = file_cfg.get("schema", {})
    exposures = _merge(args, schema_cfg, "exposures")
    mediator = _merge(args, schema_cfg, "mediator")
    outcome = _merge(args, schema_cfg, "outcome")
    confounders = _merge(args, schema_cfg, "confounders", [])
    if exposures is None or mediator is None or outcome is None:
        raise ConfigError("--exposures, --mediator and --outcome are required "
                          "(flags or config file 'schema' block)")
    if isinstance(exposures, str):
        exposures = _csv_list(exposures)
    if isinstance(confounders, str):
        confounders = _csv_list(confounders)
    return ColumnSchema(tuple(exposures), mediator, outcome, tuple(confounders))


def _config_hash(resolved: dict) -> str:
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


class RunDir:
    """Artifact directory named by the resolved-config hash."""

    def __init__(self, out_root, subcommand, resolved):
        self.resolved = resolved
        self.path = Path(out_root) / f"{subcommand}-{_config_hash(resolved)}"
        self.path.mkdir(parents=True, exist_ok=True)
        self._files = []
        self.write_json("config.json", resolved)

    def write_json(self, name, payload):
        text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonify)
        (self.path / name).write_text(text + "\n", encoding="utf-8")
        self._files.append(name)

    def write_csv(self, name, header, rows):
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_cell(v) for v in row))
        (self.path / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
        self._files.append(name)

    def finish(self):
        manifest = {}
        for name in sorted(set(self._files)):
            digest = hashlib.sha256((self.path / name).read_bytes()).hexdigest()
            manifest[name] = digest
        text = json.dumps({"files": manifest}, indent=2, sort_keys=True)
        (self.path / "manifest.json").write_text(text + "\n", encoding="utf-8")
        return self.path


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonify(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _effect_rows(label, eff, extra=()):
    rows = []
    for name, e in (("te", eff.te), ("nde", eff.nde), ("nie", eff.nie)):
        rows.append([label, name, e.estimate, e.se, e.ci_lo, e.ci_hi, e.p, *extra])
    return rows


EFFECT_HEADER = ["exposure", "effect", "estimate", "se", "ci_lo", "ci_hi", "p"]


def cmd_sema(args, file_cfg):
    schema = _resolve_schema(args, file_cfg)
    data_path = _merge(args, file_cfg, "data")
    if not data_path:
        raise ConfigError("--data is required")
    adjust = _merge(args, file_cfg, "adjust_coexposures", True)
    fdr = float(_merge(args, file_cfg, "fdr-level", file_cfg.get("fdr_level", 0.05)))
    seed = int(_merge(args, file_cfg, "seed", 0))
    resolved = {
        "subcommand": "sema",
        "data": str(data_path),
        "schema": {
            "exposures": list(schema.exposures),
            "mediator": schema.mediator,
            "outcome": schema.outcome,
            "confounders": list(schema.confounders),
        },
        "adjust_coexposures": bool(adjust),
        "fdr_level": fdr,
        "seed": seed,
    }
    data = load_dataset(data_path, schema)
    res = sema(data, adjust_coexposures=bool(adjust), fdr_level=fdr)
    run = RunDir(_merge(args, file_cfg, "out", "mixmed-out"), "sema", resolved)
    rows = []
    for eff, q, act in zip(res.effects, res.nie_qvalues, res.active):
        rows.extend(_effect_rows(eff.exposure, eff, extra=[q, act]))
    run.write_csv("effects.csv", EFFECT_HEADER + ["nie_q", "active"], rows)
    run.write_json(
        "summary.json",
        {
            "global_nie": vars(res.global_nie),
            "active_exposures": [
                e.exposure for e, a in zip(res.effects, res.active) if a
            ],
            "n_dropped_rows": data.n_dropped,
            "adjusted_for_coexposures": res.adjusted,
            "causally_interpretable": res.causally_interpretable,
            "note": None
            if res.adjusted
            else "unadjusted regime: estimates are not causally interpretable",
        },
    )
    return run


def cmd_pcma(args, file_cfg):
    schema = _resolve_schema(args, file_cfg)
    data_path = _merge(args, file_cfg, "data")
    if not data_path:
        raise ConfigError("--data is required")
    retention = _merge(args, file_cfg, "retention", "cum_variance:0.8")
    if ":" in retention:
        rule, _, raw = retention.partition(":")
        value = float(raw)
    else:
        rule, value = retention, None
    seed = int(_merge(args, file_cfg, "seed", 0))
    resolved = {
        "subcommand": "pcma",
        "data": str(data_path),
        "schema": {
            "exposures": list(schema.exposures),
            "mediator": schema.mediator,
            "outcome": schema.outcome,
            "confounders": list(schema.confounders),
        },
        "retention": retention,
        "seed": seed,
    }
    data = load_dataset(data_path, schema)
    res = pcma(data, rule=rule, value=value)
    run = RunDir(_merge(args, file_cfg, "out", "mixmed-out"), "pcma", resolved)
    rows = []
    for eff in res.effects:
        rows.extend(_effect_rows(eff.exposure, eff))
    run.write_csv("effects.csv", EFFECT_HEADER, rows)
    model = res.model
    run.write_csv(
        "scree.csv",
        ["component", "eigenvalue", "prop_variance", "cum_variance"],
        [
            [f"PC{j + 1}", model.eigenvalues[j], model.variance_explained[j],
             model.cumulative_variance[j]]
            for j in range(model.eigenvalues.size)
        ],
    )
    run.write_csv(
        "loadings.csv",
        ["exposure"] + [f"PC{j + 1}" for j in range(model.loadings.shape[1])],
        [
            [schema.exposures[i]] + list(model.loadings[i])
            for i in range(model.loadings.shape[0])
        ],
    )
    run.write_json(
        "summary.json",
        {
            "retained": res.retained,
            "cumulative_variance_retained": float(
                model.cumulative_variance[res.retained - 1]
            ),
            "global_nie": vars(res.global_nie),
        },
    )
    return run


def cmd_ersma(args, file_cfg):
    schema = _resolve_schema(args, file_cfg)
    data_path = _merge(args, file_cfg, "data")
    if not data_path:
        raise ConfigError("--data is required")
    spec = _merge(args, file_cfg, "feature-spec", file_cfg.get("feature_spec", "main"))
    seed = int(_merge(args, file_cfg, "seed", 0))
    resolved = {
        "subcommand": "ersma",
        "data": str(data_path),
        "schema": {
            "exposures": list(schema.exposures),
            "mediator": schema.mediator,
            "outcome": schema.outcome,
            "confounders": list(schema.confounders),
        },
        "feature_spec": spec,
        "seed": seed,
    }
    data = load_dataset(data_path, schema)
    res = ersma(data, feature_spec=spec, rng=SeededRng(seed))
    run = RunDir(_merge(args, file_cfg, "out", "mixmed-out"), "ersma", resolved)
    run.write_csv("effects.csv", EFFECT_HEADER, _effect_rows("ERS", res.effects))
    run.write_csv("scores.csv", ["row", "ers"], list(enumerate(res.scores)))
    res.model.to_json(run.path / "ers_model.json")
    run._files.append("ers_model.json")
    run.write_json(
        "summary.json",
        {
            "selected_exposures": list(res.model.selected_exposures),
            "lambda1": res.model.lambda1,
            "lambda2": res.model.lambda2,
            "contrast": {
                "reference": float(res.contrast.reference[0]),
                "comparative": float(res.contrast.comparative[0]),
            },
            "nie": vars(res.effects.nie),
        },
    )
    return run


def cmd_bkmr_fit(args, file_cfg):
    schema = _resolve_schema(args, file_cfg)
    data_path = _merge(args, file_cfg, "data")
    if not data_path:
        raise ConfigError("--data is required")
    role_key = _merge(args, file_cfg, "role")
    if role_key not in ROLES:
        raise ConfigError(f"--role must be one of {sorted(ROLES)}")
    iterations = int(_merge(args, file_cfg, "iterations", 2000))
    selection = _merge(args, file_cfg, "selection", "componentwise")
    groups_k = int(_merge(args, file_cfg, "groups-k", file_cfg.get("groups_k", 3)))
    seed = int(_merge(args, file_cfg, "seed", 0))
    resolved = {
        "subcommand": "bkmr-fit",
        "data": str(data_path),
        "schema": {
            "exposures": list(schema.exposures),
            "mediator": schema.mediator,
            "outcome": schema.outcome,
            "confounders": list(schema.confounders),
        },
        "role": role_key,
        "iterations": iterations,
        "selection": selection,
        "groups_k": groups_k,
        "seed": seed,
    }
    data = load_dataset(data_path, schema)
    role = ROLES[role_key]
    if role == "mediator":
        y, Z = data.mediator, data.exposures
        z_names = data.exposure_names
    elif role == "outcome":
        y = data.outcome
        Z = np.column_stack([data.exposures, data.mediator])
        z_names = data.exposure_names + (data.mediator_name,)
    else:
        y, Z = data.outcome, data.exposures
        z_names = data.exposure_names

    groups = None
    if selection == "hierarchical":
        corr = np.corrcoef(data.exposures, rowvar=False)
        labels = cluster_groups(corr, groups_k)
        if role == "outcome":
            # the mediator column gets its own group
            labels = np.concatenate([labels, [labels.max() + 1]])
        groups = tuple(int(g) for g in labels)
    # Sampler hyperparameters (priors, proposal scales, thinning) come from
    # the config file's "kernel" block; flags cover the common knobs.
    kernel_extra = dict(file_cfg.get("kernel", {}))
    for key in ("iterations", "selection", "groups"):
        kernel_extra.pop(key, None)
    resolved["kernel"] = dict(sorted(kernel_extra.items()))
    try:
        config = KernelConfig(
            iterations=iterations, selection=selection, groups=groups, **kernel_extra
        )
    except TypeError as exc:
        raise ConfigError(f"invalid kernel option: {exc}") from None
    fit = kmbayes(y, Z, data.confounders, config, SeededRng(seed), role=role,
                  z_names=z_names)
    run = RunDir(_merge(args, file_cfg, "out", "mixmed-out"), "bkmr-fit", resolved)
    fit.save_json(run.path / "chain.json")
    run._files.append("chain.json")
    summary = {"role": role, "iterations": iterations, "selection": selection,
               "acceptance": fit.chain.acceptance}
    if selection != "none":
        pips = extract_pips(fit)
        header = ["input", "pip"]
        rows = [[n, p] for n, p in zip(pips.names, pips.pips)]
        if pips.group_pips is not None:
            header += ["group", "group_pip", "conditional_pip"]
            rows = [
                row + [int(pips.groups[i]), pips.group_pips[pips.groups[i]],
                       pips.cond_pips[i]]
                for i, row in enumerate(rows)
            ]
        run.write_csv("pips.csv", header, rows)
    run.write_json("summary.json", summary)
    return run


def cmd_bkmr_cma(args, file_cfg):
    paths = {}
    for key in ("mediator-fit", "outcome-fit", "te-fit"):
        val = _merge(args, file_cfg, key, file_cfg.get(key.replace("-", "_")))
        if not val:
            raise ConfigError(f"--{key} is required")
        paths[key] = val
    fit_m = BkmrFit.load_json(paths["mediator-fit"])
    fit_y = BkmrFit.load_json(paths["outcome-fit"])
    fit_te = BkmrFit.load_json(paths["te-fit"])
    k_draws = int(_merge(args, file_cfg, "k-draws", file_cfg.get("k_draws", 50)))
    alpha = float(_merge(args, file_cfg, "alpha", 0.05))
    seed = int(_merge(args, file_cfg, "seed", 0))
    a_text = _merge(args, file_cfg, "a")
    astar_text = _merge(args, file_cfg, "astar")
    quant_text = _merge(args, file_cfg, "quantile-contrast",
                        file_cfg.get("quantile_contrast"))
    if quant_text:
        parts = quant_text if isinstance(quant_text, list) else _csv_list(quant_text)
        q_lo, q_hi = (float(v) for v in parts)
        astar = np.quantile(fit_m.Z, q_lo, axis=0)
        a = np.quantile(fit_m.Z, q_hi, axis=0)
    elif a_text is not None and astar_text is not None:
        a = np.array([float(v) for v in _csv_list(a_text)]) \
            if not isinstance(a_text, list) else np.array(a_text, dtype=float)
        astar = np.array([float(v) for v in _csv_list(astar_text)]) \
            if not isinstance(astar_text, list) else np.array(astar_text, dtype=float)
    else:
        raise ConfigError("provide --a/--astar or --quantile-contrast")
    resolved = {
        "subcommand": "bkmr-cma",
        "fits": paths,
        "a": [float(v) for v in a],
        "astar": [float(v) for v in astar],
        "K": k_draws,
        "alpha": alpha,
        "seed": seed,
    }
    config = CmaConfig(a=a, astar=astar, K=k_draws, alpha=alpha)
    effects = mediation_bkmr(fit_m, fit_y, fit_te, config, SeededRng(seed))
    run = RunDir(_merge(args, file_cfg, "out", "mixmed-out"), "bkmr-cma", resolved)
    rows = [
        [label, s.mean, s.sd, s.lo, s.hi]
        for label, s in effects.summaries.items()
    ]
    run.write_csv("effects.csv", ["effect", "mean", "sd", "lo", "hi"], rows)
    run.write_json(
        "summary.json",
        {label: vars(s) for label, s in effects.summaries.items()},
    )
    return run


SCENARIO_GRID = {
    "n1000-r0.1": Scenario(n=1000, r2_mediator=0.1),
    "n1000-r0.4": Scenario(n=1000, r2_mediator=0.4),
    "n2500-r0.1": Scenario(n=2500, r2_mediator=0.1),
    "n2500-r0.4": Scenario(n=2500, r2_mediator=0.4),
}


def cmd_simulate(args, file_cfg):
    names = _merge(args, file_cfg, "scenarios", "all")
    if names == "all":
        scenario_names = sorted(SCENARIO_GRID)
    else:
        scenario_names = names if isinstance(names, list) else _csv_list(names)
        unknown = [s for s in scenario_names if s not in SCENARIO_GRID]
        if unknown:
            raise ConfigError(f"unknown scenarios {unknown}; valid: {sorted(SCENARIO_GRID)}")
    methods = _merge(args, file_cfg, "methods", "sema_unadjusted,sema_adjusted,"
                     "pcma_first1,ersma_main")
    methods = tuple(methods if isinstance(methods, list) else _csv_list(methods))
    replicates = int(_merge(args, file_cfg, "replicates", 20))
    bkmr_replicates = _merge(args, file_cfg, "bkmr-replicates",
                             file_cfg.get("bkmr_replicates", 5))
    bkmr_iterations = int(_merge(args, file_cfg, "bkmr-iterations",
                                 file_cfg.get("bkmr_iterations", 2000)))
    reference_n = int(_merge(args, file_cfg, "reference-n",
                             file_cfg.get("reference_n", 100_000)))
    seed = int(_merge(args, file_cfg, "seed", 0))
    workers = int(_merge(args, file_cfg, "workers", os.cpu_count() or 1))
    resolved = {
        "subcommand": "simulate",
        "scenarios": scenario_names,
        "methods": list(methods),
        "replicates": replicates,
        "bkmr_replicates": bkmr_replicates,
        "bkmr_iterations": bkmr_iterations,
        "reference_n": reference_n,
        "seed": seed,
    }
    config = StudyConfig(
        scenarios=tuple(SCENARIO_GRID[s] for s in scenario_names),
        methods=methods,
        replicates=replicates,
        seed=seed,
        bkmr_replicates=None if bkmr_replicates in (None, "none") else int(bkmr_replicates),
        bkmr_iterations=bkmr_iterations,
        reference_n=reference_n,
    )
    report = run_study(config, workers=workers)
    run = RunDir(_merge(args, file_cfg, "out", "mixmed-out"), "simulate", resolved)
    _write_metrics(run, report)
    return run


def _write_metrics(run, report):
    agg_header = [
        "scenario", "method", "threshold", "n_ok", "n_failed", "truth",
        "mean_rel_bias", "sd_rel_bias", "mean_abs_rel_bias",
        "tpr_mean", "tpr_sd", "fpr_mean", "fpr_sd",
    ]
    agg_rows = [
        [a.scenario, a.method, a.threshold, a.n_ok, a.n_failed, a.truth,
         a.mean_rel_bias, a.sd_rel_bias, a.mean_abs_rel_bias,
         a.tpr_mean, a.tpr_sd, a.fpr_mean, a.fpr_sd]
        for a in report.aggregates
    ]
    run.write_csv("metrics.csv", agg_header, agg_rows)
    rec_header = ["scenario", "method", "replicate", "stream", "nie_estimate",
                  "truth", "rel_bias", "threshold", "tpr", "fpr", "error"]
    rec_rows = []
    for r in report.records:
        keys = sorted(r.tpr, key=str) or [None]
        for k in keys:
            rec_rows.append([
                r.scenario, r.method, r.replicate,
                ";".join(str(s) for s in r.stream),
                r.nie_estimate, r.truth, r.rel_bias,
                "" if k in (None, "flag") else k,
                r.tpr.get(k), r.fpr.get(k), r.error,
            ])
    run.write_csv("records.csv", rec_header, rec_rows)
    run.write_json(
        "metrics.json",
        {
            "truths": {f"{s}|{m}": v for (s, m), v in report.truths.items()},
            "aggregates": [vars(a) for a in report.aggregates],
            "records": [
                {
                    "scenario": r.scenario,
                    "method": r.method,
                    "replicate": r.replicate,
                    "stream": list(r.stream),
                    "nie_estimate": r.nie_estimate,
                    "truth": r.truth,
                    "rel_bias": r.rel_bias,
                    "tpr": {str(k): v for k, v in r.tpr.items()},
                    "fpr": {str(k): v for k, v in r.fpr.items()},
                    "error": r.error,
                }
                for r in report.records
            ],
        },
    )


def cmd_report(args, file_cfg):
    metrics_path = _merge(args, file_cfg, "metrics")
    if not metrics_path:
        raise ConfigError("--metrics is required (metrics.json from simulate)")
    try:
        with open(metrics_path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"metrics file not found: {metrics_path}") from None
    resolved = {"subcommand": "report", "metrics": str(metrics_path)}
    run = RunDir(_merge(args, file_cfg, "out", "mixmed-out"), "report", resolved)
    rows = []
    for a in payload.get("aggregates", []):
        for metric in ("mean_rel_bias", "mean_abs_rel_bias", "tpr_mean", "fpr_mean"):
            if a.get(metric) is None:
                continue
            sd_key = {"mean_rel_bias": "sd_rel_bias", "tpr_mean": "tpr_sd",
                      "fpr_mean": "fpr_sd"}.get(metric)
            rows.append([
                a["scenario"], a["method"],
                "" if a.get("threshold") is None else a["threshold"],
                metric, a[metric], a.get(sd_key) if sd_key else None,
            ])
    run.write_csv("long.csv", ["scenario", "method", "threshold", "metric",
                               "value", "sd"], rows)
    return run


COMMANDS = {
    "sema": cmd_sema,
    "pcma": cmd_pcma,
    "ersma": cmd_ersma,
    "bkmr-fit": cmd_bkmr_fit,
    "bkmr-cma": cmd_bkmr_cma,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = _load_config_file(args.config)
        run = COMMANDS[args.subcommand](args, file_cfg)
        path = run.finish()
        print(f"wrote {path}")
        return 0
    except (ConfigError, ValueError) as exc:
        _error_report(args, exc)
        return 2
    except DataError as exc:
        _error_report(args, exc)
        return 3
    except NumericalError as exc:
        _error_report(args, exc)
        return 4


def _error_report(args, exc):
    payload = {"error": type(exc).__name__, "message": str(exc),
               "subcommand": getattr(args, "subcommand", None)}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
