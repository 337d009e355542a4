"""End-to-end pipeline: config, orchestration, and report emission.

A single run produces one report dictionary that every output format
(JSON, text table, radar SVG) reads from, so the formats can never
disagree. Metrics that a model kind cannot serve are carried as
`{"skipped": reason}` markers instead of numbers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from eamex.core import (
    Dataset,
    FeatureImportance,
    LocalImportanceMatrix,
    PredictionSet,
    Task,
    ValidationError,
    normalize_importance,
    normalize_local,
    partition_by_output,
)
from eamex.explain import (
    DEFAULT_GRID_SIZE,
    DEFAULT_REPEATS,
    compute_pdp_curves,
    occlusion_local_importance,
    permutation_importance,
    subgroup_importances,
)
from eamex.external import launch_external
from eamex.metrics_global import (
    DEFAULT_ALPHA,
    DEFAULT_INTERP_POINTS,
    RankAlignmentStrategy,
    alpha_importance,
    average_fluctuation,
    fluctuation_ratio,
    rank_alignment,
    spread_divergence,
)
from eamex.metrics_local import RankDeviationMap, compute_local_metrics
from eamex.models import (
    ModelHandle,
    ModelKind,
    fit_linear,
    fit_logistic,
    fit_tree,
    precomputed_table,
    predict,
    score,
)
from eamex.rng import RngState
from eamex.surrogate import (
    DEFAULT_BOOTSTRAPS,
    fit_surrogate,
    performance_degradation,
    surrogate_feature_stability,
    surrogate_fidelity,
)

REPORT_VERSION = "eamex-report/1"

REFERENCE_VALUES = {
    "spread_divergence": 1,
    "alpha_score": 0,
    "fluctuation_ratio": 0,
    "rank_alignment": 1,
    "rank_consistency_table_orientation": 0,
    "importance_stability_table_orientation": 0,
    "degradation": 0,
    "fidelity": 1,
    "feature_stability": 1,
}

ALL_FAMILIES = ("efficacy", "global", "local", "surrogate")

_MODEL_KINDS = {
    "linear": ModelKind.BUILTIN_LINEAR,
    "logistic": ModelKind.BUILTIN_LOGISTIC,
    "tree": ModelKind.BUILTIN_TREE,
    "table": ModelKind.PRECOMPUTED_TABLE,
    "external": ModelKind.EXTERNAL_PROCESS,
}


def _skipped(reason: str) -> dict:
    return {"skipped": reason}


def is_skipped(value) -> bool:
    return isinstance(value, dict) and "skipped" in value


# ---------------------------------------------------------------------------
# file ingestion
# ---------------------------------------------------------------------------

def _read_csv_rows(path: Path) -> list[list[str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise ValidationError(f"{path}: need a header row and at least one data row")
    return rows


def _parse_float(cell: str, path: Path, line: int, column: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ValidationError(
            f"{path}, line {line}: could not parse {cell!r} in column {column!r}"
        ) from None


def load_dataset(path: str | Path, target: str, task: Task) -> Dataset:
    """Dataset CSV: header row; every non-target column is a feature."""
    path = Path(path)
    rows = _read_csv_rows(path)
    header = [h.strip() for h in rows[0]]
    if target not in header:
        raise ValidationError(
            f"{path}: target column {target!r} not in header {header}"
        )
    target_pos = header.index(target)
    feature_names = tuple(h for i, h in enumerate(header) if i != target_pos)
    if not feature_names:
        raise ValidationError(f"{path}: no feature columns besides the target")

    features = np.empty((len(rows) - 1, len(feature_names)))
    target_values = np.empty(len(rows) - 1)
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(
                f"{path}, line {r}: expected {len(header)} cells, got {len(row)}"
            )
        k = 0
        for i, cell in enumerate(row):
            if i == target_pos:
                target_values[r - 2] = _parse_float(cell, path, r, target)
            else:
                features[r - 2, k] = _parse_float(cell, path, r, header[i])
                k += 1
    return Dataset(features, feature_names, target_values, task)


def load_predictions(path: str | Path) -> PredictionSet:
    """Predictions CSV: a `prediction` column, optional `p0..pK` columns."""
    path = Path(path)
    rows = _read_csv_rows(path)
    header = [h.strip() for h in rows[0]]
    if "prediction" not in header:
        raise ValidationError(f"{path}: missing required column 'prediction'")
    pred_pos = header.index("prediction")
    proba_cols = [(i, h) for i, h in enumerate(header) if h != "prediction"]
    for i, h in proba_cols:
        if not (h.startswith("p") and h[1:].isdigit()):
            raise ValidationError(
                f"{path}: unexpected column {h!r}; use 'prediction' plus "
                f"probability columns named p0, p1, ..."
            )
    proba_cols.sort(key=lambda pair: int(pair[1][1:]))

    values = np.empty(len(rows) - 1)
    probabilities = np.empty((len(rows) - 1, len(proba_cols))) if proba_cols else None
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(
                f"{path}, line {r}: expected {len(header)} cells, got {len(row)}"
            )
        values[r - 2] = _parse_float(row[pred_pos], path, r, "prediction")
        if probabilities is not None:
            for k, (i, h) in enumerate(proba_cols):
                probabilities[r - 2, k] = _parse_float(row[i], path, r, h)
    return PredictionSet(values, probabilities=probabilities)


def ingest_importance_file(path: str | Path, kind: str, dataset: Dataset):
    """Outside explainer output: CSV with the dataset's feature names.

    kind "global" expects one data row, "local" one row per sample.
    Columns may come in any order; they are matched by name.
    """
    path = Path(path)
    if kind not in ("global", "local"):
        raise ValidationError(f"importance kind must be 'global' or 'local', "
                              f"got {kind!r}")
    rows = _read_csv_rows(path)
    header = tuple(h.strip() for h in rows[0])
    expected = set(dataset.feature_names)
    got = set(header)
    if got != expected:
        missing = sorted(expected - got)
        unknown = sorted(got - expected)
        parts = []
        if missing:
            parts.append(f"missing feature columns {missing}")
        if unknown:
            parts.append(f"unknown feature columns {unknown}")
        raise ValidationError(f"{path}: {'; '.join(parts)}")
    if len(header) != len(set(header)):
        raise ValidationError(f"{path}: duplicate feature columns")

    data = np.empty((len(rows) - 1, len(header)))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(
                f"{path}, line {r}: expected {len(header)} cells, got {len(row)}"
            )
        for i, cell in enumerate(row):
            data[r - 2, i] = _parse_float(cell, path, r, header[i])
    # reorder columns into the dataset's feature order
    positions = [header.index(name) for name in dataset.feature_names]
    data = data[:, positions]

    if kind == "global":
        if data.shape[0] != 1:
            raise ValidationError(
                f"{path}: global importance needs exactly 1 data row, "
                f"got {data.shape[0]}"
            )
        return normalize_importance(data[0], dataset.feature_names)
    if data.shape[0] != dataset.n_samples:
        raise ValidationError(
            f"{path}: local importance has {data.shape[0]} rows but the "
            f"dataset has {dataset.n_samples} samples"
        )
    return normalize_local(data, dataset.feature_names)


# ---------------------------------------------------------------------------
# digests
# ---------------------------------------------------------------------------

def dataset_digest(dataset: Dataset) -> str:
    """Hash of the parsed content (never the path), so reports match
    whenever the data matches."""
    h = hashlib.sha256()
    h.update(dataset.task.value.encode("utf-8"))
    h.update(struct.pack("<QQ", dataset.n_samples, dataset.n_features))
    h.update("\x1f".join(dataset.feature_names).encode("utf-8"))
    h.update(np.ascontiguousarray(dataset.features, dtype=np.float64).tobytes())
    h.update(np.ascontiguousarray(dataset.target, dtype=np.float64).tobytes())
    return h.hexdigest()


def predictions_digest(predictions: PredictionSet) -> str:
    h = hashlib.sha256()
    values = np.ascontiguousarray(predictions.values, dtype=np.float64)
    h.update(struct.pack("<Q", values.shape[0]))
    h.update(values.tobytes())
    if predictions.probabilities is not None:
        probs = np.ascontiguousarray(predictions.probabilities, dtype=np.float64)
        h.update(struct.pack("<Q", probs.shape[1]))
        h.update(probs.tobytes())
    return h.hexdigest()


def importance_digest(obj) -> str:
    """Digest of an ingested importance table (global vector or local rows)."""
    values = obj.values if isinstance(obj, FeatureImportance) else obj.rows
    h = hashlib.sha256()
    h.update("\x1f".join(obj.feature_names).encode("utf-8"))
    h.update(np.ascontiguousarray(values, dtype=np.float64).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RunParams:
    alpha: float = DEFAULT_ALPHA
    grid_size: int = DEFAULT_GRID_SIZE
    interp_points: int = DEFAULT_INTERP_POINTS
    repeats: int = DEFAULT_REPEATS
    bootstraps: int = DEFAULT_BOOTSTRAPS
    rank_alignment_strategy: RankAlignmentStrategy = \
        RankAlignmentStrategy.MASS_COVERAGE


@dataclass(frozen=True, eq=False)
class ModelSpec:
    name: str
    kind: str
    command: str | None = None
    predictions_path: Path | None = None


@dataclass(frozen=True, eq=False)
class RunConfig:
    dataset: Dataset
    models: tuple[ModelSpec, ...]
    global_explainer: str          # "permutation" or a file path
    local_explainer: str           # "occlusion" or a file path
    params: RunParams
    seed: int
    base_dir: Path


def _require_keys(obj: dict, allowed: set[str], where: str):
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ValidationError(f"{where}: unknown keys {unknown}")


def parse_config(raw: dict, base_dir: str | Path = ".") -> RunConfig:
    """Validate the config document and load the dataset it names."""
    base_dir = Path(base_dir)
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    _require_keys(raw, {"dataset", "models", "explainers", "params", "seed"},
                  "config")

    dataset_cfg = raw.get("dataset")
    if not isinstance(dataset_cfg, dict):
        raise ValidationError("config.dataset must be an object")
    _require_keys(dataset_cfg, {"path", "target", "task"}, "config.dataset")
    for key in ("path", "target", "task"):
        if not isinstance(dataset_cfg.get(key), str):
            raise ValidationError(f"config.dataset.{key} must be a string")
    task = Task.parse(dataset_cfg["task"])
    dataset = load_dataset(base_dir / dataset_cfg["path"], dataset_cfg["target"],
                           task)

    models_cfg = raw.get("models")
    if not isinstance(models_cfg, list) or not models_cfg:
        raise ValidationError("config.models must be a non-empty array")
    specs = []
    seen_names = set()
    for i, model_cfg in enumerate(models_cfg):
        where = f"config.models[{i}]"
        if not isinstance(model_cfg, dict):
            raise ValidationError(f"{where} must be an object")
        _require_keys(model_cfg, {"name", "kind", "command", "predictions_path"},
                      where)
        name = model_cfg.get("name")
        kind = model_cfg.get("kind")
        if not isinstance(name, str) or not name:
            raise ValidationError(f"{where}.name must be a non-empty string")
        if name in seen_names:
            raise ValidationError(f"duplicate model name {name!r}")
        seen_names.add(name)
        if kind not in _MODEL_KINDS:
            raise ValidationError(
                f"{where}.kind must be one of {sorted(_MODEL_KINDS)}, got {kind!r}"
            )
        command = model_cfg.get("command")
        predictions_path = model_cfg.get("predictions_path")
        if kind == "external" and not isinstance(command, str):
            raise ValidationError(f"{where}: external models need a command")
        if kind == "table" and not isinstance(predictions_path, str):
            raise ValidationError(f"{where}: table models need predictions_path")
        if kind != "external" and command is not None:
            raise ValidationError(f"{where}: command only applies to external")
        if kind != "table" and predictions_path is not None:
            raise ValidationError(f"{where}: predictions_path only applies to table")
        specs.append(ModelSpec(
            name=name, kind=kind, command=command,
            predictions_path=(base_dir / predictions_path
                              if predictions_path else None),
        ))

    explainers_cfg = raw.get("explainers", {})
    if not isinstance(explainers_cfg, dict):
        raise ValidationError("config.explainers must be an object")
    _require_keys(explainers_cfg, {"global", "local"}, "config.explainers")
    global_explainer = explainers_cfg.get("global", "permutation")
    local_explainer = explainers_cfg.get("local", "occlusion")
    if not isinstance(global_explainer, str) or not isinstance(local_explainer, str):
        raise ValidationError("explainer entries must be strings")

    params_cfg = raw.get("params", {})
    if not isinstance(params_cfg, dict):
        raise ValidationError("config.params must be an object")
    _require_keys(params_cfg, {"alpha", "grid_size", "interp_points", "repeats",
                               "bootstraps", "rank_alignment_strategy"},
                  "config.params")
    defaults = RunParams()

    def _number(key, default, kind=float, minimum=None):
        value = params_cfg.get(key, default)
        if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
            raise ValidationError(f"config.params.{key} must be an integer")
        if kind is float and not isinstance(value, (int, float)):
            raise ValidationError(f"config.params.{key} must be a number")
        value = kind(value)
        if minimum is not None and value < minimum:
            raise ValidationError(f"config.params.{key} must be >= {minimum}")
        return value

    strategy_text = params_cfg.get("rank_alignment_strategy",
                                   defaults.rank_alignment_strategy.value)
    params = RunParams(
        alpha=_number("alpha", defaults.alpha, float),
        grid_size=_number("grid_size", defaults.grid_size, int, 2),
        interp_points=_number("interp_points", defaults.interp_points, int, 3),
        repeats=_number("repeats", defaults.repeats, int, 1),
        bootstraps=_number("bootstraps", defaults.bootstraps, int, 1),
        rank_alignment_strategy=RankAlignmentStrategy.parse(strategy_text),
    )
    if not 0.0 < params.alpha <= 1.0:
        raise ValidationError("config.params.alpha must be in (0, 1]")

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ValidationError("config.seed must be a non-negative integer")

    return RunConfig(dataset=dataset, models=tuple(specs),
                     global_explainer=global_explainer,
                     local_explainer=local_explainer,
                     params=params, seed=seed, base_dir=base_dir)


def load_config_file(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw, base_dir=path.parent)


# ---------------------------------------------------------------------------
# per-model evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MetricsReport:
    """The JSON-ready report plus side artifacts the CLI can export."""

    data: dict
    deviation_maps: dict[str, RankDeviationMap | None] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, ensure_ascii=False) + "\n"


def _resolve_handle(spec: ModelSpec, dataset: Dataset,
                    expected_task: Task) -> ModelHandle:
    if spec.kind == "linear":
        return fit_linear(dataset, name=spec.name)
    if spec.kind == "logistic":
        return fit_logistic(dataset, name=spec.name)
    if spec.kind == "tree":
        return fit_tree(dataset, name=spec.name)
    if spec.kind == "table":
        stored = load_predictions(spec.predictions_path)
        return precomputed_table(dataset, stored.require_length(dataset.n_samples),
                                 name=spec.name)
    return launch_external(spec.command, expected_task=expected_task,
                           name=spec.name)


def _feature_fluctuations(dataset: Dataset, handle: ModelHandle,
                          params: RunParams) -> tuple[list, list[str]]:
    """Per-feature fluctuation (None for constant features) + excluded names."""
    per_feature: list[float | None] = []
    excluded: list[str] = []
    for j, name in enumerate(dataset.feature_names):
        try:
            curves = compute_pdp_curves(dataset, handle, j,
                                        grid_size=params.grid_size)
        except ValidationError as exc:
            if "constant feature" not in str(exc):
                raise
            per_feature.append(None)
            excluded.append(name)
            continue
        ratios = [fluctuation_ratio(c, interp_points=params.interp_points)
                  for c in curves]
        per_feature.append(float(np.mean(ratios)))
    return per_feature, excluded


def _global_family(dataset: Dataset, handle: ModelHandle,
                   predictions: PredictionSet, config: RunConfig,
                   rng: RngState,
                   ingested_global: FeatureImportance | None) -> dict:
    params = config.params
    out: dict = {}

    if ingested_global is not None:
        importance = ingested_global
        importance_source = "file"
    elif handle.supports_novel_rows:
        importance = permutation_importance(dataset, handle,
                                            repeats=params.repeats, rng=rng)
        importance_source = "permutation"
    else:
        importance = None
        importance_source = None

    if importance is None:
        reason = (f"model {handle.name!r} only replays stored predictions; "
                  f"permutation importance unavailable")
        out["spread_divergence"] = _skipped(reason)
        out["alpha_score"] = _skipped(reason)
    else:
        out["spread_divergence"] = spread_divergence(importance)
        out["alpha_score"] = alpha_importance(importance, alpha=params.alpha)
        out["importance"] = [float(v) for v in importance.values]

    if handle.supports_novel_rows:
        per_feature, excluded = _feature_fluctuations(dataset, handle, params)
        defined = [v for v in per_feature if v is not None]
        if defined:
            out["fluctuation_ratio"] = average_fluctuation(defined)
        else:
            out["fluctuation_ratio"] = _skipped(
                "every feature is constant; no dependence curve is defined"
            )
        out["per_feature_fluctuation"] = per_feature
        out["excluded_features"] = excluded
    else:
        out["fluctuation_ratio"] = _skipped(
            f"model {handle.name!r} only replays stored predictions; "
            f"dependence grids unavailable"
        )

    if importance_source != "permutation":
        if importance_source == "file":
            out["rank_alignment"] = _skipped(
                "global importance was ingested from a file; no per-subgroup "
                "importances to align against"
            )
        else:
            out["rank_alignment"] = _skipped(
                f"model {handle.name!r} only replays stored predictions; "
                f"subgroup importances unavailable"
            )
    else:
        try:
            partition = partition_by_output(dataset, predictions)
            groups = subgroup_importances(dataset, handle, partition,
                                          repeats=params.repeats, rng=rng)
            out["rank_alignment"] = rank_alignment(
                importance, groups, alpha=params.alpha,
                strategy=params.rank_alignment_strategy)
            out["subgroups"] = list(partition.group_names)
        except ValidationError as exc:
            out["rank_alignment"] = _skipped(str(exc))
    return out


def _local_family(dataset: Dataset, handle: ModelHandle,
                  predictions: PredictionSet, config: RunConfig,
                  ingested_local: LocalImportanceMatrix | None,
                  ) -> tuple[dict, RankDeviationMap | None]:
    if ingested_local is not None:
        local = ingested_local
    elif handle.supports_novel_rows:
        local = occlusion_local_importance(dataset, handle)
    else:
        reason = (f"model {handle.name!r} only replays stored predictions; "
                  f"occlusion requires live prediction")
        return ({"rank_consistency": _skipped(reason),
                 "rank_inconsistency": _skipped(reason),
                 "importance_stability": _skipped(reason),
                 "importance_instability": _skipped(reason)}, None)

    metrics, dev_map = compute_local_metrics(local)
    try:
        partition = partition_by_output(dataset, predictions)
        names = tuple(partition.group_names[g] for g in partition.group_labels)
        dev_map = dev_map.with_row_names(names)
    except ValidationError:
        pass
    out = {
        "rank_consistency": metrics.rank_consistency,
        "rank_inconsistency": metrics.rank_inconsistency,
        "importance_stability": metrics.importance_stability,
        "importance_instability": metrics.importance_instability,
        "per_feature_consistency": list(metrics.per_feature_consistency),
        "per_feature_stability": list(metrics.per_feature_stability),
    }
    return out, dev_map


def _surrogate_family(dataset: Dataset, handle: ModelHandle,
                      predictions: PredictionSet, config: RunConfig,
                      rng: RngState, base_scores) -> dict:
    task = dataset.task
    n_classes = dataset.n_classes if task is Task.CLASSIFICATION else None
    y_pred = np.asarray(predictions.values, dtype=np.float64)
    target_for_tree = y_pred.astype(np.int64) if task is Task.CLASSIFICATION \
        else y_pred

    surrogate = fit_surrogate(dataset.features, target_for_tree, task,
                              n_classes=n_classes)
    surrogate_values = surrogate.predict(dataset.features).astype(np.float64)
    surrogate_scores = score(dataset, PredictionSet(surrogate_values))

    degradation = performance_degradation(base_scores.primary,
                                          surrogate_scores.primary, task)
    fidelity = surrogate_fidelity(y_pred, surrogate_values, task)
    stability, original, bootstrap_sets = surrogate_feature_stability(
        dataset.features, target_for_tree, task, k=config.params.bootstraps,
        rng=rng, n_classes=n_classes)

    names = dataset.feature_names
    return {
        "degradation": degradation,
        "fidelity": fidelity,
        "feature_stability": stability,
        "selected_features": sorted(names[i] for i in original),
        "bootstrap_feature_sets": [sorted(names[i] for i in s)
                                   for s in bootstrap_sets],
    }


def _evaluate_model(spec: ModelSpec, config: RunConfig, seed: int,
                    families: tuple[str, ...],
                    ingested_global: FeatureImportance | None,
                    ingested_local: LocalImportanceMatrix | None,
                    ) -> tuple[dict, RankDeviationMap | None]:
    dataset = config.dataset
    rng = RngState(seed=seed)
    handle = _resolve_handle(spec, dataset, dataset.task)
    try:
        predictions = predict(handle, dataset.features)
        entry: dict = {"kind": spec.kind,
                       "predictions_digest": predictions_digest(predictions)}
        base_scores = score(dataset, predictions)
        dev_map = None
        if "efficacy" in families:
            entry["efficacy"] = {k: float(v)
                                 for k, v in base_scores.as_dict().items()}
        if "global" in families:
            entry["global"] = _global_family(dataset, handle, predictions,
                                             config, rng, ingested_global)
        if "local" in families:
            entry["local"], dev_map = _local_family(dataset, handle, predictions,
                                                    config, ingested_local)
        if "surrogate" in families:
            entry["surrogate"] = _surrogate_family(dataset, handle, predictions,
                                                   config, rng, base_scores)
        return entry, dev_map
    finally:
        close = getattr(handle.impl, "close", None)
        if close is not None:
            close()


def run_suite(config: RunConfig, families: tuple[str, ...] = ALL_FAMILIES,
              seed: int | None = None, parallel: bool = False) -> MetricsReport:
    """Evaluate every configured model and assemble the report.

    `parallel` fans models out to threads; because every random draw
    comes from a pre-split stream keyed by purpose (never from shared
    state), the output is identical either way.
    """
    for family in families:
        if family not in ALL_FAMILIES:
            raise ValidationError(f"unknown metric family {family!r}")
    dataset = config.dataset
    effective_seed = config.seed if seed is None else seed

    # the report names explainers by content, never by path, so two runs
    # over the same data match byte-for-byte wherever the files live
    ingested_global = None
    global_desc = "permutation"
    if config.global_explainer != "permutation":
        ingested_global = ingest_importance_file(
            config.base_dir / config.global_explainer, "global", dataset)
        global_desc = f"file:{importance_digest(ingested_global)}"
    ingested_local = None
    local_desc = "occlusion"
    if config.local_explainer != "occlusion":
        ingested_local = ingest_importance_file(
            config.base_dir / config.local_explainer, "local", dataset)
        local_desc = f"file:{importance_digest(ingested_local)}"

    def evaluate(spec: ModelSpec):
        return _evaluate_model(spec, config, effective_seed, families,
                               ingested_global, ingested_local)

    if parallel and len(config.models) > 1:
        with ThreadPoolExecutor(max_workers=len(config.models)) as pool:
            results = list(pool.map(evaluate, config.models))
    else:
        results = [evaluate(spec) for spec in config.models]

    models_payload = {}
    deviation_maps = {}
    for spec, (entry, dev_map) in zip(config.models, results):
        models_payload[spec.name] = entry
        deviation_maps[spec.name] = dev_map

    data = {
        "version": REPORT_VERSION,
        "run_config": {
            "task": dataset.task.value,
            "seed": effective_seed,
            "alpha": config.params.alpha,
            "grid_size": config.params.grid_size,
            "interp_points": config.params.interp_points,
            "repeats": config.params.repeats,
            "bootstraps": config.params.bootstraps,
            "rank_alignment_strategy": config.params.rank_alignment_strategy.value,
            "explainers": {"global": global_desc, "local": local_desc},
            "families": list(families),
            "n_samples": dataset.n_samples,
            "n_features": dataset.n_features,
            "feature_names": list(dataset.feature_names),
            "dataset_digest": dataset_digest(dataset),
        },
        "reference_values": dict(REFERENCE_VALUES),
        "models": models_payload,
    }
    return MetricsReport(data=data, deviation_maps=deviation_maps)


# ---------------------------------------------------------------------------
# text table
# ---------------------------------------------------------------------------

_FAMILY_TITLES = {
    "efficacy": "Efficacy",
    "global": "Global Feature Imp.",
    "local": "Local Feature Imp.",
    "surrogate": "Surrogate",
}


def _table_rows(task: str, families: list[str]) -> list[tuple[str, str, str, object]]:
    """(family, label, json-path key, REF display) per table row."""
    rows: list[tuple[str, str, str, object]] = []
    if "efficacy" in families:
        if task == "classification":
            rows += [("efficacy", "Accuracy", "accuracy", 1),
                     ("efficacy", "F1-Score", "f1_macro", 1)]
        else:
            rows += [("efficacy", "RMSE", "rmse", 0),
                     ("efficacy", "SMAPE", "smape", 0)]
    if "global" in families:
        rows += [
            ("global", "Spread Divergence", "spread_divergence",
             REFERENCE_VALUES["spread_divergence"]),
            ("global", "Alpha Score", "alpha_score",
             REFERENCE_VALUES["alpha_score"]),
            ("global", "Fluctuation Ratio", "fluctuation_ratio",
             REFERENCE_VALUES["fluctuation_ratio"]),
            ("global", "Rank Alignment", "rank_alignment",
             REFERENCE_VALUES["rank_alignment"]),
        ]
    if "local" in families:
        # the table shows the inverted orientation (0 is best), matching
        # the JSON keys rank_inconsistency / importance_instability
        rows += [
            ("local", "Rank Consistency", "rank_inconsistency",
             REFERENCE_VALUES["rank_consistency_table_orientation"]),
            ("local", "Importance Stability", "importance_instability",
             REFERENCE_VALUES["importance_stability_table_orientation"]),
        ]
    if "surrogate" in families:
        degradation_label = ("Acc. Degradation" if task == "classification"
                             else "MSE Degradation")
        rows += [
            ("surrogate", degradation_label, "degradation",
             REFERENCE_VALUES["degradation"]),
            ("surrogate", "Surr. Fidelity", "fidelity",
             REFERENCE_VALUES["fidelity"]),
            ("surrogate", "Surr. Feature Stability", "feature_stability",
             REFERENCE_VALUES["feature_stability"]),
        ]
    return rows


def _cell(value) -> str:
    if value is None or is_skipped(value):
        return "—"
    return f"{value:.3f}"


def render_table(report: MetricsReport) -> str:
    """Fixed-width table: families as sections, models as columns, REF last."""
    data = report.data
    if not data.get("models"):
        raise ValidationError("report contains no models")
    task = data["run_config"]["task"]
    families = data["run_config"]["families"]
    model_names = list(data["models"])
    rows = _table_rows(task, families)

    cells: list[list[str]] = []
    for family, label, key, ref in rows:
        line = [label]
        for name in model_names:
            family_payload = data["models"][name].get(family, {})
            line.append(_cell(family_payload.get(key)))
        line.append(str(ref))
        cells.append(line)

    label_width = max(len("Metrics"),
                      max(len(line[0]) for line in cells) + 2)
    col_widths = []
    for c, name in enumerate(model_names + ["REF"], start=1):
        width = max(len(name), max(len(line[c]) for line in cells))
        col_widths.append(width)

    def format_line(label: str, values: list[str], indent: str = "") -> str:
        out = (indent + label).ljust(label_width)
        for value, width in zip(values, col_widths):
            out += "  " + value.rjust(width)
        return out.rstrip()

    lines = [format_line("Metrics", model_names + ["REF"])]
    lines.append("-" * len(lines[0]))
    current_family = None
    for (family, label, key, ref), line in zip(rows, cells):
        if family != current_family:
            lines.append(_FAMILY_TITLES[family])
            current_family = family
        lines.append(format_line(label, line[1:], indent="  "))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# deviation-map CSV
# ---------------------------------------------------------------------------

def deviation_map_csv(dev_map: RankDeviationMap) -> str:
    """Rank-deviation matrix as CSV, one row per sample in dataset order."""
    header = ["group"] + list(dev_map.feature_names)
    rows = []
    for i in range(dev_map.deviations.shape[0]):
        name = dev_map.row_names[i] if dev_map.row_names is not None else str(i)
        rows.append([name] + [str(int(v)) for v in dev_map.deviations[i]])
    lines = [",".join(header)] + [",".join(r) for r in rows]
    return "\n".join(lines) + "\n"
