"""Local-importance metrics: rank consistency and importance stability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eamex.core import LocalImportanceMatrix, ValidationError

_DEGENERATE_VMAX = 1e-15


@dataclass(frozen=True, eq=False)
class RankDeviationMap:
    """Per-sample distance of each feature's rank from that feature's mode.

    `row_names` is optional display metadata (e.g. the subgroup each
    sample fell into); it never affects the numbers.
    """

    deviations: np.ndarray
    feature_names: tuple[str, ...]
    row_names: tuple[str, ...] | None = None

    def __post_init__(self):
        dev = np.array(self.deviations, dtype=np.int64)
        names = tuple(str(n) for n in self.feature_names)
        if dev.ndim != 2 or dev.shape[1] != len(names):
            raise ValidationError("deviation matrix width must match names")
        d = len(names)
        if dev.min() < 0 or dev.max() >= d:
            raise ValidationError("rank deviations must lie in [0, d)")
        if self.row_names is not None:
            rows = tuple(str(n) for n in self.row_names)
            if len(rows) != dev.shape[0]:
                raise ValidationError("one row name per sample required")
            object.__setattr__(self, "row_names", rows)
        object.__setattr__(self, "deviations", dev)
        object.__setattr__(self, "feature_names", names)
        self.deviations.flags.writeable = False

    def with_row_names(self, row_names) -> "RankDeviationMap":
        return RankDeviationMap(self.deviations, self.feature_names,
                                tuple(row_names))


@dataclass(frozen=True, eq=False)
class LocalMetrics:
    """Both local metrics, in both orientations, plus per-feature detail."""

    rank_consistency: float
    importance_stability: float
    per_feature_consistency: tuple[float, ...]
    per_feature_stability: tuple[float, ...]

    @property
    def rank_inconsistency(self) -> float:
        return 1.0 - self.rank_consistency

    @property
    def importance_instability(self) -> float:
        return 1.0 - self.importance_stability


def importance_ranks(local: LocalImportanceMatrix) -> np.ndarray:
    """Per-sample feature ranks: 1 = most important, ties to lower index."""
    rows = local.rows
    m, d = rows.shape
    ranks = np.empty((m, d), dtype=np.int64)
    positions = np.arange(1, d + 1)
    for i in range(m):
        order = np.argsort(-rows[i], kind="stable")
        ranks[i, order] = positions
    return ranks


def _column_mode(column: np.ndarray, d: int) -> int:
    counts = np.bincount(column, minlength=d + 1)
    # argmax returns the first maximum, i.e. the smallest tied rank
    return int(np.argmax(counts))


def rank_consistency(local: LocalImportanceMatrix,
                     ) -> tuple[float, np.ndarray, RankDeviationMap]:
    """How tightly each feature's rank clusters around its modal rank.

    Per feature: mean absolute deviation from the most frequent rank,
    normalized by the observed rank range. A feature whose rank never
    varies is perfectly consistent.
    """
    if local.n_samples < 2:
        raise ValidationError("need at least 2 samples to measure consistency")
    ranks = importance_ranks(local)
    m, d = ranks.shape
    per_feature = np.empty(d)
    deviations = np.empty((m, d), dtype=np.int64)
    for j in range(d):
        column = ranks[:, j]
        mode = _column_mode(column, d)
        deviation = np.abs(column - mode)
        deviations[:, j] = deviation
        rank_range = int(column.max()) - int(column.min())
        if rank_range == 0:
            per_feature[j] = 1.0
        else:
            per_feature[j] = 1.0 - float(np.mean(deviation)) / rank_range
    overall = float(np.mean(per_feature))
    dev_map = RankDeviationMap(deviations, local.feature_names)
    return overall, per_feature, dev_map


def importance_stability(local: LocalImportanceMatrix,
                         ) -> tuple[float, np.ndarray]:
    """Variance of each feature's importance against its worst case.

    The worst case for a mean of mu over [0, 1] values is the Bernoulli
    split mu(1-mu); a feature pinned at 0 or 1 has no room to vary and
    counts as perfectly stable.
    """
    if local.n_samples < 2:
        raise ValidationError("need at least 2 samples to measure stability")
    rows = local.rows
    mu = rows.mean(axis=0)
    variance = rows.var(axis=0)          # population variance (divide by M)
    v_max = mu * (1.0 - mu)
    per_feature = np.where(v_max > _DEGENERATE_VMAX,
                           1.0 - variance / np.where(v_max > 0, v_max, 1.0),
                           1.0)
    per_feature = np.clip(per_feature, 0.0, 1.0)
    return float(np.mean(per_feature)), per_feature


def compute_local_metrics(local: LocalImportanceMatrix,
                          ) -> tuple[LocalMetrics, RankDeviationMap]:
    consistency, per_consistency, dev_map = rank_consistency(local)
    stability, per_stability = importance_stability(local)
    metrics = LocalMetrics(
        rank_consistency=consistency,
        importance_stability=stability,
        per_feature_consistency=tuple(float(c) for c in per_consistency),
        per_feature_stability=tuple(float(s) for s in per_stability),
    )
    return metrics, dev_map
