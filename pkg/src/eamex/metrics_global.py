"""Global-importance metrics: spread, concentration, fluctuation, alignment."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from eamex.core import FeatureImportance, ValidationError
from eamex.explain import PdpCurve

DEFAULT_ALPHA = 0.8
DEFAULT_INTERP_POINTS = 100
# cumulative-mass comparisons forgive float dust so exact fractions like
# ten 0.1 entries at alpha 0.8 need exactly 8 features
_MASS_EPS = 1e-12
_FLAT_EPS = 1e-12


class RankAlignmentStrategy(enum.Enum):
    """How the 'important set' of features is selected for alignment."""

    MASS_COVERAGE = "mass_coverage"
    COUNT_PROPORTION = "count_proportion"

    @classmethod
    def parse(cls, text: str) -> "RankAlignmentStrategy":
        for member in cls:
            if member.value == text:
                return member
        raise ValidationError(
            f"unknown rank alignment strategy {text!r}; "
            f"expected one of {[m.value for m in cls]}"
        )


@dataclass(frozen=True, eq=False)
class GlobalMetrics:
    """The four global metrics for one model."""

    spread_divergence: float
    alpha_score: float
    fluctuation_ratio: float | None
    per_feature_fluctuation: tuple[float | None, ...]
    rank_alignment: float | None


def spread_divergence(importance: FeatureImportance) -> float:
    """Base-2 Jensen-Shannon divergence from the uniform distribution.

    Base 2 is what keeps the value inside [0, 1]. A single feature is
    uniform by force, so d = 1 scores 0.
    """
    p = importance.values
    d = p.shape[0]
    if d == 1:
        return 0.0
    u = 1.0 / d
    mid = (p + u) / 2.0
    mask = p > 0.0
    kl_pm = float(np.sum(p[mask] * np.log2(p[mask] / mid[mask])))
    kl_um = float(np.sum(u * np.log2(u / mid)))
    value = 0.5 * (kl_pm + kl_um)
    return min(1.0, max(0.0, value))


def _descending_order(values: np.ndarray) -> np.ndarray:
    # stable sort on negated values: ties resolve to the lower feature index
    return np.argsort(-values, kind="stable")


def _mass_coverage_count(values: np.ndarray, alpha: float) -> int:
    order = _descending_order(values)
    cumulative = np.cumsum(values[order])
    total = float(values.sum())
    needed = alpha * total - _MASS_EPS
    return int(np.searchsorted(cumulative, needed, side="left")) + 1


def alpha_importance(importance: FeatureImportance,
                     alpha: float = DEFAULT_ALPHA) -> float:
    """Fraction of features needed to cover at least alpha of the mass."""
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"alpha must be in (0, 1], got {alpha}")
    d = importance.n_features
    return _mass_coverage_count(importance.values, alpha) / d


def fluctuation_ratio(curve: PdpCurve,
                      interp_points: int = DEFAULT_INTERP_POINTS) -> float:
    """Direction-change rate of the interpolated dependence curve.

    Near-zero slopes carry no direction of their own and inherit the
    previous nonzero one, so plateaus are not counted as oscillation.
    """
    if interp_points < 3:
        raise ValidationError("need at least 3 interpolation points")
    xs = np.linspace(float(curve.grid[0]), float(curve.grid[-1]), interp_points)
    ys = np.interp(xs, curve.grid, curve.values)
    deltas = np.diff(ys)

    directions: list[int | None] = []
    previous: int | None = None
    for delta in deltas:
        if abs(delta) < _FLAT_EPS:
            directions.append(previous)
        else:
            previous = 1 if delta > 0 else -1
            directions.append(previous)

    changes = 0
    for a, b in zip(directions[:-1], directions[1:]):
        if a is not None and b is not None and a != b:
            changes += 1
    return changes / (interp_points - 2)


def average_fluctuation(per_feature: list[float],
                        ) -> float:
    """Unweighted mean of per-feature fluctuation ratios."""
    if not per_feature:
        raise ValidationError(
            "no feature has a defined dependence curve; cannot average"
        )
    return float(np.mean(per_feature))


def top_feature_set(importance: FeatureImportance, alpha: float = DEFAULT_ALPHA,
                    strategy: RankAlignmentStrategy =
                    RankAlignmentStrategy.MASS_COVERAGE) -> frozenset[int]:
    """The 'important features' set used for alignment comparisons."""
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"alpha must be in (0, 1], got {alpha}")
    values = importance.values
    if strategy is RankAlignmentStrategy.MASS_COVERAGE:
        k = _mass_coverage_count(values, alpha)
    else:
        k = math.ceil(alpha * values.shape[0])
    order = _descending_order(values)
    return frozenset(int(i) for i in order[:k])


def rank_alignment(global_imp: FeatureImportance,
                   group_imps: list[FeatureImportance],
                   alpha: float = DEFAULT_ALPHA,
                   strategy: RankAlignmentStrategy =
                   RankAlignmentStrategy.MASS_COVERAGE) -> float:
    """Mean Jaccard overlap between the global top-feature set and each
    subgroup's top-feature set."""
    if not group_imps:
        raise ValidationError("need at least one subgroup importance vector")
    d = global_imp.n_features
    for g in group_imps:
        if g.n_features != d:
            raise ValidationError("group importance width differs from global")
    reference = top_feature_set(global_imp, alpha, strategy)
    overlaps = []
    for g in group_imps:
        candidate = top_feature_set(g, alpha, strategy)
        union = reference | candidate
        overlaps.append(len(reference & candidate) / len(union) if union else 1.0)
    return float(np.mean(overlaps))
