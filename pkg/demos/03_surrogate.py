"""Walk through the surrogate metrics: can a small tree stand in for the model?

A depth-limited decision tree is fitted to the model's *predictions*
(not the original targets). Three scores describe how well that simple
stand-in works:

* performance degradation -- how much accuracy/error is lost by swapping in
  the surrogate, as a symmetric relative difference.
* surrogate fidelity      -- how closely the surrogate tracks the model's own
  outputs on the same samples.
* feature stability       -- do bootstrap refits of the surrogate keep
  choosing the same split features?

Run with:  python3 demos/03_surrogate.py
"""

import numpy as np

from eamex import (
    Dataset,
    PredictionSet,
    RngState,
    Task,
    fit_logistic,
    fit_surrogate,
    performance_degradation,
    predict,
    score,
    surrogate_feature_stability,
    surrogate_fidelity,
)

# ------------------------------------------------------------------
# Base model: logistic fit on a task with a clean axis-aligned rule,
# which a shallow tree can imitate well.
# ------------------------------------------------------------------
rng = np.random.default_rng(5)
m, d = 300, 4
features = rng.normal(size=(m, d))
target = ((features[:, 0] > 0.2) & (features[:, 1] < 0.5)).astype(np.float64)
names = [f"f{j}" for j in range(d)]

dataset = Dataset(
    features=features,
    feature_names=names,
    target=target,
    task=Task.CLASSIFICATION,
)
handle = fit_logistic(dataset)
base_preds = predict(handle, dataset.features)
base = score(dataset, base_preds)
print(f"base model accuracy: {base.accuracy:.3f}")

# ------------------------------------------------------------------
# Fit the surrogate tree on the model's predicted labels, then score
# it against the *original* targets for the degradation comparison.
# ------------------------------------------------------------------
surrogate = fit_surrogate(
    dataset.features, base_preds.values, Task.CLASSIFICATION, max_depth=3, n_classes=2
)
surr_values = surrogate.predict(dataset.features)
surr_scores = score(dataset, PredictionSet(values=surr_values))
print(f"surrogate accuracy:  {surr_scores.accuracy:.3f}")

degradation = performance_degradation(base.primary, surr_scores.primary, Task.CLASSIFICATION)
print(f"performance degradation: {degradation:.3f}  (0 = nothing lost)")

# ------------------------------------------------------------------
# Fidelity ignores the targets entirely: what fraction of samples get
# the same label from the surrogate as from the model it imitates?
# ------------------------------------------------------------------
fidelity = surrogate_fidelity(base_preds.values, surr_values, Task.CLASSIFICATION)
print(f"surrogate fidelity: {fidelity:.3f}  (1 = indistinguishable from the model)")

# ------------------------------------------------------------------
# Feature stability: refit the surrogate on k bootstrap resamples and
# compare each run's chosen split features against the full fit's set
# with a Jaccard overlap. Seeded, so reruns match exactly.
# ------------------------------------------------------------------
stability, full_set, bootstrap_sets = surrogate_feature_stability(
    dataset.features,
    base_preds.values,
    Task.CLASSIFICATION,
    k=20,
    rng=RngState(11),
    max_depth=3,
    n_classes=2,
)
print(f"\nsurrogate feature stability: {stability:.3f}  (1 = same features every refit)")
print(f"full-fit split features: {sorted(names[j] for j in full_set)}")
seen = sorted({names[j] for s in bootstrap_sets for j in s})
print(f"features seen across {len(bootstrap_sets)} bootstrap refits: {seen}")
