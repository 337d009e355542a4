"""Walk through the global-importance metrics on a small synthetic task.

A model's global feature importance is a single non-negative vector: one
weight per feature, normalized to sum to one. Three questions about that
vector, plus one about how it holds up across subgroups, each get a score:

* spread divergence  -- how far from "every feature matters equally"?
* alpha score        -- what fraction of the features carries most mass?
* fluctuation ratio  -- how wiggly is the model's response per feature?
* rank alignment     -- do output subgroups agree on the top features?

Run with:  python3 demos/01_global_importance.py
"""

import numpy as np

from eamex import (
    Dataset,
    RngState,
    Task,
    alpha_importance,
    compute_pdp,
    fit_logistic,
    fit_tree,
    fluctuation_ratio,
    partition_by_output,
    permutation_importance,
    predict,
    rank_alignment,
    spread_divergence,
    subgroup_importances,
)

# ------------------------------------------------------------------
# A synthetic binary task where only two of five features matter.
# ------------------------------------------------------------------
rng = np.random.default_rng(7)
m, d = 400, 5
features = rng.normal(size=(m, d))
logit = 2.0 * features[:, 0] - 1.5 * features[:, 1]
target = (logit > 0).astype(np.float64)
names = [f"x{j}" for j in range(d)]

dataset = Dataset(
    features=features,
    feature_names=names,
    target=target,
    task=Task.CLASSIFICATION,
)

handle = fit_logistic(dataset)
print(f"fitted {handle.name!r} on {m} samples, {d} features")

# ------------------------------------------------------------------
# Permutation importance: shuffle one column at a time, measure how
# much the model's score drops. Seeded, so reruns match exactly.
# ------------------------------------------------------------------
importance = permutation_importance(dataset, handle, repeats=5, rng=RngState(0))
for name, value in zip(importance.feature_names, importance.values):
    bar = "#" * int(round(40 * value))
    print(f"  {name}: {value:6.3f} {bar}")

# ------------------------------------------------------------------
# Spread divergence: 0 means perfectly uniform importance, 1 means a
# single feature holds everything. Here two features dominate, so the
# value sits well above zero but below one.
# ------------------------------------------------------------------
spread = spread_divergence(importance)
print(f"\nspread divergence: {spread:.3f}  (0 = uniform, 1 = one feature)")

# ------------------------------------------------------------------
# Alpha score: the smallest fraction of features that covers 80% of
# the importance mass. Two of five features -> 0.4.
# ------------------------------------------------------------------
alpha = alpha_importance(importance, alpha=0.8)
print(f"alpha score (80% mass): {alpha:.3f}  (fraction of features needed)")

# ------------------------------------------------------------------
# Fluctuation ratio: trace each feature's partial-dependence curve and
# count sign changes in its slope. A logistic model responds
# monotonically, so every curve scores 0 -- and this rule is so clean
# that even the tree's step curves stay monotone. On wavier targets
# trees do pick up fluctuation (demo 04's quadratic task shows it).
# ------------------------------------------------------------------
per_feature = []
for j in range(d):
    curve = compute_pdp(dataset, handle, feature_index=j, grid_size=20)
    per_feature.append(fluctuation_ratio(curve, interp_points=100))
print(f"fluctuation per feature (logistic): {per_feature}")

tree = fit_tree(dataset, max_depth=3)
tree_fluct = [
    fluctuation_ratio(compute_pdp(dataset, tree, feature_index=j, grid_size=20), interp_points=100)
    for j in range(d)
]
print(f"fluctuation per feature (tree):     {[round(v, 3) for v in tree_fluct]}")

# ------------------------------------------------------------------
# Rank alignment: split the samples by the model's own output, compute
# importance inside each subgroup, and compare top-feature sets with a
# Jaccard overlap. Values near 1 mean the model relies on the same
# features no matter which output region a sample lands in.
# ------------------------------------------------------------------
partition = partition_by_output(dataset, predict(handle, dataset.features))
group_imps = subgroup_importances(dataset, handle, partition, repeats=5, rng=RngState(0))
alignment = rank_alignment(importance, group_imps, alpha=0.8)
print(f"\nsubgroups: {list(partition.group_names)}")
print(f"rank alignment: {alignment:.3f}  (1 = all subgroups share the top set)")
