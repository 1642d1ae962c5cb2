"""
Streaming class statistics
==========================

Feed samples one at a time and watch the running means and covariances
agree with a batch computation over the same data.
"""

# %%
import numpy as np

from srda import StatisticsAccumulator

rng = np.random.default_rng(0)
y = rng.integers(0, 3, size=500)
X = rng.normal(size=(500, 4)) * [1.0, 2.0, 0.5, 3.0] + y[:, None]

acc = StatisticsAccumulator(dimension=4)
for x, label in zip(X, y):
    acc.fit_one(x, label)

print(acc)
print("counts:", acc.counts())
print("priors:", {k: round(v, 3) for k, v in acc.priors().items()})

# %%
# Each class covariance is the biased (divide-by-n) sample covariance.
for k in acc.classes:
    Z = X[y == k]
    batch = np.cov(Z, rowvar=False, bias=True)
    err = np.linalg.norm(acc[k].class_cov - batch) / np.linalg.norm(batch)
    print(f"class {k}: relative Frobenius error vs batch = {err:.1e}")

# %%
# The pooled covariance is the count-weighted average of the class covariances.
weighted = sum(acc[k].count * acc[k].class_cov for k in acc.classes) / acc.total_count
print("pooled matches weighted average:", np.allclose(acc.pooled_cov, weighted))

# %%
# Disjoint shards can be accumulated separately and merged.
left = StatisticsAccumulator(4).fit(X[:200], y[:200])
right = StatisticsAccumulator(4).fit(X[200:], y[200:])
merged = left | right
print("merged pooled covariance error:",
      np.linalg.norm(merged.pooled_cov - acc.pooled_cov) / np.linalg.norm(acc.pooled_cov))
