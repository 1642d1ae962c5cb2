"""
From statistics to classifiers
==============================

One accumulator yields a whole family of heads: ``alpha=0`` is the shared
covariance (linear) head, ``alpha=1`` the per-class (quadratic) head, and
anything in between blends the two.
"""

# %%
import numpy as np

from srda import HeadConfig, StatisticsAccumulator, build_head, generate_synthetic, topk_accuracy

X, y, params = generate_synthetic(class_count=5, dimension=6, samples_per_class=200,
                                  heteroscedasticity=50.0, seed=1, radius=2.5)
X_test, y_test = params.sample(200, np.random.default_rng(2))
acc = StatisticsAccumulator(6).fit(X, y)

# %%
for alpha in (0.0, 0.5, 1.0):
    model = build_head(acc, HeadConfig(alpha=alpha, epsilon=1e-4))
    print(f"alpha={alpha:.1f}  top-1={topk_accuracy(model, X_test, y_test, 1):.3f}  "
          f"top-2={topk_accuracy(model, X_test, y_test, 2):.3f}")

# %%
# Scores are log posteriors up to a shared constant; softmax gives probabilities.
model = build_head(acc, HeadConfig(alpha=0.5))
x = X_test[0]
print("scores:", np.round(model.score(x), 2))
print("probabilities:", np.round(model.predict_proba(x), 3))
print("top-3 classes:", model.predict_topk(x, 3), "true class:", y_test[0])
