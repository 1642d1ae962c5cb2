"""
Choosing alpha after training
=============================

With heterogeneous class covariances and few samples per class, neither
endpoint is best: the per-class head overfits its noisy covariances and the
shared head ignores real differences. A grid over alpha, evaluated on a small
holdout, finds the compromise without another pass over the data.
"""

# %%
import numpy as np

from srda import (AlphaGrid, ScenarioConfig, balanced_holdout, generate_synthetic, grid_search_alpha,
                  make_plan, run_stream)

X, y, params = generate_synthetic(20, 32, 40, heteroscedasticity=100.0, seed=0)
X_test, y_test = params.sample(100, np.random.default_rng(1))

# Reserve 10 samples per class from the stream for tuning; train on the rest.
holdout, rest = balanced_holdout(y, per_class_budget=10, seed=0)
X_train, y_train = X[rest], y[rest]
_, acc = run_stream(X_train, y_train, make_plan(y_train, ScenarioConfig()))

# %%
result = grid_search_alpha(acc, X[holdout], y[holdout], AlphaGrid())
print("alpha  holdout-accuracy")
for a, v in zip(result.alphas, result.accuracies):
    print(f"{a:5.2f}  {v:.3f}  " + "#" * int(40 * v))
print("best alpha:", result.best_alpha)

# %%
# The same frozen accumulator evaluated on the test set at the chosen alpha.
test_curve = grid_search_alpha(acc, X_test, y_test, AlphaGrid((0.0, result.best_alpha, 1.0)))
for a, v in zip(test_curve.alphas, test_curve.accuracies):
    print(f"test accuracy at alpha={a:.2f}: {v:.3f}")
