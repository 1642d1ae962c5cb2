"""
A class-incremental stream
==========================

Classes arrive one block at a time. After a base phase the head is
evaluated every few classes on the test samples of the classes seen so far,
and compared with a head fit offline on the same classes.
"""

# %%
import numpy as np

from srda import HeadConfig, ScenarioConfig, generate_synthetic, make_plan, offline_reference, run_stream

X, y, params = generate_synthetic(20, 16, 60, heteroscedasticity=30.0, seed=3)
X_test, y_test = params.sample(50, np.random.default_rng(4))

plan = make_plan(y, ScenarioConfig(base_class_count=5, increment_size=5, class_order_seed=7))
print("class order:", plan.class_order)
print("checkpoints:", plan.checkpoints)

# %%
head = HeadConfig(alpha=0.4, top_k=5)
report, acc = run_stream(X, y, plan, head, X_test, y_test)
print(report.to_csv())

# %%
# Discriminant heads never overwrite old statistics, so the streaming run
# matches the offline reference checkpoint for checkpoint.
reference = offline_reference(X, y, X_test, y_test, head, plan.class_sets(y))
report = report.with_offline(reference)
print(report.summary())
