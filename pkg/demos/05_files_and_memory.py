"""
Feature files, checkpoints and memory
=====================================

Round-trip features through the binary and CSV formats, persist an
accumulator, and size the storage needed at ImageNet scale.
"""

# %%
import tempfile
from pathlib import Path

import numpy as np

from srda import (HeadConfig, StatisticsAccumulator, generate_synthetic, load_checkpoint, load_features,
                  memory_report, save_checkpoint, save_features)

X, y, _ = generate_synthetic(3, 4, 5, seed=0)
tmp = Path(tempfile.mkdtemp())
save_features(tmp / "features.srda", X, y)
save_features(tmp / "features.csv", X, y)
Xb, yb = load_features(tmp / "features.srda")
Xc, yc = load_features(tmp / "features.csv")
print("binary == csv:", np.array_equal(Xb, Xc) and np.array_equal(yb, yc))
print("binary size:", (tmp / "features.srda").stat().st_size, "bytes")

# %%
acc = StatisticsAccumulator(4).fit(Xb, yb)
save_checkpoint(tmp / "model.ckpt", acc, HeadConfig(alpha=0.5))
restored, head, meta = load_checkpoint(tmp / "model.ckpt")
print("restored:", restored, head)

# %%
for line in memory_report(classes=1000, dimension=512).lines():
    print(line)
