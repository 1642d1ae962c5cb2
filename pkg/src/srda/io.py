"""Feature files, accumulator checkpoints and memory accounting.

Binary feature file layout (little-endian throughout)::

    offset  size  field
    0       4     magic b"SRDA"
    4       2     format version (u16, currently 1)
    6       4     dimension d (u32)
    10      8     sample count n (u64)
    18      ...   n records of d float32 features followed by one u32 label

The CSV alternative has one sample per row: d feature columns, then the
integer label. A header row is optional and detected automatically.

Checkpoints are uncompressed zip archives (readable with ``numpy.load``)
holding ``meta.json`` plus ``.npy`` arrays. Entry timestamps are fixed so
that identical state produces identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import struct
import zipfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .heads import HeadConfig
from .stats import ClassStatistics, LabeledSample, StatisticsAccumulator

__all__ = [
    "CHECKPOINT_VERSION",
    "FEATURE_MAGIC",
    "FEATURE_VERSION",
    "FeatureFormatError",
    "MemoryReport",
    "iter_samples",
    "load_checkpoint",
    "load_features",
    "memory_report",
    "save_checkpoint",
    "save_features",
]

FEATURE_MAGIC = b"SRDA"
FEATURE_VERSION = 1
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


class FeatureFormatError(ValueError):
    pass


def _record_dtype(d: int) -> np.dtype:
    return np.dtype([("x", "<f4", (d,)), ("y", "<u4")])


def _guess_format(path, fmt):
    if fmt is not None:
        if fmt not in ("binary", "csv"):
            raise ValueError(f"format must be 'binary' or 'csv', got {fmt!r}")
        return fmt
    return "csv" if Path(path).suffix.lower() == ".csv" else "binary"


def save_features(path, X, y, format: str | None = None) -> None:
    """Write features and labels; features are stored as float32."""
    X = np.asarray(X)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one label per row")
    if np.any(y < 0) or np.any(y > np.iinfo(np.uint32).max):
        raise ValueError("labels must fit in an unsigned 32-bit integer")
    x32 = X.astype("<f4")
    if not np.all(np.isfinite(x32)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(x32), axis=1))[0])
        raise FeatureFormatError(f"row {bad}: non-finite feature value")
    n, d = X.shape
    if _guess_format(path, format) == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"f{j}" for j in range(d)] + ["label"])
            for row, label in zip(x32.tolist(), y.tolist()):
                w.writerow([repr(v) for v in row] + [int(label)])
        return
    rec = np.empty(n, dtype=_record_dtype(d))
    rec["x"] = x32
    rec["y"] = y.astype("<u4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, d, n))
        fh.write(rec.tobytes())


def _load_binary(path):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FeatureFormatError(f"{path}: truncated header")
    magic, version, d, n = _HEADER.unpack_from(raw)
    if magic != FEATURE_MAGIC:
        raise FeatureFormatError(f"{path}: bad magic bytes {magic!r}")
    if version != FEATURE_VERSION:
        raise FeatureFormatError(f"{path}: unsupported format version {version}")
    if d < 1:
        raise FeatureFormatError(f"{path}: dimension must be >= 1")
    dt = _record_dtype(d)
    body = len(raw) - _HEADER.size
    if body != n * dt.itemsize:
        actual = body / dt.itemsize
        raise FeatureFormatError(f"{path}: header declares {n} records, file holds {actual:g}")
    rec = np.frombuffer(raw, dtype=dt, count=n, offset=_HEADER.size)
    X = rec["x"].astype(np.float64)
    y = rec["y"].astype(np.int64)
    return X, y


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _load_csv(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise FeatureFormatError(f"{path}: no samples")
    width = len(rows[0])
    if width < 2:
        raise FeatureFormatError(f"{path}: need at least one feature column and a label column")
    X = np.empty((len(rows), width - 1))
    y = np.empty(len(rows), dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise FeatureFormatError(f"{path}: row {i} has {len(row)} columns, expected {width}")
        try:
            X[i] = [float(c) for c in row[:-1]]
            label = float(row[-1])
        except ValueError as exc:
            raise FeatureFormatError(f"{path}: row {i}: {exc}") from None
        if not label.is_integer() or label < 0:
            raise FeatureFormatError(f"{path}: row {i}: label {row[-1]!r} is not a non-negative integer")
        y[i] = int(label)
    return X, y


def load_features(path, format: str | None = None):
    """Read a feature file.

    Returns
    -------
    X : ndarray of float64, shape (n, d)
    y : ndarray of int64, shape (n,)
    """
    if _guess_format(path, format) == "csv":
        X, y = _load_csv(path)
    else:
        X, y = _load_binary(path)
    finite = np.all(np.isfinite(X), axis=1)
    if not np.all(finite):
        raise FeatureFormatError(f"{path}: row {int(np.flatnonzero(~finite)[0])}: non-finite feature value")
    return X, y


def iter_samples(X, y):
    for x, label in zip(X, y):
        yield LabeledSample(x, int(label))


# -- checkpoints ---------------------------------------------------------------


def _npy_bytes(arr) -> bytes:
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr), allow_pickle=False)
    return buf.getvalue()


def save_checkpoint(path, acc: StatisticsAccumulator, head_config: HeadConfig | None = None,
                    scenario: dict | None = None, extra: dict | None = None) -> None:
    """Persist an accumulator with its head configuration and run metadata."""
    ids = acc.classes
    d = acc.dimension
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "dimension": d,
        "max_classes": acc.max_classes,
        "counter": acc.counter,
        "total_count": acc.total_count,
        "class_ids": ids,
        "head_config": asdict(head_config) if head_config is not None else None,
        "scenario": scenario or {},
        "extra": extra or {},
    }
    arrays = {
        "counts": np.array([acc[k].count for k in ids], dtype=np.int64),
        "means": np.stack([acc[k].mean for k in ids]) if ids else np.zeros((0, d)),
        "class_covs": np.stack([acc[k].class_cov for k in ids]) if ids else np.zeros((0, d, d)),
        "pooled_cov": acc.pooled_cov,
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        info = zipfile.ZipInfo("meta.json", date_time=_ZIP_EPOCH)
        zf.writestr(info, json.dumps(meta, indent=1, sort_keys=True))
        for name, arr in arrays.items():
            zf.writestr(zipfile.ZipInfo(f"{name}.npy", date_time=_ZIP_EPOCH), _npy_bytes(arr))


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`.

    Returns
    -------
    acc : StatisticsAccumulator
    head_config : HeadConfig or None
    meta : dict
        The full metadata record, including ``scenario`` and ``extra``.
    """
    with zipfile.ZipFile(path) as zf:
        meta = json.loads(zf.read("meta.json"))
        if meta.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {meta.get('format_version')}")
        arrays = {
            name: np.lib.format.read_array(io.BytesIO(zf.read(f"{name}.npy")), allow_pickle=False)
            for name in ("counts", "means", "class_covs", "pooled_cov")
        }
    acc = StatisticsAccumulator(meta["dimension"], meta["max_classes"], meta["counter"])
    acc.total_count = int(meta["total_count"])
    acc.pooled_cov = arrays["pooled_cov"].copy()
    for j, k in enumerate(meta["class_ids"]):
        acc._classes[int(k)] = ClassStatistics(
            int(k), int(arrays["counts"][j]), arrays["means"][j].copy(), arrays["class_covs"][j].copy()
        )
    cfg = meta.get("head_config")
    head_config = HeadConfig(**cfg) if cfg else None
    return acc, head_config, meta


# -- memory accounting ---------------------------------------------------------


@dataclass(frozen=True)
class MemoryReport:
    """Storage needed by the streaming heads at ``bytes_per_scalar`` precision.

    ``class_cov_bytes`` counts the per-class covariances and means,
    ``C * b * (d**2 + d)``. ``srda_bytes`` adds the pooled covariance.
    ``slda_bytes`` counts the pooled covariance plus the class means, while
    ``slda_shared_cov_bytes`` counts the pooled covariance alone.
    """

    classes: int
    dimension: int
    bytes_per_scalar: int
    class_cov_bytes: int
    srda_bytes: int
    slda_bytes: int
    slda_shared_cov_bytes: int

    def lines(self) -> list[str]:
        def gb(n):
            return f"{n / 1e9:.3f} GB"

        return [
            f"classes={self.classes} dimension={self.dimension} bytes_per_scalar={self.bytes_per_scalar}",
            f"class_covariances_and_means: {self.class_cov_bytes} bytes ({gb(self.class_cov_bytes)})",
            f"srda_total: {self.srda_bytes} bytes ({gb(self.srda_bytes)})",
            f"slda_total (shared covariance + means): {self.slda_bytes} bytes ({gb(self.slda_bytes)})",
            f"slda_shared_covariance_only: {self.slda_shared_cov_bytes} bytes "
            f"({gb(self.slda_shared_cov_bytes)})",
        ]


def memory_report(classes: int, dimension: int, bytes_per_scalar: int = 4) -> MemoryReport:
    if classes < 1 or dimension < 1:
        raise ValueError("classes and dimension must be >= 1")
    C, d, b = int(classes), int(dimension), int(bytes_per_scalar)
    class_term = C * b * (d * d + d)
    return MemoryReport(
        classes=C,
        dimension=d,
        bytes_per_scalar=b,
        class_cov_bytes=class_term,
        srda_bytes=class_term + b * d * d,
        slda_bytes=b * (d * d + C * d),
        slda_shared_cov_bytes=b * d * d,
    )
