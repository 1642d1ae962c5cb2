import struct

import numpy as np
import pytest

from srda import HeadConfig, load_checkpoint, load_features, memory_report, save_checkpoint, save_features
from srda.io import FeatureFormatError
from srda.stats import StatisticsAccumulator


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    return rng.normal(size=(3, 4)), np.array([0, 2, 7])


class TestFeatureFiles:
    def test_binary_round_trip(self, tmp_path, data):
        X, y = data
        save_features(tmp_path / "f.srda", X, y)
        X2, y2 = load_features(tmp_path / "f.srda")
        assert np.array_equal(X2, X.astype(np.float32).astype(np.float64))
        assert np.array_equal(y2, y)

    def test_binary_layout(self, tmp_path):
        save_features(tmp_path / "f.bin", np.array([[1.0, -2.0]]), np.array([5]))
        raw = (tmp_path / "f.bin").read_bytes()
        assert raw[:4] == b"SRDA"
        assert struct.unpack("<HIQ", raw[4:18]) == (1, 2, 1)
        assert raw[18:] == struct.pack("<ffI", 1.0, -2.0, 5)

    def test_csv_round_trip(self, tmp_path, data):
        X, y = data
        save_features(tmp_path / "f.csv", X, y)
        X2, y2 = load_features(tmp_path / "f.csv")
        assert np.array_equal(X2, X.astype(np.float32).astype(np.float64))
        assert np.array_equal(y2, y)

    def test_binary_and_csv_agree(self, tmp_path, data):
        X, y = data
        save_features(tmp_path / "a.srda", X, y)
        save_features(tmp_path / "a.csv", X, y)
        for u, v in zip(load_features(tmp_path / "a.srda"), load_features(tmp_path / "a.csv")):
            assert np.array_equal(u, v)

    def test_csv_without_header(self, tmp_path):
        (tmp_path / "h.csv").write_text("1.5,2,0\n3,4.25,1\n")
        X, y = load_features(tmp_path / "h.csv")
        assert X.tolist() == [[1.5, 2.0], [3.0, 4.25]] and y.tolist() == [0, 1]

    def test_csv_nan_names_row(self, tmp_path):
        (tmp_path / "n.csv").write_text("a,b,label\n1,2,0\n3,nan,1\n")
        with pytest.raises(FeatureFormatError, match="row 1"):
            load_features(tmp_path / "n.csv")

    def test_csv_ragged(self, tmp_path):
        (tmp_path / "r.csv").write_text("1,2,0\n3,1\n")
        with pytest.raises(FeatureFormatError, match="row 1"):
            load_features(tmp_path / "r.csv")

    def test_csv_bad_label(self, tmp_path):
        (tmp_path / "l.csv").write_text("1,2,0.5\n")
        with pytest.raises(FeatureFormatError, match="label"):
            load_features(tmp_path / "l.csv")

    def test_binary_count_mismatch(self, tmp_path, data):
        X, y = data
        p = tmp_path / "f.srda"
        save_features(p, X, y)
        raw = bytearray(p.read_bytes())
        raw[10:18] = struct.pack("<Q", 4)
        p.write_bytes(bytes(raw))
        with pytest.raises(FeatureFormatError, match="declares 4"):
            load_features(p)

    def test_binary_bad_magic(self, tmp_path):
        (tmp_path / "x.srda").write_bytes(b"NOPE" + bytes(14))
        with pytest.raises(FeatureFormatError, match="magic"):
            load_features(tmp_path / "x.srda")

    def test_binary_non_finite(self, tmp_path):
        p = tmp_path / "inf.srda"
        p.write_bytes(b"SRDA" + struct.pack("<HIQ", 1, 1, 2) + struct.pack("<fIfI", 1.0, 0, np.inf, 1))
        with pytest.raises(FeatureFormatError, match="row 1"):
            load_features(p)

    def test_save_rejects_non_finite(self, tmp_path):
        with pytest.raises(FeatureFormatError):
            save_features(tmp_path / "x.srda", np.array([[np.nan]]), np.array([0]))


class TestCheckpoint:
    def _acc(self):
        rng = np.random.default_rng(1)
        return StatisticsAccumulator(5, 10).fit(rng.normal(size=(80, 5)), rng.integers(0, 4, size=80))

    def test_round_trip_bit_exact(self, tmp_path):
        acc = self._acc()
        cfg = HeadConfig(alpha=0.55, epsilon=1e-3, top_k=3)
        save_checkpoint(tmp_path / "c.ckpt", acc, cfg, scenario={"class_order_seed": 4})
        acc2, cfg2, meta = load_checkpoint(tmp_path / "c.ckpt")
        assert cfg2 == cfg
        assert meta["scenario"] == {"class_order_seed": 4}
        assert acc2.total_count == acc.total_count and acc2.max_classes == 10
        assert np.array_equal(acc2.pooled_cov, acc.pooled_cov)
        for k in acc.classes:
            assert acc2[k].count == acc[k].count
            assert np.array_equal(acc2[k].mean, acc[k].mean)
            assert np.array_equal(acc2[k].class_cov, acc[k].class_cov)

    def test_bytes_deterministic(self, tmp_path):
        acc = self._acc()
        save_checkpoint(tmp_path / "a", acc, HeadConfig())
        save_checkpoint(tmp_path / "b", acc.copy(), HeadConfig())
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()

    def test_readable_by_numpy(self, tmp_path):
        acc = self._acc()
        save_checkpoint(tmp_path / "c.npz", acc)
        with np.load(tmp_path / "c.npz") as z:
            assert np.array_equal(z["pooled_cov"], acc.pooled_cov)

    def test_empty_accumulator(self, tmp_path):
        save_checkpoint(tmp_path / "e", StatisticsAccumulator(3))
        acc, cfg, _ = load_checkpoint(tmp_path / "e")
        assert acc.total_count == 0 and len(acc) == 0 and cfg is None

    def test_resumes_streaming(self, tmp_path):
        rng = np.random.default_rng(2)
        X, y = rng.normal(size=(60, 3)), rng.integers(0, 3, size=60)
        full = StatisticsAccumulator(3).fit(X, y)
        save_checkpoint(tmp_path / "half", StatisticsAccumulator(3).fit(X[:30], y[:30]))
        resumed, _, _ = load_checkpoint(tmp_path / "half")
        resumed.fit(X[30:], y[30:])
        for k in full.classes:
            assert np.array_equal(resumed[k].class_cov, full[k].class_cov)


class TestMemoryReport:
    def test_imagenet_figure(self):
        r = memory_report(1000, 512)
        assert r.class_cov_bytes == 1_050_624_000
        assert round(r.class_cov_bytes / 1e9, 3) == 1.051
        assert r.srda_bytes == 1_050_624_000 + 4 * 512**2

    def test_slda_both_conventions(self):
        r = memory_report(1000, 512)
        assert r.slda_bytes == 4 * (512**2 + 1000 * 512)
        assert round(r.slda_bytes / 1e9, 3) == 0.003
        assert r.slda_shared_cov_bytes == 4 * 512**2
        assert round(r.slda_shared_cov_bytes / 1e9, 3) == 0.001
        text = "\n".join(r.lines())
        assert "slda_shared_covariance_only" in text and "0.001 GB" in text

    def test_minimal(self):
        assert memory_report(1, 1).class_cov_bytes == 8

    def test_invalid(self):
        with pytest.raises(ValueError):
            memory_report(0, 5)
