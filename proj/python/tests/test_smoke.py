import math

import numpy as np
import pytest

import h2ad


def test_config_roundtrip():
    cfg = h2ad.table1_config()
    assert cfg.M == [7, 11, 13]
    assert cfg.total_antennas() == 496
    assert h2ad.parse_config(h2ad.format_config(cfg)) == cfg


def test_config_errors_map_to_exceptions():
    with pytest.raises(h2ad.ConfigError):
        h2ad.parse_config("groups = 2\nM = 6, 9\nK = 16, 16\n")
    with pytest.raises(h2ad.ConfigError):
        h2ad.parse_config("groups = 3\nwhat = 1\n")


def test_simulate_shape_and_determinism():
    cfg = h2ad.table1_config()
    a = h2ad.simulate_group(cfg, 1, 41.0, 10.0, snapshots=50, seed=4)
    b = h2ad.simulate_group(cfg, 1, 41.0, 10.0, snapshots=50, seed=4)
    assert a.shape == (16, 50)
    assert np.iscomplexobj(a)
    assert np.array_equal(a, b)


def test_candidates_contain_truth():
    cfg = h2ad.table1_config()
    s = h2ad.simulate_group(cfg, 0, 41.0, 20.0, snapshots=200, seed=2)
    phase, cands = h2ad.group_candidates(cfg, 0, s @ s.conj().T / s.shape[1])
    assert len(cands) == 7
    assert -math.pi < phase <= math.pi
    assert min(abs(c - 41.0) for c in cands) < 0.2


def test_estimate_and_bound():
    cfg = h2ad.table1_config()
    est = h2ad.estimate_doa(cfg, 41.0, 10.0, seed=7)
    assert est["theta_deg"] == pytest.approx(41.0, abs=0.1)
    assert sum(est["weights"]) == pytest.approx(1.0)
    w = h2ad.weights_crlb_ratio([7, 11, 13])
    assert w == pytest.approx([49 / 339, 121 / 339, 169 / 339])
    assert h2ad.fused_crlb_deg(cfg, 41.0, 10.0, 200) > 0


def test_bench_rows():
    cfg = h2ad.table1_config()
    rows = h2ad.bench(cfg, snr_grid=[0.0, 10.0], snapshot_grid=[50], trials=5, methods=["crlb_ratio"])
    assert [r["snr_db"] for r in rows] == [0.0, 10.0]
    assert all(r["trials_used"] + r["failures"] == 5 for r in rows)
    assert h2ad.compute_rmse([1.0, -1.0], 0.0) == pytest.approx(1.0)
