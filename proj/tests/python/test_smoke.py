import math
import os
from pathlib import Path

import numpy as np
import pytest

import proxyhpo as ph

DATA = Path(os.environ.get("PROXYHPO_TEST_DATA_DIR", Path(__file__).resolve().parents[1] / "data"))


def test_version():
    assert ph.__version__ == "0.1.0"


def test_nifti_golden_both_byte_orders():
    for name in ("golden_f32_le.nii", "golden_f32_be.nii"):
        arr, spacing = ph.read_nifti1(DATA / name)
        assert arr.shape == (4, 4, 4)
        assert spacing == (1.5, 2.0, 2.5)
        z, y, x = np.indices(arr.shape)
        np.testing.assert_array_equal(arr, (x + 10 * y + 100 * z + 0.25).astype(np.float32))


def test_raw_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    arr = rng.normal(size=(3, 4, 5)).astype(np.float32)
    payload, sidecar = ph.write_raw(arr, (0.5, 1.0, 2.0), tmp_path / "vol")
    back, spacing = ph.read_raw(payload, sidecar)
    assert spacing == (0.5, 1.0, 2.0)
    assert back.tobytes() == arr.tobytes()


def test_measures_match_hand_values():
    a = np.array([0, 0, 0, 0, 1, 1, 1, 1], np.float32).reshape(2, 2, 2)
    b = np.array([0, 1, 0, 1, 0, 1, 0, 1], np.float32).reshape(2, 2, 2)
    assert ph.mutual_information(a, b, bins=2) == pytest.approx(0.0, abs=1e-15)
    assert ph.mutual_information(a, a, bins=2) == pytest.approx(math.log(2))
    rng = np.random.default_rng(1)
    x = rng.normal(size=(6, 6, 6)).astype(np.float32)
    assert ph.local_ncc(x, x, 3) == pytest.approx(1.0)
    assert ph.local_ncc(x, -2 * x + 1, (3, 3, 3)) == pytest.approx(1.0)


def test_selection():
    m = np.array([[1, 2, 3], [2, 4, 5], [3, 5, 6]], float)
    np.testing.assert_allclose(ph.importance_scores(m), [2.0, 11 / 3, 14 / 3])
    assert ph.select_proxy([0.9, 0.1, 0.5], 2) == [1, 2]
    assert ph.select_random(10, 3, 7) == ph.select_random(10, 3, 7)
    train, val = ph.split_fifty_fifty([0, 1, 2, 3, 4], 1)
    assert len(train) == 3 and len(val) == 2
    with pytest.raises(ph.ProxyHpoError) as info:
        ph.select_proxy([1.0, 2.0], 3)
    assert info.value.code == "budget error"


def test_pairwise_on_synthetic_data(tmp_path):
    ids = ph.gen_synthetic_dataset(tmp_path, n_items=4, shape=(12, 12, 12), seed=2)
    matrix, got_ids = ph.pairwise_matrix(tmp_path / "manifest.json", "mi", cube=12, workers=2)
    assert got_ids == ids
    assert matrix.shape == (4, 4)
    np.testing.assert_array_equal(matrix, matrix.T)


def test_networks():
    full = ph.full_spec()
    assert ph.param_count(ph.UNetSpec(1, 1, 1, 1, 1)) == 86
    proxies = ph.proxy_schedule(full)
    assert [p.levels for p in proxies] == [5, 4, 3]
    assert ph.param_count(proxies[2]) == 32634


def test_surrogate_and_searches():
    assert ph.surrogate_dice("adam", 4e-4, 0.4) == pytest.approx(0.95 * 32 / 35 / 1.05, rel=1e-12)
    report = ph.grid_search(workers=4)
    assert len(report["trials"]) == 16
    assert report["best"]["hyperparams"] == {
        "optimizer": "adam", "learning_rate": 0.0004, "intensity_shift_prob": 0.5}
    rl = ph.reinforce_search(n_trials=20, seed=3)
    assert rl["mode"] == "rl" and len(rl["trials"]) == 20


def test_python_evaluator():
    seen = []

    def evaluator(trial):
        seen.append(trial["trial_id"])
        return {"val_dice": trial["hyperparams"]["learning_rate"] * 100}

    report = ph.grid_search(optimizers=["adam"], evaluator=evaluator, workers=2)
    assert sorted(seen) == ["t0000", "t0001", "t0002", "t0003"]
    assert report["best"]["hyperparams"]["learning_rate"] == 0.001

    failing = ph.grid_search(optimizers=["adam"], evaluator=lambda t: 1 / 0)
    assert failing["partial"] and failing["best"] is None


def test_analysis():
    assert ph.pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)
    assert ph.speedup(1056, 240) == pytest.approx(4.4)
    assert ph.relative_hp_distance(1e-4, 0.5, 1e-3, 0.5) == pytest.approx(1 / 3)
    with pytest.raises(ph.ProxyHpoError):
        ph.pearson([1, 1, 1], [1, 2, 3])
