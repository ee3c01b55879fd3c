import json
import math

import numpy as np
import pytest

import wdsel

TINY = {
    "simulator": {"window_length": 128, "train_windows": 8, "validation_windows": 4,
                  "test_windows": 8, "static_samples": 4096},
    "model": {"feature_dim": 8, "blocks": 1, "channels": 4, "head_channels": 4,
              "head_blocks": 1, "min_window": 64},
    "train": {"epochs": 1, "batch_size": 4, "denoise": {"levels": 3}},
}


def test_bank_and_filters():
    names = wdsel.bank_names()
    assert len(names) == 16 and names[0] == "haar" and names[-1] == "coif5"
    assert wdsel.bank_names(5) == names[:5]
    f = wdsel.wavelet_filters("db4")
    assert f["dec_lo"].sum() == pytest.approx(math.sqrt(2.0), abs=1e-10)
    assert (f["dec_lo"] ** 2).sum() == pytest.approx(1.0, abs=1e-10)


def test_dwt_round_trip():
    x = np.random.default_rng(0).normal(size=300)
    approx, details = wdsel.dwt(x, "sym4", 3)
    assert len(details) == 3
    y = wdsel.idwt(approx, details, "sym4", len(x))
    assert np.max(np.abs(y - x)) < 1e-8


def test_denoise_shapes():
    rng = np.random.default_rng(1)
    x = np.sin(np.linspace(0, 8 * np.pi, 512)) + 0.2 * rng.normal(size=512)
    y = wdsel.denoise(x, "db4")
    assert y.shape == x.shape
    s = rng.normal(size=(6, 256))
    assert wdsel.denoise(s, "haar", levels=3).shape == (6, 256)


def test_errors_carry_kind_and_code():
    with pytest.raises(wdsel.WdselError) as info:
        wdsel.wavelet_filters("nope")
    assert info.value.kind == "config"
    assert info.value.code == 2
    with pytest.raises(wdsel.WdselError):
        wdsel.denoise(np.zeros((5, 64)), "haar")


def test_strapdown_inverts_ideal_imu():
    traj = wdsel.trajectory("circular", duration=5.0, seed=3)
    p = traj["positions"]
    v0 = (-3 * p[0] + 4 * p[1] - p[2]) * (traj["rate"] / 2)
    nav = wdsel.strapdown(traj["imu"], traj["rate"], traj["orientations"][0], v0, p[0])
    err = np.linalg.norm(nav["positions"] - p, axis=1).max()
    length = np.linalg.norm(np.diff(p, axis=0), axis=1).sum()
    assert err < 1e-3 * length
    score = wdsel.align_then_score(nav["positions"], p)
    assert score["normalized"] < 1e-3


def test_allan_recovers_white_noise():
    gyro = wdsel.NoiseModel(white_noise_density=0.005)
    accel = wdsel.NoiseModel(white_noise_density=0.02)
    s = wdsel.static_capture(1 << 17, 200.0, accel, gyro, seed=5)
    c = wdsel.noise_coefficients(s[3], 200.0)
    assert c["rw_fit"]["present"]
    assert c["rw"] == pytest.approx(0.005, rel=0.1)
    curve = wdsel.allan_deviation(s[0], 200.0)
    assert len(curve["taus"]) == len(curve["adev"]) > 10


def test_metrics():
    p = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])
    assert wdsel.discrete_frechet(p, p + [0, 1, 0]) == pytest.approx(1.0)
    assert wdsel.renyi_entropy(np.eye(16)) == pytest.approx(4.0, abs=1e-12)
    feats = np.array([[0.0, 0], [0.1, 0], [5, 5], [5.1, 5]])
    assert wdsel.silhouette_score(feats, [0, 0, 1, 1]) > 0.9
    assert wdsel.silhouette_score(feats, [0, 0, 0, 0]) is None


def test_pipeline(tmp_path):
    config = wdsel.default_config()
    assert json.loads(config)["train"]["bank_size"] == 16
    data, model, out = tmp_path / "d", tmp_path / "m", tmp_path / "e"
    wdsel.simulate(str(data), json.dumps(TINY))
    wdsel.train(str(data), str(model))
    result = wdsel.evaluate(str(model), str(data), str(out))
    assert set(result["methods"]) >= {"raw", "baseline_db4", "selector_crm", "selector_nocrm"}
    assert (out / "results.csv").exists()

    m = wdsel.Model(str(model))
    assert m.has_ablation and len(m.bank) == 16
    signal = wdsel.static_capture(300, 200.0, wdsel.NoiseModel(white_noise_density=0.02),
                                  wdsel.NoiseModel(white_noise_density=0.005))
    r = m.enhance(signal, 200.0)
    assert r["enhanced"].shape == (6, 300)
    assert r["window_starts"] == [0, 128]
    assert all(0 <= i < 16 for i in r["selections"])

    code, stdout, _ = wdsel.run_cli(["export-bank", "--bank-size", "5"])
    assert code == 0 and stdout.startswith("wavelet,filter,index,value")
    code, _, err = wdsel.run_cli(["simulate"])
    assert code == 11 and err.startswith("error kind=usage")
