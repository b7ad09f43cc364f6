import json
import math

import numpy as np
import pytest

import ddavs


def tiny_config(**overrides):
    cfg = json.loads(ddavs.default_config())
    cfg["seed"] = 3
    cfg["model"].update(d=8, n_queries=3, qg_ffn=16, d_proj=4, widths=[8, 8, 8, 8], depths=[1, 1, 1, 1], d_dec=4)
    cfg["data"].update(image_size=32, train=6, val=5)
    cfg["bank"].update(clips_per_class=4, k_per_class=2, m_nearest=1)
    cfg["optim"].update(batch=2, steps=2, warmup=1)
    cfg["log"].update(eval_every=1, eval_subset=5)
    for section, values in overrides.items():
        cfg[section].update(values)
    return json.dumps(cfg)


def test_log_mel_shape_and_silence():
    mel = ddavs.log_mel(np.zeros(16000))
    assert mel.shape == (98, 32)
    assert np.allclose(mel, math.log(1e-6))


def test_synth_and_augment_are_deterministic():
    w = ddavs.synth_waveform(1, seed=4)
    assert w.shape == (16000,)
    a, rec = ddavs.augment(w, seed=9)
    b, _ = ddavs.augment(w, seed=9)
    assert np.array_equal(a, b)
    assert a.shape == w.shape
    assert 10.0 <= rec["snr_db"] <= 20.0


def test_kmeans_and_bank_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    blobs = np.concatenate([rng.normal(0, 0.1, (50, 3)), rng.normal(4, 0.1, (50, 3))])
    res = ddavs.kmeans(blobs, 2, seed=1)
    centres = sorted(res["centroids"][:, 0])
    assert abs(centres[0]) < 0.1 and abs(centres[1] - 4) < 0.1

    bank = ddavs.build_bank([rng.normal(size=(8, 5)), rng.normal(size=(8, 5))], k_per_class=2, m_nearest=2)
    assert len(bank) == 8 and bank.dim == 5 and bank.classes == 2
    path = str(tmp_path / "b.davb")
    ddavs.save_bank(bank, path)
    assert ddavs.load_bank(path) == bank


def test_bank_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(ddavs.InsufficientDataError):
        ddavs.build_bank([np.zeros((2, 3))], k_per_class=4)
    bad = tmp_path / "x.davb"
    bad.write_bytes(b"nope")
    with pytest.raises(ddavs.DecodeError):
        ddavs.load_bank(str(bad))


def test_losses_and_metrics():
    y = np.zeros((8, 8))
    y[:4] = 1
    p = np.zeros((8, 8))
    p[:2] = 1
    assert ddavs.dice_loss(p, y) == pytest.approx(1 / 3, abs=1e-6)
    assert ddavs.iou_loss(p, y) == pytest.approx(0.5, abs=1e-6)
    assert ddavs.f_score(p, y) == pytest.approx(0.8125, abs=1e-12)
    assert ddavs.ce_loss(np.full((8, 8), 0.5), y) == pytest.approx(math.log(2), abs=2e-6)
    z = np.eye(2)
    assert ddavs.info_nce(z, z, tau=1.0) == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-9)
    with pytest.raises(ddavs.ParameterError):
        ddavs.info_nce(z, z, tau=0.0)


def test_scene_generation():
    sc = ddavs.generate_scene("off_screen", seed=2)
    assert sc["image"].shape == (64, 64, 3)
    assert sc["gt"].sum() == 0
    assert any(not s["on_screen"] for s in sc["sources"])
    with pytest.raises(ddavs.ParameterError):
        ddavs.generate_scene("underwater", seed=0)


def test_config_rejects_unknown_keys():
    with pytest.raises(ddavs.ParameterError, match="optim.lrr"):
        ddavs.validate_config('{"optim": {"lrr": 1}}')


def test_train_predict_and_reload(tmp_path):
    cfg = tiny_config()
    ckpt = str(tmp_path / "final.davc")
    ddavs.reset_counters()
    log, report = ddavs.train(cfg, ckpt)
    assert [r["step"] for r in log] == [1, 2]
    assert set(report) == {"single", "multi_class", "multi_instance", "small_distant", "off_screen", "overall"}
    assert ddavs.counters()["augment_calls"] == 4

    log2, report2 = ddavs.train(cfg)
    assert log == log2 and report == report2

    model = ddavs.Model(cfg)
    model.load_checkpoint(ckpt)
    assert model.evaluate("val")["overall"]["jf"] == pytest.approx(report["overall"]["jf"], abs=1e-12)
    sc = ddavs.generate_scene("single", seed=1, image_size=32)
    probs = model.predict(sc["image"], sc["waveform"])
    assert probs.shape == (32, 32)
    assert np.all((probs >= 0) & (probs <= 1))


def test_contrastive_off_skips_augmentation():
    ddavs.reset_counters()
    ddavs.train(tiny_config(loss={"con": 0.0}))
    assert ddavs.counters() == {"augment_calls": 0, "projection_calls": 0, "contrastive_calls": 0}


def test_grad_check_tiny_model():
    assert ddavs.Model(tiny_config()).grad_check() < 1e-4
