import math

import numpy as np
import pytest

import ftbrain


def test_entropy_hand_example():
    img = np.array([[0.0, 0.0, 0.5, 1.0]], dtype=np.float32)
    hist = ftbrain.histogram(img)
    assert hist[0] == 2 and hist[128] == 1 and hist[255] == 1
    assert ftbrain.image_entropy(img) == 1.5


def test_synth_and_ranking():
    vol = ftbrain.synth_volume("AD", 3, (24, 32, 32))
    assert vol.shape == (24, 32, 32) and vol.dtype == np.uint8
    assert np.array_equal(vol, ftbrain.synth_volume("AD", 3, (24, 32, 32)))
    ranking = ftbrain.rank_slices(vol)
    assert len(ranking) == 24
    entropies = [e for _, e in ranking]
    assert entropies == sorted(entropies, reverse=True)
    top = ftbrain.select_top_k(vol, 8)
    assert top == [i for i, _ in ranking[:8]]
    assert ftbrain.class_factor("AD") == pytest.approx(1.6)


def test_mann_kendall_anchor():
    r = ftbrain.mann_kendall([1, 2, 3, 4, 5])
    assert r["S"] == 10
    assert abs(r["p"] - 0.0275) < 0.0005
    with pytest.raises(ValueError):
        ftbrain.mann_kendall([1, 2])


def test_folds_are_disjoint():
    ids = [f"s{i}" for i in range(20)]
    labels = ["AD"] * 10 + ["NC"] * 10
    folds = ftbrain.kfold_subject_split(ids, labels, k=5, seed=1)
    assert len(folds) == 5
    flat = [s for f in folds for s in f]
    assert sorted(flat) == sorted(ids)


def test_model_freeze_and_predict():
    m = ftbrain.Model("desk", seed=1)
    assert m.conv_layers == 16
    mask = m.freeze("G4")
    assert not any(mask[:32]) and all(mask[32:])
    x = np.random.default_rng(0).random((3, 1, 64, 64), dtype=np.float32)
    p = m.predict(x)
    assert p.shape == (3, 1)
    assert np.all((p > 0) & (p < 1))


def test_fit_reduces_loss(tmp_path):
    rng = np.random.default_rng(1)
    y = [0, 1] * 20
    x = np.stack([np.full((1, 64, 64), 0.35 + 0.3 * c, np.float32) + 0.05 * rng.standard_normal((1, 64, 64), np.float32)
                  for c in y])
    subjects = [f"s{i // 2}" for i in range(len(y))]
    m = ftbrain.Model("desk", seed=2)
    losses = m.fit(x, y, subjects, epochs=8, lr=3e-4, batch_size=10)
    assert len(losses) == 9
    assert losses[-1] < losses[0]
    path = str(tmp_path / "m.mnet")
    m.save(path)
    back = ftbrain.Model.load(path)
    assert np.array_equal(back.predict(x[:4]), m.predict(x[:4]))


def test_cam_hand_example_and_overlay():
    f = np.array([[[1, 0], [0, 0]], [[0, 0], [0, 1]]], dtype=np.float32)
    cam = ftbrain.cam_from_features(f, [2.0, 1.0], 2, 2)
    assert cam.tolist() == [[1.0, 0.0], [0.0, 0.5]]
    gray = np.full((2, 2), 0.5, np.float32)
    rgb = ftbrain.overlay(gray, cam)
    assert rgb.shape == (2, 2, 3)
    assert rgb[0, 0, 0] == round(255 * 0.75) and rgb[0, 0, 1] == round(255 * 0.25)
    assert rgb[0, 1].tolist() == [128, 128, 128]

    m = ftbrain.Model("desk", cam_head=True, seed=3)
    heat, peak = ftbrain.compute_cam(m, gray.repeat(32, 0).repeat(32, 1), 1)
    assert heat.shape == (64, 64)
    assert 0.0 <= heat.min() and heat.max() <= 1.0
    with pytest.raises(ValueError):
        ftbrain.compute_cam(ftbrain.Model("desk", seed=3), heat, 1)
