import json

import numpy as np
import pytest

import mczsl


def small_spec():
    spec = mczsl.SynthSpec()
    spec.n_seen = 6
    spec.n_unseen = 2
    spec.feat_dim = 12
    spec.attr_dim = 4
    spec.samples_per_class = 10
    return spec


def test_synth_round_trip(tmp_path):
    data = mczsl.synth_dataset(small_spec(), 5)
    assert data.features.shape == (80, 12)
    assert data.attributes.shape == (8, 4)
    path = tmp_path / "toy.czsf"
    data.write(path)
    back = mczsl.read_container(path)
    assert back == data
    np.testing.assert_array_equal(back.features, data.features)


def test_dataset_from_arrays_validates():
    x = np.zeros((2, 3), dtype=np.float32)
    a = np.eye(2, dtype=np.float32)
    ok = mczsl.Dataset(x, [0, 1], a, [0], [1], [])
    assert ok.num_classes == 2
    with pytest.raises(mczsl.DataError):
        mczsl.Dataset(x, [0, 5], a, [0], [1], [])


def test_model_shapes_and_gradient_direction():
    cfg = mczsl.ModelConfig()
    cfg.hidden_width = 16
    model = mczsl.Model(cfg, 4, 12)
    data = mczsl.synth_dataset(small_spec(), 1)
    x = data.features[:8]
    labels = data.labels[:8]
    logits = model.logits(x, data.attributes)
    assert logits.shape == (8, 8)
    assert np.all(np.abs(logits) <= cfg.logit_scale + 1e-4)
    loss, grad = model.loss_and_grads(x, labels, data.attributes)
    assert grad.shape == (model.size,)
    # A small step against the gradient lowers the loss.
    model.values = model.values - 1e-3 * grad
    loss2, _ = model.loss_and_grads(x, labels, data.attributes)
    assert loss2 < loss


def test_checkpoint_round_trip(tmp_path):
    cfg = mczsl.ModelConfig()
    cfg.hidden_width = 8
    cfg.normalization = "plain_cn"
    model = mczsl.Model(cfg, 3, 5)
    model.save(tmp_path / "m.mczp")
    assert mczsl.load_checkpoint(tmp_path / "m.mczp") == model


def test_reservoir_budget_and_persistence(tmp_path):
    rng = mczsl.Rng(3)
    r = mczsl.Reservoir(5, 2)
    for i in range(50):
        r.offer(np.array([i, -i], dtype=np.float32), i % 3, 0, rng)
    assert len(r) == 5
    assert r.seen_count == 50
    r.save(tmp_path / "r.mczr")
    back = mczsl.load_reservoir(tmp_path / "r.mczr")
    np.testing.assert_array_equal(back.labels, r.labels)


def test_metrics_helpers():
    assert mczsl.harmonic_mean(50, 50) == pytest.approx(50)
    assert mczsl.harmonic_mean(10, 0) == 0
    assert mczsl.per_class_accuracy([0] + [0] * 99, [0] + [1] * 99, [0, 1]) == pytest.approx(50)
    with pytest.raises(ValueError):
        mczsl.per_class_accuracy([], [], [])
    assert mczsl.meta_lr(0, 1e-3, 10) == pytest.approx(1e-3)
    assert mczsl.meta_lr(9, 1e-3, 10) == pytest.approx(0)


def test_train_and_eval(tmp_path):
    cfg = {
        "protocol": "fixed",
        "tasks": 2,
        "synth.seen": 6,
        "synth.unseen": 2,
        "synth.feat_dim": 12,
        "synth.attr_dim": 4,
        "synth.per_class": 10,
        "model.hidden": 8,
        "meta.epochs": 3,
        "seed": 4,
    }
    metrics, model = mczsl.train(cfg, tmp_path)
    assert metrics["protocol"] == "fixed"
    assert len(metrics["tasks"]) == 1
    assert model.size > 0
    on_disk = json.loads((tmp_path / "metrics.json").read_text())
    assert on_disk["mH"] == metrics["mH"]
    again = mczsl.evaluate_run(tmp_path, permute_seed=9)
    assert again["mH"] == metrics["mH"]


def test_config_errors():
    with pytest.raises(mczsl.ConfigError):
        mczsl.serialize_config({"no.such.key": 1})
    text = mczsl.serialize_config({"seed": 12})
    assert "seed = 12" in text.splitlines()
    assert "ablate" in mczsl.config_keys()
