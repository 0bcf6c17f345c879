"""Training loop behaviour on the tiny corpus: cheap, no convergence claims."""

import csv

import numpy as np
import pytest
import torch

from masknet.dataset import MaskWindowDataset
from masknet.errors import DatasetError, TrainingError
from masknet.model import CrnnMask
from masknet.train import TrainConfig, _epoch_mse, load_checkpoint, train


def quick_config(tiny_corpus, out, **overrides):
    base = dict(corpus=tiny_corpus, out=out, recipe="single", seed=3,
                epochs=2, lr=1e-3, batch_size=32, stride=24, val_fraction=0.5)
    base.update(overrides)
    return TrainConfig(**base)


def read_curves(out):
    with open(out / "curves.csv") as handle:
        return list(csv.DictReader(handle))


def test_two_epoch_smoke(tiny_corpus, tmp_path):
    checkpoint = train(quick_config(tiny_corpus, tmp_path / "run"))
    rows = read_curves(tmp_path / "run")
    assert [r["epoch"] for r in rows] == ["1", "2"]
    assert all(float(r["train_mse"]) > 0 for r in rows)

    model, bundle = load_checkpoint(checkpoint)
    assert isinstance(model, CrnnMask)
    assert bundle["in_channels"] == 1
    assert bundle["recipe"] == "single"
    assert bundle["normalize"] is True
    assert bundle["epoch"] in (1, 2)
    assert bundle["val_mse"] == pytest.approx(
        min(float(r["val_mse"]) for r in rows))


def test_same_seed_same_curves_and_weights(tiny_corpus, tmp_path):
    first = train(quick_config(tiny_corpus, tmp_path / "a", epochs=1))
    second = train(quick_config(tiny_corpus, tmp_path / "b", epochs=1))
    assert (tmp_path / "a/curves.csv").read_text() == \
        (tmp_path / "b/curves.csv").read_text()
    state_a = load_checkpoint(first)[0].state_dict()
    state_b = load_checkpoint(second)[0].state_dict()
    for name, value in state_a.items():
        assert torch.equal(value, state_b[name]), name


def test_limit_windows_caps_the_shard(tiny_corpus, tmp_path):
    config = quick_config(tiny_corpus, tmp_path / "run", val_fraction=0.0,
                          epochs=1, limit_windows=8, batch_size=8)
    train(config)
    assert len(read_curves(tmp_path / "run")) == 1


def test_target_mse_stops_early(tiny_corpus, tmp_path):
    config = quick_config(tiny_corpus, tmp_path / "run", val_fraction=0.0,
                          epochs=50, limit_windows=8, batch_size=8,
                          target_mse=1e9)
    train(config)
    assert len(read_curves(tmp_path / "run")) == 1  # first epoch already below


def test_unknown_scene_rejected(tiny_corpus, tmp_path):
    with pytest.raises(DatasetError):
        train(quick_config(tiny_corpus, tmp_path / "run", scenes=["ghost"]))


def test_non_finite_loss_raises(tiny_corpus):
    torch.manual_seed(0)
    model = CrnnMask(1)
    dataset = MaskWindowDataset(tiny_corpus, ["random0000"], "single", stride=64)
    x = torch.stack([dataset[i][0] for i in range(4)])
    x[0, 0, 0, 0] = float("inf")
    y = torch.stack([dataset[i][1] for i in range(4)])
    loader = [(x, y)]
    optimizer = torch.optim.RMSprop(model.parameters(), lr=1e-3)
    with pytest.raises(TrainingError):
        _epoch_mse(model, loader, optimizer)
