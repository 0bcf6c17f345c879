"""Training loop: RMSprop on mean-squared mask error.

Scenes are split before windowing so validation never sees frames from a
training scene. The checkpoint keeps everything inference needs to rebuild
the network (channel count, recipe, normalisation flag) next to the weights;
per-epoch losses land in ``curves.csv`` beside it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch.utils.data import DataLoader

from . import corpus
from .dataset import MaskWindowDataset, recipe_channels, split_scenes
from .errors import DatasetError, TrainingError
from .model import CrnnMask


@dataclass
class TrainConfig:
    corpus: Path
    out: Path
    recipe: str = "single"
    z_run: str | None = None
    scenes: list[str] = field(default_factory=list)
    seed: int = 0
    epochs: int = 8
    patience: int = 2
    lr: float = 1e-3
    batch_size: int = 64
    stride: int = 1
    val_fraction: float = 0.2
    normalize: bool = True
    limit_windows: int | None = None  # cap the training set, e.g. overfit runs
    target_mse: float | None = None  # stop once training loss drops below this


def _epoch_mse(model, loader, optimizer=None) -> float:
    total, count = 0.0, 0
    for x, y in loader:
        if optimizer is None:
            with torch.no_grad():
                loss = torch.nn.functional.mse_loss(model(x), y)
        else:
            optimizer.zero_grad()
            loss = torch.nn.functional.mse_loss(model(x), y)
            loss.backward()
            optimizer.step()
        value = float(loss.detach())
        if not torch.isfinite(loss.detach()):
            raise TrainingError(f"loss became non-finite ({value})")
        total += value * len(x)
        count += len(x)
    return total / count


def train(config: TrainConfig) -> Path:
    """Fit a mask network; returns the checkpoint path."""
    scene_list = config.scenes or corpus.scene_ids(config.corpus)
    unknown = set(config.scenes) - set(corpus.scene_ids(config.corpus))
    if unknown:
        raise DatasetError(f"scenes not in corpus: {sorted(unknown)}")
    train_ids, val_ids = split_scenes(scene_list, config.val_fraction, config.seed)
    if not train_ids:
        raise DatasetError("scene split left no training scenes")

    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed)
    train_set = MaskWindowDataset(config.corpus, train_ids, config.recipe,
                                  config.z_run, config.stride, config.normalize)
    if config.limit_windows is not None:
        keep = range(min(config.limit_windows, len(train_set)))
        train_set = torch.utils.data.Subset(train_set, keep)
    train_loader = DataLoader(train_set, config.batch_size, shuffle=True,
                              generator=generator)
    val_loader = None
    if val_ids:
        val_set = MaskWindowDataset(config.corpus, val_ids, config.recipe,
                                    config.z_run, config.stride, config.normalize)
        val_loader = DataLoader(val_set, config.batch_size)

    model = CrnnMask(recipe_channels(config.recipe))
    optimizer = torch.optim.RMSprop(model.parameters(), lr=config.lr)

    config.out.mkdir(parents=True, exist_ok=True)
    checkpoint = config.out / "model.pt"
    best, since_best = float("inf"), 0
    with open(config.out / "curves.csv", "w", newline="") as handle:
        curves = csv.writer(handle)
        curves.writerow(["epoch", "train_mse", "val_mse"])
        for epoch in range(1, config.epochs + 1):
            model.train()
            train_mse = _epoch_mse(model, train_loader, optimizer)
            model.eval()
            val_mse = _epoch_mse(model, val_loader) if val_loader else train_mse
            curves.writerow([epoch, f"{train_mse:.8f}", f"{val_mse:.8f}"])
            handle.flush()
            if val_mse < best:
                best, since_best = val_mse, 0
                torch.save({"state": model.state_dict(),
                            "in_channels": model.in_channels,
                            "recipe": config.recipe,
                            "normalize": config.normalize,
                            "epoch": epoch,
                            "val_mse": val_mse}, checkpoint)
            else:
                since_best += 1
                if since_best >= config.patience:
                    break
            if config.target_mse is not None and train_mse < config.target_mse:
                break
    return checkpoint


def load_checkpoint(path: Path) -> tuple[CrnnMask, dict]:
    bundle = torch.load(path, map_location="cpu", weights_only=True)
    model = CrnnMask(bundle["in_channels"])
    model.load_state_dict(bundle["state"])
    model.eval()
    return model, bundle
