"""Training loop: MSE reconstruction objective, Adam, 80/20 split by scene."""
from __future__ import annotations

import dataclasses
import json
import os
from pathlib import Path

import torch

from .errors import EmptySequence
from .model import GruAeConfig, GruAutoencoder


@dataclasses.dataclass
class TrainResult:
    model: GruAutoencoder
    train_losses: list[float]  # mean per epoch
    val_losses: list[float]
    train_ids: list[str]
    val_ids: list[str]


def split_by_scene(ids, generator: torch.Generator, train_split: float):
    order = torch.randperm(len(ids), generator=generator).tolist()
    n_train = max(1, int(round(len(ids) * train_split)))
    if len(ids) >= 2:
        n_train = min(n_train, len(ids) - 1)
    return order[:n_train], order[n_train:]


def train(sequences: torch.Tensor, scene_ids, cfg: GruAeConfig) -> TrainResult:
    if sequences.shape[0] == 0:
        raise EmptySequence("no training sequences")
    torch.manual_seed(cfg.seed)
    generator = torch.Generator().manual_seed(cfg.seed)
    train_idx, val_idx = split_by_scene(scene_ids, generator, cfg.train_split)
    train_set = sequences[train_idx]
    val_set = sequences[val_idx]

    model = GruAutoencoder(cfg)
    optim = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)

    train_losses = []
    val_losses = []
    for _ in range(cfg.epochs):
        model.train()
        perm = torch.randperm(train_set.shape[0], generator=generator)
        epoch_losses = []
        for start in range(0, train_set.shape[0], cfg.batch_size):
            batch = train_set[perm[start:start + cfg.batch_size]]
            loss = model.reconstruction_loss(batch)
            optim.zero_grad()
            loss.backward()
            optim.step()
            epoch_losses.append(loss.item())
        train_losses.append(sum(epoch_losses) / len(epoch_losses))

        model.eval()
        if val_set.shape[0]:
            with torch.no_grad():
                val_losses.append(model.reconstruction_loss(val_set).item())
    return TrainResult(
        model=model,
        train_losses=train_losses,
        val_losses=val_losses,
        train_ids=[scene_ids[i] for i in train_idx],
        val_ids=[scene_ids[i] for i in val_idx],
    )


def save_checkpoint(model: GruAutoencoder, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    torch.save({
        "config": dataclasses.asdict(model.cfg),
        "state_dict": model.state_dict(),
    }, tmp)
    os.replace(tmp, path)


def load_checkpoint(path) -> GruAutoencoder:
    ckpt = torch.load(path, map_location="cpu", weights_only=True)
    raw = dict(ckpt["config"])
    raw["input_size"] = tuple(raw["input_size"])
    model = GruAutoencoder(GruAeConfig(**raw))
    model.load_state_dict(ckpt["state_dict"])
    model.eval()
    return model


def save_loss_curve(result: TrainResult, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump({
            "train": result.train_losses,
            "val": result.val_losses,
            "train_scenes": result.train_ids,
            "val_scenes": result.val_ids,
        }, f, indent=2)
        f.write("\n")
