"""Training loop for the demosaicking refiner.

Loss per the composite objective: an L1 term between the ideal cube and the
spectrally corrected prediction, plus (in the perceptual configuration) a
weighted feature reconstruction term between prediction and intermediate
target computed on a fixed 3-band projection. The L1 configuration drops
the feature term. Checkpoints keep the lowest validation loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from .dataset import PatchDataset, Sample, collate
from .model import ResUNet
from .perceptual import FeatureExtractor, feature_distance, select_rgb_projection


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class Config:
    data_dir: str = "data"
    out_dir: str = "run"
    loss: str = "perceptual"  # "perceptual" | "l1"
    gamma: float = 0.001
    lr: float = 0.0001
    batch_size: int = 3
    patch: int = 224
    steps: int = 2000
    val_every: int = 100
    seed: int = 0
    base_channels: int = 16
    samples_per_cube: int = 8
    perceptual_bands: tuple[int, int, int] = (2, 8, 14)
    augment: bool = True
    align_to_tile: bool = True

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        values: dict = {}
        names = {f.name for f in fields(cls)}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in names:
                raise ValueError(f"config: unknown key {key!r}")
            if key == "perceptual_bands":
                values[key] = tuple(int(v) for v in raw.split(","))
            elif key in ("data_dir", "out_dir", "loss"):
                values[key] = raw
            elif key in ("gamma", "lr"):
                values[key] = float(raw)
            elif key in ("augment", "align_to_tile"):
                values[key] = raw.lower() in ("1", "true", "yes")
            else:
                values[key] = int(raw)
        return cls(**values)

    def dump(self, path: str | Path) -> None:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "perceptual_bands":
                value = ",".join(str(v) for v in value)
            lines.append(f"{f.name}={value}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class LossParts:
    total: torch.Tensor
    term_l1: torch.Tensor
    term_perceptual: torch.Tensor | None


class LossModule:
    def __init__(self, config: Config, calibration: np.ndarray):
        self.config = config
        self.calibration = torch.from_numpy(calibration.astype(np.float32))
        self.extractor = FeatureExtractor() if config.loss == "perceptual" else None

    def correct(self, cube: torch.Tensor) -> torch.Tensor:
        # unclamped per-pixel matrix-vector product (clamping would bias the loss)
        return torch.einsum("ik,nkhw->nihw", self.calibration, cube)

    def __call__(self, prediction: torch.Tensor, sample: Sample) -> LossParts:
        term_l1 = torch.mean(torch.abs(sample.ideal - self.correct(prediction)))
        if self.extractor is None:
            return LossParts(total=term_l1, term_l1=term_l1, term_perceptual=None)
        bands = self.config.perceptual_bands
        term_p = feature_distance(
            self.extractor,
            select_rgb_projection(sample.intermediate, bands),
            select_rgb_projection(prediction, bands),
        )
        total = term_l1 + self.config.gamma * term_p
        return LossParts(total=total, term_l1=term_l1, term_perceptual=term_p)


def _loader(dataset: PatchDataset, config: Config, shuffle: bool) -> DataLoader:
    generator = torch.Generator().manual_seed(config.seed)
    return DataLoader(
        dataset,
        batch_size=config.batch_size,
        shuffle=shuffle,
        collate_fn=collate,
        generator=generator if shuffle else None,
        num_workers=0,
    )


def evaluate_loss(model: ResUNet, loss_mod: LossModule, loader: DataLoader) -> float:
    model.eval()
    losses = []
    with torch.no_grad():
        for sample in loader:
            parts = loss_mod(model(sample.bilinear), sample)
            losses.append(float(parts.total))
    model.train()
    return float(np.mean(losses))


def train(config: Config) -> Path:
    """Run training; returns the checkpoint path (lowest validation loss)."""
    torch.manual_seed(config.seed)
    np.random.seed(config.seed)

    train_set = PatchDataset(
        config.data_dir, "train", patch=config.patch, augment=config.augment,
        seed=config.seed, samples_per_cube=config.samples_per_cube,
        align_to_tile=config.align_to_tile,
    )
    val_set = PatchDataset(
        config.data_dir, "val", patch=config.patch, augment=False,
        seed=config.seed + 1, samples_per_cube=2,
        align_to_tile=config.align_to_tile,
    )
    calibration = train_set.calibration()
    bands = train_set[0].bilinear.shape[0]

    model = ResUNet(
        bands=bands, base_channels=config.base_channels, tile=train_set.tile
    )
    model.train()
    loss_mod = LossModule(config, calibration)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.dump(out_dir / "config.txt")
    checkpoint_path = out_dir / "checkpoint.pt"
    history_path = out_dir / "history.csv"
    history = ["step,total,term_l1,term_perceptual,val_total"]

    val_loader = _loader(val_set, config, shuffle=False)
    train_loader = _loader(train_set, config, shuffle=True)
    best_val = math.inf
    step = 0
    while step < config.steps:
        for sample in train_loader:
            if step >= config.steps:
                break
            optimizer.zero_grad()
            parts = loss_mod(model(sample.bilinear), sample)
            if not torch.isfinite(parts.total):
                raise TrainingDiverged(
                    f"loss became non-finite at step {step}: "
                    f"l1={float(parts.term_l1)!r}"
                )
            parts.total.backward()
            optimizer.step()
            step += 1

            if step % config.val_every == 0 or step == config.steps:
                val_total = evaluate_loss(model, loss_mod, val_loader)
                perc = (
                    float(parts.term_perceptual.detach())
                    if parts.term_perceptual is not None
                    else ""
                )
                history.append(
                    f"{step},{float(parts.total.detach())!r},"
                    f"{float(parts.term_l1.detach())!r},{perc!r},{val_total!r}"
                )
                if val_total < best_val:
                    best_val = val_total
                    _save_checkpoint(
                        checkpoint_path, model, bands, config, train_set.tile,
                        step, val_total,
                    )
    history_path.write_text("\n".join(history) + "\n", encoding="utf-8")
    if not checkpoint_path.exists():
        _save_checkpoint(
            checkpoint_path, model, bands, config, train_set.tile, step, best_val
        )
    return checkpoint_path


def _save_checkpoint(path, model, bands, config, tile, step, val_loss) -> None:
    torch.save(
        {
            "model": model.state_dict(),
            "bands": bands,
            "base_channels": config.base_channels,
            "tile": tile,
            "step": step,
            "val_loss": val_loss,
        },
        path,
    )


def load_model(checkpoint_path: str | Path) -> ResUNet:
    payload = torch.load(checkpoint_path, map_location="cpu", weights_only=True)
    model = ResUNet(
        bands=payload["bands"],
        base_channels=payload["base_channels"],
        tile=payload.get("tile", 4),
    )
    model.load_state_dict(payload["model"])
    model.eval()
    return model
