"""Deep feature distances for the auxiliary loss and the perceptual metric.

Pretrained VGG-16 weights are not reachable in offline environments, so the
extractor uses the VGG-16 convolutional topology with fixed-seed frozen
random weights. Random deep features are an established surrogate for
perceptual comparisons; scores are comparable within one environment but
not against published LPIPS numbers.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

FEATURE_LAYERS = (3, 8, 15, 22)  # relu1_2, relu2_2, relu3_3, relu4_3
_WEIGHT_SEED = 2201


def _vgg16_features() -> nn.Sequential:
    cfg = [64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512, "M", 512, 512, 512]
    layers: list[nn.Module] = []
    in_ch = 3
    for item in cfg:
        if item == "M":
            layers.append(nn.MaxPool2d(2))
        else:
            layers.append(nn.Conv2d(in_ch, item, 3, padding=1))
            layers.append(nn.ReLU(inplace=True))
            in_ch = item
    return nn.Sequential(*layers)


class FeatureExtractor(nn.Module):
    """Frozen multi-layer feature maps of a 3-channel image in [0, 1]."""

    def __init__(self):
        super().__init__()
        generator_state = torch.get_rng_state()
        torch.manual_seed(_WEIGHT_SEED)
        self.net = _vgg16_features()
        torch.set_rng_state(generator_state)
        max_layer = max(FEATURE_LAYERS)
        self.net = self.net[: max_layer + 1]
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        feats = []
        h = x
        for i, layer in enumerate(self.net):
            h = layer(h)
            if i in FEATURE_LAYERS:
                feats.append(h)
        return feats


def select_rgb_projection(cube: torch.Tensor, bands: tuple[int, int, int]) -> torch.Tensor:
    """Project an (N, n_s, H, W) cube onto 3 fixed band indices."""
    return cube[:, list(bands), :, :]


def feature_distance(
    extractor: FeatureExtractor, a: torch.Tensor, b: torch.Tensor
) -> torch.Tensor:
    """Mean squared feature difference summed over layers (auxiliary loss term)."""
    total = None
    for fa, fb in zip(extractor(a), extractor(b)):
        term = torch.mean((fa - fb) ** 2)
        total = term if total is None else total + term
    return total


def lpips_style(extractor: FeatureExtractor, a: torch.Tensor, b: torch.Tensor) -> float:
    """Perceptual distance: per-layer channel-normalized squared feature
    differences, averaged over space and layers. Identical inputs score 0."""
    with torch.no_grad():
        score = 0.0
        feats_a = extractor(a)
        feats_b = extractor(b)
        for fa, fb in zip(feats_a, feats_b):
            na = fa / (fa.norm(dim=1, keepdim=True) + 1e-10)
            nb = fb / (fb.norm(dim=1, keepdim=True) + 1e-10)
            score += float(torch.mean((na - nb) ** 2))
    return score / len(feats_a)


def rgb_cube_to_tensor(data: np.ndarray) -> torch.Tensor:
    """(H, W, 3) exchange RGB cube (bands ascending: B, G, R) to an
    (1, 3, H, W) tensor in R, G, B order."""
    rgb = data[:, :, ::-1].copy()
    return torch.from_numpy(np.moveaxis(rgb, 2, 0)).unsqueeze(0).float()
