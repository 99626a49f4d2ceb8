"""Residual U-Net for super-resolved demosaicking.

Contracting path with 4 downsampling stages and 2 residual blocks per
resolution, symmetric expanding path with skip connections. The network
refines its input: the output is input plus a learned correction, so an
untrained model starts near the bilinear baseline.
"""

from __future__ import annotations

import torch
from torch import nn


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        groups = min(8, channels)
        self.body = nn.Sequential(
            nn.GroupNorm(groups, channels),
            nn.SiLU(),
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.GroupNorm(groups, channels),
            nn.SiLU(),
            nn.Conv2d(channels, channels, 3, padding=1),
        )

    def forward(self, x):
        return x + self.body(x)


def _stage(channels: int, blocks: int = 2) -> nn.Sequential:
    return nn.Sequential(*[ResidualBlock(channels) for _ in range(blocks)])


class ResUNet(nn.Module):
    def __init__(self, bands: int, base_channels: int = 16, depth: int = 4, tile: int = 4):
        super().__init__()
        self.tile = tile
        chans = [base_channels * (2**i) for i in range(depth + 1)]
        self.stem = nn.Conv2d(bands, chans[0], 3, padding=1)
        self.down_blocks = nn.ModuleList([_stage(c) for c in chans[:-1]])
        self.downsamplers = nn.ModuleList(
            [nn.Conv2d(chans[i], chans[i + 1], 3, stride=2, padding=1) for i in range(depth)]
        )
        self.bottleneck = _stage(chans[-1])
        self.upsamplers = nn.ModuleList(
            [
                nn.Sequential(
                    nn.Upsample(scale_factor=2, mode="nearest"),
                    nn.Conv2d(chans[i + 1], chans[i], 3, padding=1),
                )
                for i in reversed(range(depth))
            ]
        )
        self.up_blocks = nn.ModuleList(
            [
                nn.Sequential(
                    nn.Conv2d(2 * chans[i], chans[i], 1),
                    _stage(chans[i]),
                )
                for i in reversed(range(depth))
            ]
        )
        self.head = nn.Conv2d(chans[0], bands, 3, padding=1)
        # damped head: start close to the identity refinement without
        # starving upstream layers of gradient signal
        with torch.no_grad():
            self.head.weight.mul_(0.1)
            self.head.bias.zero_()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        skips = []
        h = self.stem(x)
        for blocks, down in zip(self.down_blocks, self.downsamplers):
            h = blocks(h)
            skips.append(h)
            h = down(h)
        h = self.bottleneck(h)
        for up, blocks, skip in zip(self.upsamplers, self.up_blocks, reversed(skips)):
            h = up(h)
            h = blocks(torch.cat([h, skip], dim=1))
        return x + self.head(h)
