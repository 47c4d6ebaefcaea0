"""Shared-stem multiscale patch discriminators.

One convolutional stem extracts primary features from the channel-concatenated
(label, image) input; the feature map is then average-pool downsampled by 2
and 4 to form a three-level pyramid, and three branches with identical
topology score one level each. Every branch exposes its intermediate feature
maps (branch input included) for the feature-matching loss.
"""

from dataclasses import dataclass, asdict

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ConfigurationError, ShapeError

# The stem downsamples its input by this factor regardless of depth.
STEM_STRIDE = 2


@dataclass
class DiscriminatorConfig:
    label_classes: int = 4
    image_channels: int = 3
    channels: int = 32  # stem output width
    stem_depth: int = 2  # stride-1 convs followed by one stride-2 conv
    branch_layers: int = 3  # stride-2 blocks per branch; receptive stride = 2**branch_layers

    def validate(self) -> None:
        if self.channels < 2 or self.channels % 2:
            raise ConfigurationError(f"channels must be even and >= 2, got {self.channels}")
        if self.stem_depth < 1:
            raise ConfigurationError(f"stem_depth must be >= 1, got {self.stem_depth}")
        if self.branch_layers < 1:
            raise ConfigurationError(f"branch_layers must be >= 1, got {self.branch_layers}")

    @property
    def feature_layers(self) -> int:
        """T: exposed feature maps per branch, branch input included."""
        return 1 + self.branch_layers

    def to_dict(self) -> dict:
        return asdict(self)


class SharedStem(nn.Module):
    """Primary feature extractor shared by all three branches."""

    def __init__(self, cfg: DiscriminatorConfig):
        super().__init__()
        c = cfg.channels
        in_ch = cfg.label_classes + cfg.image_channels
        layers = []
        prev = in_ch
        for _ in range(cfg.stem_depth - 1):
            layers += [nn.Conv2d(prev, c // 2, kernel_size=3, padding=1), nn.LeakyReLU(0.2, True)]
            prev = c // 2
        layers += [nn.Conv2d(prev, c, kernel_size=4, stride=2, padding=1), nn.LeakyReLU(0.2, True)]
        self.net = nn.Sequential(*layers)

    def forward(self, label: torch.Tensor, image: torch.Tensor) -> torch.Tensor:
        if label.shape[0] != image.shape[0] or label.shape[2:] != image.shape[2:]:
            raise ShapeError(
                f"label {tuple(label.shape)} and image {tuple(image.shape)} are misaligned"
            )
        return self.net(torch.cat([label, image], dim=1))


def build_pyramid(stem_features: torch.Tensor):
    """(level_1, level_2, level_3) at scale factors 1, 2, 4."""
    h, w = stem_features.shape[-2:]
    if h % 4 or w % 4:
        raise ShapeError(f"stem features must be divisible by 4, got {h}x{w}")
    return (
        stem_features,
        F.avg_pool2d(stem_features, kernel_size=2, stride=2),
        F.avg_pool2d(stem_features, kernel_size=4, stride=4),
    )


class PatchBranch(nn.Module):
    """One patch-scoring branch; all three share this exact topology."""

    def __init__(self, cfg: DiscriminatorConfig):
        super().__init__()
        c = cfg.channels
        self.stages = nn.ModuleList()
        prev = c
        for i in range(cfg.branch_layers):
            nxt = min(prev * 2, 8 * c)
            stage = [nn.Conv2d(prev, nxt, kernel_size=4, stride=2, padding=1)]
            if i > 0:
                stage.insert(1, nn.InstanceNorm2d(nxt))
            stage.append(nn.LeakyReLU(0.2, True))
            self.stages.append(nn.Sequential(*stage))
            prev = nxt
        self.score = nn.Conv2d(prev, 1, kernel_size=3, padding=1)

    def forward(self, level: torch.Tensor):
        """Returns (patch scores in (0,1), feature maps shallow->deep)."""
        features = [level]
        x = level
        for stage in self.stages:
            x = stage(x)
            features.append(x)
        return torch.sigmoid(self.score(x)), features


class MultiScaleDiscriminator(nn.Module):
    """Stem + pyramid + three identical-topology patch branches."""

    def __init__(self, cfg: DiscriminatorConfig):
        cfg.validate()
        super().__init__()
        self.cfg = cfg
        self.stem = SharedStem(cfg)
        self.d1 = PatchBranch(cfg)
        self.d2 = PatchBranch(cfg)
        self.d3 = PatchBranch(cfg)

    @property
    def branches(self):
        return (self.d1, self.d2, self.d3)

    def branch_forward(self, k: int, level: torch.Tensor):
        if k not in (1, 2, 3):
            raise ConfigurationError(f"branch index must be 1, 2 or 3, got {k}")
        return self.branches[k - 1](level)

    def forward(self, label: torch.Tensor, image: torch.Tensor):
        """Per scale: (scores, features). Scale order is full, 1/2, 1/4."""
        levels = build_pyramid(self.stem(label, image))
        return [branch(level) for branch, level in zip(self.branches, levels)]

    def score_all(self, label: torch.Tensor, image: torch.Tensor):
        return [scores for scores, _ in self.forward(label, image)]


def build_discriminator(
    cfg: DiscriminatorConfig, generator: torch.Generator | None = None, std: float = 0.02
) -> MultiScaleDiscriminator:
    from .generator import init_weights

    return init_weights(MultiScaleDiscriminator(cfg), std=std, generator=generator)
