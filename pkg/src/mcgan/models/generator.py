"""Two-stage coarse-to-fine generator.

The global stage runs at half resolution (frontend convs, residual blocks,
transposed-conv backend) and exposes its last backend feature map. The
enhancer downsamples the full-resolution input by 2, fuses with the coarse
features by elementwise sum, and completes through its own residual blocks
and backend. The completion path takes an optional dropout mask generator so
stochastic rollouts share the exact same code as the plain forward pass.
"""

from dataclasses import dataclass, asdict

import torch
import torch.nn as nn

from ..errors import ConfigurationError, ShapeError


@dataclass
class GeneratorConfig:
    width: int = 128
    height: int = 64
    label_classes: int = 4
    channels: int = 32  # fusion channel count: both stages meet at this width
    coarse_blocks: int = 4
    enhance_blocks: int = 2

    def validate(self) -> None:
        if self.width % 4 or self.height % 4:
            raise ConfigurationError(
                f"base width/height must be divisible by 4, got {self.width}x{self.height}"
            )
        if self.width % 8 or self.height % 8:
            raise ConfigurationError(
                f"base width/height must be divisible by 8 for the coarse downsampling "
                f"chain, got {self.width}x{self.height}"
            )
        if self.channels < 2 or self.channels % 2:
            raise ConfigurationError(f"channels must be even and >= 2, got {self.channels}")
        if self.coarse_blocks < 1 or self.enhance_blocks < 1:
            raise ConfigurationError("both stages need at least one residual block")

    def to_dict(self) -> dict:
        return asdict(self)


def init_weights(module: nn.Module, std: float = 0.02, generator: torch.Generator | None = None):
    """Gaussian(0, std) weights, zero biases, deterministic given the generator."""
    for name, param in sorted(module.named_parameters(), key=lambda kv: kv[0]):
        with torch.no_grad():
            if name.endswith("bias"):
                param.zero_()
            else:
                param.normal_(0.0, std, generator=generator)
    return module


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Sequential(
            nn.ReflectionPad2d(1),
            nn.Conv2d(channels, channels, kernel_size=3),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
            nn.ReflectionPad2d(1),
            nn.Conv2d(channels, channels, kernel_size=3),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x):
        return x + self.conv(x)


def fuse(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Elementwise sum of two feature maps with identical shapes."""
    if a.shape != b.shape:
        raise ShapeError(f"fusion shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")
    return a + b


def _dropout(x: torch.Tensor, rate: float, generator: torch.Generator | None) -> torch.Tensor:
    """Inverted dropout with masks from an explicit generator.

    rate 0 is a strict no-op (no RNG consumed) so the deterministic forward
    pass and a rate-0 rollout are bit-identical.
    """
    if rate <= 0.0:
        return x
    keep = torch.rand(x.shape, generator=generator, dtype=x.dtype, device=x.device) >= rate
    return x * keep.to(x.dtype) / (1.0 - rate)


class GlobalGenerator(nn.Module):
    """Half-resolution stage; returns (coarse image, last backend features)."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        c = cfg.channels
        self.cfg = cfg
        self.front = nn.Sequential(
            nn.ReflectionPad2d(3),
            nn.Conv2d(cfg.label_classes, c, kernel_size=7),
            nn.InstanceNorm2d(c),
            nn.ReLU(inplace=True),
            nn.Conv2d(c, 2 * c, kernel_size=3, stride=2, padding=1),
            nn.InstanceNorm2d(2 * c),
            nn.ReLU(inplace=True),
            nn.Conv2d(2 * c, 4 * c, kernel_size=3, stride=2, padding=1),
            nn.InstanceNorm2d(4 * c),
            nn.ReLU(inplace=True),
        )
        self.blocks = nn.Sequential(*[ResidualBlock(4 * c) for _ in range(cfg.coarse_blocks)])
        self.backend = nn.Sequential(
            nn.ConvTranspose2d(4 * c, 2 * c, kernel_size=3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(2 * c),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(2 * c, c, kernel_size=3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(c),
            nn.ReLU(inplace=True),
        )
        self.to_rgb = nn.Sequential(
            nn.ReflectionPad2d(3), nn.Conv2d(c, 3, kernel_size=7), nn.Tanh()
        )

    def forward(self, label_half: torch.Tensor):
        expect = (self.cfg.label_classes, self.cfg.height // 2, self.cfg.width // 2)
        if tuple(label_half.shape[1:]) != expect:
            raise ShapeError(
                f"coarse input must be (B,{expect[0]},{expect[1]},{expect[2]}), "
                f"got {tuple(label_half.shape)}"
            )
        features = self.backend(self.blocks(self.front(label_half)))
        return self.to_rgb(features), features


class LocalEnhancer(nn.Module):
    """Full-resolution stage; `complete` runs the post-fusion path."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        c = cfg.channels
        self.cfg = cfg
        self.front = nn.Sequential(
            nn.ReflectionPad2d(3),
            nn.Conv2d(cfg.label_classes, c // 2, kernel_size=7),
            nn.InstanceNorm2d(c // 2),
            nn.ReLU(inplace=True),
            nn.Conv2d(c // 2, c, kernel_size=3, stride=2, padding=1),
            nn.InstanceNorm2d(c),
            nn.ReLU(inplace=True),
        )
        self.blocks = nn.ModuleList([ResidualBlock(c) for _ in range(cfg.enhance_blocks)])
        self.backend = nn.Sequential(
            nn.ConvTranspose2d(c, c // 2, kernel_size=3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(c // 2),
            nn.ReLU(inplace=True),
        )
        self.to_rgb = nn.Sequential(
            nn.ReflectionPad2d(3), nn.Conv2d(c // 2, 3, kernel_size=7), nn.Tanh()
        )

    def forward_front(self, label_full: torch.Tensor) -> torch.Tensor:
        expect = (self.cfg.label_classes, self.cfg.height, self.cfg.width)
        if tuple(label_full.shape[1:]) != expect:
            raise ShapeError(
                f"enhancer input must be (B,{expect[0]},{expect[1]},{expect[2]}), "
                f"got {tuple(label_full.shape)}"
            )
        return self.front(label_full)

    def complete(
        self,
        fused: torch.Tensor,
        dropout: float = 0.0,
        generator: torch.Generator | None = None,
    ) -> torch.Tensor:
        expect = (self.cfg.channels, self.cfg.height // 2, self.cfg.width // 2)
        if tuple(fused.shape[1:]) != expect:
            raise ShapeError(
                f"fused state must be (B,{expect[0]},{expect[1]},{expect[2]}), "
                f"got {tuple(fused.shape)}"
            )
        x = fused
        for block in self.blocks:
            x = _dropout(block(x), dropout, generator)
        x = _dropout(self.backend(x), dropout, generator)
        return self.to_rgb(x)


class TrackGenerator(nn.Module):
    """Both stages wired together: labels in, full-resolution image out."""

    def __init__(self, cfg: GeneratorConfig):
        cfg.validate()
        super().__init__()
        self.cfg = cfg
        self.coarse = GlobalGenerator(cfg)
        self.enhancer = LocalEnhancer(cfg)

    def fused_state(self, label_full: torch.Tensor, label_half: torch.Tensor):
        """Returns (fused feature map entering the enhancer blocks, coarse image)."""
        coarse_image, coarse_features = self.coarse(label_half)
        front = self.enhancer.forward_front(label_full)
        return fuse(front, coarse_features), coarse_image

    def forward(self, label_full: torch.Tensor, label_half: torch.Tensor) -> torch.Tensor:
        fused, _ = self.fused_state(label_full, label_half)
        return self.enhancer.complete(fused)


def build_generator(
    cfg: GeneratorConfig, generator: torch.Generator | None = None, std: float = 0.02
) -> TrackGenerator:
    return init_weights(TrackGenerator(cfg), std=std, generator=generator)
