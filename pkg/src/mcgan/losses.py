"""Adversarial and feature-matching losses.

Scores arriving at the log-losses are clamped to [eps, 1-eps]; a clamp event
is logged once per training step at most. The generator-side loss is the
non-saturating -log D form. Feature matching is the layer-size-normalized L1
distance summed over the exposed discriminator layers, with the real branch
detached so the discriminator only acts as a feature extractor.
"""

import logging
from dataclasses import dataclass, field

import torch

log = logging.getLogger(__name__)

EPS = 1e-7

_clamp_state = {"step": None, "logged": False}


def set_loss_step(step) -> None:
    """Mark the current training step for once-per-step clamp logging."""
    _clamp_state["step"] = step
    _clamp_state["logged"] = False


def _clamp(scores: torch.Tensor) -> torch.Tensor:
    if bool((scores <= 0).any()) or bool((scores >= 1).any()):
        if not _clamp_state["logged"]:
            log.warning("scores at 0/1 clamped to eps=%g (step=%s)", EPS, _clamp_state["step"])
            _clamp_state["logged"] = True
    return scores.clamp(EPS, 1.0 - EPS)


def gan_loss_d(scores_real: torch.Tensor, scores_fake: torch.Tensor) -> torch.Tensor:
    """-mean log(real) - mean log(1 - fake) over a patch grid."""
    real = _clamp(scores_real)
    fake = _clamp(scores_fake)
    return -torch.log(real).mean() - torch.log(1.0 - fake).mean()


def gan_loss_g(scores_fake: torch.Tensor) -> torch.Tensor:
    """Non-saturating generator loss: -mean log(fake)."""
    return -torch.log(_clamp(scores_fake)).mean()


def fm_loss(real_features, fake_features) -> torch.Tensor:
    """Sum over layers of L1 distance / element count; real branch detached."""
    if len(real_features) != len(fake_features):
        raise ValueError(
            f"layer count mismatch: {len(real_features)} vs {len(fake_features)}"
        )
    total = None
    for real, fake in zip(real_features, fake_features):
        if real.shape != fake.shape:
            raise ValueError(f"layer shape mismatch: {tuple(real.shape)} vs {tuple(fake.shape)}")
        term = torch.abs(real.detach() - fake).mean()
        total = term if total is None else total + term
    return total


def total_g_loss(q: torch.Tensor, fm_per_scale, weight: float) -> torch.Tensor:
    """q + weight * sum of per-scale feature-matching losses, in exactly that order."""
    if weight < 0:
        raise ValueError(f"fm weight must be >= 0, got {weight}")
    fm_sum = None
    for term in fm_per_scale:
        fm_sum = term if fm_sum is None else fm_sum + term
    if fm_sum is None:
        return q
    return q + weight * fm_sum


@dataclass
class LossBreakdown:
    """Per-step components, JSONL-serializable for the training log."""

    step: int = 0
    d_loss: float = 0.0
    d_per_scale: list = field(default_factory=list)
    q: float = 0.0
    fm: list = field(default_factory=list)
    fm_weight: float = 10.0
    total_g: float = 0.0

    def to_record(self) -> dict:
        return {
            "step": self.step,
            "d_loss": self.d_loss,
            "q": self.q,
            "fm": list(self.fm),
            "total_g": self.total_g,
        }
