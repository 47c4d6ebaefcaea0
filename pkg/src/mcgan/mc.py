"""Monte Carlo rollouts of the generator's intermediate state.

The intermediate state is the fused feature map entering the enhancer's
residual blocks. A virtual completer (a frozen parameter copy of the
enhancer) samples N completions with independent dropout masks; their
averaged three-scale generator-side adversarial penalty is the rollout
penalty driving the generator update. During training the same rollout
function runs against the live enhancer instead, so the penalty stays
differentiable while the masks (drawn from per-rollout seeds) act as
constants.
"""

import copy
import hashlib
from dataclasses import dataclass, field

import torch

from .errors import ConfigurationError
from .losses import gan_loss_g
from .models.generator import LocalEnhancer
from .seeding import derive_seed, torch_generator


@dataclass
class IntermediateState:
    """Fused pre-block feature map plus the seed its rollouts derive from."""

    features: torch.Tensor
    seed: int = 0


@dataclass
class RolloutSet:
    completions: list = field(default_factory=list)
    seeds: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.completions)


def params_checksum(module: torch.nn.Module) -> str:
    """Order-stable digest of all parameter bytes."""
    h = hashlib.blake2b(digest_size=16)
    for name, param in sorted(module.named_parameters(), key=lambda kv: kv[0]):
        h.update(name.encode())
        h.update(param.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


class VirtualCompleter:
    """Frozen snapshot of the enhancer's completion path."""

    def __init__(self, enhancer: LocalEnhancer, dropout: float = 0.2):
        self.enhancer = copy.deepcopy(enhancer)
        self.enhancer.requires_grad_(False)
        self.dropout = dropout
        self.checksum = params_checksum(self.enhancer)

    def complete(self, features: torch.Tensor, generator: torch.Generator | None = None):
        with torch.no_grad():
            return self.enhancer.complete(features.detach(), self.dropout, generator)


def snapshot_completer(generator_model, dropout: float = 0.2) -> VirtualCompleter:
    """Copy the enhancer with its current parameters; no gradient ever flows back."""
    return VirtualCompleter(generator_model.enhancer, dropout)


def rollout(completer, state: IntermediateState, n: int = 5) -> RolloutSet:
    """N completions of the state with independent per-rollout dropout masks.

    `completer` is either a VirtualCompleter (frozen, gradient-free) or a
    live LocalEnhancer paired with a dropout rate via `live_completer`;
    both consume identical mask streams, so for equal parameters the
    completions are bit-identical.
    """
    if n < 1:
        raise ConfigurationError(f"rollout count must be >= 1, got {n}")
    out = RolloutSet()
    for i in range(n):
        gen = torch_generator(state.seed, "rollout", i)
        out.completions.append(completer.complete(state.features, gen))
        out.seeds.append(derive_seed(state.seed, "rollout", i))
    return out


class _LiveCompleter:
    """Adapter running rollouts through the live enhancer, keeping the graph."""

    def __init__(self, enhancer: LocalEnhancer, dropout: float):
        self.enhancer = enhancer
        self.dropout = dropout

    def complete(self, features, generator=None):
        return self.enhancer.complete(features, self.dropout, generator)


def live_completer(generator_model, dropout: float) -> _LiveCompleter:
    return _LiveCompleter(generator_model.enhancer, dropout)


def adversarial_term(disc_outputs) -> torch.Tensor:
    """Summed generator-side loss over the three scale score grids."""
    total = None
    for scores in disc_outputs:
        term = gan_loss_g(scores)
        total = term if total is None else total + term
    return total


def rollout_penalty(rollouts: RolloutSet, discriminator, label: torch.Tensor) -> torch.Tensor:
    """Mean over rollouts of the summed three-scale generator-side loss.

    The mean is computed as first + sum(terms - first)/N so a set of
    identical completions yields exactly the single-completion penalty.
    """
    if len(rollouts) == 0:
        raise ConfigurationError("rollout set is empty")
    terms = [
        adversarial_term(discriminator.score_all(label, image))
        for image in rollouts.completions
    ]
    first = terms[0]
    if len(terms) == 1:
        return first
    correction = None
    for term in terms:
        delta = term - first
        correction = delta if correction is None else correction + delta
    return first + correction / len(terms)
