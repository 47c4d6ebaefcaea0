"""Alternating adversarial optimization with rollout-penalty generator updates.

One step = one discriminator update (descent on the real/fake log loss over
all three scales plus the shared stem) followed by one generator update
(descent on rollout penalty + weighted feature matching). All randomness is
derived from the root seed and structural counters (epoch, step, rollout
index), so resuming from a checkpoint replays the exact remaining schedule.
"""

import json
import logging
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
import torch

from .checkpoint import load_archive, save_archive
from .data.dataset import PairBatch
from .errors import CheckpointError, ConfigurationError, TrainingDiverged
from .losses import (
    LossBreakdown,
    fm_loss,
    gan_loss_d,
    set_loss_step,
    total_g_loss,
)
from .mc import IntermediateState, adversarial_term, live_completer, rollout, rollout_penalty
from .models.discriminator import DiscriminatorConfig, build_discriminator
from .models.generator import GeneratorConfig, build_generator
from .seeding import derive_seed, torch_generator

log = logging.getLogger(__name__)

PRESETS = {"paper": 0.05, "safe": 2e-4}


@dataclass
class TrainConfig:
    lr: float = 0.05
    epochs_constant: int = 100
    epochs_decay: int = 100
    epochs: int = 0  # 0 -> full constant+decay schedule
    beta1: float = 0.5
    beta2: float = 0.999
    batch_size: int = 4
    lambda_fm: float = 10.0
    mc_enabled: bool = True
    mc_n: int = 5
    mc_dropout: float = 0.2
    seed: int = 0
    max_steps: int = 0  # 0 -> no cap
    checkpoint_every: int = 0  # steps; 0 -> final checkpoint only
    coarse_pretrain_steps: int = 0
    threads: int = 1
    init_std: float = 0.02

    def validate(self) -> None:
        if self.lr <= 0:
            raise ConfigurationError(f"learning rate must be > 0, got {self.lr}")
        if self.epochs_constant < 1 or self.epochs_decay < 1:
            raise ConfigurationError("schedule phases must each cover at least one epoch")
        if self.epochs < 0 or self.batch_size < 1 or self.mc_n < 1:
            raise ConfigurationError("epochs, batch size and mc_n must be positive")
        if not 0.0 <= self.mc_dropout < 1.0:
            raise ConfigurationError(f"mc dropout must be in [0,1), got {self.mc_dropout}")
        if self.lambda_fm < 0:
            raise ConfigurationError(f"lambda_fm must be >= 0, got {self.lambda_fm}")

    def total_epochs(self) -> int:
        return self.epochs if self.epochs else self.epochs_constant + self.epochs_decay

    def to_dict(self) -> dict:
        return asdict(self)


def lr_at(epoch: int, cfg: TrainConfig) -> float:
    """Constant for the first phase, then a linear ramp to exactly zero."""
    total = cfg.epochs_constant + cfg.epochs_decay
    if not 0 <= epoch <= total:
        raise ConfigurationError(f"epoch {epoch} outside schedule 0..{total}")
    if epoch < cfg.epochs_constant:
        return cfg.lr
    return cfg.lr * (1.0 - (epoch - cfg.epochs_constant) / cfg.epochs_decay)


def _named_params(model):
    return list(model.named_parameters())


def _optimizer_arrays(prefix: str, model, optimizer) -> dict:
    arrays = {}
    state = optimizer.state_dict()["state"]
    for idx, (name, _) in enumerate(_named_params(model)):
        if idx not in state:
            continue
        key = name.replace(".", "/")
        entry = state[idx]
        arrays[f"{prefix}/{key}/exp_avg"] = entry["exp_avg"].numpy()
        arrays[f"{prefix}/{key}/exp_avg_sq"] = entry["exp_avg_sq"].numpy()
        arrays[f"{prefix}/{key}/step"] = np.asarray(float(entry["step"]), dtype=np.float32)
    return arrays


def _restore_optimizer(prefix: str, model, optimizer, arrays: dict, lr: float) -> None:
    base = optimizer.state_dict()
    state = {}
    for idx, (name, param) in enumerate(_named_params(model)):
        key = f"{prefix}/{name.replace('.', '/')}"
        if f"{key}/exp_avg" not in arrays:
            continue
        state[idx] = {
            "step": torch.tensor(float(arrays[f"{key}/step"])),
            "exp_avg": torch.from_numpy(arrays[f"{key}/exp_avg"].copy()).to(param.dtype),
            "exp_avg_sq": torch.from_numpy(arrays[f"{key}/exp_avg_sq"].copy()).to(param.dtype),
        }
    for group in base["param_groups"]:
        group["lr"] = lr
    optimizer.load_state_dict({"state": state, "param_groups": base["param_groups"]})


def _model_arrays(prefix: str, model) -> dict:
    return {
        f"{prefix}/{name.replace('.', '/')}": param.detach().cpu().numpy()
        for name, param in _named_params(model)
    }


def _restore_model(prefix: str, model, arrays: dict) -> None:
    state = {}
    for name, param in _named_params(model):
        key = f"{prefix}/{name.replace('.', '/')}"
        if key not in arrays:
            raise CheckpointError(f"checkpoint missing array {key}")
        arr = arrays[key]
        if tuple(arr.shape) != tuple(param.shape):
            raise CheckpointError(
                f"{key}: shape {tuple(arr.shape)} does not match model {tuple(param.shape)}"
            )
        state[name] = torch.from_numpy(arr.copy()).to(param.dtype)
    model.load_state_dict(state)


class Trainer:
    """Owns models, optimizers, data tensors and the step loop."""

    def __init__(
        self,
        cfg: TrainConfig,
        gen_cfg: GeneratorConfig,
        disc_cfg: DiscriminatorConfig,
        pairs,
        out_dir=None,
        run_config: dict | None = None,
    ):
        cfg.validate()
        gen_cfg.validate()
        disc_cfg.validate()
        torch.set_num_threads(max(1, cfg.threads))
        self.cfg = cfg
        self.gen_cfg = gen_cfg
        self.disc_cfg = disc_cfg
        self.run_config = run_config or {}
        self.generator = build_generator(
            gen_cfg, torch_generator(cfg.seed, "init", "gen"), std=cfg.init_std
        )
        self.discriminator = build_discriminator(
            disc_cfg, torch_generator(cfg.seed, "init", "disc"), std=cfg.init_std
        )
        self.opt_g = torch.optim.Adam(
            self.generator.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2)
        )
        self.opt_d = torch.optim.Adam(
            self.discriminator.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2)
        )
        self.pairs = list(pairs)
        if not self.pairs:
            raise ConfigurationError("training requires at least one scene pair")
        self.batch = PairBatch(self.pairs, gen_cfg.label_classes)
        self.step = 0
        self.out_dir = Path(out_dir) if out_dir else None
        self._log_file = None
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    # -- schedule ---------------------------------------------------------

    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(len(self.pairs) / self.cfg.batch_size)

    def epoch_of(self, step: int) -> int:
        return step // self.steps_per_epoch

    def _batch_indices(self, step: int) -> list[int]:
        epoch = self.epoch_of(step)
        order = np.random.default_rng(derive_seed(self.cfg.seed, "shuffle", epoch)).permutation(
            len(self.pairs)
        )
        offset = (step % self.steps_per_epoch) * self.cfg.batch_size
        return [int(i) for i in order[offset : offset + self.cfg.batch_size]]

    def _set_lr(self, lr: float) -> None:
        for opt in (self.opt_g, self.opt_d):
            for group in opt.param_groups:
                group["lr"] = lr

    # -- steps ------------------------------------------------------------

    def train_step(self) -> LossBreakdown:
        """One D update then one G update on the current step's batch."""
        step = self.step
        idx = self._batch_indices(step)
        sel = torch.as_tensor(idx, dtype=torch.long)
        label_full = self.batch.label_full[sel]
        label_half = self.batch.label_half[sel]
        real = self.batch.image[sel]
        epoch = self.epoch_of(step)
        schedule_epoch = min(epoch, self.cfg.epochs_constant + self.cfg.epochs_decay)
        self._set_lr(lr_at(schedule_epoch, self.cfg))
        set_loss_step(step)

        if step < self.cfg.coarse_pretrain_steps:
            breakdown = self._pretrain_step(step, label_half, real, idx)
        else:
            breakdown = self._adversarial_step(step, label_full, label_half, real, idx)
        self.step += 1
        self._log(breakdown)
        return breakdown

    def _pretrain_step(self, step, label_half, real, idx) -> LossBreakdown:
        """Supervised warmup of the coarse stage alone (optional phase)."""
        coarse_image, _ = self.generator.coarse(label_half)
        target = torch.nn.functional.avg_pool2d(real, 2)
        loss = torch.abs(coarse_image - target).mean()
        self._check_finite(step, idx, coarse=loss)
        self.opt_g.zero_grad()
        loss.backward()
        self.opt_g.step()
        return LossBreakdown(step=step, total_g=float(loss), fm_weight=self.cfg.lambda_fm)

    def _adversarial_step(self, step, label_full, label_half, real, idx) -> LossBreakdown:
        cfg = self.cfg
        # Discriminator half-step: generated images enter detached.
        with torch.no_grad():
            fused, _ = self.generator.fused_state(label_full, label_half)
            fake = self.generator.enhancer.complete(fused)
        real_out = self.discriminator(label_full, real)
        fake_out = self.discriminator(label_full, fake)
        d_per_scale = [
            gan_loss_d(r_scores, f_scores)
            for (r_scores, _), (f_scores, _) in zip(real_out, fake_out)
        ]
        d_loss = d_per_scale[0] + d_per_scale[1] + d_per_scale[2]
        self._check_finite(step, idx, d=d_loss)
        self.opt_d.zero_grad()
        d_loss.backward()
        self.opt_d.step()

        # Generator half-step: discriminator acts as critic and feature
        # extractor only.
        self.discriminator.requires_grad_(False)
        fused, _ = self.generator.fused_state(label_full, label_half)
        fake = self.generator.enhancer.complete(fused)
        with torch.no_grad():
            real_feats = [feats for _, feats in self.discriminator(label_full, real)]
        fake_out = self.discriminator(label_full, fake)
        fm_per_scale = [
            fm_loss(rf, ff) for rf, (_, ff) in zip(real_feats, fake_out)
        ]
        if cfg.mc_enabled:
            state = IntermediateState(fused, derive_seed(cfg.seed, "mc", step))
            rollouts = rollout(live_completer(self.generator, cfg.mc_dropout), state, cfg.mc_n)
            q = rollout_penalty(rollouts, self.discriminator, label_full)
        else:
            q = adversarial_term([scores for scores, _ in fake_out])
        total = total_g_loss(q, fm_per_scale, cfg.lambda_fm)
        self._check_finite(step, idx, q=q, total_g=total)
        self.opt_g.zero_grad()
        total.backward()
        self.opt_g.step()
        self.discriminator.requires_grad_(True)

        return LossBreakdown(
            step=step,
            d_loss=float(d_loss),
            d_per_scale=[float(v) for v in d_per_scale],
            q=float(q),
            fm=[float(v) for v in fm_per_scale],
            fm_weight=cfg.lambda_fm,
            total_g=float(total),
        )

    def _check_finite(self, step, idx, **losses) -> None:
        bad = {k: float(v) for k, v in losses.items() if not bool(torch.isfinite(v))}
        if not bad:
            return
        if self.out_dir:
            dump = {"step": step, "batch_ids": idx, "losses": bad}
            (self.out_dir / "divergence.json").write_text(json.dumps(dump, indent=1))
        raise TrainingDiverged(
            f"non-finite loss at step {step}: {bad}", step=step, batch_ids=idx
        )

    # -- loop -------------------------------------------------------------

    def run(self, progress=None) -> list[LossBreakdown]:
        """Run until the epoch schedule or max_steps cap is exhausted."""
        cfg = self.cfg
        total_steps = cfg.total_epochs() * self.steps_per_epoch
        if cfg.max_steps:
            total_steps = min(total_steps, cfg.max_steps)
        history = []
        epoch_rows = []
        current_epoch = self.epoch_of(self.step)
        while self.step < total_steps:
            breakdown = self.train_step()
            history.append(breakdown)
            epoch_rows.append(breakdown)
            if progress:
                progress(breakdown)
            if cfg.checkpoint_every and self.step % cfg.checkpoint_every == 0 and self.out_dir:
                self.save(self.out_dir / f"checkpoint_step{self.step:06d}.ckpt")
            if self.epoch_of(self.step) != current_epoch or self.step == total_steps:
                self._write_epoch_summary(current_epoch, epoch_rows)
                epoch_rows = []
                current_epoch = self.epoch_of(self.step)
        if self.out_dir:
            self.save(self.out_dir / "checkpoint_last.ckpt")
        return history

    def _write_epoch_summary(self, epoch: int, rows) -> None:
        if not self.out_dir or not rows:
            return
        path = self.out_dir / "metrics.csv"
        if not path.exists():
            path.write_text("epoch,steps,mean_d_loss,mean_total_g,lr\n")
        mean_d = sum(r.d_loss for r in rows) / len(rows)
        mean_g = sum(r.total_g for r in rows) / len(rows)
        schedule_epoch = min(epoch, self.cfg.epochs_constant + self.cfg.epochs_decay)
        with path.open("a") as fh:
            fh.write(
                f"{epoch},{len(rows)},{mean_d:.6f},{mean_g:.6f},{lr_at(schedule_epoch, self.cfg):.8f}\n"
            )

    def _log(self, breakdown: LossBreakdown) -> None:
        if not self.out_dir:
            return
        if self._log_file is None:
            self._log_file = (self.out_dir / "train_log.jsonl").open("a")
        self._log_file.write(json.dumps(breakdown.to_record()) + "\n")
        self._log_file.flush()

    # -- persistence ------------------------------------------------------

    def save(self, path) -> None:
        header = {
            "kind": "trainer",
            "epoch": self.epoch_of(self.step),
            "step": self.step,
            "rng": {"root_seed": self.cfg.seed},
            "config": {
                "train": self.cfg.to_dict(),
                "generator": self.gen_cfg.to_dict(),
                "discriminator": self.disc_cfg.to_dict(),
                "run": self.run_config,
            },
        }
        arrays = {}
        arrays.update(_model_arrays("gen", self.generator))
        arrays.update(_model_arrays("disc", self.discriminator))
        arrays.update(_optimizer_arrays("opt/gen", self.generator, self.opt_g))
        arrays.update(_optimizer_arrays("opt/disc", self.discriminator, self.opt_d))
        save_archive(path, header, arrays)

    @classmethod
    def restore(cls, path, pairs, out_dir=None) -> "Trainer":
        header, arrays = load_archive(path)
        if header.get("kind") != "trainer":
            raise CheckpointError(f"{path} is not a trainer checkpoint")
        cfg = TrainConfig(**header["config"]["train"])
        gen_cfg = GeneratorConfig(**header["config"]["generator"])
        disc_cfg = DiscriminatorConfig(**header["config"]["discriminator"])
        trainer = cls(
            cfg, gen_cfg, disc_cfg, pairs, out_dir=out_dir,
            run_config=header["config"].get("run"),
        )
        _restore_model("gen", trainer.generator, arrays)
        _restore_model("disc", trainer.discriminator, arrays)
        epoch = min(header["step"] // trainer.steps_per_epoch,
                    cfg.epochs_constant + cfg.epochs_decay)
        lr = lr_at(epoch, cfg)
        _restore_optimizer("opt/gen", trainer.generator, trainer.opt_g, arrays, lr)
        _restore_optimizer("opt/disc", trainer.discriminator, trainer.opt_d, arrays, lr)
        trainer.step = int(header["step"])
        return trainer

    def close(self) -> None:
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None


def load_models(path):
    """Restore just the models from a checkpoint (no optimizer or data).

    Returns (generator, discriminator, header).
    """
    header, arrays = load_archive(path)
    if header.get("kind") != "trainer":
        raise CheckpointError(f"{path} is not a trainer checkpoint")
    gen_cfg = GeneratorConfig(**header["config"]["generator"])
    disc_cfg = DiscriminatorConfig(**header["config"]["discriminator"])
    generator = build_generator(gen_cfg)
    discriminator = build_discriminator(disc_cfg)
    _restore_model("gen", generator, arrays)
    _restore_model("disc", discriminator, arrays)
    return generator, discriminator, header
