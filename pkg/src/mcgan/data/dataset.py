"""Bridging stored pairs to training tensors.

Labels become one-hot (C,H,W) float maps; images move to (3,H,W) in [-1,1]
to match the tanh output range. The coarse-stage input is the label grid
nearest-neighbor downsampled by 2 before one-hot encoding.
"""

from pathlib import Path

import numpy as np
import torch

from ..errors import ShapeError
from .manifest import load_image, load_label, read_manifest
from .scene import NUM_CLASSES, ScenePair


def one_hot_label(grid: np.ndarray, num_classes: int = NUM_CLASSES) -> torch.Tensor:
    if grid.max(initial=0) >= num_classes:
        raise ShapeError(f"label ids exceed {num_classes} classes")
    onehot = np.zeros((num_classes, *grid.shape), dtype=np.float32)
    for c in range(num_classes):
        onehot[c] = grid == c
    return torch.from_numpy(onehot)


def downsample_label(grid: np.ndarray) -> np.ndarray:
    """Nearest-neighbor 2x downsample; keeps class ids intact."""
    h, w = grid.shape
    if h % 2 or w % 2:
        raise ShapeError(f"label dims must be even to downsample, got {h}x{w}")
    return grid[::2, ::2]


def image_to_tensor(image: np.ndarray) -> torch.Tensor:
    """HxWx3 [0,1] -> 3xHxW [-1,1]."""
    chw = np.transpose(image, (2, 0, 1)).astype(np.float32)
    return torch.from_numpy(chw * 2.0 - 1.0)


def tensor_to_image(tensor: torch.Tensor) -> np.ndarray:
    """3xHxW [-1,1] -> HxWx3 [0,1]."""
    arr = tensor.detach().cpu().numpy()
    arr = (arr + 1.0) / 2.0
    return np.clip(np.transpose(arr, (1, 2, 0)), 0.0, 1.0)


class PairBatch:
    """Stacked tensors for a list of scene pairs."""

    def __init__(self, pairs: list[ScenePair], num_classes: int = NUM_CLASSES):
        self.label_full = torch.stack([one_hot_label(p.label, num_classes) for p in pairs])
        self.label_half = torch.stack(
            [one_hot_label(downsample_label(p.label), num_classes) for p in pairs]
        )
        self.image = torch.stack([image_to_tensor(p.image) for p in pairs])
        self.size = len(pairs)


def load_split(manifest_path, split: str) -> list[ScenePair]:
    """Materialize one split of a stored dataset as in-memory pairs."""
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent
    pairs = []
    for entry in manifest.entries:
        if split and entry.split != split:
            continue
        pairs.append(
            ScenePair(
                load_label(base / entry.label),
                load_image(base / entry.image),
                {"label_path": entry.label, "image_path": entry.image},
            )
        )
    return pairs
