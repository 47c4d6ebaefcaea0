"""Batch inference: label PNGs in, generated images and track masks out.

Generated images land in the output directory; `masks/` receives the
luminance-thresholded binary track masks used by the evaluation pipeline.
"""

from pathlib import Path

import numpy as np
import torch

from .data.dataset import downsample_label, one_hot_label, tensor_to_image
from .data.manifest import load_label, save_image, save_label
from .errors import InputError
from .train import load_models

MASK_THRESHOLD = 0.5


def threshold_track_mask(image: np.ndarray, threshold: float = MASK_THRESHOLD) -> np.ndarray:
    """Bright pixels are track line: luminance > threshold -> class 1."""
    luminance = image.mean(axis=2)
    return (luminance > threshold).astype(np.uint8)


def generate_image(generator, label_grid: np.ndarray) -> np.ndarray:
    """Run one label grid through the generator; returns HxWx3 in [0,1]."""
    generator.eval()
    num_classes = generator.cfg.label_classes
    label_full = one_hot_label(label_grid, num_classes).unsqueeze(0)
    label_half = one_hot_label(downsample_label(label_grid), num_classes).unsqueeze(0)
    with torch.no_grad():
        out = generator(label_full, label_half)
    return tensor_to_image(out[0])


def run_inference(
    checkpoint_path, labels_dir, out_dir, mask_threshold: float = MASK_THRESHOLD
) -> list[str]:
    """Generate an image + mask per label PNG; returns the processed names."""
    labels_dir = Path(labels_dir)
    out_dir = Path(out_dir)
    if not labels_dir.is_dir():
        raise InputError(f"labels directory {labels_dir} does not exist")
    label_paths = sorted(labels_dir.glob("*.png"))
    if not label_paths:
        raise InputError(f"no label PNGs found in {labels_dir}")
    generator, _, _ = load_models(checkpoint_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(exist_ok=True)
    names = []
    for path in label_paths:
        grid = load_label(path)
        expect = (generator.cfg.height, generator.cfg.width)
        if grid.shape != expect:
            raise InputError(
                f"{path.name}: label is {grid.shape[1]}x{grid.shape[0]}, "
                f"checkpoint expects {expect[1]}x{expect[0]}"
            )
        image = generate_image(generator, grid)
        save_image(out_dir / path.name, image)
        save_label(out_dir / "masks" / path.name, threshold_track_mask(image, mask_threshold))
        names.append(path.name)
    return names
