"""Dataset storage: 8-bit PNGs plus a JSON manifest with split tags.

Label PNGs carry the class id in the red channel. The manifest stores paths
relative to its own directory and a schema-version field so readers can
reject incompatible layouts.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import ConfigurationError, InputError
from .scene import NUM_CLASSES

SCHEMA_VERSION = 1


@dataclass
class ManifestEntry:
    label: str
    image: str
    split: str = ""


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    ratio: float = 0.8
    seed: int = 0


def save_label(path, grid: np.ndarray) -> None:
    """Class ids in the red channel of an RGB PNG."""
    rgb = np.zeros((*grid.shape, 3), dtype=np.uint8)
    rgb[..., 0] = grid.astype(np.uint8)
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")


def load_label(path) -> np.ndarray:
    arr = np.asarray(Image.open(path).convert("RGB"))
    grid = arr[..., 0].copy()
    if grid.max(initial=0) >= NUM_CLASSES:
        raise InputError(f"{path}: label values exceed class range 0..{NUM_CLASSES - 1}")
    return grid


def save_image(path, image: np.ndarray) -> None:
    """Float [0,1] HxWx3 quantized to 8 bits."""
    arr = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def load_image(path) -> np.ndarray:
    arr = np.asarray(Image.open(path).convert("RGB"))
    return (arr.astype(np.float32) / 255.0).copy()


def write_manifest(path, manifest: DatasetManifest) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "ratio": manifest.ratio,
        "seed": manifest.seed,
        "entries": [
            {"label": e.label, "image": e.image, "split": e.split} for e in manifest.entries
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_manifest(path, check_paths: bool = True) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read manifest {path}: {exc}") from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise InputError(
            f"{path}: manifest schema_version {doc.get('schema_version')!r}, expected {SCHEMA_VERSION}"
        )
    manifest = DatasetManifest(ratio=doc.get("ratio", 0.8), seed=doc.get("seed", 0))
    for item in doc["entries"]:
        manifest.entries.append(ManifestEntry(item["label"], item["image"], item.get("split", "")))
    if check_paths:
        base = path.parent
        for e in manifest.entries:
            for rel in (e.label, e.image):
                if not (base / rel).exists():
                    raise InputError(f"{path}: missing dataset file {rel}")
    return manifest


def split_dataset(manifest: DatasetManifest, ratio: float = 0.8, seed: int = 0):
    """Shuffle entries by seed and tag round(ratio*N) of them as train.

    Returns (train_entries, val_entries); the manifest entries are tagged
    in place. Rounding is half-up so a single entry at ratio 0.8 trains.
    """
    if not manifest.entries:
        raise ConfigurationError("cannot split an empty manifest")
    if not 0.0 < ratio < 1.0:
        raise ConfigurationError(f"split ratio must be in (0,1), got {ratio}")
    n = len(manifest.entries)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(ratio * n + 0.5))
    train, val = [], []
    for pos, idx in enumerate(order):
        entry = manifest.entries[int(idx)]
        entry.split = "train" if pos < n_train else "val"
        (train if pos < n_train else val).append(entry)
    manifest.ratio = ratio
    manifest.seed = seed
    return train, val
