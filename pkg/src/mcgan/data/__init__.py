from .scene import (
    CLASS_BACKGROUND,
    CLASS_BED,
    CLASS_CABLE,
    CLASS_TRACK,
    NUM_CLASSES,
    ScenePair,
    SceneSpec,
    synth_scene,
)
from .augment import augment, flip, mirror, rotate
from .manifest import (
    DatasetManifest,
    ManifestEntry,
    load_image,
    load_label,
    read_manifest,
    save_image,
    save_label,
    split_dataset,
    write_manifest,
)

__all__ = [
    "CLASS_BACKGROUND",
    "CLASS_TRACK",
    "CLASS_BED",
    "CLASS_CABLE",
    "NUM_CLASSES",
    "SceneSpec",
    "ScenePair",
    "synth_scene",
    "augment",
    "mirror",
    "flip",
    "rotate",
    "DatasetManifest",
    "ManifestEntry",
    "split_dataset",
    "read_manifest",
    "write_manifest",
    "save_label",
    "load_label",
    "save_image",
    "load_image",
]
