"""Label-preserving augmentations: mirror, flip and bounded rotation.

Labels are resampled with nearest-neighbor so class ids stay in {0..3};
images use bilinear resampling. Rotation is bounded to +-15 degrees and
rejected outright when it would expose more than 30% of the frame.
"""

import numpy as np
from scipy import ndimage

from ..errors import ConfigurationError, DegenerateAugmentationError
from .scene import ScenePair

MAX_ROTATION_DEG = 15.0
MAX_EXPOSED_FRACTION = 0.30


def mirror(pair: ScenePair) -> ScenePair:
    """Horizontal mirror; an involution (mirror(mirror(p)) == p bit-exactly)."""
    out = ScenePair(
        np.ascontiguousarray(pair.label[:, ::-1]),
        np.ascontiguousarray(pair.image[:, ::-1]),
        dict(pair.meta),
    )
    out.meta["augmentations"] = list(pair.meta.get("augmentations", [])) + ["mirror"]
    return out


def flip(pair: ScenePair) -> ScenePair:
    """Vertical flip."""
    out = ScenePair(
        np.ascontiguousarray(pair.label[::-1, :]),
        np.ascontiguousarray(pair.image[::-1, :]),
        dict(pair.meta),
    )
    out.meta["augmentations"] = list(pair.meta.get("augmentations", [])) + ["flip"]
    return out


def exposed_fraction(width: int, height: int, theta_deg: float) -> float:
    """Fraction of the frame left uncovered when rotating about the center."""
    ones = np.ones((height, width), dtype=np.uint8)
    rotated = ndimage.rotate(ones, theta_deg, reshape=False, order=0, mode="constant", cval=0)
    return float(np.mean(rotated == 0))


def rotate(pair: ScenePair, theta_deg: float) -> ScenePair:
    """Rotate both grids about the center by theta_deg (within +-15)."""
    if abs(theta_deg) > MAX_ROTATION_DEG:
        raise ConfigurationError(
            f"rotation must be within +-{MAX_ROTATION_DEG} degrees, got {theta_deg}"
        )
    h, w = pair.label.shape
    exposed = exposed_fraction(w, h, theta_deg)
    if exposed > MAX_EXPOSED_FRACTION:
        raise DegenerateAugmentationError(
            f"rotation by {theta_deg} degrees exposes {exposed:.0%} of the frame"
        )
    label = ndimage.rotate(pair.label, theta_deg, reshape=False, order=0, mode="constant", cval=0)
    image = ndimage.rotate(
        pair.image, theta_deg, axes=(1, 0), reshape=False, order=1, mode="constant", cval=0.0
    )
    out = ScenePair(
        label.astype(pair.label.dtype),
        np.clip(image, 0.0, 1.0).astype(pair.image.dtype),
        dict(pair.meta),
    )
    out.meta["augmentations"] = list(pair.meta.get("augmentations", [])) + [f"rotate:{theta_deg}"]
    return out


def augment(pair: ScenePair, transform: str, theta_deg: float = 0.0) -> ScenePair:
    """Apply one named transform: 'mirror', 'flip' or 'rotate'."""
    if transform == "mirror":
        return mirror(pair)
    if transform == "flip":
        return flip(pair)
    if transform == "rotate":
        return rotate(pair, theta_deg)
    raise ConfigurationError(f"unknown transform {transform!r}")
