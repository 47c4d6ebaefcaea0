"""Synthetic downhole track scenes.

Each scene is a pair (label map, photo-style image). The geometry is planned
first (`_plan_scene`), then the label grid is rasterized from the plan and the
image is rendered from the label grid, so class-1 pixels in the label and rail
pixels in the image agree exactly by construction.

Classes: 0 background, 1 track line (rail), 2 rail bed, 3 cable/occluder.
"""

from dataclasses import dataclass, field, asdict

import numpy as np

from ..errors import ConfigurationError
from ..seeding import derive_seed

CLASS_BACKGROUND = 0
CLASS_TRACK = 1
CLASS_BED = 2
CLASS_CABLE = 3
NUM_CLASSES = 4

# Base palette, jittered per scene. Rails stay bright (>0.5 luminance) and
# everything else stays dark even under the worst light gradient + noise,
# which is what makes thresholded generator outputs comparable to labels.
_PALETTE = {
    CLASS_BACKGROUND: (0.22, 0.20, 0.18),
    CLASS_TRACK: (0.92, 0.90, 0.86),
    CLASS_BED: (0.33, 0.31, 0.29),
    CLASS_CABLE: (0.08, 0.08, 0.10),
}

# A track needs this many columns to keep its rails and its neighbours'
# rails separated (distinct connected components).
_MIN_SLOT_WIDTH = 24
_MIN_HEIGHT = 24


@dataclass
class SceneSpec:
    """Ranges: num_tracks 1..4 (and <= width/24), occlusion 0..1,
    light_gradient 0..1, noise 0..0.05."""

    num_tracks: int = 2
    occlusion: float = 0.0
    light_gradient: float = 0.3
    noise: float = 0.02

    def validate(self, width: int, height: int) -> None:
        if height < _MIN_HEIGHT or width != 2 * height:
            raise ConfigurationError(
                f"scene size must be {2}*h x h with h >= {_MIN_HEIGHT}, got {width}x{height}"
            )
        if not 1 <= self.num_tracks <= 4:
            raise ConfigurationError(f"num_tracks must be in 1..4, got {self.num_tracks}")
        if self.num_tracks > width // _MIN_SLOT_WIDTH:
            raise ConfigurationError(
                f"{self.num_tracks} tracks need width >= {self.num_tracks * _MIN_SLOT_WIDTH}, got {width}"
            )
        if not 0.0 <= self.occlusion <= 1.0:
            raise ConfigurationError(f"occlusion must be in [0,1], got {self.occlusion}")
        if not 0.0 <= self.light_gradient <= 1.0:
            raise ConfigurationError(f"light_gradient must be in [0,1], got {self.light_gradient}")
        if not 0.0 <= self.noise <= 0.05:
            raise ConfigurationError(f"noise must be in [0,0.05], got {self.noise}")


@dataclass
class ScenePair:
    """Aligned label grid (H,W uint8) and RGB image (H,W,3 float32 in [0,1])."""

    label: np.ndarray
    image: np.ndarray
    meta: dict = field(default_factory=dict)

    def copy(self) -> "ScenePair":
        return ScenePair(self.label.copy(), self.image.copy(), dict(self.meta))


@dataclass
class _Rail:
    """Per-row integer column centers and thicknesses over [row_top, H)."""

    row_top: int
    cols: np.ndarray
    thickness: np.ndarray


def _plan_rails(seed: int, spec: SceneSpec, width: int, height: int) -> tuple[list[_Rail], list[tuple]]:
    """Lay out 2*num_tracks rail trajectories plus per-track bed extents.

    Deterministic in (seed, spec, size). Successive per-row column deltas are
    clamped to +-1 so every rail stays a single 8-connected component.
    """
    rng = np.random.default_rng(derive_seed(seed, "plan"))
    row_top = int(round(0.18 * height))
    rows = np.arange(row_top, height)
    u = (rows - row_top) / max(1, height - 1 - row_top)  # 0 at horizon, 1 at bottom

    slot = width / spec.num_tracks
    rails: list[_Rail] = []
    beds: list[tuple] = []
    for t in range(spec.num_tracks):
        center_bottom = (t + 0.5) * slot + rng.uniform(-0.05, 0.05) * slot
        center_top = center_bottom + rng.uniform(-0.04, 0.04) * slot
        curve_amp = rng.uniform(-0.05, 0.05) * slot
        gauge_bottom = 0.44 * slot
        gauge_top = max(4.0, 0.12 * slot)

        center = center_top + (center_bottom - center_top) * u + curve_amp * np.sin(np.pi * u)
        half_gauge = 0.5 * (gauge_top + (gauge_bottom - gauge_top) * u)
        thickness = np.clip(np.round(1.0 + 2.0 * u), 1, 3).astype(np.int64)

        track_rails = []
        for side in (-1.0, 1.0):
            target = np.round(center + side * half_gauge).astype(np.int64)
            cols = target.copy()
            for i in range(1, len(cols)):
                step = int(np.clip(target[i] - cols[i - 1], -1, 1))
                cols[i] = cols[i - 1] + step
            cols = np.clip(cols, 1, width - 2)
            rail = _Rail(row_top, cols, thickness)
            track_rails.append(rail)
            rails.append(rail)
        beds.append((row_top, track_rails[0].cols, track_rails[1].cols))
    return rails, beds


def _plan_cables(seed: int, spec: SceneSpec, width: int, height: int) -> list[np.ndarray]:
    """Shallow sinusoidal occluder curves; each entry is a per-column row index."""
    rng = np.random.default_rng(derive_seed(seed, "cables"))
    num = int(round(spec.occlusion * 3))
    cables = []
    xs = np.arange(width)
    for _ in range(num):
        base = rng.uniform(0.25, 0.8) * height
        amp = rng.uniform(0.02, 0.08) * height
        freq = rng.uniform(0.5, 2.0)
        phase = rng.uniform(0, 2 * np.pi)
        rows = base + amp * np.sin(2 * np.pi * freq * xs / width + phase)
        cables.append(np.clip(np.round(rows), 0, height - 1).astype(np.int64))
    return cables


def rasterize_rails(rails: list[_Rail], width: int, height: int) -> np.ndarray:
    """Boolean mask of all rail pixels (before occluders are painted on top)."""
    mask = np.zeros((height, width), dtype=bool)
    for rail in rails:
        for i, col in enumerate(rail.cols):
            r = rail.row_top + i
            t = int(rail.thickness[i])
            lo = max(0, col - t // 2)
            hi = min(width, col + (t + 1) // 2)
            mask[r, lo:hi] = True
    return mask


def _rasterize_label(rails, beds, cables, width: int, height: int) -> np.ndarray:
    label = np.zeros((height, width), dtype=np.uint8)
    bed_margin = 2
    for row_top, left_cols, right_cols in beds:
        for i in range(len(left_cols)):
            r = row_top + i
            lo = max(0, int(left_cols[i]) - bed_margin)
            hi = min(width, int(right_cols[i]) + bed_margin + 1)
            label[r, lo:hi] = CLASS_BED
    label[rasterize_rails(rails, width, height)] = CLASS_TRACK
    for cable in cables:
        for x in range(width):
            r = int(cable[x])
            label[r : min(height, r + 2), x] = CLASS_CABLE
    return label


def _render_image(label: np.ndarray, seed: int, spec: SceneSpec) -> np.ndarray:
    height, width = label.shape
    rng = np.random.default_rng(derive_seed(seed, "render"))
    image = np.zeros((height, width, 3), dtype=np.float64)
    for cls, color in _PALETTE.items():
        jitter = rng.uniform(-0.02, 0.02, size=3)
        image[label == cls] = np.clip(np.asarray(color) + jitter, 0.0, 1.0)

    # Vertical light falloff, bounded to +-25% so class brightness bands
    # never cross the 0.5 luminance threshold.
    rows = np.linspace(-0.5, 0.5, height)
    gradient = 1.0 + 0.5 * spec.light_gradient * rows
    image *= gradient[:, None, None]

    if spec.noise > 0:
        image += rng.normal(0.0, spec.noise, size=image.shape)
    return np.clip(image, 0.0, 1.0).astype(np.float32)


def synth_scene(seed: int, spec: SceneSpec | None = None, height: int = 64) -> ScenePair:
    """Render one deterministic scene pair at height x 2*height."""
    spec = spec or SceneSpec()
    width = 2 * height
    spec.validate(width, height)
    rails, beds = _plan_rails(seed, spec, width, height)
    cables = _plan_cables(seed, spec, width, height)
    label = _rasterize_label(rails, beds, cables, width, height)
    image = _render_image(label, seed, spec)
    meta = {"seed": int(seed), "spec": asdict(spec), "height": int(height), "augmentations": []}
    return ScenePair(label, image, meta)
