"""Track-line evaluation: point accuracy under a strict distance threshold,
lane-level FP/FN with greedy one-to-one matching, pixel accuracy and IoU.

Masks are class-id grids; track lines are class-1 connected components
reduced to one (row, column-centroid) point per sampled row.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, ShapeError

POINT_THRESHOLD = 3.0
MATCH_FRACTION = 0.75
TRACK_CLASS = 1

# Diagonal rails must stay one component.
_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass
class TrackPolyline:
    """One point per sampled row, rows strictly increasing."""

    rows: np.ndarray
    cols: np.ndarray
    lane_id: int = 0

    def __len__(self) -> int:
        return len(self.rows)


def extract_polylines(mask: np.ndarray, row_stride: int = 1, track_class: int = TRACK_CLASS):
    """Per-row column centroids of each class-`track_class` component.

    Components covering fewer than two sampled rows cannot form a line and
    are dropped.
    """
    if row_stride < 1:
        raise ConfigurationError(f"row_stride must be >= 1, got {row_stride}")
    binary = mask == track_class
    labeled, count = ndimage.label(binary, structure=_EIGHT_CONNECTED)
    polylines = []
    for lane in range(1, count + 1):
        rows, cols = np.nonzero(labeled == lane)
        out_rows, out_cols = [], []
        for r in np.unique(rows):
            if r % row_stride:
                continue
            out_rows.append(int(r))
            out_cols.append(float(np.mean(cols[rows == r])))
        if len(out_rows) >= 2:
            polylines.append(
                TrackPolyline(np.asarray(out_rows), np.asarray(out_cols), lane_id=len(polylines))
            )
    return polylines


def _pair_distances(pred: TrackPolyline, gt: TrackPolyline):
    """Distances between same-row points; rows equal so this is |col - col|."""
    shared, pi, gi = np.intersect1d(pred.rows, gt.rows, return_indices=True)
    if len(shared) == 0:
        return np.empty(0)
    return np.abs(pred.cols[pi] - gt.cols[gi])


def match_lanes(pred, gt, threshold: float = POINT_THRESHOLD, match_fraction: float | None = None):
    """Greedy one-to-one matching by descending matched-point count.

    With a match_fraction, a pair only qualifies when at least that fraction
    of the predicted lane's row-aligned points lies within the threshold.
    Returns a list of (pred_idx, gt_idx, matched_point_count).
    """
    candidates = []
    for i, p in enumerate(pred):
        for j, g in enumerate(gt):
            dist = _pair_distances(p, g)
            if len(dist) == 0:
                continue
            matched = int(np.sum(dist < threshold))
            frac = matched / len(dist)
            if match_fraction is not None and frac < match_fraction:
                continue
            if matched == 0:
                continue
            candidates.append((matched, frac, i, j))
    candidates.sort(key=lambda c: (-c[0], -c[1], c[2], c[3]))
    used_pred, used_gt, matches = set(), set(), []
    for matched, _frac, i, j in candidates:
        if i in used_pred or j in used_gt:
            continue
        used_pred.add(i)
        used_gt.add(j)
        matches.append((i, j, matched))
    return matches


def point_accuracy(pred, gt, threshold: float = POINT_THRESHOLD):
    """(correct points, ground-truth points) for one image.

    A predicted point counts iff its distance to the matched lane's same-row
    point is strictly below the threshold.
    """
    if threshold <= 0:
        raise ConfigurationError(f"threshold must be > 0, got {threshold}")
    total_gt = sum(len(g) for g in gt)
    correct = sum(m for _, _, m in match_lanes(pred, gt, threshold))
    return correct, total_gt


def lane_fp_fn(
    pred,
    gt,
    match_fraction: float = MATCH_FRACTION,
    threshold: float = POINT_THRESHOLD,
):
    """(FP, FN, flags): unmatched-lane fractions over one image set.

    FP = unmatched predicted lanes / predicted lanes; FN = unmatched
    ground-truth lanes / ground-truth lanes. An empty denominator yields
    0.0 with a flag, since the ratio is otherwise undefined.
    """
    matches = match_lanes(pred, gt, threshold, match_fraction)
    n_pred, n_gt = len(pred), len(gt)
    flags = []
    if n_pred == 0:
        fp = 0.0
        flags.append("no_predicted_lanes")
    else:
        fp = (n_pred - len(matches)) / n_pred
    if n_gt == 0:
        fn = 0.0
        flags.append("no_ground_truth_lanes")
    else:
        fn = (n_gt - len(matches)) / n_gt
    return fp, fn, flags


def pixel_accuracy(pred_mask: np.ndarray, gt_mask: np.ndarray) -> float:
    if pred_mask.shape != gt_mask.shape:
        raise ShapeError(f"mask shapes differ: {pred_mask.shape} vs {gt_mask.shape}")
    return float(np.mean(pred_mask == gt_mask))


def iou(pred_mask: np.ndarray, gt_mask: np.ndarray):
    """Per-class IoU plus the mean over classes present in either mask."""
    if pred_mask.shape != gt_mask.shape:
        raise ShapeError(f"mask shapes differ: {pred_mask.shape} vs {gt_mask.shape}")
    per_class = {}
    classes = np.union1d(np.unique(pred_mask), np.unique(gt_mask))
    for c in classes:
        inter = int(np.sum((pred_mask == c) & (gt_mask == c)))
        union = int(np.sum((pred_mask == c) | (gt_mask == c)))
        per_class[int(c)] = inter / union
    mean = float(np.mean(list(per_class.values()))) if per_class else 0.0
    return per_class, mean


@dataclass
class ImageRecord:
    name: str
    correct: int
    gt_points: int
    n_pred_lanes: int
    n_gt_lanes: int
    matched_lanes: int

    @property
    def ratio(self) -> float:
        return self.correct / self.gt_points if self.gt_points else 0.0


@dataclass
class MetricsReport:
    """Aggregate metrics; `acc` is the mean per-image point ratio and
    `acc_sum` the plain sum matching the per-image breakdown."""

    acc: float = 0.0
    acc_sum: float = 0.0
    num_images: int = 0
    fp: float = 0.0
    fn: float = 0.0
    pixel_accuracy: float = 0.0
    iou_per_class: dict = field(default_factory=dict)
    mean_iou: float = 0.0
    flags: list = field(default_factory=list)
    per_image: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "acc": self.acc,
            "acc_sum": self.acc_sum,
            "num_images": self.num_images,
            "fp": self.fp,
            "fn": self.fn,
            "pixel_accuracy": self.pixel_accuracy,
            "iou_per_class": {str(k): v for k, v in self.iou_per_class.items()},
            "mean_iou": self.mean_iou,
            "flags": list(self.flags),
            "per_image": [
                {
                    "name": r.name,
                    "correct": r.correct,
                    "gt_points": r.gt_points,
                    "n_pred_lanes": r.n_pred_lanes,
                    "n_gt_lanes": r.n_gt_lanes,
                    "matched_lanes": r.matched_lanes,
                }
                for r in self.per_image
            ],
        }


def evaluate_masks(
    mask_pairs,
    threshold: float = POINT_THRESHOLD,
    match_fraction: float = MATCH_FRACTION,
    row_stride: int = 1,
) -> MetricsReport:
    """Full metric suite over (name, pred_mask, gt_mask) triples."""
    report = MetricsReport()
    acc_terms = []
    total_pred_lanes = total_gt_lanes = total_matched = 0
    correct_pixels = total_pixels = 0
    inter = {}
    union = {}
    for name, pred_mask, gt_mask in mask_pairs:
        if pred_mask.shape != gt_mask.shape:
            raise ShapeError(f"{name}: mask shapes differ")
        pred = extract_polylines(pred_mask, row_stride)
        gt = extract_polylines(gt_mask, row_stride)
        matches = match_lanes(pred, gt, threshold, match_fraction)
        point_matches = match_lanes(pred, gt, threshold)
        correct = sum(m for _, _, m in point_matches)
        gt_points = sum(len(g) for g in gt)
        record = ImageRecord(name, correct, gt_points, len(pred), len(gt), len(matches))
        report.per_image.append(record)
        if gt_points:
            acc_terms.append(record.ratio)
        else:
            report.flags.append(f"{name}: no ground-truth points")
        total_pred_lanes += len(pred)
        total_gt_lanes += len(gt)
        total_matched += len(matches)
        correct_pixels += int(np.sum(pred_mask == gt_mask))
        total_pixels += pred_mask.size
        classes = np.union1d(np.unique(pred_mask), np.unique(gt_mask))
        for c in classes:
            c = int(c)
            inter[c] = inter.get(c, 0) + int(np.sum((pred_mask == c) & (gt_mask == c)))
            union[c] = union.get(c, 0) + int(np.sum((pred_mask == c) | (gt_mask == c)))

    report.num_images = len(report.per_image)
    report.acc_sum = float(sum(acc_terms))
    report.acc = report.acc_sum / len(acc_terms) if acc_terms else 0.0
    if total_pred_lanes == 0:
        report.fp = 0.0
        report.flags.append("no_predicted_lanes")
    else:
        report.fp = (total_pred_lanes - total_matched) / total_pred_lanes
    if total_gt_lanes == 0:
        report.fn = 0.0
        report.flags.append("no_ground_truth_lanes")
    else:
        report.fn = (total_gt_lanes - total_matched) / total_gt_lanes
    report.pixel_accuracy = correct_pixels / total_pixels if total_pixels else 0.0
    report.iou_per_class = {c: inter[c] / union[c] for c in sorted(union)}
    report.mean_iou = (
        float(np.mean(list(report.iou_per_class.values()))) if report.iou_per_class else 0.0
    )
    return report
