"""Texel detection and detection evaluation.

The classical detector segments the image by color name (background =
most frequent name), labels connected components per name, and
classifies each component geometrically: strongly elongated or
border-to-border components are lines, near-circular ones are circles,
the rest polygons.  It fills the same interface a learned detector
would, and `detect_oracle` converts ground truth into detections so
descriptor quality can be measured independently of detector quality.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from skimage.measure import perimeter as _mask_perimeter

from .annotations import GroundTruth, TexelAnnotation, rle_encode, rle_decode
from .colors import ColorNamer, name_image


@dataclass
class DetectedTexel:
    """One detected texel; mean_color is None until sampled from an image."""

    id: str
    shape: str
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]
    mask: np.ndarray
    mean_color: tuple[float, float, float] | None = None
    confidence: float = 1.0

    def area(self) -> int:
        return int(self.mask.sum())

    def to_dict(self) -> dict:
        x, y, w, h = self.bbox
        return {
            "id": self.id,
            "shape": self.shape,
            "centroid": [float(self.centroid[0]), float(self.centroid[1])],
            "bbox": [int(x), int(y), int(w), int(h)],
            "mask_rle": rle_encode(self.mask),
            "confidence": float(self.confidence),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DetectedTexel":
        x, y, w, h = d["bbox"]
        return cls(
            id=d["id"],
            shape=d["shape"],
            centroid=(float(d["centroid"][0]), float(d["centroid"][1])),
            bbox=(int(x), int(y), int(w), int(h)),
            mask=rle_decode(d["mask_rle"], (int(h), int(w))),
            confidence=float(d.get("confidence", 1.0)),
        )


@dataclass(frozen=True)
class DetectorConfig:
    circularity_threshold: float = 0.85
    elongation_threshold: float = 8.0
    min_area: int = 9


DEFAULT_DETECTOR_CONFIG = DetectorConfig()

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


def mask_elongation(mask: np.ndarray) -> float:
    """Major/minor principal-axis ratio of a mask's second central moments."""
    ys, xs = np.nonzero(mask)
    x = xs - xs.mean()
    y = ys - ys.mean()
    # 1/12 is the variance of a unit pixel; keeps single-row masks finite.
    mu20 = (x * x).mean() + 1.0 / 12.0
    mu02 = (y * y).mean() + 1.0 / 12.0
    mu11 = (x * y).mean()
    tr = mu20 + mu02
    disc = np.sqrt(max(tr * tr / 4.0 - (mu20 * mu02 - mu11 * mu11), 0.0))
    l1 = tr / 2.0 + disc
    l2 = tr / 2.0 - disc
    return float(np.sqrt(l1 / max(l2, 1e-12)))


def mask_circularity(mask: np.ndarray) -> float:
    """4*pi*A/P^2 with a contour-length perimeter estimate."""
    area = float(mask.sum())
    p = float(_mask_perimeter(mask, neighborhood=4))
    if p <= 0:
        return 1.0
    return 4.0 * np.pi * area / (p * p)


def classify_component(mask: np.ndarray, touches_opposite_borders: bool, config: DetectorConfig) -> str:
    if touches_opposite_borders:
        return "line"
    if mask_elongation(mask) > config.elongation_threshold:
        return "line"
    if mask_circularity(mask) >= config.circularity_threshold:
        return "circle"
    return "polygon"


def detect(
    image: np.ndarray,
    config: DetectorConfig = DEFAULT_DETECTOR_CONFIG,
    namer: ColorNamer | None = None,
) -> list[DetectedTexel]:
    """Detect texels in an RGB image; returns [] when nothing stands out."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB image, got shape {image.shape}")
    h, w = image.shape[:2]
    if min(h, w) < 64:
        raise ValueError(f"image min side must be >= 64 px, got {min(h, w)}")

    names = namer.name_image(image) if namer is not None else name_image(image)
    background = int(np.bincount(names.ravel(), minlength=11).argmax())

    detections: list[DetectedTexel] = []
    for name_idx in np.unique(names):
        if name_idx == background:
            continue
        labels, n_comp = ndimage.label(names == name_idx, structure=_EIGHT_CONNECTED)
        if n_comp == 0:
            continue
        group: list[tuple[DetectedTexel, bool]] = []
        for comp_idx, window in enumerate(ndimage.find_objects(labels), start=1):
            mask = labels[window] == comp_idx
            area = int(mask.sum())
            if area < config.min_area:
                continue
            y0, x0 = window[0].start, window[1].start
            y1, x1 = window[0].stop, window[1].stop
            spans_x = x0 == 0 and x1 == w
            spans_y = y0 == 0 and y1 == h
            touches_border = x0 == 0 or y0 == 0 or x1 == w or y1 == h
            label = classify_component(mask, spans_x or spans_y, config)
            rows, cols = np.nonzero(mask)
            group.append(
                (
                    DetectedTexel(
                        id="",
                        shape=label,
                        centroid=(float(cols.mean()) + x0 + 0.5, float(rows.mean()) + y0 + 0.5),
                        bbox=(x0, y0, x1 - x0, y1 - y0),
                        mask=mask,
                        mean_color=tuple(image[window][mask].mean(axis=0).tolist()),
                        confidence=1.0,
                    ),
                    touches_border and label != "line",
                )
            )
        # Clipped texels at the canvas border show up as fragments whose
        # geometry no longer matches their shape class (a disk keeps
        # circularity >= 0.85 only down to ~70% visibility), so border
        # components well under the typical area of their color group are
        # dropped.  Stripes legitimately touch borders and are kept.
        if group:
            typical = float(np.median([det.area() for det, _ in group]))
            detections.extend(
                det for det, clipped in group if not (clipped and det.area() < 0.7 * typical)
            )

    detections.sort(key=lambda d: (d.centroid[1], d.centroid[0]))
    for i, det in enumerate(detections):
        det.id = f"d{i:05d}"
    return detections


def detect_oracle(ground_truth: GroundTruth, image: np.ndarray | None = None) -> list[DetectedTexel]:
    """Ground-truth annotations as perfect detections (confidence 1.0).

    When the image is given, mean colors are sampled from it; otherwise
    they are left unset and filled lazily by the descriptor stage.
    """
    detections = []
    for ann in ground_truth.texels:
        x, y, w, h = ann.bbox
        mean_color = None
        if image is not None:
            mean_color = tuple(image[y : y + h, x : x + w][ann.mask].mean(axis=0).tolist())
        detections.append(
            DetectedTexel(
                id=ann.id,
                shape=ann.shape,
                centroid=ann.centroid,
                bbox=ann.bbox,
                mask=ann.mask,
                mean_color=mean_color,
                confidence=1.0,
            )
        )
    return detections


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@dataclass
class DetectionReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float
    matches: list[tuple[str, str, float]] = field(default_factory=list)


def _bbox_iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def evaluate_detection(
    detections: list[DetectedTexel],
    ground_truth: GroundTruth,
    iou_threshold: float = 0.5,
) -> DetectionReport:
    """Greedy IoU matching (descending); labels must agree for a match."""
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")

    pairs = []
    for di, det in enumerate(detections):
        for gi, ann in enumerate(ground_truth.texels):
            if det.shape != ann.shape:
                continue
            iou = _bbox_iou(det.bbox, ann.bbox)
            if iou >= iou_threshold:
                pairs.append((iou, di, gi))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))

    matched_det: set[int] = set()
    matched_gt: set[int] = set()
    matches = []
    for iou, di, gi in pairs:
        if di in matched_det or gi in matched_gt:
            continue
        matched_det.add(di)
        matched_gt.add(gi)
        matches.append((detections[di].id, ground_truth.texels[gi].id, float(iou)))

    tp = len(matches)
    fp = len(detections) - tp
    fn = len(ground_truth.texels) - tp
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return DetectionReport(tp, fp, fn, precision, recall, f1, matches)


def save_detections(path, detections: list[DetectedTexel]) -> None:
    Path(path).write_text(json.dumps({"detections": [d.to_dict() for d in detections]}, sort_keys=True))


def load_detections(path) -> list[DetectedTexel]:
    data = json.loads(Path(path).read_text())
    return [DetectedTexel.from_dict(d) for d in data["detections"]]
