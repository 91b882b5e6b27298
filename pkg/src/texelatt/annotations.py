"""Texel ground-truth annotations and their JSON/RLE serialization.

One annotation records a single texel: shape label, centroid, bounding
box, and a binary mask stored run-length encoded over the box.  The
JSON schema is shared with detector output (which adds a confidence).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SHAPE_LABELS = ("circle", "line", "polygon")


def rle_encode(mask: np.ndarray) -> list[int]:
    """Run lengths of a boolean mask, row-major, starting with a zero run."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return []
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return runs


def rle_decode(runs: list[int], shape: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`rle_encode`."""
    h, w = shape
    total = int(np.sum(runs)) if runs else 0
    if total != h * w:
        raise ValueError(f"RLE length {total} does not match shape {shape}")
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for run in runs:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape(h, w)


@dataclass
class TexelAnnotation:
    """One texel: label, centroid (x, y), bbox (x, y, w, h), in-box mask."""

    id: str
    shape: str
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]
    mask: np.ndarray

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
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TexelAnnotation":
        x, y, w, h = d["bbox"]
        return cls(
            id=d["id"],
            shape=d["shape"],
            centroid=(float(d["centroid"][0]), float(d["centroid"][1])),
            bbox=(int(x), int(y), int(w), int(h)),
            mask=rle_decode(d["mask_rle"], (int(h), int(w))),
        )


@dataclass
class GroundTruth:
    """All texel annotations of one image plus the generating layouts."""

    canvas_px: int
    texels: list[TexelAnnotation]
    per_class_layout: list[dict] = field(default_factory=list)

    def validate(self) -> None:
        for t in self.texels:
            x, y, w, h = t.bbox
            cx, cy = t.centroid
            if not (x <= cx <= x + w and y <= cy <= y + h):
                raise ValueError(f"texel {t.id}: centroid outside bbox")
            if x < 0 or y < 0 or x + w > self.canvas_px or y + h > self.canvas_px:
                raise ValueError(f"texel {t.id}: bbox outside canvas")
            if t.mask.shape != (h, w):
                raise ValueError(f"texel {t.id}: mask shape does not match bbox")

    def to_dict(self) -> dict:
        return {
            "canvas_px": int(self.canvas_px),
            "annotations": [t.to_dict() for t in self.texels],
            "per_class_layout": self.per_class_layout,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(
            canvas_px=int(d["canvas_px"]),
            texels=[TexelAnnotation.from_dict(a) for a in d["annotations"]],
            per_class_layout=list(d.get("per_class_layout", [])),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path) -> "GroundTruth":
        return cls.from_dict(json.loads(Path(path).read_text()))
