"""Color naming against the 11 basic color terms.

Pixels are assigned to the nearest of 11 fixed prototypes in CIELAB.
The prototype table ships as module data and can be overridden with a
user-supplied JSON lookup file (``{"red": [255, 0, 0], ...}``).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from skimage.color import rgb2lab

COLOR_NAMES = (
    "black",
    "blue",
    "brown",
    "grey",
    "green",
    "orange",
    "pink",
    "purple",
    "red",
    "white",
    "yellow",
)

# Prototypical RGB for each basic color term, aligned with COLOR_NAMES.
DEFAULT_PROTOTYPES = np.array(
    [
        (0, 0, 0),        # black
        (0, 0, 255),      # blue
        (150, 75, 0),     # brown
        (128, 128, 128),  # grey
        (0, 128, 0),      # green
        (255, 165, 0),    # orange
        (255, 192, 203),  # pink
        (128, 0, 128),    # purple
        (255, 0, 0),      # red
        (255, 255, 255),  # white
        (255, 255, 0),    # yellow
    ],
    dtype=np.uint8,
)


def rgb_to_lab(rgb) -> np.ndarray:
    """sRGB (uint8 or 0..255 float) to CIELAB, D65."""
    arr = np.asarray(rgb, dtype=np.float64) / 255.0
    return rgb2lab(arr)


class ColorNamer:
    """Nearest-prototype color naming in CIELAB.

    Bulk image naming goes through a 32x32x32 lookup table (5 bits per
    channel, worst-case quantization of 4/255 per channel), which is far
    below the CIELAB separation of the 11 prototypes.  Scalar and
    small-array naming is exact.
    """

    def __init__(self, prototypes: np.ndarray | None = None):
        protos = DEFAULT_PROTOTYPES if prototypes is None else np.asarray(prototypes, dtype=np.uint8)
        if protos.shape != (11, 3):
            raise ValueError(f"prototype table must have shape (11, 3), got {protos.shape}")
        self.prototypes = protos
        self._proto_lab = rgb_to_lab(protos)
        self._lut: np.ndarray | None = None

    @classmethod
    def from_json(cls, path) -> "ColorNamer":
        """Load a prototype override table; all 11 names must be present."""
        table = json.loads(Path(path).read_text())
        missing = set(COLOR_NAMES) - set(table)
        if missing:
            raise ValueError(f"prototype table missing names: {sorted(missing)}")
        protos = np.array([table[name] for name in COLOR_NAMES], dtype=np.uint8)
        return cls(protos)

    def name_colors(self, rgb) -> np.ndarray:
        """Exact nearest-prototype indices for an (n, 3) uint8 array."""
        rgb = np.atleast_2d(np.asarray(rgb, dtype=np.uint8))
        lab = rgb_to_lab(rgb)
        d = ((lab[:, None, :] - self._proto_lab[None, :, :]) ** 2).sum(-1)
        return d.argmin(1)  # argmin takes the lowest index on ties

    def name_color(self, rgb) -> int:
        """Index in 0..10 of the color name nearest to one RGB triple."""
        return int(self.name_colors(np.asarray(rgb, dtype=np.uint8).reshape(1, 3))[0])

    def _lookup_table(self) -> np.ndarray:
        if self._lut is None:
            levels = np.minimum(np.arange(32) * 8 + 4, 255).astype(np.uint8)
            r, g, b = np.meshgrid(levels, levels, levels, indexing="ij")
            bins = np.stack([r.ravel(), g.ravel(), b.ravel()], axis=1)
            self._lut = self.name_colors(bins).astype(np.uint8).reshape(32, 32, 32)
        return self._lut

    def name_image(self, image: np.ndarray) -> np.ndarray:
        """Per-pixel name indices for an (h, w, 3) uint8 image (LUT path)."""
        image = np.asarray(image)
        if image.ndim != 3 or image.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) image, got shape {image.shape}")
        lut = self._lookup_table()
        q = image >> 3
        return lut[q[..., 0], q[..., 1], q[..., 2]]

    def name_histogram(self, image: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
        """Normalized 11-bin color-name histogram over `mask` (all pixels if None).

        Returns the zero vector when the mask selects no pixels.
        """
        names = self.name_image(image)
        if mask is not None:
            names = names[mask]
        counts = np.bincount(names.ravel(), minlength=11).astype(float)
        total = counts.sum()
        return counts / total if total > 0 else counts


_DEFAULT_NAMER = ColorNamer()


def name_color(rgb) -> int:
    return _DEFAULT_NAMER.name_color(rgb)


def name_colors(rgb) -> np.ndarray:
    return _DEFAULT_NAMER.name_colors(rgb)


def name_image(image) -> np.ndarray:
    return _DEFAULT_NAMER.name_image(image)


def name_histogram(image, mask=None) -> np.ndarray:
    return _DEFAULT_NAMER.name_histogram(image, mask)


def names_are_distinct(colors, namer: ColorNamer | None = None) -> bool:
    """True when every color in the list maps to a different name."""
    namer = namer or _DEFAULT_NAMER
    idx = namer.name_colors(np.asarray(list(colors), dtype=np.uint8))
    return len(set(idx.tolist())) == len(idx)


# Palette used by the spec sampler: one entry per distinct color name.
DEFAULT_PALETTE = (
    (25, 25, 25),     # black
    (20, 60, 230),    # blue
    (145, 90, 40),    # brown
    (135, 135, 135),  # grey
    (40, 150, 60),    # green
    (245, 150, 30),   # orange
    (250, 175, 195),  # pink
    (140, 55, 190),   # purple
    (225, 45, 45),    # red
    (245, 245, 245),  # white
    (245, 220, 50),   # yellow
)
