"""The 36-dimensional texture descriptor: individual + layout attributes.

Individual attributes (18 dims) summarize detected texels: shape-label
histogram (3), color-name histogram (11), orientation histogram (3) and
mean normalized size (1).  Layout attributes (18 dims) summarize the
spatial arrangement of texel centroids per shape group, aggregated by
member-count-weighted averaging: density (1), quadrat homogeneity (1),
pair-vector orientation histogram (3), local reflective symmetry (1),
translational symmetry (1) and the background color histogram (11).

The vector layout below is the file format; see FEATURE_NAMES.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import pointstats
from .colors import COLOR_NAMES, ColorNamer, name_colors, name_histogram
from .detection import DetectedTexel

SHAPE_ORDER = ("circle", "line", "polygon")
ORIENTATION_BINS = ("0_60", "60_120", "120_180")
MIN_GROUP_SIZE = 10
DESCRIPTOR_DIM = 36

FEATURE_NAMES = (
    [f"label_{s}" for s in SHAPE_ORDER]
    + [f"color_{c}" for c in COLOR_NAMES]
    + [f"orient_{b}" for b in ORIENTATION_BINS]
    + ["mean_size"]
    + ["density", "homogeneity"]
    + [f"pair_orient_{b}" for b in ORIENTATION_BINS]
    + ["local_symmetry", "translational_symmetry"]
    + [f"bg_{c}" for c in COLOR_NAMES]
)
assert len(FEATURE_NAMES) == DESCRIPTOR_DIM


class InsufficientDataError(ValueError):
    """Normalization requires at least two descriptors."""


# ---------------------------------------------------------------------------
# Individual attributes
# ---------------------------------------------------------------------------

def texel_orientation(texel: DetectedTexel) -> float:
    """Principal-axis angle of the texel mask in degrees, folded to [0, 180).

    Nearly isotropic masks (principal eigenvalue ratio < 1.05) report 0.
    """
    ys, xs = np.nonzero(texel.mask)
    if len(xs) < 2:
        return 0.0
    x = xs - xs.mean()
    y = ys - ys.mean()
    mu20 = (x * x).mean() + 1.0 / 12.0
    mu02 = (y * y).mean() + 1.0 / 12.0
    mu11 = (x * y).mean()
    tr = mu20 + mu02
    disc = np.sqrt(max(tr * tr / 4.0 - (mu20 * mu02 - mu11 * mu11), 0.0))
    l1, l2 = tr / 2.0 + disc, tr / 2.0 - disc
    if l1 / max(l2, 1e-12) < 1.05:
        return 0.0
    theta = 0.5 * np.degrees(np.arctan2(2.0 * mu11, mu20 - mu02))
    return float(theta % 180.0)


def orientation_histogram(angles_deg) -> np.ndarray:
    hist, _ = np.histogram(np.asarray(angles_deg, dtype=float) % 180.0, bins=pointstats.ORIENTATION_BIN_EDGES)
    hist = hist.astype(float)
    total = hist.sum()
    return hist / total if total > 0 else hist


@dataclass
class IndividualAttributes:
    label_hist: np.ndarray        # (3,) over SHAPE_ORDER
    color_hist: np.ndarray        # (11,) over COLOR_NAMES
    orientation_hist: np.ndarray  # (3,)
    mean_size: float              # mean mask area / canvas area

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.label_hist, self.color_hist, self.orientation_hist, [self.mean_size]])


def fill_mean_colors(image: np.ndarray, texels: list[DetectedTexel]) -> None:
    """Sample mean colors from the image for texels that lack one."""
    for t in texels:
        if t.mean_color is None:
            x, y, w, h = t.bbox
            t.mean_color = tuple(image[y : y + h, x : x + w][t.mask].mean(axis=0).tolist())


def individual_attributes(
    texels: list[DetectedTexel],
    canvas_area: float,
    namer: ColorNamer | None = None,
) -> IndividualAttributes:
    """Aggregate per-texel attributes; all-zero for an empty texel list."""
    if not texels:
        return IndividualAttributes(np.zeros(3), np.zeros(11), np.zeros(3), 0.0)
    labels = np.array([SHAPE_ORDER.index(t.shape) for t in texels])
    label_hist = np.bincount(labels, minlength=3).astype(float) / len(texels)

    missing = [t.id for t in texels if t.mean_color is None]
    if missing:
        raise ValueError(f"texels missing mean_color (run fill_mean_colors): {missing[:3]}")
    mean_rgb = np.clip(np.rint([t.mean_color for t in texels]), 0, 255).astype(np.uint8)
    names = namer.name_colors(mean_rgb) if namer is not None else name_colors(mean_rgb)
    color_hist = np.bincount(names, minlength=11).astype(float) / len(texels)

    orient_hist = orientation_histogram([texel_orientation(t) for t in texels])
    mean_size = float(np.mean([t.area() for t in texels]) / canvas_area)
    return IndividualAttributes(label_hist, color_hist, orient_hist, mean_size)


# ---------------------------------------------------------------------------
# Texel groups and layout attributes
# ---------------------------------------------------------------------------

@dataclass
class TexelGroup:
    shape: str
    members: list[DetectedTexel]
    centroids: np.ndarray               # (n, 2)
    principal_orientation: float | None  # stripe direction, line groups only

    def __len__(self) -> int:
        return len(self.members)

    def projected(self) -> np.ndarray:
        """1D coordinates of line-group centroids along the stripe normal."""
        theta = np.radians((self.principal_orientation or 0.0) + 90.0)
        normal = np.array([np.cos(theta), np.sin(theta)])
        return self.centroids @ normal


def group_texels(texels: list[DetectedTexel], min_group_size: int = MIN_GROUP_SIZE) -> list[TexelGroup]:
    """One group per shape label with at least `min_group_size` members."""
    groups = []
    for shape in SHAPE_ORDER:
        members = [t for t in texels if t.shape == shape]
        if len(members) < min_group_size:
            continue
        centroids = np.array([t.centroid for t in members], dtype=float)
        principal = None
        if shape == "line":
            angles = np.radians([texel_orientation(t) for t in members]) * 2.0
            principal = float(np.degrees(0.5 * np.arctan2(np.mean(np.sin(angles)), np.mean(np.cos(angles)))) % 180.0)
        groups.append(TexelGroup(shape, members, centroids, principal))
    return groups


def density(group: TexelGroup, canvas_px: int) -> float:
    """Texels per canvas for grids; per projected canvas extent for stripes.

    Both variants are expressed relative to the image's own canvas so the
    value is stable when the same texture is rendered at another
    resolution.
    """
    if group.shape == "line":
        proj = group.projected()
        extent = float(proj.max() - proj.min())
        if extent < 1e-9:
            raise pointstats.DegenerateGeometryError("line group has zero projected extent")
        return (len(group) - 1) / extent * canvas_px
    return float(len(group))


def homogeneity_chi2(
    group: TexelGroup,
    canvas_px: int,
    grid: tuple[int, int] = (4, 4),
    bins_1d: int = 8,
) -> float:
    """Normalized quadrat chi-square statistic (1D bins for line groups)."""
    if group.shape == "line":
        return pointstats.quadrat_statistic_1d(group.projected(), bins=bins_1d)
    return pointstats.quadrat_statistic(group.centroids, float(canvas_px), grid)


def pair_orientation_hist(group: TexelGroup, k: int = 8) -> np.ndarray:
    return pointstats.pair_orientation_histogram(group.centroids, k=k)


def local_reflective_symmetry(group: TexelGroup) -> float:
    if group.shape == "line":
        return pointstats.reflective_symmetry(group.projected()[:, None], k=2)
    return pointstats.reflective_symmetry(group.centroids, k=4)


def translational_symmetry(group: TexelGroup) -> float:
    if group.shape == "line":
        return pointstats.translational_symmetry(group.projected()[:, None], k=2)
    return pointstats.translational_symmetry(group.centroids, k=4)


@dataclass
class LayoutAttributes:
    density: float
    homogeneity: float
    pair_orientation_hist: np.ndarray  # (3,)
    local_symmetry: float
    translational_symmetry: float
    background_color_hist: np.ndarray  # (11,)

    def as_vector(self) -> np.ndarray:
        return np.concatenate(
            [
                [self.density, self.homogeneity],
                self.pair_orientation_hist,
                [self.local_symmetry, self.translational_symmetry],
                self.background_color_hist,
            ]
        )


def _weighted_mean(values, weights) -> float:
    """NaN-aware weighted mean; NaN when no finite value remains."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    ok = np.isfinite(values)
    if not ok.any():
        return float("nan")
    return float(np.average(values[ok], weights=weights[ok]))


def aggregate_layout(
    groups: list[TexelGroup],
    canvas_px: int,
    image: np.ndarray,
    texels: list[DetectedTexel] | None = None,
    namer: ColorNamer | None = None,
) -> LayoutAttributes:
    """Member-count-weighted aggregation of per-group layout statistics.

    The background histogram covers pixels outside every texel mask (the
    full `texels` list when given, group members otherwise) and is
    computed even when no group survives the size filter.
    """
    mask_sources = texels if texels is not None else [t for g in groups for t in g.members]
    covered = np.zeros(image.shape[:2], dtype=bool)
    for t in mask_sources:
        x, y, w, h = t.bbox
        covered[y : y + h, x : x + w] |= t.mask
    bg_hist = (
        namer.name_histogram(image, ~covered) if namer is not None else name_histogram(image, ~covered)
    )

    if not groups:
        return LayoutAttributes(0.0, 0.0, np.zeros(3), 0.0, 0.0, bg_hist)

    weights = [len(g) for g in groups]
    dens = _weighted_mean([density(g, canvas_px) for g in groups], weights)
    homog = _weighted_mean([homogeneity_chi2(g, canvas_px) for g in groups], weights)
    local = _weighted_mean([local_reflective_symmetry(g) for g in groups], weights)
    trans = _weighted_mean([translational_symmetry(g) for g in groups], weights)
    pair = np.average([pair_orientation_hist(g) for g in groups], axis=0, weights=weights)
    total = pair.sum()
    if total > 0:
        pair = pair / total
    return LayoutAttributes(dens, homog, pair, local, trans, bg_hist)


# ---------------------------------------------------------------------------
# The composite descriptor
# ---------------------------------------------------------------------------

@dataclass
class TextureDescriptor:
    raw: np.ndarray  # (36,) in FEATURE_NAMES order

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=float)
        if self.raw.shape != (DESCRIPTOR_DIM,):
            raise ValueError(f"descriptor must have dimension {DESCRIPTOR_DIM}, got {self.raw.shape}")


def describe(image: np.ndarray, texels: list[DetectedTexel], namer: ColorNamer | None = None) -> TextureDescriptor:
    """Individual (18) ++ layout (18) attributes of one image, fixed order."""
    h, w = image.shape[:2]
    fill_mean_colors(image, texels)
    ind = individual_attributes(texels, float(h) * float(w), namer)
    groups = group_texels(texels)
    layout = aggregate_layout(groups, canvas_px=w, image=image, texels=texels, namer=namer)
    return TextureDescriptor(np.concatenate([ind.as_vector(), layout.as_vector()]))


# ---------------------------------------------------------------------------
# Z-normalization over a descriptor database
# ---------------------------------------------------------------------------

@dataclass
class NormalizationStats:
    mean: np.ndarray
    stddev: np.ndarray

    @property
    def constant_dims(self) -> np.ndarray:
        return self.stddev <= 1e-12

    def to_dict(self):
        return {"mean": self.mean.tolist(), "stddev": self.stddev.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["stddev"], dtype=float))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def znormalize_fit(descriptors) -> NormalizationStats:
    """Per-dimension mean/stddev over a database (NaN entries ignored)."""
    x = np.asarray([d.raw if isinstance(d, TextureDescriptor) else d for d in descriptors], dtype=float)
    if x.ndim != 2 or len(x) < 2:
        raise InsufficientDataError(f"need at least 2 descriptors to fit, got {0 if x.ndim != 2 else len(x)}")
    with np.errstate(invalid="ignore"):
        mean = np.nanmean(x, axis=0)
        std = np.nanstd(x, axis=0)
    mean = np.where(np.isfinite(mean), mean, 0.0)
    std = np.where(np.isfinite(std), std, 0.0)
    return NormalizationStats(mean, std)


def znormalize_apply(descriptor, stats: NormalizationStats) -> np.ndarray:
    """(d - mean) / stddev; constant dimensions and NaN entries map to 0."""
    x = np.asarray(descriptor.raw if isinstance(descriptor, TextureDescriptor) else descriptor, dtype=float)
    if x.shape != stats.mean.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {stats.mean.shape}")
    safe = np.where(stats.constant_dims, 1.0, stats.stddev)
    z = (x - stats.mean) / safe
    z = np.where(stats.constant_dims, 0.0, z)
    return np.where(np.isfinite(z), z, 0.0)


# ---------------------------------------------------------------------------
# Descriptor tables (CSV, headered)
# ---------------------------------------------------------------------------

def write_descriptor_table(path, ids, vectors, feature_names=FEATURE_NAMES) -> None:
    vectors = np.asarray(vectors, dtype=float)
    if len(ids) != len(vectors):
        raise ValueError("ids and vectors length mismatch")
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", *feature_names])
        for i, vec in zip(ids, vectors):
            writer.writerow([i, *(f"{v:.12g}" for v in vec)])


def read_descriptor_table(path) -> tuple[list[str], np.ndarray, list[str]]:
    """Returns (ids, (n, d) array, feature names)."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        ids, rows = [], []
        for row in reader:
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    return ids, np.asarray(rows, dtype=float), header[1:]
