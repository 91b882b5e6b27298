"""Procedural element-based texture synthesis with exact texel ground truth.

A texture is one or two element classes (circles, polygons or line
stripes), each repeated on its own lattice: grid layouts use two
independent basis vectors, linear stripe layouts use one.  Per-texel
size, orientation and jitter are drawn from per-class seeded streams,
so a spec (including its seed) maps to exactly one image and one set of
annotations.

Texels are annotated when at least half of their nominal area is
visible (inside the canvas and not occluded by a later-drawn class).
Stripes count as one texel each.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotations import GroundTruth, TexelAnnotation
from .colors import DEFAULT_PALETTE, ColorNamer, names_are_distinct
from .imgio import save_image

SHAPE_KINDS = ("circle", "polygon", "line")
POLYGON_SUBKINDS = ("square", "triangle", "rectangle")
SHADING_MODES = ("flat", "perturbed")

VISIBILITY_FRACTION = 0.5     # min visible/nominal area for an annotation
COLLISION_FRACTION = 0.2      # max fraction of texels occluded before the spec is infeasible
_OCCLUSION_TOLERANCE = 0.95   # a texel "collides" when visible < 95% of its drawn pixels


class InvalidPaletteError(ValueError):
    """Palette too small or not distinct under color naming."""


class InfeasibleSpecError(RuntimeError):
    """Too many texels of overlapping classes collide; resample the spec."""


@dataclass(frozen=True)
class ShapeClass:
    kind: str
    polygon_subkind: str | None = None

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.kind == "polygon":
            if self.polygon_subkind not in POLYGON_SUBKINDS:
                raise ValueError(f"polygon requires a subkind, got {self.polygon_subkind!r}")
        elif self.polygon_subkind is not None:
            raise ValueError("polygon_subkind only valid for polygon shapes")

    def to_dict(self):
        d = {"kind": self.kind}
        if self.polygon_subkind:
            d["polygon_subkind"] = self.polygon_subkind
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d["kind"], polygon_subkind=d.get("polygon_subkind"))


@dataclass(frozen=True)
class LayoutSpec:
    """Lattice placement: one basis vector for stripes, two for grids."""

    basis_u: tuple[float, float]
    basis_v: tuple[float, float] | None = None
    jitter: float = 0.0
    phase: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        u = np.asarray(self.basis_u, dtype=float)
        if np.linalg.norm(u) < 1e-9:
            raise ValueError("basis_u must be nonzero")
        if self.basis_v is not None:
            v = np.asarray(self.basis_v, dtype=float)
            if abs(u[0] * v[1] - u[1] * v[0]) < 1e-9:
                raise ValueError("basis_u and basis_v must be linearly independent")
        if not 0.0 <= self.jitter <= 0.5:
            raise ValueError(f"jitter must be in [0, 0.5], got {self.jitter}")

    def min_basis_length(self) -> float:
        lu = float(np.hypot(*self.basis_u))
        if self.basis_v is None:
            return lu
        return min(lu, float(np.hypot(*self.basis_v)))

    def to_dict(self):
        return {
            "basis_u": list(self.basis_u),
            "basis_v": list(self.basis_v) if self.basis_v is not None else None,
            "jitter": self.jitter,
            "phase": list(self.phase),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            basis_u=tuple(d["basis_u"]),
            basis_v=tuple(d["basis_v"]) if d.get("basis_v") is not None else None,
            jitter=float(d["jitter"]),
            phase=tuple(d["phase"]),
        )


@dataclass(frozen=True)
class ElementClassSpec:
    shape: ShapeClass
    size_px: tuple[float, float]          # stroke thickness for lines
    orientation_deg: tuple[float, float]  # per-texel range within [0, 180)
    color: tuple[int, int, int]
    layout: LayoutSpec

    def __post_init__(self):
        lo, hi = self.size_px
        if not (0 < lo <= hi):
            raise ValueError(f"size range must be positive with min <= max, got {self.size_px}")

    def to_dict(self):
        return {
            "shape": self.shape.to_dict(),
            "size_px": list(self.size_px),
            "orientation_deg": list(self.orientation_deg),
            "color": list(self.color),
            "layout": self.layout.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            shape=ShapeClass.from_dict(d["shape"]),
            size_px=tuple(d["size_px"]),
            orientation_deg=tuple(d["orientation_deg"]),
            color=tuple(int(c) for c in d["color"]),
            layout=LayoutSpec.from_dict(d["layout"]),
        )


@dataclass(frozen=True)
class TextureSpec:
    classes: tuple[ElementClassSpec, ...]
    background_color: tuple[int, int, int]
    seed: int
    canvas_px: int = 1024
    shading: str = "flat"

    def validate(self, namer: ColorNamer | None = None) -> None:
        if not 1 <= len(self.classes) <= 2:
            raise ValueError(f"need 1 or 2 element classes, got {len(self.classes)}")
        if self.shading not in SHADING_MODES:
            raise ValueError(f"unknown shading mode {self.shading!r}")
        if self.canvas_px <= 0:
            raise ValueError("canvas_px must be positive")
        colors = [self.background_color] + [c.color for c in self.classes]
        if not names_are_distinct(colors, namer):
            raise ValueError("background and class colors must be distinct under color naming")

    def to_dict(self):
        return {
            "classes": [c.to_dict() for c in self.classes],
            "background_color": list(self.background_color),
            "seed": int(self.seed),
            "canvas_px": int(self.canvas_px),
            "shading": self.shading,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            classes=tuple(ElementClassSpec.from_dict(c) for c in d["classes"]),
            background_color=tuple(int(c) for c in d["background_color"]),
            seed=int(d["seed"]),
            canvas_px=int(d["canvas_px"]),
            shading=d["shading"],
        )


# ---------------------------------------------------------------------------
# Rasterization
# ---------------------------------------------------------------------------

def _polygon_vertices(subkind: str, size: float, orientation_deg: float) -> np.ndarray:
    th = np.radians(orientation_deg)
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    if subkind == "square":
        h = size / 2.0
        local = np.array([(-h, -h), (h, -h), (h, h), (-h, h)])
    elif subkind == "rectangle":
        local = np.array([(-size / 2, -size / 4), (size / 2, -size / 4), (size / 2, size / 4), (-size / 2, size / 4)])
    elif subkind == "triangle":
        r = size / np.sqrt(3.0)
        angles = np.radians(orientation_deg + np.array([90.0, 210.0, 330.0]))
        local = r * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        return local
    else:
        raise ValueError(f"unknown polygon subkind {subkind!r}")
    return local @ rot.T


def _nominal_area(shape: ShapeClass, size: float) -> float:
    if shape.kind == "circle":
        return np.pi * (size / 2.0) ** 2
    if shape.kind == "polygon":
        if shape.polygon_subkind == "square":
            return size * size
        if shape.polygon_subkind == "rectangle":
            return size * size / 2.0
        return np.sqrt(3.0) / 4.0 * size * size
    raise ValueError("lines have no 2D nominal area")


def _rasterize_convex(vertices: np.ndarray, canvas: int):
    """Boolean mask of pixel centers inside a convex polygon, plus its window."""
    x0 = max(int(np.floor(vertices[:, 0].min())) - 1, 0)
    x1 = min(int(np.ceil(vertices[:, 0].max())) + 1, canvas)
    y0 = max(int(np.floor(vertices[:, 1].min())) - 1, 0)
    y1 = min(int(np.ceil(vertices[:, 1].max())) + 1, canvas)
    if x0 >= x1 or y0 >= y1:
        return None, None
    xs = np.arange(x0, x1) + 0.5
    ys = np.arange(y0, y1) + 0.5
    px, py = np.meshgrid(xs, ys)
    inside = np.ones(px.shape, dtype=bool)
    n = len(vertices)
    area2 = 0.0
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        area2 += ax * by - bx * ay
    sign = 1.0 if area2 >= 0 else -1.0
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        inside &= sign * ((bx - ax) * (py - ay) - (by - ay) * (px - ax)) >= 0
    return inside, (slice(y0, y1), slice(x0, x1))


def _rasterize_circle(cx: float, cy: float, radius: float, canvas: int):
    x0 = max(int(np.floor(cx - radius)) - 1, 0)
    x1 = min(int(np.ceil(cx + radius)) + 1, canvas)
    y0 = max(int(np.floor(cy - radius)) - 1, 0)
    y1 = min(int(np.ceil(cy + radius)) + 1, canvas)
    if x0 >= x1 or y0 >= y1:
        return None, None
    xs = np.arange(x0, x1) + 0.5
    ys = np.arange(y0, y1) + 0.5
    px, py = np.meshgrid(xs, ys)
    inside = (px - cx) ** 2 + (py - cy) ** 2 <= radius * radius
    return inside, (slice(y0, y1), slice(x0, x1))


@dataclass
class _DrawRecord:
    gid: int
    class_idx: int
    label: str
    nominal_area: float
    drawn_area: int
    window: tuple[slice, slice] | None


def _lattice_index_bounds(layout: LayoutSpec, canvas: int, margin: float):
    """Integer (i, j) ranges whose lattice points can touch the canvas."""
    u = np.asarray(layout.basis_u, dtype=float)
    v = np.asarray(layout.basis_v, dtype=float)
    basis = np.column_stack([u, v])
    inv = np.linalg.inv(basis)
    corners = np.array(
        [
            (-margin, -margin),
            (canvas + margin, -margin),
            (-margin, canvas + margin),
            (canvas + margin, canvas + margin),
        ]
    )
    coeffs = (corners - np.asarray(layout.phase)) @ inv.T
    lo = np.floor(coeffs.min(axis=0)).astype(int)
    hi = np.ceil(coeffs.max(axis=0)).astype(int)
    return (lo[0], hi[0]), (lo[1], hi[1])


def _draw_grid_class(cls: ElementClassSpec, class_idx: int, spec: TextureSpec, owner, records):
    canvas = spec.canvas_px
    layout = cls.layout
    rng = np.random.default_rng([spec.seed, class_idx])
    size_max = cls.size_px[1]
    jitter_reach = layout.jitter * layout.min_basis_length()
    margin = 0.75 * size_max + jitter_reach

    (i0, i1), (j0, j1) = _lattice_index_bounds(layout, canvas, margin)
    ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    u = np.asarray(layout.basis_u)
    v = np.asarray(layout.basis_v)
    centers = np.asarray(layout.phase) + ii[:, None] * u + jj[:, None] * v
    n = len(centers)

    sizes = rng.uniform(cls.size_px[0], cls.size_px[1], n)
    orients = rng.uniform(cls.orientation_deg[0], cls.orientation_deg[1], n)
    jr = jitter_reach * np.sqrt(rng.uniform(0.0, 1.0, n))
    jth = rng.uniform(0.0, 2.0 * np.pi, n)
    centers = centers + np.stack([jr * np.cos(jth), jr * np.sin(jth)], axis=1)

    # Skip points that cannot touch the canvas at all.
    reach = 0.75 * sizes
    touchable = (
        (centers[:, 0] > -reach)
        & (centers[:, 0] < canvas + reach)
        & (centers[:, 1] > -reach)
        & (centers[:, 1] < canvas + reach)
    )

    for k in np.flatnonzero(touchable):
        cx, cy = centers[k]
        if cls.shape.kind == "circle":
            mask, window = _rasterize_circle(cx, cy, sizes[k] / 2.0, canvas)
        else:
            verts = _polygon_vertices(cls.shape.polygon_subkind, sizes[k], orients[k]) + centers[k]
            mask, window = _rasterize_convex(verts, canvas)
        drawn = int(mask.sum()) if mask is not None else 0
        gid = len(records)
        records.append(
            _DrawRecord(gid, class_idx, cls.shape.kind, _nominal_area(cls.shape, sizes[k]), drawn, window)
        )
        if drawn:
            owner[window][mask] = gid


def _stripe_row_intervals(t: float, h: float, uhat, canvas: int):
    """Per-row pixel column ranges [x0, x1) of the band |p.uhat - t| <= h/2."""
    rows = np.arange(canvas)
    ux, uy = uhat
    if abs(ux) < 1e-9:
        band = np.abs(uy * (rows + 0.5) - t) <= h / 2.0
        x0 = np.where(band, 0, 0)
        x1 = np.where(band, canvas, 0)
        return x0, x1
    lo = (t - h / 2.0 - uy * (rows + 0.5)) / ux
    hi = (t + h / 2.0 - uy * (rows + 0.5)) / ux
    if ux < 0:
        lo, hi = hi, lo
    x0 = np.clip(np.ceil(lo - 0.5).astype(int), 0, canvas)
    x1 = np.clip(np.floor(hi - 0.5).astype(int) + 1, 0, canvas)
    x1 = np.maximum(x1, x0)
    return x0, x1


def _draw_line_class(cls: ElementClassSpec, class_idx: int, spec: TextureSpec, owner, records):
    canvas = spec.canvas_px
    layout = cls.layout
    rng = np.random.default_rng([spec.seed, class_idx])
    u = np.asarray(layout.basis_u, dtype=float)
    step = float(np.linalg.norm(u))
    uhat = u / step

    corners = np.array([(0, 0), (canvas, 0), (0, canvas), (canvas, canvas)], dtype=float)
    pmin, pmax = (corners @ uhat).min(), (corners @ uhat).max()

    t0 = float(np.asarray(layout.phase) @ uhat)
    margin = cls.size_px[1] / 2.0 + layout.jitter * step
    k0 = int(np.floor((pmin - margin - t0) / step))
    k1 = int(np.ceil((pmax + margin - t0) / step))
    n = k1 - k0 + 1

    thicknesses = rng.uniform(cls.size_px[0], cls.size_px[1], n)
    _ = rng.uniform(cls.orientation_deg[0], cls.orientation_deg[1], n)  # keeps stream layout uniform across kinds
    jr = layout.jitter * step * np.sqrt(rng.uniform(0.0, 1.0, n))
    jth = rng.uniform(0.0, 2.0 * np.pi, n)
    offsets = t0 + np.arange(k0, k1 + 1) * step + jr * np.cos(jth) * uhat[0] + jr * np.sin(jth) * uhat[1]

    for k in range(n):
        t, h = offsets[k], thicknesses[k]
        lo, hi = t - h / 2.0, t + h / 2.0
        coverage = max(0.0, min(hi, pmax) - max(lo, pmin)) / h
        x0, x1 = _stripe_row_intervals(t, h, uhat, canvas)
        widths = x1 - x0
        drawn = int(widths.sum())
        window = None
        if drawn:
            gid = len(records)
            filled = np.flatnonzero(widths)
            for r in filled:
                owner[r, x0[r] : x1[r]] = gid
            window = (
                slice(int(filled[0]), int(filled[-1]) + 1),
                slice(int(x0[filled].min()), int(x1[filled].max())),
            )
        nominal = drawn / coverage if coverage > 1e-9 else np.inf
        records.append(_DrawRecord(len(records), class_idx, "line", nominal, drawn, window))


def _shading_field(rng: np.random.Generator, canvas: int) -> np.ndarray:
    """Smooth low-frequency multiplicative gain in [0.9, 1.1]."""
    ys, xs = np.mgrid[0:canvas, 0:canvas]
    xs = xs / canvas
    ys = ys / canvas
    g = np.zeros((canvas, canvas))
    for _ in range(3):
        freq = rng.uniform(1.0, 3.0)
        ang = rng.uniform(0.0, np.pi)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        g += rng.uniform(0.3, 1.0) * np.cos(2.0 * np.pi * freq * (xs * np.cos(ang) + ys * np.sin(ang)) + phase)
    g /= np.abs(g).max() + 1e-12
    return 1.0 + 0.1 * g


def render(spec: TextureSpec) -> tuple[np.ndarray, GroundTruth]:
    """Rasterize a spec; returns the RGB image and per-texel ground truth."""
    spec.validate()
    canvas = spec.canvas_px
    owner = np.full((canvas, canvas), -1, dtype=np.int32)
    records: list[_DrawRecord] = []

    for class_idx, cls in enumerate(spec.classes):
        if cls.shape.kind == "line":
            _draw_line_class(cls, class_idx, spec, owner, records)
        else:
            _draw_grid_class(cls, class_idx, spec, owner, records)

    visible_areas = np.bincount(owner[owner >= 0].ravel(), minlength=len(records))

    # Compose the image: background, then class colors by ownership.
    image = np.empty((canvas, canvas, 3), dtype=np.uint8)
    image[:] = np.asarray(spec.background_color, dtype=np.uint8)
    if records:
        class_of = np.array([r.class_idx for r in records], dtype=np.int32)
        colors = np.array([c.color for c in spec.classes], dtype=np.uint8)
        covered = owner >= 0
        image[covered] = colors[class_of[owner[covered]]]

    # Infeasibility: in multi-class specs, too many texels losing pixels
    # to the other class means the layouts collide.
    if len(spec.classes) >= 2:
        eligible = 0
        collided = 0
        for r in records:
            if r.drawn_area >= VISIBILITY_FRACTION * r.nominal_area and r.drawn_area > 0:
                eligible += 1
                if visible_areas[r.gid] < _OCCLUSION_TOLERANCE * r.drawn_area:
                    collided += 1
        if eligible > 0 and collided / eligible > COLLISION_FRACTION:
            raise InfeasibleSpecError(
                f"{collided}/{eligible} texels collide between classes; resample the spec"
            )

    texels = []
    for r in records:
        if r.window is None or visible_areas[r.gid] < VISIBILITY_FRACTION * r.nominal_area:
            continue
        sub = owner[r.window] == r.gid
        rows, cols = np.nonzero(sub)
        if rows.size == 0:
            continue
        y_off, x_off = r.window[0].start, r.window[1].start
        x0, x1 = int(cols.min()) + x_off, int(cols.max()) + x_off + 1
        y0, y1 = int(rows.min()) + y_off, int(rows.max()) + y_off + 1
        texels.append(
            TexelAnnotation(
                id=f"t{len(texels):05d}",
                shape=r.label,
                centroid=(float(cols.mean()) + x_off + 0.5, float(rows.mean()) + y_off + 0.5),
                bbox=(x0, y0, x1 - x0, y1 - y0),
                mask=owner[y0:y1, x0:x1] == r.gid,
            )
        )

    if spec.shading == "perturbed":
        rng = np.random.default_rng([spec.seed, 7919])
        gain = _shading_field(rng, canvas)
        noise = rng.uniform(-2.0, 2.0, size=(canvas, canvas, 3))
        image = np.clip(np.rint(image.astype(np.float64) * gain[..., None] + noise), 0, 255).astype(np.uint8)

    gt = GroundTruth(
        canvas_px=canvas,
        texels=texels,
        per_class_layout=[c.layout.to_dict() for c in spec.classes],
    )
    return image, gt


# ---------------------------------------------------------------------------
# Spec sampling
# ---------------------------------------------------------------------------

def sample_spec(
    rng_seed: int,
    palette=DEFAULT_PALETTE,
    *,
    canvas_px: int = 1024,
    n_classes: int | None = None,
    jitter: float | None = None,
    shading: str = "flat",
    namer: ColorNamer | None = None,
) -> TextureSpec:
    """Draw a random texture spec; deterministic given the seed.

    Layout spacing is sampled relative to the canvas so the expected
    texel count per class stays >= 30, and shape sizes are tied to the
    lattice spacing so that texels of one class cannot touch at jitter
    <= 0.1.
    """
    palette = [tuple(int(v) for v in c) for c in palette]
    if len(palette) < 3 or not names_are_distinct(palette, namer):
        raise InvalidPaletteError("palette needs >= 3 colors with pairwise distinct color names")

    rng = np.random.default_rng(rng_seed)
    k = int(n_classes) if n_classes is not None else int(rng.integers(1, 3))
    color_idx = rng.choice(len(palette), size=k + 1, replace=False)
    background = palette[color_idx[0]]

    # Two-class specs use smaller footprints so the layouts rarely collide;
    # two stripe classes always cross, so the second line kind is demoted.
    multi = k >= 2
    classes = []
    for ci in range(k):
        kind = SHAPE_KINDS[rng.integers(0, 3)]
        if multi and kind == "line" and any(c.shape.kind == "line" for c in classes):
            kind = ("circle", "polygon")[int(rng.integers(0, 2))]
        jit = float(jitter) if jitter is not None else float(rng.uniform(0.0, 0.3))
        if kind == "line":
            spacing = canvas_px * (rng.uniform(0.024, 0.033) if multi else rng.uniform(0.018, 0.033))
            ang = np.radians(rng.uniform(0.0, 180.0))
            u = (spacing * np.cos(ang), spacing * np.sin(ang))
            base = max(spacing * (rng.uniform(0.10, 0.18) if multi else rng.uniform(0.18, 0.40)), 2.5)
            half = base * rng.uniform(0.0, 0.15)
            stripe_dir = (np.degrees(ang) + 90.0) % 180.0
            phase_a = rng.uniform(0.0, 1.0)
            classes.append(
                ElementClassSpec(
                    shape=ShapeClass("line"),
                    size_px=(base - half, base + half),
                    orientation_deg=(stripe_dir, stripe_dir),
                    color=palette[color_idx[1 + ci]],
                    layout=LayoutSpec(
                        basis_u=u,
                        basis_v=None,
                        jitter=jit,
                        phase=(phase_a * u[0], phase_a * u[1]),
                    ),
                )
            )
            continue

        shape = ShapeClass(kind) if kind == "circle" else ShapeClass(kind, POLYGON_SUBKINDS[rng.integers(0, 3)])
        # Polygons stay coarse enough for the geometric shape rules of the
        # classical detector (squares under ~28 px rasterize too round).
        if kind == "polygon" and not multi:
            su = canvas_px * rng.uniform(0.10, 0.15)
        else:
            su = canvas_px * rng.uniform(0.055, 0.14)
        sv = su * rng.uniform(0.85, 1.2)
        theta = np.radians(rng.uniform(0.0, 180.0))
        dtheta = np.radians(rng.uniform(60.0, 120.0))
        u = (su * np.cos(theta), su * np.sin(theta))
        v = (sv * np.cos(theta + dtheta), sv * np.sin(theta + dtheta))
        uv = np.array(u), np.array(v)
        neighbor_offsets = [uv[0], uv[1], uv[0] + uv[1], uv[0] - uv[1]]
        min_spacing = min(float(np.linalg.norm(o)) for o in neighbor_offsets)
        base = max(min_spacing * (rng.uniform(0.16, 0.26) if multi else rng.uniform(0.35, 0.52)), 5.0)
        half = base * rng.uniform(0.0, 0.15)
        lo = rng.uniform(0.0, 150.0)
        width = rng.uniform(0.0, 30.0)
        phase_a, phase_b = rng.uniform(0.0, 1.0, 2)
        classes.append(
            ElementClassSpec(
                shape=shape,
                size_px=(base - half, base + half),
                orientation_deg=(lo, lo + width),
                color=palette[color_idx[1 + ci]],
                layout=LayoutSpec(
                    basis_u=u,
                    basis_v=v,
                    jitter=jit,
                    phase=tuple(phase_a * uv[0] + phase_b * uv[1]),
                ),
            )
        )

    spec = TextureSpec(
        classes=tuple(classes),
        background_color=background,
        seed=int(rng_seed),
        canvas_px=canvas_px,
        shading=shading,
    )
    spec.validate(namer)
    return spec


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------

@dataclass
class ManifestEntry:
    id: str
    image: str
    ground_truth: str
    spec: TextureSpec

    def to_dict(self):
        return {
            "id": self.id,
            "image": self.image,
            "ground_truth": self.ground_truth,
            "spec": self.spec.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            id=d["id"],
            image=d["image"],
            ground_truth=d["ground_truth"],
            spec=TextureSpec.from_dict(d["spec"]),
        )


@dataclass
class DatasetManifest:
    seed: int
    canvas_px: int
    entries: list[ManifestEntry]
    split: dict[str, list[str]]

    def entry(self, image_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.id == image_id:
                return e
        raise KeyError(f"no dataset entry with id {image_id!r}")

    def to_dict(self):
        return {
            "seed": int(self.seed),
            "canvas_px": int(self.canvas_px),
            "entries": [e.to_dict() for e in self.entries],
            "split": {k: list(v) for k, v in self.split.items()},
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        d = json.loads(Path(path).read_text())
        return cls(
            seed=int(d["seed"]),
            canvas_px=int(d["canvas_px"]),
            entries=[ManifestEntry.from_dict(e) for e in d["entries"]],
            split={k: list(v) for k, v in d["split"].items()},
        )


MAX_RESAMPLE_ATTEMPTS = 30


def generate_dataset(
    n: int,
    seed: int,
    out_dir,
    split_ratio: float = 0.9,
    *,
    canvas_px: int = 1024,
    palette=DEFAULT_PALETTE,
    shading: str = "flat",
    jitter: float | None = None,
    n_classes: int | None = None,
) -> DatasetManifest:
    """Render `n` textures with ground truth and write a dataset manifest.

    Infeasible specs (colliding multi-class layouts) are resampled.
    Deterministic given (n, seed): rerunning yields byte-identical
    images, ground-truth files and manifest.
    """
    if n < 10:
        raise ValueError(f"need n >= 10, got {n}")
    if not 0.0 <= split_ratio <= 1.0:
        raise ValueError(f"split_ratio must be in [0, 1], got {split_ratio}")
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "gt").mkdir(parents=True, exist_ok=True)

    master = np.random.default_rng(seed)
    entries = []
    for i in range(n):
        image_id = f"tex{i:05d}"
        for attempt in range(MAX_RESAMPLE_ATTEMPTS):
            spec_seed = int(master.integers(0, 2**63))
            spec = sample_spec(
                spec_seed,
                palette,
                canvas_px=canvas_px,
                jitter=jitter,
                n_classes=n_classes,
                shading=shading,
            )
            try:
                image, gt = render(spec)
                break
            except InfeasibleSpecError:
                continue
        else:
            raise InfeasibleSpecError(f"no feasible spec for {image_id} after {MAX_RESAMPLE_ATTEMPTS} attempts")
        image_path = f"images/{image_id}.png"
        gt_path = f"gt/{image_id}.json"
        save_image(out_dir / image_path, image)
        gt.save(out_dir / gt_path)
        entries.append(ManifestEntry(id=image_id, image=image_path, ground_truth=gt_path, spec=spec))

    n_train = int(round(split_ratio * n))
    perm = master.permutation(n)
    ids = [entries[i].id for i in range(n)]
    train = sorted(ids[i] for i in perm[:n_train])
    test = sorted(ids[i] for i in perm[n_train:])

    manifest = DatasetManifest(seed=int(seed), canvas_px=canvas_px, entries=entries, split={"train": train, "test": test})
    manifest.save(out_dir / "manifest.json")
    return manifest
