"""Query-set distortions: down/up-sampling plus noise or lighting.

Each of the six query variants downsamples to 100, 200 or 300 px
(area average), upsamples back to the original size (bilinear), then
applies either impulsive (salt-and-pepper) noise with per-pixel
probability 0.2 or a radial lighting effect brightening a Gaussian
region around a random center.  All randomness derives from the
variant seed, so query sets regenerate byte-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imgio import load_image, save_image
from .synthesis import DatasetManifest

RESOLUTIONS = (100, 200, 300)
EFFECTS = ("impulsive_noise", "radial_lighting")

LIGHTING_AMPLITUDE = 0.8
LIGHTING_SIGMA_FRACTION = 0.35


@dataclass(frozen=True)
class DistortionSpec:
    resolution: int
    effect: str
    seed: int
    p: float = 0.2

    def __post_init__(self):
        if self.resolution not in RESOLUTIONS:
            raise ValueError(f"resolution must be one of {RESOLUTIONS}, got {self.resolution}")
        if self.effect not in EFFECTS:
            raise ValueError(f"effect must be one of {EFFECTS}, got {self.effect!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")

    @property
    def name(self) -> str:
        tag = "noise" if self.effect == "impulsive_noise" else "light"
        return f"r{self.resolution}_{tag}"

    def to_dict(self):
        return {"resolution": self.resolution, "effect": self.effect, "seed": int(self.seed), "p": self.p}

    @classmethod
    def from_dict(cls, d):
        return cls(
            resolution=int(d["resolution"]),
            effect=d["effect"],
            seed=int(d["seed"]),
            p=float(d.get("p", 0.2)),
        )


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

_weight_cache: dict[tuple[str, int, int], np.ndarray] = {}


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) row-stochastic area-average weights along one axis."""
    key = ("area", n_in, n_out)
    if key not in _weight_cache:
        scale = n_in / n_out
        w = np.zeros((n_out, n_in))
        edges_out = np.arange(n_out + 1) * scale
        for o in range(n_out):
            lo, hi = edges_out[o], edges_out[o + 1]
            i0, i1 = int(np.floor(lo)), int(np.ceil(hi))
            for i in range(i0, min(i1, n_in)):
                w[o, i] = max(0.0, min(hi, i + 1) - max(lo, i))
        w /= w.sum(axis=1, keepdims=True)
        _weight_cache[key] = w
    return _weight_cache[key]


def _bilinear_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) bilinear interpolation weights, pixel-center aligned."""
    key = ("bilinear", n_in, n_out)
    if key not in _weight_cache:
        scale = n_in / n_out
        src = (np.arange(n_out) + 0.5) * scale - 0.5
        src = np.clip(src, 0.0, n_in - 1.0)
        i0 = np.floor(src).astype(int)
        frac = src - i0
        i1 = np.minimum(i0 + 1, n_in - 1)
        w = np.zeros((n_out, n_in))
        w[np.arange(n_out), i0] += 1.0 - frac
        w[np.arange(n_out), i1] += frac
        _weight_cache[key] = w
    return _weight_cache[key]


def _resample(image: np.ndarray, weights_y: np.ndarray, weights_x: np.ndarray) -> np.ndarray:
    out = np.tensordot(weights_y, image.astype(np.float64), axes=(1, 0))  # (h', w, c)
    out = np.tensordot(weights_x, out, axes=(1, 1))                       # (w', h', c)
    return out.transpose(1, 0, 2)


def downsample_upsample(image: np.ndarray, resolution: int) -> np.ndarray:
    """Area-average down to resolution^2, bilinear back up to the input size."""
    image = np.asarray(image)
    h, w = image.shape[:2]
    if h != w:
        raise ValueError(f"expected a square image, got {h}x{w}")
    if resolution > h:
        raise ValueError(f"resolution {resolution} exceeds input size {h}")
    small = _resample(image, _area_weights(h, resolution), _area_weights(w, resolution))
    big = _resample(small, _bilinear_weights(resolution, h), _bilinear_weights(resolution, w))
    return np.clip(np.rint(big), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Effects
# ---------------------------------------------------------------------------

def impulsive_noise(image: np.ndarray, p: float = 0.2, seed: int = 0) -> np.ndarray:
    """Replace each pixel with black or white (equal odds) with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    image = np.asarray(image)
    rng = np.random.default_rng(seed)
    h, w = image.shape[:2]
    corrupt = rng.random((h, w)) < p
    salt = rng.integers(0, 2, size=(h, w)).astype(np.uint8) * 255
    out = image.copy()
    out[corrupt] = salt[corrupt, None]
    return out


def lighting_gain(shape: tuple[int, int], center: tuple[float, float]) -> np.ndarray:
    h, w = shape
    sigma = LIGHTING_SIGMA_FRACTION * max(h, w)
    ys, xs = np.mgrid[0:h, 0:w]
    d2 = (xs + 0.5 - center[0]) ** 2 + (ys + 0.5 - center[1]) ** 2
    return 1.0 + LIGHTING_AMPLITUDE * np.exp(-d2 / (2.0 * sigma * sigma))


def radial_lighting(image: np.ndarray, seed: int = 0) -> np.ndarray:
    """Brighten around a random center with a Gaussian falloff (A=0.8, sigma=0.35*canvas)."""
    image = np.asarray(image)
    h, w = image.shape[:2]
    rng = np.random.default_rng(seed)
    center = (rng.uniform(0, w), rng.uniform(0, h))
    gain = lighting_gain((h, w), center)
    return np.clip(np.rint(image.astype(np.float64) * gain[..., None]), 0, 255).astype(np.uint8)


def apply_distortion(image: np.ndarray, spec: DistortionSpec, seed: int) -> np.ndarray:
    """Resample first, then the effect (fixed order)."""
    out = downsample_upsample(image, spec.resolution)
    if spec.effect == "impulsive_noise":
        return impulsive_noise(out, spec.p, seed)
    return radial_lighting(out, seed)


# ---------------------------------------------------------------------------
# Query sets
# ---------------------------------------------------------------------------

@dataclass
class QueryManifest:
    """Maps distorted query images back to their clean database images."""

    variant: DistortionSpec
    queries: list[dict]  # {"id", "image", "source_id"}

    def truth(self) -> dict[str, str]:
        return {q["id"]: q["source_id"] for q in self.queries}

    def to_dict(self):
        return {"variant": self.variant.to_dict(), "queries": self.queries}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path):
        d = json.loads(Path(path).read_text())
        return cls(variant=DistortionSpec.from_dict(d["variant"]), queries=list(d["queries"]))


def make_query_set(
    manifest: DatasetManifest,
    dataset_dir,
    spec: DistortionSpec,
    out_dir,
    split: str = "test",
) -> QueryManifest:
    """Distort every image of a manifest split into a query set on disk."""
    dataset_dir = Path(dataset_dir)
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)

    source_ids = sorted(manifest.split[split])
    master = np.random.default_rng(spec.seed)
    seeds = master.integers(0, 2**63, size=len(source_ids))

    queries = []
    for source_id, item_seed in zip(source_ids, seeds):
        entry = manifest.entry(source_id)
        image = load_image(dataset_dir / entry.image)
        distorted = apply_distortion(image, spec, int(item_seed))
        qid = f"{source_id}__{spec.name}"
        rel = f"images/{qid}.png"
        save_image(out_dir / rel, distorted)
        queries.append({"id": qid, "image": rel, "source_id": source_id})

    qm = QueryManifest(variant=spec, queries=queries)
    qm.save(out_dir / "query_manifest.json")
    return qm
