"""Tamura perceptual texture features: coarseness, contrast, directionality.

The optional extended set (line-likeness, regularity, roughness) is off
by default; the retrieval baseline uses the three primary features.
Images are converted to grayscale with the standard luminance weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

COARSENESS_SCALES = (1, 2, 3, 4, 5)  # window sizes 2^k
DIRECTIONALITY_BINS = 16
GRADIENT_THRESHOLD = 12.0

TAMURA_FEATURE_NAMES = ("coarseness", "contrast", "directionality")
TAMURA_EXTENDED_NAMES = TAMURA_FEATURE_NAMES + ("line_likeness", "regularity", "roughness")


@dataclass
class TamuraDescriptor:
    coarseness: float
    contrast: float
    directionality: float
    line_likeness: float | None = None
    regularity: float | None = None
    roughness: float | None = None

    def as_vector(self) -> np.ndarray:
        base = [self.coarseness, self.contrast, self.directionality]
        if self.line_likeness is not None:
            base += [self.line_likeness, self.regularity, self.roughness]
        return np.asarray(base, dtype=float)


def to_grayscale(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        return 0.299 * image[..., 0] + 0.587 * image[..., 1] + 0.114 * image[..., 2]
    return image


def _box_means(integral: np.ndarray, pad: int, h: int, w: int, half: int, dy: int, dx: int) -> np.ndarray:
    """Mean over the 2*half square window centered at (y+dy, x+dx) per pixel."""
    r0 = pad + dy - half
    c0 = pad + dx - half
    size = 2 * half
    s = (
        integral[r0 + size : r0 + size + h, c0 + size : c0 + size + w]
        - integral[r0 : r0 + h, c0 + size : c0 + size + w]
        - integral[r0 + size : r0 + size + h, c0 : c0 + w]
        + integral[r0 : r0 + h, c0 : c0 + w]
    )
    return s / (size * size)


def coarseness(gray: np.ndarray) -> float:
    """Average best window size 2^k maximizing directional mean differences.

    Per-pixel ties resolve to the smallest scale; a fully constant image
    (no contrast anywhere) scores the maximum scale 2^5 = 32 by
    convention.
    """
    h, w = gray.shape
    pad = 2 ** COARSENESS_SCALES[-1]
    padded = np.pad(gray, pad, mode="edge")
    integral = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
    integral[1:, 1:] = padded.cumsum(0).cumsum(1)

    best_e = np.full((h, w), -1.0)
    best_scale = np.zeros((h, w))
    for k in COARSENESS_SCALES:
        half = 2 ** (k - 1)
        e_h = np.abs(
            _box_means(integral, pad, h, w, half, 0, half) - _box_means(integral, pad, h, w, half, 0, -half)
        )
        e_v = np.abs(
            _box_means(integral, pad, h, w, half, half, 0) - _box_means(integral, pad, h, w, half, -half, 0)
        )
        e = np.maximum(e_h, e_v)
        # Equal positive differences prefer the larger window (periodic
        # patterns tie exactly across aligned scales); flat pixels keep
        # the smallest.
        better = (e > best_e) | ((e == best_e) & (e > 0))
        best_e[better] = e[better]
        best_scale[better] = 2.0**k
    if best_e.max() <= 1e-12:
        return float(2 ** COARSENESS_SCALES[-1])
    return float(best_scale.mean())


def contrast(gray: np.ndarray) -> float:
    """sigma / kurtosis^(1/4); 0 for constant images."""
    sigma = gray.std()
    if sigma <= 1e-12:
        return 0.0
    m4 = ((gray - gray.mean()) ** 4).mean()
    alpha4 = m4 / sigma**4
    return float(sigma / alpha4**0.25)


def _gradient_histogram(gray: np.ndarray):
    dh = ndimage.prewitt(gray, axis=1) / 3.0
    dv = ndimage.prewitt(gray, axis=0) / 3.0
    mag = (np.abs(dh) + np.abs(dv)) / 2.0
    theta = np.mod(np.arctan2(dv, dh), np.pi)
    strong = mag >= GRADIENT_THRESHOLD
    if not strong.any():
        return None, None, None
    bins = np.minimum((theta[strong] * DIRECTIONALITY_BINS / np.pi).astype(int), DIRECTIONALITY_BINS - 1)
    hist = np.bincount(bins, minlength=DIRECTIONALITY_BINS).astype(float)
    hist /= hist.sum()
    return hist, theta, strong


def directionality(gray: np.ndarray) -> float:
    """Peak concentration of the gradient-orientation histogram in [0, 1].

    1 when all strong gradients share one orientation, 0 for a uniform
    orientation distribution (or no strong gradients at all).
    """
    hist, _, _ = _gradient_histogram(gray)
    if hist is None:
        return 0.0
    peak = int(hist.argmax())
    offsets = np.arange(DIRECTIONALITY_BINS)
    circ = np.minimum(np.abs(offsets - peak), DIRECTIONALITY_BINS - np.abs(offsets - peak))
    angular = circ * (np.pi / DIRECTIONALITY_BINS)
    dispersion = float((hist * angular**2).sum())
    uniform = float((angular**2).mean())
    return float(np.clip(1.0 - dispersion / uniform, 0.0, 1.0))


def _line_likeness(gray: np.ndarray, distance: int = 4) -> float:
    hist, theta, strong = _gradient_histogram(gray)
    if hist is None:
        return 0.0
    h, w = gray.shape
    bins = np.minimum((theta * DIRECTIONALITY_BINS / np.pi).astype(int), DIRECTIONALITY_BINS - 1)
    total_w = 0.0
    total = 0.0
    for b in range(DIRECTIONALITY_BINS):
        angle = (b + 0.5) * np.pi / DIRECTIONALITY_BINS
        dy = int(round(distance * np.sin(angle)))
        dx = int(round(distance * np.cos(angle)))
        sel = strong & (bins == b)
        ys, xs = np.nonzero(sel)
        ys2, xs2 = ys + dy, xs + dx
        ok = (ys2 >= 0) & (ys2 < h) & (xs2 >= 0) & (xs2 < w)
        if not ok.any():
            continue
        ok &= strong[ys2[ok].clip(0, h - 1), xs2[ok].clip(0, w - 1)] if ok.any() else ok
        ys, xs, ys2, xs2 = ys[ok], xs[ok], ys2[ok], xs2[ok]
        if len(ys) == 0:
            continue
        total += np.cos(2.0 * (theta[ys, xs] - theta[ys2, xs2])).sum()
        total_w += len(ys)
    if total_w == 0:
        return 0.0
    return float(np.clip((total / total_w + 1.0) / 2.0, 0.0, 1.0))


def _regularity(gray: np.ndarray, grid: int = 4) -> float:
    h, w = gray.shape
    feats = []
    for i in range(grid):
        for j in range(grid):
            sub = gray[i * h // grid : (i + 1) * h // grid, j * w // grid : (j + 1) * w // grid]
            feats.append([coarseness(sub), contrast(sub), directionality(sub)])
    feats = np.asarray(feats)
    cv = feats.std(axis=0) / (np.abs(feats.mean(axis=0)) + 1e-9)
    return float(np.clip(1.0 - cv.mean(), 0.0, 1.0))


def tamura(image: np.ndarray, extended: bool = False) -> TamuraDescriptor:
    """Tamura features of an RGB or grayscale image (min side 64 px)."""
    gray = to_grayscale(image)
    if min(gray.shape) < 64:
        raise ValueError(f"image min side must be >= 64 px, got {min(gray.shape)}")
    crs = coarseness(gray)
    con = contrast(gray)
    dir_ = directionality(gray)
    if not extended:
        return TamuraDescriptor(crs, con, dir_)
    return TamuraDescriptor(
        crs,
        con,
        dir_,
        line_likeness=_line_likeness(gray),
        regularity=_regularity(gray),
        roughness=crs + con,
    )
