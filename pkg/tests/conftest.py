import numpy as np
import pytest

from texelatt.synthesis import (
    ElementClassSpec,
    LayoutSpec,
    ShapeClass,
    TextureSpec,
    generate_dataset,
    render,
)

RED = (225, 45, 45)
BLUE = (20, 60, 230)
WHITE = (245, 245, 245)


def circle_grid_spec(canvas=1024, spacing=32.0, size=18.0, jitter=0.0, seed=42):
    """32x32 axis-aligned circle grid; every texel fully interior."""
    return TextureSpec(
        classes=(
            ElementClassSpec(
                shape=ShapeClass("circle"),
                size_px=(size, size),
                orientation_deg=(0.0, 0.0),
                color=RED,
                layout=LayoutSpec(
                    basis_u=(spacing, 0.0),
                    basis_v=(0.0, spacing),
                    jitter=jitter,
                    phase=(spacing / 2, spacing / 2),
                ),
            ),
        ),
        background_color=WHITE,
        seed=seed,
        canvas_px=canvas,
    )


def line_stripes_spec(canvas=1024, spacing=24.0, thickness=6.0, seed=1):
    """Horizontal full-width stripes every `spacing` px."""
    return TextureSpec(
        classes=(
            ElementClassSpec(
                shape=ShapeClass("line"),
                size_px=(thickness, thickness),
                orientation_deg=(0.0, 0.0),
                color=BLUE,
                layout=LayoutSpec(
                    basis_u=(0.0, spacing),
                    basis_v=None,
                    jitter=0.0,
                    phase=(0.0, spacing / 2),
                ),
            ),
        ),
        background_color=WHITE,
        seed=seed,
        canvas_px=canvas,
    )


@pytest.fixture(scope="session")
def circle_grid():
    spec = circle_grid_spec()
    image, gt = render(spec)
    return spec, image, gt


@pytest.fixture(scope="session")
def line_stripes():
    spec = line_stripes_spec()
    image, gt = render(spec)
    return spec, image, gt


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """12 textures at 128 px with a 90/10 split, on disk."""
    root = tmp_path_factory.mktemp("dataset")
    manifest = generate_dataset(12, seed=2024, out_dir=root, split_ratio=0.5, canvas_px=128)
    return root, manifest


def ideal_grid_points(n=32, spacing=32.0, phase=16.0):
    i, j = np.mgrid[0:n, 0:n]
    return np.stack([phase + i.ravel() * spacing, phase + j.ravel() * spacing], axis=1).astype(float)


def jitter_points(points, jitter, spacing, seed):
    """Displace each point uniformly within a disk of radius jitter*spacing."""
    rng = np.random.default_rng(seed)
    r = jitter * spacing * np.sqrt(rng.uniform(0.0, 1.0, len(points)))
    th = rng.uniform(0.0, 2.0 * np.pi, len(points))
    return points + np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
