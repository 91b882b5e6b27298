import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from texelatt import colors


@pytest.mark.parametrize("idx,name", list(enumerate(colors.COLOR_NAMES)))
def test_prototypes_name_themselves(idx, name):
    assert colors.name_color(tuple(colors.DEFAULT_PROTOTYPES[idx])) == idx


def test_mid_grey_names_grey():
    assert colors.COLOR_NAMES[colors.name_color((128, 128, 128))] == "grey"


def test_primary_colors():
    assert colors.COLOR_NAMES[colors.name_color((255, 0, 0))] == "red"
    assert colors.COLOR_NAMES[colors.name_color((0, 0, 0))] == "black"
    assert colors.COLOR_NAMES[colors.name_color((255, 255, 255))] == "white"


def test_lab_conversion_reference_values():
    # Published sRGB D65 CIELAB coordinates.
    lab = colors.rgb_to_lab(np.array([[255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 255, 255]], dtype=np.uint8))
    expected = np.array(
        [
            [53.24, 80.09, 67.20],
            [87.74, -86.18, 83.18],
            [32.30, 79.20, -107.86],
            [100.0, 0.0, 0.0],
        ]
    )
    assert np.allclose(lab, expected, atol=0.05)


def test_tie_breaks_to_lowest_index():
    # Two identical prototypes: distance ties resolve to the lower index.
    protos = colors.DEFAULT_PROTOTYPES.copy()
    protos[5] = protos[2]
    namer = colors.ColorNamer(protos)
    assert namer.name_color(tuple(protos[2])) == 2


def test_lut_matches_exact_on_palette():
    arr = np.array(colors.DEFAULT_PALETTE, dtype=np.uint8).reshape(1, -1, 3)
    assert np.array_equal(colors.name_image(arr).ravel(), colors.name_colors(arr.reshape(-1, 3)))


def test_lut_agreement_on_random_colors():
    rng = np.random.default_rng(0)
    sample = rng.integers(0, 256, (5000, 3), dtype=np.uint8)
    exact = colors.name_colors(sample)
    lut = colors.name_image(sample.reshape(50, 100, 3)).ravel()
    assert (exact == lut).mean() > 0.95


def test_name_histogram_normalization():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
    hist = colors.name_histogram(img)
    assert hist.shape == (11,)
    assert np.isclose(hist.sum(), 1.0)
    empty = colors.name_histogram(img, np.zeros((32, 32), dtype=bool))
    assert np.array_equal(empty, np.zeros(11))


def test_names_are_distinct():
    assert colors.names_are_distinct(colors.DEFAULT_PALETTE)
    assert not colors.names_are_distinct([(255, 0, 0), (250, 5, 5), (0, 0, 255)])


def test_palette_covers_distinct_names():
    idx = colors.name_colors(np.array(colors.DEFAULT_PALETTE, dtype=np.uint8))
    assert len(set(idx.tolist())) == len(colors.DEFAULT_PALETTE)


def test_prototype_table_from_json(tmp_path):
    table = {name: colors.DEFAULT_PROTOTYPES[i].tolist() for i, name in enumerate(colors.COLOR_NAMES)}
    path = tmp_path / "protos.json"
    path.write_text(json.dumps(table))
    namer = colors.ColorNamer.from_json(path)
    assert namer.name_color((255, 0, 0)) == colors.COLOR_NAMES.index("red")

    del table["red"]
    path.write_text(json.dumps(table))
    with pytest.raises(ValueError, match="missing names"):
        colors.ColorNamer.from_json(path)


def test_bad_prototype_shape():
    with pytest.raises(ValueError, match="shape"):
        colors.ColorNamer(np.zeros((5, 3), dtype=np.uint8))


@given(st.tuples(*(st.integers(0, 255) for _ in range(3))))
def test_every_rgb_gets_a_name(rgb):
    assert 0 <= colors.name_color(rgb) <= 10
