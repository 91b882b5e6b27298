import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from texelatt.annotations import GroundTruth, TexelAnnotation, rle_decode, rle_encode


def test_rle_simple_cases():
    assert rle_encode(np.zeros((2, 3), dtype=bool)) == [6]
    assert rle_encode(np.ones((2, 2), dtype=bool)) == [0, 4]
    mask = np.array([[False, True, True], [False, False, True]])
    assert rle_encode(mask) == [1, 2, 2, 1]
    assert rle_encode(np.zeros((0, 0), dtype=bool)) == []


def test_rle_roundtrip_explicit():
    mask = np.array([[True, False, True], [True, True, False]])
    assert np.array_equal(rle_decode(rle_encode(mask), mask.shape), mask)


def test_rle_length_mismatch():
    with pytest.raises(ValueError, match="does not match shape"):
        rle_decode([3], (2, 2))


@given(hnp.arrays(bool, st.tuples(st.integers(1, 12), st.integers(1, 12))))
def test_rle_roundtrip_property(mask):
    assert np.array_equal(rle_decode(rle_encode(mask), mask.shape), mask)


def _annotation():
    mask = np.zeros((4, 5), dtype=bool)
    mask[1:3, 1:4] = True
    return TexelAnnotation(id="t0", shape="circle", centroid=(12.0, 8.5), bbox=(10, 7, 5, 4), mask=mask)


def test_annotation_dict_roundtrip():
    ann = _annotation()
    back = TexelAnnotation.from_dict(ann.to_dict())
    assert back.id == ann.id and back.shape == ann.shape
    assert back.centroid == ann.centroid and back.bbox == ann.bbox
    assert np.array_equal(back.mask, ann.mask)


def test_ground_truth_file_roundtrip(tmp_path):
    gt = GroundTruth(canvas_px=64, texels=[_annotation()], per_class_layout=[{"jitter": 0.1}])
    path = tmp_path / "gt.json"
    gt.save(path)
    back = GroundTruth.load(path)
    assert back.canvas_px == 64
    assert len(back.texels) == 1
    assert back.per_class_layout == [{"jitter": 0.1}]
    back.validate()


def test_ground_truth_validation():
    ann = _annotation()
    gt = GroundTruth(canvas_px=64, texels=[ann])
    gt.validate()

    bad = TexelAnnotation(id="t1", shape="circle", centroid=(1.0, 1.0), bbox=(10, 7, 5, 4), mask=ann.mask)
    with pytest.raises(ValueError, match="centroid outside bbox"):
        GroundTruth(canvas_px=64, texels=[bad]).validate()

    with pytest.raises(ValueError, match="outside canvas"):
        GroundTruth(canvas_px=12, texels=[ann]).validate()
