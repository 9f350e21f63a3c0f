import numpy as np
import pytest

from texnest import (
    ConsistencyError,
    GridGeometry,
    LabelVolume,
    OneHotMask,
    ProbabilityField,
    argmax_decode,
    one_hot_encode,
    softmax_field,
)
from oracles import brute_argmax


def geom(shape, pitch=0.02022):
    return GridGeometry.isotropic(shape, pitch)


def logits_field(values):
    arr = np.asarray(values, dtype=np.float64)
    return ProbabilityField(geom(arr.shape[1:]), arr, kind="logits")


def test_geometry_basics():
    g = GridGeometry((4, 5, 6), (0.1, 0.2, 0.3))
    assert g.voxel_count == 120
    assert np.allclose(g.extent_mm(), (0.4, 1.0, 1.8))
    iso = geom((2, 2, 2), 0.5)
    assert iso.spacing == (0.5, 0.5, 0.5)


def test_geometry_rejects_bad_inputs():
    with pytest.raises(ValueError):
        GridGeometry((0, 4, 4), (1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        GridGeometry((4, 4, 4), (0.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        GridGeometry((4, 4), (1.0, 1.0, 1.0))


def test_softmax_single_voxel_frozen_values():
    field = logits_field(np.array([1.0, 2.0, 3.0]).reshape(3, 1, 1, 1))
    probs = softmax_field(field)
    assert probs.kind == "probabilities"
    expected = (0.09003057317038046, 0.24472847105479765, 0.6652409557748219)
    assert np.allclose(probs.channels[:, 0, 0, 0], expected, rtol=0, atol=1e-15)


def test_softmax_uniform_logits_give_uniform_probabilities():
    field = logits_field(np.full((3, 2, 2, 2), 7.25))
    probs = softmax_field(field)
    assert np.allclose(probs.channels, 1.0 / 3.0, rtol=0, atol=1e-15)


def test_softmax_large_logits_stay_finite():
    vals = np.zeros((3, 1, 1, 1))
    vals[0] = 1000.0
    probs = softmax_field(logits_field(vals))
    assert np.all(np.isfinite(probs.channels))
    assert probs.channels[0, 0, 0, 0] == pytest.approx(1.0, abs=1e-12)


def test_softmax_shift_invariance():
    rng = np.random.default_rng(11)
    logits = rng.normal(size=(3, 4, 4, 4))
    shift = rng.normal(size=(4, 4, 4)) * 50.0
    a = softmax_field(logits_field(logits))
    b = softmax_field(logits_field(logits + shift[None]))
    assert np.allclose(a.channels, b.channels, rtol=0, atol=1e-12)


def test_softmax_output_sums_to_one():
    rng = np.random.default_rng(12)
    probs = softmax_field(logits_field(rng.normal(size=(4, 3, 5, 2)) * 10.0))
    assert np.allclose(probs.channels.sum(axis=0), 1.0, rtol=0, atol=1e-12)


def test_softmax_rejects_non_finite_and_names_entry():
    vals = np.zeros((2, 2, 2, 2))
    vals[1, 0, 1, 0] = np.nan
    with pytest.raises(ValueError, match=r"1, 0, 1, 0"):
        softmax_field(logits_field(vals))


def test_softmax_requires_logits_kind():
    field = ProbabilityField(geom((1, 1, 1)), np.full((4, 1, 1, 1), 0.25))
    with pytest.raises(ValueError):
        softmax_field(field)


def test_argmax_picks_largest_channel():
    probs = np.array([0.2, 0.5, 0.3]).reshape(3, 1, 1, 1)
    field = ProbabilityField(geom((1, 1, 1)), probs)
    labels = argmax_decode(field)
    assert labels.labels[0, 0, 0] == 1
    assert labels.num_classes == 3
    assert labels.labels.dtype == np.uint16


def test_argmax_tie_goes_to_lowest_class():
    probs = np.array([0.5, 0.5, 0.0]).reshape(3, 1, 1, 1)
    field = ProbabilityField(geom((1, 1, 1)), probs)
    assert argmax_decode(field).labels[0, 0, 0] == 0


def test_argmax_matches_explicit_scan():
    rng = np.random.default_rng(13)
    for _ in range(5):
        logits = rng.normal(size=(3, 4, 4, 4))
        field = softmax_field(logits_field(logits))
        got = argmax_decode(field).labels
        assert np.array_equal(got, brute_argmax(field.channels))


def test_one_hot_round_trip():
    rng = np.random.default_rng(14)
    labels = LabelVolume(
        geom((6, 5, 4)),
        rng.integers(0, 3, size=(6, 5, 4)).astype(np.uint16),
        num_classes=3,
    )
    mask = one_hot_encode(labels)
    assert mask.channels.dtype == np.bool_
    assert mask.num_classes == 3
    assert np.array_equal(np.argmax(mask.channels, axis=0), labels.labels)
    # exactly one channel set per voxel
    assert np.array_equal(mask.channels.sum(axis=0), np.ones((6, 5, 4), dtype=np.int64))


def test_one_hot_mask_rejects_multi_hot():
    vals = np.zeros((3, 2, 2, 2), dtype=bool)
    vals[0] = True
    vals[1, 0, 0, 0] = True
    with pytest.raises(ValueError, match="exactly one hot"):
        OneHotMask(geom((2, 2, 2)), vals)


def test_one_hot_mask_rejects_all_zero_voxel():
    vals = np.zeros((3, 2, 2, 2), dtype=bool)
    vals[1] = True
    vals[1, 1, 1, 1] = False
    with pytest.raises(ValueError, match="exactly one hot"):
        OneHotMask(geom((2, 2, 2)), vals)


def test_label_volume_rejects_out_of_range():
    vals = np.zeros((2, 2, 2), dtype=np.uint16)
    vals[0, 0, 0] = 3
    with pytest.raises(ValueError):
        LabelVolume(geom((2, 2, 2)), vals, num_classes=3)


def test_label_volume_rejects_non_integral():
    with pytest.raises(ValueError):
        LabelVolume(geom((2, 2, 2)), np.zeros((2, 2, 2)), num_classes=3)


def test_probability_field_checks_channel_sums():
    vals = np.full((3, 2, 2, 2), 0.4)
    with pytest.raises(ValueError, match="sum to 1"):
        ProbabilityField(geom((2, 2, 2)), vals)
    # logits carry no sum constraint
    ProbabilityField(geom((2, 2, 2)), vals, kind="logits")


def test_probability_field_rejects_out_of_range_values():
    vals = np.zeros((2, 2, 2, 2))
    vals[0] = 1.2
    vals[1] = -0.2
    with pytest.raises(ValueError):
        ProbabilityField(geom((2, 2, 2)), vals)


def test_probability_field_rejects_unknown_kind():
    vals = np.full((2, 1, 1, 1), 0.5)
    with pytest.raises(ValueError):
        ProbabilityField(geom((1, 1, 1)), vals, kind="scores")


def test_stored_arrays_are_read_only():
    labels = LabelVolume(geom((2, 2, 2)), np.zeros((2, 2, 2), dtype=np.uint16))
    with pytest.raises((ValueError, RuntimeError)):
        labels.labels[0, 0, 0] = 1


def test_geometry_shape_mismatch_is_rejected():
    with pytest.raises(ConsistencyError):
        LabelVolume(geom((2, 2, 2)), np.zeros((2, 2, 3), dtype=np.uint16))
