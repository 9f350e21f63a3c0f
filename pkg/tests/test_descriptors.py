import numpy as np
import pytest

from texnest import (
    ConsistencyError,
    CorrelationField,
    GridGeometry,
    LabelVolume,
    axis_spectrum,
    class_correlation,
    descriptor_mse,
    descriptor_set,
    one_hot_encode,
    s2_brute,
    s2_fft,
    volume_fractions,
)
from texnest.descriptors import BRUTE_FORCE_VOXEL_LIMIT

from oracles import two_pass_mse


def random_indicator(rng, shape, fill=0.5):
    return (rng.random(shape) < fill).astype(np.uint8)


def test_all_ones_volume_correlates_to_one_everywhere():
    m = np.ones((4, 4, 4), dtype=np.uint8)
    field = s2_fft(m)
    assert np.allclose(field.values, 1.0, rtol=0, atol=1e-12)
    assert field.zero_lag == pytest.approx(1.0, abs=1e-12)


def test_single_voxel_correlation():
    m = np.zeros((8, 8, 8), dtype=np.uint8)
    m[3, 5, 2] = 1
    field = s2_fft(m)
    assert field.values[field.center] == pytest.approx(1.0 / 512.0, abs=1e-15)
    rest = field.values.copy()
    rest[field.center] = 0.0
    assert np.abs(rest).max() < 1e-14


def test_alternating_stripe_spectrum():
    m = np.array([1, 0, 1, 0, 1, 0], dtype=np.uint8).reshape(6, 1, 1)
    field = s2_fft(m)
    # zero lag sits at index 3, so rows run over lags -3..2
    expected = np.array([0.0, 0.5, 0.0, 0.5, 0.0, 0.5]).reshape(6, 1, 1)
    assert np.allclose(field.values, expected, rtol=0, atol=1e-12)


def test_brute_force_all_ones():
    m = np.ones((2, 2, 2), dtype=np.uint8)
    field = s2_brute(m)
    assert np.allclose(field.values, 1.0, rtol=0, atol=1e-15)


def test_fft_matches_brute_force_periodic():
    rng = np.random.default_rng(31)
    for _ in range(3):
        m = random_indicator(rng, (12, 12, 12))
        fast = s2_fft(m)
        slow = s2_brute(m)
        assert np.abs(fast.values - slow.values).max() < 1e-10


def test_fft_matches_brute_force_aperiodic():
    rng = np.random.default_rng(32)
    for shape in ((8, 8, 8), (8, 7, 6), (5, 9, 4)):
        m = random_indicator(rng, shape)
        fast = s2_fft(m, periodic=False)
        slow = s2_brute(m, periodic=False)
        assert fast.values.shape == tuple(2 * n - 1 for n in shape)
        assert np.abs(fast.values - slow.values).max() < 1e-10


def test_fft_matches_brute_force_overlap_corrected():
    rng = np.random.default_rng(33)
    for shape in ((8, 8, 8), (6, 5, 7)):
        m = random_indicator(rng, shape)
        fast = s2_fft(m, periodic=False, unbiased=True)
        slow = s2_brute(m, periodic=False, unbiased=True)
        assert np.abs(fast.values - slow.values).max() < 1e-10


def test_periodic_translation_invariance():
    rng = np.random.default_rng(34)
    m = random_indicator(rng, (9, 8, 7))
    base = s2_fft(m)
    rolled = s2_fft(np.roll(m, (3, 5, 2), axis=(0, 1, 2)))
    assert np.abs(base.values - rolled.values).max() < 1e-12


def test_zero_lag_equals_volume_fraction():
    rng = np.random.default_rng(35)
    for fill in (0.1, 0.5, 0.9):
        m = random_indicator(rng, (10, 9, 8), fill)
        phi = m.mean()
        for field in (s2_fft(m), s2_fft(m, periodic=False), s2_fft(m, periodic=False, unbiased=True)):
            assert abs(field.zero_lag - phi) < 1e-12
        assert abs(s2_brute(m).zero_lag - phi) < 1e-12


def test_correlation_field_is_centrosymmetric_and_bounded():
    rng = np.random.default_rng(36)
    for shape in ((8, 8, 8), (9, 8, 7), (6, 6, 6)):
        m = random_indicator(rng, shape)
        field = s2_fft(m)
        field.check()  # raises on violation
        assert field.values.min() >= -1e-12
        assert field.values.max() <= field.zero_lag + 1e-12


def test_overlap_corrected_estimate_may_exceed_zero_lag():
    # two occupied corners of a 3-voxel line: every lag-2 pair is occupied
    m = np.array([1, 0, 1], dtype=np.uint8).reshape(3, 1, 1)
    field = s2_fft(m, periodic=False, unbiased=True)
    assert field.zero_lag == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert field.values.max() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError, match="S2"):
        field.check(bounded=True)


def test_windowed_estimate_of_same_volume_stays_bounded():
    m = np.array([1, 0, 1], dtype=np.uint8).reshape(3, 1, 1)
    field = s2_fft(m, periodic=False)
    field.check(bounded=True)
    # lag 2 sees one pair out of three voxels
    assert field.values.max() == pytest.approx(field.zero_lag, abs=1e-15)


def test_rejects_non_binary_input():
    m = np.full((3, 3, 3), 0.5)
    with pytest.raises(ValueError, match="0 and 1"):
        s2_fft(m)
    with pytest.raises(ValueError, match="0 and 1"):
        s2_brute(m)


def test_brute_force_refuses_large_grids():
    m = np.zeros((33, 33, 33), dtype=np.uint8)
    assert m.size > BRUTE_FORCE_VOXEL_LIMIT
    with pytest.raises(ValueError, match="direct sum"):
        s2_brute(m)


def test_volume_fractions_sum_to_one():
    rng = np.random.default_rng(37)
    labels = LabelVolume(
        GridGeometry.isotropic((8, 8, 8)),
        rng.integers(0, 3, size=(8, 8, 8)).astype(np.uint16),
    )
    mask = one_hot_encode(labels)
    fr = volume_fractions(mask)
    assert fr.shape == (3,)
    assert fr.sum() == pytest.approx(1.0, abs=1e-15)
    for c in range(3):
        assert fr[c] == pytest.approx((labels.labels == c).mean(), abs=1e-15)


def test_class_correlation_carries_spacing_and_class():
    rng = np.random.default_rng(38)
    labels = LabelVolume(
        GridGeometry.isotropic((6, 6, 6), 0.5),
        rng.integers(0, 3, size=(6, 6, 6)).astype(np.uint16),
    )
    mask = one_hot_encode(labels)
    field = class_correlation(mask, 1)
    assert field.source_class == 1
    assert field.geometry.spacing == (0.5, 0.5, 0.5)
    assert field.zero_lag == pytest.approx((labels.labels == 1).mean(), abs=1e-12)
    with pytest.raises(ValueError):
        class_correlation(mask, 3)


def test_descriptor_set_covers_requested_classes():
    rng = np.random.default_rng(39)
    labels = LabelVolume(
        GridGeometry.isotropic((6, 6, 6)),
        rng.integers(0, 3, size=(6, 6, 6)).astype(np.uint16),
    )
    mask = one_hot_encode(labels)
    full = descriptor_set(mask)
    assert sorted(full.correlations) == [0, 1, 2]
    some = descriptor_set(mask, classes=(2,))
    assert sorted(some.correlations) == [2]
    assert some.correlations[2].source_class == 2


def test_descriptor_mse_identical_fields_is_zero():
    m = np.ones((4, 4, 4), dtype=np.uint8)
    assert descriptor_mse(s2_fft(m), s2_fft(m)) == 0.0


def test_descriptor_mse_constant_offset():
    geometry = GridGeometry.isotropic((3, 3, 3))
    a = CorrelationField(geometry, np.full((3, 3, 3), 0.5))
    b = CorrelationField(geometry, np.full((3, 3, 3), 0.4))
    assert descriptor_mse(a, b) == pytest.approx(0.01, abs=1e-15)


def test_descriptor_mse_matches_elementwise_oracle():
    rng = np.random.default_rng(40)
    a = s2_fft(random_indicator(rng, (6, 6, 6)))
    b = s2_fft(random_indicator(rng, (6, 6, 6)))
    assert descriptor_mse(a, b) == pytest.approx(
        two_pass_mse(a.values, b.values), abs=1e-15
    )


def test_descriptor_mse_rejects_shape_mismatch():
    a = s2_fft(np.ones((4, 4, 4), dtype=np.uint8))
    b = s2_fft(np.ones((5, 4, 4), dtype=np.uint8))
    with pytest.raises(ConsistencyError):
        descriptor_mse(a, b)


def test_axis_spectrum_center_and_symmetry():
    rng = np.random.default_rng(41)
    m = random_indicator(rng, (10, 8, 6))
    field = s2_fft(m, spacing=0.02022)
    spec = axis_spectrum(field, "z")
    assert len(spec) == 10
    center = 5
    assert spec.lags_mm[center] == 0.0
    assert spec.values[center] == pytest.approx(field.zero_lag, abs=1e-15)
    assert np.allclose(np.diff(spec.lags_mm), 0.02022, rtol=0, atol=1e-15)
    # even-length symmetric support: lag -k mirrors lag +k where both exist
    for k in range(1, 5):
        assert spec.values[center - k] == pytest.approx(spec.values[center + k], abs=1e-10)


def test_axis_spectrum_finds_layer_period():
    # stripes of period 5 along z, exactly four repeats
    z = np.arange(20).reshape(20, 1, 1)
    m = ((z % 5) < 2).astype(np.uint8) * np.ones((1, 6, 6), dtype=np.uint8)
    field = s2_fft(m)
    spec = axis_spectrum(field, "z")
    phi = m.mean()
    center = 10
    # a commensurate periodic structure repeats exactly at multiples of its pitch
    assert spec.values[center] == pytest.approx(phi, abs=1e-12)
    assert spec.values[center + 5] == pytest.approx(phi, abs=1e-12)
    assert spec.values[center - 5] == pytest.approx(phi, abs=1e-12)
    assert spec.values[center + 4] < phi
    assert spec.values[center + 6] < phi


def test_axis_spectrum_axis_selection():
    rng = np.random.default_rng(42)
    m = random_indicator(rng, (4, 6, 8))
    field = s2_fft(m, spacing=(0.1, 0.2, 0.3))
    assert len(axis_spectrum(field, "z")) == 4
    assert len(axis_spectrum(field, "y")) == 6
    assert len(axis_spectrum(field, "x")) == 8
    assert axis_spectrum(field, "x").voxel_pitch_mm == 0.3
    with pytest.raises(ValueError):
        axis_spectrum(field, "w")


def test_correlation_rejects_empty_like_shapes():
    with pytest.raises(ValueError):
        s2_fft(np.ones((4, 4), dtype=np.uint8))
