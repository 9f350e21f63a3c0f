"""Two-point statistics of binary class indicators.

The central quantity is the two-point probability S2(r): the chance that a
voxel at x and the voxel at x + r both belong to the same class, averaged
over x. Its zero-lag value is the class volume fraction and its off-centre
peaks expose periodic structure such as ply stacking.

Two implementations are kept deliberately separate: `s2_fft` is the fast
production path built on FFTs, `s2_brute` is a direct lag-loop used as an
independent check. Do not fold one into the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import ConsistencyError
from .grid import GridGeometry, OneHotMask
from .nesting import Spectrum1D

# direct-sum path refuses anything larger than this many voxels
BRUTE_FORCE_VOXEL_LIMIT = 32 ** 3

_AXES = {"z": 0, "y": 1, "x": 2}


@dataclass(frozen=True)
class CorrelationField:
    """S2 sampled on a lag grid, zero lag at index n//2 per axis."""

    geometry: GridGeometry
    values: np.ndarray
    source_class: int = -1

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 3:
            raise ValueError(f"correlation values must be 3-D, got ndim={vals.ndim}")
        if vals.shape != self.geometry.shape:
            raise ConsistencyError(
                f"values shape {vals.shape} does not match geometry {self.geometry.shape}"
            )
        if not np.isfinite(vals).all():
            raise ValueError("correlation values must be finite")
        object.__setattr__(self, "values", vals)
        vals.setflags(write=False)

    @property
    def center(self) -> tuple[int, int, int]:
        return tuple(n // 2 for n in self.geometry.shape)

    @property
    def zero_lag(self) -> float:
        return float(self.values[self.center])

    def check(self, *, bounded: bool = True, atol: float = 1e-10):
        """Assert centrosymmetry and, optionally, the 0 <= S2 <= S2(0) bound.

        The bound holds for periodic and plain windowed estimates; the
        overlap-corrected estimate can legitimately exceed S2(0) at sparse
        lags, so callers disable it there.
        """
        v = self.values
        if np.abs(v - _negate_lags(v)).max() > atol:
            raise ValueError("correlation field is not centrosymmetric")
        if bounded:
            s0 = self.zero_lag
            if (v < -1e-12).any() or (v > s0 + 1e-12).any():
                raise ValueError("correlation values must stay within [0, S2(0)]")


@dataclass(frozen=True)
class DescriptorSet:
    """Volume fractions plus optional per-class correlation fields."""

    fractions: np.ndarray
    correlations: dict[int, CorrelationField]

    def __post_init__(self):
        fr = np.asarray(self.fractions, dtype=np.float64)
        if fr.ndim != 1:
            raise ValueError("fractions must be a 1-D array")
        object.__setattr__(self, "fractions", fr)
        fr.setflags(write=False)


def _negate_lags(values: np.ndarray) -> np.ndarray:
    """Map S2(r) to S2(-r) on a centred lag grid."""
    out = values
    for ax, n in enumerate(values.shape):
        out = np.flip(out, axis=ax)
        if n % 2 == 0:
            out = np.roll(out, 1, axis=ax)
    return out


def _as_indicator(channel) -> np.ndarray:
    a = np.asarray(channel)
    if a.ndim != 3:
        raise ValueError(f"indicator grid must be 3-D, got ndim={a.ndim}")
    if a.dtype == np.bool_:
        return a.astype(np.float64)
    vals = np.unique(a)
    if not np.isin(vals, (0, 1)).all():
        raise ValueError("indicator grid must contain only 0 and 1")
    return a.astype(np.float64)


def volume_fractions(mask: OneHotMask) -> np.ndarray:
    """Per-class share of the voxel count; sums to one."""
    c = mask.num_classes
    return mask.channels.reshape(c, -1).mean(axis=1, dtype=np.float64)


def _correlation_geometry(geometry: GridGeometry, shape) -> GridGeometry:
    return GridGeometry(tuple(shape), geometry.spacing)


def s2_fft(channel, spacing=None, *, periodic: bool = True, unbiased: bool = False,
           source_class: int = -1, workers: int | None = None) -> CorrelationField:
    """Two-point probability of a binary indicator grid via FFT autocorrelation.

    Periodic mode treats the volume as wrapping and returns a field of the
    input shape. Non-periodic mode zero-pads to at least double size per
    axis, so no wrap-around contributions survive, and returns the full
    (2n-1) lag support; by default each lag is divided by the full voxel
    count (windowed estimate), with `unbiased` it is divided by the number
    of voxel pairs that actually overlap at that lag.

    In both modes the result is shifted so zero lag sits at index n//2 per
    axis, symmetrized by averaging S2(r) with S2(-r), and satisfies
    S2(0) = volume fraction.
    """
    m = _as_indicator(channel)
    if spacing is None:
        spacing = (1.0, 1.0, 1.0)
    elif np.isscalar(spacing):
        spacing = (float(spacing),) * 3
    geometry = GridGeometry(m.shape, tuple(spacing))
    n_total = m.size
    if n_total == 0:
        raise ValueError("indicator grid must not be empty")

    if periodic:
        spec = scipy.fft.rfftn(m, workers=workers)
        raw = scipy.fft.irfftn(spec * np.conj(spec), s=m.shape, workers=workers)
        s2 = scipy.fft.fftshift(raw) / n_total
        out_geom = geometry
    else:
        padded = [scipy.fft.next_fast_len(2 * n) for n in m.shape]
        spec = scipy.fft.rfftn(m, s=padded, workers=workers)
        raw = scipy.fft.irfftn(spec * np.conj(spec), s=padded, workers=workers)
        # crop circular lags down to the linear support -(n-1) .. n-1
        full = []
        for n, p in zip(m.shape, padded):
            idx = np.concatenate([np.arange(p - (n - 1), p), np.arange(0, n)])
            full.append(idx)
        raw = raw[np.ix_(*full)]
        if unbiased:
            counts = _overlap_counts(m.shape)
            s2 = raw / counts
        else:
            s2 = raw / n_total
        out_geom = _correlation_geometry(geometry, raw.shape)

    s2 = 0.5 * (s2 + _negate_lags(s2))
    field = CorrelationField(out_geom, s2, source_class=source_class)
    field.check(bounded=not unbiased)
    return field


def _overlap_counts(shape) -> np.ndarray:
    """Number of in-window voxel pairs per lag: separable triangles."""
    ramps = [np.asarray(n - np.abs(np.arange(-(n - 1), n)), dtype=np.float64) for n in shape]
    return ramps[0][:, None, None] * ramps[1][None, :, None] * ramps[2][None, None, :]


def s2_brute(channel, spacing=None, *, periodic: bool = True,
             unbiased: bool = False, source_class: int = -1) -> CorrelationField:
    """Direct-sum S2 for small grids; the oracle for `s2_fft`.

    Periodic mode evaluates every torus lag with explicit rolls; non-periodic
    mode restricts each lag to the overlapping sub-window. Refuses grids
    larger than 32^3 voxels.
    """
    m = _as_indicator(channel)
    if spacing is None:
        spacing = (1.0, 1.0, 1.0)
    elif np.isscalar(spacing):
        spacing = (float(spacing),) * 3
    geometry = GridGeometry(m.shape, tuple(spacing))
    if m.size > BRUTE_FORCE_VOXEL_LIMIT:
        raise ValueError(
            f"direct sum limited to {BRUTE_FORCE_VOXEL_LIMIT} voxels, got {m.size}"
        )
    nz, ny, nx = m.shape
    n_total = m.size

    if periodic:
        s2 = np.empty(m.shape, dtype=np.float64)
        for rz in range(nz):
            for ry in range(ny):
                for rx in range(nx):
                    shifted = np.roll(m, (rz, ry, rx), axis=(0, 1, 2))
                    s2[rz, ry, rx] = float((m * shifted).sum()) / n_total
        s2 = scipy.fft.fftshift(s2)
        out_geom = geometry
    else:
        dims = (2 * nz - 1, 2 * ny - 1, 2 * nx - 1)
        s2 = np.empty(dims, dtype=np.float64)
        for iz, rz in enumerate(range(-(nz - 1), nz)):
            az, bz = _overlap_slices(nz, rz)
            for iy, ry in enumerate(range(-(ny - 1), ny)):
                ay, by = _overlap_slices(ny, ry)
                for ix, rx in enumerate(range(-(nx - 1), nx)):
                    ax, bx = _overlap_slices(nx, rx)
                    total = float((m[az, ay, ax] * m[bz, by, bx]).sum())
                    if unbiased:
                        pairs = ((nz - abs(rz)) * (ny - abs(ry)) * (nx - abs(rx)))
                        s2[iz, iy, ix] = total / pairs
                    else:
                        s2[iz, iy, ix] = total / n_total
        out_geom = _correlation_geometry(geometry, dims)

    s2 = 0.5 * (s2 + _negate_lags(s2))
    field = CorrelationField(out_geom, s2, source_class=source_class)
    field.check(bounded=not unbiased)
    return field


def _overlap_slices(n: int, r: int) -> tuple[slice, slice]:
    """Index ranges of x and x+r with both inside [0, n)."""
    if r >= 0:
        return slice(0, n - r), slice(r, n)
    return slice(-r, n), slice(0, n + r)


def class_correlation(mask: OneHotMask, cls: int, *, periodic: bool = True,
                      unbiased: bool = False, workers: int | None = None) -> CorrelationField:
    """S2 of one class channel of a one-hot mask, with physical spacing."""
    if not 0 <= cls < mask.num_classes:
        raise ValueError(f"class {cls} out of range for {mask.num_classes} channels")
    return s2_fft(mask.channels[cls], mask.geometry.spacing,
                  periodic=periodic, unbiased=unbiased,
                  source_class=cls, workers=workers)


def descriptor_set(mask: OneHotMask, classes=None, *, periodic: bool = True,
                   workers: int | None = None) -> DescriptorSet:
    """Volume fractions plus S2 fields for the requested classes."""
    if classes is None:
        classes = range(mask.num_classes)
    corr = {int(c): class_correlation(mask, int(c), periodic=periodic, workers=workers)
            for c in classes}
    return DescriptorSet(volume_fractions(mask), corr)


def descriptor_mse(a: CorrelationField, b: CorrelationField) -> float:
    """Mean squared difference of two correlation fields of equal shape."""
    if a.values.shape != b.values.shape:
        raise ConsistencyError(
            f"correlation shapes differ: {a.values.shape} vs {b.values.shape}"
        )
    diff = a.values - b.values
    return float(np.mean(diff * diff))


def axis_spectrum(field: CorrelationField, axis: str = "z") -> Spectrum1D:
    """1-D line through the zero-lag centre of a correlation field.

    Lags are physical (mm), signed, and include 0 exactly at the centre
    sample. The spectrum keeps the voxel pitch of the chosen axis.
    """
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {sorted(_AXES)}, got {axis!r}")
    ax = _AXES[axis]
    center = field.center
    picker = list(center)
    picker[ax] = slice(None)
    line = field.values[tuple(picker)]
    pitch = field.geometry.spacing[ax]
    n = field.geometry.shape[ax]
    lags = (np.arange(n) - n // 2) * pitch
    return Spectrum1D(lags, line, pitch)
