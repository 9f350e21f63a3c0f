"""Layer-spacing analysis for compacted textile stacks.

Works on a 1-D correlation spectrum taken along the stacking direction:
spline-refine it, locate the first repeat-distance peak, convert the peak
position to a physical layer thickness, and compare that against the
thickness a stack of n plies would need to fill the mold gap exactly.
A nesting factor of 1 means the plies sit at their nominal thickness;
values below 1 mean neighbouring plies have sunk into each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConsistencyError

# (g/m^2) / (g/cm^3) comes out in units of 1e-3 mm
_AREAL_OVER_DENSITY_TO_MM = 1.0e-3

# relative height at which the peak width is read off
PEAK_WIDTH_LEVEL = 0.99
# for a gaussian, the half-width at 99 % height is sigma * sqrt(-2 ln 0.99)
WIDTH_TO_SIGMA = math.sqrt(-2.0 * math.log(PEAK_WIDTH_LEVEL))

# cubic splines ring next to kinks, which shows up as humps much narrower
# than one original sample; nothing that narrow is a resolvable feature
MIN_PEAK_SIGMA_VOXELS = 0.25

DEFAULT_INTERP_FACTOR = 32


@dataclass(frozen=True)
class Spectrum1D:
    """Samples of a correlation function along one axis.

    lags_mm must be strictly increasing and contain lag 0; voxel_pitch_mm is
    the sample step of the grid the spectrum was taken from (not the step of
    a spline-refined spectrum, which keeps the original pitch).
    """

    lags_mm: np.ndarray
    values: np.ndarray
    voxel_pitch_mm: float

    def __post_init__(self):
        lags = np.asarray(self.lags_mm, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        if lags.ndim != 1 or vals.ndim != 1:
            raise ValueError("spectrum lags and values must be 1-D")
        if lags.shape != vals.shape:
            raise ConsistencyError(
                f"lags shape {lags.shape} does not match values shape {vals.shape}"
            )
        if lags.size < 1:
            raise ValueError("spectrum must contain at least one sample")
        if lags.size > 1 and not (np.diff(lags) > 0).all():
            raise ValueError("spectrum lags must be strictly increasing")
        if not (np.isfinite(lags).all() and np.isfinite(vals).all()):
            raise ValueError("spectrum samples must be finite")
        if not (np.isfinite(self.voxel_pitch_mm) and self.voxel_pitch_mm > 0):
            raise ValueError(f"voxel pitch must be positive, got {self.voxel_pitch_mm}")
        object.__setattr__(self, "lags_mm", lags)
        object.__setattr__(self, "values", vals)
        for a in (lags, vals):
            a.setflags(write=False)

    def __len__(self) -> int:
        return self.lags_mm.size


@dataclass(frozen=True)
class PeakEstimate:
    """One detected spectrum peak.

    location is the centre of the 99 %-height crossing pair (a gaussian-model
    refinement); raw_location is the plain sample argmax of the refined grid.
    sigma is the standard deviation the gaussian model assigns to location.
    """

    location_mm: float
    location_voxels: float
    raw_location_mm: float
    raw_location_voxels: float
    height: float
    sigma_mm: float
    sigma_voxels: float

    def __post_init__(self):
        if not self.height > 0:
            raise ValueError(f"peak height must be positive, got {self.height}")
        if not self.sigma_mm > 0:
            raise ValueError(f"peak sigma must be positive, got {self.sigma_mm}")


@dataclass(frozen=True)
class CompactionSpec:
    """Stack layup and mold inputs for the nesting computation."""

    layers: int
    gap_mm: float
    areal_weight_g_m2: float | None = None
    fiber_density_g_cm3: float | None = None

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        if not (np.isfinite(self.gap_mm) and self.gap_mm > 0):
            raise ValueError(f"gap must be positive, got {self.gap_mm}")


@dataclass(frozen=True)
class NestingReport:
    """Layer thickness and nesting factor with propagated uncertainties."""

    layer_thickness_mm: float
    layer_thickness_sigma_mm: float
    nesting_factor: float
    nesting_sigma: float
    spec: CompactionSpec
    peak: PeakEstimate | None = None


def laminate_thickness(layers: int, areal_weight_g_m2: float,
                       fiber_density_g_cm3: float, fvc: float) -> float:
    """Thickness in mm a stack of fabric layers needs to hit a fiber volume content.

    layers plies of areal weight rho_A (g/m^2) made from fiber of density
    rho_f (g/cm^3), compacted to fiber volume fraction fvc in (0, 1].
    """
    if layers < 1:
        raise ValueError(f"layers must be >= 1, got {layers}")
    if not (0.0 < fvc <= 1.0):
        raise ValueError(f"fiber volume content must be in (0, 1], got {fvc}")
    if areal_weight_g_m2 <= 0 or fiber_density_g_cm3 <= 0:
        raise ValueError("areal weight and fiber density must be positive")
    return layers * areal_weight_g_m2 / fiber_density_g_cm3 * _AREAL_OVER_DENSITY_TO_MM / fvc


def interpolate_spectrum(spectrum: Spectrum1D, factor: int = DEFAULT_INTERP_FACTOR) -> Spectrum1D:
    """Refine a spectrum with a natural cubic spline.

    Each original interval is split into `factor` equal steps. Original
    samples survive unchanged at every factor-th position.
    """
    if factor < 1:
        raise ValueError(f"interpolation factor must be >= 1, got {factor}")
    lags, vals = spectrum.lags_mm, spectrum.values
    if lags.size < 2:
        return Spectrum1D(lags.copy(), vals.copy(), spectrum.voxel_pitch_mm)
    if factor == 1:
        return Spectrum1D(lags.copy(), vals.copy(), spectrum.voxel_pitch_mm)
    if lags.size < 4:
        raise ValueError("spline refinement needs at least four samples")

    spline = CubicSpline(lags, vals, bc_type="natural")
    pieces = [np.linspace(lags[i], lags[i + 1], factor + 1)[:-1] for i in range(lags.size - 1)]
    fine_lags = np.concatenate(pieces + [lags[-1:]])
    fine_vals = spline(fine_lags)
    # pin the original samples exactly; spline evaluation is only ulp-exact
    fine_vals[::factor] = vals
    return Spectrum1D(fine_lags, fine_vals, spectrum.voxel_pitch_mm)


def _first_local_min(vals: np.ndarray, start: int, step: int) -> int | None:
    """Index of the first strict local minimum walking from start in direction step."""
    i = start + step
    while 0 < i < vals.size - 1:
        if vals[i] < vals[i - 1] and vals[i] < vals[i + 1]:
            return i
        i += step
    return None


def _width_crossing(lags, vals, peak_idx, target, step) -> float | None:
    """Lag where vals first drops to target walking from peak_idx in direction step.

    Linear interpolation between the bracketing samples; None when the array
    ends before the drop happens.
    """
    i = peak_idx + step
    while 0 <= i < vals.size:
        if vals[i] <= target:
            v0, v1 = vals[i - step], vals[i]
            x0, x1 = lags[i - step], lags[i]
            if v1 == v0:
                return float(x1)
            frac = (v0 - target) / (v0 - v1)
            return float(x0 + frac * (x1 - x0))
        i += step
    return None


def detect_peaks(spectrum: Spectrum1D) -> list[PeakEstimate]:
    """Find repeat-distance peaks in a (refined) symmetric spectrum.

    The dominant zero-lag peak is excluded: from the lag-0 sample the search
    walks outward to the first strict local minimum on each side and ignores
    everything in between. Remaining strict three-point local maxima become
    peaks. For each one the width at 99 % of its height gives a gaussian
    sigma (half-widths averaged where both sides are available) and the
    midpoint of the two crossings gives the refined location. Peaks that
    never drop to 99 % on either side are discarded, as are humps narrower
    than a quarter voxel, which are spline ringing next to sharp kinks rather
    than resolvable features. The result is sorted by |location| ascending,
    so index 0 holds the first repeat distance.
    """
    lags, vals = spectrum.lags_mm, spectrum.values
    if lags.size < 3:
        return []
    center = int(np.argmin(np.abs(lags)))

    lo = _first_local_min(vals, center, -1)
    hi = _first_local_min(vals, center, +1)
    # a side with no minimum is monotone: nothing to find there
    lo = lo if lo is not None else 0
    hi = hi if hi is not None else vals.size - 1

    peaks = []
    interior = (vals[1:-1] > vals[:-2]) & (vals[1:-1] > vals[2:])
    for k in np.nonzero(interior)[0] + 1:
        if lo <= k <= hi:
            continue
        height = float(vals[k])
        if height <= 0:
            continue
        target = PEAK_WIDTH_LEVEL * height
        left = _width_crossing(lags, vals, k, target, -1)
        right = _width_crossing(lags, vals, k, target, +1)
        raw_loc = float(lags[k])
        if left is not None and right is not None:
            half_widths = [raw_loc - left, right - raw_loc]
            loc = 0.5 * (left + right)
        elif left is not None:
            half_widths = [raw_loc - left]
            loc = raw_loc
        elif right is not None:
            half_widths = [right - raw_loc]
            loc = raw_loc
        else:
            continue
        mean_width = float(np.mean(half_widths))
        if mean_width <= 0:
            continue
        sigma = mean_width / WIDTH_TO_SIGMA
        pitch = spectrum.voxel_pitch_mm
        if sigma < MIN_PEAK_SIGMA_VOXELS * pitch:
            continue
        peaks.append(PeakEstimate(
            location_mm=loc,
            location_voxels=loc / pitch,
            raw_location_mm=raw_loc,
            raw_location_voxels=raw_loc / pitch,
            height=height,
            sigma_mm=sigma,
            sigma_voxels=sigma / pitch,
        ))

    peaks.sort(key=lambda p: (abs(p.location_mm), p.location_mm))
    return peaks


def layer_thickness(peak: PeakEstimate, voxel_pitch_mm: float) -> tuple[float, float]:
    """Convert a peak position to a layer thickness (mm) with its sigma."""
    if not (np.isfinite(voxel_pitch_mm) and voxel_pitch_mm > 0):
        raise ValueError(f"voxel pitch must be positive, got {voxel_pitch_mm}")
    t = abs(peak.location_voxels) * voxel_pitch_mm
    sigma_t = peak.sigma_voxels * voxel_pitch_mm
    return t, sigma_t


def nesting_factor(thickness_mm: float, thickness_sigma_mm: float,
                   spec: CompactionSpec, peak: PeakEstimate | None = None) -> NestingReport:
    """Ratio of the mold gap to the summed nominal layer thicknesses.

    The thickness uncertainty is the only error source propagated, so the
    factor's sigma scales with the relative thickness error.
    """
    if not (np.isfinite(thickness_mm) and thickness_mm > 0):
        raise ValueError(f"layer thickness must be positive, got {thickness_mm}")
    if thickness_sigma_mm < 0:
        raise ValueError("thickness sigma must be >= 0")
    factor = spec.gap_mm / (spec.layers * thickness_mm)
    sigma = factor * (thickness_sigma_mm / thickness_mm)
    return NestingReport(
        layer_thickness_mm=thickness_mm,
        layer_thickness_sigma_mm=thickness_sigma_mm,
        nesting_factor=factor,
        nesting_sigma=sigma,
        spec=spec,
        peak=peak,
    )
