"""Synthetic plain-weave stacks with known geometry.

Generates idealized woven layers on a voxel grid: weft yarns run along y,
fill yarns along x, both with elliptical cross sections and sinusoidal
centerlines that alternate over/under at each crossing. Layers repeat at a
pitch of layer_thickness - interpenetration, so the true nesting factor of
a generated stack is known in closed form and downstream estimators can be
checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DEFAULT_VOXEL_PITCH_MM, GridGeometry, LabelVolume

DEFAULT_YARN_SPACING_MM = 1.4286  # 7 threads per cm
DEFAULT_LAYER_THICKNESS_MM = 0.38


@dataclass(frozen=True)
class WeaveSpec:
    """Geometry of a stacked plain weave. All lengths in mm."""

    yarn_spacing: float = DEFAULT_YARN_SPACING_MM
    layer_thickness: float = DEFAULT_LAYER_THICKNESS_MM
    yarn_width: float = 0.9 * DEFAULT_YARN_SPACING_MM
    yarn_height: float = 0.5 * DEFAULT_LAYER_THICKNESS_MM
    ondulation_amplitude: float = 0.25 * DEFAULT_LAYER_THICKNESS_MM
    layers: int = 1
    interpenetration: float = 0.0
    layer_offsets: tuple[tuple[float, float], ...] | None = None
    voxel_pitch: float = DEFAULT_VOXEL_PITCH_MM

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        for name in ("yarn_spacing", "layer_thickness", "yarn_width", "yarn_height",
                     "voxel_pitch"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        if self.ondulation_amplitude < 0:
            raise ValueError("ondulation amplitude must be >= 0")
        if self.yarn_width > self.yarn_spacing:
            raise ValueError(
                f"yarn width {self.yarn_width} must not exceed spacing {self.yarn_spacing}"
            )
        if self.yarn_height > self.layer_thickness:
            raise ValueError(
                f"yarn height {self.yarn_height} must not exceed "
                f"layer thickness {self.layer_thickness}"
            )
        if not 0.0 <= self.interpenetration < self.layer_thickness:
            raise ValueError(
                f"interpenetration must lie in [0, layer thickness), got {self.interpenetration}"
            )
        if self.layer_offsets is not None:
            offs = tuple((float(dy), float(dx)) for dy, dx in self.layer_offsets)
            if len(offs) != self.layers:
                raise ValueError(
                    f"{len(offs)} layer offsets for {self.layers} layers"
                )
            object.__setattr__(self, "layer_offsets", offs)

    @property
    def layer_pitch(self) -> float:
        return self.layer_thickness - self.interpenetration

    @property
    def stack_extent(self) -> float:
        return self.layers * self.layer_thickness - (self.layers - 1) * self.interpenetration

    def offsets(self) -> tuple[tuple[float, float], ...]:
        if self.layer_offsets is None:
            return ((0.0, 0.0),) * self.layers
        return self.layer_offsets


def nesting_ground_truth(spec: WeaveSpec) -> float:
    """Exact nesting factor of a generated stack: extent over n * thickness."""
    return spec.stack_extent / (spec.layers * spec.layer_thickness)


def _folded_distance(coord: np.ndarray, center: float, period: float) -> np.ndarray:
    """Distance from coord to the nearest periodic image of center."""
    d = np.abs(np.mod(coord - center, period))
    return np.minimum(d, period - d)


def generate_plain_weave(spec: WeaveSpec, out_shape) -> LabelVolume:
    """Voxelize a stacked plain weave; 0 matrix, 1 weft (y), 2 fill (x).

    Voxels are classified at their centre points. The weave is periodic in
    x and y with period 2 * yarn_spacing; where the two yarn systems would
    overlap, the voxel goes to the system whose centerline is nearer in the
    normalized elliptical metric. The stack is centred along z.
    """
    shape = tuple(int(n) for n in out_shape)
    if len(shape) != 3 or any(n < 1 for n in shape):
        raise ValueError(f"out_shape must be three positive extents, got {out_shape}")
    nz, ny, nx = shape
    pitch = spec.voxel_pitch
    s = spec.yarn_spacing
    period = 2.0 * s
    half_w = 0.5 * spec.yarn_width
    half_h = 0.5 * spec.yarn_height
    amp = spec.ondulation_amplitude

    extent = (nz * pitch, ny * pitch, nx * pitch)
    if extent[1] < period or extent[2] < period:
        raise ValueError(
            f"volume cross-section {extent[1]:.4f} x {extent[2]:.4f} mm cannot hold "
            f"one weave cell of {period:.4f} mm"
        )
    if extent[0] < spec.stack_extent:
        raise ValueError(
            f"volume height {extent[0]:.4f} mm cannot hold the "
            f"stack of {spec.stack_extent:.4f} mm"
        )

    z = (np.arange(nz, dtype=np.float64) + 0.5) * pitch
    y = (np.arange(ny, dtype=np.float64) + 0.5) * pitch
    x = (np.arange(nx, dtype=np.float64) + 0.5) * pitch

    z0 = 0.5 * (extent[0] - spec.stack_extent)
    labels = np.zeros(shape, dtype=np.uint16)
    best = np.full(shape, np.inf, dtype=np.float64)

    reach = half_h + amp + pitch
    for k, (off_y, off_x) in enumerate(spec.offsets()):
        zc = z0 + k * spec.layer_pitch + 0.5 * spec.layer_thickness
        band = np.nonzero(np.abs(z - zc) <= reach)[0]
        if band.size == 0:
            continue
        zs = z[band][:, None, None]
        sl = (slice(band[0], band[-1] + 1), slice(None), slice(None))
        best_sl = best[sl]
        labels_sl = labels[sl]

        # fold coordinates into one weave cell before the sine so the grid
        # pattern repeats exactly, not just to roundoff
        weft_phase = np.sin(np.pi * np.mod(y - off_y, period) / s)[None, :, None]
        fill_phase = np.sin(np.pi * np.mod(x - off_x, period) / s)[None, None, :]

        # two yarns per family per cell, opposite ondulation phase
        for m, sign in ((0, 1.0), (1, -1.0)):
            center = (m + 0.5) * s
            dx = _folded_distance(x, center + off_x, period)[None, None, :]
            dz = zs - (zc + sign * amp * weft_phase)
            d2 = (dx / half_w) ** 2 + (dz / half_h) ** 2
            hit = (d2 <= 1.0) & (d2 < best_sl)
            labels_sl[hit] = 1
            best_sl[hit] = d2[hit]

        for m, sign in ((0, 1.0), (1, -1.0)):
            center = (m + 0.5) * s
            dy = _folded_distance(y, center + off_y, period)[None, :, None]
            dz = zs - (zc - sign * amp * fill_phase)
            d2 = (dy / half_w) ** 2 + (dz / half_h) ** 2
            hit = (d2 <= 1.0) & (d2 < best_sl)
            labels_sl[hit] = 2
            best_sl[hit] = d2[hit]

    geometry = GridGeometry.isotropic(shape, pitch)
    return LabelVolume(geometry, labels, num_classes=3)


def random_layer_offsets(spec: WeaveSpec, jitter_mm: float, seed: int) -> WeaveSpec:
    """Replace the layer offsets with uniform random in-plane shifts.

    jitter_mm bounds |dy| and |dx| per layer; the draw is reproducible from
    the seed.
    """
    if jitter_mm < 0:
        raise ValueError(f"jitter must be >= 0, got {jitter_mm}")
    rng = np.random.default_rng(seed)
    offs = tuple(
        (float(dy), float(dx))
        for dy, dx in rng.uniform(-jitter_mm, jitter_mm, size=(spec.layers, 2))
    )
    from dataclasses import replace
    return replace(spec, layer_offsets=offs)
