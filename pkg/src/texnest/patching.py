"""Sliding-window tiling and seam-free reassembly of per-patch scores.

A volume too large for one inference pass is cut into overlapping patches
on a regular stride grid (with an extra flush-end patch per axis when the
stride does not land on the boundary). Patch predictions are blended back
with a separable gaussian weight window so patch centres dominate and
seams vanish.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ConsistencyError, CoverageError
from .grid import GridGeometry, ProbabilityField

DEFAULT_SIGMA_SCALE = 0.125
DEFAULT_PAD_VOXELS = 16


def _triple(value, name) -> tuple[int, int, int]:
    if np.isscalar(value):
        value = (value,) * 3
    out = tuple(int(v) for v in value)
    if len(out) != 3:
        raise ValueError(f"{name} must be a scalar or three values, got {value}")
    return out


@dataclass(frozen=True)
class PatchGrid:
    """Placement plan: every patch origin needed to cover a volume."""

    volume_shape: tuple[int, int, int]
    patch_shape: tuple[int, int, int]
    stride: tuple[int, int, int]
    offsets: tuple[tuple[int, int, int], ...]

    def __len__(self) -> int:
        return len(self.offsets)

    @property
    def overlap(self) -> tuple[int, int, int]:
        return tuple(p - s for p, s in zip(self.patch_shape, self.stride))


def _axis_offsets(dim: int, patch: int, stride: int) -> list[int]:
    offsets = list(range(0, dim - patch + 1, stride))
    if offsets[-1] != dim - patch:
        offsets.append(dim - patch)
    return offsets


def patch_grid(volume_shape, patch_shape, stride) -> PatchGrid:
    """Regular stride offsets per axis plus a flush-end offset when needed.

    Offsets are ordered z-major, and every voxel of the volume is covered
    by at least one patch.
    """
    vol = _triple(volume_shape, "volume_shape")
    patch = _triple(patch_shape, "patch_shape")
    step = _triple(stride, "stride")
    if any(p < 1 for p in patch) or any(s < 1 for s in step):
        raise ValueError(f"patch {patch} and stride {step} must be positive")
    if any(p > d for p, d in zip(patch, vol)):
        raise ValueError(f"patch {patch} does not fit inside volume {vol}")

    per_axis = [_axis_offsets(d, p, s) for d, p, s in zip(vol, patch, step)]
    offsets = tuple(product(*per_axis))
    return PatchGrid(vol, patch, step, offsets)


def mirror_pad(grid: np.ndarray, width) -> np.ndarray:
    """Pad by reflecting about the boundary sample, edge not repeated.

    [1, 2, 3] padded by 2 becomes [3, 2, 1, 2, 3, 2, 1]. The width must be
    smaller than the padded axis extent.
    """
    a = np.asarray(grid)
    if np.isscalar(width):
        widths = (int(width),) * a.ndim
    else:
        widths = tuple(int(w) for w in width)
        if len(widths) != a.ndim:
            raise ValueError(f"need one width per axis ({a.ndim}), got {width}")
    if any(w < 0 for w in widths):
        raise ValueError(f"pad widths must be >= 0, got {widths}")
    for w, n in zip(widths, a.shape):
        if w >= n:
            raise ValueError(f"pad width {w} must be smaller than the axis extent {n}")
    if all(w == 0 for w in widths):
        return a.copy()
    return np.pad(a, [(w, w) for w in widths], mode="reflect")


def gaussian_window(patch_shape, sigma_scale: float = DEFAULT_SIGMA_SCALE) -> np.ndarray:
    """Separable gaussian blend weights over a patch, 1 at the centre.

    Per axis the gaussian is centred between the middle samples and has
    sigma = sigma_scale * extent; the axis profile is rescaled so its
    maximum is exactly 1 (even extents have no sample at the true centre).
    """
    patch = _triple(patch_shape, "patch_shape")
    if any(p < 1 for p in patch):
        raise ValueError(f"patch extents must be positive, got {patch}")
    if not (np.isfinite(sigma_scale) and sigma_scale > 0):
        raise ValueError(f"sigma_scale must be positive, got {sigma_scale}")

    profiles = []
    for n in patch:
        u = np.arange(n, dtype=np.float64)
        center = 0.5 * (n - 1)
        sigma = sigma_scale * n
        w = np.exp(-((u - center) ** 2) / (2.0 * sigma * sigma))
        profiles.append(w / w.max())
    return profiles[0][:, None, None] * profiles[1][None, :, None] * profiles[2][None, None, :]


def stitch(patches, weights: np.ndarray | None, out_shape, *,
           kind: str = "probabilities", spacing=(1.0, 1.0, 1.0)) -> ProbabilityField:
    """Blend per-patch class scores into one volume.

    patches is an iterable of (offset, scores) with offset = (z, y, x) and
    scores = (c, pz, py, px); all patches share one shape, matching the
    weight grid. Every output voxel gets the weight-normalized mean of the
    patch scores covering it; a voxel no patch covers is an error. With
    kind="probabilities" the blended channels are renormalized to sum to
    one per voxel, logits are left as blended.
    """
    if kind not in ("logits", "probabilities"):
        raise ValueError(f"kind must be 'logits' or 'probabilities', got {kind!r}")
    out = _triple(out_shape, "out_shape")
    items = [(tuple(int(o) for o in off), np.asarray(s, dtype=np.float64)) for off, s in patches]
    if not items:
        raise ValueError("no patches to stitch")

    first = items[0][1]
    if first.ndim != 4:
        raise ValueError(f"patch scores must be (c, z, y, x), got ndim={first.ndim}")
    c = first.shape[0]
    pshape = first.shape[1:]
    if weights is None:
        weights = np.ones(pshape, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != pshape:
        raise ConsistencyError(
            f"weight grid {weights.shape} does not match patch shape {pshape}"
        )
    if (weights <= 0).any():
        raise ValueError("blend weights must be positive everywhere")

    for off, scores in items:
        if scores.shape != first.shape:
            raise ConsistencyError(
                f"patch at {off} has shape {scores.shape}, expected {first.shape}"
            )
        if len(off) != 3 or any(o < 0 for o in off):
            raise ValueError(f"patch offset {off} must be three non-negative indices")
        if any(o + p > d for o, p, d in zip(off, pshape, out)):
            raise ValueError(f"patch at {off} with shape {pshape} exceeds volume {out}")

    total_weight = np.zeros(out, dtype=np.float64)
    for off, _ in items:
        sl = tuple(slice(o, o + p) for o, p in zip(off, pshape))
        total_weight[sl] += weights
    if (total_weight == 0).any():
        gap = tuple(int(i) for i in np.argwhere(total_weight == 0)[0])
        raise CoverageError(f"no patch covers voxel {gap}")

    blended = np.zeros((c,) + out, dtype=np.float64)
    for off, scores in items:
        sl = tuple(slice(o, o + p) for o, p in zip(off, pshape))
        coeff = weights / total_weight[sl]
        blended[(slice(None),) + sl] += coeff * scores

    if kind == "probabilities":
        sums = blended.sum(axis=0, keepdims=True)
        if (sums <= 0).any():
            raise ValueError("blended probabilities must have positive per-voxel sums")
        blended = blended / sums

    geometry = GridGeometry(out, _triple_spacing(spacing))
    return ProbabilityField(geometry, blended, kind=kind)


def _triple_spacing(spacing) -> tuple[float, float, float]:
    if np.isscalar(spacing):
        return (float(spacing),) * 3
    out = tuple(float(s) for s in spacing)
    if len(out) != 3:
        raise ValueError(f"spacing must be a scalar or three values, got {spacing}")
    return out
