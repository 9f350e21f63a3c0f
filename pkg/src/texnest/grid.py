"""Core voxel-grid types and per-voxel classification transforms.

Conventions used everywhere in the package:

* spatial arrays are indexed (z, y, x); channel arrays are (c, z, y, x)
* class 0 is matrix/background, class 1 is weft, class 2 is fill
* arrays held by the container types are frozen after construction
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError

# reconstructed voxel edge length of the reference scans, isotropic
DEFAULT_VOXEL_PITCH_MM = 0.02022

CLASS_MATRIX = 0
CLASS_WEFT = 1
CLASS_FILL = 2

# per-voxel probability vectors may drift this far from summing to one
PROB_SUM_TOL = 1e-6


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridGeometry:
    """Shape and physical voxel spacing of a 3-D grid.

    shape is (nz, ny, nx) voxels, spacing is (sz, sy, sx) in mm.
    """

    shape: tuple[int, int, int]
    spacing: tuple[float, float, float] = (
        DEFAULT_VOXEL_PITCH_MM,
        DEFAULT_VOXEL_PITCH_MM,
        DEFAULT_VOXEL_PITCH_MM,
    )

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        spacing = tuple(float(s) for s in self.spacing)
        if len(shape) != 3 or any(n < 1 for n in shape):
            raise ValueError(f"shape must be three positive extents, got {self.shape}")
        if len(spacing) != 3 or any(not np.isfinite(s) or s <= 0 for s in spacing):
            raise ValueError(f"spacing must be three positive lengths, got {self.spacing}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)

    @classmethod
    def isotropic(cls, shape, pitch_mm: float = DEFAULT_VOXEL_PITCH_MM) -> "GridGeometry":
        return cls(tuple(shape), (pitch_mm, pitch_mm, pitch_mm))

    @property
    def voxel_count(self) -> int:
        nz, ny, nx = self.shape
        return nz * ny * nx

    def extent_mm(self) -> tuple[float, float, float]:
        return tuple(n * s for n, s in zip(self.shape, self.spacing))


def _check_grid_shape(geometry: GridGeometry, arr: np.ndarray, what: str):
    if arr.shape[-3:] != geometry.shape:
        raise ConsistencyError(
            f"{what} shape {arr.shape} does not match geometry {geometry.shape}"
        )


@dataclass(frozen=True)
class LabelVolume:
    """Per-voxel integer class ids on a grid."""

    geometry: GridGeometry
    labels: np.ndarray
    num_classes: int = 3

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 3:
            raise ValueError(f"labels must be 3-D, got ndim={labels.ndim}")
        _check_grid_shape(self.geometry, labels, "labels")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValueError(f"labels must be integral, got dtype={labels.dtype}")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if labels.size:
            lo, hi = int(labels.min()), int(labels.max())
            if lo < 0 or hi >= self.num_classes:
                raise ValueError(
                    f"labels must lie in [0, {self.num_classes}), found range [{lo}, {hi}]"
                )
        object.__setattr__(self, "labels", _freeze(labels))


@dataclass(frozen=True)
class OneHotMask:
    """Binary indicator channels, one per class, exactly one hot per voxel."""

    geometry: GridGeometry
    channels: np.ndarray

    def __post_init__(self):
        ch = np.asarray(self.channels)
        if ch.ndim != 4:
            raise ValueError(f"channels must be (c, z, y, x), got ndim={ch.ndim}")
        _check_grid_shape(self.geometry, ch, "mask channels")
        vals = np.unique(ch)
        if not np.isin(vals, (0, 1)).all():
            raise ValueError("mask channels must be binary")
        if ch.dtype != np.bool_:
            ch = ch.astype(np.bool_)
        hot = ch.sum(axis=0, dtype=np.int64)
        if hot.size and ((hot != 1).any()):
            bad = tuple(int(i) for i in np.argwhere(hot != 1)[0])
            raise ValueError(f"every voxel needs exactly one hot channel, first violation at {bad}")
        object.__setattr__(self, "channels", _freeze(ch))

    @property
    def num_classes(self) -> int:
        return self.channels.shape[0]


@dataclass(frozen=True)
class ProbabilityField:
    """Per-voxel class scores: raw logits or normalized probabilities."""

    geometry: GridGeometry
    channels: np.ndarray
    kind: str = "probabilities"

    def __post_init__(self):
        if self.kind not in ("logits", "probabilities"):
            raise ValueError(f"kind must be 'logits' or 'probabilities', got {self.kind!r}")
        ch = np.asarray(self.channels)
        if ch.ndim != 4:
            raise ValueError(f"channels must be (c, z, y, x), got ndim={ch.ndim}")
        _check_grid_shape(self.geometry, ch, "score channels")
        if self.kind == "probabilities":
            if ch.size and (not np.isfinite(ch).all()):
                raise ValueError("probabilities must be finite")
            if ch.size and ((ch < 0).any() or (ch > 1).any()):
                raise ValueError("probabilities must lie in [0, 1]")
            sums = ch.sum(axis=0, dtype=np.float64)
            if sums.size and (np.abs(sums - 1.0) > PROB_SUM_TOL).any():
                bad = tuple(int(i) for i in np.argwhere(np.abs(sums - 1.0) > PROB_SUM_TOL)[0])
                raise ValueError(
                    f"per-voxel probabilities must sum to 1 within {PROB_SUM_TOL}, "
                    f"first violation at {bad}"
                )
        object.__setattr__(self, "channels", _freeze(ch))

    @property
    def num_classes(self) -> int:
        return self.channels.shape[0]


def softmax_field(logits: ProbabilityField) -> ProbabilityField:
    """Normalize logits to per-voxel class probabilities.

    The exponential is shifted by the per-voxel maximum so arbitrarily large
    logits cannot overflow. Adding a constant to every channel of a voxel
    leaves the result unchanged.
    """
    if logits.kind != "logits":
        raise ValueError(f"softmax_field expects logits, got kind={logits.kind!r}")
    x = np.asarray(logits.channels, dtype=np.float64)
    if x.size and not np.isfinite(x).all():
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(x))[0])
        raise ValueError(f"logits must be finite, first non-finite entry at {bad}")
    shifted = x - x.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=0, keepdims=True)
    return ProbabilityField(logits.geometry, p, kind="probabilities")


def argmax_decode(scores: ProbabilityField) -> LabelVolume:
    """Pick the highest-scoring class per voxel; ties go to the lowest index."""
    ch = scores.channels
    labels = np.argmax(ch, axis=0).astype(np.uint16)
    return LabelVolume(scores.geometry, labels, num_classes=ch.shape[0])


def one_hot_encode(volume: LabelVolume) -> OneHotMask:
    """Expand integer labels into binary indicator channels."""
    c = volume.num_classes
    ids = np.arange(c, dtype=volume.labels.dtype).reshape(c, 1, 1, 1)
    channels = volume.labels[np.newaxis, ...] == ids
    return OneHotMask(volume.geometry, channels)
