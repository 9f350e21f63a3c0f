"""File formats: HDF5 sample bundles, a small NRRD subset, CSV spectra.

Disk layout convention: scalar grids are stored [x0, y0, z0] and channel
grids [c, x0, y0, z0]; in memory everything is (z, y, x) / (c, z, y, x).
The mapping is a plain axis reversal, applied symmetrically on read and
write so a round trip is voxel-exact.

Voxel spacing is never stored in the HDF5 bundles, so readers take it as a
parameter (defaulting to the scanner pitch) and NRRD is the format of
choice when spacing has to travel with the data.
"""

from __future__ import annotations

import csv
import gzip
import io as _stdio
from dataclasses import dataclass

import h5py
import numpy as np

from .errors import ConsistencyError, FormatError
from .grid import DEFAULT_VOXEL_PITCH_MM, GridGeometry, LabelVolume, OneHotMask
from .nesting import Spectrum1D

H5_DATASETS = ("volume", "labels", "masks", "instances")

_NRRD_MAGICS = ("NRRD0004", "NRRD0005")
_NRRD_TYPES = {
    "uint8": np.uint8, "uchar": np.uint8,
    "uint16": np.uint16, "ushort": np.uint16,
    "int16": np.int16, "short": np.int16,
    "uint32": np.uint32, "uint": np.uint32,
    "int32": np.int32, "int": np.int32,
    "float": np.float32, "float32": np.float32,
    "double": np.float64, "float64": np.float64,
}
_NRRD_TYPE_NAMES = {
    np.dtype(np.uint8): "uint8", np.dtype(np.uint16): "uint16",
    np.dtype(np.int16): "int16", np.dtype(np.uint32): "uint32",
    np.dtype(np.int32): "int32", np.dtype(np.float32): "float",
    np.dtype(np.float64): "double",
}


@dataclass(frozen=True)
class DatasetBundle:
    """One scanned sample: grayscale, labels, masks, instances (each optional)."""

    geometry: GridGeometry
    volume: np.ndarray | None = None
    labels: LabelVolume | None = None
    masks: OneHotMask | None = None
    instances: np.ndarray | None = None

    def __post_init__(self):
        members = (self.volume, self.labels, self.masks, self.instances)
        if all(m is None for m in members):
            raise ValueError("bundle must contain at least one dataset")
        for name, arr in (("volume", self.volume), ("instances", self.instances)):
            if arr is not None:
                a = np.asarray(arr)
                if a.shape != self.geometry.shape:
                    raise ConsistencyError(
                        f"{name} shape {a.shape} does not match geometry {self.geometry.shape}"
                    )
                object.__setattr__(self, name, a)
                a.setflags(write=False)
        for name, obj in (("labels", self.labels), ("masks", self.masks)):
            if obj is not None and obj.geometry.shape != self.geometry.shape:
                raise ConsistencyError(
                    f"{name} shape {obj.geometry.shape} does not match "
                    f"geometry {self.geometry.shape}"
                )


def _disk_to_internal(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.transpose(a, (2, 1, 0)))


def _internal_to_disk(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.transpose(a, (2, 1, 0)))


def read_h5_bundle(path, spacing=None, num_classes: int | None = None) -> DatasetBundle:
    """Load a sample bundle from HDF5.

    Known datasets are volume, labels, masks, instances; anything else in
    the file is ignored. Missing datasets come back as None. spacing is mm
    per voxel (scalar or (sz, sy, sx)); the scanner pitch when omitted.
    """
    if spacing is None:
        spacing = DEFAULT_VOXEL_PITCH_MM
    if np.isscalar(spacing):
        spacing = (float(spacing),) * 3

    with h5py.File(path, "r") as f:
        present = [name for name in H5_DATASETS if name in f]
        if not present:
            raise FormatError(f"{path}: no known datasets found (expected one of {H5_DATASETS})")
        raw = {name: f[name][()] for name in present}

    arrays = {}
    for name, data in raw.items():
        if name == "masks":
            if data.ndim != 4:
                raise FormatError(f"{path}: masks must be 4-D [c, x, y, z], got ndim={data.ndim}")
            arrays[name] = np.ascontiguousarray(np.transpose(data, (0, 3, 2, 1)))
        else:
            if data.ndim != 3:
                raise FormatError(f"{path}: {name} must be 3-D [x, y, z], got ndim={data.ndim}")
            arrays[name] = _disk_to_internal(data)

    shapes = {name: a.shape[-3:] for name, a in arrays.items()}
    first_name, first_shape = next(iter(shapes.items()))
    for name, shape in shapes.items():
        if shape != first_shape:
            raise ConsistencyError(
                f"{path}: {first_name} shape {first_shape} disagrees with {name} shape {shape}"
            )

    geometry = GridGeometry(first_shape, spacing)
    labels = masks = None
    if "masks" in arrays:
        masks = OneHotMask(geometry, arrays["masks"].astype(np.bool_))
    if "labels" in arrays:
        lab = arrays["labels"]
        if num_classes is not None:
            c = num_classes
        elif masks is not None:
            c = masks.num_classes
        else:
            c = max(3, int(lab.max()) + 1 if lab.size else 3)
        labels = LabelVolume(geometry, lab, num_classes=c)

    return DatasetBundle(
        geometry=geometry,
        volume=arrays.get("volume"),
        labels=labels,
        masks=masks,
        instances=arrays.get("instances"),
    )


def write_h5_bundle(bundle: DatasetBundle, path):
    """Write a bundle to HDF5 in the disk axis order.

    volume/labels/instances go out as uint16, masks as booleans. Dataset
    creation times are not tracked so identical bundles produce identical
    files.
    """
    with h5py.File(path, "w") as f:

        def put(name, data, dtype):
            f.create_dataset(name, data=data.astype(dtype), track_times=False)

        if bundle.volume is not None:
            put("volume", _internal_to_disk(bundle.volume), np.uint16)
        if bundle.labels is not None:
            put("labels", _internal_to_disk(bundle.labels.labels), np.uint16)
        if bundle.masks is not None:
            disk = np.ascontiguousarray(np.transpose(bundle.masks.channels, (0, 3, 2, 1)))
            put("masks", disk, np.bool_)
        if bundle.instances is not None:
            put("instances", _internal_to_disk(bundle.instances), np.uint16)


def read_nrrd(path) -> tuple[np.ndarray, GridGeometry]:
    """Read a 3-D NRRD file (versions 4/5, raw or gzip, little endian).

    Returns the grid as (z, y, x) plus its geometry. Header axes are
    fastest-first on disk, so sizes/spacings arrive reversed relative to
    the internal order. Missing spacing information defaults to 1 mm.
    """
    with open(path, "rb") as f:
        blob = f.read()

    header_end = blob.find(b"\n\n")
    sep = 2
    if header_end < 0:
        header_end = blob.find(b"\r\n\r\n")
        sep = 4
    if header_end < 0:
        raise FormatError(f"{path}: no blank line terminating the NRRD header")
    header_lines = blob[:header_end].decode("ascii", errors="replace").splitlines()
    payload = blob[header_end + sep:]

    if not header_lines or header_lines[0].strip() not in _NRRD_MAGICS:
        raise FormatError(f"{path}: unsupported NRRD magic (need one of {_NRRD_MAGICS})")

    fields = {}
    for line in header_lines[1:]:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":=" in line:
            continue  # key/value metadata, not a field
        if ":" not in line:
            raise FormatError(f"{path}: malformed header line {line!r}")
        key, _, value = line.partition(":")
        fields[key.strip().lower()] = value.strip()

    for required in ("type", "dimension", "sizes", "encoding"):
        if required not in fields:
            raise FormatError(f"{path}: missing required NRRD field '{required}'")

    type_name = fields["type"].lower()
    if type_name not in _NRRD_TYPES:
        raise FormatError(f"{path}: unsupported value for field 'type': {fields['type']!r}")
    dtype = np.dtype(_NRRD_TYPES[type_name])

    if fields["dimension"] != "3":
        raise FormatError(
            f"{path}: unsupported value for field 'dimension': {fields['dimension']!r} (need 3)"
        )

    try:
        sizes = [int(tok) for tok in fields["sizes"].split()]
    except ValueError:
        raise FormatError(f"{path}: malformed field 'sizes': {fields['sizes']!r}") from None
    if len(sizes) != 3 or any(n < 1 for n in sizes):
        raise FormatError(f"{path}: field 'sizes' must hold three positive extents")

    encoding = fields["encoding"].lower()
    if encoding not in ("raw", "gzip", "gz"):
        raise FormatError(f"{path}: unsupported value for field 'encoding': {fields['encoding']!r}")

    if dtype.itemsize > 1:
        endian = fields.get("endian", "little").lower()
        if endian != "little":
            raise FormatError(f"{path}: unsupported value for field 'endian': {endian!r}")

    spacing_fast = None
    if "spacings" in fields:
        try:
            spacing_fast = [float(tok) for tok in fields["spacings"].split()]
        except ValueError:
            raise FormatError(f"{path}: malformed field 'spacings': {fields['spacings']!r}") from None
        if len(spacing_fast) != 3:
            raise FormatError(f"{path}: field 'spacings' must hold three values")
    elif "space directions" in fields:
        spacing_fast = _diagonal_spacing(fields["space directions"], path)
    if spacing_fast is None:
        spacing_fast = [1.0, 1.0, 1.0]

    if encoding in ("gzip", "gz"):
        try:
            payload = gzip.decompress(payload)
        except OSError as exc:
            raise FormatError(f"{path}: gzip payload is corrupt ({exc})") from None

    expected = sizes[0] * sizes[1] * sizes[2] * dtype.itemsize
    if len(payload) < expected:
        raise FormatError(
            f"{path}: payload holds {len(payload)} bytes, sizes require {expected}"
        )
    data = np.frombuffer(payload[:expected], dtype=dtype.newbyteorder("<"))
    # sizes are fastest-first: (nx, ny, nz) on disk, reshape to (z, y, x)
    grid = data.reshape(sizes[::-1]).astype(dtype)
    geometry = GridGeometry(grid.shape, tuple(spacing_fast[::-1]))
    return grid, geometry


def _diagonal_spacing(value: str, path) -> list[float]:
    vectors = []
    for token in value.replace(") ", ")|").split("|"):
        token = token.strip().strip("()")
        if token.lower() == "none":
            raise FormatError(f"{path}: field 'space directions' must define all three axes")
        try:
            vectors.append([float(t) for t in token.split(",")])
        except ValueError:
            raise FormatError(f"{path}: malformed field 'space directions'") from None
    if len(vectors) != 3 or any(len(v) != 3 for v in vectors):
        raise FormatError(f"{path}: field 'space directions' must hold three 3-vectors")
    spacing = []
    for i, v in enumerate(vectors):
        off = [abs(v[j]) for j in range(3) if j != i]
        if max(off) > 1e-12 * max(abs(v[i]), 1.0):
            raise FormatError(f"{path}: only axis-aligned 'space directions' are supported")
        spacing.append(abs(v[i]))
    return spacing


def write_nrrd(grid: np.ndarray, geometry: GridGeometry, path, encoding: str = "gzip"):
    """Write a 3-D grid as NRRD, fastest-axis-first on disk.

    gzip payloads are written with a zeroed timestamp so identical grids
    produce identical files.
    """
    a = np.ascontiguousarray(grid)
    if a.ndim != 3:
        raise ValueError(f"grid must be 3-D, got ndim={a.ndim}")
    if a.shape != geometry.shape:
        raise ConsistencyError(f"grid shape {a.shape} does not match geometry {geometry.shape}")
    if a.dtype not in _NRRD_TYPE_NAMES:
        raise ValueError(f"unsupported dtype for NRRD export: {a.dtype}")
    if encoding not in ("raw", "gzip"):
        raise ValueError(f"encoding must be 'raw' or 'gzip', got {encoding!r}")

    nz, ny, nx = a.shape
    sz, sy, sx = geometry.spacing
    lines = [
        "NRRD0004",
        f"type: {_NRRD_TYPE_NAMES[a.dtype]}",
        "dimension: 3",
        f"sizes: {nx} {ny} {nz}",
        f"encoding: {encoding}",
        "endian: little",
        f"spacings: {sx!r} {sy!r} {sz!r}",
        "",
        "",
    ]
    payload = a.astype(a.dtype.newbyteorder("<")).tobytes(order="C")
    if encoding == "gzip":
        buf = _stdio.BytesIO()
        with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0) as gz:
            gz.write(payload)
        payload = buf.getvalue()
    with open(path, "wb") as f:
        f.write("\n".join(lines).encode("ascii"))
        f.write(payload)


def write_spectrum_csv(spectrum: Spectrum1D, path):
    """Write a spectrum as UTF-8 CSV with header lag_mm,s2 and LF endings.

    Values go out with repr precision, so reading them back reproduces the
    binary doubles exactly.
    """
    if len(spectrum) == 0:
        raise ValueError("refusing to write an empty spectrum")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["lag_mm", "s2"])
        for lag, val in zip(spectrum.lags_mm, spectrum.values):
            writer.writerow([repr(float(lag)), repr(float(val))])


def read_spectrum_csv(path, voxel_pitch_mm: float) -> Spectrum1D:
    """Read a lag_mm,s2 CSV back into a spectrum."""
    lags, vals = [], []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["lag_mm", "s2"]:
            raise FormatError(f"{path}: expected header lag_mm,s2, got {header}")
        for row in reader:
            if len(row) != 2:
                raise FormatError(f"{path}: malformed row {row}")
            lags.append(float(row[0]))
            vals.append(float(row[1]))
    if not lags:
        raise FormatError(f"{path}: no spectrum samples")
    return Spectrum1D(np.asarray(lags), np.asarray(vals), voxel_pitch_mm)


def write_patch_scores(path, scores: np.ndarray, offset, kind: str = "probabilities"):
    """Write one patch of class scores with its placement offset.

    scores are (c, z, y, x) in memory, stored [c, x, y, z]; the offset is
    the patch origin in the assembled volume, stored (x, y, z) alongside.
    """
    a = np.asarray(scores)
    if a.ndim != 4:
        raise ValueError(f"scores must be (c, z, y, x), got ndim={a.ndim}")
    off = tuple(int(o) for o in offset)
    if len(off) != 3:
        raise ValueError(f"offset must be (z, y, x), got {offset}")
    with h5py.File(path, "w") as f:
        disk = np.ascontiguousarray(np.transpose(a, (0, 3, 2, 1)))
        ds = f.create_dataset("scores", data=disk, track_times=False)
        ds.attrs["offset"] = np.asarray(off[::-1], dtype=np.int64)
        ds.attrs["kind"] = kind


def read_patch_scores(path) -> tuple[np.ndarray, tuple[int, int, int], str]:
    """Read one patch-score file: (scores (c,z,y,x), offset (z,y,x), kind)."""
    with h5py.File(path, "r") as f:
        if "scores" not in f:
            raise FormatError(f"{path}: missing dataset 'scores'")
        ds = f["scores"]
        if ds.ndim != 4:
            raise FormatError(f"{path}: scores must be 4-D [c, x, y, z]")
        if "offset" not in ds.attrs:
            raise FormatError(f"{path}: scores dataset lacks an 'offset' attribute")
        disk = ds[()]
        off_disk = [int(v) for v in np.asarray(ds.attrs["offset"]).ravel()]
        if len(off_disk) != 3:
            raise FormatError(f"{path}: offset attribute must hold three values")
        kind = ds.attrs.get("kind", "probabilities")
        if isinstance(kind, bytes):
            kind = kind.decode("ascii")
    scores = np.ascontiguousarray(np.transpose(disk, (0, 3, 2, 1)))
    return scores, tuple(off_disk[::-1]), str(kind)
