"""MetaImage-style volume file I/O: a text ``.mhd`` header plus a raw payload."""

from pathlib import Path

import numpy as np

from .volume import Volume3D

_ELEMENT_DTYPES = {
    "MET_FLOAT": np.dtype("<f4"),
    "MET_UCHAR": np.dtype("u1"),
}


class VolumeFormatError(Exception):
    """Raised for malformed headers or payloads that do not match their header."""


def _parse_header(path: Path) -> dict[str, str]:
    fields = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise VolumeFormatError(f"malformed header: line {lineno} is not 'key = value': {line!r}")
        fields[key.strip()] = value.strip()
    return fields


def _parse_triple(raw: str, cast, key: str):
    parts = raw.split()
    if len(parts) != 3:
        raise VolumeFormatError(f"malformed header: {key} must have three values, got {raw!r}")
    try:
        return tuple(cast(p) for p in parts)
    except ValueError:
        raise VolumeFormatError(f"malformed header: cannot parse {key} value {raw!r}") from None


def load_volume(path) -> Volume3D:
    """Read a volume from a ``.mhd`` header and its raw payload.

    Honored keys: NDims (must be 3), DimSize, ElementSpacing (defaults to
    1 1 1), ElementType (MET_UCHAR or MET_FLOAT) and ElementDataFile (path
    relative to the header). Unknown keys are ignored. The payload is raw
    little-endian with x fastest-varying.
    """
    path = Path(path)
    fields = _parse_header(path)

    for key in ("NDims", "DimSize", "ElementType", "ElementDataFile"):
        if key not in fields:
            raise VolumeFormatError(f"malformed header: missing required key {key}")
    if fields["NDims"] != "3":
        raise VolumeFormatError(f"malformed header: NDims must be 3, got {fields['NDims']!r}")

    dims = _parse_triple(fields["DimSize"], int, "DimSize")
    if any(d < 1 for d in dims):
        raise VolumeFormatError(f"malformed header: DimSize must be positive, got {dims}")

    if "ElementSpacing" in fields:
        spacing = _parse_triple(fields["ElementSpacing"], float, "ElementSpacing")
        if any(s <= 0 for s in spacing):
            raise VolumeFormatError(f"malformed header: ElementSpacing must be positive, got {spacing}")
    else:
        spacing = (1.0, 1.0, 1.0)

    element_type = fields["ElementType"]
    if element_type not in _ELEMENT_DTYPES:
        raise VolumeFormatError(f"unsupported element type: {element_type}")
    dtype = _ELEMENT_DTYPES[element_type]

    payload_path = path.parent / fields["ElementDataFile"]
    payload = payload_path.read_bytes()
    expected = dims[0] * dims[1] * dims[2] * dtype.itemsize
    if len(payload) != expected:
        raise VolumeFormatError(
            f"payload size mismatch: header implies {expected} bytes, "
            f"{payload_path.name} has {len(payload)}"
        )

    data = np.frombuffer(payload, dtype=dtype).astype(np.float64).reshape(dims, order="F")
    return Volume3D(data, spacing)


def save_volume(v: Volume3D, path) -> Path:
    """Write a volume as a ``.mhd`` header plus ``.raw`` payload (MET_FLOAT).

    Returns the header path. Intensities are stored as little-endian float32
    with x fastest-varying, so a save/load round trip is bit-exact for data
    representable in 32 bits.
    """
    path = Path(path)
    if path.suffix != ".mhd":
        path = path.with_suffix(".mhd")
    raw_path = path.with_suffix(".raw")
    nx, ny, nz = v.dims
    sx, sy, sz = v.spacing
    header = (
        "ObjectType = Image\n"
        "NDims = 3\n"
        "BinaryData = True\n"
        "BinaryDataByteOrderMSB = False\n"
        f"DimSize = {nx} {ny} {nz}\n"
        f"ElementSpacing = {sx!r} {sy!r} {sz!r}\n"
        "ElementType = MET_FLOAT\n"
        f"ElementDataFile = {raw_path.name}\n"
    )
    path.write_text(header)
    v.data.astype("<f4").ravel(order="F").tofile(raw_path)
    return path
