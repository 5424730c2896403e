"""Dense 3D scalar volume container plus statistics, normalization and padding."""

from dataclasses import dataclass

import numpy as np


class VolumeError(ValueError):
    """Data-contract violation: degenerate, mismatched or out-of-range volume data."""


@dataclass(frozen=True)
class Volume3D:
    """A dense grid of scalar intensities.

    ``data`` is a float64 array indexed ``[i, j, k]`` along (x, y, z), so
    ``dims`` is ``(nx, ny, nz)``. ``spacing`` is millimeters per voxel along
    each axis. The flat payload order (used by file I/O and the noise
    generator) puts x fastest-varying: voxel (i, j, k) sits at linear index
    ``i + nx * (j + ny * k)``. All intensities must be finite.
    """

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise VolumeError(f"volume data must be 3D, got {arr.ndim}D")
        if arr.size == 0:
            raise VolumeError("empty volume")
        if not np.isfinite(arr).all():
            raise VolumeError("volume contains non-finite intensities")
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or any(s <= 0 for s in spacing):
            raise VolumeError(f"spacing must be three positive values, got {self.spacing!r}")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def linear_index(self, i: int, j: int, k: int) -> int:
        """Flat payload index of voxel (i, j, k)."""
        nx, ny, _ = self.dims
        return i + nx * (j + ny * k)

    def voxel_of(self, index: int) -> tuple[int, int, int]:
        """Inverse of :meth:`linear_index`."""
        nx, ny, _ = self.dims
        return index % nx, (index // nx) % ny, index // (nx * ny)

    def flat(self) -> np.ndarray:
        """Intensities in payload order (x fastest-varying)."""
        return self.data.ravel(order="F")


@dataclass(frozen=True)
class VolumeStats:
    mean: float
    variance: float
    min: float
    max: float


def volume_stats(v: Volume3D) -> VolumeStats:
    """Mean, population variance and tight min/max of a volume."""
    data = v.data
    if data.size == 0:
        raise VolumeError("empty volume")
    return VolumeStats(
        mean=float(data.mean()),
        variance=float(data.var()),
        min=float(data.min()),
        max=float(data.max()),
    )


def preprocess(v: Volume3D, crop_dims: tuple[int, int, int]) -> Volume3D:
    """Normalize to zero mean / unit std, then crop the centered sub-volume.

    The mean and standard deviation are taken over the full input volume
    before cropping, so the affine map is independent of the crop. The crop
    keeps ``crop_dims`` voxels per axis starting at offset
    ``floor((n - c) / 2)``.

    Parameters
    ----------
    v : Volume3D
        Input volume; must have nonzero variance.
    crop_dims : (cx, cy, cz)
        Output dimensions, at most the input dimensions per axis.

    Returns
    -------
    Volume3D
        The normalized, cropped volume.
    """
    crop = tuple(int(c) for c in crop_dims)
    if len(crop) != 3 or any(c < 1 for c in crop):
        raise VolumeError(f"crop dims must be three positive integers, got {crop_dims!r}")
    if any(c > n for c, n in zip(crop, v.dims)):
        raise VolumeError(f"crop {crop} larger than volume {v.dims}")
    std = float(v.data.std())
    if std == 0.0:
        raise VolumeError("degenerate volume: zero variance, cannot normalize")
    normalized = (v.data - v.data.mean()) / std
    off = [(n - c) // 2 for n, c in zip(v.dims, crop)]
    sub = normalized[off[0]:off[0] + crop[0], off[1]:off[1] + crop[1], off[2]:off[2] + crop[2]]
    return Volume3D(sub.copy(), v.spacing)


def rescale_unit(v: Volume3D) -> tuple[Volume3D, float, float]:
    """Affinely map intensities onto [0, 1]; returns (volume, min, max).

    The returned (min, max) pair defines the inverse map
    ``x * (max - min) + min``.
    """
    lo = float(v.data.min())
    hi = float(v.data.max())
    if hi == lo:
        raise VolumeError("degenerate volume: constant intensities cannot be rescaled")
    scaled = (v.data - lo) / (hi - lo)
    return Volume3D(scaled, v.spacing), lo, hi


def pad_mirror(v: Volume3D, r: tuple[int, int, int]) -> Volume3D:
    """Grow the volume by ``r`` voxels per side per axis with mirror padding.

    The mirror does not repeat the edge voxel: index -1 maps to index 1,
    index n maps to index n - 2. Each pad width must be smaller than the
    corresponding dimension.
    """
    pad = tuple(int(x) for x in r)
    if len(pad) != 3 or any(p < 0 for p in pad):
        raise VolumeError(f"pad widths must be three nonnegative integers, got {r!r}")
    if any(p >= n for p, n in zip(pad, v.dims)):
        raise VolumeError(f"mirror pad {pad} must be smaller than dims {v.dims}")
    padded = np.pad(v.data, tuple((p, p) for p in pad), mode="reflect")
    return Volume3D(padded, v.spacing)
