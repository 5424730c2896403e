"""Synthetic phantoms and the signal-dependent speckle noise model.

The corruption model is ``u(x) = v(x) + v(x)**gamma * eta(x)`` with
``eta ~ N(0, sigma**2)``: for a clean level v the noisy voxels have mean v
and standard deviation ``v**gamma * sigma``. Noise is drawn from a Philox
counter-based generator keyed by the seed, one 64-bit word per voxel in
payload order, so voxel (i, j, k) always receives the same draw for a given
seed regardless of volume traversal or parallelism.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .volume import Volume3D, VolumeError

PHANTOM_KINDS = ("constant", "two-region", "spherical-inclusion", "axial-gradient")


@dataclass(frozen=True)
class SpeckleParams:
    """Noise parameters: exponent gamma in [0, 2], std sigma >= 0, RNG seed."""

    sigma: float
    gamma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 2.0:
            raise ValueError(f"gamma must be in [0, 2], got {self.gamma}")
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")


@dataclass(frozen=True)
class PhantomSpec:
    """Geometric description of a noise-free test volume.

    kind selects the geometry:
      - ``constant``: every voxel at ``level``.
      - ``two-region``: voxels with coordinate < ``position`` along ``axis``
        at ``low``, the rest at ``high`` (position defaults to the middle).
      - ``spherical-inclusion``: ``low`` background with a ball of ``high``
        at ``center`` (defaults to the volume center) of ``radius`` voxels;
        membership is strict (distance < radius), so radius 0 yields a
        background-only volume. The ball must fit inside the grid.
      - ``axial-gradient``: linear ramp from ``low`` to ``high`` along
        ``axis``.

    All levels live in [0, 1].
    """

    kind: str
    dims: tuple[int, int, int]
    level: float = 0.5
    low: float = 0.25
    high: float = 0.75
    axis: int = 0
    position: int | None = None
    center: tuple[float, float, float] | None = None
    radius: float = 0.0

    def __post_init__(self):
        if self.kind not in PHANTOM_KINDS:
            raise ValueError(f"unknown phantom kind {self.kind!r}, expected one of {PHANTOM_KINDS}")
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ValueError(f"invalid dimensions: {self.dims!r}")
        object.__setattr__(self, "dims", dims)
        for name in ("level", "low", "high"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.axis not in (0, 1, 2):
            raise ValueError(f"axis must be 0, 1 or 2, got {self.axis}")
        if self.kind == "two-region":
            pos = dims[self.axis] // 2 if self.position is None else int(self.position)
            if not 0 <= pos <= dims[self.axis]:
                raise ValueError(f"split position {pos} outside volume extent {dims[self.axis]}")
            object.__setattr__(self, "position", pos)
        if self.kind == "spherical-inclusion":
            center = self.center
            if center is None:
                center = tuple((d - 1) / 2.0 for d in dims)
            center = tuple(float(c) for c in center)
            if len(center) != 3:
                raise ValueError(f"center must have three components, got {self.center!r}")
            if self.radius < 0.0:
                raise ValueError(f"radius must be nonnegative, got {self.radius}")
            for c, d in zip(center, dims):
                if c - self.radius < -0.5 or c + self.radius > d - 0.5:
                    raise ValueError(
                        f"spherical inclusion (center {center}, radius {self.radius}) "
                        f"does not fit inside dims {dims}"
                    )
            object.__setattr__(self, "center", center)


def generate_phantom(spec: PhantomSpec) -> Volume3D:
    """Deterministically render a phantom volume from its geometric spec."""
    nx, ny, nz = spec.dims
    if spec.kind == "constant":
        data = np.full(spec.dims, spec.level)
    elif spec.kind == "two-region":
        data = np.full(spec.dims, spec.high)
        index = [slice(None)] * 3
        index[spec.axis] = slice(0, spec.position)
        data[tuple(index)] = spec.low
    elif spec.kind == "spherical-inclusion":
        ii, jj, kk = np.ogrid[0:nx, 0:ny, 0:nz]
        cx, cy, cz = spec.center
        dist2 = (ii - cx) ** 2 + (jj - cy) ** 2 + (kk - cz) ** 2
        data = np.where(dist2 < spec.radius**2, spec.high, spec.low)
    else:  # axial-gradient
        n = spec.dims[spec.axis]
        ramp = np.linspace(spec.low, spec.high, n) if n > 1 else np.array([spec.low])
        shape = [1, 1, 1]
        shape[spec.axis] = n
        data = np.broadcast_to(ramp.reshape(shape), spec.dims).copy()
    return Volume3D(data)


def _voxel_normals(n: int, seed: int) -> np.ndarray:
    # Philox word v -> 53-bit uniform in (0, 1) -> inverse normal CDF.
    raw = np.random.Philox(key=seed).random_raw(n)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def apply_speckle(v: Volume3D, p: SpeckleParams) -> Volume3D:
    """Corrupt a clean volume with signal-dependent Gaussian speckle.

    Output voxels are ``v + v**gamma * eta`` with ``eta ~ N(0, sigma**2)``
    drawn per voxel index from the seeded generator; identical inputs and
    seed reproduce the output bitwise. ``0**0`` is taken as 1 so gamma = 0
    degrades to plain additive noise. The result is not clamped.

    Parameters
    ----------
    v : Volume3D
        Clean volume, all intensities nonnegative.
    p : SpeckleParams
        Noise exponent, std and seed.
    """
    if (v.data < 0).any():
        raise VolumeError("speckle model requires nonnegative intensities")
    nx, ny, nz = v.dims
    eta = p.sigma * _voxel_normals(v.data.size, p.seed).reshape((nx, ny, nz), order="F")
    noisy = v.data + v.data**p.gamma * eta
    return Volume3D(noisy, v.spacing)
