"""Quality metrics and displacement-field warping for registration scoring."""

from dataclasses import asdict, dataclass
import math

import numpy as np

from .volume import Volume3D, VolumeError


@dataclass(frozen=True)
class SmpiReport:
    """Speckle suppression and mean preservation index with its inputs.

    ``q = 1 + |mu_r - mu_o|`` penalizes mean drift; ``smpi`` multiplies q by
    the ratio of the standard deviations sqrt(var_r)/sqrt(var_o). Lower is
    better; an identity filter scores exactly 1.
    """

    mu_o: float
    mu_r: float
    var_o: float
    var_r: float
    q: float
    smpi: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check_same_dims(a: Volume3D, b: Volume3D):
    if a.dims != b.dims:
        raise VolumeError(f"dimension mismatch: {a.dims} vs {b.dims}")


def smpi(original: Volume3D, filtered: Volume3D) -> SmpiReport:
    """Score a speckle-reduction result against its unfiltered original.

    Means and population variances are taken over whole volumes. The
    original must have nonzero variance. Note the additive mean term makes
    the index scale-dependent; compare volumes on a common intensity scale.
    """
    _check_same_dims(original, filtered)
    mu_o = float(original.data.mean())
    mu_r = float(filtered.data.mean())
    var_o = float(original.data.var())
    var_r = float(filtered.data.var())
    if var_o == 0.0:
        raise VolumeError("degenerate original: zero variance")
    q = 1.0 + abs(mu_r - mu_o)
    return SmpiReport(
        mu_o=mu_o, mu_r=mu_r, var_o=var_o, var_r=var_r,
        q=q, smpi=q * math.sqrt(var_r) / math.sqrt(var_o),
    )


def mse(a: Volume3D, b: Volume3D) -> float:
    """Mean squared intensity difference between two same-shaped volumes."""
    _check_same_dims(a, b)
    return float(np.mean((a.data - b.data) ** 2))


@dataclass(frozen=True)
class DisplacementField:
    """Per-voxel displacement vectors (dx, dy, dz) in voxel units.

    ``data`` has shape (nx, ny, nz, 3) and must match the volume it warps.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 4 or arr.shape[3] != 3:
            raise VolumeError(f"displacement field must have shape (nx, ny, nz, 3), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise VolumeError("displacement field contains non-finite components")
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape[:3]

    @classmethod
    def zero(cls, dims: tuple[int, int, int]) -> "DisplacementField":
        return cls(np.zeros((*dims, 3)))

    @classmethod
    def uniform(cls, dims: tuple[int, int, int], shift: tuple[float, float, float]) -> "DisplacementField":
        field = np.empty((*dims, 3))
        field[..., 0], field[..., 1], field[..., 2] = shift
        return cls(field)


def warp_trilinear(moving: Volume3D, field: DisplacementField) -> Volume3D:
    """Resample ``moving`` at ``x + field(x)`` with trilinear interpolation.

    Sample coordinates outside the volume clamp to the nearest edge voxel.
    A zero field reproduces the input bitwise.

    Parameters
    ----------
    moving : Volume3D
        Volume to be warped.
    field : DisplacementField
        Displacements in voxel units, same dims as ``moving``.
    """
    if field.dims != moving.dims:
        raise VolumeError(f"dimension mismatch: field {field.dims} vs volume {moving.dims}")
    nx, ny, nz = moving.dims
    ii, jj, kk = np.ogrid[0:nx, 0:ny, 0:nz]

    cx = np.clip(ii + field.data[..., 0], 0.0, nx - 1.0)
    cy = np.clip(jj + field.data[..., 1], 0.0, ny - 1.0)
    cz = np.clip(kk + field.data[..., 2], 0.0, nz - 1.0)

    x0 = np.floor(cx).astype(np.intp)
    y0 = np.floor(cy).astype(np.intp)
    z0 = np.floor(cz).astype(np.intp)
    x1 = np.minimum(x0 + 1, nx - 1)
    y1 = np.minimum(y0 + 1, ny - 1)
    z1 = np.minimum(z0 + 1, nz - 1)
    fx = cx - x0
    fy = cy - y0
    fz = cz - z0

    d = moving.data
    c00 = d[x0, y0, z0] * (1.0 - fx) + d[x1, y0, z0] * fx
    c10 = d[x0, y1, z0] * (1.0 - fx) + d[x1, y1, z0] * fx
    c01 = d[x0, y0, z1] * (1.0 - fx) + d[x1, y0, z1] * fx
    c11 = d[x0, y1, z1] * (1.0 - fx) + d[x1, y1, z1] * fx
    c0 = c00 * (1.0 - fy) + c10 * fy
    c1 = c01 * (1.0 - fy) + c11 * fy
    warped = c0 * (1.0 - fz) + c1 * fz
    return Volume3D(warped, moving.spacing)
