"""3D B-mode ultrasound speckle reduction toolkit.

Building blocks: a dense volume container with MetaImage-style file I/O,
a parametric speckle simulator with geometric phantoms, the blockwise
Bayesian non-local means filter (reference oracle plus optimized parallel
implementation), and evaluation metrics (SMPI, MSE, trilinear warping of
displacement fields).
"""

from .io import VolumeFormatError, load_volume, save_volume
from .metrics import DisplacementField, SmpiReport, mse, smpi, warp_trilinear
from .obnlm import (
    ObnlmParams,
    block_weight,
    effective_threads,
    filter_obnlm,
    filter_obnlm_reference,
    pearson_distance,
)
from .speckle import (
    PHANTOM_KINDS,
    PhantomSpec,
    SpeckleParams,
    apply_speckle,
    generate_phantom,
)
from .volume import (
    Volume3D,
    VolumeError,
    VolumeStats,
    pad_mirror,
    preprocess,
    rescale_unit,
    volume_stats,
)

__version__ = "0.1.0"

__all__ = [
    "DisplacementField",
    "ObnlmParams",
    "PHANTOM_KINDS",
    "PhantomSpec",
    "SmpiReport",
    "SpeckleParams",
    "Volume3D",
    "VolumeError",
    "VolumeFormatError",
    "VolumeStats",
    "apply_speckle",
    "block_weight",
    "effective_threads",
    "filter_obnlm",
    "filter_obnlm_reference",
    "generate_phantom",
    "load_volume",
    "mse",
    "pad_mirror",
    "pearson_distance",
    "preprocess",
    "rescale_unit",
    "save_volume",
    "smpi",
    "volume_stats",
    "warp_trilinear",
]
