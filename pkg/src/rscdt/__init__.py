"""Transport-based representation and classification of signed images.

Builds the cumulative distribution transform family up from 1D: the positive
density transform (`cdt`), its signed extension (`scdt`), their composition
with the Radon transform for images (`rcdt`, `rscdt`), the induced
signed (sliced) Wasserstein metrics, and a nearest-subspace classifier that
operates on the flattened transform features.
"""

from .errors import (
    ConfigMismatchError,
    DataFormatError,
    InvalidInputError,
    PlacementError,
    SingularTransportError,
)
from .grid import Axis, Image2D, Signal1D, integrate, integrate_image, interp_monotone
from .transforms1d import (
    Cdf,
    QuantileFn,
    ScdtTuple,
    WarpSpec,
    cdt,
    cdt_inverse,
    cumulation,
    generalized_inverse,
    jordan_decompose,
    scdt,
    scdt_distance_sq,
    scdt_inverse,
    signed_wasserstein,
    uniform_reference,
    warp_signal,
)
from .radon import Sinogram, radon_forward, radon_inverse
from .transforms2d import (
    PerAngleWarp,
    RcdtFeature,
    RscdtFeature,
    TransformConfig,
    feature_distance,
    flatten,
    rcdt,
    rcdt_inverse,
    rscdt,
    rscdt_inverse,
    signed_sliced_wasserstein,
    warp_sinogram,
)
from .classifier import (
    EvalReport,
    FeatureConfig,
    SubspaceModel,
    evaluate,
    extract_feature,
    load_model,
    predict,
    residual,
    save_model,
    train,
)
from .datasets import (
    Manifest,
    SyntheticSpec,
    dog_filter,
    generate_synthetic,
    ingest_folder,
    load_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "Signal1D",
    "Image2D",
    "integrate",
    "integrate_image",
    "interp_monotone",
    "Cdf",
    "QuantileFn",
    "ScdtTuple",
    "WarpSpec",
    "uniform_reference",
    "cumulation",
    "generalized_inverse",
    "cdt",
    "cdt_inverse",
    "jordan_decompose",
    "scdt",
    "scdt_inverse",
    "scdt_distance_sq",
    "signed_wasserstein",
    "warp_signal",
    "Sinogram",
    "radon_forward",
    "radon_inverse",
    "TransformConfig",
    "RcdtFeature",
    "RscdtFeature",
    "PerAngleWarp",
    "rcdt",
    "rcdt_inverse",
    "rscdt",
    "rscdt_inverse",
    "flatten",
    "feature_distance",
    "signed_sliced_wasserstein",
    "warp_sinogram",
    "FeatureConfig",
    "SubspaceModel",
    "EvalReport",
    "extract_feature",
    "train",
    "residual",
    "predict",
    "evaluate",
    "save_model",
    "load_model",
    "SyntheticSpec",
    "Manifest",
    "generate_synthetic",
    "dog_filter",
    "load_manifest",
    "ingest_folder",
    "InvalidInputError",
    "DataFormatError",
    "ConfigMismatchError",
    "SingularTransportError",
    "PlacementError",
]
