"""Nearest-subspace classification in transform space.

Training is non-iterative: per class, transform and flatten every sample,
then orthonormalize the span of the stacked feature columns.  Prediction
projects a sample's feature onto each class basis and picks the class with
the smallest squared projection residual; the projector depends only on the
span, so training order cannot change predictions.

A model persists as a directory: ``model.json`` (labels, ranks, feature
configuration, format version) plus one float container per class basis.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import ConfigMismatchError, DataFormatError, InvalidInputError
from .grid import Image2D
from .transforms2d import TransformConfig, flatten, rcdt, rscdt
from .datasets import dog_filter
from . import io as _io

__all__ = [
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
]

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
_ORTHO_TOL = 1e-8

TRANSFORM_KINDS = ("rscdt", "rcdt-abs")


@dataclass(frozen=True)
class FeatureConfig:
    """Everything needed to recompute a model's features from raw images."""

    kind: str = "rscdt"
    n_angles: int = 180
    n_offsets: int | None = None
    image_shape: tuple[int, int] | None = None  # (rows, cols); fixed at training
    dog_sigmas: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in TRANSFORM_KINDS:
            raise InvalidInputError(f"transform kind must be one of {TRANSFORM_KINDS}")

    @property
    def transform_config(self) -> TransformConfig:
        return TransformConfig(n_angles=self.n_angles, n_offsets=self.n_offsets)


@dataclass(frozen=True)
class SubspaceModel:
    config: FeatureConfig
    labels: tuple[int, ...]
    bases: dict[int, np.ndarray] = field(repr=False)

    @property
    def feature_dim(self) -> int:
        return next(iter(self.bases.values())).shape[0]

    def rank(self, label: int) -> int:
        return self.bases[label].shape[1]


@dataclass(frozen=True)
class EvalReport:
    labels: tuple[int, ...]
    accuracy: float
    confusion: np.ndarray = field(repr=False)  # rows: true label, cols: predicted
    predictions: np.ndarray = field(repr=False)
    true_labels: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)  # (n_samples, n_classes)


def extract_feature(img: Image2D, config: FeatureConfig) -> np.ndarray:
    """Transform one image into its flattened feature vector."""
    if config.image_shape is not None and img.values.shape != tuple(config.image_shape):
        raise ConfigMismatchError(
            f"image shape {img.values.shape} does not match model shape {tuple(config.image_shape)}"
        )
    if config.dog_sigmas is not None:
        img = dog_filter(img, *config.dog_sigmas)
    if config.kind == "rcdt-abs":
        img = img.with_values(np.abs(img.values))
        return flatten(rcdt(img, config.transform_config))
    return flatten(rscdt(img, config.transform_config))


def _orthonormal_basis(columns: np.ndarray, rank_cutoff: int | None) -> np.ndarray:
    """Orthonormal basis of the column span via SVD with a rank cutoff.

    Directions with singular values at the noise floor
    (max(dim, n) * eps * sigma_max) are dropped; ``rank_cutoff`` optionally
    caps the rank below that.
    """
    u, s, _ = np.linalg.svd(columns, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0]
    tol = max(columns.shape) * np.finfo(np.float64).eps * s[0]
    rank = int(np.sum(s > tol))
    if rank_cutoff is not None:
        rank = min(rank, int(rank_cutoff))
    return u[:, :rank]


def train(
    samples,
    config: FeatureConfig | None = None,
    rank_cutoff: int | None = None,
) -> SubspaceModel:
    """Fit one orthonormal basis per class from (image, label) pairs."""
    config = config or FeatureConfig()
    by_label: dict[int, list[np.ndarray]] = {}
    shape: tuple[int, int] | None = (
        tuple(config.image_shape) if config.image_shape is not None else None
    )
    for img, label in samples:
        if shape is None:
            shape = img.values.shape
            config = FeatureConfig(
                kind=config.kind,
                n_angles=config.n_angles,
                n_offsets=config.n_offsets,
                image_shape=shape,
                dog_sigmas=config.dog_sigmas,
            )
        by_label.setdefault(int(label), []).append(extract_feature(img, config))
    if not by_label:
        raise InvalidInputError("training requires at least one labelled sample")
    for label, feats in by_label.items():
        if not feats:
            raise InvalidInputError(f"class {label} has no training samples")
    bases = {
        label: _orthonormal_basis(np.stack(feats, axis=1), rank_cutoff)
        for label, feats in sorted(by_label.items())
    }
    return SubspaceModel(config=config, labels=tuple(sorted(by_label)), bases=bases)


def _residual_sq(basis: np.ndarray, v: np.ndarray) -> float:
    # ||v||^2 - ||B^T v||^2 is stabler than forming v - B B^T v explicitly.
    proj = basis.T @ v
    return float(max(v @ v - proj @ proj, 0.0))


def residual(model: SubspaceModel, img: Image2D, label: int) -> float:
    """Squared projection residual of an image's feature onto one class."""
    if label not in model.bases:
        raise InvalidInputError(f"unknown label {label}; model has {model.labels}")
    return _residual_sq(model.bases[label], extract_feature(img, model.config))


def _predict_feature(model: SubspaceModel, v: np.ndarray) -> tuple[int, np.ndarray]:
    res = np.array([_residual_sq(model.bases[lab], v) for lab in model.labels])
    best = int(np.argmin(res))
    ties = np.flatnonzero(res == res[best])
    if ties.size > 1:
        logger.warning(
            "residual tie between classes %s; picking smallest label",
            [model.labels[i] for i in ties],
        )
    return model.labels[best], res


def predict(model: SubspaceModel, img: Image2D) -> tuple[int, np.ndarray]:
    """Label with the smallest residual, plus the per-class residual vector.

    Ties break toward the smallest label (labels are kept sorted).
    """
    if not model.bases:
        raise InvalidInputError("model has no trained classes")
    return _predict_feature(model, extract_feature(img, model.config))


def evaluate(model: SubspaceModel, samples) -> EvalReport:
    """Accuracy, confusion matrix, and residuals over labelled samples."""
    samples = list(samples)
    if not samples:
        raise InvalidInputError("evaluate requires at least one sample")
    index = {label: i for i, label in enumerate(model.labels)}
    n_classes = len(model.labels)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    preds = np.empty(len(samples), dtype=np.int64)
    truth = np.empty(len(samples), dtype=np.int64)
    residuals = np.empty((len(samples), n_classes))
    for i, (img, label) in enumerate(samples):
        if int(label) not in index:
            raise InvalidInputError(f"sample label {label} not present in model {model.labels}")
        pred, res = _predict_feature(model, extract_feature(img, model.config))
        preds[i] = pred
        truth[i] = int(label)
        residuals[i] = res
        confusion[index[int(label)], index[pred]] += 1
    accuracy = float(np.mean(preds == truth))
    return EvalReport(
        labels=model.labels,
        accuracy=accuracy,
        confusion=confusion,
        predictions=preds,
        true_labels=truth,
        residuals=residuals,
    )


def save_model(model: SubspaceModel, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "config": asdict(model.config),
        "labels": list(model.labels),
        "ranks": {str(lab): model.rank(lab) for lab in model.labels},
        "feature_dim": model.feature_dim,
    }
    _io.atomic_write_bytes(directory / "model.json", json.dumps(meta, sort_keys=True, indent=1).encode())
    for lab in model.labels:
        basis = model.bases[lab]
        _io.save_container(
            directory / f"basis_{lab}.f64",
            basis,
            {"kind": "matrix", "shape": list(basis.shape)},
        )


def load_model(directory) -> SubspaceModel:
    """Load and validate a persisted model (orthonormality, config shape)."""
    directory = Path(directory)
    meta_path = directory / "model.json"
    if not meta_path.exists():
        raise DataFormatError(f"no model.json under {directory}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"unparseable model.json: {exc}") from exc
    if meta.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataFormatError(f"unsupported model format {meta.get('format_version')!r}")
    cfg_raw = dict(meta["config"])
    for key in ("image_shape", "dog_sigmas"):
        if cfg_raw.get(key) is not None:
            cfg_raw[key] = tuple(cfg_raw[key])
    config = FeatureConfig(**cfg_raw)
    labels = tuple(int(lab) for lab in meta["labels"])
    bases: dict[int, np.ndarray] = {}
    for lab in labels:
        payload, header = _io.load_container(directory / f"basis_{lab}.f64")
        basis = payload.reshape(header["shape"])
        gram = basis.T @ basis
        if not np.allclose(gram, np.eye(basis.shape[1]), atol=_ORTHO_TOL):
            raise DataFormatError(f"basis for class {lab} is not orthonormal")
        if basis.shape[0] != meta["feature_dim"]:
            raise DataFormatError(f"basis for class {lab} disagrees with feature_dim")
        bases[lab] = basis
    return SubspaceModel(config=config, labels=labels, bases=bases)
