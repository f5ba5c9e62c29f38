"""Transport transforms for images: per-angle transforms of the sinogram.

``rcdt`` applies the positive-density transform to each angle of a normalized
sinogram; it requires non-negative input (callers classifying signed data
must take absolute values first, losing sign information).  ``rscdt`` applies
the signed transform per angle and so works on arbitrary images.

Both use the unit-mass uniform density on the offset interval as the per-angle
reference, so the reference quantile grid is the offset axis itself.

``flatten`` packs a feature into a weighted vector whose Euclidean distance
equals the discretized transform-domain metric: transform samples carry
``sqrt(r * dt * dtheta)`` and masses ``sqrt(dtheta)``.  The signed
sliced-Wasserstein distance integrates the per-angle signed-Wasserstein
distance over angles; it is computed by quantile matching in the signal
domain, independent of the flattened route.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigMismatchError, DataFormatError, InvalidInputError
from .grid import Axis, Image2D, integrate_image
from .radon import Sinogram, radon_forward, radon_inverse
from .transforms1d import (
    QuantileFn,
    ScdtTuple,
    Signal1D,
    WarpSpec,
    cdt,
    cdt_inverse,
    ds_distance_sq,
    scdt,
    scdt_inverse,
    uniform_reference,
)
from . import io as _io

__all__ = [
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
    "save_rscdt",
    "load_rscdt",
]


@dataclass(frozen=True)
class TransformConfig:
    """Grid configuration shared by forward transforms and distances."""

    n_angles: int = 180
    n_offsets: int | None = None  # default: image side length

    def __post_init__(self) -> None:
        if self.n_angles < 2:
            raise InvalidInputError("n_angles must be at least 2")
        if self.n_offsets is not None and self.n_offsets < 2:
            raise InvalidInputError("n_offsets must be at least 2")


def _freeze_fields(obj, names) -> None:
    for name in names:
        arr = np.asarray(getattr(obj, name), dtype=np.float64)
        if arr.flags.writeable:
            arr = arr.copy()
            arr.setflags(write=False)
        object.__setattr__(obj, name, arr)


@dataclass(frozen=True)
class RcdtFeature:
    """Per-angle transforms of a normalized non-negative image.

    ``values[:, k]`` is the transform of angle k's projection; ``total_mass``
    retains the image integral so the inverse can restore scale.
    """

    t_axis: Axis
    angles: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    total_mass: float = 1.0

    def __post_init__(self) -> None:
        _freeze_fields(self, ("angles", "values"))


@dataclass(frozen=True)
class RscdtFeature:
    """Per-angle signed-transform tuples over a shared offset/angle grid."""

    t_axis: Axis
    angles: np.ndarray = field(repr=False)
    pos_star: np.ndarray = field(repr=False)  # (n_t, n_angles)
    pos_mass: np.ndarray = field(repr=False)  # (n_angles,)
    neg_star: np.ndarray = field(repr=False)
    neg_mass: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        _freeze_fields(self, ("angles", "pos_star", "pos_mass", "neg_star", "neg_mass"))

    @property
    def n_angles(self) -> int:
        return int(np.asarray(self.angles).size)

    def tuple_at(self, k: int) -> ScdtTuple:
        axis = self.t_axis
        return ScdtTuple(
            QuantileFn(axis, self.pos_star[:, k]),
            float(self.pos_mass[k]),
            QuantileFn(axis, self.neg_star[:, k]),
            float(self.neg_mass[k]),
        )


@dataclass(frozen=True)
class PerAngleWarp:
    """Element of the per-angle warp group: one increasing warp per angle.

    Composition, identity, and inversion act angle-wise, mirroring the group
    the class model quotients over.
    """

    warps: tuple[WarpSpec, ...]

    @staticmethod
    def identity(n_angles: int) -> "PerAngleWarp":
        return PerAngleWarp(tuple(WarpSpec() for _ in range(n_angles)))

    @staticmethod
    def translation(x0: float, y0: float, angles: np.ndarray) -> "PerAngleWarp":
        """Warp family induced by the image translation (x0, y0)."""
        shifts = x0 * np.cos(angles) + y0 * np.sin(angles)
        return PerAngleWarp(tuple(WarpSpec(1.0, float(sh)) for sh in shifts))

    def compose(self, other: "PerAngleWarp") -> "PerAngleWarp":
        if len(self.warps) != len(other.warps):
            raise InvalidInputError("cannot compose warps over different angle grids")
        return PerAngleWarp(tuple(g.compose(h) for g, h in zip(self.warps, other.warps)))

    def inverse(self) -> "PerAngleWarp":
        return PerAngleWarp(tuple(g.inverse() for g in self.warps))

    def apply_inverse_to_feature(self, f: RscdtFeature) -> RscdtFeature:
        """Compose each angle's transform with that angle's inverse warp."""
        if len(self.warps) != f.n_angles:
            raise InvalidInputError("warp and feature angle grids differ")
        pos = np.stack([self.warps[k].apply_inverse(f.pos_star[:, k]) for k in range(f.n_angles)], axis=1)
        neg = np.stack([self.warps[k].apply_inverse(f.neg_star[:, k]) for k in range(f.n_angles)], axis=1)
        return RscdtFeature(f.t_axis, f.angles, pos, f.pos_mass, neg, f.neg_mass)


def warp_sinogram(sino: Sinogram, warp: PerAngleWarp) -> Sinogram:
    """Apply ``(g_k)'(t) * s(g_k(t), theta_k)`` column-wise."""
    if len(warp.warps) != sino.n_angles:
        raise InvalidInputError("warp and sinogram angle grids differ")
    t = sino.t_axis.coords()
    out = np.empty_like(sino.values)
    for k, g in enumerate(warp.warps):
        out[:, k] = g.derivative * np.interp(g(t), t, sino.values[:, k], left=0.0, right=0.0)
    return Sinogram(sino.t_axis, sino.angles, out)


def _forward_sinogram(img: Image2D, cfg: TransformConfig) -> Sinogram:
    return radon_forward(img, n_angles=cfg.n_angles, n_offsets=cfg.n_offsets)


def rcdt(img: Image2D, cfg: TransformConfig | None = None) -> RcdtFeature:
    """Per-angle transform of a non-negative image's normalized sinogram."""
    cfg = cfg or TransformConfig()
    floor = -1e-9 * max(float(np.max(np.abs(img.values))), 1.0)
    if np.min(img.values) < floor:
        raise InvalidInputError(
            "rcdt requires non-negative images; take absolute values or use rscdt"
        )
    total = integrate_image(img)
    if total <= 0:
        raise InvalidInputError("rcdt requires an image with positive total mass")
    # quantiles are scale invariant, so project the raw image and let cdt
    # normalize each column; this keeps the transform bit-identical with the
    # positive component of the signed pipeline
    sino = _forward_sinogram(img.with_values(np.maximum(img.values, 0.0)), cfg)
    ref = uniform_reference(sino.t_axis)
    values = np.empty_like(sino.values)
    for k in range(sino.n_angles):
        star = cdt(Signal1D(sino.t_axis, np.maximum(sino.column(k), 0.0)), ref, normalize=True)
        values[:, k] = star.values
    return RcdtFeature(sino.t_axis, sino.angles, values, total)


def rcdt_inverse(
    f: RcdtFeature, x_axis: Axis | None = None, y_axis: Axis | None = None
) -> Image2D:
    """Invert each angle's transform, then filtered back-projection."""
    ref = uniform_reference(f.t_axis)
    values = np.empty_like(f.values)
    for k in range(np.asarray(f.angles).size):
        col = QuantileFn(f.t_axis, f.values[:, k])
        if np.any(np.diff(col.values) < -1e-9 * f.t_axis.span):
            raise InvalidInputError(f"angle {k}: transform column is not non-decreasing")
        values[:, k] = cdt_inverse(col, ref, f.t_axis).values
    sino = Sinogram(f.t_axis, f.angles, values)
    img = radon_inverse(sino, x_axis, y_axis)
    return img.with_values(img.values * f.total_mass)


def rscdt(img: Image2D, cfg: TransformConfig | None = None) -> RscdtFeature:
    """Signed per-angle transform; accepts arbitrary finite images."""
    cfg = cfg or TransformConfig()
    sino = _forward_sinogram(img, cfg)
    return rscdt_of_sinogram(sino)


def rscdt_of_sinogram(sino: Sinogram) -> RscdtFeature:
    """Signed per-angle transform of an existing sinogram."""
    ref = uniform_reference(sino.t_axis)
    n_t, n_ang = sino.values.shape
    pos_star = np.empty((n_t, n_ang))
    neg_star = np.empty((n_t, n_ang))
    pos_mass = np.empty(n_ang)
    neg_mass = np.empty(n_ang)
    for k in range(n_ang):
        tup = scdt(Signal1D(sino.t_axis, sino.column(k)), ref)
        pos_star[:, k] = tup.pos_star.values
        neg_star[:, k] = tup.neg_star.values
        pos_mass[k] = tup.pos_mass
        neg_mass[k] = tup.neg_mass
    return RscdtFeature(sino.t_axis, sino.angles, pos_star, pos_mass, neg_star, neg_mass)


def rscdt_inverse(
    f: RscdtFeature, x_axis: Axis | None = None, y_axis: Axis | None = None
) -> Image2D:
    """Invert each angle's signed transform, then filtered back-projection."""
    ref = uniform_reference(f.t_axis)
    n_ang = f.n_angles
    values = np.empty((f.t_axis.count, n_ang))
    for k in range(n_ang):
        tup = f.tuple_at(k)
        for star in (tup.pos_star, tup.neg_star):
            if np.any(np.diff(star.values) < -1e-9 * f.t_axis.span):
                raise InvalidInputError(f"angle {k}: transform column is not non-decreasing")
        values[:, k] = scdt_inverse(tup, ref, f.t_axis).values
    sino = Sinogram(f.t_axis, f.angles, values)
    return radon_inverse(sino, x_axis, y_axis)


def _weights(t_axis: Axis, n_angles: int) -> tuple[float, float]:
    dtheta = np.pi / n_angles
    r_uniform = 1.0 / t_axis.span
    w_q = float(np.sqrt(r_uniform * t_axis.spacing * dtheta))
    w_m = float(np.sqrt(dtheta))
    return w_q, w_m


def flatten(f: RscdtFeature | RcdtFeature) -> np.ndarray:
    """Pack a feature into a vector whose Euclidean metric matches the
    transform-domain metric.

    Signed features use the per-angle layout
    ``[w_q*pos_star | w_m*pos_mass | w_q*neg_star | w_m*neg_mass]`` with
    ``w_q = sqrt(r * dt * dtheta)`` and ``w_m = sqrt(dtheta)``; with the
    uniform reference w_q is one constant.  Non-negative features pack only
    the weighted transform samples.
    """
    if isinstance(f, RcdtFeature):
        w_q, _ = _weights(f.t_axis, np.asarray(f.angles).size)
        return (w_q * f.values).ravel(order="F")
    w_q, w_m = _weights(f.t_axis, f.n_angles)
    n_t = f.t_axis.count
    out = np.empty((f.n_angles, 2 * n_t + 2))
    out[:, :n_t] = (w_q * f.pos_star).T
    out[:, n_t] = w_m * f.pos_mass
    out[:, n_t + 1 : 2 * n_t + 1] = (w_q * f.neg_star).T
    out[:, 2 * n_t + 1] = w_m * f.neg_mass
    return out.ravel()


def _check_compatible(f1, f2) -> None:
    if f1.t_axis != f2.t_axis or np.asarray(f1.angles).size != np.asarray(f2.angles).size:
        raise ConfigMismatchError("features were computed on different grids")


def feature_distance(f1: RscdtFeature, f2: RscdtFeature) -> float:
    """Euclidean distance between flattened features (transform-domain metric)."""
    _check_compatible(f1, f2)
    return float(np.linalg.norm(flatten(f1) - flatten(f2)))


def signed_sliced_wasserstein(
    s1: Image2D,
    s2: Image2D,
    cfg: TransformConfig | None = None,
    n_quantiles: int = 4096,
) -> float:
    """Angle-integrated signed-Wasserstein distance between two images.

    Computed from the two sinograms by per-angle quantile matching and a
    uniform quadrature over angles.
    """
    if s1.x_axis != s2.x_axis or s1.y_axis != s2.y_axis:
        raise ConfigMismatchError("images live on different grids")
    cfg = cfg or TransformConfig()
    sino1 = _forward_sinogram(s1, cfg)
    sino2 = _forward_sinogram(s2, cfg)
    dtheta = np.pi / sino1.n_angles
    total = 0.0
    for k in range(sino1.n_angles):
        a = Signal1D(sino1.t_axis, sino1.column(k))
        b = Signal1D(sino2.t_axis, sino2.column(k))
        total += ds_distance_sq(a, b, n_quantiles) * dtheta
    return float(np.sqrt(max(total, 0.0)))


def save_rscdt(f: RscdtFeature, path) -> None:
    n_t = f.t_axis.count
    blocks = np.empty((f.n_angles, 2 * n_t + 2))
    blocks[:, :n_t] = f.pos_star.T
    blocks[:, n_t] = f.pos_mass
    blocks[:, n_t + 1 : 2 * n_t + 1] = f.neg_star.T
    blocks[:, 2 * n_t + 1] = f.neg_mass
    header = {
        "kind": "rscdt",
        "t_axis": {"start": f.t_axis.start, "stop": f.t_axis.stop, "count": f.t_axis.count},
        "angles": list(map(float, np.asarray(f.angles))),
        "layout": "pos_star,pos_mass,neg_star,neg_mass",
    }
    _io.save_container(path, blocks, header)


def load_rscdt(path) -> RscdtFeature:
    payload, header = _io.load_container(path)
    if header.get("kind") != "rscdt":
        raise DataFormatError(f"{path}: expected rscdt container, got {header.get('kind')!r}")
    ta = header["t_axis"]
    t_axis = Axis(float(ta["start"]), float(ta["stop"]), int(ta["count"]))
    angles = np.asarray(header["angles"], dtype=np.float64)
    n_t = t_axis.count
    blocks = payload.reshape(angles.size, 2 * n_t + 2)
    return RscdtFeature(
        t_axis,
        angles,
        blocks[:, :n_t].T.copy(),
        blocks[:, n_t].copy(),
        blocks[:, n_t + 1 : 2 * n_t + 1].T.copy(),
        blocks[:, 2 * n_t + 1].copy(),
    )


def save_rcdt(f: RcdtFeature, path) -> None:
    header = {
        "kind": "rcdt",
        "t_axis": {"start": f.t_axis.start, "stop": f.t_axis.stop, "count": f.t_axis.count},
        "angles": list(map(float, np.asarray(f.angles))),
        "total_mass": f.total_mass,
    }
    _io.save_container(path, np.asarray(f.values), header)


def load_rcdt(path) -> RcdtFeature:
    payload, header = _io.load_container(path)
    if header.get("kind") != "rcdt":
        raise DataFormatError(f"{path}: expected rcdt container, got {header.get('kind')!r}")
    ta = header["t_axis"]
    t_axis = Axis(float(ta["start"]), float(ta["stop"]), int(ta["count"]))
    angles = np.asarray(header["angles"], dtype=np.float64)
    values = payload.reshape(t_axis.count, angles.size)
    return RcdtFeature(t_axis, angles, values, float(header.get("total_mass", 1.0)))
