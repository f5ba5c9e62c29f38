"""Uniform sampling grids and discrete signal/image containers.

All transforms in this package operate on uniformly sampled functions.  An
:class:`Axis` maps sample indices to domain coordinates bijectively; signals
and images pair one or two axes with a value array.  Containers are immutable
after construction and every operation on them is a pure function, so they are
safe to share across threads or processes.

Integration and cumulation use the trapezoidal rule throughout, so running
integrals and total integrals are always consistent with each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "Axis",
    "Signal1D",
    "Image2D",
    "integrate",
    "integrate_image",
    "interp_monotone",
]


@dataclass(frozen=True)
class Axis:
    """Uniform grid of `count` samples spanning [start, stop] inclusively."""

    start: float
    stop: float
    count: int

    def __post_init__(self) -> None:
        if not (self.stop > self.start):
            raise InvalidInputError(f"axis needs stop > start, got [{self.start}, {self.stop}]")
        if self.count < 2:
            raise InvalidInputError(f"axis needs at least 2 samples, got {self.count}")

    @property
    def spacing(self) -> float:
        return (self.stop - self.start) / (self.count - 1)

    def coords(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    def coord_of(self, index: int) -> float:
        return self.start + index * self.spacing

    def index_of(self, coord: float) -> int:
        """Nearest sample index; inverse of :meth:`coord_of` on grid points."""
        return int(round((coord - self.start) / self.spacing))

    @property
    def span(self) -> float:
        return self.stop - self.start


def _frozen_array(values, shape_hint: str, expected_shape: tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != expected_shape:
        raise InvalidInputError(f"{shape_hint}: expected shape {expected_shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{shape_hint}: values must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Signal1D:
    """Real-valued function sampled on a 1D axis.  Values may be signed."""

    axis: Axis
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", _frozen_array(self.values, "Signal1D", (self.axis.count,))
        )

    def with_values(self, values) -> "Signal1D":
        return Signal1D(self.axis, values)


@dataclass(frozen=True)
class Image2D:
    """Real-valued function sampled on a rectangle.

    ``values[i, j]`` holds the sample at ``(x_axis[j], y_axis[i])``: rows run
    along y, columns along x.  Signed pixel values are first-class.
    """

    x_axis: Axis
    y_axis: Axis
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        shape = (self.y_axis.count, self.x_axis.count)
        object.__setattr__(self, "values", _frozen_array(self.values, "Image2D", shape))

    def with_values(self, values) -> "Image2D":
        return Image2D(self.x_axis, self.y_axis, values)


def integrate(s: Signal1D) -> float:
    """Trapezoidal integral of a signal over its axis."""
    return float(np.trapezoid(s.values, dx=s.axis.spacing))


def integrate_image(img: Image2D) -> float:
    """Trapezoidal double integral of an image over its rectangle."""
    inner = np.trapezoid(img.values, dx=img.x_axis.spacing, axis=1)
    return float(np.trapezoid(inner, dx=img.y_axis.spacing))


def interp_monotone(xs, ys, q) -> np.ndarray:
    """Piecewise-linear interpolation with clamping outside [xs[0], xs[-1]].

    ``xs`` must be strictly increasing; ``ys`` is expected to be
    non-decreasing (CDFs, quantile functions), in which case the output is
    non-decreasing for non-decreasing queries.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if xs.ndim != 1 or xs.size < 2 or not np.all(np.diff(xs) > 0):
        raise InvalidInputError("interp_monotone: xs must be strictly increasing")
    if ys.shape != xs.shape:
        raise InvalidInputError("interp_monotone: xs and ys must have equal length")
    return np.interp(q, xs, ys)
