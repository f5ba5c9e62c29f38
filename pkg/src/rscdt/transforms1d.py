"""Cumulative distribution transforms for positive and signed 1D signals.

The forward transform ``cdt`` maps a unit-mass density ``s`` to the
non-decreasing function ``F_s^† ∘ F_r`` sampled on the grid of a reference
density ``r`` (uniform by default), where ``F^†(y) = inf{x : F(x) > y}`` is
the generalized inverse of a CDF.  ``scdt`` extends this to signed signals
through the Jordan decomposition ``s = s⁺ - s⁻``, producing a 4-tuple of two
normalized transforms and two masses; components with zero mass carry an
all-zero transform by convention.

``signed_wasserstein`` is the induced metric on signed signals: for each sign
component it combines the 2-Wasserstein distance between the normalized parts
with the mass difference.  It is computed here by direct quantile matching,
independently of the transform pathway, so the two routes can be checked
against each other.

Discretization choices, applied consistently everywhere: trapezoidal
integrals and running integrals; generalized inverses resolve flat CDF
regions to their right edge and clamp outside the domain; derivatives of
inverse maps use central differences with one-sided ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, InvalidInputError, SingularTransportError
from .grid import Axis, Signal1D, integrate
from . import io as _io

__all__ = [
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
    "save_scdt",
    "load_scdt",
]

# Relative mass below which a Jordan component counts as identically zero.
_TRIVIAL_REL = 1e-12
# Tolerated relative deviation from unit mass before `cdt` rejects its input.
_UNIT_MASS_TOL = 1e-6
# Tolerated negative undershoot (relative to the max) in "non-negative" data.
_NEG_TOL = 1e-9


@dataclass(frozen=True)
class Cdf:
    """Running trapezoidal integral of a non-negative signal."""

    axis: Axis
    values: np.ndarray = field(repr=False)

    @property
    def total_mass(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class QuantileFn:
    """Non-decreasing transform values sampled on the reference grid."""

    axis: Axis
    values: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ScdtTuple:
    """Signed transform: (positive part transform, its mass, negative ditto)."""

    pos_star: QuantileFn
    pos_mass: float
    neg_star: QuantileFn
    neg_mass: float


@dataclass(frozen=True)
class WarpSpec:
    """Strictly increasing affine warp g(x) = scale*x - shift, scale > 0."""

    scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise InvalidInputError(f"warp scale must be positive, got {self.scale}")

    def __call__(self, x):
        return self.scale * np.asarray(x, dtype=np.float64) - self.shift

    def apply_inverse(self, y):
        return (np.asarray(y, dtype=np.float64) + self.shift) / self.scale

    def inverse(self) -> "WarpSpec":
        return WarpSpec(1.0 / self.scale, -self.shift / self.scale)

    def compose(self, other: "WarpSpec") -> "WarpSpec":
        """(self ∘ other)(x) = self(other(x))."""
        return WarpSpec(self.scale * other.scale, self.scale * other.shift + self.shift)

    @property
    def derivative(self) -> float:
        return self.scale


def uniform_reference(axis: Axis) -> Signal1D:
    """Unit-mass uniform density on the axis interval."""
    return Signal1D(axis, np.full(axis.count, 1.0 / axis.span))


def _cumtrapz(values: np.ndarray, dx: float) -> np.ndarray:
    out = np.empty(values.shape[0])
    out[0] = 0.0
    np.cumsum((values[1:] + values[:-1]) * (0.5 * dx), out=out[1:])
    return out


def _check_nonnegative(values: np.ndarray, what: str) -> None:
    floor = -_NEG_TOL * max(float(np.max(np.abs(values))), 1.0)
    if np.min(values) < floor:
        raise InvalidInputError(f"{what} must be non-negative (min={np.min(values):g})")


def cumulation(s: Signal1D) -> Cdf:
    """CDF of a non-negative signal via a running trapezoidal integral."""
    _check_nonnegative(s.values, "cumulation input")
    return Cdf(s.axis, _cumtrapz(s.values, s.axis.spacing))


def _generalized_inverse(xs: np.ndarray, fs: np.ndarray, y: np.ndarray) -> np.ndarray:
    """inf{x : f(x) > y} for a sampled non-decreasing f, linear within cells.

    Flat regions resolve to their right edge; queries below f[0] return
    xs[0], queries at or above f[-1] return xs[-1].
    """
    n = xs.shape[0]
    idx = np.searchsorted(fs, y, side="right")
    hi = np.clip(idx, 1, n - 1)
    lo = hi - 1
    df = fs[hi] - fs[lo]
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(df > 0, (y - fs[lo]) / df, 0.0)
    out = xs[lo] + np.clip(frac, 0.0, 1.0) * (xs[hi] - xs[lo])
    out = np.where(idx <= 0, xs[0], out)
    out = np.where(y >= fs[-1], xs[-1], out)
    return out


def generalized_inverse(F: Cdf, y) -> np.ndarray:
    """Evaluate F† at the query levels ``y`` (clamped at the domain ends)."""
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    return _generalized_inverse(F.axis.coords(), F.values, y)


def _check_reference(r: Signal1D) -> None:
    if np.min(r.values) <= 0:
        raise InvalidInputError("reference density must be strictly positive")
    mass = integrate(r)
    if abs(mass - 1.0) > _UNIT_MASS_TOL:
        raise InvalidInputError(f"reference density must have unit mass, got {mass:.8f}")


def cdt(s: Signal1D, r: Signal1D | None = None, *, normalize: bool = False) -> QuantileFn:
    """Transform of a non-negative density against a reference density.

    ``s`` must integrate to 1 unless ``normalize=True``, in which case it is
    scaled internally.  The default reference is the uniform density on the
    signal's own axis.  The result is sampled on the reference grid and
    satisfies ``F_s(result(x)) = F_r(x)`` up to interpolation error.
    """
    if r is None:
        r = uniform_reference(s.axis)
    else:
        _check_reference(r)
    _check_nonnegative(s.values, "cdt input")
    fs = _cumtrapz(s.values, s.axis.spacing)
    mass = float(fs[-1])
    if mass <= 0:
        raise SingularTransportError("cdt input has zero mass")
    if abs(mass - 1.0) > _UNIT_MASS_TOL:
        if not normalize:
            raise InvalidInputError(
                f"cdt input has mass {mass:.8f}; pass normalize=True to rescale"
            )
    # dividing by the running integral's own endpoint pins F(stop) to exactly
    # 1.0, so the top quantile clamps identically across call paths
    fs = fs / mass
    fr = _cumtrapz(r.values, r.axis.spacing)
    fr /= fr[-1]
    values = _generalized_inverse(s.axis.coords(), fs, fr)
    return QuantileFn(r.axis, values)


def _quantile_inverse(shat: QuantileFn, query: np.ndarray) -> np.ndarray:
    span = float(shat.values[-1] - shat.values[0])
    scale = max(abs(shat.values[-1]), abs(shat.values[0]), 1.0)
    if span <= 1e-12 * scale:
        raise SingularTransportError("degenerate (constant) transform cannot be inverted")
    return _generalized_inverse(shat.axis.coords(), shat.values, query)


def cdt_inverse(shat: QuantileFn, r: Signal1D | None = None, target_axis: Axis | None = None) -> Signal1D:
    """Reconstruct the density from its transform.

    Computes ``(d/dx) shat⁻¹(x) · r(shat⁻¹(x))`` on the target grid.  Flat
    stretches of ``shat⁻¹`` (support gaps of the density) reconstruct as
    zeros.
    """
    if not np.all(np.diff(shat.values) >= -1e-12):
        raise InvalidInputError("transform values must be non-decreasing")
    if r is None:
        r = uniform_reference(shat.axis)
    if target_axis is None:
        target_axis = Axis(float(shat.values[0]), float(shat.values[-1]), shat.axis.count)
    x = target_axis.coords()
    w = _quantile_inverse(shat, x)
    dwdx = np.gradient(w, target_axis.spacing)
    r_at_w = np.interp(w, r.axis.coords(), r.values, left=0.0, right=0.0)
    return Signal1D(target_axis, np.maximum(dwdx, 0.0) * r_at_w)


def jordan_decompose(s: Signal1D) -> tuple[Signal1D, Signal1D]:
    """Split into non-negative parts with ``s = pos - neg`` pointwise."""
    pos = np.maximum(s.values, 0.0)
    neg = np.maximum(-s.values, 0.0)
    return s.with_values(pos), s.with_values(neg)


def _trivial_threshold(values: np.ndarray, span: float) -> float:
    return _TRIVIAL_REL * max(float(np.max(np.abs(values))), 1e-300) * span


def _component_transform(part: np.ndarray, axis: Axis, r: Signal1D) -> tuple[QuantileFn, float]:
    mass = float(np.trapezoid(part, dx=axis.spacing))
    if mass <= _trivial_threshold(part, axis.span):
        return QuantileFn(r.axis, np.zeros(r.axis.count)), 0.0
    star = cdt(Signal1D(axis, part), r, normalize=True)
    return star, mass


def scdt(s: Signal1D, r: Signal1D | None = None) -> ScdtTuple:
    """Signed transform: normalized transforms and masses of the Jordan parts."""
    if r is None:
        r = uniform_reference(s.axis)
    else:
        _check_reference(r)
    pos, neg = jordan_decompose(s)
    pos_star, pos_mass = _component_transform(pos.values, s.axis, r)
    neg_star, neg_mass = _component_transform(neg.values, s.axis, r)
    return ScdtTuple(pos_star, pos_mass, neg_star, neg_mass)


def scdt_inverse(t: ScdtTuple, r: Signal1D | None = None, target_axis: Axis | None = None) -> Signal1D:
    """Reconstruct a signed signal from its transform tuple."""
    if r is None:
        r = uniform_reference(t.pos_star.axis)
    if target_axis is None:
        lo = min(float(t.pos_star.values[0]), float(t.neg_star.values[0]))
        hi = max(float(t.pos_star.values[-1]), float(t.neg_star.values[-1]))
        if hi <= lo:
            lo, hi = r.axis.start, r.axis.stop
        target_axis = Axis(lo, hi, r.axis.count)
    out = np.zeros(target_axis.count)
    if t.pos_mass > 0:
        out += t.pos_mass * cdt_inverse(t.pos_star, r, target_axis).values
    if t.neg_mass > 0:
        out -= t.neg_mass * cdt_inverse(t.neg_star, r, target_axis).values
    return Signal1D(target_axis, out)


def scdt_distance_sq(t1: ScdtTuple, t2: ScdtTuple, r: Signal1D) -> float:
    """Squared transform-domain distance: L²(r) on transforms plus mass terms."""
    if t1.pos_star.axis != t2.pos_star.axis:
        raise InvalidInputError("transform tuples live on different reference grids")
    x = r.axis.coords()
    d = 0.0
    for a, b in ((t1.pos_star, t2.pos_star), (t1.neg_star, t2.neg_star)):
        d += float(np.trapezoid((a.values - b.values) ** 2 * r.values, x))
    d += (t1.pos_mass - t2.pos_mass) ** 2 + (t1.neg_mass - t2.neg_mass) ** 2
    return d


def _component_distance_sq(
    xs: np.ndarray, dx: float, span: float, p: np.ndarray, q: np.ndarray, n_quantiles: int
) -> float:
    """Squared signed-Wasserstein term for one sign component pair.

    Combines the quantile-matching 2-Wasserstein distance between the
    normalized parts with the squared mass difference.  If exactly one side
    is trivial only the mass term contributes; if both are trivial the term
    is zero.
    """
    mp = float(np.trapezoid(p, dx=dx))
    mq = float(np.trapezoid(q, dx=dx))
    p_triv = mp <= _trivial_threshold(p, span)
    q_triv = mq <= _trivial_threshold(q, span)
    if p_triv and q_triv:
        return 0.0
    if p_triv or q_triv:
        return (mp - mq) ** 2
    fp = _cumtrapz(p, dx) / mp
    fq = _cumtrapz(q, dx) / mq
    y = (np.arange(n_quantiles) + 0.5) / n_quantiles
    qp = _generalized_inverse(xs, fp, y)
    qq = _generalized_inverse(xs, fq, y)
    return float(np.mean((qp - qq) ** 2)) + (mp - mq) ** 2


def ds_distance_sq(s1: Signal1D, s2: Signal1D, n_quantiles: int = 4096) -> float:
    """Squared signed-Wasserstein distance via direct quantile matching."""
    if s1.axis != s2.axis:
        raise InvalidInputError("signed_wasserstein requires a shared grid")
    xs = s1.axis.coords()
    dx = s1.axis.spacing
    span = s1.axis.span
    return _component_distance_sq(
        xs, dx, span, np.maximum(s1.values, 0.0), np.maximum(s2.values, 0.0), n_quantiles
    ) + _component_distance_sq(
        xs, dx, span, np.maximum(-s1.values, 0.0), np.maximum(-s2.values, 0.0), n_quantiles
    )


def signed_wasserstein(s1: Signal1D, s2: Signal1D, n_quantiles: int = 4096) -> float:
    """Signed-Wasserstein metric between two signals on a shared grid."""
    return float(np.sqrt(max(ds_distance_sq(s1, s2, n_quantiles), 0.0)))


def warp_signal(s: Signal1D, g: WarpSpec) -> Signal1D:
    """Mass-preserving reparametrization ``g'(x) * s(g(x))`` on s's grid.

    Values of ``s`` outside its axis are taken as zero, so warps that push
    support past the domain edge lose the clipped mass.
    """
    warped_coords = g(s.axis.coords())
    vals = np.interp(warped_coords, s.axis.coords(), s.values, left=0.0, right=0.0)
    return s.with_values(g.derivative * vals)


def save_scdt(t: ScdtTuple, path) -> None:
    header = {
        "kind": "scdt",
        "ref": {"start": t.pos_star.axis.start, "stop": t.pos_star.axis.stop, "count": t.pos_star.axis.count},
        "pos_mass": t.pos_mass,
        "neg_mass": t.neg_mass,
    }
    payload = np.concatenate([t.pos_star.values, t.neg_star.values])
    _io.save_container(path, payload, header)


def load_scdt(path) -> ScdtTuple:
    payload, header = _io.load_container(path)
    if header.get("kind") != "scdt":
        raise DataFormatError(f"{path}: expected scdt container, got {header.get('kind')!r}")
    ref = header["ref"]
    axis = Axis(float(ref["start"]), float(ref["stop"]), int(ref["count"]))
    n = axis.count
    return ScdtTuple(
        QuantileFn(axis, payload[:n]),
        float(header["pos_mass"]),
        QuantileFn(axis, payload[n:]),
        float(header["neg_mass"]),
    )
