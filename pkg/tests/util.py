"""Shared fixture builders and independent numerical oracles.

Signed 1D fixtures keep the positive and negative supports separated so both
Jordan components stay well away from trivial; signed 2D fixtures either
anti-symmetrize a smoothed noise field (both projection components then carry
half the projection's L1 mass at every angle) or place smooth blobs whose
per-angle component masses are bounded away from zero by construction.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from rscdt import Axis, Image2D, Signal1D


def separated_sign_bumps(axis: Axis, rng: np.random.Generator, n_lo=3, n_hi=6) -> Signal1D:
    """Sum of 3-6 Gaussian bumps, positive and negative supports disjoint."""
    x = axis.coords()
    k = int(rng.integers(n_lo, n_hi + 1))
    k_pos = int(rng.integers(1, k))
    split = rng.uniform(0.45, 0.55)
    flip = rng.random() < 0.5
    lo_coord = axis.start + 0.12 * axis.span
    hi_coord = axis.start + 0.88 * axis.span
    split_coord = axis.start + split * axis.span
    values = np.zeros_like(x)
    for i in range(k):
        positive = i < k_pos
        left = positive != flip
        lo = lo_coord if left else split_coord + 0.08 * axis.span
        hi = split_coord - 0.08 * axis.span if left else hi_coord
        c = rng.uniform(lo, hi)
        sig = rng.uniform(0.02, 0.06) * axis.span
        amp = rng.uniform(0.5, 1.5) * (1.0 if positive else -1.0)
        values += amp * np.exp(-((x - c) ** 2) / (2 * sig**2))
    return Signal1D(axis, values)


def positive_bumps(axis: Axis, rng: np.random.Generator, pedestal=0.05) -> Signal1D:
    """Strictly positive density: 2-4 bumps on a pedestal, unit mass."""
    x = axis.coords()
    values = np.full_like(x, pedestal)
    for _ in range(int(rng.integers(2, 5))):
        c = rng.uniform(axis.start + 0.15 * axis.span, axis.stop - 0.15 * axis.span)
        sig = rng.uniform(0.02, 0.08) * axis.span
        values += rng.uniform(0.5, 1.5) * np.exp(-((x - c) ** 2) / (2 * sig**2))
    mass = np.trapezoid(values, dx=axis.spacing)
    return Signal1D(axis, values / mass)


def gaussian_bump(axis: Axis, center: float, sigma: float, unit_mass=True) -> Signal1D:
    x = axis.coords()
    values = np.exp(-((x - center) ** 2) / (2 * sigma**2))
    if unit_mass:
        values = values / np.trapezoid(values, dx=axis.spacing)
    return Signal1D(axis, values)


def square_axes(n: int) -> tuple[Axis, Axis]:
    axis = Axis(-1.0, 1.0, n)
    return axis, axis


def antisym_field(n: int, seed: int, taper_radius=0.8, smooth_div=10.0) -> Image2D:
    """Point-antisymmetric smoothed noise field, tapered inside the disk."""
    rng = np.random.default_rng(seed)
    f = gaussian_filter(rng.standard_normal((n, n)), n / smooth_div)
    f = 0.5 * (f - f[::-1, ::-1])
    f = f / np.max(np.abs(f))
    x = np.linspace(-1.0, 1.0, n)
    xx, yy = np.meshgrid(x, x, indexing="xy")
    taper = np.clip((taper_radius - np.hypot(xx, yy)) / 0.15, 0.0, 1.0)
    x_axis, y_axis = square_axes(n)
    return Image2D(x_axis, y_axis, f * taper)


def smooth_signed_field(n: int, seed: int, bias=0.5, taper_radius=0.8) -> Image2D:
    """Smoothed noise field with a positive bias, so the total mass is not
    close to zero; used where per-angle masses are compared to the total."""
    rng = np.random.default_rng(seed)
    f = gaussian_filter(rng.standard_normal((n, n)), n / 10.0)
    f = f / np.max(np.abs(f))
    x = np.linspace(-1.0, 1.0, n)
    xx, yy = np.meshgrid(x, x, indexing="xy")
    taper = np.clip((taper_radius - np.hypot(xx, yy)) / 0.15, 0.0, 1.0)
    x_axis, y_axis = square_axes(n)
    return Image2D(x_axis, y_axis, (f + bias) * taper)


# Blob layout with per-angle Jordan masses bounded away from zero: wide,
# gentle positive lobes and narrower, stronger negative lobes that no angle
# can fully cancel.
TRANSLATION_BLOBS = (
    (0.015, -0.397, 0.501, 0.159),
    (-0.133, -0.309, 0.550, 0.138),
    (-0.408, 0.044, 0.520, 0.152),
    (0.157, 0.328, 0.586, 0.149),
    (0.123, -0.223, -1.887, 0.114),
    (0.288, -0.178, -1.841, 0.102),
)


def blob_image(n: int, shift=(0.0, 0.0), blobs=TRANSLATION_BLOBS) -> Image2D:
    """Smooth signed blob image, translated analytically by `shift`."""
    sx, sy = shift
    x = np.linspace(-1.0, 1.0, n)
    xx, yy = np.meshgrid(x, x, indexing="xy")
    values = np.zeros((n, n))
    for cx, cy, amp, sig in blobs:
        values += amp * np.exp(
            -((xx - cx - sx) ** 2 + (yy - cy - sy) ** 2) / (2 * sig**2)
        )
    x_axis, y_axis = square_axes(n)
    return Image2D(x_axis, y_axis, values)


def signed_phantom(n: int, seed: int = 0) -> Image2D:
    """Signed smooth phantom for reconstruction tests (blobs of both signs)."""
    rng = np.random.default_rng(seed)
    blobs = []
    for i in range(5):
        ang = 2 * np.pi * (i / 5.0) + rng.uniform(-0.3, 0.3)
        rad = rng.uniform(0.25, 0.45)
        amp = (1.0 if i % 2 == 0 else -1.0) * rng.uniform(0.6, 1.2)
        blobs.append((rad * np.cos(ang), rad * np.sin(ang), amp, rng.uniform(0.08, 0.14)))
    return blob_image(n, blobs=tuple(blobs))


# -- independent oracles ------------------------------------------------------


def midpoint_integral(values: np.ndarray, dx: float) -> float:
    """Midpoint-rule integral from node samples (averages adjacent nodes)."""
    mids = 0.5 * (values[1:] + values[:-1])
    return float(np.sum(mids) * dx)


def brute_force_w2(s1: Signal1D, s2: Signal1D, n_quantiles: int = 8192) -> float:
    """Quantile-matching 2-Wasserstein distance for positive unit-mass
    signals, built only on numpy interpolation (independent of the library's
    generalized-inverse path)."""
    x = s1.axis.coords()
    dx = s1.axis.spacing

    def cdf(sig):
        c = np.concatenate([[0.0], np.cumsum((sig.values[1:] + sig.values[:-1]) * 0.5 * dx)])
        return c / c[-1]

    f1, f2 = cdf(s1), cdf(s2)
    y = (np.arange(n_quantiles) + 0.5) / n_quantiles
    q1 = np.interp(y, f1, x)
    q2 = np.interp(y, f2, x)
    return float(np.sqrt(np.mean((q1 - q2) ** 2)))


def relative_l1(recon: Signal1D, original: Signal1D) -> float:
    num = np.trapezoid(np.abs(recon.values - original.values), dx=original.axis.spacing)
    den = np.trapezoid(np.abs(original.values), dx=original.axis.spacing)
    return float(num / den)


def disk_relative_l2(recon: Image2D, original: Image2D, radius=1.0) -> float:
    xs = original.x_axis.coords()
    ys = original.y_axis.coords()
    xx, yy = np.meshgrid(xs, ys, indexing="xy")
    mask = xx**2 + yy**2 <= radius**2
    num = np.sqrt(np.sum((recon.values - original.values)[mask] ** 2))
    den = np.sqrt(np.sum(original.values[mask] ** 2))
    return float(num / den)
