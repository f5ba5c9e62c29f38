"""Synthetic signed-circle data, difference-of-Gaussians filtering, manifests.

The two synthetic classes share everything except sign counts: class 1 draws
three non-overlapping circles with two positive and one negative, class 2
with one positive and two negative.  Since absolute values erase exactly that
distinction, classifiers fed |image| are blind to the class structure.

Generation is deterministic and parallel-safe: each image's RNG is derived
from (seed, class, index), so outputs are identical regardless of how the
work is partitioned.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DataFormatError, InvalidInputError, PlacementError
from .grid import Axis, Image2D
from . import io as _io

__all__ = [
    "SyntheticSpec",
    "Manifest",
    "generate_synthetic",
    "synthesize_image",
    "dog_filter",
    "load_manifest",
    "ingest_folder",
    "write_manifest",
    "load_labelled_images",
]

logger = logging.getLogger(__name__)

CLASS_SIGN_COUNTS = {1: (2, 1), 2: (1, 2)}  # class -> (positive circles, negative circles)


@dataclass(frozen=True)
class SyntheticSpec:
    """Geometry of the generated images.

    Radii are drawn uniformly from ``radius_range`` (fractions of the image
    side); centers uniformly subject to full containment with ``margin_px``
    slack and pairwise non-overlap, retried up to ``max_retries`` times.
    """

    side: int = 128
    radius_range: tuple[float, float] = (0.06, 0.12)
    amplitude: float = 1.0
    margin_px: float = 2.0
    max_retries: int = 1000

    def __post_init__(self) -> None:
        lo, hi = self.radius_range
        if self.side < 8:
            raise InvalidInputError("synthetic images need side >= 8")
        if not (0 < lo <= hi < 0.5):
            raise InvalidInputError(f"radius_range must satisfy 0 < lo <= hi < 0.5, got {self.radius_range}")
        if self.amplitude <= 0:
            raise InvalidInputError("amplitude must be positive")


def _place_circles(spec: SyntheticSpec, n_circles: int, rng: np.random.Generator):
    placed: list[tuple[float, float, float]] = []
    for _ in range(n_circles):
        for _ in range(spec.max_retries):
            r = rng.uniform(*spec.radius_range) * spec.side
            lo = r + spec.margin_px
            hi = spec.side - 1 - r - spec.margin_px
            if hi <= lo:
                continue
            cx = rng.uniform(lo, hi)
            cy = rng.uniform(lo, hi)
            gap = spec.margin_px
            if all(
                np.hypot(cx - px, cy - py) > r + pr + gap for px, py, pr in placed
            ):
                placed.append((cx, cy, r))
                break
        else:
            raise PlacementError(
                f"could not place circle {len(placed) + 1}/{n_circles} "
                f"within {spec.max_retries} retries"
            )
    return placed


def synthesize_image(spec: SyntheticSpec, class_id: int, rng: np.random.Generator) -> Image2D:
    """One image of the requested class: three circles with 1px soft rims."""
    if class_id not in CLASS_SIGN_COUNTS:
        raise InvalidInputError(f"class_id must be 1 or 2, got {class_id}")
    n_pos, n_neg = CLASS_SIGN_COUNTS[class_id]
    signs = [spec.amplitude] * n_pos + [-spec.amplitude] * n_neg
    circles = _place_circles(spec, len(signs), rng)
    n = spec.side
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64)
    values = np.zeros((n, n))
    for sign, (cx, cy, r) in zip(signs, circles):
        dist = np.hypot(xx - cx, yy - cy)
        values += sign * np.clip(r + 0.5 - dist, 0.0, 1.0)
    axis = Axis(-1.0, 1.0, n)
    return Image2D(axis, axis, values)


def generate_synthetic(
    spec: SyntheticSpec, n_per_class: int, seed: int = 0
) -> list[tuple[Image2D, int]]:
    """Labelled dataset with ``n_per_class`` images for classes 1 and 2."""
    if n_per_class < 1:
        raise InvalidInputError("n_per_class must be at least 1")
    out: list[tuple[Image2D, int]] = []
    for class_id in (1, 2):
        for index in range(n_per_class):
            rng = np.random.default_rng([seed, class_id, index])
            out.append((synthesize_image(spec, class_id, rng), class_id))
    return out


def dog_filter(img: Image2D, sigma1: float, sigma2: float) -> Image2D:
    """Difference of Gaussians, ``G_sigma1 * img - G_sigma2 * img``.

    Separable convolution with reflective boundaries; sigmas are in pixels
    and must satisfy 0 < sigma1 < sigma2.  Output is band-pass: constants map
    to zero, and non-constant images come out signed.
    """
    if not (0 < sigma1 < sigma2):
        raise InvalidInputError(f"need 0 < sigma1 < sigma2, got {sigma1}, {sigma2}")
    narrow = gaussian_filter(img.values, sigma1, mode="reflect")
    wide = gaussian_filter(img.values, sigma2, mode="reflect")
    return img.with_values(narrow - wide)


@dataclass(frozen=True)
class Manifest:
    """Resolved (path, label) pairs; paths are validated at load time."""

    entries: tuple[tuple[Path, int], ...]
    split: str | None = None

    def labels(self) -> list[int]:
        return sorted({label for _, label in self.entries})

    def __len__(self) -> int:
        return len(self.entries)


def load_manifest(path) -> Manifest:
    """Read a ``path,label`` CSV; relative paths resolve against the CSV."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"manifest not found: {path}")
    entries: list[tuple[Path, int]] = []
    seen: set[Path] = set()
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["path", "label"]:
            raise DataFormatError(f"{path}: expected header 'path,label', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise DataFormatError(f"{path}:{lineno}: malformed row {row!r}")
            entry = Path(row[0].strip())
            if not entry.is_absolute():
                entry = path.parent / entry
            try:
                label = int(row[1])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: label {row[1]!r} is not an integer") from exc
            if label < 0:
                raise DataFormatError(f"{path}:{lineno}: labels must be non-negative")
            if not entry.exists():
                raise DataFormatError(f"{path}:{lineno}: file does not exist: {entry}")
            if entry in seen:
                logger.warning("manifest %s lists %s more than once", path, entry)
            seen.add(entry)
            entries.append((entry, label))
    if not entries:
        raise DataFormatError(f"{path}: manifest has no entries")
    return Manifest(tuple(entries))


def ingest_folder(directory) -> Manifest:
    """Build a manifest from a ``<dir>/<label>/<image>`` folder layout."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataFormatError(f"not a directory: {directory}")
    entries: list[tuple[Path, int]] = []
    label_dirs = sorted(p for p in directory.iterdir() if p.is_dir())
    for label_dir in label_dirs:
        try:
            label = int(label_dir.name)
        except ValueError:
            logger.warning("skipping non-numeric class directory %s", label_dir)
            continue
        if label < 0:
            raise DataFormatError(f"negative class label directory: {label_dir}")
        files = sorted(
            p for p in label_dir.iterdir() if p.suffix.lower() in (".png", ".f64")
        )
        if not files:
            raise DataFormatError(f"class directory {label_dir} holds no images")
        entries.extend((f, label) for f in files)
    if not entries:
        raise DataFormatError(f"{directory}: no class subdirectories with images")
    return Manifest(tuple(entries))


def write_manifest(manifest: Manifest, path) -> None:
    lines = ["path,label"]
    base = Path(path).parent
    for entry, label in manifest.entries:
        try:
            rendered = entry.relative_to(base)
        except ValueError:
            rendered = entry
        lines.append(f"{rendered},{label}")
    _io.atomic_write_bytes(Path(path), ("\n".join(lines) + "\n").encode())


def load_labelled_images(manifest: Manifest) -> list[tuple[Image2D, int]]:
    """Materialize a manifest: PNGs map to [0, 1], containers load as-is."""
    return [(_io.load_image(p), label) for p, label in manifest.entries]
