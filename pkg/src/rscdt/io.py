"""File formats: native float containers, PNG ingestion, CSV export.

The native container is a flat little-endian float64 payload file plus a JSON
sidecar ``<path>.json`` describing shape, axes, and kind.  Supported kinds:
``signal1d``, ``image2d``, ``sinogram``, ``scdt``, ``rscdt``, ``rcdt`` and
``matrix`` (generic 2D payload, used for classifier bases).

All writes are atomic (write to a temp file in the target directory, then
rename), so concurrent readers never observe a partial file.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import DataFormatError
from .grid import Axis, Image2D, Signal1D

__all__ = [
    "atomic_write_bytes",
    "save_container",
    "load_container",
    "save_signal",
    "save_image",
    "load_image",
    "load_png",
    "save_preview_png",
    "export_signal_csv",
]

FORMAT_VERSION = 1


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _axis_to_json(axis: Axis) -> dict:
    return {"start": axis.start, "stop": axis.stop, "count": axis.count}


def _axis_from_json(obj: dict) -> Axis:
    try:
        return Axis(float(obj["start"]), float(obj["stop"]), int(obj["count"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"malformed axis header: {obj!r}") from exc


def save_container(path, payload: np.ndarray, header: dict) -> None:
    """Write a flat float64 payload plus its JSON sidecar header."""
    path = Path(path)
    payload = np.ascontiguousarray(payload, dtype="<f8").ravel()
    header = dict(header)
    header["version"] = FORMAT_VERSION
    atomic_write_bytes(path, payload.tobytes())
    _atomic_write_text(path.with_name(path.name + ".json"), json.dumps(header, sort_keys=True))


def load_container(path) -> tuple[np.ndarray, dict]:
    """Read payload + header; validates payload length against the header."""
    path = Path(path)
    sidecar = path.with_name(path.name + ".json")
    if not path.exists():
        raise DataFormatError(f"container payload not found: {path}")
    if not sidecar.exists():
        raise DataFormatError(f"container sidecar not found: {sidecar}")
    try:
        header = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"unparseable sidecar {sidecar}: {exc}") from exc
    payload = np.frombuffer(path.read_bytes(), dtype="<f8")
    expected = _expected_size(header)
    if expected is not None and payload.size != expected:
        raise DataFormatError(
            f"{path}: payload has {payload.size} values, header implies {expected}"
        )
    return payload, header


def _expected_size(header: dict) -> int | None:
    kind = header.get("kind")
    if kind in ("signal1d", "image2d", "sinogram", "matrix") and "shape" in header:
        return int(np.prod(header["shape"]))
    if kind == "scdt":
        n = int(header["ref"]["count"])
        return 2 * n
    if kind in ("rscdt", "rcdt"):
        n = int(header["t_axis"]["count"])
        k = len(header["angles"])
        return k * (2 * n + 2) if kind == "rscdt" else k * n
    return None


# -- typed wrappers ---------------------------------------------------------


def save_signal(s: Signal1D, path) -> None:
    save_container(
        path, s.values, {"kind": "signal1d", "shape": [s.axis.count], "axes": [_axis_to_json(s.axis)]}
    )


def _load_signal(payload: np.ndarray, header: dict) -> Signal1D:
    axis = _axis_from_json(header["axes"][0])
    return Signal1D(axis, payload)


def save_image(img: Image2D, path) -> None:
    save_container(
        path,
        img.values,
        {
            "kind": "image2d",
            "shape": list(img.values.shape),
            "axes": [_axis_to_json(img.x_axis), _axis_to_json(img.y_axis)],
        },
    )


def _load_image_container(payload: np.ndarray, header: dict) -> Image2D:
    x_axis = _axis_from_json(header["axes"][0])
    y_axis = _axis_from_json(header["axes"][1])
    try:
        values = payload.reshape(header["shape"])
    except ValueError as exc:
        raise DataFormatError(f"image payload does not match shape {header['shape']}") from exc
    return Image2D(x_axis, y_axis, values)


def load_signal(path) -> Signal1D:
    payload, header = load_container(path)
    if header.get("kind") != "signal1d":
        raise DataFormatError(f"{path}: expected signal1d, got kind={header.get('kind')!r}")
    return _load_signal(payload, header)


def load_png(path, dog=None) -> Image2D:
    """Load a grayscale PNG, mapping 8/16-bit values linearly to [0, 1].

    Rows are flipped so row 0 of the file (image top) lands at the largest y
    coordinate.  Color inputs are converted to grayscale first.
    """
    try:
        with PILImage.open(path) as im:
            if im.mode in ("I;16", "I"):
                arr = np.asarray(im, dtype=np.float64) / 65535.0
            else:
                if im.mode != "L":
                    im = im.convert("L")
                arr = np.asarray(im, dtype=np.float64) / 255.0
    except (OSError, ValueError) as exc:
        raise DataFormatError(f"cannot read PNG {path}: {exc}") from exc
    ny, nx = arr.shape
    if ny < 2 or nx < 2:
        raise DataFormatError(f"{path}: image too small ({ny}x{nx})")
    img = Image2D(Axis(-1.0, 1.0, nx), Axis(-1.0, 1.0, ny), arr[::-1, :])
    return img


def load_image(path) -> Image2D:
    """Load an image from a PNG or a native container, by extension."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        return load_png(path)
    payload, header = load_container(path)
    if header.get("kind") != "image2d":
        raise DataFormatError(f"{path}: expected image2d, got kind={header.get('kind')!r}")
    return _load_image_container(payload, header)


def save_preview_png(img: Image2D, path) -> None:
    """Write an 8-bit preview: signed values map symmetrically, 0 -> 128.

    The scale (max absolute value) is recorded in a JSON sidecar so the
    mapping is invertible up to quantization.
    """
    scale = float(np.max(np.abs(img.values)))
    denom = scale if scale > 0 else 1.0
    byte = np.clip(np.round(128.0 + img.values / denom * 127.0), 0, 255).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(byte[::-1, :], mode="L").save(path)
    _atomic_write_text(
        path.with_name(path.name + ".json"),
        json.dumps({"kind": "preview", "scale": scale, "zero_level": 128}, sort_keys=True),
    )


def export_signal_csv(coords: np.ndarray, values: np.ndarray, path) -> None:
    """Two-column CSV export: coordinate, value."""
    lines = ["coordinate,value"]
    lines += [f"{float(c)!r},{float(v)!r}" for c, v in zip(coords, values)]
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")
