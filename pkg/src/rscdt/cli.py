"""Command-line interface: dataset generation, transforms, distances,
training, and evaluation, wired for reproducible experiments.

Configuration precedence is flags > ``--config`` JSON file > defaults, and
every command that writes into an output directory echoes its resolved
configuration there as ``config.json``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import io as _io
from .classifier import (
    FeatureConfig,
    evaluate,
    load_model,
    predict,
    save_model,
    train,
)
from .datasets import (
    Manifest,
    SyntheticSpec,
    dog_filter,
    generate_synthetic,
    ingest_folder,
    load_labelled_images,
    load_manifest,
    write_manifest,
)
from .errors import (
    ConfigMismatchError,
    DataFormatError,
    InvalidInputError,
    PlacementError,
    SingularTransportError,
)
from .grid import Image2D
from .transforms2d import (
    TransformConfig,
    feature_distance,
    load_rcdt,
    load_rscdt,
    rcdt,
    rcdt_inverse,
    rscdt,
    rscdt_inverse,
    save_rcdt,
    save_rscdt,
    signed_sliced_wasserstein,
)

DEFAULTS = {
    "angles": 180,
    "offsets": None,
    "size": 128,
    "seed": 0,
    "kind": "rscdt",
    "dog": None,
    "rank_cutoff": None,
    "samples_per_class": 10,
    "amplitude": 1.0,
}


def _parse_dog(value):
    if value in (None, "", "none"):
        return None
    try:
        parts = [float(p) for p in str(value).split(",")]
        if len(parts) != 2:
            raise ValueError
    except ValueError:
        raise click.BadParameter(f"--dog expects 'sigma1,sigma2', got {value!r}")
    return tuple(parts)


def _load_config_file(path):
    if path is None:
        return {}
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataFormatError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise DataFormatError(f"config file {path} must hold a JSON object")
    return {str(k).replace("-", "_"): v for k, v in raw.items()}


def _resolve(config_path, **flags):
    """Merge flag values over config-file values over defaults."""
    resolved = dict(DEFAULTS)
    resolved.update(_load_config_file(config_path))
    for key, value in flags.items():
        if value is not None:
            resolved[key] = value
    if isinstance(resolved.get("dog"), str):
        resolved["dog"] = _parse_dog(resolved["dog"])
    if resolved.get("dog") is not None:
        resolved["dog"] = tuple(float(v) for v in resolved["dog"])
    return resolved


def _echo_config(out_dir: Path, command: str, resolved: dict) -> None:
    payload = {"command": command}
    payload.update(
        {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(resolved.items())}
    )
    _io.atomic_write_bytes(out_dir / "config.json", json.dumps(payload, sort_keys=True, indent=1).encode())


def _load_samples(data: str) -> Manifest:
    path = Path(data)
    if path.is_dir():
        manifest_csv = path / "manifest.csv"
        if manifest_csv.exists():
            return load_manifest(manifest_csv)
        return ingest_folder(path)
    return load_manifest(path)


def _maybe_dog(img: Image2D, dog) -> Image2D:
    if dog is None:
        return img
    return dog_filter(img, dog[0], dog[1])


def _inscribed_disk_mask(img: Image2D) -> np.ndarray:
    xs = img.x_axis.coords()
    ys = img.y_axis.coords()
    xx, yy = np.meshgrid(xs, ys, indexing="xy")
    radius = min(
        (img.x_axis.stop - img.x_axis.start) / 2.0, (img.y_axis.stop - img.y_axis.start) / 2.0
    )
    cx = (img.x_axis.start + img.x_axis.stop) / 2.0
    cy = (img.y_axis.start + img.y_axis.stop) / 2.0
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= radius**2


@click.group()
def cli():
    """Transport transforms and nearest-subspace classification for signed images."""


@cli.command()
@click.option("--samples-per-class", type=click.IntRange(min=1), default=None,
              help="Images per class (two classes are generated).")
@click.option("--size", type=click.IntRange(min=8), default=None, help="Image side in pixels.")
@click.option("--seed", type=int, default=None, help="Base RNG seed.")
@click.option("--amplitude", type=float, default=None, help="Circle amplitude magnitude.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output directory.")
@click.option("--previews", is_flag=True, default=False,
              help="Also write an 8-bit preview PNG per image.")
@click.option("--config", "config_path", type=click.Path(exists=False), default=None)
def generate(samples_per_class, size, seed, amplitude, out_dir, previews, config_path):
    """Write a synthetic signed-circles dataset plus its manifest."""
    resolved = _resolve(config_path, samples_per_class=samples_per_class, size=size,
                        seed=seed, amplitude=amplitude)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = SyntheticSpec(side=int(resolved["size"]), amplitude=float(resolved["amplitude"]))
    data = generate_synthetic(spec, int(resolved["samples_per_class"]), int(resolved["seed"]))
    entries = []
    counters: dict[int, int] = {}
    for img, label in data:
        idx = counters.get(label, 0)
        counters[label] = idx + 1
        name = f"img_c{label}_{idx:04d}.f64"
        _io.save_image(img, out / name)
        if previews:
            _io.save_preview_png(img, out / f"img_c{label}_{idx:04d}.png")
        entries.append((out / name, label))
    write_manifest(Manifest(tuple(entries)), out / "manifest.csv")
    _echo_config(out, "generate", resolved)
    click.echo(f"wrote {len(entries)} images and manifest.csv to {out}")


@cli.command("filter-dog")
@click.argument("src", type=click.Path(exists=True))
@click.argument("dst", type=click.Path())
@click.option("--dog", default=None, help="Filter scales as 'sigma1,sigma2' (pixels).")
@click.option("--preview", type=click.Path(), default=None, help="Also write an 8-bit preview PNG.")
@click.option("--config", "config_path", type=click.Path(), default=None)
def filter_dog_cmd(src, dst, dog, preview, config_path):
    """Apply the difference-of-Gaussians filter to an image file."""
    resolved = _resolve(config_path, dog=_parse_dog(dog))
    sigmas = resolved["dog"] or (1.0, 2.0)
    img = dog_filter(_io.load_image(src), sigmas[0], sigmas[1])
    _io.save_image(img, dst)
    if preview:
        _io.save_preview_png(img, preview)
    click.echo(f"filtered {src} -> {dst} (sigmas {sigmas[0]}, {sigmas[1]})")


@cli.command()
@click.argument("src", type=click.Path(exists=True))
@click.argument("dst", type=click.Path())
@click.option("--kind", type=click.Choice(["rscdt", "rcdt-abs"]), default=None)
@click.option("--angles", type=click.IntRange(min=2), default=None)
@click.option("--offsets", type=click.IntRange(min=2), default=None)
@click.option("--dog", default=None, help="Optional pre-filter 'sigma1,sigma2'.")
@click.option("--config", "config_path", type=click.Path(), default=None)
def transform(src, dst, kind, angles, offsets, dog, config_path):
    """Transform an image into a feature container."""
    resolved = _resolve(config_path, kind=kind, angles=angles, offsets=offsets,
                        dog=_parse_dog(dog))
    img = _maybe_dog(_io.load_image(src), resolved["dog"])
    cfg = TransformConfig(n_angles=int(resolved["angles"]),
                          n_offsets=resolved["offsets"] and int(resolved["offsets"]))
    if resolved["kind"] == "rcdt-abs":
        if np.min(img.values) < 0:
            click.echo("notice: signed input, taking absolute values for rcdt", err=True)
        feat = rcdt(img.with_values(np.abs(img.values)), cfg)
        save_rcdt(feat, dst)
    else:
        save_rscdt(rscdt(img, cfg), dst)
    click.echo(f"transformed {src} -> {dst} ({resolved['kind']}, {resolved['angles']} angles)")


@cli.command()
@click.argument("src", type=click.Path(exists=True))
@click.argument("dst", type=click.Path())
@click.option("--reference", type=click.Path(exists=True), default=None,
              help="Original image; prints the relative L2 error inside the inscribed disk.")
@click.option("--preview", type=click.Path(), default=None, help="Also write an 8-bit preview PNG.")
def reconstruct(src, dst, reference, preview):
    """Invert a feature container back to an image."""
    _, header = _io.load_container(src)
    kind = header.get("kind")
    ref_img = _io.load_image(reference) if reference else None
    axes = (ref_img.x_axis, ref_img.y_axis) if ref_img else (None, None)
    if kind == "rscdt":
        img = rscdt_inverse(load_rscdt(src), *axes)
    elif kind == "rcdt":
        img = rcdt_inverse(load_rcdt(src), *axes)
    else:
        raise DataFormatError(f"{src}: cannot reconstruct from kind={kind!r}")
    _io.save_image(img, dst)
    if preview:
        _io.save_preview_png(img, preview)
    if ref_img is not None:
        mask = _inscribed_disk_mask(ref_img)
        num = float(np.sqrt(np.sum((img.values - ref_img.values)[mask] ** 2)))
        den = float(np.sqrt(np.sum(ref_img.values[mask] ** 2)))
        rel = num / den if den > 0 else float("inf")
        click.echo(f"relative L2 error (inscribed disk): {rel:.6f}")
    click.echo(f"reconstructed {src} -> {dst}")


@cli.command()
@click.argument("first", type=click.Path(exists=True))
@click.argument("second", type=click.Path(exists=True))
@click.option("--angles", type=click.IntRange(min=2), default=None)
@click.option("--offsets", type=click.IntRange(min=2), default=None)
@click.option("--dog", default=None, help="Optional pre-filter 'sigma1,sigma2'.")
@click.option("--check-isometry", is_flag=True, default=False,
              help="Also print the flattened-feature distance.")
@click.option("--config", "config_path", type=click.Path(), default=None)
def distance(first, second, angles, offsets, dog, check_isometry, config_path):
    """Signed sliced-Wasserstein distance between two images."""
    resolved = _resolve(config_path, angles=angles, offsets=offsets, dog=_parse_dog(dog))
    img1 = _maybe_dog(_io.load_image(first), resolved["dog"])
    img2 = _maybe_dog(_io.load_image(second), resolved["dog"])
    cfg = TransformConfig(n_angles=int(resolved["angles"]),
                          n_offsets=resolved["offsets"] and int(resolved["offsets"]))
    dist = signed_sliced_wasserstein(img1, img2, cfg)
    click.echo(f"distance: {dist:.9f}")
    if check_isometry:
        flat = feature_distance(rscdt(img1, cfg), rscdt(img2, cfg))
        gap = abs(dist - flat) / dist if dist > 0 else 0.0
        click.echo(f"transform-domain distance: {flat:.9f}")
        click.echo(f"relative isometry gap: {gap:.6f}")


def _feature_config(resolved, image_shape=None) -> FeatureConfig:
    return FeatureConfig(
        kind=resolved["kind"],
        n_angles=int(resolved["angles"]),
        n_offsets=resolved["offsets"] and int(resolved["offsets"]),
        image_shape=image_shape,
        dog_sigmas=resolved["dog"],
    )


@cli.command("train")
@click.option("--data", required=True, type=click.Path(exists=True),
              help="Manifest CSV, dataset directory, or labelled folder tree.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Model directory.")
@click.option("--kind", type=click.Choice(["rscdt", "rcdt-abs"]), default=None)
@click.option("--angles", type=click.IntRange(min=2), default=None)
@click.option("--offsets", type=click.IntRange(min=2), default=None)
@click.option("--dog", default=None, help="Optional pre-filter 'sigma1,sigma2'.")
@click.option("--rank-cutoff", type=click.IntRange(min=1), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
def train_cmd(data, out_dir, kind, angles, offsets, dog, rank_cutoff, config_path):
    """Train a nearest-subspace model from labelled images."""
    resolved = _resolve(config_path, kind=kind, angles=angles, offsets=offsets,
                        dog=_parse_dog(dog), rank_cutoff=rank_cutoff)
    samples = load_labelled_images(_load_samples(data))
    model = train(samples, _feature_config(resolved),
                  rank_cutoff=resolved["rank_cutoff"])
    out = Path(out_dir)
    save_model(model, out)
    _echo_config(out, "train", resolved)
    ranks = {lab: model.rank(lab) for lab in model.labels}
    click.echo(f"trained {resolved['kind']} model on {len(samples)} samples; ranks {ranks}")


def _check_model_overrides(model_config: FeatureConfig, resolved_flags: dict) -> None:
    requested_angles = resolved_flags.get("angles")
    if requested_angles is not None and int(requested_angles) != model_config.n_angles:
        raise ConfigMismatchError(
            f"model was trained with {model_config.n_angles} angles, "
            f"requested {requested_angles}"
        )
    requested_offsets = resolved_flags.get("offsets")
    if requested_offsets is not None and model_config.n_offsets is not None and \
            int(requested_offsets) != model_config.n_offsets:
        raise ConfigMismatchError(
            f"model was trained with {model_config.n_offsets} offsets, "
            f"requested {requested_offsets}"
        )


@cli.command("predict")
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.argument("image", type=click.Path(exists=True))
@click.option("--angles", type=click.IntRange(min=2), default=None,
              help="Must match the model configuration if given.")
@click.option("--offsets", type=click.IntRange(min=2), default=None)
def predict_cmd(model_dir, image, angles, offsets):
    """Predict the class of one image."""
    model = load_model(model_dir)
    _check_model_overrides(model.config, {"angles": angles, "offsets": offsets})
    label, residuals = predict(model, _io.load_image(image))
    click.echo(f"label: {label}")
    click.echo("residuals: " + ", ".join(
        f"{lab}={val:.6g}" for lab, val in zip(model.labels, residuals)))


@cli.command("evaluate")
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Where to write report.csv and residuals.csv.")
@click.option("--angles", type=click.IntRange(min=2), default=None)
@click.option("--offsets", type=click.IntRange(min=2), default=None)
def evaluate_cmd(model_dir, data, out_dir, angles, offsets):
    """Evaluate a model over a labelled dataset."""
    model = load_model(model_dir)
    _check_model_overrides(model.config, {"angles": angles, "offsets": offsets})
    samples = load_labelled_images(_load_samples(data))
    report = evaluate(model, samples)
    click.echo(f"accuracy: {report.accuracy:.4f} over {len(samples)} samples")
    for i, true_label in enumerate(report.labels):
        row = ", ".join(str(int(c)) for c in report.confusion[i])
        click.echo(f"confusion[true={true_label}]: {row}")
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        lines = [f"accuracy,{report.accuracy!r}"]
        lines.append("labels," + ",".join(str(l) for l in report.labels))
        for i, true_label in enumerate(report.labels):
            lines.append(
                f"confusion_true_{true_label}," + ",".join(str(int(c)) for c in report.confusion[i])
            )
        _io.atomic_write_bytes(out / "report.csv", ("\n".join(lines) + "\n").encode())
        res_lines = ["index,true,predicted," + ",".join(f"residual_{l}" for l in report.labels)]
        for i in range(len(samples)):
            res = ",".join(repr(float(v)) for v in report.residuals[i])
            res_lines.append(f"{i},{report.true_labels[i]},{report.predictions[i]},{res}")
        _io.atomic_write_bytes(out / "residuals.csv", ("\n".join(res_lines) + "\n").encode())
        meta = {
            "command": "evaluate",
            "model": str(model_dir),
            "data": str(data),
            "config": {
                "kind": model.config.kind,
                "angles": model.config.n_angles,
                "offsets": model.config.n_offsets,
                "dog": model.config.dog_sigmas,
                "image_shape": model.config.image_shape,
            },
        }
        _io.atomic_write_bytes(out / "config.json", json.dumps(meta, sort_keys=True, indent=1).encode())
        click.echo(f"wrote report.csv and residuals.csv to {out}")


def main(argv=None) -> int:
    """Entry point with the stable exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        code = exc.exit_code
        sys.exit(code)
    except click.UsageError as exc:
        exc.show()
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except InvalidInputError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except (DataFormatError, ConfigMismatchError, PlacementError, OSError) as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(2)
    except (SingularTransportError, FloatingPointError, np.linalg.LinAlgError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(3)
    return 0


if __name__ == "__main__":
    main()
