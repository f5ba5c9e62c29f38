import numpy as np
import pytest
from PIL import Image as PILImage
from scipy.ndimage import label as nd_label

from rscdt import (
    DataFormatError,
    Image2D,
    InvalidInputError,
    PlacementError,
    SyntheticSpec,
    dog_filter,
    generate_synthetic,
    ingest_folder,
    integrate_image,
    load_manifest,
)
from rscdt.datasets import load_labelled_images, synthesize_image, write_manifest
from rscdt.grid import Axis


SPEC = SyntheticSpec(side=64)


def sign_region_counts(img):
    _, n_pos = nd_label(img.values > 0.5)
    _, n_neg = nd_label(img.values < -0.5)
    return n_pos, n_neg


def test_class_sign_counts():
    data = generate_synthetic(SPEC, 10, seed=3)
    for img, label in data:
        n_pos, n_neg = sign_region_counts(img)
        if label == 1:
            assert (n_pos, n_neg) == (2, 1)
        else:
            assert (n_pos, n_neg) == (1, 2)


def test_same_seed_bit_identical():
    a = generate_synthetic(SPEC, 4, seed=11)
    b = generate_synthetic(SPEC, 4, seed=11)
    for (img_a, lab_a), (img_b, lab_b) in zip(a, b):
        assert lab_a == lab_b
        assert np.array_equal(img_a.values, img_b.values)


def test_different_seed_differs():
    a = generate_synthetic(SPEC, 2, seed=1)
    b = generate_synthetic(SPEC, 2, seed=2)
    assert not np.array_equal(a[0][0].values, b[0][0].values)


def test_net_mass_sign_by_class():
    data = generate_synthetic(SPEC, 25, seed=5)
    mass = {1: [], 2: []}
    for img, label in data:
        mass[label].append(integrate_image(img))
    assert np.mean(mass[1]) > 0
    assert np.mean(mass[2]) < 0
    # absolute values erase the class distinction entirely
    assert np.mean(mass[1]) == pytest.approx(-np.mean(mass[2]), rel=0.25)


def test_circles_do_not_overlap():
    data = generate_synthetic(SyntheticSpec(side=64, amplitude=2.0), 10, seed=9)
    for img, _ in data:
        assert np.max(np.abs(img.values)) <= 2.0 + 1e-12


def test_placement_failure_raises():
    spec = SyntheticSpec(side=64, radius_range=(0.3, 0.4), max_retries=50)
    rng = np.random.default_rng(0)
    with pytest.raises(PlacementError):
        synthesize_image(spec, 1, rng)


def test_spec_validation():
    with pytest.raises(InvalidInputError):
        SyntheticSpec(radius_range=(0.2, 0.1))
    with pytest.raises(InvalidInputError):
        SyntheticSpec(amplitude=0.0)


# -- difference of Gaussians ---------------------------------------------------


def square_image(n=48, lo=12, hi=36, value=1.0):
    values = np.zeros((n, n))
    values[lo:hi, lo:hi] = value
    axis = Axis(-1.0, 1.0, n)
    return Image2D(axis, axis, values)


def test_dog_constant_image_is_zero():
    axis = Axis(-1.0, 1.0, 32)
    img = Image2D(axis, axis, np.full((32, 32), 0.7))
    out = dog_filter(img, 1.0, 2.0)
    assert np.max(np.abs(out.values)) < 1e-12


def test_dog_interior_content_integrates_to_zero():
    img = square_image()
    out = dog_filter(img, 1.0, 2.0)
    l1 = np.sum(np.abs(img.values))
    assert abs(np.sum(out.values)) < 1e-3 * l1


def test_dog_step_edge_double_lobe():
    # along the gradient direction the response has one positive and one
    # negative lobe on each side of the edge
    n = 64
    values = np.zeros((n, n))
    values[:, n // 2 :] = 1.0
    axis = Axis(-1.0, 1.0, n)
    out = dog_filter(Image2D(axis, axis, values), 1.0, 2.0)
    row = out.values[n // 2]
    significant = row[np.abs(row) > 1e-6 * np.max(np.abs(row))]
    signs = np.sign(significant)
    runs = 1 + int(np.sum(np.diff(signs) != 0))
    assert runs == 2
    assert significant.max() > 0 and significant.min() < 0


def test_dog_linearity(rng):
    axis = Axis(-1.0, 1.0, 32)
    a = Image2D(axis, axis, rng.standard_normal((32, 32)))
    b = Image2D(axis, axis, rng.standard_normal((32, 32)))
    combo = Image2D(axis, axis, 2.0 * a.values - 0.5 * b.values)
    out = dog_filter(combo, 1.0, 2.0)
    expected = 2.0 * dog_filter(a, 1.0, 2.0).values - 0.5 * dog_filter(b, 1.0, 2.0).values
    assert np.max(np.abs(out.values - expected)) < 1e-12


def test_dog_translation_equivariance_interior():
    img = square_image(64, 20, 40)
    out = dog_filter(img, 1.0, 2.0)
    shifted_in = np.roll(img.values, 3, axis=1)
    out_shifted = dog_filter(img.with_values(shifted_in), 1.0, 2.0)
    expected = np.roll(out.values, 3, axis=1)
    interior = (slice(10, -10), slice(10, -10))
    assert np.max(np.abs(out_shifted.values[interior] - expected[interior])) < 1e-10


def test_dog_rejects_bad_sigmas():
    img = square_image(16, 4, 12)
    for s1, s2 in ((0.0, 1.0), (2.0, 1.0), (1.0, 1.0), (-1.0, 2.0)):
        with pytest.raises(InvalidInputError):
            dog_filter(img, s1, s2)


# -- manifests -------------------------------------------------------------------


def _write_png(path, value=128):
    arr = np.full((16, 16), value, dtype=np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    PILImage.fromarray(arr, mode="L").save(path)


def test_ingest_folder(tmp_path):
    for label in (0, 1):
        for i in range(3):
            _write_png(tmp_path / str(label) / f"im{i}.png")
    manifest = ingest_folder(tmp_path)
    assert len(manifest) == 6
    assert manifest.labels() == [0, 1]
    images = load_labelled_images(manifest)
    assert images[0][0].values.shape == (16, 16)


def test_ingest_folder_empty(tmp_path):
    (tmp_path / "0").mkdir()
    with pytest.raises(DataFormatError):
        ingest_folder(tmp_path)


def test_manifest_round_trip(tmp_path):
    for label in (0, 1):
        _write_png(tmp_path / str(label) / "im.png")
    manifest = ingest_folder(tmp_path)
    write_manifest(manifest, tmp_path / "manifest.csv")
    back = load_manifest(tmp_path / "manifest.csv")
    assert len(back) == 2
    assert [lab for _, lab in back.entries] == [lab for _, lab in manifest.entries]


def test_manifest_missing_file_names_row(tmp_path):
    (tmp_path / "manifest.csv").write_text("path,label\nmissing.png,0\n")
    with pytest.raises(DataFormatError) as err:
        load_manifest(tmp_path / "manifest.csv")
    assert "2" in str(err.value)  # row number


def test_manifest_bad_label(tmp_path):
    _write_png(tmp_path / "im.png")
    (tmp_path / "manifest.csv").write_text("path,label\nim.png,abc\n")
    with pytest.raises(DataFormatError):
        load_manifest(tmp_path / "manifest.csv")


def test_manifest_bad_header(tmp_path):
    (tmp_path / "manifest.csv").write_text("file,cls\nim.png,0\n")
    with pytest.raises(DataFormatError):
        load_manifest(tmp_path / "manifest.csv")


def test_manifest_duplicate_warns(tmp_path, caplog):
    _write_png(tmp_path / "im.png")
    (tmp_path / "manifest.csv").write_text("path,label\nim.png,0\nim.png,1\n")
    with caplog.at_level("WARNING"):
        manifest = load_manifest(tmp_path / "manifest.csv")
    assert len(manifest) == 2
    assert any("more than once" in rec.message for rec in caplog.records)
