import json

import numpy as np
import pytest

import vxai

Y_SPEC = {
    "kind": "y_junction",
    "dims": [48, 48, 32],
    "primitives": [
        {"type": "cylinder", "a": [24, 24, 16], "b": [44, 24, 16], "radius": 2.5},
        {"type": "cylinder", "a": [24, 24, 16], "b": [10, 38, 16], "radius": 2.5},
        {"type": "cylinder", "a": [24, 24, 16], "b": [10, 10, 16], "radius": 2.5},
    ],
}


def bump(shape_zyx, center_xyz, sigma=2.5, amplitude=1.0):
    z, y, x = np.indices(shape_zyx, dtype=np.float64)
    cx, cy, cz = center_xyz
    r2 = (x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2
    return (amplitude * np.exp(-r2 / (2 * sigma**2))).astype(np.float32)


@pytest.fixture(scope="module")
def y_phantom():
    return vxai.generate_phantom(json.dumps(Y_SPEC))


def test_version():
    assert vxai.__version__.count(".") == 2


def test_patch_grid():
    assert vxai.patch_starts((160, 160, 160), 64, 0.25) == ([0, 48, 96],) * 3
    assert vxai.patch_starts((100, 100, 100), 64, 0.25)[0] == [0, 36]
    assert len(vxai.patches_containing((160, 160, 160), 64, 0.25, (50, 50, 50))) == 8
    assert vxai.patches_containing((160, 160, 160), 64, 0.25, (0, 0, 0)) == [[0, 0, 0]]
    with pytest.raises(vxai.DomainError):
        vxai.patch_starts((32, 32, 32), 64, 0.25)


def test_volume_round_trip(tmp_path):
    a = np.random.default_rng(0).normal(size=(3, 4, 5)).astype(np.float32)
    path = tmp_path / "a.nii"
    vxai.write_volume(path, a, kind="attribution", spacing=(0.5, 0.5, 2.0))
    back, spacing, kind = vxai.read_volume(path)
    assert back.shape == (3, 4, 5)
    assert np.array_equal(back, a)
    assert spacing == (0.5, 0.5, 2.0)
    assert kind == "attribution"


def test_malformed_volume_is_an_input_error(tmp_path):
    bad = tmp_path / "bad.nii"
    bad.write_bytes(b"not a volume")
    with pytest.raises(vxai.InputError):
        vxai.read_volume(bad)
    assert issubclass(vxai.InputError, vxai.Error)


def test_edt():
    m = np.zeros((5, 5, 5), np.float32)
    m[2, 2, 2] = 1
    d = vxai.edt(m)
    assert d[2, 2, 2] == 1.0
    assert d.sum() == 1.0


def test_y_phantom_graph_and_pois(y_phantom):
    image, gt = y_phantom
    assert gt.shape == (32, 48, 48)
    g = vxai.extract_graph(gt)
    degrees = sorted(n["degree"] for n in g["nodes"])
    assert degrees == [1, 1, 1, 3]
    assert len(g["edges"]) == 3
    pois = vxai.select_pois(gt, 32, 0.25)
    assert len(pois) == 7
    assert sorted({p["kind"] for p in pois}) == ["bifurcation", "endpoint", "midpoint"]
    assert all(1 <= len(p["patches"]) <= 8 for p in pois)
    bif = next(p for p in pois if p["kind"] == "bifurcation")
    assert vxai.relative_connectivity(gt, bif["position"]) == 3


def test_blob_detector_finds_a_bump():
    blobs = vxai.detect_blobs(bump((32, 32, 32), (15, 16, 17), sigma=3.0), sigmas=[2, 3, 4])
    assert len(blobs) == 1
    assert np.allclose(blobs[0]["centroid"], (15, 16, 17), atol=1.0)
    assert vxai.detect_blobs(np.zeros((16, 16, 16), np.float32)) == []


def test_frangi_and_otsu():
    r = vxai.multiscale_frangi(np.full((12, 12, 12), 0.3, np.float32), sigmas=[2])
    assert not r.any()
    t = vxai.otsu_threshold(np.array([0, 0, 0, 1, 1, 1], np.float32), bins=4)
    assert 0 < t < 1


def test_statistics_anchors():
    assert vxai.fisher_cnr([1, 3], [0, 2]) == 0.5
    assert vxai.spearman([1, 2, 3, 4], [1, 3, 2, 4]) == 0.8
    assert vxai.l1_ratio([2, -2], [0.5, -0.5, 1, 0]) == 4.0
    with pytest.raises(vxai.DegenerateInput):
        vxai.fisher_cnr([2, 2], [0, 0])


def test_naming_contract():
    assert vxai.attribution_file_name(3, (0, 1, 2)) == "attr_3_0_1_2.nii"
    assert vxai.prediction_file_name((2, 0, 1)) == "pred_2_0_1.nii"


def write_dataset(root, y_phantom):
    image, gt = y_phantom
    (root / "attr").mkdir()
    vxai.write_volume(root / "gt.nii", gt, kind="binary-mask")
    vxai.write_volume(root / "image.nii", image)
    vxai.write_volume(root / "pred.nii", gt, kind="binary-mask")
    starts = vxai.patch_starts((48, 48, 32), 32, 0.25)
    for p in vxai.select_pois(gt, 32, 0.25):
        for ix, iy, iz in p["patches"]:
            origin = (starts[0][ix], starts[1][iy], starts[2][iz])
            local = tuple(c - o for c, o in zip(p["position"], origin))
            vxai.write_volume(
                root / "attr" / vxai.attribution_file_name(p["id"], (ix, iy, iz)),
                bump((32, 32, 32), local),
                kind="attribution",
            )
    config = {
        "paths": {
            "gt_mask": "gt.nii",
            "image": "image.nii",
            "prediction": "pred.nii",
            "attribution_dir": "attr",
            "output_dir": "out",
        },
        "patch": {"size": 32, "overlap": 0.25},
        "detector": {"sigmas": [1, 2, 3, 4]},
    }
    path = root / "config.json"
    path.write_text(json.dumps(config))
    return path


def test_pipeline_end_to_end(tmp_path, y_phantom):
    config = write_dataset(tmp_path, y_phantom)
    echoed = vxai.validate_config(config)
    assert echoed["patch"]["size"] == 32
    manifest = vxai.run_pipeline(config)
    assert manifest["rows_conserved"] is True
    assert manifest["counts"]["pois"] == 7
    first = (tmp_path / "out" / "attribution.csv").read_bytes()
    vxai.run_pipeline(config, out_dir=tmp_path / "again", workers=2)
    assert (tmp_path / "again" / "attribution.csv").read_bytes() == first


def test_bad_config_is_a_config_error(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"patch": {"size": 32, "colour": 1}}')
    with pytest.raises(vxai.ConfigError):
        vxai.validate_config(path)
