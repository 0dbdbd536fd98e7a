import base64
import json
import os
import subprocess
from pathlib import Path

import jsonschema
import numpy as np
import pytest

import forge

SCHEMAS = Path(os.environ.get("FORGE_SCHEMAS", Path(__file__).resolve().parents[2] / "schemas" / "v1"))
CLI = os.environ.get("FORGE_CLI")


def schema(name):
    return json.loads((SCHEMAS / f"{name}.json").read_text())


def payload(path, fmt):
    return {"format": fmt, "encoding": "base64", "data": base64.b64encode(Path(path).read_bytes()).decode()}


def b64(path):
    return base64.b64encode(Path(path).read_bytes()).decode()


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("compose")
    forge.write_compose_fixture(d)
    return d


def test_iou_and_errors():
    assert forge.iou([0, 0, 0.2, 0.2], [0.1, 0.1, 0.3, 0.3]) == pytest.approx(1 / 7, abs=1e-15)
    assert forge.iou([0, 0, 0.5, 0.5], [0, 0, 0.5, 0.5]) == 1.0
    with pytest.raises(forge.ForgeError) as err:
        forge.iou([0.6, 0, 0.2, 1], [0, 0, 1, 1])
    assert err.value.code == "DegenerateBox"


def test_fuse_leaves_outside_of_box_untouched():
    rng = np.random.default_rng(0)
    bg = rng.uniform(0, 0.4, size=(60, 80)).astype(np.float32)
    obj = np.full((20, 20), 0.5, np.float32)
    mask = np.ones((20, 20), np.float32)
    out = forge.fuse(bg, obj, mask, [0.25, 0.25, 0.5, 0.5], 0.7, alpha=0.0)
    fused = out["fused_depth"]
    assert fused.shape == bg.shape
    inside = np.zeros_like(bg, bool)
    inside[15:30, 20:40] = True
    assert np.array_equal(fused[~inside], bg[~inside])
    assert np.allclose(fused[out["placed_obj_mask"]], 0.7)


def test_detail_map_and_mask_ladder():
    img = np.full((16, 16, 3), 90, np.uint8)
    img[:, 8:] = 200
    full = np.ones((16, 16), np.float32)
    hf = forge.hf_extract(img, full)
    assert set(np.nonzero(hf.any(axis=0))[0]) == {7, 8}
    assert not forge.hf_extract(np.full((9, 9, 3), 7, np.uint8), np.ones((9, 9)))[:].any()

    blob = np.zeros((40, 40), np.float32)
    blob[10:20, 12:30] = 1
    blob[20:28, 12:16] = 1
    ladder = forge.mask_ladder(blob)
    assert len(ladder) == 5
    for inner, outer in zip(ladder, ladder[1:]):
        assert not (inner & ~outer).any()


def test_cfg_and_drops():
    rng = np.random.default_rng(1)
    uc, c = rng.normal(size=(2, 3, 4)), rng.normal(size=(2, 3, 4))
    assert np.allclose(forge.cfg_combine(uc, c, 1.0), c, atol=1e-12)
    assert np.allclose(forge.cfg_combine(uc, c, 0.0), uc, atol=1e-12)
    assert np.allclose(forge.cfg_combine(uc, c, 7.5), uc + 7.5 * (c - uc))
    ids = [forge.draw_drops(i, seed=3)["id"] for i in range(4000)]
    assert abs(np.mean(ids) - 0.5) < 0.04


def test_compose_and_manifest(fixture_dir, tmp_path):
    r = forge.compose(fixture_dir / "street.png", fixture_dir / "dog.png", tmp_path / "out",
                      background_depth=fixture_dir / "street_depth.pfm",
                      annotations=fixture_dir / "street_annotations.json",
                      bbox=[0.35, 0.45, 0.65, 0.85], depth=0.5, params={"target_resolution": 128})
    assert r["output"].shape[:2] == (240, 320)
    assert not r["located"]
    assert forge.verify_manifest(tmp_path / "out" / "manifest.json") == []
    assert forge.hash_tree(tmp_path / "out") == r["manifest"]["outputs"]


def test_dataset_and_eval(tmp_path):
    forge.write_coco_fixture(tmp_path / "coco", 6, 1)
    n = forge.build_dataset(tmp_path / "coco" / "annotations.json", tmp_path / "coco" / "depth", tmp_path / "ds", n=12,
                            seed=7, jobs=2)
    assert n == 12
    record_schema = schema("dataset_record")
    lines = (tmp_path / "ds" / "records.jsonl").read_text().splitlines()
    assert len(lines) == 12
    for line in lines:
        rec = json.loads(line)
        jsonschema.validate(rec, record_schema)
        assert rec["target_name"] in rec["instruction"]
        for a in rec["anchors"]:
            assert a["name"] in rec["instruction"]
    report = forge.run_eval(tmp_path / "ds" / "records.jsonl")
    assert report["n"] == 12
    assert report["relation_satisfaction"] == 1.0
    assert report["paper_reference"] == forge.published_reference()


def test_handle_api(fixture_dir):
    status, body = forge.handle_api("augment-mask", {"mask": b64(fixture_dir / "clip" / "mask0.png"), "level": 5})
    assert status == 200
    files = forge.files_from_response(body["files"])
    assert list(files) == ["mask_level5.png"]
    status, body = forge.handle_api("fuse", {"bg_depth": "", "bbox": [0.1]})
    assert status == 400
    assert set(body["error"]) == {"code", "message"}


def mock_backend(kind, request):
    out = subprocess.run([CLI, "mock-backend", "--kind", kind], input=json.dumps(request), capture_output=True,
                         text=True, check=True)
    return json.loads(out.stdout)


@pytest.mark.skipif(CLI is None, reason="FORGE_CLI not set")
def test_backend_protocol_matches_schemas(fixture_dir, tmp_path):
    street = payload(fixture_dir / "street.png", "png")
    requests = {
        "depth": {"image": street},
        "segment": {"image": payload(fixture_dir / "dog.png", "png"), "hint": None},
        "inpaint": {"image": street, "mask": payload(fixture_dir / "clip" / "mask0.png", "png")},
        "locate": {"background": street, "depth": payload(fixture_dir / "street_depth.pfm", "pfm"),
                   "instruction": "Place the dog to the left of the car.",
                   "annotations": json.loads((fixture_dir / "street_annotations.json").read_text())},
    }
    # The inpaint mask must match the street frame; build one from the depth map.
    depth = forge.read_pfm(fixture_dir / "street_depth.pfm")
    mask = np.zeros(depth.shape, np.uint8)
    mask[100:140, 40:90] = 255
    forge.write_png(mask, tmp_path / "hole.png")
    requests["inpaint"]["mask"] = payload(tmp_path / "hole.png", "png")

    forge.compose(fixture_dir / "street.png", fixture_dir / "dog.png", tmp_path / "c",
                  background_depth=fixture_dir / "street_depth.pfm", bbox=[0.35, 0.45, 0.65, 0.85], depth=0.5,
                  params={"target_resolution": 64})
    bundle = tmp_path / "c" / "bundle"
    requests["composite"] = {
        "meta": json.loads((bundle / "meta.json").read_text()),
        "masked_scene": payload(bundle / "masked_scene.png", "png"),
        "collage": payload(bundle / "collage.png", "png"),
        "fused_depth": payload(bundle / "fused_depth.pfm", "pfm"),
        "reference": payload(bundle / "reference.png", "png"),
        "object_depth": payload(bundle / "object_depth.pfm", "pfm"),
        "placed_mask": payload(bundle / "placed_mask.png", "png"),
        "scene_mask": payload(bundle / "scene_mask.png", "png"),
    }
    for kind, req in requests.items():
        jsonschema.validate(req, schema(f"{kind}.request"))
        reply = mock_backend(kind, req)
        assert "error" not in reply, (kind, reply)
        jsonschema.validate(reply, schema(f"{kind}.response"))

    bad = mock_backend("segment", {"image": payload(tmp_path / "hole.png", "png") | {"data": "!!"}, "hint": None})
    jsonschema.validate(bad, schema("segment.response"))
    assert "error" in bad
