"""End-to-end tests of the command-line interface.

Commands run in-process through cli.main(argv) for speed; one test drives the
installed console script to confirm the packaging entry point.
"""

import json
import re
import subprocess
import sys

import numpy as np
import pytest

from pregrasp.cli import main
from pregrasp.pointcloud import load_cloud

RANK_KEYS = {"config", "cloud", "tree", "classifications", "masks", "pool",
             "ranking", "best_index", "timings_ms"}


@pytest.fixture()
def sphere_xyz(tmp_path):
    path = tmp_path / "sphere.xyz"
    assert main(["synth", "sphere", "--r", "0.04", "--n", "1200",
                 "--seed", "2", "--out", str(path)]) == 0
    return path


def run_stage(stage, cloud_path, out_path, *extra):
    argv = [stage, "--input", str(cloud_path), "--out", str(out_path),
            "--quality-dirs", "256", *extra]
    return main(argv)


def strip_timings(text):
    return re.sub(r'"timings_ms": \{[^}]*\}', '"timings_ms": {}', text)


# ===========================================================================
# synth
# ===========================================================================

def test_synth_writes_header_and_roundtrips(sphere_xyz):
    lines = sphere_xyz.read_text().splitlines()
    assert lines[0] == "# synth sphere n=1200 seed=2"
    assert len(lines) == 1201
    cloud = load_cloud(str(sphere_xyz))
    assert cloud.points.shape == (1200, 3)
    radii = np.linalg.norm(cloud.points, axis=1)
    assert np.allclose(radii, 0.04, atol=1e-6)


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a.xyz", tmp_path / "b.xyz"
    for path in (a, b):
        assert main(["synth", "box", "--n", "500", "--seed", "9",
                     "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_synth_rejects_bad_flags(tmp_path, capsys):
    assert main(["synth", "box", "--n", "3",
                 "--out", str(tmp_path / "x.xyz")]) == 2
    assert "--n" in capsys.readouterr().err
    assert main(["synth", "box", "--dx", "-1.0",
                 "--out", str(tmp_path / "x.xyz")]) == 2
    assert "--dx" in capsys.readouterr().err


# ===========================================================================
# pipeline stages
# ===========================================================================

def test_stage_documents_nest(sphere_xyz, tmp_path):
    """Each stage's document carries exactly its stages' sections, and the
    shared sections agree across stages."""
    expected = {
        "decompose": {"config", "cloud", "tree", "timings_ms"},
        "classify": {"config", "cloud", "tree", "classifications", "timings_ms"},
        "mask": {"config", "cloud", "tree", "classifications", "masks",
                 "timings_ms"},
        "sample": {"config", "cloud", "tree", "classifications", "masks",
                   "pool", "timings_ms"},
        "rank": RANK_KEYS,
    }
    docs = {}
    for stage, keys in expected.items():
        out = tmp_path / f"{stage}.json"
        assert run_stage(stage, sphere_xyz, out) == 0
        docs[stage] = json.loads(out.read_text())
        assert set(docs[stage]) == keys, stage
    for stage in ("classify", "mask", "sample", "rank"):
        assert docs[stage]["tree"] == docs["decompose"]["tree"]
    assert docs["rank"]["classifications"] == docs["classify"]["classifications"]
    assert docs["rank"]["pool"] == docs["sample"]["pool"]


def test_rank_document_contents(sphere_xyz, tmp_path):
    out = tmp_path / "rank.json"
    assert run_stage("rank", sphere_xyz, out) == 0
    doc = json.loads(out.read_text())
    assert doc["cloud"]["point_count"] == 1200
    assert doc["config"]["evaluation"]["quality_dirs"] == 256
    assert len(doc["tree"]["nodes"]) >= 1
    assert doc["pool"], "sphere should yield samples"
    ranking = doc["ranking"]
    assert len(ranking) == len(doc["pool"])
    qualities = [r["quality"] for r in ranking]
    assert qualities == sorted(qualities, reverse=True)
    assert doc["best_index"] == ranking[0]["pool_index"]
    assert set(doc["timings_ms"]) == {"decompose", "classify", "mask",
                                      "sample", "rank"}
    for entry in ranking:
        assert len(entry["contacts"]) == entry["contact_count"]


def test_rank_byte_deterministic(sphere_xyz, tmp_path):
    """Re-running the same invocation reproduces the document byte-for-byte
    apart from the timing block."""
    out = tmp_path / "run.json"
    assert run_stage("rank", sphere_xyz, out) == 0
    first = strip_timings(out.read_text())
    assert run_stage("rank", sphere_xyz, out) == 0
    second = strip_timings(out.read_text())
    assert first == second


def test_pipeline_flag_validation(sphere_xyz, tmp_path, capsys):
    cases = [
        (["--volume-ratio", "1.5"], "--volume-ratio"),
        (["--min-points", "3"], "--min-points"),
        (["--angular-step", "200"], "--angular-step"),
        (["--cone-edges", "2"], "--cone-edges"),
        (["--tube-radius", "0"], "--tube-radius"),
    ]
    for extra, flag in cases:
        code = run_stage("rank", sphere_xyz, tmp_path / "x.json", *extra)
        assert code == 2, flag
        assert flag in capsys.readouterr().err


def test_missing_input_is_runtime_error(tmp_path, capsys):
    code = run_stage("decompose", tmp_path / "nope.xyz", tmp_path / "x.json")
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_invalid_log_level_env(sphere_xyz, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("PREGRASP_LOG", "chatty")
    assert run_stage("decompose", sphere_xyz, tmp_path / "x.json") == 2
    assert "PREGRASP_LOG" in capsys.readouterr().err


# ===========================================================================
# export-viz
# ===========================================================================

def obj_stats(path):
    text = path.read_text().splitlines()
    return {
        "v": sum(1 for l in text if l.startswith("v ")),
        "l": sum(1 for l in text if l.startswith("l ")),
        "groups": [l[2:] for l in text if l.startswith("g ")],
    }


def test_export_viz_wireframe_counts(sphere_xyz, tmp_path):
    doc_path = tmp_path / "rank.json"
    assert run_stage("rank", sphere_xyz, doc_path) == 0
    doc = json.loads(doc_path.read_text())
    n_boxes, n_poses = len(doc["tree"]["nodes"]), len(doc["pool"])

    obj = tmp_path / "scene.obj"
    assert main(["export-viz", "--input", str(doc_path), "--out", str(obj),
                 "--top-k", "3"]) == 0
    stats = obj_stats(obj)
    assert stats["v"] == 8 * n_boxes + 4 * n_poses
    assert stats["l"] == 12 * n_boxes + 3 * n_poses
    assert stats["groups"].count("best") == 1
    assert stats["groups"].count("best_2") == 1
    assert stats["groups"].count("best_3") == 1
    for node in doc["tree"]["nodes"]:
        assert f"box_{node['id']}" in stats["groups"]
    # the best group marks the top-ranked pose, others keep their pool tag
    tagged = [g for g in stats["groups"] if g.startswith(("best", "grasp_"))]
    assert len(tagged) == n_poses


def test_export_viz_on_tree_only_document(sphere_xyz, tmp_path):
    doc_path = tmp_path / "decompose.json"
    assert run_stage("decompose", sphere_xyz, doc_path) == 0
    obj = tmp_path / "tree.obj"
    assert main(["export-viz", "--input", str(doc_path), "--out", str(obj)]) == 0
    stats = obj_stats(obj)
    n_boxes = len(json.loads(doc_path.read_text())["tree"]["nodes"])
    assert stats["v"] == 8 * n_boxes
    assert stats["l"] == 12 * n_boxes
    assert all(g.startswith("box_") for g in stats["groups"])


def test_export_viz_rejects_bad_top_k(sphere_xyz, tmp_path, capsys):
    doc_path = tmp_path / "rank.json"
    assert run_stage("rank", sphere_xyz, doc_path) == 0
    assert main(["export-viz", "--input", str(doc_path),
                 "--out", str(tmp_path / "s.obj"), "--top-k", "0"]) == 2
    assert "--top-k" in capsys.readouterr().err


# ===========================================================================
# packaging entry point
# ===========================================================================

def test_console_script_runs(tmp_path):
    out = tmp_path / "c.xyz"
    proc = subprocess.run(
        [sys.executable, "-m", "pregrasp.cli", "synth", "box", "--n", "100",
         "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == str(out)
    assert out.exists()
