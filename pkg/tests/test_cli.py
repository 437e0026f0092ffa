import json
from pathlib import Path

import numpy as np
import pytest

from apsynth import apertures as ap
from apsynth import io as rio
from apsynth.cli import main


def tree_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture(scope="module")
def mini_setup(tmp_path_factory):
    """Small layout JSON + object PNG used across CLI tests."""
    d = tmp_path_factory.mktemp("cli")
    layout = ap.build_mini_layout(field_size=64, diameter=16, seed=0)
    ap.save_layout(layout, d / "mini.json")
    rng = np.random.default_rng(1)
    rio.save_png(rng.random((64, 64)), d / "obj.png", bit_depth=16)
    return d


def test_help_for_every_subcommand(capsys):
    for sub in ("layout", "simulate", "reconstruct", "metrics", "dataset"):
        with pytest.raises(SystemExit) as exc:
            main([sub, "--help"])
        assert exc.value.code == 0
        assert "usage" in capsys.readouterr().out


def test_layout_strategy7_prints_measured_pixels(tmp_path, capsys):
    assert main(["layout", "--strategy", "7", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "118784" in out
    assert (tmp_path / "layout.json").is_file()
    assert (tmp_path / "coverage.png").is_file()


def test_layout_fp_has_100_apertures(tmp_path, capsys):
    assert main(["layout", "--strategy", "fp", "--out", str(tmp_path), "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["apertures"] == 100


def test_layout_schedule_k6_reports_full_coverage(tmp_path, capsys):
    assert main(["layout", "--strategy", "schedule", "--k", "6", "--out", str(tmp_path), "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["coverage_percent"] == 100.0
    assert doc["snapshots"] == 6


def test_layout_invalid_strategy(tmp_path, capsys):
    assert main(["layout", "--strategy", "11", "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_simulate_noise_free_writes_nine_files(mini_setup, tmp_path, capsys):
    out = tmp_path / "stack"
    rc = main([
        "simulate", "--layout", str(mini_setup / "mini.json"),
        "--object", str(mini_setup / "obj.png"), "--out", str(out),
    ])
    assert rc == 0
    cafps = sorted(out.glob("*.cafp"))
    assert len(cafps) == 9
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["photon"] is None


def test_simulate_same_seed_identical_bytes(mini_setup, tmp_path):
    args = [
        "simulate", "--layout", str(mini_setup / "mini.json"),
        "--object", str(mini_setup / "obj.png"), "--photons", "500", "--seed", "9",
    ]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


def test_reconstruct_with_gt_and_init(mini_setup, tmp_path, capsys):
    stack_dir = tmp_path / "stack"
    main([
        "simulate", "--layout", str(mini_setup / "mini.json"),
        "--object", str(mini_setup / "obj.png"), "--out", str(stack_dir),
    ])
    capsys.readouterr()
    rc = main([
        "reconstruct", "--stack", str(stack_dir), "--sweeps", "5",
        "--gt", str(mini_setup / "obj.png"), "--out", str(tmp_path / "rec"), "--json",
    ])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["sweeps_run"] <= 5 and "metrics" in doc
    assert (tmp_path / "rec" / "estimate.png").is_file()
    # --init accepts a PNG prediction
    rc = main([
        "reconstruct", "--stack", str(stack_dir), "--sweeps", "2",
        "--init", str(mini_setup / "obj.png"), "--out", str(tmp_path / "rec2"),
    ])
    assert rc == 0


def test_reconstruct_bad_stack_dir_nonzero_exit(tmp_path, capsys):
    rc = main(["reconstruct", "--stack", str(tmp_path / "nope"), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_metrics_identical_images(mini_setup, tmp_path, capsys):
    rc = main(["metrics", "--a", str(mini_setup / "obj.png"), "--b", str(mini_setup / "obj.png")])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["mse"] == 0.0
    assert doc["psnr"] == "inf"


def test_metrics_batch_csv(tmp_path, capsys):
    rng = np.random.default_rng(2)
    for d in ("pa", "pb"):
        (tmp_path / d).mkdir()
    for i in range(3):
        img = rng.random((32, 32))
        rio.save_png(img, tmp_path / "pa" / f"{i}.png")
        rio.save_png(np.clip(img + 0.05, 0, 1), tmp_path / "pb" / f"{i}.png")
    rc = main(["metrics", "--a", str(tmp_path / "pa"), "--b", str(tmp_path / "pb"), "--report", "csv"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "name,mse,psnr,ssim,bce"
    assert len(lines) == 4


def test_metrics_cli_matches_library(mini_setup, tmp_path, capsys):
    from apsynth import metrics as mt

    rng = np.random.default_rng(3)
    a, b = rng.random((40, 40)), rng.random((40, 40))
    rio.save_png(a, tmp_path / "a.png", bit_depth=16)
    rio.save_png(b, tmp_path / "b.png", bit_depth=16)
    assert main(["metrics", "--a", str(tmp_path / "a.png"), "--b", str(tmp_path / "b.png")]) == 0
    doc = json.loads(capsys.readouterr().out)
    qa, qb = rio.load_png(tmp_path / "a.png"), rio.load_png(tmp_path / "b.png")
    assert doc["psnr"] == pytest.approx(mt.psnr(qa, qb), rel=1e-12)
    assert doc["ssim"] == pytest.approx(mt.ssim(qa, qb), rel=1e-12)


def test_dataset_desk_preset_tiny_counts(tmp_path, capsys):
    rc = main([
        "dataset", "--preset", "desk64", "--counts", "3", "1", "1",
        "--out", str(tmp_path / "ds"), "--seed", "4", "--threads", "1",
    ])
    assert rc == 0
    root = tmp_path / "ds"
    assert len((root / "train.txt").read_text().split()) == 3
    manifest = json.loads((root / "manifest.json").read_text())
    assert manifest["name"] == "desk64"
    assert len(manifest["samples"]) == 5


def test_dataset_regeneration_bit_identical(tmp_path):
    args = [
        "dataset", "--preset", "desk64", "--counts", "2", "1", "1",
        "--photons", "200", "--seed", "4", "--threads", "1",
    ]
    assert main(args + ["--out", str(tmp_path / "d1")]) == 0
    assert main(args + ["--out", str(tmp_path / "d2")]) == 0
    assert tree_bytes(tmp_path / "d1") == tree_bytes(tmp_path / "d2")
