import json

import numpy as np
import pytest

from gwct.cli import main
from gwct.image_io import load_image, save_image
from gwct.stylemodel import load_model
from PIL import Image

from synth import make_image, two_class_mask


def write_mask(path, mask):
    Image.fromarray(mask.astype(np.uint8), mode="L").save(path)


@pytest.fixture()
def workspace(tmp_path):
    """Four styles + masks, a content frame, and a class table on disk."""
    styles, masks = [], []
    for i, seed in enumerate((11, 22, 33, 44)):
        sp = tmp_path / f"style{i}.png"
        mp = tmp_path / f"style_mask{i}.png"
        save_image(sp, make_image(seed))
        write_mask(mp, two_class_mask())
        styles.append(str(sp))
        masks.append(str(mp))
    content = tmp_path / "content.png"
    cmask = tmp_path / "content_mask.png"
    save_image(content, make_image(77))
    write_mask(cmask, two_class_mask())
    classes = tmp_path / "classes.txt"
    classes.write_text("0:background\n1:subject\n")
    return {
        "dir": tmp_path,
        "styles": styles,
        "masks": masks,
        "content": str(content),
        "cmask": str(cmask),
        "classes": str(classes),
    }


def build_model(ws, out="model.gwm", extra=()):
    path = ws["dir"] / out
    code = main(
        ["build", "--styles", *ws["styles"], "--masks", *ws["masks"],
         "--out", str(path), "--depth", "2", "--max-iters", "40", *extra]
    )
    assert code == 0
    return path


class TestBuild:
    def test_build_prints_fit_summary(self, workspace, capsys):
        build_model(workspace, extra=["--classes", workspace["classes"]])
        out = capsys.readouterr().out
        assert "model written to" in out
        assert "rel_error=" in out
        assert "name=subject" in out

    def test_missing_mask_names_path(self, workspace, capsys):
        code = main(
            ["build", "--styles", *workspace["styles"],
             "--masks", "nope.png", *workspace["masks"][1:],
             "--out", str(workspace["dir"] / "m.gwm")]
        )
        assert code == 2
        err = capsys.readouterr().err
        assert err.startswith("ERROR ")
        assert "nope.png" in err

    def test_fixed_rank_stored(self, workspace):
        path = build_model(workspace, extra=["--rank", "10"])
        model = load_model(path)
        for level in (1, 2):
            for cid in model.classes_at(level):
                assert model.entry(level, cid).factors.rank == 10

    def test_adaptive_rank_matches_channels(self, workspace):
        path = build_model(workspace)
        model = load_model(path)
        assert model.entry(1, 0).factors.rank == 3
        assert model.entry(2, 0).factors.rank == 12

    def test_mismatched_lists_rejected(self, workspace, capsys):
        code = main(
            ["build", "--styles", *workspace["styles"],
             "--masks", *workspace["masks"][:2],
             "--out", str(workspace["dir"] / "m.gwm")]
        )
        assert code == 2
        assert "ERROR shape-mismatch" in capsys.readouterr().err


class TestStylize:
    def test_single_frame(self, workspace, capsys):
        model = build_model(workspace)
        out = workspace["dir"] / "out.png"
        code = main(
            ["stylize", "--model", str(model), "--content", workspace["content"],
             "--mask", workspace["cmask"], "--out", str(out), "--alpha", "0.7"]
        )
        assert code == 0
        assert out.exists()
        assert load_image(out).shape == (32, 32, 3)

    def test_alpha_zero_reproduces_input(self, workspace):
        model = build_model(workspace)
        out = workspace["dir"] / "out.png"
        assert main(
            ["stylize", "--model", str(model), "--content", workspace["content"],
             "--mask", workspace["cmask"], "--out", str(out), "--alpha", "0"]
        ) == 0
        np.testing.assert_allclose(
            load_image(out), load_image(workspace["content"]), atol=1e-6
        )

    def test_outputs_bitwise_deterministic(self, workspace):
        model = build_model(workspace)
        o1, o2 = workspace["dir"] / "a.png", workspace["dir"] / "b.png"
        argv = ["stylize", "--model", str(model), "--content", workspace["content"],
                "--mask", workspace["cmask"], "--alpha", "0.6"]
        assert main(argv + ["--out", str(o1)]) == 0
        assert main(argv + ["--out", str(o2)]) == 0
        assert o1.read_bytes() == o2.read_bytes()

    def test_per_class_alpha_by_name(self, workspace):
        model = build_model(workspace, extra=["--classes", workspace["classes"]])
        out_named = workspace["dir"] / "n.png"
        out_numeric = workspace["dir"] / "d.png"
        base = ["stylize", "--model", str(model), "--content", workspace["content"],
                "--mask", workspace["cmask"]]
        assert main(base + ["--alpha", "background=0.2,subject=0.9",
                            "--out", str(out_named)]) == 0
        assert main(base + ["--alpha", "0=0.2,1=0.9", "--out", str(out_numeric)]) == 0
        assert out_named.read_bytes() == out_numeric.read_bytes()

    def test_unknown_class_name_rejected(self, workspace, capsys):
        model = build_model(workspace)
        code = main(
            ["stylize", "--model", str(model), "--content", workspace["content"],
             "--mask", workspace["cmask"], "--out", str(workspace["dir"] / "x.png"),
             "--alpha", "iris=0.8"]
        )
        assert code == 2
        assert "ERROR unknown-class" in capsys.readouterr().err

    def test_weight_list_applied(self, workspace):
        model = build_model(workspace)
        base = ["stylize", "--model", str(model), "--content", workspace["content"],
                "--mask", workspace["cmask"], "--alpha", "1.0"]
        one_hot = workspace["dir"] / "oh.png"
        uniform = workspace["dir"] / "un.png"
        assert main(base + ["--weights", "1,0,0,0", "--out", str(one_hot)]) == 0
        assert main(base + ["--weights", "uniform", "--out", str(uniform)]) == 0
        assert one_hot.read_bytes() != uniform.read_bytes()

    def test_wrong_weight_count_rejected(self, workspace, capsys):
        model = build_model(workspace)
        code = main(
            ["stylize", "--model", str(model), "--content", workspace["content"],
             "--mask", workspace["cmask"], "--out", str(workspace["dir"] / "x.png"),
             "--weights", "1,2"]
        )
        assert code == 2
        assert "ERROR invalid-weights" in capsys.readouterr().err

    def test_report_stream(self, workspace):
        model = build_model(workspace)
        report = workspace["dir"] / "report.jsonl"
        assert main(
            ["stylize", "--model", str(model), "--content", workspace["content"],
             "--mask", workspace["cmask"], "--out", str(workspace["dir"] / "x.png"),
             "--report", str(report)]
        ) == 0
        lines = report.read_text().strip().splitlines()
        payload = json.loads(lines[0])
        assert payload["status"] == "ok"
        assert payload["rows"] and "total_seconds" in payload


class TestSequences:
    def test_directory_of_frames(self, workspace):
        model = build_model(workspace)
        frames = workspace["dir"] / "frames"
        frames.mkdir()
        for i in range(3):
            save_image(frames / f"f_{i:04d}.png", make_image(100 + i))
        out_dir = workspace["dir"] / "out_frames"
        assert main(
            ["stylize", "--model", str(model), "--content", str(frames),
             "--mask", workspace["cmask"], "--out", str(out_dir), "--workers", "2"]
        ) == 0
        assert sorted(p.name for p in out_dir.iterdir()) == [
            "f_0000.png", "f_0001.png", "f_0002.png",
        ]

    def test_failed_frame_sets_exit_code_but_others_written(self, workspace, capsys):
        model = build_model(workspace)
        frames = workspace["dir"] / "frames2"
        masks = workspace["dir"] / "masks2"
        frames.mkdir()
        masks.mkdir()
        for i in range(3):
            save_image(frames / f"f_{i:04d}.png", make_image(200 + i))
            size = (32, 32) if i != 1 else (8, 8)  # frame 1 gets a bad mask
            write_mask(masks / f"f_{i:04d}.png", two_class_mask(*size))
        out_dir = workspace["dir"] / "out_frames2"
        code = main(
            ["stylize", "--model", str(model), "--content", str(frames),
             "--mask", str(masks), "--out", str(out_dir)]
        )
        assert code == 3
        assert sorted(p.name for p in out_dir.iterdir()) == ["f_0000.png", "f_0002.png"]
        err = capsys.readouterr().err
        assert "f_0001.png" in err and "ERROR frame-failures" in err


class TestGrid:
    def test_grid_composite_and_manifest(self, workspace):
        model = build_model(workspace)
        out = workspace["dir"] / "grid.png"
        assert main(
            ["grid", "--model", str(model), "--content", workspace["content"],
             "--mask", workspace["cmask"], "--out", str(out), "--grid", "5"]
        ) == 0
        composite = load_image(out)
        assert composite.shape == (5 * 32, 5 * 32, 3)
        manifest = json.loads((workspace["dir"] / "grid.manifest.json").read_text())
        assert manifest["grid"] == 5
        center = next(
            c for c in manifest["cells"] if c["row"] == 2 and c["col"] == 2
        )
        assert center["weights"] == [0.25, 0.25, 0.25, 0.25]
        assert all(abs(sum(c["weights"]) - 1.0) < 1e-12 for c in manifest["cells"])

    def test_grid_needs_four_styles(self, workspace, capsys):
        path = workspace["dir"] / "m3.gwm"
        assert main(
            ["build", "--styles", *workspace["styles"][:3],
             "--masks", *workspace["masks"][:3], "--out", str(path),
             "--depth", "1", "--max-iters", "10"]
        ) == 0
        code = main(
            ["grid", "--model", str(path), "--content", workspace["content"],
             "--mask", workspace["cmask"], "--out", str(workspace["dir"] / "g.png")]
        )
        assert code == 2
        assert "ERROR grid-requires-four-styles" in capsys.readouterr().err


class TestConfig:
    def test_config_supplies_defaults(self, workspace):
        model = build_model(workspace)
        cfg = workspace["dir"] / "job.cfg"
        cfg.write_text("alpha=0.8\nweights=uniform\n")
        via_cfg = workspace["dir"] / "c.png"
        via_flags = workspace["dir"] / "f.png"
        base = ["stylize", "--model", str(model), "--content", workspace["content"],
                "--mask", workspace["cmask"]]
        assert main(base + ["--config", str(cfg), "--out", str(via_cfg)]) == 0
        assert main(base + ["--alpha", "0.8", "--weights", "uniform",
                            "--out", str(via_flags)]) == 0
        assert via_cfg.read_bytes() == via_flags.read_bytes()

    def test_flags_override_config(self, workspace):
        model = build_model(workspace)
        cfg = workspace["dir"] / "job.cfg"
        cfg.write_text("alpha=0.9\n")
        out_cfg = workspace["dir"] / "c.png"
        out_flag = workspace["dir"] / "f.png"
        base = ["stylize", "--model", str(model), "--content", workspace["content"],
                "--mask", workspace["cmask"]]
        assert main(base + ["--config", str(cfg), "--alpha", "0.2",
                            "--out", str(out_flag)]) == 0
        assert main(base + ["--alpha", "0.2", "--out", str(out_cfg)]) == 0
        assert out_flag.read_bytes() == out_cfg.read_bytes()

    def test_unknown_config_key_rejected(self, workspace, capsys):
        model = build_model(workspace)
        cfg = workspace["dir"] / "job.cfg"
        cfg.write_text("alpa=0.9\n")
        code = main(
            ["stylize", "--model", str(model), "--content", workspace["content"],
             "--mask", workspace["cmask"], "--out", str(workspace["dir"] / "x.png"),
             "--config", str(cfg)]
        )
        assert code == 2
        assert "ERROR config-parse" in capsys.readouterr().err

    def test_malformed_config_line_rejected(self, workspace, capsys):
        model = build_model(workspace)
        cfg = workspace["dir"] / "job.cfg"
        cfg.write_text("alpha 0.9\n")
        code = main(
            ["stylize", "--model", str(model), "--content", workspace["content"],
             "--mask", workspace["cmask"], "--out", str(workspace["dir"] / "x.png"),
             "--config", str(cfg)]
        )
        assert code == 2


class TestHelp:
    def test_help_names_spec_flags(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["stylize", "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--model", "--content", "--mask", "--out", "--alpha",
                     "--weights", "--depth", "--workers", "--classes",
                     "--report", "--config", "--codec-weights"):
            assert flag in text

    def test_build_help(self, capsys):
        with pytest.raises(SystemExit):
            main(["build", "--help"])
        text = capsys.readouterr().out
        for flag in ("--styles", "--masks", "--codec", "--rank", "--seed",
                     "--min-pixels", "--max-iters", "--tol"):
            assert flag in text

    def test_grid_help(self, capsys):
        with pytest.raises(SystemExit):
            main(["grid", "--help"])
        text = capsys.readouterr().out
        assert "--grid" in text and "--manifest" in text


class TestNeuralPath:
    def test_build_and_stylize_with_neural_codec(self, workspace, weight_file):
        path = workspace["dir"] / "nm.gwm"
        assert main(
            ["build", "--styles", *workspace["styles"][:2],
             "--masks", *workspace["masks"][:2], "--out", str(path),
             "--codec", "neural", "--codec-weights", str(weight_file),
             "--depth", "2", "--max-iters", "10"]
        ) == 0
        out = workspace["dir"] / "n.png"
        assert main(
            ["stylize", "--model", str(path), "--content", workspace["content"],
             "--mask", workspace["cmask"], "--out", str(out),
             "--codec-weights", str(weight_file), "--alpha", "0.3"]
        ) == 0
        assert load_image(out).shape == (32, 32, 3)

    def test_neural_model_without_weights_rejected(self, workspace, weight_file, capsys):
        path = workspace["dir"] / "nm2.gwm"
        assert main(
            ["build", "--styles", *workspace["styles"][:2],
             "--masks", *workspace["masks"][:2], "--out", str(path),
             "--codec", "neural", "--codec-weights", str(weight_file),
             "--depth", "1", "--max-iters", "10"]
        ) == 0
        code = main(
            ["stylize", "--model", str(path), "--content", workspace["content"],
             "--mask", workspace["cmask"], "--out", str(workspace["dir"] / "x.png")]
        )
        assert code == 2
        assert "ERROR codec-not-ready" in capsys.readouterr().err
