"""CLI parsing and end-to-end subcommand runs on tiny artifacts."""

import numpy as np
import pytest
from PIL import Image

from bbgan.cli import build_parser, main
from bbgan.data import BallDataset
from bbgan.metrics import read_mse_csv


class TestParser:
    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_preset_default_and_choices(self):
        args = build_parser().parse_args(["exp1"])
        assert args.preset == "desk"
        with pytest.raises(SystemExit):
            build_parser().parse_args(["exp1", "--preset", "bogus"])

    def test_eval_mse_condition_choices(self):
        parse = build_parser().parse_args
        args = parse(["eval-mse", "--condition", "random", "--out", "x.csv"])
        assert args.condition == "random"
        with pytest.raises(SystemExit):
            parse(["eval-mse", "--condition", "fake", "--out", "x.csv"])

    def test_eval_isomap_required_outputs(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["eval-isomap", "--video-ckpt", "v", "--out", "x.png"])


class TestGenData:
    def test_writes_dataset(self, tmp_path, capsys):
        out = tmp_path / "d.bin"
        rc = main([
            "gen-data", "--out", str(out),
            "--n-clips", "4", "--n-balls", "2", "--seed", "3",
        ])
        assert rc == 0
        assert "wrote" in capsys.readouterr().out
        ds = BallDataset(out)
        assert ds.header.n_clips == 4
        assert ds.header.base_seed == 3

    def test_config_file_overrides(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("n_clips = 3\nn_frames = 5\n")
        out = tmp_path / "d.bin"
        main(["gen-data", "--out", str(out), "--config", str(cfg)])
        ds = BallDataset(out)
        assert ds.header.n_clips == 3
        assert ds.header.n_frames == 5


class TestSampling:
    def test_sample_sheet(self, tiny_frames_ckpt, tmp_path, capsys):
        out = tmp_path / "sheet.png"
        rc = main(["sample", "--ckpt", str(tiny_frames_ckpt),
                   "--n", "6", "--seed", "0", "--out", str(out)])
        assert rc == 0
        image = np.asarray(Image.open(out))
        assert image.shape == (32, 6 * 32 + 5)

    def test_sample_video_strips(self, tiny_video_ckpt, tmp_path):
        out = tmp_path / "strips"
        rc = main(["sample-video", "--video-ckpt", str(tiny_video_ckpt),
                   "--n", "2", "--seed", "0", "--out", str(out)])
        assert rc == 0
        assert sorted(p.name for p in out.iterdir()) == ["strip_000.png", "strip_001.png"]

    def test_sample_video_with_swap(self, tiny_video_ckpt, tiny_frames_ckpt_one_ball, tmp_path):
        out = tmp_path / "strips"
        rc = main([
            "sample-video", "--video-ckpt", str(tiny_video_ckpt),
            "--frame-ckpt", str(tiny_frames_ckpt_one_ball),
            "--n", "1", "--out", str(out),
        ])
        assert rc == 0
        assert (out / "strip_000.png").exists()


class TestEvalMse:
    def test_real_condition(self, tmp_path):
        out = tmp_path / "real.csv"
        rc = main(["eval-mse", "--condition", "real", "--n", "3",
                   "--seed", "10", "--out", str(out)])
        assert rc == 0
        table = read_mse_csv(out)
        assert list(table) == ["real"]
        assert table["real"].n_videos == 3

    def test_proposed_condition(self, tiny_video_ckpt, tmp_path):
        out = tmp_path / "p.csv"
        rc = main(["eval-mse", "--condition", "proposed", "--n", "2",
                   "--video-ckpt", str(tiny_video_ckpt), "--out", str(out)])
        assert rc == 0
        assert list(read_mse_csv(out)) == ["proposed"]

    def test_random_maps_to_random_latent(self, tiny_frames_ckpt, tmp_path):
        out = tmp_path / "r.csv"
        rc = main(["eval-mse", "--condition", "random", "--n", "2",
                   "--frame-ckpt", str(tiny_frames_ckpt), "--out", str(out)])
        assert rc == 0
        assert list(read_mse_csv(out)) == ["random_latent"]

    def test_proposed_requires_video_ckpt(self, tmp_path):
        with pytest.raises(SystemExit, match="video-ckpt"):
            main(["eval-mse", "--condition", "proposed",
                  "--out", str(tmp_path / "x.csv")])

    def test_random_requires_some_ckpt(self, tmp_path):
        with pytest.raises(SystemExit, match="frame-ckpt"):
            main(["eval-mse", "--condition", "random",
                  "--out", str(tmp_path / "x.csv")])


class TestEvalIsomap:
    def test_writes_png_and_points(self, tiny_video_ckpt, tmp_path, capsys):
        png = tmp_path / "iso.png"
        csv_path = tmp_path / "iso.csv"
        rc = main([
            "eval-isomap", "--video-ckpt", str(tiny_video_ckpt),
            "--k", "40", "--n-prior", "20",
            "--out", str(png), "--points-out", str(csv_path),
        ])
        assert rc == 0
        assert png.exists()
        from bbgan.manifold import read_points_csv

        points = read_points_csv(csv_path)
        assert len(points) == 6 * 30 + 20 + 2 * 30
        assert "embedded" in capsys.readouterr().out


class TestExperimentCommands:
    def test_exp1_default_root_uses_env(self, tiny_preset, tmp_path, monkeypatch):
        from bbgan import cli as cli_mod
        from bbgan.config import RUNS_ROOT_ENV

        monkeypatch.setenv(RUNS_ROOT_ENV, str(tmp_path))
        seen = {}
        monkeypatch.setattr(
            cli_mod.experiments, "run_experiment_one",
            lambda preset, root, progress=None: seen.update(root=root, name=preset.name),
        )
        assert main(["exp1", "--preset", "desk"]) == 0
        assert seen["root"] == tmp_path / "exp1_desk"
        assert seen["name"] == "desk"

    def test_exp2_roots(self, tmp_path, monkeypatch):
        from bbgan import cli as cli_mod
        from bbgan.config import RUNS_ROOT_ENV

        monkeypatch.setenv(RUNS_ROOT_ENV, str(tmp_path))
        seen = {}
        monkeypatch.setattr(
            cli_mod.experiments, "run_experiment_two",
            lambda preset, root, exp1_root, progress=None: seen.update(
                root=root, exp1=exp1_root
            ),
        )
        assert main(["exp2"]) == 0
        assert seen["root"] == tmp_path / "exp2_desk"
        assert seen["exp1"] == tmp_path / "exp1_desk"
        assert main(["exp2", "--root", str(tmp_path / "a"),
                     "--exp1-root", str(tmp_path / "b")]) == 0
        assert seen["root"] == tmp_path / "a"
        assert seen["exp1"] == tmp_path / "b"
