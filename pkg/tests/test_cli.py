import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from reglosslib.cli import main
from reglosslib.raster import read_raster, write_raster

GOLDEN = Path(__file__).parent / "golden"


def run(tmp_path, *argv):
    return main([str(a) for a in argv])


class TestGoldenFiles:
    def test_register_matches_golden(self, tmp_path):
        out = tmp_path / "t.json"
        rc = run(
            tmp_path,
            "register",
            GOLDEN / "reg_fixed.fras",
            GOLDEN / "reg_moving.fras",
            "--metric", "mse",
            "--angles=-3:3:0.5",
            "--overlap", "full",
            "--out", out,
            "--threads", "1",
        )
        assert rc == 0
        assert out.read_bytes() == (GOLDEN / "register_out.json").read_bytes()

    def test_register_threads_do_not_change_bytes(self, tmp_path):
        out = tmp_path / "t.json"
        rc = run(
            tmp_path,
            "register",
            GOLDEN / "reg_fixed.fras",
            GOLDEN / "reg_moving.fras",
            "--angles=-3:3:0.5",
            "--out", out,
            "--threads", "4",
        )
        assert rc == 0
        assert out.read_bytes() == (GOLDEN / "register_out.json").read_bytes()

    def test_loss_matches_golden(self, tmp_path):
        out = tmp_path / "loss.json"
        rc = run(
            tmp_path,
            "loss",
            GOLDEN / "loss_pred.fras",
            GOLDEN / "loss_target.fras",
            "--transform", GOLDEN / "loss_transform.json",
            "--out", out,
        )
        assert rc == 0
        assert out.read_bytes() == (GOLDEN / "loss_out.json").read_bytes()

    def test_metrics_matches_golden(self, tmp_path):
        out = tmp_path / "m.json"
        rc = run(
            tmp_path,
            "metrics",
            GOLDEN / "metrics_a.fras",
            GOLDEN / "metrics_b.fras",
            "--dynamic-range", "1.0",
            "--out", out,
        )
        assert rc == 0
        assert out.read_bytes() == (GOLDEN / "metrics_out.json").read_bytes()

    def test_match_cells_matches_golden(self, tmp_path):
        out = tmp_path / "mc.json"
        rc = run(
            tmp_path,
            "match-cells",
            GOLDEN / "cells_pred.png",
            GOLDEN / "cells_target.png",
            "--pixel-area", "1.0",
            "--shrinkage", "1.0",
            "--min-area-um2", "20",
            "--bins", "0,100,1000",
            "--out", out,
        )
        assert rc == 0
        assert out.read_bytes() == (GOLDEN / "match_out.json").read_bytes()

    def test_gli_matches_golden(self, tmp_path):
        out = tmp_path / "g.fras"
        prof = tmp_path / "p.json"
        rc = run(
            tmp_path,
            "gli",
            GOLDEN / "gli_stain.png",
            "--window", "31",
            "--block", "16",
            "--out", out,
            "--profile-out", prof,
            "--profiles", "5",
        )
        assert rc == 0
        assert out.read_bytes() == (GOLDEN / "gli_out.fras").read_bytes()
        assert prof.read_bytes() == (GOLDEN / "gli_profile.json").read_bytes()

    def test_pli_pipeline_matches_golden(self, tmp_path):
        series = tmp_path / "s.fras"
        fit = tmp_path / "f.fras"
        fom = tmp_path / "fom.png"
        assert run(tmp_path, "pli", "sim", GOLDEN / "pli_params.fras", "--out", series) == 0
        assert series.read_bytes() == (GOLDEN / "pli_series.fras").read_bytes()
        assert run(tmp_path, "pli", "fit", series, "--out", fit) == 0
        assert fit.read_bytes() == (GOLDEN / "pli_fit.fras").read_bytes()
        assert run(tmp_path, "pli", "fom", GOLDEN / "pli_params.fras", "--out", fom) == 0
        assert fom.read_bytes() == (GOLDEN / "pli_fom.png").read_bytes()

    def test_pli_fit_inverts_sim(self):
        params = read_raster(GOLDEN / "pli_params.fras")
        fitted = read_raster(GOLDEN / "pli_fit.fras")
        np.testing.assert_allclose(fitted[..., 0], params[..., 0], atol=1e-9)
        np.testing.assert_allclose(fitted[..., 1], params[..., 1], atol=1e-9)

    def test_sweep_matches_golden(self, tmp_path):
        out = tmp_path / "s.csv"
        rc = run(
            tmp_path,
            "sweep-noise",
            "--target-size", "120",
            "--tile-size", "64",
            "--trials", "3",
            "--levels", "0", "10",
            "--metrics", "mse", "pc",
            "--seed", "0",
            "--out", out,
            "--threads", "1",
        )
        assert rc == 0
        assert out.read_bytes() == (GOLDEN / "sweep_out.csv").read_bytes()

    def test_sweep_threads_do_not_change_bytes(self, tmp_path):
        out = tmp_path / "s.csv"
        rc = run(
            tmp_path,
            "sweep-noise",
            "--target-size", "120",
            "--tile-size", "64",
            "--trials", "3",
            "--levels", "0", "10",
            "--metrics", "mse", "pc",
            "--seed", "0",
            "--out", out,
            "--threads", "8",
        )
        assert rc == 0
        assert out.read_bytes() == (GOLDEN / "sweep_out.csv").read_bytes()


class TestCliBehavior:
    def test_identity_pair_zero_transform(self, tmp_path):
        img = np.random.default_rng(0).uniform(size=(32, 32))
        p = tmp_path / "img.fras"
        write_raster(p, img)
        out = tmp_path / "t.json"
        rc = run(tmp_path, "register", p, p, "--angles", "0:0:1", "--overlap", "min256", "--out", out)
        assert rc == 0
        t = json.loads(out.read_text())
        assert (t["du"], t["dv"], t["theta"]) == (0, 0, 0.0)

    def test_translation_only_angles(self, tmp_path):
        # training-head geometry: the moving image is the larger one and
        # must fully cover the fixed frame under the full-overlap policy
        rng = np.random.default_rng(1)
        from reglosslib.bench import generate_texture

        moving = generate_texture(90, 90, "cell_blobs", rng, blob_depth=60.0, smooth=1.0)
        fixed = moving[8:72, 5:69].copy()
        fp = tmp_path / "f.fras"
        mp = tmp_path / "m.fras"
        write_raster(fp, fixed)
        write_raster(mp, moving)
        out = tmp_path / "t.json"
        rc = run(tmp_path, "register", fp, mp, "--angles", "0:0:1", "--overlap", "full", "--out", out)
        assert rc == 0
        t = json.loads(out.read_text())
        # placement -(8,5) relative to the centered placement -(13,13)
        assert (t["du"], t["dv"], t["theta"]) == (5, 8, 0.0)

    def test_warped_output(self, tmp_path):
        rng = np.random.default_rng(2)
        from reglosslib.bench import generate_texture

        moving = generate_texture(90, 90, "cell_blobs", rng, blob_depth=60.0, smooth=1.0)
        fixed = moving[13:77, 13:77].copy()
        fp, mp = tmp_path / "f.fras", tmp_path / "m.fras"
        write_raster(fp, fixed)
        write_raster(mp, moving)
        out = tmp_path / "t.json"
        warped = tmp_path / "w.fras"
        rc = run(
            tmp_path, "register", fp, mp, "--angles", "0:0:1", "--overlap", "full",
            "--out", out, "--warped", warped, "--warped-size", "40",
        )
        assert rc == 0
        assert read_raster(warped).shape == (40, 40)

    def test_sidecar_config_written(self, tmp_path):
        out = tmp_path / "m.json"
        run(
            tmp_path, "metrics", GOLDEN / "metrics_a.fras", GOLDEN / "metrics_b.fras",
            "--dynamic-range", "1.0", "--out", out,
        )
        sidecar = json.loads((tmp_path / "m.json.config.json").read_text())
        assert sidecar["subcommand"] == "metrics"
        assert sidecar["bins"] == 64  # defaulted decision recorded

    def test_stdout_payload_embeds_config(self, tmp_path, capsys):
        rc = run(tmp_path, "metrics", GOLDEN / "metrics_a.fras", GOLDEN / "metrics_b.fras")
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert "config" in payload and payload["config"]["subcommand"] == "metrics"

    def test_malformed_raster_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.fras"
        bad.write_bytes(b"FRAS" + bytes([1, 9]) + bytes(12))
        rc = run(tmp_path, "metrics", bad, bad)
        assert rc == 1
        assert "dtype" in capsys.readouterr().err

    def test_no_solution_exits_2(self, tmp_path):
        a = tmp_path / "a.fras"
        b = tmp_path / "b.fras"
        write_raster(a, np.ones((16, 16)))
        write_raster(b, np.ones((32, 32)))
        # full overlap impossible: moving smaller than fixed after rotation sweep
        rc = run(tmp_path, "register", b, a, "--angles", "0:0:1", "--overlap", "full")
        assert rc == 2

    def test_invalid_flag_value_exits_3(self, tmp_path):
        rc = run(tmp_path, "register", GOLDEN / "reg_fixed.fras", GOLDEN / "reg_moving.fras",
                 "--angles", "nonsense")
        assert rc == 3

    def test_unknown_flag_exits_3(self):
        with pytest.raises(SystemExit) as exc:
            main(["register", "--definitely-not-a-flag"])
        assert exc.value.code == 3

    def test_help_exits_zero_for_each_subcommand(self):
        for cmd in ("register", "sweep-noise", "sweep-blur", "loss", "metrics",
                    "match-cells", "gli", "pli"):
            with pytest.raises(SystemExit) as exc:
                main([cmd, "--help"])
            assert exc.value.code == 0

    def test_console_script_entry(self):
        exe = shutil.which("regloss")
        if exe is None:
            pytest.skip("console script not on PATH")
        proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "register" in proc.stdout

    def test_metric_subset_columns(self, tmp_path):
        out = tmp_path / "s.csv"
        rc = run(
            tmp_path, "sweep-noise", "--target-size", "120", "--tile-size", "64",
            "--trials", "2", "--levels", "0", "--metrics", "mse", "--out", out,
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "metric,level,trials,hits,rate"
        assert len(lines) == 2 and lines[1].startswith("mse,")

    def test_env_threads_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("REGLOSS_THREADS", "2")
        out = tmp_path / "t.json"
        rc = run(
            tmp_path, "register", GOLDEN / "reg_fixed.fras", GOLDEN / "reg_moving.fras",
            "--angles=-1:1:0.5", "--out", out,
        )
        assert rc == 0
        cfg = json.loads((tmp_path / "t.json.config.json").read_text())
        assert cfg["threads"] == 2
