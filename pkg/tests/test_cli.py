import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fisheye import CameraModel, ImageBuffer, load_image, save_image
from fisheye.cli import main
from fisheye.warp import read_lut


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def rings_png(tmp_path, capsys):
    path = tmp_path / "rings.png"
    assert run(capsys, "generate", "--pattern", "rings", "--size", "200x200", "--big-r0", 100, "-o", path)[0] == 0
    return path


class TestFov:
    def test_radius_ratio_one(self, capsys):
        code, out, _ = run(capsys, "fov", "--radius-ratio", 1)
        assert code == 0
        assert json.loads(out) == {"fov_deg": 115.04}

    def test_radius_ratio_two(self, capsys):
        assert json.loads(run(capsys, "fov", "--radius-ratio", 2)[1]) == {"fov_deg": 144.69}

    @pytest.mark.parametrize("ratio", ["0", "-1", "abc"])
    def test_bad_ratio(self, capsys, ratio):
        code, out, err = run(capsys, "fov", "--radius-ratio", ratio)
        assert code == 1
        assert out == ""
        assert err


class TestUsage:
    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["frobnicate"],
            ["correct", "-i", "a.png", "-o", "b.png", "--mode", "simple", "--big-r0", "0"],
            ["correct", "-i", "a.png", "-o", "b.png", "--r0", "10", "--big-r0", "20"],
            ["correct", "-i", "a.png", "-o", "b.png", "--mode", "warp", "--big-r0", "20"],
            ["lut", "--src-size", "10x10", "--out-size", "10x10", "-o", "x.flut"],
            ["generate", "--pattern", "rings", "--size", "10by10", "--big-r0", "5", "-o", "x.png"],
        ],
    )
    def test_exit_1(self, capsys, argv):
        assert run(capsys, *argv)[0] == 1

    def test_correct_needs_camera_without_lut(self, capsys, rings_png, tmp_path):
        assert run(capsys, "correct", "-i", rings_png, "-o", tmp_path / "o.png")[0] == 1

    def test_metrics_needs_three_points(self, capsys, rings_png):
        assert run(capsys, "metrics", "-i", rings_png, "--points", "0,0;1,1")[0] == 1


class TestCorrect:
    def test_full_default(self, capsys, tmp_path):
        src = tmp_path / "in.png"
        run(capsys, "generate", "--pattern", "checker", "--size", "1000x1000", "--big-r0", 500, "-o", src)
        out = tmp_path / "out.png"
        code, _, err = run(capsys, "correct", "--mode", "full", "--big-r0", 500, "--scale", 2, "-i", src, "-o", out)
        assert code == 0, err
        img = load_image(out)
        assert (img.width, img.height, img.channels) == (2000, 2000, 1)

    def test_corners_sample_rim(self, capsys, tmp_path):
        src = tmp_path / "white.pgm"
        save_image(src, ImageBuffer(np.full((100, 100, 1), 255, dtype=np.uint8)))
        out = tmp_path / "out.pgm"
        assert run(capsys, "correct", "--big-r0", 50, "-i", src, "-o", out)[0] == 0
        img = load_image(out).data[..., 0]
        assert img.shape == (200, 200)
        # full mode fills the whole canvas from inside the source raster
        assert (img == 255).all()

    def test_r0_equals_half_big_r0(self, capsys, rings_png, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        run(capsys, "correct", "--mode", "modified", "--r0", 50, "-i", rings_png, "-o", a)
        run(capsys, "correct", "--mode", "modified", "--big-r0", 100, "-i", rings_png, "-o", b)
        assert a.read_bytes() == b.read_bytes()

    def test_deterministic(self, capsys, rings_png, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        for path in (a, b):
            assert run(capsys, "correct", "--big-r0", 100, "--interp", "bicubic", "-i", rings_png, "-o", path)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    @pytest.mark.parametrize("mode", ["simple", "modified", "full"])
    def test_lut_round_trip(self, capsys, rings_png, tmp_path, mode):
        direct, reuse, lut = tmp_path / "d.png", tmp_path / "r.png", tmp_path / "m.flut"
        args = ["correct", "--mode", mode, "--big-r0", 100, "-i", rings_png]
        assert run(capsys, *args, "-o", direct, "--lut-out", lut)[0] == 0
        assert run(capsys, "correct", "--mode", mode, "-i", rings_png, "-o", reuse, "--lut-in", lut)[0] == 0
        assert direct.read_bytes() == reuse.read_bytes()

    def test_full_canvas_too_large(self, capsys, rings_png, tmp_path):
        code, _, err = run(capsys, "correct", "--big-r0", 100, "--scale", 2.1, "-i", rings_png, "-o", tmp_path / "o.png")
        assert code == 3
        assert "2R0" in err

    def test_missing_input(self, capsys, tmp_path):
        assert run(capsys, "correct", "--big-r0", 10, "-i", tmp_path / "nope.png", "-o", tmp_path / "o.png")[0] == 2

    def test_unsupported_extension(self, capsys, rings_png, tmp_path):
        assert run(capsys, "correct", "--big-r0", 100, "-i", rings_png, "-o", tmp_path / "o.jpg")[0] == 2

    def test_corrupt_input(self, capsys, tmp_path):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"not a png at all")
        assert run(capsys, "correct", "--big-r0", 10, "-i", bad, "-o", tmp_path / "o.png")[0] == 2

    def test_lut_for_other_size(self, capsys, rings_png, tmp_path):
        lut = tmp_path / "m.flut"
        run(capsys, "lut", "--big-r0", 20, "--src-size", "40x40", "--out-size", "80x80", "--mode", "full", "-o", lut)
        # the 80x80 table addresses a 40x40 source; on a 200x200 image it is still in bounds
        assert run(capsys, "correct", "-i", rings_png, "-o", tmp_path / "o.png", "--lut-in", lut)[0] == 0
        small = tmp_path / "s.pgm"
        save_image(small, ImageBuffer(np.zeros((10, 10, 1), dtype=np.uint8)))
        assert run(capsys, "correct", "-i", small, "-o", tmp_path / "o2.png", "--lut-in", lut)[0] == 1


class TestGenerate:
    def test_ppm_is_rgb(self, capsys, tmp_path):
        path = tmp_path / "c.ppm"
        assert run(capsys, "generate", "--pattern", "checker", "--size", "64x48", "--big-r0", 20, "-o", path)[0] == 0
        img = load_image(path)
        assert (img.width, img.height, img.channels) == (64, 48, 3)
        assert path.read_bytes().startswith(b"P6\n")

    def test_options_forwarded(self, capsys, tmp_path):
        a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
        base = ["generate", "--pattern", "rings", "--size", "100x100", "--big-r0", 50]
        run(capsys, *base, "-o", a, "--rings", 2)
        run(capsys, *base, "-o", b, "--rings", 5, "--ring-thickness", 2)
        assert a.read_bytes() != b.read_bytes()


class TestLutCommand:
    def test_writes_flut(self, capsys, tmp_path):
        path = tmp_path / "x.flut"
        code = run(capsys, "lut", "--r0", 25, "--src-size", "100x100", "--out-size", "200x200", "--mode", "full", "-o", path)[0]
        assert code == 0
        lut = read_lut(path)
        assert (lut.width, lut.height) == (200, 200)
        r = math.hypot(lut.sx[0, 0] - 50, lut.sy[0, 0] - 50)
        assert r == pytest.approx(CameraModel.from_r0(25).big_r0, rel=2e-2)

    def test_oversized_full(self, capsys, tmp_path):
        argv = ["lut", "--big-r0", 10, "--src-size", "20x20", "--out-size", "50x50", "--mode", "full", "-o", tmp_path / "x.flut"]
        assert run(capsys, *argv)[0] == 3


class TestMetrics:
    def test_points(self, capsys, rings_png):
        code, out, _ = run(capsys, "metrics", "-i", rings_png, "--kind", "straightness", "--points", "0,0;1,1;2,0")
        assert code == 0
        assert json.loads(out)["residual_px"] == pytest.approx(2 / 3)

    def test_traced(self, capsys, tmp_path):
        src, out = tmp_path / "c.png", tmp_path / "o.png"
        run(capsys, "generate", "--pattern", "checker", "--size", "400x400", "--big-r0", 200, "-o", src)
        run(capsys, "correct", "--mode", "simple", "--big-r0", 200, "-i", src, "-o", out)
        code, text, _ = run(capsys, "metrics", "-i", out)
        result = json.loads(text)
        assert code == 0
        assert result["chains"] > 10
        assert result["residual_px"] < 0.5

    def test_bad_points(self, capsys, rings_png):
        assert run(capsys, "metrics", "-i", rings_png, "--points", "0,0;1;2,2")[0] == 1


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "fisheye", "fov", "--radius-ratio", "1"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout) == {"fov_deg": 115.04}
