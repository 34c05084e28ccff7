"""Image I/O, deformed-grid rendering, and the command-line driver."""

import json
import subprocess
import sys

import numpy as np
import pytest

from curvreg.cli import run_cli
from curvreg.errors import CorruptFileError, UnsupportedFormatError
from curvreg.fields import ScalarField, VectorField2
from curvreg.fixtures import make_fixture
from curvreg.imgio import load_image, save_pgm
from curvreg.render import render_deformed_grid

try:
    import PIL  # noqa: F401
    HAVE_PILLOW = True
except ImportError:
    HAVE_PILLOW = False


def _write(tmp_path, name, blob: bytes):
    path = tmp_path / name
    path.write_bytes(blob)
    return path


class TestLoadP2:
    def test_row_major_order_and_values(self, tmp_path):
        blob = b"P2 3 3 255 10 20 30 40 50 60 70 80 90"
        field = load_image(_write(tmp_path, "a.pgm", blob))
        assert np.array_equal(field.data, [[10.0, 20.0, 30.0],
                                           [40.0, 50.0, 60.0],
                                           [70.0, 80.0, 90.0]])
        assert field.spacing == 1.0

    def test_comments_and_whitespace(self, tmp_path):
        blob = (b"P2 # format\n# another comment\n 3\t3\n255\n# data\n"
                b"1 2 3\n4 5 6\n7 8 9\n")
        field = load_image(_write(tmp_path, "a.pgm", blob))
        assert np.array_equal(field.data,
                              [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0],
                               [7.0, 8.0, 9.0]])

    def test_maxval_rescales_to_255(self, tmp_path):
        blob = b"P2 3 3 100 50 100 0 25 75 10 20 30 40"
        field = load_image(_write(tmp_path, "a.pgm", blob))
        raw = np.array([[50.0, 100.0, 0.0], [25.0, 75.0, 10.0],
                        [20.0, 30.0, 40.0]])
        assert np.array_equal(field.data, raw * (255.0 / 100.0))

    def test_below_minimum_size_rejected(self, tmp_path):
        """A well-formed 2x2 file is readable PGM but too small to carry a
        field: every difference stencil needs three nodes per axis."""
        path = _write(tmp_path, "a.pgm", b"P2 2 2 255 0 128 255 64")
        with pytest.raises(UnsupportedFormatError, match="at least 3x3"):
            load_image(path)

    def test_truncated_raster(self, tmp_path):
        with pytest.raises(CorruptFileError, match="end of file"):
            load_image(_write(tmp_path, "a.pgm", b"P2 3 3 255 0 128 255"))

    def test_non_integer_pixel_reports_offset(self, tmp_path):
        blob = b"P2 3 1 255 12 13 xy"
        with pytest.raises(CorruptFileError, match="byte offset 17") as info:
            load_image(_write(tmp_path, "a.pgm", blob))
        assert info.value.offset == 17

    def test_pixel_above_maxval(self, tmp_path):
        with pytest.raises(CorruptFileError, match="outside"):
            load_image(_write(tmp_path, "a.pgm",
                              b"P2 3 3 255 256 0 0 0 0 0 0 0 0"))

    def test_trailing_data(self, tmp_path):
        blob = b"P2 3 3 255 1 2 3 4 5 6 7 8 9 77"
        with pytest.raises(CorruptFileError, match="trailing"):
            load_image(_write(tmp_path, "a.pgm", blob))

    def test_zero_width_rejected(self, tmp_path):
        with pytest.raises(CorruptFileError, match="width"):
            load_image(_write(tmp_path, "a.pgm", b"P2 0 3 255"))


class TestLoadP5:
    def test_matches_p2_twin(self, tmp_path):
        values = list(range(30, 39))
        p2_body = " ".join(str(v) for v in values)
        p2 = _write(tmp_path, "a.pgm",
                    f"P2 3 3 255 {p2_body}".encode("ascii"))
        p5 = _write(tmp_path, "b.pgm", b"P5 3 3 255\n" + bytes(values))
        assert np.array_equal(load_image(p2).data, load_image(p5).data)

    def test_sixteen_bit_big_endian(self, tmp_path):
        values = [256, 65535, 0, 1, 513, 1027, 77, 300, 40000]
        raster = b"".join(v.to_bytes(2, "big") for v in values)
        field = load_image(_write(tmp_path, "a.pgm",
                                  b"P5 3 3 65535\n" + raster))
        expected = np.array(values, dtype=float).reshape(3, 3) \
            * (255.0 / 65535.0)
        assert np.array_equal(field.data, expected)

    def test_short_raster(self, tmp_path):
        blob = b"P5 3 3 255\n" + bytes([0, 1, 2])
        with pytest.raises(CorruptFileError, match="expected 9"):
            load_image(_write(tmp_path, "a.pgm", blob))

    def test_long_raster(self, tmp_path):
        blob = b"P5 3 3 255\n" + bytes(range(10))
        with pytest.raises(CorruptFileError, match="raster has 10"):
            load_image(_write(tmp_path, "a.pgm", blob))

    def test_pixel_above_maxval(self, tmp_path):
        blob = b"P5 3 3 200\n" + bytes([100, 201, 0, 0, 0, 0, 0, 0, 0])
        with pytest.raises(CorruptFileError, match="pixel 1 exceeds"):
            load_image(_write(tmp_path, "a.pgm", blob))

    def test_missing_raster_separator(self, tmp_path):
        with pytest.raises(CorruptFileError, match="separator"):
            load_image(_write(tmp_path, "a.pgm", b"P5 3 3 255"))


class TestLoadImageDispatch:
    def test_unknown_magic(self, tmp_path):
        with pytest.raises(UnsupportedFormatError, match="magic"):
            load_image(_write(tmp_path, "a.img", b"P7 1 1 255 0"))

    def test_empty_file(self, tmp_path):
        with pytest.raises(UnsupportedFormatError):
            load_image(_write(tmp_path, "a.img", b""))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.pgm")


@pytest.mark.skipif(not HAVE_PILLOW, reason="Pillow not installed")
class TestLoadPNG:
    def test_eight_bit_grayscale(self, tmp_path, rng):
        from PIL import Image

        data = rng.integers(0, 256, size=(5, 7), dtype=np.uint8)
        path = tmp_path / "a.png"
        Image.fromarray(data, mode="L").save(path)
        field = load_image(path)
        assert np.array_equal(field.data, data.astype(float))

    def test_sixteen_bit_grayscale_rescales(self, tmp_path):
        from PIL import Image

        data = np.array([[0, 32768, 65535],
                         [1, 2, 3],
                         [511, 512, 513]], dtype=np.uint16)
        path = tmp_path / "a.png"
        Image.fromarray(data).save(path)
        field = load_image(path)
        expected = data.astype(float) * (255.0 / 65535.0)
        assert np.array_equal(field.data, expected)

    def test_color_rejected(self, tmp_path):
        from PIL import Image

        path = tmp_path / "a.png"
        Image.new("RGB", (4, 4)).save(path)
        with pytest.raises(UnsupportedFormatError, match="grayscale"):
            load_image(path)


class TestSavePGM:
    @pytest.mark.parametrize("binary", [True, False], ids=["p5", "p2"])
    def test_round_trip_bit_identical(self, tmp_path, rng, binary):
        data = rng.integers(0, 256, size=(9, 11)).astype(float)
        path = tmp_path / "a.pgm"
        save_pgm(ScalarField(data), path, binary=binary)
        again = load_image(path)
        assert np.array_equal(again.data, data)
        # saving the loaded image reproduces the file byte for byte
        path2 = tmp_path / "b.pgm"
        save_pgm(again, path2, binary=binary)
        assert path.read_bytes() == path2.read_bytes()

    def test_clips_and_rounds(self, tmp_path):
        data = np.array([[-5.0, 300.0, 10.4],
                         [10.6, 0.0, 255.0],
                         [254.9, 0.2, 128.0]])
        save_pgm(ScalarField(data), tmp_path / "a.pgm")
        expected = np.array([[0.0, 255.0, 10.0],
                             [11.0, 0.0, 255.0],
                             [255.0, 0.0, 128.0]])
        assert np.array_equal(load_image(tmp_path / "a.pgm").data, expected)


class TestRenderDeformedGrid:
    def test_zero_displacement_draws_regular_grid(self):
        u = VectorField2.zeros(33, 33, 1.0)
        img = render_deformed_grid(u, stride=4)
        yy, xx = np.mgrid[0:33, 0:33]
        expected = np.where((yy % 4 == 0) | (xx % 4 == 0), 0.0, 255.0)
        assert np.array_equal(img.data, expected)

    def test_constant_shift_translates_grid(self):
        n, s, dx = 32, 4, 3
        u = VectorField2(
            ScalarField(np.full((n, n), float(dx))),
            ScalarField(np.zeros((n, n))),
        )
        img = render_deformed_grid(u, stride=s)
        yy, xx = np.mgrid[0:n, 0:n]
        on_row = (yy % s == 0) & (xx >= dx)
        on_col = ((xx - dx) % s == 0) & (xx >= dx)
        expected = np.where(on_row | on_col, 0.0, 255.0)
        assert np.array_equal(img.data, expected)

    def test_rejects_small_stride(self):
        with pytest.raises(ValueError, match="stride"):
            render_deformed_grid(VectorField2.zeros(16, 16, 1.0), stride=1)

    def test_values_are_binary(self):
        pair = make_fixture("smooth_warp", 48)
        img = render_deformed_grid(pair.u_true, stride=4)
        assert set(np.unique(img.data)) <= {0.0, 255.0}


class TestRunCli:
    def test_gc_fixture_run(self, tmp_path, warmed_kernels):
        out = tmp_path / "run"
        code = run_cli(["--model", "gc", "--fixture", "gaussian_shift",
                        "--size", "64", "--out", str(out)])
        assert code == 0
        for name in ("warped.pgm", "diff_before.pgm", "diff_after.pgm",
                     "grid.pgm", "report.json"):
            assert (out / name).exists()
        report = json.loads((out / "report.json").read_text())
        assert report["schema"] == 1
        assert report["row"]["model"] == "gc"
        assert report["row"]["epsilon"] <= 0.1
        assert report["row"]["min_jac"] > 0
        assert report["row"]["iterations"] <= 30

    def test_settings_echoed_in_report(self, tmp_path, warmed_kernels):
        out = tmp_path / "run"
        code = run_cli(["--model", "gc", "--fixture", "gaussian_shift",
                        "--gamma", "0.0001", "--tol", "0.001",
                        "--max-iter", "30", "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        solver = report["config"]["solver"]
        assert solver["gamma"] == 0.0001
        assert solver["tol"] == 0.001
        assert solver["max_iter"] == 30
        assert report["row"]["gamma"] == 0.0001
        assert report["config"]["grid_spacing"] == 4
        assert report["config"]["template_path"] == "fixture://gaussian_shift/64"

    def test_missing_template_without_fixture(self, tmp_path, capsys):
        code = run_cli(["--model", "gc", "--out", str(tmp_path)])
        assert code == 2
        err = capsys.readouterr().err
        assert "usage:" in err

    def test_unknown_flag(self, tmp_path, capsys):
        code = run_cli(["--model", "gc", "--fixture", "gaussian_shift",
                        "--out", str(tmp_path), "--frobnicate"])
        assert code == 2
        assert "usage:" in capsys.readouterr().err

    def test_fixture_and_files_conflict(self, tmp_path, capsys):
        code = run_cli(["--model", "gc", "--fixture", "gaussian_shift",
                        "--template", "a.pgm", "--reference", "b.pgm",
                        "--out", str(tmp_path)])
        assert code == 2
        assert "not both" in capsys.readouterr().err

    def test_missing_input_file(self, tmp_path, capsys):
        code = run_cli(["--model", "gc",
                        "--template", str(tmp_path / "nope.pgm"),
                        "--reference", str(tmp_path / "nope2.pgm"),
                        "--out", str(tmp_path / "out")])
        assert code == 2
        assert "not found" in capsys.readouterr().err

    def test_corrupt_input_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.pgm"
        bad.write_bytes(b"P2 2 2 255 1 2 3")
        code = run_cli(["--model", "gc", "--template", str(bad),
                        "--reference", str(bad), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "byte offset" in capsys.readouterr().err

    def test_size_mismatch(self, tmp_path, capsys):
        a = tmp_path / "a.pgm"
        b = tmp_path / "b.pgm"
        a.write_bytes(b"P2 3 3 255 0 0 0 0 0 0 0 0 0")
        b.write_bytes(b"P2 3 4 255 0 0 0 0 0 0 0 0 0 0 0 0")
        code = run_cli(["--model", "gc", "--template", str(a),
                        "--reference", str(b), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "differ" in capsys.readouterr().err

    def test_inapplicable_flag_rejected(self, tmp_path, capsys):
        code = run_cli(["--model", "demon", "--fixture", "gaussian_shift",
                        "--omega", "0.9", "--out", str(tmp_path)])
        assert code == 2
        assert "gc model only" in capsys.readouterr().err

    def test_solver_abort_exit_code(self, tmp_path, capsys, warmed_kernels):
        """A near-zero penalty weight makes the per-node systems singular in
        flat image regions, which the gc solver reports as an abort."""
        code = run_cli(["--model", "gc", "--fixture", "gaussian_shift",
                        "--r", "1e-6", "--out", str(tmp_path / "o")])
        assert code == 3
        assert "solver abort" in capsys.readouterr().err

    def test_csv_report(self, tmp_path, warmed_kernels):
        out = tmp_path / "run"
        code = run_cli(["--model", "demon", "--fixture", "gaussian_shift",
                        "--report", "csv", "--out", str(out)])
        assert code == 0
        lines = (out / "report.csv").read_text().strip().splitlines()
        assert lines[0] == "model,gamma,r,time_s,epsilon,min_jac,iterations"
        cells = lines[1].split(",")
        assert cells[0] == "demon"
        assert float(cells[1]) == 0.01   # noise ratio in the gamma column
        assert float(cells[2]) == 0.0
        assert float(cells[4]) <= 0.2

    def test_file_based_run(self, tmp_path, warmed_kernels):
        pair = make_fixture("gaussian_shift", 64)
        t_path = tmp_path / "T.pgm"
        r_path = tmp_path / "R.pgm"
        save_pgm(ScalarField(pair.template.data * 255.0), t_path)
        save_pgm(ScalarField(pair.reference.data * 255.0), r_path)
        out = tmp_path / "out"
        code = run_cli(["--model", "gc", "--template", str(t_path),
                        "--reference", str(r_path), "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["row"]["epsilon"] <= 0.1
        assert report["config"]["template_path"] == str(t_path)

    def test_deterministic_outputs(self, tmp_path, warmed_kernels):
        def run(d):
            assert run_cli(["--model", "gc", "--fixture", "gaussian_shift",
                            "--size", "64", "--out", str(d)]) == 0
            report = json.loads((d / "report.json").read_text())
            del report["row"]["time_s"]           # wall clock varies per run
            del report["config"]["output_dir"]    # distinct temp dirs
            return report, (d / "grid.pgm").read_bytes()

        rep_a, grid_a = run(tmp_path / "a")
        rep_b, grid_b = run(tmp_path / "b")
        assert rep_a == rep_b
        assert grid_a == grid_b

    def test_help_via_module_entry(self):
        proc = subprocess.run(
            [sys.executable, "-m", "curvreg.cli", "--help"],
            capture_output=True, text=True, timeout=120,
        )
        assert proc.returncode == 0
        assert "--model" in proc.stdout
