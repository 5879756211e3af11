"""Command-line client: subcommands, exit codes, file outputs."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from ribbonflex.cli import main
from ribbonflex.documents import SurfaceDocument
from ribbonflex.meshio import parse_obj


@pytest.fixture()
def runner():
    return CliRunner()


def gen(runner, path, *args):
    result = runner.invoke(main, ["gen", "--out", str(path), *args])
    assert result.exit_code == 0, result.output
    return path


class TestGen:
    def test_writes_valid_document(self, runner, tmp_path):
        path = gen(runner, tmp_path / "s.json", "--kind", "REV",
                   "--ribbons", "4", "--n", "201")
        doc = SurfaceDocument.load(path)
        assert len(doc.curves) == 5
        assert doc.grid_n == 201

    def test_seed_flag_is_global(self, runner, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        r1 = runner.invoke(main, ["--seed", "5", "gen", "--kind", "RAND",
                                  "--out", str(a)])
        r2 = runner.invoke(main, ["--seed", "5", "gen", "--kind", "RAND",
                                  "--out", str(b)])
        assert r1.exit_code == 0 and r2.exit_code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_param_override(self, runner, tmp_path):
        path = gen(runner, tmp_path / "c.json", "--kind", "CONE",
                   "--param", "r_step=0.5", "--n", "51")
        surface = SurfaceDocument.load(path).to_surface()
        radii = np.linalg.norm(surface.positions()[:, 0, :2], axis=1)
        assert radii[1] - radii[0] == pytest.approx(0.5)

    def test_bad_param_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["gen", "--kind", "REV", "--param",
                                      "oops", "--out", str(tmp_path / "x")])
        assert result.exit_code == 2


class TestCheck:
    def test_flexible_exit_zero(self, runner, tmp_path):
        path = gen(runner, tmp_path / "rev.json", "--kind", "REV",
                   "--ribbons", "3")
        result = runner.invoke(main, ["check", str(path)])
        assert result.exit_code == 0
        assert "flexible" in result.output

    def test_rigid_exit_one(self, runner, tmp_path):
        path = gen(runner, tmp_path / "rand.json", "--kind", "RAND",
                   "--ribbons", "3")
        result = runner.invoke(main, ["check", str(path)])
        assert result.exit_code == 1
        assert "rigid" in result.output

    def test_degenerate_exit_two(self, runner, tmp_path):
        path = gen(runner, tmp_path / "t.json", "--kind", "TRANSLATE")
        result = runner.invoke(main, ["check", str(path)])
        assert result.exit_code == 2
        assert "node 0" in result.output

    def test_json_report(self, runner, tmp_path):
        path = gen(runner, tmp_path / "rev.json", "--kind", "REV",
                   "--ribbons", "3")
        result = runner.invoke(main, ["--json", "check", str(path)])
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert report["verdict"] == "flexible"
        assert report["triples"][0]["monodromy_residual"] is not None

    def test_report_file(self, runner, tmp_path):
        path = gen(runner, tmp_path / "rev.json", "--kind", "REV",
                   "--ribbons", "3")
        out = tmp_path / "report.json"
        result = runner.invoke(main, ["check", str(path), "--out", str(out)])
        assert result.exit_code == 0
        assert json.loads(out.read_text())["verdict"] == "flexible"

    def test_missing_file_usage_error(self, runner):
        result = runner.invoke(main, ["check", "no-such-file.json"])
        assert result.exit_code == 2


class TestFlex:
    def test_exports_frames(self, runner, tmp_path):
        path = gen(runner, tmp_path / "dev.json", "--kind", "DEV")
        frames = tmp_path / "frames"
        result = runner.invoke(main, [
            "flex", str(path), "--lambda-max", "0.1", "--steps", "5",
            "--frames", str(frames)])
        assert result.exit_code == 0, result.output
        files = sorted(p.name for p in frames.iterdir())
        assert files[0] == "frame_0000.obj" and len(files) == 6
        vertices, faces = parse_obj(frames / "frame_0005.obj")
        assert vertices.shape == (3 * 201, 3)
        assert len(faces) == 2 * 200

    def test_rigid_surface_exit_one(self, runner, tmp_path):
        path = gen(runner, tmp_path / "rand.json", "--kind", "RAND",
                   "--ribbons", "3")
        result = runner.invoke(main, ["flex", str(path), "--lambda-max",
                                      "0.1", "--steps", "5"])
        assert result.exit_code == 1

    def test_degenerate_exit_two(self, runner, tmp_path):
        path = gen(runner, tmp_path / "t.json", "--kind", "TRANSLATE")
        result = runner.invoke(main, ["flex", str(path), "--lambda-max",
                                      "0.1", "--steps", "5"])
        assert result.exit_code == 2


class TestInvariantsAndDevelopable:
    def test_invariants_output(self, runner, tmp_path):
        path = gen(runner, tmp_path / "rev.json", "--kind", "REV")
        result = runner.invoke(main, ["invariants", str(path)])
        assert result.exit_code == 0
        assert "genericity margin" in result.output
        assert "curve_speed" in result.output

    def test_invariants_json(self, runner, tmp_path):
        path = gen(runner, tmp_path / "rev.json", "--kind", "REV")
        result = runner.invoke(main, ["--json", "invariants", str(path)])
        body = json.loads(result.output)
        assert len(body["families"]["curve_speed"]) == 3

    def test_developable_with_trace(self, runner, tmp_path):
        path = gen(runner, tmp_path / "dev.json", "--kind", "DEV")
        result = runner.invoke(main, ["developable", str(path),
                                      "--lambda-max", "0.2", "--steps", "10"])
        assert result.exit_code == 0
        assert "developable" in result.output
        assert "affinity defect" in result.output

    def test_quiet_silences_prose(self, runner, tmp_path):
        path = gen(runner, tmp_path / "rev.json", "--kind", "REV",
                   "--ribbons", "3")
        result = runner.invoke(main, ["--quiet", "check", str(path)])
        assert result.exit_code == 0
        assert result.output == ""
