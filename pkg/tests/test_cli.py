"""Command-line surface: subcommands, CSV schemas, config, exit codes."""

import math

import numpy as np
import pytest

from geobary.cli import cli_main

SQUARE = "weight,x0,x1\n0.25,0,0\n0.25,1,0\n0.25,0,1\n0.25,1,1\n"


@pytest.fixture
def square_csv(tmp_path):
    path = tmp_path / "square.csv"
    path.write_text(SQUARE)
    return str(path)


@pytest.fixture
def sphere_cap_csv(tmp_path):
    t = math.pi / 4
    rows = ["weight,x0,x1,x2"]
    for lon in (0.0, math.pi):
        rows.append(
            f"0.5,{math.sin(t) * math.cos(lon)},{math.sin(t) * math.sin(lon)},{math.cos(t)}"
        )
    path = tmp_path / "cap.csv"
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def run(argv, capsys):
    code = cli_main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestBary:
    def test_euclidean_mean(self, square_csv, capsys):
        code, out, _ = run(["bary", "--space", "euclidean", "--measure", square_csv], capsys)
        assert code == 0
        assert "status converged" in out
        assert "candidate 0 0.5,0.5" in out

    def test_out_file(self, square_csv, tmp_path, capsys):
        out_path = tmp_path / "min.csv"
        code, _, _ = run(
            ["bary", "--space", "euclidean", "--measure", square_csv, "--out", str(out_path)],
            capsys,
        )
        assert code == 0
        lines = out_path.read_text().strip().split("\n")
        assert lines[0] == "weight,x0,x1"
        assert lines[1].startswith("1.0,0.5,0.5")

    def test_grid_functional(self, tmp_path, capsys):
        (tmp_path / "atoms.csv").write_text("x0\n0.0\n0.5\n1.0\n")
        (tmp_path / "meas.csv").write_text(
            "weight,w0,w1,w2\n0.5,0.2,0.5,0.3\n0.5,0.4,0.4,0.2\n"
        )
        code, out, _ = run(
            [
                "bary",
                "--space", "grid",
                "--grid-file", str(tmp_path / "atoms.csv"),
                "--measure", str(tmp_path / "meas.csv"),
                "--functional", "kl",
            ],
            capsys,
        )
        assert code == 0 and "status converged" in out


class TestBound:
    def test_theorem_two_critical_dimension(self, capsys):
        code, out, _ = run(
            ["bound", "--theorem", "2", "--D", "2", "--alpha", "1", "--n", "10000"],
            capsys,
        )
        assert code == 0
        assert float(out.strip()) == pytest.approx(math.log(10_000) / 100, rel=1e-12)

    def test_theorem_one_canonical(self, capsys):
        code, out, _ = run(["bound", "--theorem", "1", "--n", "100"], capsys)
        assert code == 0
        assert float(out.strip()) == pytest.approx(829.44, abs=1e-9)


class TestRates:
    def test_csv_deterministic_and_parallel_safe(self, square_csv, tmp_path, capsys):
        args = [
            "rates",
            "--space", "euclidean",
            "--measure", square_csv,
            "--ns", "16,64,256",
            "--reps", "40",
            "--seed", "13",
        ]
        outs = []
        for name, workers in (("a", "1"), ("b", "1"), ("c", "4")):
            path = tmp_path / f"{name}.csv"
            code, _, _ = run(args + ["--out", str(path), "--workers", workers], capsys)
            assert code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_svg_output(self, square_csv, tmp_path, capsys):
        svg = tmp_path / "plot.svg"
        code, out, _ = run(
            [
                "rates",
                "--space", "euclidean",
                "--measure", square_csv,
                "--ns", "8,32,128",
                "--reps", "20",
                "--seed", "3",
                "--out", str(tmp_path / "r.csv"),
                "--svg", str(svg),
            ],
            capsys,
        )
        assert code == 0
        text = svg.read_text()
        assert text.startswith("<svg") and "slope" in text


class TestVi:
    def test_euclidean_passes(self, square_csv, tmp_path, capsys):
        out_path = tmp_path / "vi.csv"
        code, out, _ = run(
            ["vi", "--space", "euclidean", "--measure", square_csv, "--out", str(out_path)],
            capsys,
        )
        assert code == 0
        assert "K3_hat" in out and "pc_identity_max_error" in out
        lines = out_path.read_text().strip().split("\n")
        assert lines[0] == "probe_id,d2,excess,k_integral,violation"
        assert len(lines) > 20

    def test_equator_measure_exits_nonzero(self, tmp_path, capsys):
        rows = ["weight,x0,x1,x2"]
        for k in range(8):
            rows.append(
                f"0.125,{math.cos(k * math.pi / 4)},{math.sin(k * math.pi / 4)},0.0"
            )
        path = tmp_path / "equator.csv"
        path.write_text("\n".join(rows) + "\n")
        code, out, _ = run(["vi", "--space", "sphere", "--measure", str(path)], capsys)
        assert code == 1
        assert "multi-minimizer" in out


class TestCurvature:
    def test_sphere_pc_passes(self, capsys):
        code, out, _ = run(
            ["curvature", "--space", "sphere", "--dim", "3", "--target", "PC",
             "--samples", "300", "--seed", "1"],
            capsys,
        )
        assert code == 0
        assert "violations 0" in out

    def test_sphere_npc_fails(self, capsys):
        code, out, _ = run(
            ["curvature", "--space", "sphere", "--dim", "3", "--target", "NPC",
             "--samples", "300", "--seed", "1"],
            capsys,
        )
        assert code == 1


class TestCover:
    def test_sweep_and_slope(self, tmp_path, capsys):
        pts = ["x0,x1"]
        for x in np.linspace(0, 1, 21):
            for y in np.linspace(0, 1, 21):
                pts.append(f"{x},{y}")
        path = tmp_path / "points.csv"
        path.write_text("\n".join(pts) + "\n")
        out_path = tmp_path / "cover.csv"
        code, out, _ = run(
            ["cover", "--points", str(path), "--eps-min", "0.08", "--eps-max", "0.3",
             "--num", "5", "--out", str(out_path)],
            capsys,
        )
        assert code == 0
        assert "slope" in out
        lines = out_path.read_text().strip().split("\n")
        assert lines[0] == "eps,cover_size,packing_size"
        assert len(lines) == 6


class TestExtend:
    def test_cap_measure_passes(self, sphere_cap_csv, capsys):
        code, out, _ = run(
            ["extend", "--space", "sphere", "--measure", sphere_cap_csv, "--lam", "1.0"],
            capsys,
        )
        assert code == 0
        assert "hypothesis_two_holds True" in out
        assert "violations 0" in out
        assert "K3 2.0" in out


class TestConfigAndUsage:
    def test_config_supplies_defaults_and_flags_override(self, square_csv, tmp_path, capsys):
        cfg = tmp_path / "geobary.cfg"
        cfg.write_text(
            f"[rates]\nspace = euclidean\nmeasure = {square_csv}\n"
            "ns = 8,32\nreps = 5\nseed = 2\n"
        )
        out1 = tmp_path / "one.csv"
        code, _, _ = run(
            ["--config", str(cfg), "rates", "--out", str(out1)], capsys
        )
        assert code == 0
        body = [l for l in out1.read_text().splitlines() if not l.startswith(("n,", "#"))]
        assert len(body) == 10  # 2 ns x 5 reps from the config
        out2 = tmp_path / "two.csv"
        code, _, _ = run(
            ["--config", str(cfg), "rates", "--reps", "3", "--out", str(out2)], capsys
        )
        body = [l for l in out2.read_text().splitlines() if not l.startswith(("n,", "#"))]
        assert len(body) == 6  # flag overrides config

    def test_unknown_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_main(["bound", "--theorem", "2", "--bogus", "1"])
        assert exc.value.code == 2
        capsys.readouterr()

    def test_unknown_subcommand_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_main(["frobnicate"])
        assert exc.value.code == 2
        capsys.readouterr()

    def test_missing_measure_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_main(["bary", "--space", "euclidean"])
        assert exc.value.code == 2
        capsys.readouterr()

    def test_domain_error_exits_one(self, tmp_path, capsys):
        # near-singular Gaussian atom: a domain error, not a usage error
        path = tmp_path / "gauss.csv"
        path.write_text("weight,m0,c00\n1.0,0.0,1e-14\n")
        with pytest.raises(SystemExit) as exc:
            cli_main(["bary", "--space", "gaussian", "--measure", str(path)])
        assert exc.value.code == 2  # rejected during measure validation
        capsys.readouterr()
