from __future__ import annotations

import json

import pytest

from ricciframe.cli import EXIT_INPUT, EXIT_INVALID, EXIT_OK, EXIT_REPLAY, EXIT_USAGE, main


@pytest.fixture
def k3_file(tmp_path):
    p = tmp_path / "k3.txt"
    p.write_text("0 1\n0 2\n1 2\n")
    return p


@pytest.fixture
def sbm_files(tmp_path):
    from ricciframe.graph import generate

    g = generate("sbm", {"sizes": [8, 8], "p_in": 0.7, "p_out": 0.1}, seed=1)
    gp, lp = tmp_path / "sbm.txt", tmp_path / "sbm_labels.txt"
    gp.write_text("".join(f"{i} {j}\n" for i, j in g.edges))
    lp.write_text("".join(f"{v} {int(c)}\n" for v, c in enumerate(g.labels)))
    return gp, lp


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def _replay_identical(out, capsys):
    rc = main(["replay", str(out / "manifest.json")])
    assert rc == EXIT_OK, capsys.readouterr().err
    fresh = out / "replay"
    for name in _manifest(out)["outputs"]:
        assert (fresh / name).read_bytes() == (out / name).read_bytes()


class TestCurvature:
    def test_k3(self, k3_file, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["curvature", str(k3_file), "--out-dir", str(out), "--workers", "1"]) == EXIT_OK
        rows = (out / "curvature.txt").read_text().splitlines()
        assert rows == ["0 1 0.5 1.0", "0 2 0.5 1.0", "1 2 0.5 1.0"]
        assert (out / "curvature_hist.csv").read_text().startswith("bin_left,bin_right,count\n")
        m = _manifest(out)
        assert m["command"] == "curvature" and set(m["outputs"]) == {"curvature.txt", "curvature_hist.csv"}
        assert m["inputs"]["graph"] == str(k3_file.resolve()) and "graph" in m["input_sha256"]
        assert "max kappa: 0.5" in capsys.readouterr().out
        _replay_identical(out, capsys)

    def test_one_based_output(self, tmp_path):
        g = tmp_path / "g.txt"
        g.write_text("1 2\n2 3\n")
        out = tmp_path / "o"
        assert main(["curvature", str(g), "--one-based", "--out-dir", str(out), "--workers", "1"]) == EXIT_OK
        assert (out / "curvature.txt").read_text().startswith("1 2 ")

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("0 1\nx 2\n")
        assert main(["curvature", str(bad), "--out-dir", str(tmp_path / "o")]) == EXIT_INPUT
        assert f"{bad}:2:" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["curvature", str(tmp_path / "nope.txt"), "--out-dir", str(tmp_path / "o")]) == EXIT_INPUT

    def test_invalid_alpha(self, k3_file, tmp_path):
        assert main(["curvature", str(k3_file), "--alpha", "2", "--out-dir", str(tmp_path / "o")]) == EXIT_INVALID

    def test_usage_errors(self, k3_file):
        assert main([]) == EXIT_USAGE
        assert main(["curvature"]) == EXIT_USAGE
        assert main(["curvature", str(k3_file), "--workers", "0"]) == EXIT_USAGE

    def test_workers_env_and_flag(self, k3_file, tmp_path, monkeypatch):
        monkeypatch.setenv("RICCIFRAME_WORKERS", "3")
        out = tmp_path / "env"
        assert main(["curvature", str(k3_file), "--out-dir", str(out)]) == EXIT_OK
        assert _manifest(out)["parameters"]["workers"] == 3
        out = tmp_path / "flag"
        assert main(["curvature", str(k3_file), "--out-dir", str(out), "--workers", "1"]) == EXIT_OK
        assert _manifest(out)["parameters"]["workers"] == 1


class TestReweight:
    def test_hom_k3(self, k3_file, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["reweight", str(k3_file), "--variant", "hom", "--out-dir", str(out), "--workers", "1"]) == EXIT_OK
        assert (out / "reweighted_edges.txt").read_text().splitlines() == ["0 1 0.5", "0 2 0.5", "1 2 0.5"]
        coo = (out / "laplacian_coo.txt").read_text().splitlines()
        assert len(coo) == 9
        _replay_identical(out, capsys)

    def test_variant_required(self, k3_file):
        assert main(["reweight", str(k3_file)]) == EXIT_USAGE


class TestCbed:
    def test_k4_report(self, tmp_path, capsys):
        g = tmp_path / "k4.txt"
        g.write_text("0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n")
        runs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["cbed", str(g), "--target-kappa", "0.5", "--seed", "7", "--out-dir", str(out),
                         "--workers", "1"]) == EXIT_OK
            runs.append(out)
        assert (runs[0] / "cbed_report.json").read_bytes() == (runs[1] / "cbed_report.json").read_bytes()
        report = json.loads((runs[0] / "cbed_report.json").read_text())
        assert report["terminated_by"] == "target" and report["kappa_max"][-1] <= 0.5 + 1e-9
        edges = (runs[0] / "rewired_edges.txt").read_text().splitlines()
        assert len(edges) == 6 - len(report["removed"])
        _replay_identical(runs[0], capsys)

    def test_triangle_free_no_removal(self, tmp_path):
        g = tmp_path / "c6.txt"
        g.write_text("".join(f"{i} {(i + 1) % 6}\n" for i in range(6)))
        out = tmp_path / "o"
        assert main(["cbed", str(g), "--out-dir", str(out), "--workers", "1"]) == EXIT_OK
        report = json.loads((out / "cbed_report.json").read_text())
        assert report["removed"] == [] and report["terminated_by"] == "target"

    def test_guard_note(self, tmp_path, capsys):
        g = tmp_path / "k2.txt"
        g.write_text("0 1\n")
        out = tmp_path / "o"
        assert main(["cbed", str(g), "--target-kappa", "-0.5", "--guard", "--out-dir", str(out),
                     "--workers", "1"]) == EXIT_OK
        assert "connectivity guard" in capsys.readouterr().out
        assert json.loads((out / "cbed_report.json").read_text())["note"]

    def test_empty_graph(self, tmp_path):
        g = tmp_path / "e.txt"
        g.write_text("# no edges\n")
        assert main(["cbed", str(g), "--out-dir", str(tmp_path / "o")]) == EXIT_INVALID


class TestDynamics:
    @pytest.mark.parametrize("theta,regime", [("0.5", "LFD"), ("2", "HFD"), ("1", "undetermined")])
    def test_regimes_on_c6(self, tmp_path, theta, regime, capsys):
        g = tmp_path / "c6.txt"
        g.write_text("".join(f"{i} {(i + 1) % 6}\n" for i in range(6)))
        out = tmp_path / "o"
        assert main(["dynamics", str(g), "--theta", theta, "--out-dir", str(out), "--workers", "1"]) == EXIT_OK
        assert f"regime: {regime}" in capsys.readouterr().out
        report = json.loads((out / "dynamics.json").read_text())
        assert report["regime"] == regime
        assert len((out / "energy.csv").read_text().splitlines()) == 302

    def test_replay_with_variant(self, k3_file, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["dynamics", str(k3_file), "--variant", "hom", "--steps", "20", "--out-dir", str(out),
                     "--workers", "1"]) == EXIT_OK
        _replay_identical(out, capsys)

    def test_bad_scale(self, k3_file, tmp_path):
        assert main(["dynamics", str(k3_file), "--scale", "-1", "--out-dir", str(tmp_path / "o")]) == EXIT_INVALID


class TestExperimentAndHomophily:
    def test_generator(self, tmp_path, capsys):
        out = tmp_path / "o"
        params = json.dumps({"sizes": [8, 8], "p_in": 0.6, "p_out": 0.05})
        rc = main(["experiment", "--generator", "sbm", "--params", params, "--seeds", "2",
                   "--variants", "plain,hom", "--out-dir", str(out), "--workers", "1"])
        assert rc == EXIT_OK
        data = json.loads((out / "experiment.json").read_text())
        assert len(data["rows"]) == 4 and set(data["mean"]) == {"plain", "hom"}
        _replay_identical(out, capsys)

    def test_graph_and_labels(self, sbm_files, tmp_path):
        gp, lp = sbm_files
        out = tmp_path / "o"
        assert main(["experiment", "--graph", str(gp), "--labels", str(lp), "--seeds", "1", "--variants", "het",
                     "--out-dir", str(out), "--workers", "1"]) == EXIT_OK
        assert set(_manifest(out)["inputs"]) == {"graph", "labels"}

    def test_errors(self, sbm_files, tmp_path):
        gp, _ = sbm_files
        o = str(tmp_path / "o")
        assert main(["experiment", "--graph", str(gp), "--out-dir", o]) == EXIT_USAGE
        assert main(["experiment", "--generator", "sbm", "--variants", "bogus", "--out-dir", o]) == EXIT_USAGE
        assert main(["experiment", "--generator", "sbm", "--params", "{bad", "--out-dir", o]) == EXIT_INPUT
        assert main(["experiment", "--generator", "cycle", "--params", '{"n": 5}', "--out-dir", o]) == EXIT_INVALID

    def test_homophily(self, tmp_path, capsys):
        g, lab = tmp_path / "c4.txt", tmp_path / "l.txt"
        g.write_text("0 1\n1 2\n2 3\n3 0\n")
        lab.write_text("0 0\n1 1\n2 0\n3 1\n")
        out = tmp_path / "o"
        assert main(["homophily", str(g), str(lab), "--out-dir", str(out)]) == EXIT_OK
        assert "H(G): 0.0" in capsys.readouterr().out
        assert json.loads((out / "homophily.json").read_text())["homophily"] == 0.0


class TestReplay:
    def test_mismatch_detected(self, k3_file, tmp_path, capsys):
        out = tmp_path / "o"
        assert main(["curvature", str(k3_file), "--out-dir", str(out), "--workers", "1"]) == EXIT_OK
        m = _manifest(out)
        m["outputs"]["curvature.txt"] = "0" * 64
        (out / "manifest.json").write_text(json.dumps(m))
        assert main(["replay", str(out / "manifest.json")]) == EXIT_REPLAY
        assert "curvature.txt" in capsys.readouterr().err

    def test_unreadable_manifest(self, tmp_path):
        bad = tmp_path / "manifest.json"
        bad.write_text("{not json")
        assert main(["replay", str(bad)]) == EXIT_INPUT
        bad.write_text(json.dumps({"command": "launch", "parameters": {}, "outputs": {}}))
        assert main(["replay", str(bad)]) == EXIT_INPUT

    def test_explicit_out_dir(self, k3_file, tmp_path):
        out = tmp_path / "o"
        main(["curvature", str(k3_file), "--out-dir", str(out), "--workers", "1"])
        assert main(["replay", str(out / "manifest.json"), "--out-dir", str(tmp_path / "again")]) == EXIT_OK
        assert (tmp_path / "again" / "curvature.txt").read_bytes() == (out / "curvature.txt").read_bytes()


def test_module_entry_point(k3_file, tmp_path):
    import subprocess
    import sys

    out = tmp_path / "o"
    res = subprocess.run([sys.executable, "-m", "ricciframe", "curvature", str(k3_file), "--out-dir", str(out),
                          "--workers", "1"], capture_output=True, text=True)
    assert res.returncode == 0 and (out / "curvature.txt").exists()
