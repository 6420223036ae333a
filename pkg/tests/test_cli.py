"""Command-line runner: output formats, config precedence, exit codes and figure outputs."""

import json
import math

import numpy as np
import pytest

from beamlab.asym import asymptotic_coefficients
from beamlab.cli import main
from beamlab.core import BeamModel
from beamlab.experiments import ExperimentSpec, read_csv, write_csv


def run(argv):
    return main([str(a) for a in argv])


def body(path):
    return [ln for ln in path.read_text(encoding="utf-8").splitlines() if not ln.startswith("#")]


class TestCsvFormat:
    def test_layout(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run(["series", "--n-terms", 50, "--dt", 0.1, "--t-max", 0.5, "--out", out]) == 0
        text = out.read_bytes().decode("utf-8")
        lines = text.splitlines()
        comments = [ln for ln in lines if ln.startswith("#")]
        assert comments and all("=" in ln for ln in comments)
        assert lines.index(body(out)[0]) == len(comments)  # comments precede the header
        assert body(out)[0] == "tau,slope"
        meta, cols = read_csv(out)
        assert meta["n_terms"] == "50"
        np.testing.assert_allclose(cols["tau"], np.linspace(0, 0.5, 6))

    def test_round_trip_is_exact(self, tmp_path):
        x = np.array([0.1, 1 / 3, math.pi, -2.5e-300])
        write_csv(tmp_path / "r.csv", {"tau": np.arange(4.0), "v": x}, {"k": 1.5})
        meta, cols = read_csv(tmp_path / "r.csv")
        assert meta == {"k": "1.5"}
        np.testing.assert_array_equal(cols["v"], x)

    def test_tau_must_come_first(self, tmp_path):
        with pytest.raises(ValueError, match="first column"):
            write_csv(tmp_path / "x.csv", {"v": [1.0], "tau": [0.0]})

    def test_stdout(self, capsys):
        assert run(["asymptotic", "--dt", 0.5, "--t-max", 1]) == 0
        out = capsys.readouterr().out.splitlines()
        rows = [ln for ln in out if not ln.startswith("#")]
        assert rows[0] == "tau,asymptotic"
        assert float(rows[1].split(",")[1]) == 0.5  # c0
        ap = asymptotic_coefficients(BeamModel())
        assert float(rows[3].split(",")[1]) == pytest.approx(ap(1.0), rel=1e-15)


class TestConfig:
    def test_json_config_and_override(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"dt": 0.25, "t-max": 1.0, "beam": {"length": 6.0}}))
        out = tmp_path / "a.csv"
        assert run(["asymptotic", "--config", cfg, "--out", out]) == 0
        meta, cols = read_csv(out)
        assert cols["tau"].size == 5 and float(meta["length"]) == 6.0
        assert run(["asymptotic", "--config", cfg, "--dt", 0.5, "--length", 3, "--out", out]) == 0
        meta, cols = read_csv(out)
        assert cols["tau"].size == 3 and float(meta["length"]) == 3.0

    def test_toml_config(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('n_terms = 20\ndt = 0.5\nt_max = 1.0\n[beam]\nlength = 3.0\n')
        out = tmp_path / "s.csv"
        assert run(["series", "--config", cfg, "--out", out]) == 0
        meta, _ = read_csv(out)
        assert meta["n_terms"] == "20" and float(meta["length"]) == 3.0

    def test_physical_beam_is_rescaled(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"beam": {"rho_A": 4.0, "rho_I": 1.0, "EI": 1.0, "length": 2.0}}))
        out = tmp_path / "a.csv"
        assert run(["asymptotic", "--config", cfg, "--dt", 0.5, "--t-max", 1, "--out", out]) == 0
        meta, _ = read_csv(out)
        assert "rescaled_from" in meta
        # length unit sqrt(rho_I / rho_A) = 1/2
        assert float(meta["length"]) == pytest.approx(4.0)

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"frobnicate": 1}))
        assert run(["asymptotic", "--config", cfg]) == 2
        assert "unknown config key" in capsys.readouterr().err

    def test_unreadable_config(self, tmp_path):
        assert run(["asymptotic", "--config", tmp_path / "missing.toml"]) == 2

    def test_malformed_config(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("dt = = 1")
        assert run(["asymptotic", "--config", cfg]) == 2


class TestExitCodes:
    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["series", "--dt", "-1"])
        assert exc.value.code == 2

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_computational_error(self, capsys):
        assert run(["fem", "--elements", 5, "--t-max", 0.1]) == 1
        assert "no midspan node" in capsys.readouterr().err

    def test_snapshot_needs_output(self):
        assert run(["fem", "--elements", 4, "--t-max", 0.1, "--snapshot-every", 1]) == 2

    def test_bad_criteria(self, tmp_path):
        assert run(["accept", "--criteria", "one", "--out", tmp_path]) == 2
        assert run(["accept", "--criteria", "13", "--out", tmp_path]) == 2


class TestFemCommand:
    def test_snapshot_dump(self, tmp_path):
        out, snap = tmp_path / "f.csv", tmp_path / "snap.csv"
        assert run(["fem", "--elements", 4, "--dt", 0.1, "--t-max", 1.0, "--snapshot-every", 5,
                    "--snapshot-out", snap, "--out", out]) == 0
        meta, cols = read_csv(out)
        assert list(cols) == ["tau", "rotation", "energy"] and cols["tau"].size == 11
        assert "SDIRK2" in meta["scheme"]
        _, s = read_csv(snap)
        assert list(s)[:3] == ["tau", "w_0", "theta_0"] and len(s) == 1 + 2 * 5
        np.testing.assert_allclose(s["tau"], [0.0, 0.5, 1.0])
        np.testing.assert_array_equal(s["theta_2"][1:], cols["rotation"][[5, 10]])

    def test_eval_pos_probe(self, tmp_path):
        out = tmp_path / "f.csv"
        assert run(["fem", "--elements", 4, "--dt", 0.1, "--t-max", 0.2,
                    "--eval-pos", 0, "--out", out]) == 0
        assert read_csv(out)[0]["dof"] == "1"


class TestConvolveCommand:
    def test_sampled_profile(self, tmp_path):
        samples = tmp_path / "m.csv"
        tau = np.linspace(0, 0.2, 21)
        write_csv(samples, {"tau": tau, "M": np.ones_like(tau)})
        out_s, out_c = tmp_path / "s.csv", tmp_path / "c.csv"
        assert run(["convolve", "--profile", "sampled", "--samples", samples, "--out", out_s]) == 0
        assert run(["convolve", "--profile", "constant", "--dt", 0.01, "--t-max", 0.2, "--out", out_c]) == 0
        np.testing.assert_allclose(read_csv(out_s)[1]["response"], read_csv(out_c)[1]["response"],
                                   rtol=1e-14, atol=1e-16)

    def test_sampled_needs_file(self):
        assert run(["convolve", "--profile", "sampled"]) == 2


class TestFigure:
    @pytest.mark.parametrize("fig, extra", [
        ("asym-compare", ["--n-terms", 200, "--dt", 0.05]),
        ("load-independence", ["--n-terms", 200, "--dt", 0.05]),
        ("residual-order", ["--n-terms", 500, "--dt", 0.005]),
        ("series-vs-fem", ["--n-terms", 200, "--elements", 16, "--dt", 0.05, "--t-max", 0.5]),
        ("eb-artifact", ["--elements", 64, "--dt", 1e-4]),
    ])
    def test_outputs_and_determinism(self, tmp_path, fig, extra):
        args = ["figure", "--id", fig, *extra]
        assert run([*args, "--out", tmp_path / "a"]) == 0
        assert run([*args, "--out", tmp_path / "b"]) == 0
        csvs = sorted((tmp_path / "a").glob("*.csv"))
        assert csvs
        for f in csvs:
            assert body(f)[0].startswith("tau,")
            assert body(f) == body(tmp_path / "b" / f.name)
        meta = json.loads((tmp_path / "a" / f"{fig}.meta.json").read_text())
        assert meta["figure_id"] == fig
        assert {"versions", "integrator", "timestamp", "parameters", "results"} <= set(meta)

    def test_unknown_override(self):
        with pytest.raises(ValueError, match="unknown override"):
            ExperimentSpec("asym-compare", {"colour": "red"})

    def test_unknown_figure(self):
        with pytest.raises(SystemExit):
            main(["figure", "--id", "nope"])


class TestAcceptCommand:
    def test_subset_json_schema(self, tmp_path, capsys):
        code = run(["accept", "--criteria", "1,2,9", "--out", tmp_path])
        doc = json.loads((tmp_path / "acceptance.json").read_text(encoding="utf-8"))
        assert set(doc) >= {"checks", "pass"}
        assert doc["checks"]
        for c in doc["checks"]:
            assert set(c) >= {"name", "measured", "expected", "tol", "pass"}
            assert isinstance(c["pass"], bool)
        assert doc["pass"] == all(c["pass"] for c in doc["checks"])
        assert code == (0 if doc["pass"] else 1)
        assert (tmp_path / "acceptance.txt").exists()
        assert "PASS" in capsys.readouterr().out
