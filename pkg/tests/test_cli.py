"""CLI contracts: config validation, file formats, exit codes, determinism."""

import json

import numpy as np
import pytest

import trinls as t
from trinls.cli import main, read_profile_csv

BASE = """\
[grid]
n = 512
length = 40.0

[coupling]
a11 = 1.0
a12 = 1.0
a13 = 1.0
a22 = 1.0
a23 = 1.0
a33 = 1.0
p = 2.0

[masses]
r = 4.0
s = 0.0
t = 0.0

[solver]
seed = 0
"""


def write_config(tmp_path, text=BASE, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfigValidation:
    def test_invalid_exponent_names_field(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE.replace("p = 2.0", "p = 3.5"))
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
        err = capsys.readouterr().err
        assert "coupling" in err and "exponent" in err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE + "\n[solver]\nbogus = 1\n")
        # configparser raises on duplicate section; use a fresh unknown key
        cfg = write_config(tmp_path, BASE.replace("seed = 0", "seed = 0\nbogus = 1"))
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
        assert "bogus" in capsys.readouterr().err

    def test_unknown_section_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE + "\n[mystery]\nx = 1\n")
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
        assert "mystery" in capsys.readouterr().err

    def test_missing_required_section(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE.replace("[masses]", "[output]")
                           .replace("r = 4.0", "dir = out")
                           .replace("s = 0.0", "").replace("t = 0.0", ""))
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
        assert "masses" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["solve", "--config", str(tmp_path / "nope.ini"),
                     "--out", str(tmp_path / "o")]) == 1


class TestSolve:
    def test_single_component_preset(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["solve", "--config", cfg, "--out", str(out), "--quiet"]) == 0
        gs = json.loads((out / "groundstate.json").read_text())
        assert gs["lambda"] == pytest.approx(-4 / 3, rel=1e-4)
        assert gs["omega"][0] == pytest.approx(1.0, abs=1e-5)
        assert gs["omega"][1] is None and gs["omega"][2] is None
        assert gs["masses"][0] == pytest.approx(4.0, rel=1e-12)
        assert gs["grid"] == {"n": 512, "length": 40.0}
        assert gs["coupling"]["p"] == 2.0
        assert set(gs) == {"lambda", "omega", "residual", "iterations",
                           "masses", "grid", "coupling"}
        # profile file round-trips onto the same grid
        grid = t.make_grid(512, 40.0)
        state = read_profile_csv(out / "profile.csv", grid)
        assert state.masses()[0] == pytest.approx(4.0, rel=1e-9)

    def test_deterministic_outputs(self, tmp_path):
        cfg = write_config(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["solve", "--config", cfg, "--out", str(out1), "--quiet"]) == 0
        assert main(["solve", "--config", cfg, "--out", str(out2), "--quiet"]) == 0
        for name in ("groundstate.json", "profile.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        # timestamps are segregated into metadata.json
        assert (out1 / "metadata.json").exists()

    def test_seed_override_changes_metadata_not_result(self, tmp_path):
        # different seeds still converge to the same minimizer
        cfg = write_config(tmp_path)
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert main(["solve", "--config", cfg, "--out", str(out1), "--quiet",
                     "--seed", "1"]) == 0
        assert main(["solve", "--config", cfg, "--out", str(out2), "--quiet",
                     "--seed", "2"]) == 0
        a = json.loads((out1 / "groundstate.json").read_text())
        b = json.loads((out2 / "groundstate.json").read_text())
        assert a["lambda"] == pytest.approx(b["lambda"], rel=1e-9)

    def test_nonconvergence_exit_code(self, tmp_path):
        cfg = write_config(tmp_path, BASE.replace(
            "seed = 0", "seed = 0\nmax_iters = 2\nrefine = false"))
        assert main(["solve", "--config", cfg, "--out",
                     str(tmp_path / "o"), "--quiet"]) == 2

    def test_supplied_init_roundtrip(self, tmp_path):
        cfg = write_config(tmp_path)
        first = tmp_path / "first"
        assert main(["solve", "--config", cfg, "--out", str(first), "--quiet"]) == 0
        resume = BASE.replace(
            "seed = 0",
            f"seed = 0\ninit = supplied\ninit_profile = {first / 'profile.csv'}")
        cfg2 = write_config(tmp_path, resume, name="resume.ini")
        out = tmp_path / "second"
        assert main(["solve", "--config", cfg2, "--out", str(out), "--quiet"]) == 0
        gs = json.loads((out / "groundstate.json").read_text())
        assert gs["lambda"] == pytest.approx(-4 / 3, rel=1e-4)

    def test_supplied_init_missing_file(self, tmp_path, capsys):
        broken = BASE.replace(
            "seed = 0",
            f"seed = 0\ninit = supplied\ninit_profile = {tmp_path / 'gone.csv'}")
        cfg = write_config(tmp_path, broken, name="broken.ini")
        assert main(["solve", "--config", cfg, "--out",
                     str(tmp_path / "o"), "--quiet"]) == 1
        assert "init_profile" in capsys.readouterr().err


EVOLVE_EXTRA = """
[evolution]
t = 0.1
dt = 1e-3
snapshot_every = 50
"""


class TestEvolve:
    def make_profile(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "solve_out"
        assert main(["solve", "--config", cfg, "--out", str(out), "--quiet"]) == 0
        return out / "profile.csv"

    def test_roundtrip_and_trace(self, tmp_path):
        profile = self.make_profile(tmp_path)
        cfg = write_config(tmp_path, BASE + EVOLVE_EXTRA, name="evolve.ini")
        out = tmp_path / "ev"
        assert main(["evolve", "--config", cfg, "--profile", str(profile),
                     "--out", str(out), "--quiet"]) == 0
        lines = [l for l in (out / "trace.csv").read_text().splitlines()
                 if not l.startswith("#")]
        header = lines[0].split(",")
        assert header == ["t", "energy_drift", "mass_drift_1", "mass_drift_2",
                          "mass_drift_3"]
        assert len(lines) == 1 + 101
        last = lines[-1].split(",")
        assert float(last[1]) <= 1e-8
        # snapshots written with an index
        assert (out / "snapshots.csv").exists()
        assert (out / "snapshots" / "snap_000000.csv").exists()

    def test_zero_duration_single_row(self, tmp_path):
        profile = self.make_profile(tmp_path)
        cfg = write_config(tmp_path, BASE + EVOLVE_EXTRA.replace("t = 0.1", "t = 0.0"),
                           name="zero.ini")
        out = tmp_path / "ev0"
        assert main(["evolve", "--config", cfg, "--profile", str(profile),
                     "--out", str(out), "--quiet"]) == 0
        lines = [l for l in (out / "trace.csv").read_text().splitlines()
                 if not l.startswith("#")]
        assert len(lines) == 2
        assert float(lines[1].split(",")[1]) == 0.0

    def test_grid_mismatch_exit_code(self, tmp_path, capsys):
        profile = self.make_profile(tmp_path)
        bad = BASE.replace("n = 512", "n = 256") + EVOLVE_EXTRA
        cfg = write_config(tmp_path, bad, name="bad.ini")
        assert main(["evolve", "--config", cfg, "--profile", str(profile),
                     "--out", str(tmp_path / "o"), "--quiet"]) == 1
        assert "rows" in capsys.readouterr().err

    def test_missing_profile_exit_code(self, tmp_path):
        cfg = write_config(tmp_path, BASE + EVOLVE_EXTRA, name="e.ini")
        assert main(["evolve", "--config", cfg, "--profile",
                     str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o"),
                     "--quiet"]) == 1

    def test_blow_up_exit_code_with_partial_trace(self, tmp_path):
        # overflow via p = 2.5 and an astronomically scaled profile
        grid = t.make_grid(512, 40.0)
        huge = np.full((3, 512), 1e200, dtype=complex)
        huge *= np.exp(-grid.nodes ** 2)[None, :]
        from trinls.cli import write_profile_csv
        write_profile_csv(tmp_path / "huge.csv", t.State.from_array(grid, huge))
        cfg = write_config(tmp_path, BASE.replace("p = 2.0", "p = 2.5")
                           + EVOLVE_EXTRA, name="blow.ini")
        out = tmp_path / "bl"
        with np.errstate(all="ignore"):
            code = main(["evolve", "--config", cfg, "--profile",
                         str(tmp_path / "huge.csv"), "--out", str(out), "--quiet"])
        assert code == 3
        assert (out / "trace.csv").exists()


class TestSubadd:
    def test_single_component_split(self, tmp_path):
        cfg = write_config(tmp_path, BASE + "\n[subadd]\nsplits = 2,0,0\n",
                           name="sub.ini")
        out = tmp_path / "sub"
        assert main(["subadd", "--config", cfg, "--out", str(out), "--quiet"]) == 0
        lines = [l for l in (out / "margins.csv").read_text().splitlines()
                 if not l.startswith("#")]
        header = lines[0].split(",")
        row = dict(zip(header, lines[1].split(",")))
        assert float(row["margin"]) == pytest.approx(-1.0, abs=2e-4)
        assert row["inconclusive"] == "False"

    def test_split_exceeding_total_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE + "\n[subadd]\nsplits = 5,0,0\n",
                           name="sub2.ini")
        assert main(["subadd", "--config", cfg, "--out",
                     str(tmp_path / "o"), "--quiet"]) == 1
        assert "exceeds" in capsys.readouterr().err


STAB_CFG = """\
[grid]
n = 512
length = 40.0

[coupling]
a11 = 1.0
a12 = 1.0
a13 = 1.0
a22 = 1.0
a23 = 1.0
a33 = 1.0
p = 2.0

[masses]
r = 1.3333333333333333
s = 1.3333333333333333
t = 1.3333333333333333

[evolution]
t = 1.0
dt = 1e-3
snapshot_every = 0

[stability]
kind = mass_preserving_random
delta = 1e-3
seeds = 0,1
sample_every = 250
"""


class TestStability:
    def test_reports_and_summary(self, tmp_path):
        cfg = write_config(tmp_path, STAB_CFG, name="stab.ini")
        out = tmp_path / "st"
        assert main(["stability", "--config", cfg, "--out", str(out),
                     "--quiet"]) == 0
        for seed in (0, 1):
            rep = json.loads((out / f"report_seed{seed}.json").read_text())
            assert rep["verdict"] == "bounded"
            assert rep["eps"] == pytest.approx(0.02)
            assert len(rep["times"]) == len(rep["distances"])
        summary = json.loads((out / "summary.json").read_text())
        assert summary["all_bounded"] is True
        assert set(summary["verdicts"]) == {"0", "1"}


class TestValidate:
    def test_validate_passes(self, tmp_path, capsys):
        out = tmp_path / "val"
        assert main(["validate", "--out", str(out)]) == 0
        text = capsys.readouterr().out
        assert "PASS" in text and "FAIL" not in text
        report = json.loads((out / "validate.json").read_text())
        assert report["all_passed"] is True
        assert len(report["checks"]) == 7

    def test_validate_failure_exit_code(self, monkeypatch, capsys):
        import trinls.cli as cli
        monkeypatch.setattr(
            cli, "_validate_checks",
            lambda quiet: iter([("forced", False, "synthetic failure")]))
        assert main(["validate"]) == 4
        assert "FAIL" in capsys.readouterr().out
