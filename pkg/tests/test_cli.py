"""Command-line interface: subcommand wiring, bit-stable tabular output,
JSON mirroring, exit codes, and the algebra-versus-integration gate."""

import json
import math

import pytest

from diracqes import Preset, loads_instance, preset
from diracqes.cli import main

SPECTRUM_HEADER = "n,eps_plus,eps_minus,residual,oracle_eps,abs_delta"
SCAN_HEADER = "sweep_value,branch_id,fixed_coupling,epsilon,sigma_min"
VERIFY_HEADER = "eps_algebraic,eps_oracle,abs_delta,nodes,normalizable,status"


@pytest.fixture
def run(capsys):
    def _run(argv):
        rc = main(argv)
        captured = capsys.readouterr()
        return rc, captured.out, captured.err
    return _run


def _rows(text):
    lines = text.strip("\n").split("\n")
    return lines[0], lines[1:]


class TestSpectrum:
    def test_confining_family_table(self, run):
        rc, out, _ = run(["spectrum", "oscillator", "--M", "1", "--kappa", "1",
                          "--mu-n", "1", "--n-max", "2"])
        assert rc == 0
        header, rows = _rows(out)
        assert header == SPECTRUM_HEADER
        assert len(rows) == 3
        assert [r.split(",")[0] for r in rows] == ["0", "1", "2"]
        # lowest sector has a single level: the plus column is empty
        first = rows[0].split(",")
        assert first[1] == ""
        assert float(first[2]) == -1.0
        for r in rows:
            cells = r.split(",")
            assert float(cells[3]) < 1e-12       # kernel residual
            assert float(cells[5]) < 1e-6        # oracle delta

    def test_rotated_family_levels(self, run):
        rc, out, _ = run(["spectrum", "extended-oscillator", "--M", "1",
                          "--kappa", "1", "--beta1", "4", "--gamma1", "3",
                          "--n-max", "1"])
        assert rc == 0
        _, rows = _rows(out)
        assert float(rows[0].split(",")[2]) == pytest.approx(-5.0 / 3.0)
        assert float(rows[1].split(",")[1]) == pytest.approx(
            math.sqrt(205.0) / 3.0, abs=1e-12)

    def test_inverse_r_family_table(self, run):
        rc, out, _ = run(["spectrum", "coulomb", "--M", "1", "--kappa", "-1",
                          "--alpha", "0.5", "--n-max", "1"])
        assert rc == 0
        _, rows = _rows(out)
        assert len(rows) == 2
        theta = math.sqrt(0.75)
        for r, n in zip(rows, (0, 1)):
            N = n + theta
            expected = N / math.sqrt(N * N + 0.25)
            assert float(r.split(",")[1]) == pytest.approx(expected, abs=1e-12)
            assert float(r.split(",")[5]) < 1e-6

    def test_json_mirrors_csv(self, run):
        argv = ["spectrum", "oscillator", "--M", "1", "--kappa", "1",
                "--mu-n", "1", "--n-max", "1"]
        _, csv_out, _ = run(argv)
        rc, json_out, _ = run(argv + ["--json"])
        assert rc == 0
        doc = json.loads(json_out)
        assert set(doc) == {"rows"}
        header, rows = _rows(csv_out)
        columns = header.split(",")
        assert len(doc["rows"]) == len(rows)
        for obj, row in zip(doc["rows"], rows):
            assert list(obj) == columns
            for key, cell in zip(columns, row.split(",")):
                if cell == "":
                    assert obj[key] is None
                else:
                    expected = int(cell) if key == "n" else float(cell)
                    assert obj[key] == expected


class TestQesScan:
    ARGS = ["qes-scan", "planar", "--kappa", "0.5", "--n", "1",
            "--sweep", "M:0:1:2"]

    def test_branch_table_shape(self, run):
        rc, out, _ = run(self.ARGS)
        assert rc == 0
        header, rows = _rows(out)
        assert header == SCAN_HEADER
        assert len(rows) == 8
        # ordered by sweep value, branch ids stable within each value
        values = [float(r.split(",")[0]) for r in rows]
        assert values == sorted(values)
        for value in (0.0, 1.0):
            ids = [int(r.split(",")[1]) for r in rows
                   if float(r.split(",")[0]) == value]
            assert ids == [0, 1, 2, 3]
        for r in rows:
            assert float(r.split(",")[4]) < 1e-8   # accepted roots only

    def test_output_is_bit_stable(self, run):
        _, first, _ = run(self.ARGS)
        _, second, _ = run(self.ARGS)
        assert first == second

    def test_file_output_matches_stdout(self, run, tmp_path):
        path = str(tmp_path / "scan.csv")
        _, stdout_text, _ = run(self.ARGS)
        rc, silent, _ = run(self.ARGS + ["--out", path])
        assert rc == 0
        assert silent == ""
        assert open(path, newline="").read() == stdout_text

    def test_json_mirrors_csv(self, run):
        _, csv_out, _ = run(self.ARGS)
        rc, json_out, _ = run(self.ARGS + ["--json"])
        assert rc == 0
        header, rows = _rows(csv_out)
        doc = json.loads(json_out)
        for obj, row in zip(doc["rows"], rows):
            cells = row.split(",")
            assert obj["sweep_value"] == float(cells[0])
            assert obj["branch_id"] == int(cells[1])
            assert obj["fixed_coupling"] == float(cells[2])
            assert obj["epsilon"] == float(cells[3])
            assert obj["sigma_min"] == float(cells[4])

    def test_empty_sweep_warns_but_succeeds(self, run):
        rc, out, err = run(["qes-scan", "extended", "--M", "1", "--kappa", "1",
                            "--beta1", "4", "--gamma1", "3", "--n", "1",
                            "--sweep", "alpha:0.03:0.04:2"])
        assert rc == 0
        header, rows = _rows(out)
        assert header == SCAN_HEADER
        assert rows == []
        assert "no accepted roots" in err


class TestVerify:
    def test_confining_family_passes(self, run):
        rc, out, err = run(["verify", "oscillator", "--M", "1", "--kappa", "1",
                            "--mu-n", "1", "--n-max", "1", "--from-algebra"])
        assert rc == 0
        header, rows = _rows(out)
        assert header == VERIFY_HEADER
        assert len(rows) == 3
        for r in rows:
            cells = r.split(",")
            assert cells[-1] == "PASS"
            assert cells[-2] == "true"
            assert float(cells[2]) < 1e-6

    def test_node_counts_match_ladder_index(self, run):
        _, out, _ = run(["verify", "oscillator", "--M", "1", "--kappa", "1",
                         "--mu-n", "1", "--n-max", "1", "--from-algebra"])
        _, rows = _rows(out)
        nodes = sorted(int(r.split(",")[3]) for r in rows)
        assert nodes == [0, 1, 1]

    def test_planar_surface_confirmed(self, run):
        rc, out, _ = run(["verify", "planar", "--M", "1", "--kappa", "-0.5",
                          "--n", "0", "--from-algebra"])
        assert rc == 0
        _, rows = _rows(out)
        assert len(rows) >= 1
        for r in rows:
            assert r.split(",")[-1] == "PASS"

    def test_extended_surface_confirmed(self, run):
        rc, out, _ = run(["verify", "extended", "--M", "1", "--kappa", "-1",
                          "--alpha", "0.5", "--beta1", "1", "--gamma1", "1",
                          "--n", "1", "--from-algebra"])
        assert rc == 0
        _, rows = _rows(out)
        assert len(rows) == 2
        assert all(r.split(",")[-1] == "PASS" for r in rows)

    def test_wrong_energy_fails_with_diagnostics(self, run):
        rc, out, err = run(["verify", "oscillator", "--M", "1", "--kappa", "1",
                            "--mu-n", "1", "--epsilon", "2.2"])
        assert rc == 2
        _, rows = _rows(out)
        assert len(rows) == 1
        assert rows[0].split(",")[-1] == "FAIL"
        assert "verification failed" in err

    def test_instance_file_with_explicit_energy(self, run, tmp_path):
        from diracqes import dumps_instance
        inst = preset(Preset.DIRAC_OSCILLATOR,
                      {"M": 1.0, "kappa": -1.0, "mu_n": 1.0})
        path = tmp_path / "inst.json"
        path.write_text(dumps_instance(inst))
        rc, out, _ = run(["verify", "--instance", str(path),
                          "--epsilon", repr(math.sqrt(7.0))])
        assert rc == 0
        _, rows = _rows(out)
        assert len(rows) == 1
        assert rows[0].split(",")[-1] == "PASS"


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ["spectrum", "oscillator", "--M", "1", "--mu-n", "1"],
        ["spectrum", "nosuchfamily", "--M", "1", "--kappa", "1"],
        ["qes-scan", "planar", "--kappa", "0.5", "--sweep", "M:0:1"],
        ["qes-scan", "planar", "--kappa", "0.5", "--M", "1",
         "--sweep", "M:0:1:3"],
        ["qes-scan", "planar", "--kappa", "0.5", "--sweep", "alpha:0:1:3"],
        ["qes-scan", "planar", "--kappa", "0.5", "--sweep", "M:0:1:1"],
        ["spectrum", "extended-oscillator", "--M", "1", "--kappa", "1",
         "--beta1", "4", "--gamma1", "0"],
    ], ids=["missing-kappa", "unknown-family", "malformed-sweep",
            "fixed-and-swept", "wrong-sweep-parameter", "single-point-sweep",
            "degenerate-rotation"])
    def test_usage_and_configuration_errors(self, run, argv):
        rc, _, err = run(argv)
        assert rc == 1
        assert err != ""

    def test_empty_ladder_is_numerical_failure(self, run):
        rc, _, err = run(["spectrum", "coulomb", "--M", "1", "--kappa", "1",
                          "--alpha", "0.5", "--n-max", "0"])
        assert rc == 3
        assert "no bound state" in err


class TestPresetDump:
    ARGS = ["preset-dump", "DiracOscillator", "--M", "1", "--kappa", "1",
            "--mu-n", "1"]

    def test_round_trips_through_loader(self, run):
        rc, out, _ = run(self.ARGS)
        assert rc == 0
        assert loads_instance(out) == preset(
            Preset.DIRAC_OSCILLATOR, {"M": 1.0, "kappa": 1.0, "mu_n": 1.0})

    def test_file_output_matches_stdout(self, run, tmp_path):
        path = str(tmp_path / "inst.json")
        _, stdout_text, _ = run(self.ARGS)
        rc, _, _ = run(self.ARGS + ["--out", path])
        assert rc == 0
        assert open(path, newline="").read() == stdout_text
