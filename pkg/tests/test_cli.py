import csv
import io
import json
from pathlib import Path

import pytest

from bcrb import bounds as B
from bcrb import cli

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

GAUSS = """
name = "{name}"
[prior]
family = "gaussian"
variance = 1.0
[model]
label = "gaussian-location"
noise_variance = 1.0
{extra}
"""


def _write(tmp_path, name="g", extra="", text=None):
    p = tmp_path / f"{name}.toml"
    p.write_text(text if text is not None else GAUSS.format(name=name, extra=extra))
    return p


def _csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


class TestReport:
    def test_gaussian_scenario(self, tmp_path, capsys):
        rc = cli.main(["report", str(SCENARIOS / "gaussian-gaussian.toml"), "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_OK
        rep = B.BoundReport.from_json((tmp_path / "gaussian-gaussian.json").read_text())
        assert abs(rep.check("van_trees").slack) < 1e-4
        assert "van_trees" in capsys.readouterr().out

    def test_uniform_scenario_degenerate_is_not_failure(self, tmp_path):
        rc = cli.main(["report", str(SCENARIOS / "uniform-prior.toml"), "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_OK
        rep = B.BoundReport.from_json((tmp_path / "uniform-prior.json").read_text())
        assert "degenerate: J(pi) = +inf" in rep.flags
        assert rep.check("theorem2_phi").holds

    def test_parse_error(self, tmp_path, capsys):
        rc = cli.main(["report", str(_write(tmp_path, text="[prior\nfamily = 1")), "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_PARSE
        assert "line" in capsys.readouterr().err

    def test_missing_file_is_parse_error(self, tmp_path):
        assert cli.main(["report", str(tmp_path / "none.toml"), "--out-dir", str(tmp_path)]) == cli.EXIT_PARSE

    def test_validation_error(self, tmp_path):
        p = _write(tmp_path, extra="[oracles]\nmonte_carlo = true")
        assert cli.main(["report", str(p), "--out-dir", str(tmp_path)]) == cli.EXIT_INVALID

    def test_capability_error(self, tmp_path):
        text = GAUSS.format(name="rep", extra="").replace("noise_variance = 1.0",
                                                          "noise_variance = 1.0\nrepeats = 3")
        rc = cli.main(["report", str(_write(tmp_path, "rep", text=text)), "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_NUMERICAL
        rep = B.BoundReport.from_json((tmp_path / "rep.json").read_text())
        assert "oracles" in rep.errors

    def test_asserted_failure(self, tmp_path, monkeypatch):
        monkeypatch.setattr(B, "phi", lambda x: 0.0)
        rc = cli.main(["report", str(_write(tmp_path)), "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_FAILED

    def test_csv_output(self, tmp_path):
        rc = cli.main(["report", str(_write(tmp_path)), "--csv", "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_OK
        rows = _csv(tmp_path / "g.csv")
        assert len(rows) == 1 and rows[0]["label"] == "g"
        assert not (tmp_path / "g.json").exists()

    def test_batch_worst_code_wins(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.THREADS_ENV, "2")
        good = _write(tmp_path, "a")
        bad = _write(tmp_path, "b", text="[prior\n")
        rc = cli.main(["report", str(good), str(bad), "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_PARSE
        assert (tmp_path / "a.json").exists()

    def test_deterministic(self, tmp_path):
        p = SCENARIOS / "uniform-prior.toml"
        outs = []
        for sub in ("x", "y"):
            assert cli.main(["report", str(p), "--out-dir", str(tmp_path / sub)]) == 0
            outs.append((tmp_path / sub / "uniform-prior.json").read_bytes())
        assert outs[0] == outs[1]

    def test_no_temp_files_left(self, tmp_path):
        cli.main(["report", str(_write(tmp_path)), "--out-dir", str(tmp_path / "o")])
        assert [p.name for p in (tmp_path / "o").iterdir()] == ["g.json"]


class TestSweep:
    def test_g_delta_laplace(self, tmp_path):
        rc = cli.main(["sweep", "g-delta", "--prior", "laplace", "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_OK
        rows = _csv(tmp_path / "g-delta.csv")
        assert len(rows) == 50
        assert float(rows[0]["delta"]) == pytest.approx(0.01)
        assert float(rows[-1]["delta"]) == pytest.approx(100.0)
        assert all(float(r["g"]) <= float(r["g_bound"]) + 1e-6 for r in rows)

    def test_bound_vs_jp(self, tmp_path):
        rc = cli.main(["sweep", "bound-vs-jp", "--kp", "0", "--json", "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_OK
        rows = _csv(tmp_path / "bound-vs-jp.csv")
        assert all(float(r["psi_form"]) <= float(r["phi_form"]) + 1e-12 for r in rows)
        assert json.loads((tmp_path / "bound-vs-jp.json").read_text())["psi_le_phi"] is True

    def test_bound_vs_jp_rejects_kp(self, tmp_path):
        assert cli.main(["sweep", "bound-vs-jp", "--kp", "1.5", "--out-dir", str(tmp_path)]) == cli.EXIT_INVALID

    def test_reverse_epi(self, tmp_path):
        rc = cli.main(["sweep", "reverse-epi-k", "--prior", "laplace", "--json", "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_OK
        meta = json.loads((tmp_path / "reverse-epi-k.json").read_text())
        rows = _csv(tmp_path / "reverse-epi-k.csv")
        assert [int(r["k"]) for r in rows] == list(range(1, 9))
        assert all(r["holds"] == "True" for r in rows if int(r["k"]) >= meta["threshold"])

    def test_snr_curve(self, tmp_path):
        rc = cli.main(["sweep", "snr-curve", "--prior", "gaussian", "--points", "5", "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_OK
        for r in _csv(tmp_path / "snr-curve.csv"):
            assert float(r["mi"]) == pytest.approx(float(r["gaussian_sequence"]), abs=1e-4)

    def test_bad_range(self, tmp_path):
        rc = cli.main(["sweep", "g-delta", "--min", "5", "--max", "1", "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_INVALID

    def test_deterministic(self, tmp_path):
        for sub in ("x", "y"):
            cli.main(["sweep", "g-delta", "--prior", "exponential", "--points", "6",
                      "--out-dir", str(tmp_path / sub)])
        assert (tmp_path / "x" / "g-delta.csv").read_bytes() == (tmp_path / "y" / "g-delta.csv").read_bytes()


class TestArgs:
    def test_unknown_verb(self):
        assert cli.main(["frobnicate"]) == cli.EXIT_PARSE

    def test_unknown_sweep(self):
        assert cli.main(["sweep", "nope"]) == cli.EXIT_PARSE

    def test_help(self, capsys):
        assert cli.main(["--help"]) == cli.EXIT_OK


class TestAccept:
    def test_only_subset(self, tmp_path, capsys):
        rc = cli.main(["accept", "--only", "1,4", "--out-dir", str(tmp_path)])
        assert rc == cli.EXIT_OK
        summary = json.loads((tmp_path / "acceptance.json").read_text())
        assert [c["number"] for c in summary["criteria"]] == [1, 4]
        out = capsys.readouterr().out
        assert "[PASS] criterion 1" in out and "[PASS] criterion 4" in out


class TestExitCodeMapping:
    @pytest.mark.parametrize("exc,code", [
        ("ConfigParseError", cli.EXIT_PARSE), ("ConfigError", cli.EXIT_INVALID),
        ("DomainError", cli.EXIT_INVALID), ("CapabilityError", cli.EXIT_NUMERICAL),
        ("IntegrationDomainError", cli.EXIT_NUMERICAL),
    ])
    def test_mapping(self, exc, code):
        from bcrb import errors
        assert cli.exit_code_for(getattr(errors, exc)("x")) == code
