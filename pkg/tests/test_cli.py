import json
import math
from pathlib import Path

import pytest

from modlse import cli
from modlse.cli import EXIT_CONFIG, EXIT_OK, EXIT_RECOVERY, EXIT_VERIFY, main

PI = math.pi

BASE_TOML = """\
label = "unit"
trials = 2
methods = ["rcs"]

[spectrum]
kind = "components"
components = [[1.2566370614359172, 11.2], [3.141592653589793, 2.0], [5.654866776461628, 0.4]]

[sampling]
delta_t = 0.024
m_count = 120

[noise]
snr_db = 40.0
"""


def write_config(tmp_path, text=BASE_TOML, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfigErrors:
    def test_unknown_key_exit_2(self, tmp_path, capsys):
        path = write_config(tmp_path, BASE_TOML + "\nbogus_key = 1\n")
        assert main(["sweep", "--config", path]) == EXIT_CONFIG
        assert "bogus_key" in capsys.readouterr().err

    def test_malformed_toml_exit_2(self, tmp_path, capsys):
        path = write_config(tmp_path, "label = [unclosed\n")
        assert main(["sweep", "--config", path]) == EXIT_CONFIG

    def test_missing_file_exit_2(self, capsys):
        assert main(["sweep", "--config", "/nonexistent/x.toml"]) == EXIT_CONFIG

    def test_unknown_table_key_exit_2(self, tmp_path, capsys):
        bad = BASE_TOML.replace("snr_db = 40.0", "snr_db = 40.0\nwat = 3")
        path = write_config(tmp_path, bad)
        assert main(["sweep", "--config", path]) == EXIT_CONFIG
        assert "wat" in capsys.readouterr().err

    def test_no_config_or_preset_exit_2(self, capsys):
        assert main(["sweep"]) == EXIT_CONFIG


class TestSimulate:
    def test_writes_sample_files(self, tmp_path, capsys):
        path = write_config(tmp_path)
        rc = main(["simulate", "--config", path, "--out", str(tmp_path / "o")])
        assert rc == EXIT_OK
        y = (tmp_path / "o" / "unit-y.csv").read_text()
        z = (tmp_path / "o" / "unit-z.csv").read_text()
        assert y.splitlines()[0] == "m,re,im"
        assert len(y.splitlines()) == 121  # header + m_count
        assert len(z.splitlines()) == 121

    def test_deterministic_given_seed(self, tmp_path):
        path = write_config(tmp_path)
        main(["simulate", "--config", path, "--out", str(tmp_path / "a"),
              "--seed", "7"])
        main(["simulate", "--config", path, "--out", str(tmp_path / "b"),
              "--seed", "7"])
        assert (tmp_path / "a" / "unit-z.csv").read_text() == (
            tmp_path / "b" / "unit-z.csv"
        ).read_text()

    def test_seed_changes_output(self, tmp_path):
        path = write_config(tmp_path)
        main(["simulate", "--config", path, "--out", str(tmp_path / "a"),
              "--seed", "7"])
        main(["simulate", "--config", path, "--out", str(tmp_path / "c"),
              "--seed", "8"])
        assert (tmp_path / "a" / "unit-z.csv").read_text() != (
            tmp_path / "c" / "unit-z.csv"
        ).read_text()


class TestRecover:
    def test_recover_ok(self, tmp_path, capsys):
        path = write_config(tmp_path)
        rc = main(["recover", "--config", path, "--out", str(tmp_path / "o")])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "rcs" in out and "ok" in out
        payload = json.loads((tmp_path / "o" / "unit-recover.json").read_text())
        assert payload["metrics"]["rcs"]["success"] is True

    def test_all_methods_fail_exit_3(self, tmp_path, capsys):
        # HOD sampling condition violated at this interval -> every
        # configured method errors out
        bad = BASE_TOML.replace(
            'methods = ["rcs"]',
            'methods = ["hod"]\nb_bound = 13.6\nomega_max = 5.654866776461628',
        ).replace("delta_t = 0.024", "delta_t = 0.04")
        path = write_config(tmp_path, bad)
        rc = main(["recover", "--config", path, "--out", str(tmp_path / "o")])
        assert rc == EXIT_RECOVERY
        assert "failed" in capsys.readouterr().out

    def test_malformed_input_csv_exit_2(self, tmp_path, capsys):
        path = write_config(tmp_path)
        sample = tmp_path / "z.csv"
        sample.write_text("m,re,im\n1,0.1,0.2\n2,oops,0.3\n")
        rc = main(["recover", "--config", path, "--input", str(sample),
                   "--out", str(tmp_path / "o")])
        assert rc == EXIT_CONFIG
        err = capsys.readouterr().err
        assert ":3:" in err  # line number of the bad row

    def test_input_missing_header_exit_2(self, tmp_path, capsys):
        path = write_config(tmp_path)
        sample = tmp_path / "z.csv"
        sample.write_text("re,im\n0.1,0.2\n")
        rc = main(["recover", "--config", path, "--input", str(sample),
                   "--out", str(tmp_path / "o")])
        assert rc == EXIT_CONFIG
        assert ":1:" in capsys.readouterr().err


class TestSweep:
    def test_writes_csv_and_json(self, tmp_path, capsys):
        text = BASE_TOML + "\n[sweep]\naxis = \"snr_db\"\npoints = [30.0, 50.0]\n"
        path = write_config(tmp_path, text)
        rc = main(["sweep", "--config", path, "--out", str(tmp_path / "o")])
        assert rc == EXIT_OK
        csv_text = (tmp_path / "o" / "unit-sweep.csv").read_text()
        lines = csv_text.splitlines()
        assert lines[0] == "axis_value,method,trials,mean_nmse,mean_rsnr_db,success_rate"
        assert len(lines) == 3  # two axis points, one method
        payload = json.loads((tmp_path / "o" / "unit-sweep.json").read_text())
        assert len(payload["rows"]) == 2

    def test_trials_override(self, tmp_path):
        text = BASE_TOML + "\n[sweep]\naxis = \"snr_db\"\npoints = [30.0]\n"
        path = write_config(tmp_path, text)
        main(["sweep", "--config", path, "--out", str(tmp_path / "o"),
              "--trials", "4"])
        csv_text = (tmp_path / "o" / "unit-sweep.csv").read_text()
        assert ",4," in csv_text.splitlines()[1]

    def test_preset_known(self):
        # presets parse and build configs without running them
        from modlse.config import PRESETS

        assert {"fig1", "fig2", "fig3", "fig5", "fig6"} <= set(PRESETS)


class TestVerify:
    def test_verify_passes(self, tmp_path, capsys):
        path = write_config(tmp_path)
        rc = main(["verify", "--config", path, "--trials", "30"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert out.count("PASS") == 4

    def test_verify_failure_exit_4(self, tmp_path, capsys, monkeypatch):
        # force the identity check to report a large error to exercise the
        # failure path
        monkeypatch.setattr(cli, "check_theorem1", lambda **kw: 1.0)
        path = write_config(tmp_path)
        rc = main(["verify", "--config", path, "--trials", "30"])
        assert rc == EXIT_VERIFY
        captured = capsys.readouterr()
        assert "FAIL" in captured.out
        assert "theorem1" in captured.err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
