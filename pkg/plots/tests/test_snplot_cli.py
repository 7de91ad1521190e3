"""snplot command line: happy paths and contract failures."""

import numpy as np
import pytest

from snplot import cli


def run_cli(capsys, *argv):
    rc = cli.main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


class TestCli:

    def corr_csv(self, write_table, name="c.csv"):
        t = np.linspace(0.0, 1.0, 20)
        return write_table(name, {
            "t_s": t,
            "log_negativity_bits": 0.01 * t,
            "mutual_information_bits": 0.02 * t,
            "temperature_K": np.zeros(20),
        })

    def test_correlations_writes_image_and_prints_path(
            self, write_table, tmp_path, capsys):
        csv = self.corr_csv(write_table)
        out = tmp_path / "fig.png"
        rc, stdout, stderr = run_cli(capsys, "correlations",
                                     "--in", str(csv), "--out", str(out))
        assert rc == 0 and stderr == ""
        assert stdout.strip() == str(out)
        assert out.is_file() and out.read_bytes()[:4] == b"\x89PNG"

    def test_screens_writes_svg(self, write_table, tmp_path, capsys):
        z = np.linspace(-1.0, 1.0, 11)
        csv = write_table("s.csv", {"z_m": z,
                                    "free_reference": np.exp(-z**2)})
        out = tmp_path / "fig.svg"
        rc, stdout, _ = run_cli(capsys, "screens",
                                "--in", str(csv), "--out", str(out))
        assert rc == 0
        assert b"<svg" in out.read_bytes()

    def test_contract_failure_exits_2_and_names_problem(
            self, write_table, tmp_path, capsys):
        csv = write_table("thin.csv", {"t_s": [0.0, 1.0]})
        rc, _, stderr = run_cli(capsys, "correlations", "--in", str(csv),
                                "--out", str(tmp_path / "fig.png"))
        assert rc == 2
        assert stderr.startswith("contract error:")
        assert "log_negativity_bits" in stderr
        assert not (tmp_path / "fig.png").exists()

    def test_bad_output_suffix_exits_2(self, write_table, tmp_path, capsys):
        csv = self.corr_csv(write_table)
        rc, _, stderr = run_cli(capsys, "correlations", "--in", str(csv),
                                "--out", str(tmp_path / "fig.gif"))
        assert rc == 2
        assert "suffix" in stderr

    def test_missing_subcommand_is_a_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main([])
        assert exc.value.code == 2

    def test_columns_flag_controls_wrapping(self, write_table, tmp_path,
                                            capsys):
        csvs = [str(self.corr_csv(write_table, name=f"c{i}.csv"))
                for i in range(4)]
        out = tmp_path / "wrapped.png"
        rc, _, _ = run_cli(capsys, "correlations", "--in", *csvs,
                           "--out", str(out), "--columns", "2")
        assert rc == 0 and out.is_file()
