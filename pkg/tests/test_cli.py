import json

import pytest

from nano_nmpc.cli import main


class TestRunCommand:
    def test_hover_run_writes_outputs(self, tmp_path):
        out = tmp_path / "run"
        rc = main(["run", "--scenario", "hover", "--duration", "1.0",
                   "--out", str(out), "--no-plots"])
        assert rc == 0
        assert (out / "log.csv").exists()
        assert (out / "summary.json").exists()
        header = (out / "log.csv").read_text().splitlines()[0]
        assert header.startswith("t,x,y,z,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,x_d,y_d,z_d,")
        assert header.endswith("t_prepare,t_feedback,t_total")

    def test_no_timing_columns_flag(self, tmp_path):
        out = tmp_path / "run"
        rc = main(["run", "--scenario", "hover", "--duration", "0.5",
                   "--out", str(out), "--no-timing-columns", "--no-plots"])
        assert rc == 0
        header = (out / "log.csv").read_text().splitlines()[0]
        assert "t_prepare" not in header

    def test_figures_written_by_default(self, tmp_path):
        out = tmp_path / "run"
        rc = main(["run", "--scenario", "helix", "--duration", "0.5", "--out", str(out)])
        assert rc == 0
        for name in ("trajectory.png", "tracking.png", "inputs.png", "solver.png"):
            assert (out / name).exists()

    def test_config_file_with_overrides(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "scenario": {"kind": "steps"},
            "sim": {"duration": 10.0},
        }))
        out = tmp_path / "run"
        rc = main(["run", "--config", str(cfg), "--duration", "1.0",
                   "--out", str(out), "--no-plots"])
        assert rc == 0
        rows = (out / "log.csv").read_text().splitlines()
        assert len(rows) == 1 + 11  # CLI duration override wins

    def test_bad_config_returns_error(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"scenario": {"knd": "hover"}}))
        rc = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_unknown_scenario_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            main(["run", "--scenario", "loop"])


class TestCheckCommand:
    def test_fast_check_passes(self, capsys):
        rc = main(["check", "--fast"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.count("[PASS]") == 3
        assert "[FAIL]" not in out
