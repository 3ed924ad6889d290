"""CLI contract tests: exit codes, output files and flag handling."""

import json

from platoonsim.cli import main
from platoonsim.scenario import bundled_scenario_path


def scenario(name):
    return str(bundled_scenario_path(name))


class TestRun:
    def test_clean_run_exits_zero_and_writes_outputs(self, tmp_path, capsys):
        code = main(["run", scenario("steady"), "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "trace.csv").exists()
        assert (tmp_path / "report.txt").exists()
        assert (tmp_path / "events.log").exists()
        header = (tmp_path / "trace.csv").read_text().splitlines()[0]
        assert header.startswith("tick,time,v1_s,v1_lane,v1_v,v1_a")

    def test_collision_run_exits_two(self, tmp_path, capsys):
        code = main(["run", scenario("radar_fault"), "--out", str(tmp_path),
                     "--no-degradation"])
        assert code == 2
        assert "collision" in capsys.readouterr().err

    def test_missing_file_exits_one(self, tmp_path, capsys):
        code = main(["run", str(tmp_path / "missing.scenario"),
                     "--out", str(tmp_path / "out")])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_invalid_scenario_exits_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.scenario"
        bad.write_text(json.dumps({"vehicles": [], "surprise": True}))
        code = main(["run", str(bad), "--out", str(tmp_path / "out")])
        assert code == 1

    def test_duration_override(self, tmp_path):
        code = main(["run", scenario("steady"), "--out", str(tmp_path),
                     "--duration", "1.0"])
        assert code == 0
        rows = (tmp_path / "trace.csv").read_text().splitlines()
        assert len(rows) == 1 + 20  # header + 1.0 s at dt 0.05

    def test_halt_on_collision_flag(self, tmp_path):
        code = main(["run", scenario("radar_fault"), "--out", str(tmp_path),
                     "--no-degradation", "--halt-on-collision"])
        assert code == 2
        report = (tmp_path / "report.txt").read_text()
        ticks = int(next(l for l in report.splitlines()
                         if l.startswith("ticks:")).split()[1])
        assert ticks < 800  # stopped before the 40 s horizon


class TestCompare:
    def test_fault_scenario_writes_side_by_side_summary(self, tmp_path, capsys):
        code = main(["compare", scenario("v2v_fault"), "--out", str(tmp_path)])
        assert code == 0
        text = (tmp_path / "compare.txt").read_text()
        assert "degradation on:" in text and "degradation off:" in text
        assert (tmp_path / "on" / "trace.csv").exists()
        assert (tmp_path / "off" / "trace.csv").exists()
        on_block, off_block = text.split("degradation off:")
        assert "collisions: 0" in on_block

    def test_radar_fault_reports_off_case_collision(self, tmp_path):
        code = main(["compare", scenario("radar_fault"), "--out", str(tmp_path)])
        assert code == 0
        off_block = (tmp_path / "compare.txt").read_text().split("degradation off:")[1]
        assert "pair=(2,3)" in off_block

    def test_fault_free_scenario_is_an_error(self, tmp_path, capsys):
        code = main(["compare", scenario("steady"), "--out", str(tmp_path)])
        assert code == 1
        assert "fault" in capsys.readouterr().err


class TestAccept:
    def test_accept_exit_code_follows_results(self, monkeypatch, capsys):
        from platoonsim import acceptance

        fake_pass = [acceptance.CheckResult(1, "stub", True, "ok")]
        monkeypatch.setattr(acceptance, "run_all", lambda: fake_pass)
        assert main(["accept"]) == 0
        assert "[PASS]" in capsys.readouterr().out

        fake_fail = [acceptance.CheckResult(1, "stub", False, "broken")]
        monkeypatch.setattr(acceptance, "run_all", lambda: fake_fail)
        assert main(["accept"]) == 1
        assert "ACCEPTANCE FAILED" in capsys.readouterr().out
