import re
from importlib import resources

import pytest

from decmon import core
from decmon.ui import terminal


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    config_file = tmp_path / "decmon.toml"
    config_file.write_text(resources.read_text("decmon.ui", "config.toml"), encoding="utf-8")
    monkeypatch.setenv("DECMON_CONFIG", str(config_file))
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run_main(argv):
    with pytest.raises(SystemExit) as exit_info:
        terminal.main(argv)
    return exit_info.value.code


def test_compile_writes_json_and_dot(workdir, capsys):
    assert run_main(["compile", "!a U (a U (b & c))", "-p", "a=0,b=1,c=2", "-o", "leader_until"]) == 0
    assert (workdir / "leader_until.json").exists()
    assert (workdir / "leader_until.dot").read_text(encoding="utf-8").startswith("digraph monitor {")
    assert "4 locations, 6 transitions, 3 processes" in capsys.readouterr().out


def test_generate_then_monitor(workdir, capsys):
    assert run_main(["trace-gen", "-p", "a=0,b=1,c=2", "-m", "10", "--horizon", "30", "-s", "3"]) == 0
    capsys.readouterr()

    assert run_main(["oracle", "!a U (a U (b & c))", "trace.txt"]) == 0
    oracle_out = capsys.readouterr().out
    verdict_line = next(line for line in oracle_out.splitlines() if line.startswith("verdict:"))

    assert run_main(["run", "!a U (a U (b & c))", "trace.txt", "-e", "events.jsonl", "--central"]) == 0
    run_out = capsys.readouterr().out
    assert verdict_line.split(" (announced")[0] in run_out
    assert "alpha:" in run_out
    assert (workdir / "events.jsonl").exists()


def test_syntax_errors_exit_with_one(workdir, capsys):
    assert run_main(["compile", "a U"]) == 1
    assert "Error:" in capsys.readouterr().out


def test_missing_subcommand(workdir):
    assert run_main([]) == 1


def test_bench_reports_skipped_buckets(workdir, capsys):
    campaign = workdir / "campaign.toml"
    campaign.write_text(
        '[simulation]\nhorizon = 20.0\n'
        '[experiment]\nfamilies = ["phi3"]\nk_min = 2\nk_max = 2\nmu = [10]\ntraces_per_bucket = 1\n'
        'output = ""\nbreakdown_output = ""\nsummary_output = ""\n',
        encoding="utf-8"
    )
    assert run_main(["bench", "-c", str(campaign)]) == 2
    out = capsys.readouterr().out
    assert "Property" in out
    assert "Skipped buckets:" in out


def test_ctrl_c_exits_with_130(monkeypatch, capsys):
    import cli

    def interrupted(argv=None):
        raise KeyboardInterrupt

    monkeypatch.setattr(cli.terminal, "main", interrupted)
    with pytest.raises(SystemExit) as exit_info:
        cli.main(["bench"])
    assert exit_info.value.code == cli.EXIT_INTERRUPTED == 130
    assert "Interrupted" in capsys.readouterr().out


def test_progress_lines_are_timestamped(capsys):
    core.log("Running 4 buckets")
    core.log("hidden", show=False)
    out = capsys.readouterr().out
    assert re.search(r"\[\d\d:\d\d:\d\d\]\S* Running 4 buckets\n$", out)
    assert "hidden" not in out
