from importlib import resources

import pandas as pd
import pytest
from tomlkit import parse

from decmon.constants import TICKS_PER_UNIT
from decmon.experiments import (
    BREAKDOWN_COLUMNS, RUN_COLUMNS, ConfigError, ExperimentConfig, SummaryRow, breakdown_table, family_instance,
    plan_buckets, render_table, run_experiment, summarize
)
from decmon.ltl import AtomicProposition, Verdict
from decmon.ui.config import merge_config, parse_args

U = TICKS_PER_UNIT


class TestFamilies:
    @pytest.mark.parametrize("family,k,text", [
        ("phi1", 1, "!a U (a U b1)"),
        ("phi1", 3, "!a U (a U (b1 & b2 & b3))"),
        ("phi2", 2, "a U (b1 & b2)"),
        ("phi3", 2, "<>(a & b1 & b2)"),
        ("phi4", 0, "[](a -> (b U c))"),
    ])
    def test_texts(self, family, k, text):
        assert family_instance(family, k).text == text

    def test_followers_get_their_own_process(self):
        assert family_instance("phi2", 3).ap_table == (
            AtomicProposition("a", 0), AtomicProposition("b1", 1), AtomicProposition("b2", 2),
            AtomicProposition("b3", 3)
        )
        assert [ap.owner for ap in family_instance("phi4").ap_table] == [0, 1, 2]

    @pytest.mark.parametrize("family,k", [("phi5", 2), ("phi1", 0)])
    def test_bad_members(self, family, k):
        with pytest.raises(ConfigError):
            family_instance(family, k)


class TestConfig:
    def test_bundled_defaults(self):
        doc = parse(resources.read_text("decmon.ui", "config.toml"))
        cfg = ExperimentConfig.from_toml(doc)
        assert cfg.families == ("phi1", "phi2", "phi3", "phi4")
        assert (cfg.k_min, cfg.k_max) == (2, 10)
        assert cfg.mu == (10.0, 100.0, 1000.0)
        assert cfg.traces_per_bucket == 200
        assert cfg.horizon == 100 * U
        assert (cfg.delay_low, cfg.delay_high) == (0, 2 * U)
        assert cfg.output == "decmon_runs.csv"
        assert cfg.custom == ()
        assert len(cfg.instances()) == 3 * 9 + 1
        assert (cfg.mu_scope, cfg.event_kind, cfg.initial_values) == ("process", "flip", "random")

    def test_trace_model_options(self):
        doc = parse('[simulation]\nmu_scope = "system"\nevent_kind = "resample"\ninitial_values = "random"\n')
        cfg = ExperimentConfig.from_toml(doc)
        assert (cfg.mu_scope, cfg.event_kind, cfg.initial_values) == ("system", "resample", "random")
        assert ExperimentConfig().initial_values == "false"

    def test_custom_properties(self):
        doc = parse('[experiment]\nfamilies = []\ncustom = ["[](a -> <>b)"]\n[experiment.propositions]\na = 0\nb = 0\n')
        cfg = ExperimentConfig.from_toml(doc)
        instances = cfg.instances()
        assert [inst.family for inst in instances] == ["custom"]
        assert [ap.owner for ap in instances[0].ap_table] == [0, 0]

    def test_custom_property_without_table(self):
        cfg = ExperimentConfig(families=(), custom=("a U b",))
        assert [ap.owner for ap in cfg.instances()[0].ap_table] == [0, 1]

    @pytest.mark.parametrize("toml", [
        '[experiment]\nk_min = 3\nk_max = 2\n',
        '[experiment]\nk_min = "2"\n',
        '[experiment]\nworkers = true\n',
        '[experiment]\nmu = []\n',
        '[experiment]\nmu = [10, -1]\n',
        '[experiment]\nfamilies = ["phi9"]\n',
        '[experiment]\nfamilies = []\n',
        '[experiment]\ntraces_per_bucket = 0\n',
        '[simulation]\ndelay_low = 3.0\ndelay_high = 2.0\n',
        '[simulation]\nhorizon = "soon"\n',
        '[simulation]\nmu_scope = "global"\n',
        '[simulation]\nevent_kind = "set"\n',
        '[simulation]\ninitial_values = true\n',
        '[experiment.propositions]\na = -1\n',
    ])
    def test_invalid_values(self, toml):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_toml(parse(toml))

    def test_custom_syntax_errors_are_config_errors(self):
        cfg = ExperimentConfig(families=(), custom=("a U",))
        with pytest.raises(ConfigError):
            cfg.instances()

    def test_merge_config(self):
        base = parse(resources.read_text("decmon.ui", "config.toml"))
        merge_config(base, parse('[experiment]\nmu = [5]\n[simulation]\nhorizon = 10.0\n'))
        cfg = ExperimentConfig.from_toml(base)
        assert cfg.mu == (5.0,)
        assert cfg.horizon == 10 * U
        assert cfg.k_max == 10

    def test_parse_args(self):
        args = parse_args(["run", "automaton.json", "trace.txt", "-s", "4", "--central"])
        assert args.subcommand == "run"
        assert (args.source, args.trace, args.seed, args.central) == ("automaton.json", "trace.txt", 4, True)
        args = parse_args(["trace-gen", "-p", "a=0,b=1", "-m", "10"])
        assert args.mu == 10.0 and args.outfile == "trace.txt"
        assert (args.mu_scope, args.event_kind, args.initial) == (None, None, None)
        args = parse_args(["trace-gen", "-p", "a=0", "-m", "5", "--mu-scope", "system", "--event-kind", "resample",
                           "--initial", "random"])
        assert (args.mu_scope, args.event_kind, args.initial) == ("system", "resample", "random")


class TestPlanning:
    def test_infeasible_outcomes_are_skipped_up_front(self):
        cfg = ExperimentConfig(families=("phi3", "phi4"), k_min=2, k_max=2, mu=(10.0, 100.0))
        tasks, skipped = plan_buckets(cfg)
        assert {(s.property, s.outcome) for s in skipped} == {
            ("<>(a & b1 & b2)", Verdict.BOTTOM),
            ("[](a -> (b U c))", Verdict.TOP),
        }
        assert all(s.mu is None for s in skipped)
        # two feasible outcomes per property, two mu values each
        assert len(tasks) == 8


def small_config(**kwargs):
    defaults = dict(families=("phi3",), k_min=2, k_max=2, mu=(10.0,), traces_per_bucket=2, max_attempts_factor=50,
                    horizon=20 * U, master_seed=7)
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


class TestCampaign:
    def test_small_campaign(self):
        result = run_experiment(small_config(), print_progress=False)
        runs = result.runs
        assert list(runs.columns) == RUN_COLUMNS
        assert len(runs) == 4
        assert sorted(runs["outcome"].unique()) == ["top", "unknown"]
        assert runs["matches_oracle"].all()
        assert (runs["central_messages"] <= runs["events"]).all()
        undecided = runs[runs["outcome"] == "unknown"]
        assert (undecided["central_messages"] == undecided["events"]).all()
        assert [(s.property, s.outcome) for s in result.skipped] == [("<>(a & b1 & b2)", Verdict.BOTTOM)]

        assert list(result.breakdown.columns) == BREAKDOWN_COLUMNS
        assert result.breakdown["runs"].tolist() == [2, 2]
        assert len(result.summary) == 1
        row = result.summary[0]
        assert row.runs == 4
        assert row.min_alpha <= row.avg_alpha <= row.max_alpha

    def test_campaigns_are_reproducible(self):
        first = run_experiment(small_config(), print_progress=False)
        second = run_experiment(small_config(), print_progress=False)
        pd.testing.assert_frame_equal(first.runs, second.runs)

    def test_short_buckets_are_reported(self):
        result = run_experiment(small_config(families=("phi2",), traces_per_bucket=1, max_attempts_factor=3),
                                print_progress=False)
        # all propositions start false, so every trace violates a U (b1 & b2) at time 0
        assert result.runs["outcome"].tolist() == ["bottom"]
        short = {s.outcome: s for s in result.skipped}
        assert set(short) == {Verdict.TOP, Verdict.UNKNOWN}
        assert short[Verdict.TOP].mu == 10.0
        assert "only 0 of 1 traces after 3 attempts" in str(short[Verdict.TOP])

    def test_trace_model_reaches_the_generator(self):
        cfg = small_config(families=("phi2",), mu=(5.0,), traces_per_bucket=1, max_attempts_factor=100,
                           initial_values="random")
        tasks, _ = plan_buckets(cfg)
        assert {task.initial_values for task in tasks} == {"random"}
        result = run_experiment(cfg, print_progress=False)
        # with random initial values a U (b1 & b2) is no longer violated at time 0 by every trace
        assert sorted(result.runs["outcome"]) == ["bottom", "top", "unknown"]
        assert result.skipped == []
        assert result.runs["matches_oracle"].all()

    @pytest.mark.parametrize("options", [
        dict(mu_scope="system", mu=(30.0,)), dict(event_kind="resample"),
        dict(mu_scope="system", mu=(30.0,), event_kind="resample")
    ])
    def test_trace_model_variants(self, options):
        result = run_experiment(small_config(**options), print_progress=False)
        runs = result.runs
        assert len(runs) == 4
        assert runs["matches_oracle"].all()
        assert (runs["central_messages"] <= runs["events"]).all()

    def test_system_wide_mu_means_fewer_events(self):
        per_process = run_experiment(small_config(mu=(30.0,), traces_per_bucket=4), print_progress=False).runs
        system = run_experiment(small_config(mu=(30.0,), traces_per_bucket=4, mu_scope="system"),
                                print_progress=False).runs
        # three processes share the expected 30 changes instead of making 30 each
        assert system["events"].mean() < per_process["events"].mean()

    def test_csv_files(self, tmp_path):
        cfg = small_config(output=str(tmp_path / "runs.csv"), breakdown_output=str(tmp_path / "breakdown.csv"),
                           summary_output=str(tmp_path / "summary.csv"))
        result = run_experiment(cfg, print_progress=False)
        assert len(pd.read_csv(tmp_path / "runs.csv")) == len(result.runs)
        assert list(pd.read_csv(tmp_path / "breakdown.csv").columns) == BREAKDOWN_COLUMNS
        summary = (tmp_path / "summary.csv").read_text(encoding="utf-8")
        assert summary.splitlines()[0] == "property,min_alpha,avg_alpha,max_alpha,runs,spread"


class TestTables:
    def runs(self):
        return pd.DataFrame([
            {"property": "p", "outcome": "top", "mu": 10.0, "alpha": 1.0},
            {"property": "p", "outcome": "top", "mu": 10.0, "alpha": 3.0},
            {"property": "p", "outcome": "unknown", "mu": 10.0, "alpha": 4.0},
            {"property": "q", "outcome": "bottom", "mu": 10.0, "alpha": 0.5},
        ])

    def test_breakdown(self):
        table = breakdown_table(self.runs())
        assert table.values.tolist() == [
            ["p", "top", 10.0, 2, 1.0, 2.0, 3.0],
            ["p", "unknown", 10.0, 1, 4.0, 4.0, 4.0],
            ["q", "bottom", 10.0, 1, 0.5, 0.5, 0.5],
        ]

    def test_summary_is_sorted_by_average(self):
        rows = summarize(self.runs())
        assert [row.property for row in rows] == ["q", "p"]
        p = rows[1]
        assert (p.min_alpha, p.avg_alpha, p.max_alpha, p.runs) == (1.0, pytest.approx(8 / 3), 4.0, 3)
        # bucket averages 2 and 4
        assert p.spread == pytest.approx(2 / 3)

    def test_render(self):
        text, csv = render_table([SummaryRow("a U b", 1.0, 2.0, 3.0, 5, 0.0), SummaryRow("<>a", 0.5, 1.0, 1.5)])
        lines = text.splitlines()
        assert len(lines) == 3
        assert lines[0].split() == ["Property", "Min.", "α", "Avg.", "α", "Max.", "α"]
        assert lines[1].split() == ["<>a", "0.500", "1.000", "1.500"]
        assert lines[2].split() == ["a", "U", "b", "1.000", "2.000", "3.000"]
        assert csv.splitlines()[1] == "<>a,0.500000,1.000000,1.500000,0,0.000000"

    def test_render_empty(self):
        text, csv = render_table([])
        assert text == "Property    Min. α    Avg. α    Max. α\n"
        assert csv.strip() == "property,min_alpha,avg_alpha,max_alpha,runs,spread"


@pytest.mark.slow
class TestMessageEfficiency:
    @pytest.fixture(scope="class")
    def averages(self):
        cfg = ExperimentConfig(families=("phi1", "phi3"), k_min=2, k_max=4, mu=(10.0, 100.0, 1000.0),
                               traces_per_bucket=10, max_attempts_factor=20, master_seed=11)
        result = run_experiment(cfg, print_progress=False)
        assert result.runs["matches_oracle"].all()
        return {row.property: row.avg_alpha for row in result.summary}

    @staticmethod
    def reach(k):
        return "<>(a & " + " & ".join("b" + str(j) for j in range(1, k + 1)) + ")"

    @staticmethod
    def leader_until(k):
        return "!a U (a U (" + " & ".join("b" + str(j) for j in range(1, k + 1)) + "))"

    def test_single_transition_beats_many_exits(self, averages):
        for k in (2, 3, 4):
            assert averages[self.reach(k)] > averages[self.leader_until(k)]

    def test_reachability_improves_with_more_followers(self, averages):
        assert averages[self.reach(2)] <= averages[self.reach(4)]

    def test_leader_until_stays_below_six(self, averages):
        for k in (2, 3, 4):
            assert averages[self.leader_until(k)] <= 6.0
