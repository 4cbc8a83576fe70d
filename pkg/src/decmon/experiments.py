# Copyright 2024 The decmon developers
#
# This file is part of decmon.
#
# decmon is free software: you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# decmon is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.
# See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with decmon. If not, see <https://www.gnu.org/licenses/>.

"""
The message-efficiency campaign: property families, outcome buckets, the generate-classify loop and the α tables.

For every property instance, every outcome (⊤, ⊥, ?) and every μ a bucket is filled with traces whose oracle verdict
is that outcome. Each trace is monitored by the decentralized protocol and by the centralized baseline with paired
delay seeds; α is the ratio of their message counts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime
from functools import lru_cache
from multiprocessing import Pool
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from . import constants
from .automata import Monitorability, ProtocolAutomaton
from .core import compile_property, log, run_both
from .intervals import Time, format_time, to_ticks
from .ltl import AtomicProposition, LtlSyntaxError, UnknownPropositionError, Verdict, owner_table
from .simulation import oracle_evaluate
from .simulation.trace import generate_trace

logger = logging.getLogger(__name__)

OUTCOMES = (Verdict.TOP, Verdict.BOTTOM, Verdict.UNKNOWN)

RUN_COLUMNS = [
    "property", "family", "k", "outcome", "mu", "trace", "attempt", "events", "verdict", "verdict_time",
    "announced_at", "matches_oracle", "central_messages", "decentralized_messages", "delegate", "aggregate",
    "stepstart", "alpha", "no_decentralized_messages"
]
BREAKDOWN_COLUMNS = ["property", "outcome", "mu", "runs", "min_alpha", "avg_alpha", "max_alpha"]
SUMMARY_COLUMNS = ["property", "min_alpha", "avg_alpha", "max_alpha", "runs", "spread"]


class ConfigError(ValueError):
    """Invalid campaign configuration"""
    pass


# === PROPERTY FAMILIES ================================================================================================

@dataclass(frozen=True)
class PropertyInstance:
    """
    One property of the campaign. `k` is the number of followers for phi1 to phi3 and 0 for properties without one.
    """
    family: str
    k: int
    text: str
    ap_table: Tuple[AtomicProposition, ...]


def family_instance(family: str, k: int = 0) -> PropertyInstance:
    """
    Members of the four property families. In phi1 to phi3 the leader proposition a belongs to process 0 and b_j to
    process j. The three propositions of phi4 belong to three processes.

    >>> family_instance("phi2", 2).text
    'a U (b1 & b2)'
    """
    if family == "phi4":
        aps = (AtomicProposition("a", 0), AtomicProposition("b", 1), AtomicProposition("c", 2))
        return PropertyInstance(family, 0, "[](a -> (b U c))", aps)

    if family not in ("phi1", "phi2", "phi3"):
        raise ConfigError("unknown property family '" + family + "'")
    if k < 1:
        raise ConfigError("k must be at least 1, got " + str(k))

    followers = ["b" + str(j) for j in range(1, k + 1)]
    aps = (AtomicProposition("a", 0),) + tuple(AtomicProposition(name, j + 1) for j, name in enumerate(followers))
    conjunction = " & ".join(followers)
    if k > 1:
        conjunction = "(" + conjunction + ")"

    if family == "phi1":
        text = "!a U (a U " + conjunction + ")"
    elif family == "phi2":
        text = "a U " + conjunction
    else:
        text = "<>(a & " + " & ".join(followers) + ")"
    return PropertyInstance(family, k, text, aps)


# === CONFIGURATION ====================================================================================================

@dataclass
class ExperimentConfig:
    """
    Campaign parameters. Times are microticks.
    """
    families: Tuple[str, ...] = constants.FAMILIES
    k_min: int = constants.DEFAULT_K_RANGE[0]
    k_max: int = constants.DEFAULT_K_RANGE[1]
    mu: Tuple[float, ...] = constants.DEFAULT_MU
    traces_per_bucket: int = constants.DEFAULT_TRACES_PER_BUCKET
    max_attempts_factor: int = constants.DEFAULT_MAX_ATTEMPTS_FACTOR
    horizon: Time = constants.DEFAULT_HORIZON
    delay_low: Time = constants.DEFAULT_DELAY_LOW
    delay_high: Time = constants.DEFAULT_DELAY_HIGH
    mu_scope: str = constants.MU_SCOPES[0]
    event_kind: str = constants.EVENT_KINDS[0]
    initial_values: str = constants.INITIAL_VALUATIONS[0]
    master_seed: int = constants.DEFAULT_MASTER_SEED
    workers: int = 1
    output: Optional[str] = None
    breakdown_output: Optional[str] = None
    summary_output: Optional[str] = None
    custom: Tuple[str, ...] = ()
    custom_propositions: Tuple[AtomicProposition, ...] = ()

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """
        :raises ConfigError: if a value is out of range
        """
        if not self.families and not self.custom:
            raise ConfigError("no property families and no custom properties given")
        for family in self.families:
            if family not in constants.FAMILIES:
                raise ConfigError("unknown property family '" + family + "'")
        if self.k_min < 1 or self.k_max < self.k_min:
            raise ConfigError("need 1 <= k_min <= k_max, got {} and {}".format(self.k_min, self.k_max))
        if not self.mu or any(mu <= 0 for mu in self.mu):
            raise ConfigError("mu must be a non-empty list of positive numbers")
        if self.traces_per_bucket <= 0:
            raise ConfigError("traces_per_bucket must be positive")
        if self.max_attempts_factor <= 0:
            raise ConfigError("max_attempts_factor must be positive")
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if self.delay_low < 0 or self.delay_high < self.delay_low:
            raise ConfigError("need 0 <= delay_low <= delay_high")
        for key, allowed in (("mu_scope", constants.MU_SCOPES), ("event_kind", constants.EVENT_KINDS),
                             ("initial_values", constants.INITIAL_VALUATIONS)):
            if getattr(self, key) not in allowed:
                raise ConfigError("{} must be one of {}, got {!r}".format(key, ", ".join(allowed), getattr(self, key)))
        if self.master_seed < 0:
            raise ConfigError("master_seed must not be negative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        try:
            owner_table(self.custom_propositions)
        except ValueError as err:
            raise ConfigError(str(err)) from None

    @classmethod
    def from_toml(cls, doc: Mapping[str, Any]) -> ExperimentConfig:
        """
        Build a config from the `[simulation]` and `[experiment]` tables of a parsed TOML document. Missing keys keep
        their defaults; time values are given in units.

        :raises ConfigError: on missing tables, wrong types or values out of range
        """
        sim = dict(doc.get("simulation", {}))
        exp = dict(doc.get("experiment", {}))
        kwargs: Dict[str, Any] = {}

        try:
            for key in ("horizon", "delay_low", "delay_high"):
                if key in sim:
                    kwargs[key] = to_ticks(str(sim[key]))
            for key in ("mu_scope", "event_kind", "initial_values"):
                if key in sim:
                    kwargs[key] = str(sim[key])

            if "families" in exp:
                kwargs["families"] = tuple(str(family) for family in exp["families"])
            for key in ("k_min", "k_max", "traces_per_bucket", "max_attempts_factor", "master_seed", "workers"):
                if key in exp:
                    kwargs[key] = _as_int(exp[key], key)
            if "mu" in exp:
                kwargs["mu"] = tuple(float(mu) for mu in exp["mu"])
            for key in ("output", "breakdown_output", "summary_output"):
                if key in exp:
                    kwargs[key] = str(exp[key]) or None
            if "custom" in exp:
                kwargs["custom"] = tuple(str(text) for text in exp["custom"])
            if "propositions" in exp:
                kwargs["custom_propositions"] = tuple(
                    AtomicProposition(str(name), _as_int(owner, "propositions." + str(name)))
                    for name, owner in dict(exp["propositions"]).items()
                )
        except ConfigError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from None

        return cls(**kwargs)

    def instances(self) -> List[PropertyInstance]:
        """
        All properties of the campaign: the families in configured order, then the custom properties. Custom
        properties without a proposition table give every proposition its own process.
        """
        result = []
        for family in self.families:
            if family == "phi4":
                result.append(family_instance(family))
            else:
                result.extend(family_instance(family, k) for k in range(self.k_min, self.k_max + 1))
        for text in self.custom:
            try:
                if self.custom_propositions:
                    pa, _ = _compile(text, self.custom_propositions)
                else:
                    pa, _ = _compile(text, None)
            except (LtlSyntaxError, UnknownPropositionError) as err:
                raise ConfigError("custom property '{}': {}".format(text, err)) from None
            result.append(PropertyInstance("custom", 0, text, pa.propositions))
        return result


def _as_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError("'" + key + "' must be an integer, got " + repr(value))
    return int(value)


# === CAMPAIGN =========================================================================================================

@dataclass(frozen=True)
class BucketTask:
    instance_index: int
    instance: PropertyInstance
    outcome: Verdict
    mu_index: int
    mu: float
    traces: int
    max_attempts: int
    horizon: Time
    delay_low: Time
    delay_high: Time
    master_seed: int
    mu_scope: str = constants.MU_SCOPES[0]
    event_kind: str = constants.EVENT_KINDS[0]
    initial_values: str = constants.INITIAL_VALUATIONS[0]


@dataclass
class BucketResult:
    task: BucketTask
    rows: List[Dict[str, Any]]
    attempts: int


@dataclass(frozen=True)
class SkippedBucket:
    property: str
    outcome: Verdict
    mu: Optional[float]
    reason: str

    def __str__(self) -> str:
        mu = "" if self.mu is None else " mu=" + str(self.mu)
        return "{} [{}]{}: {}".format(self.property, self.outcome.value, mu, self.reason)


@dataclass(frozen=True)
class SummaryRow:
    """
    α statistics of one property over all of its runs. `spread` is the relative spread of the average α across the
    (outcome, μ) buckets: (max - min) / mean of the bucket averages.
    """
    property: str
    min_alpha: float
    avg_alpha: float
    max_alpha: float
    runs: int = 0
    spread: float = 0.0


@dataclass
class ExperimentResult:
    runs: pd.DataFrame
    breakdown: pd.DataFrame
    summary: List[SummaryRow]
    skipped: List[SkippedBucket] = field(default_factory=list)


@lru_cache(maxsize=None)
def _compile_cached(text: str, ap_table: Optional[Tuple[AtomicProposition, ...]]) -> Tuple[ProtocolAutomaton, Monitorability]:
    return compile_property(text, ap_table)


def _compile(text: str, ap_table: Optional[Sequence[AtomicProposition]]) -> Tuple[ProtocolAutomaton, Monitorability]:
    return _compile_cached(text, None if ap_table is None else tuple(ap_table))


def _run_bucket(task: BucketTask) -> BucketResult:
    """
    Generate traces until `task.traces` of them have the requested oracle verdict or the attempts run out. Every
    attempt has its own seed sequence, split into a trace seed and a delay seed.
    """
    pa, _ = _compile(task.instance.text, task.instance.ap_table)
    outcome_index = OUTCOMES.index(task.outcome)
    rows: List[Dict[str, Any]] = []

    attempt = 0
    while len(rows) < task.traces and attempt < task.max_attempts:
        seq = np.random.SeedSequence([task.master_seed, task.instance_index, outcome_index, task.mu_index, attempt])
        trace_seed, delay_seed = seq.spawn(2)
        attempt += 1

        trace = generate_trace(pa.propositions, task.mu, task.horizon, trace_seed, task.mu_scope, task.event_kind,
                               task.initial_values)
        if oracle_evaluate(pa, trace).verdict != task.outcome:
            continue
        oracle, dec, central = run_both(pa, trace, task.delay_low, task.delay_high, delay_seed)

        alpha = central.total_messages / max(1, dec.total_messages)
        rows.append({
            "property": task.instance.text,
            "family": task.instance.family,
            "k": task.instance.k,
            "outcome": task.outcome.name.lower(),
            "mu": task.mu,
            "trace": len(rows),
            "attempt": attempt - 1,
            "events": trace.num_events,
            "verdict": dec.verdict.value,
            "verdict_time": "" if dec.verdict_time is None else format_time(dec.verdict_time),
            "announced_at": "" if dec.announced_at is None else format_time(dec.announced_at),
            "matches_oracle": dec.verdict == oracle.verdict and dec.verdict_time == oracle.verdict_time,
            "central_messages": central.total_messages,
            "decentralized_messages": dec.total_messages,
            "delegate": dec.message_counts["Delegate"],
            "aggregate": dec.message_counts["Aggregate"],
            "stepstart": dec.message_counts["StepStart"],
            "alpha": alpha,
            "no_decentralized_messages": dec.total_messages == 0,
        })

    return BucketResult(task, rows, attempt)


def _feasible_outcomes(pa: ProtocolAutomaton, reachable: Iterable[Verdict]) -> List[Verdict]:
    feasible = set(reachable)
    if not pa.is_terminal(pa.initial):
        feasible.add(Verdict.UNKNOWN)
    return [outcome for outcome in OUTCOMES if outcome in feasible]


def plan_buckets(cfg: ExperimentConfig) -> Tuple[List[BucketTask], List[SkippedBucket]]:
    """
    One task per (property, outcome, μ). Outcomes no finite trace can produce are skipped right away.
    """
    tasks = []
    skipped = []
    for idx, instance in enumerate(cfg.instances()):
        pa, monitorability = _compile(instance.text, instance.ap_table)
        if not monitorability.monitorable:
            logger.warning("property %s is not monitorable", instance.text)
        feasible = _feasible_outcomes(pa, monitorability.reachable_verdicts)
        for outcome in OUTCOMES:
            if outcome not in feasible:
                skipped.append(SkippedBucket(instance.text, outcome, None, "no finite trace has this verdict"))
                continue
            for mu_index, mu in enumerate(cfg.mu):
                tasks.append(BucketTask(
                    idx, instance, outcome, mu_index, mu, cfg.traces_per_bucket,
                    cfg.traces_per_bucket * cfg.max_attempts_factor, cfg.horizon, cfg.delay_low, cfg.delay_high,
                    cfg.master_seed, cfg.mu_scope, cfg.event_kind, cfg.initial_values
                ))
    return tasks, skipped


def run_experiment(cfg: ExperimentConfig, print_progress: bool = True) -> ExperimentResult:
    """
    Run the campaign and write the configured CSV files.

    :param cfg: Campaign configuration
    :param print_progress: Print log lines and a progress bar
    :return: Per-run table, breakdown table, summary rows and skipped buckets
    """
    log("Compiling properties", print_progress)
    tasks, skipped = plan_buckets(cfg)

    log("Running {} buckets".format(len(tasks)), print_progress)
    progress = dict(
        total=len(tasks),
        ncols=0,
        desc="\033[0;37m[" + str(datetime.now()) + "]\033[0m Filling buckets",
        leave=False,
        disable=not print_progress
    )
    if cfg.workers == 1:
        results = [_run_bucket(task) for task in tqdm(tasks, **progress)]
    else:
        with Pool(processes=cfg.workers) as pool:
            results = list(tqdm(pool.imap(_run_bucket, tasks), **progress))

    rows: List[Dict[str, Any]] = []
    for result in results:
        task = result.task
        if len(result.rows) < task.traces:
            skipped.append(SkippedBucket(
                task.instance.text, task.outcome, task.mu,
                "only {} of {} traces after {} attempts".format(len(result.rows), task.traces, result.attempts)
            ))
        rows.extend(result.rows)

    runs = pd.DataFrame(rows, columns=RUN_COLUMNS)
    if not runs.empty and not runs["matches_oracle"].all():
        logger.error("%d runs disagree with the oracle", int((~runs["matches_oracle"].astype(bool)).sum()))

    breakdown = breakdown_table(runs)
    summary = summarize(runs, breakdown)
    for bucket in skipped:
        logger.warning("skipped bucket %s", bucket)

    if cfg.output:
        log("Writing per-run results to " + cfg.output, print_progress)
        runs.to_csv(cfg.output, index=False)
    if cfg.breakdown_output:
        breakdown.to_csv(cfg.breakdown_output, index=False)
    if cfg.summary_output:
        with open(cfg.summary_output, "w", encoding="utf-8") as file:
            file.write(render_table(summary)[1])

    return ExperimentResult(runs, breakdown, summary, skipped)


def breakdown_table(runs: pd.DataFrame) -> pd.DataFrame:
    """α statistics per (property, outcome, μ), in order of first appearance."""
    if runs.empty:
        return pd.DataFrame(columns=BREAKDOWN_COLUMNS)
    grouped = runs.groupby(["property", "outcome", "mu"], sort=False)["alpha"]
    table = grouped.agg(runs="count", min_alpha="min", avg_alpha="mean", max_alpha="max").reset_index()
    return table[BREAKDOWN_COLUMNS]


def summarize(runs: pd.DataFrame, breakdown: Optional[pd.DataFrame] = None) -> List[SummaryRow]:
    """One SummaryRow per property, sorted by average α ascending."""
    if runs.empty:
        return []
    if breakdown is None:
        breakdown = breakdown_table(runs)

    rows = []
    for prop, alphas in runs.groupby("property", sort=False)["alpha"]:
        bucket_avgs = breakdown.loc[breakdown["property"] == prop, "avg_alpha"].to_numpy(dtype=float)
        mean = float(bucket_avgs.mean())
        spread = float((bucket_avgs.max() - bucket_avgs.min()) / mean) if mean > 0 else 0.0
        rows.append(SummaryRow(
            str(prop), float(alphas.min()), float(alphas.mean()), float(alphas.max()), int(alphas.count()), spread
        ))
    return sorted(rows, key=lambda row: (row.avg_alpha, row.property))


def render_table(rows: Sequence[SummaryRow]) -> Tuple[str, str]:
    """
    :return: A text table (header plus one line per row) and the same rows as CSV, both sorted by average α
    """
    ordered = sorted(rows, key=lambda row: (row.avg_alpha, row.property))
    width = max([len("Property")] + [len(row.property) for row in ordered])

    lines = ["{:<{}}  {:>8}  {:>8}  {:>8}".format("Property", width, "Min. α", "Avg. α", "Max. α")]
    for row in ordered:
        lines.append("{:<{}}  {:>8.3f}  {:>8.3f}  {:>8.3f}".format(
            row.property, width, row.min_alpha, row.avg_alpha, row.max_alpha
        ))

    frame = pd.DataFrame(
        [[row.property, row.min_alpha, row.avg_alpha, row.max_alpha, row.runs, row.spread] for row in ordered],
        columns=SUMMARY_COLUMNS
    )
    return "\n".join(lines) + "\n", frame.to_csv(index=False, float_format="%.6f")
