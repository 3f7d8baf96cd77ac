"""Performance and robustness measurement.

Performance is the population-average relative reputation; robustness is
summarized by the lengths of maximal core-alive runs (lifetimes) and
core-dead runs (recovery times) in a simulation trace. CSV schemas here are
the package's stable on-disk contracts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

STEP_CSV_HEADER = "t,b_mean,lambda1,core_size,core_alive,departed,y_remaining,whole_network"
SWEEP_CSV_HEADER = "tau,p,runs,mean_b,mean_lifetime,mean_recovery,mean_rewired_fraction"

LAMBDA1_BIN_WIDTH = 0.01


class TraceParseError(ValueError):
    """Raised when a persisted trace file does not match the step schema."""


@dataclass
class StepRecord:
    t: int
    b_mean: float
    lambda1: float
    core_size: int
    core_alive: bool
    departed_count: int
    y_remaining: float
    whole_network: bool


@dataclass
class RobustnessSummary:
    lifetimes: list[int]
    recoveries: list[int]
    mean_lifetime: float
    mean_recovery: float
    mean_rewired_fraction: float


@dataclass
class EnsembleSummary:
    mean_b: float
    runs: int
    t_max: int
    histogram_core_size: dict[int, float]
    histogram_lambda1: dict[float, float]


def population_mean_benefit(b) -> float:
    """(1/N) sum_i b_i."""
    b = np.asarray(b, dtype=np.float64)
    if b.size == 0:
        raise ValueError("population mean benefit of an empty vector")
    return float(b.mean())


def robustness_from_trace(records: list[StepRecord], n: int) -> RobustnessSummary:
    """Segment the core-alive sequence into lifetimes and recovery times.

    The trailing segment is always open (the trace ends before it does) and is
    excluded from the pooled samples; consequently an all-alive or all-dead
    trace yields no completed segment at all.
    """
    if not records:
        raise ValueError("cannot summarize an empty trace")
    flags = [r.core_alive for r in records]
    segments: list[tuple[bool, int]] = []
    run_flag, run_len = flags[0], 0
    for f in flags:
        if f == run_flag:
            run_len += 1
        else:
            segments.append((run_flag, run_len))
            run_flag, run_len = f, 1
    # final (run_flag, run_len) segment is open: dropped
    lifetimes = [length for alive, length in segments if alive]
    recoveries = [length for alive, length in segments if not alive]
    rewired = sum(r.departed_count for r in records) / (len(records) * n)
    return RobustnessSummary(
        lifetimes=lifetimes,
        recoveries=recoveries,
        mean_lifetime=float(np.mean(lifetimes)) if lifetimes else math.nan,
        mean_recovery=float(np.mean(recoveries)) if recoveries else math.nan,
        mean_rewired_fraction=rewired,
    )


def lambda1_bin(value: float, width: float = LAMBDA1_BIN_WIDTH) -> float:
    return round(math.floor(value / width + 1e-9) * width, 10)


def ensemble_average(
    final_records: list[tuple[int, StepRecord]],
    filter_whole: bool = False,
) -> EnsembleSummary:
    """Aggregate run-final means and histograms over an ensemble of records.

    mean_b averages the last record of each run; histograms pool every record
    passed in. With filter_whole only whole-network realizations count.
    """
    records = list(final_records)
    if filter_whole:
        records = [(run, rec) for run, rec in records if rec.whole_network]
    if not records:
        raise ValueError("empty ensemble: no realizations left after filtering")

    last_by_run: dict[int, StepRecord] = {}
    for run, rec in records:
        prev = last_by_run.get(run)
        if prev is None or rec.t >= prev.t:
            last_by_run[run] = rec
    mean_b = float(np.mean([rec.b_mean for rec in last_by_run.values()]))

    q_counts: dict[int, int] = {}
    l_counts: dict[float, int] = {}
    for _, rec in records:
        q_counts[rec.core_size] = q_counts.get(rec.core_size, 0) + 1
        lb = lambda1_bin(rec.lambda1)
        l_counts[lb] = l_counts.get(lb, 0) + 1
    total = len(records)
    return EnsembleSummary(
        mean_b=mean_b,
        runs=len(last_by_run),
        t_max=max(rec.t for _, rec in records),
        histogram_core_size={q: c / total for q, c in sorted(q_counts.items())},
        histogram_lambda1={lb: c / total for lb, c in sorted(l_counts.items())},
    )


def rank_sum_pvalue(x, y, alternative: str = "two-sided") -> float:
    """Wilcoxon rank-sum (Mann-Whitney U) p-value comparing two samples."""
    return float(stats.mannwhitneyu(x, y, alternative=alternative).pvalue)


# -- CSV contracts ------------------------------------------------------------


def _fmt_bool(v: bool) -> str:
    return "true" if v else "false"


def step_records_to_csv(records: list[StepRecord]) -> str:
    lines = [STEP_CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.t},{r.b_mean!r},{r.lambda1!r},{r.core_size},{_fmt_bool(r.core_alive)},"
            f"{r.departed_count},{r.y_remaining!r},{_fmt_bool(r.whole_network)}"
        )
    return "\n".join(lines) + "\n"


def _parse_bool(token: str, lineno: int) -> bool:
    if token == "true":
        return True
    if token == "false":
        return False
    raise TraceParseError(f"line {lineno}: expected true/false, got {token!r}")


def step_records_from_csv(text: str) -> list[StepRecord]:
    lines = text.splitlines()
    if not lines or lines[0] != STEP_CSV_HEADER:
        raise TraceParseError("line 1: missing or malformed step-record header")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise TraceParseError(f"line {lineno}: expected 8 fields, got {len(parts)}")
        try:
            records.append(
                StepRecord(
                    t=int(parts[0]),
                    b_mean=float(parts[1]),
                    lambda1=float(parts[2]),
                    core_size=int(parts[3]),
                    core_alive=_parse_bool(parts[4], lineno),
                    departed_count=int(parts[5]),
                    y_remaining=float(parts[6]),
                    whole_network=_parse_bool(parts[7], lineno),
                )
            )
        except ValueError as exc:
            if isinstance(exc, TraceParseError):
                raise
            raise TraceParseError(f"line {lineno}: {exc}") from exc
    return records
