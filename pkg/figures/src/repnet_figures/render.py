"""Batch figure rendering over sweep CSV artifacts.

Consumes only the documented CSV contracts of the simulation package:

    summary.csv   tau,p,runs,mean_b,mean_lifetime,mean_recovery,mean_rewired_fraction
    segments.csv  tau,p,run,kind,length
    hist_*.csv    value,probability

and emits static images. Rendering is deterministic: fixed figure geometry,
no timestamps, data-driven content only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

KINDS = (
    "tau-sweep-benefit",
    "m-sweep-benefit",
    "core-size-hist",
    "lambda1-hist",
    "lifetime-recovery",
)

SUMMARY_COLUMNS = ("tau", "p", "runs", "mean_b", "mean_lifetime", "mean_recovery",
                   "mean_rewired_fraction")
SEGMENT_COLUMNS = ("tau", "p", "run", "kind", "length")
HIST_COLUMNS = ("value", "probability")

FIGSIZE = (6.4, 4.2)
DPI = 120


class SchemaError(ValueError):
    """Input CSV does not match the documented contract."""


@dataclass
class FigureSpec:
    inputs: list[Path]
    kind: str
    out: Path
    bin_width: float | None = None  # lambda1 re-binning, default keeps 0.01 bins
    n: int | None = None  # population size, converts p to m on the m-sweep axis
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")
        self.inputs = [Path(p) for p in self.inputs]
        self.out = Path(self.out)


def read_table(path: Path, required: tuple[str, ...]) -> list[dict[str, str]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    reader = csv.DictReader(text.splitlines())
    header = reader.fieldnames or []
    for column in required:
        if column not in header:
            raise SchemaError(f"{path}: missing column {column!r} (header: {header})")
    rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _f(row: dict[str, str], key: str) -> float:
    try:
        return float(row[key])
    except ValueError as exc:
        raise SchemaError(f"non-numeric {key!r} value {row[key]!r}") from exc


def _new_axes():
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    return fig, ax


def _save(fig, out: Path) -> None:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)


def _render_benefit_sweep(spec: FigureSpec, x_kind: str) -> dict:
    rows = read_table(spec.inputs[0], SUMMARY_COLUMNS)
    if x_kind == "tau":
        xs = [_f(r, "tau") for r in rows]
        xlabel = r"$\tau$"
    else:
        xs = [_f(r, "p") for r in rows]
        if spec.n is not None:
            xs = [p * (spec.n - 1) for p in xs]
            xlabel = r"$m$"
        else:
            xlabel = r"$p$"
    ys = [_f(r, "mean_b") for r in rows]
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    xs, ys = [xs[i] for i in order], [ys[i] for i in order]
    fig, ax = _new_axes()
    ax.plot(xs, ys, marker="o", color="#b3403a")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(r"$\langle b \rangle$")
    ax.grid(alpha=0.3)
    _save(fig, spec.out)
    peak = xs[max(range(len(ys)), key=ys.__getitem__)]
    return {"kind": spec.kind, "out": str(spec.out), "argmax_x": peak, "points": len(xs)}


def _render_histogram(spec: FigureSpec, integer_values: bool) -> dict:
    if len(spec.inputs) > 2:
        raise SchemaError("histogram overlay supports at most two input CSVs")
    fig, ax = _new_axes()
    colors = ("#b3403a", "#3a8f3a")
    plotted = 0
    for idx, path in enumerate(spec.inputs):
        rows = read_table(path, HIST_COLUMNS)
        pairs = sorted(((_f(r, "value"), _f(r, "probability")) for r in rows))
        if not integer_values and spec.bin_width is not None:
            width = spec.bin_width
            binned: dict[float, float] = {}
            for value, prob in pairs:
                left = round(math.floor(value / width + 1e-9) * width, 10)
                binned[left] = binned.get(left, 0.0) + prob
            pairs = sorted(binned.items())
        xs = [v for v, _ in pairs]
        ys = [p for _, p in pairs]
        label = spec.labels[idx] if idx < len(spec.labels) else Path(path).stem
        ax.step(xs, ys, where="mid", color=colors[idx], label=label)
        ax.plot(xs, ys, ".", color=colors[idx], markersize=3)
        plotted += len(xs)
    if integer_values:
        ax.set_xlabel(r"$Q$")
        ax.set_ylabel(r"$P(Q)$")
    else:
        ax.set_xlabel(r"$\lambda_1$")
        ax.set_ylabel(r"$P(\lambda_1)$")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, spec.out)
    return {"kind": spec.kind, "out": str(spec.out), "points": plotted}


def _render_lifetime_recovery(spec: FigureSpec) -> dict:
    rows = read_table(spec.inputs[0], SEGMENT_COLUMNS)
    by_tau: dict[float, dict[str, list[float]]] = {}
    for row in rows:
        kind = row["kind"]
        if kind not in ("lifetime", "recovery"):
            raise SchemaError(f"unknown segment kind {kind!r}")
        by_tau.setdefault(_f(row, "tau"), {"lifetime": [], "recovery": []})[kind].append(
            _f(row, "length")
        )
    taus = sorted(by_tau)
    life = [by_tau[t]["lifetime"] for t in taus]
    rec = [by_tau[t]["recovery"] for t in taus]
    fig, ax = _new_axes()
    ax2 = ax.twinx()
    lt = [(t, sum(v) / len(v)) for t, v in zip(taus, life) if v]
    rt = [(t, sum(v) / len(v)) for t, v in zip(taus, rec) if v]
    if lt:
        ax.plot(*zip(*lt), marker="o", color="#3a5fb3", label=r"$\langle \Omega_Q \rangle$")
    if rt:
        ax2.plot(*zip(*rt), marker="s", color="#b3403a", label=r"$\langle \Pi_Q \rangle$")
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel(r"$\langle \Omega_Q \rangle$")
    ax2.set_ylabel(r"$\langle \Pi_Q \rangle$")
    handles = [h for a in (ax, ax2) for h in a.get_legend_handles_labels()[0]]
    names = [l for a in (ax, ax2) for l in a.get_legend_handles_labels()[1]]
    ax.legend(handles, names, loc="upper center")
    ax.grid(alpha=0.3)
    _save(fig, spec.out)
    return {
        "kind": spec.kind,
        "out": str(spec.out),
        "taus": taus,
        "lifetime_points": len(lt),
        "recovery_points": len(rt),
    }


def render(spec: FigureSpec) -> dict:
    """Render one figure; returns summary metadata about what was drawn."""
    if spec.kind == "tau-sweep-benefit":
        return _render_benefit_sweep(spec, "tau")
    if spec.kind == "m-sweep-benefit":
        return _render_benefit_sweep(spec, "p")
    if spec.kind == "core-size-hist":
        return _render_histogram(spec, integer_values=True)
    if spec.kind == "lambda1-hist":
        return _render_histogram(spec, integer_values=False)
    return _render_lifetime_recovery(spec)
