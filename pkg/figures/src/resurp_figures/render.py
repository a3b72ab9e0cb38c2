"""Render the four figure kinds from the engine's CSV schemas.

Kinds and their required input columns:

- ``trajectory``: records CSV (context, q1, q2, n, step, mean_surprisal,
  stdev).  Mean lines per condition with a +-1 stdev shaded band; a
  single-point series is drawn as a marker without a band.
- ``grid``: effect CSV (q1, n, gp_short, gp_long, digging_in and their
  stderr columns).  Three panels of effect vs. disambiguation strength,
  one line per particle count, with error bars.
- ``overlay``: records CSV that also carries pred_second_order and
  pred_linear_diffusion.  One panel per (q1, n): mean line with band,
  the cumulative second-order curve (dashed) and the constant-slope
  linear-diffusion curve (dotted) per context.
- ``scatter``: fit-points CSV (kind, true_delta, predicted_delta).
  Predicted vs. true with the identity line, on a linear panel and a
  log-log panel; the log-log panel omits rows whose true or predicted
  delta is nonpositive and reports the dropped count in a footnote.

Plotted series are tagged with stable labels so tests (and downstream
tooling) can recover exactly the numbers that were drawn.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["KINDS", "FigureSpec", "RenderResult", "render"]

KINDS = ("trajectory", "grid", "overlay", "scatter")

_REQUIRED = {
    "trajectory": ["context", "q1", "q2", "n", "step", "mean_surprisal", "stdev"],
    "grid": [
        "q1", "n", "gp_short", "gp_short_stderr", "gp_long", "gp_long_stderr",
        "digging_in", "digging_in_stderr",
    ],
    "overlay": [
        "context", "q1", "n", "step", "mean_surprisal", "stdev",
        "pred_second_order", "pred_linear_diffusion",
    ],
    "scatter": ["kind", "true_delta", "predicted_delta"],
}

_STRING_COLUMNS = {"context", "kind", "experiment"}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: figure kind, input CSV, output image, axis labels."""

    kind: str
    input: Path
    output: Path
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "input", Path(self.input))
        object.__setattr__(self, "output", Path(self.output))


@dataclass(frozen=True)
class RenderResult:
    """Written image path, the live figure, and how many rows the log-log panel dropped."""

    path: Path
    figure: object
    dropped_rows: int


def _load_table(path: Path, required: list) -> dict:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [c for c in required if c not in fields]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    table = {}
    for col in fields:
        values = [row[col] for row in rows]
        if col in _STRING_COLUMNS:
            table[col] = np.array(values, dtype=object)
        else:
            table[col] = np.array([float(v) if v != "" else np.nan for v in values])
    return table


def _series_label(context, q1, n, contexts, q1s, ns) -> str:
    parts = []
    if len(contexts) > 1:
        parts.append(str(context))
    if len(q1s) > 1:
        parts.append(f"q1={q1:g}")
    if len(ns) > 1:
        parts.append(f"N={n:g}")
    return " ".join(parts) or str(context)


def _build_trajectory(table, spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    contexts = sorted(set(table["context"]))
    q1s = sorted(set(table["q1"]))
    ns = sorted(set(table["n"]))
    for context in contexts:
        for q1 in q1s:
            for n in ns:
                sel = (table["context"] == context) & (table["q1"] == q1) & (table["n"] == n)
                if not sel.any():
                    continue
                order = np.argsort(table["step"][sel])
                steps = table["step"][sel][order]
                mean = table["mean_surprisal"][sel][order]
                stdev = table["stdev"][sel][order]
                label = _series_label(context, q1, n, contexts, q1s, ns)
                if steps.size == 1:
                    ax.plot(steps, mean, "o", label=label)
                else:
                    ax.plot(steps, mean, label=label)
                    ax.fill_between(steps, mean - stdev, mean + stdev, alpha=0.2)
    ax.set_xlabel(spec.xlabel or "resampling step")
    ax.set_ylabel(spec.ylabel or "expected surprisal (nats)")
    ax.set_title(spec.title or "Expected surprisal under resampling")
    ax.legend()
    return fig, 0


def _build_grid(table, spec: FigureSpec):
    panels = [
        ("gp_short", "gp_short_stderr", "garden path (short)"),
        ("gp_long", "gp_long_stderr", "garden path (long)"),
        ("digging_in", "digging_in_stderr", "digging-in"),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.8), sharex=True)
    ns = sorted(set(table["n"]))
    for ax, (col, err_col, name) in zip(axes, panels):
        for n in ns:
            sel = table["n"] == n
            order = np.argsort(table["q1"][sel])
            q1 = table["q1"][sel][order]
            ax.errorbar(
                q1, table[col][sel][order], yerr=table[err_col][sel][order],
                marker="o", capsize=2, label=f"N={n:g}",
            )
        ax.set_xscale("log")
        ax.set_xlabel(spec.xlabel or "disambiguating word likelihood q1")
        ax.set_title(name)
    axes[0].set_ylabel(spec.ylabel or "surprisal difference (nats)")
    axes[-1].legend()
    fig.suptitle(spec.title or "Garden-path and digging-in effects")
    fig.tight_layout()
    return fig, 0


def _build_overlay(table, spec: FigureSpec):
    q1s = sorted(set(table["q1"]))
    ns = sorted(set(table["n"]))
    contexts = sorted(set(table["context"]))
    fig, axes = plt.subplots(
        len(ns), len(q1s), figsize=(2.6 * len(q1s) + 1, 2.2 * len(ns) + 1),
        sharex=True, squeeze=False,
    )
    for i, n in enumerate(ns):
        for j, q1 in enumerate(q1s):
            ax = axes[i][j]
            for context in contexts:
                sel = (table["context"] == context) & (table["q1"] == q1) & (table["n"] == n)
                if not sel.any():
                    continue
                order = np.argsort(table["step"][sel])
                steps = table["step"][sel][order]
                mean = table["mean_surprisal"][sel][order]
                stdev = table["stdev"][sel][order]
                line, = ax.plot(steps, mean, label=f"{context} mean")
                ax.fill_between(steps, mean - stdev, mean + stdev, alpha=0.15,
                                color=line.get_color())
                ax.plot(steps, table["pred_second_order"][sel][order], "--",
                        color=line.get_color(), label=f"{context} second-order")
                ax.plot(steps, table["pred_linear_diffusion"][sel][order], ":",
                        color=line.get_color(), label=f"{context} linear-diffusion")
            if i == 0:
                ax.set_title(f"q1={q1:g}")
            if j == 0:
                ax.set_ylabel(f"N={n:g}\nsurprisal (nats)")
            if i == len(ns) - 1:
                ax.set_xlabel(spec.xlabel or "resampling step")
    axes[0][0].legend(fontsize="x-small")
    fig.suptitle(spec.title or "Trajectories and closed-form predictions")
    fig.tight_layout()
    return fig, 0


def _build_scatter(table, spec: FigureSpec):
    fig, (lin_ax, log_ax) = plt.subplots(1, 2, figsize=(9.6, 4.4))
    true = table["true_delta"]
    pred = table["predicted_delta"]
    kinds = sorted(set(table["kind"]))
    positive = (true > 0) & (pred > 0)
    dropped = int((~positive).sum())
    for kind in kinds:
        sel = table["kind"] == kind
        lin_ax.plot(pred[sel], true[sel], ".", alpha=0.6, label=str(kind))
        keep = sel & positive
        log_ax.plot(pred[keep], true[keep], ".", alpha=0.6, label=str(kind))
    finite = np.isfinite(true) & np.isfinite(pred)
    span = (
        min(float(true[finite].min()), float(pred[finite].min())),
        max(float(true[finite].max()), float(pred[finite].max())),
    )
    lin_ax.plot(span, span, "k-", linewidth=0.8, label="identity")
    lin_ax.set_title("linear scale")
    if positive.any():
        lo = min(float(true[positive].min()), float(pred[positive].min()))
        hi = max(float(true[positive].max()), float(pred[positive].max()))
        log_ax.plot([lo, hi], [lo, hi], "k-", linewidth=0.8, label="identity")
    log_ax.set_xscale("log")
    log_ax.set_yscale("log")
    log_ax.set_title("log-log scale")
    for ax in (lin_ax, log_ax):
        ax.set_xlabel(spec.xlabel or "predicted per-step increase (nats)")
        ax.set_ylabel(spec.ylabel or "measured per-step increase (nats)")
        ax.legend(fontsize="small")
    fig.suptitle(spec.title or "Measured vs. predicted per-step surprisal increase")
    fig.text(
        0.01, 0.01,
        f"log-log panel omits {dropped} points with nonpositive measured or predicted delta",
        fontsize=8,
    )
    fig.tight_layout(rect=(0, 0.03, 1, 1))
    return fig, dropped


_BUILDERS = {
    "trajectory": _build_trajectory,
    "grid": _build_grid,
    "overlay": _build_overlay,
    "scatter": _build_scatter,
}


def render(spec: FigureSpec) -> RenderResult:
    """Draw one figure from its CSV and write the image file.

    Returns the written path, the live figure (callers should close it)
    and the number of rows the log-log scatter panel excluded.
    """
    table = _load_table(spec.input, _REQUIRED[spec.kind])
    fig, dropped = _BUILDERS[spec.kind](table, spec)
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output)
    return RenderResult(path=spec.output, figure=fig, dropped_rows=dropped)
