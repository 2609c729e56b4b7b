"""Experiment orchestration: seeded multi-run execution, aggregation, fitting.

A run is a pure function of ``(config, base_seed, run_id)``: run r draws its
Philox stream from ``base_seed XOR splitmix64(r)``, so re-running a config
reproduces every emitted byte. Runs execute independently (optionally on a
process pool); aggregation is a deterministic reduce over completed runs in
run_id order, so scheduling cannot change the output.
"""

from __future__ import annotations

import csv
import enum
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from . import estimator as est
from .env import EnvironmentSpec, NoiseMode, random_unit_vector
from .errors import BanditVnError, ConfigurationError, FitError, PreconditionError
from .oracle2d import Oracle2dInput, exact_min_eigenvalue_2d
from .policies import (
    BaselineMaximizerConfig,
    OmegaMode,
    PolicyConfig,
    PolicyKind,
    compute_lambda0,
    policy_step,
)
from .rng import make_generator, run_seed

RUN_CSV_COLUMNS = (
    "run_id",
    "batch",
    "step",
    "cum_regret",
    "lambda_min",
    "lambda_max",
    "beta",
    "in_confidence",
    "weight",
)
AGGREGATE_CSV_COLUMNS = (
    "batch",
    "step",
    "mean_cum_regret",
    "std_cum_regret",
    "mean_lambda_min",
    "mean_lambda_max",
    "confidence_fraction",
)


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run parameters; see ``config_from_json`` for the JSON schema.

    ``delta`` is the per-run confidence budget. The estimator's per-batch
    delta is ``delta / horizon_batches`` ("auto" means budget 1, i.e. the
    estimator uses 1/T_batches).
    """

    dim: int
    horizon_batches: int
    runs: int = 1
    base_seed: int = 0
    policy: PolicyKind = PolicyKind.LINUCB_VN
    omega_mode: OmegaMode = OmegaMode.VANISHING
    noise: NoiseMode = NoiseMode.VANISHING
    floor_mu: float = 0.0
    floor_sigma2: float = 0.0
    theta: NDArray[np.float64] | None = None
    delta: float | None = None  # None = auto (budget 1)
    lambda0: float | None = None  # None = auto
    record_every: int | None = None  # None = max(1, horizon_batches // 2000)
    baseline_maximizer: BaselineMaximizerConfig = field(
        default_factory=BaselineMaximizerConfig
    )

    def __post_init__(self):
        if self.dim < 2:
            raise ConfigurationError(f"dim must be >= 2, got {self.dim}")
        if self.horizon_batches < 1:
            raise ConfigurationError("horizon_batches must be >= 1")
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if not 0 <= int(self.base_seed) < 2**64:
            raise ConfigurationError("base_seed must be an unsigned 64-bit integer")
        if self.delta is not None and not 0.0 < self.delta <= 1.0:
            raise ConfigurationError(f"delta must lie in (0, 1], got {self.delta}")
        if self.record_every is not None and self.record_every < 1:
            raise ConfigurationError("record_every must be >= 1")
        if self.theta is not None:
            theta = np.array(self.theta, dtype=float)
            if theta.shape != (self.dim,):
                raise ConfigurationError(
                    f"theta has shape {theta.shape}, expected ({self.dim},)"
                )
            norm = float(np.linalg.norm(theta))
            if not np.all(np.isfinite(theta)) or norm <= 0.0:
                raise ConfigurationError("theta must be a finite nonzero vector")
            theta = theta / norm
            theta.setflags(write=False)
            object.__setattr__(self, "theta", theta)
        # Fail fast on anything the policy would reject (lambda0 bound etc.).
        self.policy_config()

    @property
    def resolved_lambda0(self) -> float:
        if self.lambda0 is None:
            return compute_lambda0(self.dim)
        return float(self.lambda0)

    @property
    def delta_budget(self) -> float:
        return 1.0 if self.delta is None else float(self.delta)

    @property
    def delta_beta(self) -> float:
        """Per-batch delta used inside the confidence radius."""
        value = self.delta_budget / self.horizon_batches
        if not 0.0 < value < 1.0:
            raise ConfigurationError(
                f"per-batch delta {value} is outside (0, 1); set delta explicitly "
                "for this horizon"
            )
        return value

    @property
    def resolved_record_every(self) -> int:
        if self.record_every is not None:
            return self.record_every
        return max(1, self.horizon_batches // 2000)

    def policy_config(self) -> PolicyConfig:
        return PolicyConfig(
            kind=self.policy,
            dim=self.dim,
            delta=self.delta_beta,
            lambda0=self.resolved_lambda0,
            omega_mode=self.omega_mode,
            baseline_maximizer=self.baseline_maximizer,
        )


_CONFIG_KEYS = {
    "dim",
    "horizon_batches",
    "runs",
    "base_seed",
    "record_every",
    "delta",
    "lambda0",
    "policy",
    "omega_mode",
    "noise",
    "floor_mu",
    "floor_sigma2",
    "theta",
}


def config_from_json(source) -> ExperimentConfig:
    """Build an ExperimentConfig from a JSON file path or an already-parsed dict.

    Recognized keys: dim, horizon_batches, runs, base_seed, record_every,
    delta ("auto" | number), lambda0 ("auto" | number), policy ("linucb-vn" |
    "linucb" | "fixed"), omega_mode ("vanishing" | "unit"), noise
    ("vanishing" | "vanishing_floor" | "unit"), floor_mu, floor_sigma2,
    theta ("random" | number sequence).
    """
    import json

    if isinstance(source, (str, Path)):
        try:
            with open(source, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {source}: {exc}") from exc
    else:
        data = dict(source)
    if not isinstance(data, dict):
        raise ConfigurationError("config JSON must be an object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for key in ("dim", "horizon_batches"):
        if key not in data:
            raise ConfigurationError(f"config is missing required key '{key}'")

    def auto_or_number(key):
        raw = data.get(key, "auto")
        if raw == "auto":
            return None
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return float(raw)
        raise ConfigurationError(f"{key} must be 'auto' or a number, got {raw!r}")

    theta_raw = data.get("theta", "random")
    if theta_raw == "random":
        theta = None
    elif isinstance(theta_raw, (list, tuple)):
        theta = np.array(theta_raw, dtype=float)
    else:
        raise ConfigurationError("theta must be 'random' or a number sequence")

    def enum_field(key, enum_cls, default):
        raw = data.get(key, default)
        try:
            return enum_cls(raw)
        except ValueError:
            allowed = ", ".join(e.value for e in enum_cls)
            raise ConfigurationError(f"{key} must be one of: {allowed}; got {raw!r}")

    try:
        return ExperimentConfig(
            dim=int(data["dim"]),
            horizon_batches=int(data["horizon_batches"]),
            runs=int(data.get("runs", 1)),
            base_seed=int(data.get("base_seed", 0)),
            policy=enum_field("policy", PolicyKind, "linucb-vn"),
            omega_mode=enum_field("omega_mode", OmegaMode, "vanishing"),
            noise=enum_field("noise", NoiseMode, "vanishing"),
            floor_mu=float(data.get("floor_mu", 0.0)),
            floor_sigma2=float(data.get("floor_sigma2", 0.0)),
            theta=theta,
            delta=auto_or_number("delta"),
            lambda0=auto_or_number("lambda0"),
            record_every=None
            if data.get("record_every") is None
            else int(data["record_every"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid config value: {exc}") from exc


# ---------------------------------------------------------------------------
# Per-run execution


@dataclass(frozen=True)
class BatchRecord:
    """One recorded batch of one run (one per-run CSV row)."""

    run_id: int
    batch: int
    step: int
    cum_regret: float
    lambda_min: float
    lambda_max: float
    beta: float
    in_confidence: bool
    weight: float


@dataclass
class RunTrace:
    """Recorded trajectory of a single run (columnar)."""

    run_id: int
    seed: int
    status: str
    theta: NDArray | None
    batch: NDArray
    step: NDArray
    cum_regret: NDArray
    lambda_min: NDArray
    lambda_max: NDArray
    beta: NDArray
    in_confidence: NDArray
    weight: NDArray
    # Full-resolution extras used by the invariant suite (verify mode only).
    trace_v: NDArray | None = None
    alpha: NDArray | None = None
    max_center_dist2: NDArray | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def records(self) -> Iterable[BatchRecord]:
        for i in range(len(self.batch)):
            yield BatchRecord(
                run_id=self.run_id,
                batch=int(self.batch[i]),
                step=int(self.step[i]),
                cum_regret=float(self.cum_regret[i]),
                lambda_min=float(self.lambda_min[i]),
                lambda_max=float(self.lambda_max[i]),
                beta=float(self.beta[i]),
                in_confidence=bool(self.in_confidence[i]),
                weight=float(self.weight[i]),
            )


@dataclass
class AggregateTrace:
    """Across-run mean/std traces at the recorded batches.

    The eigenvalue standard deviations are kept in memory for analysis but are
    not part of the aggregate CSV schema.
    """

    batch: NDArray
    step: NDArray
    mean_cum_regret: NDArray
    std_cum_regret: NDArray
    mean_lambda_min: NDArray
    mean_lambda_max: NDArray
    confidence_fraction: NDArray
    std_lambda_min: NDArray | None = None
    std_lambda_max: NDArray | None = None

    def column(self, name: str) -> NDArray:
        if name not in AGGREGATE_CSV_COLUMNS:
            raise PreconditionError(
                f"unknown aggregate column {name!r}; expected one of {AGGREGATE_CSV_COLUMNS}"
            )
        return getattr(self, name)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list[RunTrace]
    aggregate: AggregateTrace

    @property
    def ok_runs(self) -> list[RunTrace]:
        return [r for r in self.runs if r.ok]


def run_single(
    config: ExperimentConfig, run_id: int, full_resolution: bool = False
) -> RunTrace:
    """Execute one seeded run; numerical failures are captured in ``status``."""
    seed = run_seed(config.base_seed, run_id)
    rng = make_generator(seed)
    pconf = config.policy_config()
    if config.theta is not None:
        theta = np.array(config.theta)
    else:
        theta = random_unit_vector(config.dim, rng)
    env = EnvironmentSpec(
        dim=config.dim,
        theta=theta,
        noise_mode=config.noise,
        floor_mu=config.floor_mu,
        floor_sigma2=config.floor_sigma2,
        seed=seed,
    )
    state = est.new_state(config.dim, pconf.lambda0, pconf.delta)
    if config.policy is PolicyKind.LINUCB_VN:
        center = random_unit_vector(config.dim, rng)
    else:
        center = env.theta

    horizon = config.horizon_batches
    every = 1 if full_resolution else config.resolved_record_every
    actions = pconf.actions_per_batch
    batches: list[int] = []
    rows: list[tuple[float, float, float, float, bool, float]] = []
    extras: list[tuple[float, float, float]] = []
    cum = 0.0
    status = "ok"
    try:
        for t in range(1, horizon + 1):
            state, res = policy_step(state, pconf, center, env, rng)
            center = res.center
            cum += res.regret_increment
            if t % every == 0 or t == horizon:
                batches.append(t)
                rows.append(
                    (cum, res.lambda_min, res.lambda_max, res.beta, res.in_confidence, res.weight)
                )
                if full_resolution:
                    extras.append((res.trace, res.alpha, res.max_center_dist2))
    except BanditVnError as exc:
        status = f"error: {exc}"

    batch_arr = np.array(batches, dtype=np.int64)
    cum_arr = np.array([r[0] for r in rows])
    lmin_arr = np.array([r[1] for r in rows])
    lmax_arr = np.array([r[2] for r in rows])
    beta_arr = np.array([r[3] for r in rows])
    return RunTrace(
        run_id=run_id,
        seed=seed,
        status=status,
        theta=theta,
        batch=batch_arr,
        step=batch_arr * actions,
        cum_regret=cum_arr,
        lambda_min=lmin_arr,
        lambda_max=lmax_arr,
        beta=beta_arr,
        in_confidence=np.array([r[4] for r in rows], dtype=bool),
        weight=np.array([r[5] for r in rows]),
        trace_v=np.array([e[0] for e in extras]) if full_resolution else None,
        alpha=np.array([e[1] for e in extras]) if full_resolution else None,
        max_center_dist2=np.array([e[2] for e in extras]) if full_resolution else None,
    )


def _run_task(args) -> RunTrace:
    config, run_id, full_resolution = args
    return run_single(config, run_id, full_resolution)


def aggregate_runs(runs: Sequence[RunTrace]) -> AggregateTrace:
    """Deterministic reduce over completed runs, ordered by run_id."""
    ok = sorted((r for r in runs if r.ok), key=lambda r: r.run_id)
    if not ok:
        raise BanditVnError("no successful runs to aggregate")
    base = ok[0]
    for r in ok[1:]:
        if not np.array_equal(r.batch, base.batch):
            raise BanditVnError("runs recorded different batch schedules")
    cum = np.vstack([r.cum_regret for r in ok])
    lmin = np.vstack([r.lambda_min for r in ok])
    lmax = np.vstack([r.lambda_max for r in ok])
    conf = np.vstack([r.in_confidence.astype(float) for r in ok])
    return AggregateTrace(
        batch=base.batch.copy(),
        step=base.step.copy(),
        mean_cum_regret=cum.mean(axis=0),
        std_cum_regret=cum.std(axis=0),
        mean_lambda_min=lmin.mean(axis=0),
        mean_lambda_max=lmax.mean(axis=0),
        confidence_fraction=conf.mean(axis=0),
        std_lambda_min=lmin.std(axis=0),
        std_lambda_max=lmax.std(axis=0),
    )


def run_experiment(
    config: ExperimentConfig, workers: int = 1, full_resolution: bool = False
) -> ExperimentResult:
    """Run all seeded replications and aggregate them.

    ``workers > 1`` executes runs on a process pool; results are reduced in
    run_id order so parallel scheduling never changes the output.
    """
    tasks = [(config, run_id, full_resolution) for run_id in range(config.runs)]
    if workers > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_task, tasks))
    else:
        runs = [_run_task(t) for t in tasks]
    runs.sort(key=lambda r: r.run_id)
    return ExperimentResult(config=config, runs=runs, aggregate=aggregate_runs(runs))


# ---------------------------------------------------------------------------
# Curve fitting


class FitModel(str, enum.Enum):
    POWERLAW = "powerlaw"
    POLYLOG = "polylog"
    LINEAR = "linear"
    QUADRATIC = "quadratic"


@dataclass(frozen=True)
class FitResult:
    model: FitModel
    params: tuple[float, ...]
    r_squared: float
    fit_range: tuple[float, float]

    def describe(self) -> str:
        if self.model is FitModel.POWERLAW:
            a, p = self.params
            form = f"y = {a:.6g} * t^{p:.6g}"
        elif self.model is FitModel.POLYLOG:
            form = f"y = {self.params[0]:.6g} * (ln t)^2"
        elif self.model is FitModel.LINEAR:
            form = f"y = {self.params[0]:.6g} * t"
        else:
            form = f"y = {self.params[0]:.6g} * t^2"
        lo, hi = self.fit_range
        return f"{form}   (r^2 = {self.r_squared:.6f} on t in [{lo:g}, {hi:g}])"


def _r_squared(y: NDArray, fitted: NDArray) -> float:
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 0.0:
        return 1.0 if ss_res <= 1e-30 else 0.0
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def fit_points(
    t: NDArray, y: NDArray, model: FitModel, t_range: tuple[float, float]
) -> FitResult:
    """Fit one scaling model to (t, y) restricted to ``t_range``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    lo, hi = float(t_range[0]), float(t_range[1])
    if not lo < hi:
        raise FitError(f"empty fit range [{lo}, {hi}]")
    if model in (FitModel.POWERLAW, FitModel.POLYLOG) and lo < 2.0:
        raise FitError(f"log-based fits need t_lo >= 2, got {lo}")
    if lo < t.min() or hi > t.max():
        raise FitError(
            f"fit range [{lo}, {hi}] extends outside the trace [{t.min():g}, {t.max():g}]"
        )
    mask = (t >= lo) & (t <= hi)
    ts = t[mask]
    ys = y[mask]
    if len(ts) < 3:
        raise FitError(f"fit range [{lo}, {hi}] selects only {len(ts)} points")

    if model is FitModel.POWERLAW:
        bad = np.nonzero(ys <= 0.0)[0]
        if len(bad):
            rows = [int(ts[i]) for i in bad[:10]]
            raise FitError(
                f"power-law fit needs positive values; offending batches: {rows}",
                offending_rows=rows,
            )
        lx = np.log(ts)
        ly = np.log(ys)
        vx = float(np.sum((lx - lx.mean()) ** 2))
        slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean()))) / vx
        intercept = float(ly.mean() - slope * lx.mean())
        fitted = intercept + slope * lx
        return FitResult(
            model=model,
            params=(math.exp(intercept), slope),
            r_squared=_r_squared(ly, fitted),
            fit_range=(lo, hi),
        )

    if model is FitModel.POLYLOG:
        feature = np.log(ts) ** 2
    elif model is FitModel.LINEAR:
        feature = ts
    else:
        feature = ts**2
    coeff = float(np.sum(feature * ys) / np.sum(feature * feature))
    return FitResult(
        model=model,
        params=(coeff,),
        r_squared=_r_squared(ys, coeff * feature),
        fit_range=(lo, hi),
    )


def fit_curve(
    trace: AggregateTrace, column: str, model: FitModel, t_range: tuple[float, float]
) -> FitResult:
    """Fit a named aggregate column against the batch index."""
    return fit_points(trace.batch.astype(float), trace.column(column), model, t_range)


# ---------------------------------------------------------------------------
# CSV / SVG emission


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise BanditVnError(f"cannot write {path}: {exc}") from exc


def emit_csv(traces, path) -> None:
    """Write per-run rows (sequence of RunTrace) or an aggregate trace as CSV.

    Reals carry 17 significant digits (exact float round-trip), booleans are
    0/1, the header row is mandatory, and the file is written atomically.
    """
    lines: list[str] = []
    if isinstance(traces, AggregateTrace):
        lines.append(",".join(AGGREGATE_CSV_COLUMNS))
        for i in range(len(traces.batch)):
            lines.append(
                ",".join(
                    [
                        str(int(traces.batch[i])),
                        str(int(traces.step[i])),
                        _fmt(traces.mean_cum_regret[i]),
                        _fmt(traces.std_cum_regret[i]),
                        _fmt(traces.mean_lambda_min[i]),
                        _fmt(traces.mean_lambda_max[i]),
                        _fmt(traces.confidence_fraction[i]),
                    ]
                )
            )
    else:
        lines.append(",".join(RUN_CSV_COLUMNS))
        for run in sorted(traces, key=lambda r: r.run_id):
            for rec in run.records():
                lines.append(
                    ",".join(
                        [
                            str(rec.run_id),
                            str(rec.batch),
                            str(rec.step),
                            _fmt(rec.cum_regret),
                            _fmt(rec.lambda_min),
                            _fmt(rec.lambda_max),
                            _fmt(rec.beta),
                            "1" if rec.in_confidence else "0",
                            _fmt(rec.weight),
                        ]
                    )
                )
    _atomic_write(path, "\n".join(lines) + "\n")


def emit_summary_csv(runs: Sequence[RunTrace], path) -> None:
    """Per-run status table (run_id, seed, status, final_cum_regret)."""
    lines = ["run_id,seed,status,final_cum_regret"]
    for run in sorted(runs, key=lambda r: r.run_id):
        final = _fmt(run.cum_regret[-1]) if len(run.cum_regret) else ""
        status = run.status.replace(",", ";")
        lines.append(f"{run.run_id},{run.seed},{status},{final}")
    _atomic_write(path, "\n".join(lines) + "\n")


def read_aggregate_csv(path) -> AggregateTrace:
    """Parse a CSV produced by ``emit_csv`` for an aggregate trace."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or tuple(header) != AGGREGATE_CSV_COLUMNS:
                raise BanditVnError(
                    f"{path} does not look like an aggregate trace CSV (header {header})"
                )
            rows = [row for row in reader if row]
    except OSError as exc:
        raise BanditVnError(f"cannot read {path}: {exc}") from exc
    data = np.array([[float(v) for v in row] for row in rows])
    if data.size == 0:
        data = data.reshape(0, len(AGGREGATE_CSV_COLUMNS))
    return AggregateTrace(
        batch=data[:, 0].astype(np.int64),
        step=data[:, 1].astype(np.int64),
        mean_cum_regret=data[:, 2],
        std_cum_regret=data[:, 3],
        mean_lambda_min=data[:, 4],
        mean_lambda_max=data[:, 5],
        confidence_fraction=data[:, 6],
    )


_SVG_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _axis_ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo_exp = math.floor(math.log10(lo))
        hi_exp = math.ceil(math.log10(hi))
        ticks = [10.0**e for e in range(lo_exp, hi_exp + 1)]
        return [t for t in ticks if lo <= t <= hi] or [lo, hi]
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, 6))


def emit_svg(
    aggregate: AggregateTrace,
    columns: Sequence[str],
    path,
    log_x: bool = False,
    log_y: bool = False,
) -> None:
    """Self-contained SVG line chart: one polyline per column, ticks, legend."""
    if not columns:
        raise PreconditionError("emit_svg needs at least one column")
    x = aggregate.batch.astype(float)
    if len(x) == 0:
        raise PreconditionError("cannot plot an empty trace")
    series = {name: np.asarray(aggregate.column(name), dtype=float) for name in columns}
    if log_x and x.min() <= 0.0:
        raise PreconditionError("log-x axis requires positive batch indices")
    for name, values in series.items():
        if log_y and values.min() <= 0.0:
            raise PreconditionError(f"log-y axis requires positive values in {name!r}")

    width, height = 920, 560
    left, right, top, bottom = 80, 200, 30, 60
    plot_w = width - left - right
    plot_h = height - top - bottom

    def tx(values: NDArray) -> NDArray:
        return np.log10(values) if log_x else values

    def ty(values: NDArray) -> NDArray:
        return np.log10(values) if log_y else values

    x_lo, x_hi = float(x.min()), float(x.max())
    all_y = np.concatenate(list(series.values()))
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    txl, txh = float(tx(np.array([x_lo]))[0]), float(tx(np.array([x_hi]))[0])
    tyl, tyh = float(ty(np.array([y_lo]))[0]), float(ty(np.array([y_hi]))[0])

    def px(value: float) -> float:
        return left + (value - txl) / (txh - txl) * plot_w

    def py(value: float) -> float:
        return top + plot_h - (value - tyl) / (tyh - tyl) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" '
        'stroke="black" stroke-width="1"/>',
    ]
    for tick in _axis_ticks(x_lo, x_hi, log_x):
        cx = px(float(tx(np.array([tick]))[0]))
        parts.append(
            f'<line x1="{cx:.2f}" y1="{top + plot_h}" x2="{cx:.2f}" y2="{top + plot_h + 6}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{cx:.2f}" y="{top + plot_h + 22}" font-size="12" '
            f'text-anchor="middle">{tick:g}</text>'
        )
    for tick in _axis_ticks(y_lo, y_hi, log_y):
        cy = py(float(ty(np.array([tick]))[0]))
        parts.append(
            f'<line x1="{left - 6}" y1="{cy:.2f}" x2="{left}" y2="{cy:.2f}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{left - 10}" y="{cy + 4:.2f}" font-size="12" '
            f'text-anchor="end">{tick:g}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{height - 14}" font-size="13" '
        'text-anchor="middle">batch</text>'
    )
    for idx, (name, values) in enumerate(series.items()):
        color = _SVG_PALETTE[idx % len(_SVG_PALETTE)]
        pts = " ".join(
            f"{px(float(vx)):.3f},{py(float(vy)):.3f}"
            for vx, vy in zip(tx(x), ty(values))
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'
        )
        ly = top + 16 + 22 * idx
        lx = left + plot_w + 16
        parts.append(
            f'<line x1="{lx}" y1="{ly}" x2="{lx + 26}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 32}" y="{ly + 4}" font-size="12">{name}</text>'
        )
    parts.append("</svg>")
    _atomic_write(path, "\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# Invariant verifier


@dataclass(frozen=True)
class InvariantResult:
    name: str
    passed: bool
    worst_slack: float
    detail: str


@dataclass
class VerifyReport:
    config: ExperimentConfig
    results: list[InvariantResult]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def render(self) -> str:
        lines = []
        for r in self.results:
            tag = "PASS" if r.passed else "FAIL"
            lines.append(f"[{tag}] {r.name}: worst slack {r.worst_slack:.6e} ({r.detail})")
        lines.append("all invariants passed" if self.all_passed else "INVARIANT FAILURES")
        return "\n".join(lines)


def verify(config: ExperimentConfig, workers: int = 1) -> VerifyReport:
    """Run the deterministic invariant suite over the configured runs.

    Checks, on every batch of every run: the min/max eigenvalue relation, the
    weight hypothesis, the action-to-center distance bound, the trace upper
    bound, and (d = 2) agreement of each minimum-eigenvalue transition with
    the closed form. Positive slack means the inequality held with margin.
    """
    if config.policy is not PolicyKind.LINUCB_VN or config.omega_mode is not OmegaMode.VANISHING:
        raise ConfigurationError(
            "verify exercises the vanishing-noise policy invariants; "
            "use policy=linucb-vn with omega_mode=vanishing"
        )
    result = run_experiment(config, workers=workers, full_resolution=True)
    failed_runs = [r.run_id for r in result.runs if not r.ok]
    d = float(config.dim)
    lam0 = config.resolved_lambda0
    ratio = 2.0 / (3.0 * (d - 1.0))
    omega_cap = 1.0 / (12.0 * math.sqrt(d - 1.0))

    relation = math.inf
    omega_slack = math.inf
    distance = math.inf
    trace_slack = math.inf
    oracle_err = 0.0
    for run in result.ok_runs:
        lmin = run.lambda_min
        lmax = run.lambda_max
        lmin_prev = np.concatenate([[lam0], lmin[:-1]])
        lmax_prev = np.concatenate([[lam0], lmax[:-1]])
        t = run.batch.astype(float)
        relation = min(
            relation,
            float(np.min(lmin - (np.sqrt(ratio * lmax) - 1e-9 * lmax))),
        )
        omega_slack = min(
            omega_slack, float(np.min(omega_cap * np.sqrt(lmax_prev) - run.weight))
        )
        distance = min(
            distance,
            float(np.min(2.0 / lmin_prev + 1e-9 - run.max_center_dist2)),
        )
        bound = d * (d * t * t / 144.0 + math.sqrt(d * lam0) * t / 6.0 + lam0)
        trace_slack = min(trace_slack, float(np.min(bound - run.trace_v)))
        if config.dim == 2:
            for i in range(len(t)):
                predicted = exact_min_eigenvalue_2d(
                    Oracle2dInput(
                        lambda_min_t=float(lmin_prev[i]),
                        lambda_max_t=float(lmax_prev[i]),
                        omega=float(run.weight[i]),
                        alpha=float(run.alpha[i]),
                    )
                )
                rel = abs(float(lmin[i]) - predicted) / max(1.0, abs(float(lmin[i])))
                oracle_err = max(oracle_err, rel)

    results = [
        InvariantResult(
            "eigenvalue-relation",
            relation >= 0.0,
            relation,
            f"lambda_min >= sqrt({ratio:.6g} * lambda_max) - 1e-9*lambda_max",
        ),
        InvariantResult(
            "omega-hypothesis",
            omega_slack >= -1e-12,
            omega_slack,
            "weight <= sqrt(lambda_max_prev) / (12 sqrt(d-1))",
        ),
        InvariantResult(
            "distance-lemma",
            distance >= 0.0,
            distance,
            "max ||a - center||^2 <= 2/lambda_min_prev + 1e-9",
        ),
        InvariantResult(
            "trace-bound",
            trace_slack >= 0.0,
            trace_slack,
            "Tr(V_t) <= d(d t^2/144 + sqrt(d lambda0) t/6 + lambda0)",
        ),
    ]
    if config.dim == 2:
        results.append(
            InvariantResult(
                "min-eigenvalue-closed-form",
                oracle_err <= 1e-9,
                oracle_err,
                "per-batch lambda_min transition vs closed form (relative)",
            )
        )
    if failed_runs:
        results.append(
            InvariantResult(
                "run-completion",
                False,
                float(len(failed_runs)),
                f"runs failed: {failed_runs}",
            )
        )
    return VerifyReport(config=config, results=results)
