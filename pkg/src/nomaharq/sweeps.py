"""Parameter sweeps behind the figure commands, and their CSV output."""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .allocation import Scheme
from .errormodel import CodeParams
from .expectation import (
    ExpectationMethod,
    expected_power_slot2,
    expected_rate_linearized,
    expected_rate_slot1,
    expected_rate_slot2,
    fading_average_power_db,
)
from .fading import LinkConfig
from .simengine import Adaptation, SchemePolicy, run_batch


class Experiment(enum.Enum):
    FIG2 = "fig2"    # slot-2 rate vs power (P1 = P2)
    FIG3A = "fig3a"  # slot-2 rate vs blocklength
    FIG3B = "fig3b"  # slot-2 rate vs error budget
    FIG4 = "fig4"    # slot-2 power vs rate
    FIG5 = "fig5"    # slot-2 power vs blocklength, fixed rate
    FIG6 = "fig6"    # slot-2 power vs blocklength, fixed K


class Method(enum.Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"
    LINEARIZED_Q = "linearized_q"


ALL_METHODS = tuple(Method)
POWER_EXPERIMENTS = {Experiment.FIG4, Experiment.FIG5, Experiment.FIG6}

# axis name, default grid
DEFAULT_AXES = {
    Experiment.FIG2: ("p_db", (10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0)),
    Experiment.FIG3A: ("l", (100, 200, 500, 1000, 2000, 5000, 10000)),
    Experiment.FIG3B: ("theta1", (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)),
    Experiment.FIG4: ("rate", (0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)),
    Experiment.FIG5: ("l", (100, 200, 500, 1000, 2000, 5000, 10000)),
    Experiment.FIG6: ("l", (100, 200, 500, 1000, 2000, 5000, 10000)),
}


def default_base(experiment: Experiment, *, rate: float | None = None,
                 k_nats: float | None = None) -> LinkConfig:
    """Link configuration each figure is drawn at."""
    experiment = Experiment(experiment)
    base = LinkConfig()
    if experiment is Experiment.FIG4:
        return base.replace(p2_db=40.0).with_rates(1.0 if rate is None else rate)
    if experiment is Experiment.FIG5:
        return base.with_rates(2.0 if rate is None else rate)
    if experiment is Experiment.FIG6:
        k = 100.0 if k_nats is None else k_nats
        code = CodeParams.from_info_nats(base.blocklength, k)
        return base.replace(p2_db=40.0, code1=code, code2=code)
    return base


def apply_axis(config: LinkConfig, axis: str, value: float) -> LinkConfig:
    if axis == "p_db":
        return config.replace(p1_db=float(value), p2_db=float(value))
    if axis == "l":
        if float(value) != int(value):
            raise ValueError(f"blocklength must be an integer, got {value!r}")
        return config.with_blocklength(int(value))
    if axis == "theta1":
        return config.replace(theta1=float(value), theta2=float(value))
    if axis == "rate":
        return config.with_rates(float(value))
    raise ValueError(f"unknown sweep axis {axis!r}")


@dataclass(frozen=True)
class SweepSpec:
    experiment: Experiment
    base: LinkConfig
    axis: str
    grid: tuple
    trials: int = 100_000
    seed: int = 0
    methods: tuple = ALL_METHODS
    workers: int = 1  # scheduling only; never affects results

    def __post_init__(self):
        object.__setattr__(self, "experiment", Experiment(self.experiment))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        object.__setattr__(self, "grid", tuple(self.grid))
        if not self.grid:
            raise ValueError("sweep grid is empty")
        steps = np.diff(np.asarray(self.grid, dtype=float))
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("sweep grid must be strictly monotone")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate methods")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.experiment is Experiment.FIG6 and self.base.code1.info_nats is None:
            raise ValueError("fig6 needs info_nats (K) on the base configuration")

    @classmethod
    def default(cls, experiment, **kwargs) -> "SweepSpec":
        experiment = Experiment(experiment)
        axis, grid = DEFAULT_AXES[experiment]
        kwargs.setdefault("base", default_base(experiment))
        kwargs.setdefault("axis", axis)
        kwargs.setdefault("grid", grid)
        return cls(experiment, **kwargs)

    @property
    def quantity(self) -> str:
        return "power_db" if self.experiment in POWER_EXPERIMENTS else "rate"

    def value_columns(self) -> list[str]:
        return [f"{s.value}_{m.value}" for m in self.methods for s in Scheme]


@dataclass(frozen=True)
class Cell:
    value: float
    se: float = 0.0
    infeasible: float = 0.0


@dataclass
class SweepRow:
    axis_value: float
    cells: dict = field(default_factory=dict)
    error: str = ""


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list
    metadata: dict


def _rate_cell(config: LinkConfig, scheme: Scheme, method: Method, spec: SweepSpec) -> Cell:
    if method is Method.MONTE_CARLO:
        stats = run_batch(config, SchemePolicy(scheme, Adaptation.RATE), spec.trials,
                          spec.seed, workers=spec.workers)
        est = stats.mean_rate_ue1_slot2
        return Cell(est.value, est.se, stats.rate_infeasible_fraction)
    if method is Method.LINEARIZED_Q:
        res = expected_rate_linearized(config, scheme)
    else:
        fn = expected_rate_slot2 if scheme is Scheme.PROPOSED else expected_rate_slot1
        res = fn(config, ExpectationMethod(method.value))
    return Cell(res.value, res.abs_error_estimate)


def _linearized_power_db(config: LinkConfig, scheme: Scheme) -> float:
    # Linearized model hits theta where its ramp does: y = u0 + (1/2 - theta)/slope.
    r, theta, L = config.code1.rate, config.theta1, config.blocklength
    y = math.expm1(r) + (0.5 - theta) * math.sqrt(2.0 * math.pi * math.expm1(2.0 * r) / L)
    return fading_average_power_db(y, config, scheme)


def _power_cell(config: LinkConfig, scheme: Scheme, method: Method, spec: SweepSpec) -> Cell:
    rate = config.code1.rate
    if method is Method.LINEARIZED_Q:
        return Cell(_linearized_power_db(config, scheme))
    res = expected_power_slot2(config, rate, scheme, ExpectationMethod(method.value),
                               trials=spec.trials, seed=spec.seed)
    return Cell(res.value_db, res.abs_error_estimate, res.infeasible_fraction)


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate every method at every grid point. A failing point is
    recorded in its row and the sweep carries on."""
    cell_fn = _power_cell if spec.quantity == "power_db" else _rate_cell
    rows = []
    for value in spec.grid:
        row = SweepRow(float(value))
        try:
            config = apply_axis(spec.base, spec.axis, value)
            for method in spec.methods:
                for scheme in Scheme:
                    row.cells[f"{scheme.value}_{method.value}"] = cell_fn(config, scheme, method, spec)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return SweepResult(spec, rows, sweep_metadata(spec))


def config_items(config: LinkConfig) -> list[tuple[str, object]]:
    return [
        ("p1_db", config.p1_db),
        ("p2_db", config.p2_db),
        ("lambda1", config.fading.lambda1),
        ("lambda2", config.fading.lambda2),
        ("l", config.blocklength),
        ("rate1", config.code1.rate),
        ("rate2", config.code2.rate),
        ("k1_nats", config.code1.info_nats),
        ("k2_nats", config.code2.info_nats),
        ("theta1", config.theta1),
        ("theta2", config.theta2),
    ]


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def sweep_metadata(spec: SweepSpec) -> dict:
    meta = {
        "experiment": spec.experiment.value,
        "quantity": spec.quantity,
        "axis": spec.axis,
        "grid": " ".join(_fmt(float(v)) for v in spec.grid),
        "methods": " ".join(m.value for m in spec.methods),
        "trials": str(spec.trials),
        "seed": str(spec.seed),
    }
    meta.update({k: _fmt(v) for k, v in config_items(spec.base)})
    canonical = "\n".join(f"{k}={v}" for k, v in meta.items())
    meta["config_hash"] = hashlib.sha256(canonical.encode()).hexdigest()[:16]
    meta["version"] = __version__
    return meta


def render_csv(result: SweepResult) -> str:
    cols = result.spec.value_columns()
    lines = [f"# meta: {k}={v}" for k, v in result.metadata.items()]
    header = [result.spec.axis] + cols + [f"{c}_se" for c in cols] + [f"{c}_infeasible" for c in cols]
    lines.append(",".join(header + ["error"]))
    for row in result.rows:
        cells = [row.cells.get(c) for c in cols]
        out = [_fmt(row.axis_value)]
        out += [_fmt(c.value) if c else "" for c in cells]
        out += [_fmt(c.se) if c else "" for c in cells]
        out += [_fmt(c.infeasible) if c else "" for c in cells]
        out.append(row.error.replace(",", ";").replace("\n", " "))
        lines.append(",".join(out))
    return "\n".join(lines) + "\n"


def emit_csv(result: SweepResult, destination) -> None:
    """Write the sweep as UTF-8 CSV; I/O errors name the path."""
    text = render_csv(result)
    try:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {destination}: {exc.strerror or exc}") from exc
