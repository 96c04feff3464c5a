"""Orchestration loops: fixed-step and adaptive Jacobi masters.

Both loops share the same structure: set inputs, step all subsystems to the
next synchronisation point (the final step is shortened to land exactly on
t_stop), gather outputs, route them through the connection graph, and record
everything.  The adaptive loop additionally evaluates the configured error
estimator and indicator at every synchronisation point and feeds the result
to the step size controller; the indicator measured at point i controls the
size of the *next* step.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .controller import ControllerConfig, StepSizeController
from .core import (
    ConnectionGraph,
    PowerBond,
    SignalVector,
    StepHistory,
    StepRecord,
    Subsystem,
    apply_connections,
    validate_graph,
)
from .errors import ConfigurationError, ControllerError, DivergenceError
from .estimators import (
    BondResidual,
    EccoEstimator,
    Estimator,
    StepContext,
    ecco_residual_energy,
    ecco_residual_power,
)
from .indicator import EPSILON_FLOOR, AggregationKind, ToleranceSet, aggregate, normalize
from .subsystems import DIVERGENCE_LIMIT, MonolithicSeries


class _SignalLayout:
    """Concatenated input/output indexing across an ordered subsystem set."""

    def __init__(self, subsystems: Sequence[Subsystem]):
        self.input_slices: list[slice] = []
        self.output_slices: list[slice] = []
        in_labels: list[str] = []
        out_labels: list[str] = []
        in_units: list[str] = []
        out_units: list[str] = []
        in_pos = out_pos = 0
        for sub in subsystems:
            self.input_slices.append(slice(in_pos, in_pos + sub.n_inputs))
            self.output_slices.append(slice(out_pos, out_pos + sub.n_outputs))
            in_pos += sub.n_inputs
            out_pos += sub.n_outputs
            in_labels.extend(sub.input_labels)
            out_labels.extend(sub.output_labels)
            in_units.extend(sub.input_units)
            out_units.extend(sub.output_units)
        self.n_inputs = in_pos
        self.n_outputs = out_pos
        self.input_labels = tuple(in_labels)
        self.output_labels = tuple(out_labels)
        self.input_units = tuple(in_units)
        self.output_units = tuple(out_units)


@dataclass
class Scenario:
    """A complete co-simulation setup.

    ``dt`` is required in fixed mode; ``controller`` in adaptive mode.  The
    estimator, tolerances and aggregation are optional in fixed mode (the
    indicator is then recorded but drives nothing) and required in adaptive
    mode.  ``on_record`` is an optional sink called with each new record.
    """

    subsystems: tuple[Subsystem, ...]
    graph: ConnectionGraph
    t_stop: float
    t_start: float = 0.0
    bonds: tuple[PowerBond, ...] = ()
    u_start: SignalVector | None = None
    mode: str = "fixed"
    dt: float | None = None
    controller: ControllerConfig | None = None
    estimator: Estimator | None = None
    tolerances: ToleranceSet | None = None
    aggregation: AggregationKind = AggregationKind.RMSE
    parallel: bool = False
    on_record: Callable[[StepRecord], None] | None = None

    def __post_init__(self) -> None:
        self.layout = _SignalLayout(self.subsystems)
        self.validate()

    def validate(self) -> None:
        if self.t_stop < self.t_start:
            raise ConfigurationError(
                f"t_stop {self.t_stop} must not precede t_start {self.t_start}"
            )
        violations = validate_graph(self.graph, self.layout.n_inputs, self.layout.n_outputs)
        if violations:
            raise ConfigurationError("invalid connection graph: " + "; ".join(violations))
        for bond in self.bonds:
            for out_idx, in_idx, _ in bond.pairs:
                if not 0 <= out_idx < self.layout.n_outputs:
                    raise ConfigurationError(
                        f"bond {bond.label!r}: output index {out_idx} out of range"
                    )
                if not 0 <= in_idx < self.layout.n_inputs:
                    raise ConfigurationError(
                        f"bond {bond.label!r}: input index {in_idx} out of range"
                    )
        if self.mode == "fixed":
            if self.dt is None or self.dt <= 0:
                raise ConfigurationError("fixed mode requires a positive dt")
        elif self.mode == "adaptive":
            if self.controller is None:
                raise ConfigurationError("adaptive mode requires a controller config")
            if self.estimator is None:
                raise ConfigurationError("adaptive mode requires an error estimator")
        else:
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.estimator is not None:
            if isinstance(self.estimator, EccoEstimator) and not self.bonds:
                raise ConfigurationError(
                    "energy-residual estimation requires at least one power bond"
                )
            if self.tolerances is None:
                raise ConfigurationError("an estimator requires a tolerance set")
            if len(self.tolerances) != self.estimator.width:
                raise ConfigurationError(
                    f"tolerance set has {len(self.tolerances)} entries but the "
                    f"estimator produces {self.estimator.width}"
                )
        if self.u_start is not None and len(self.u_start) != self.layout.n_inputs:
            raise ConfigurationError(
                f"u_start length {len(self.u_start)} != total inputs "
                f"{self.layout.n_inputs}"
            )


def run_fixed(scenario: Scenario) -> list[StepRecord]:
    """Fixed-step Jacobi co-simulation; records every synchronisation point."""
    if scenario.mode != "fixed":
        raise ConfigurationError(f"scenario mode is {scenario.mode!r}, expected 'fixed'")
    return _run(scenario)


def run_adaptive(scenario: Scenario) -> list[StepRecord]:
    """Jacobi co-simulation with automatic macro step size control."""
    if scenario.mode != "adaptive":
        raise ConfigurationError(
            f"scenario mode is {scenario.mode!r}, expected 'adaptive'"
        )
    return _run(scenario)


def _gather_outputs(scenario: Scenario, t: float) -> SignalVector:
    values: list[float] = []
    for sub in scenario.subsystems:
        values.extend(sub.get_outputs())
    vec = SignalVector(tuple(values), scenario.layout.output_labels,
                       scenario.layout.output_units)
    for value in vec.values:
        if not math.isfinite(value) or abs(value) > DIVERGENCE_LIMIT:
            raise DivergenceError(f"output {value!r} at t={t!r}", time=t)
    return vec


def _total_energy(scenario: Scenario) -> float:
    total = 0.0
    for sub in scenario.subsystems:
        energy = sub.stored_energy()
        if energy is None:
            return math.nan
        total += energy
    return total


def _bond_residuals(scenario: Scenario, y: SignalVector, u_held: SignalVector,
                    t: float, dt: float, m: int) -> tuple[BondResidual, ...]:
    residuals = []
    for bond in scenario.bonds:
        delta_p = ecco_residual_power(bond, y, u_held)
        delta_e = ecco_residual_energy(delta_p, dt, m) if dt > 0 else 0.0
        residuals.append(BondResidual(bond.label, delta_p, delta_e, t))
    return tuple(residuals)


def _step_all(scenario: Scenario, h: float) -> None:
    if scenario.parallel and len(scenario.subsystems) > 1:
        with ThreadPoolExecutor(max_workers=len(scenario.subsystems)) as pool:
            futures = [pool.submit(sub.do_step, h) for sub in scenario.subsystems]
            for future in futures:
                future.result()
    else:
        for sub in scenario.subsystems:
            sub.do_step(h)


def _run(scenario: Scenario) -> list[StepRecord]:
    layout = scenario.layout
    estimator = scenario.estimator
    extrapolation_order = max(
        (sub.extrapolation_order for sub in scenario.subsystems), default=0
    )
    controller = (
        StepSizeController(scenario.controller) if scenario.mode == "adaptive" else None
    )
    history = StepHistory(max(2, (estimator.history_need if estimator else 0) + 1))
    records: list[StepRecord] = []

    def emit(record: StepRecord) -> None:
        records.append(record)
        if scenario.on_record is not None:
            scenario.on_record(record)

    t = scenario.t_start
    try:
        y = _gather_outputs(scenario, t)
        if scenario.u_start is not None:
            u = SignalVector(scenario.u_start.values, layout.input_labels,
                             layout.input_units)
        else:
            u = SignalVector(apply_connections(scenario.graph, y).values,
                             layout.input_labels, layout.input_units)
        first = StepRecord(
            t=t, dt=0.0, u=u, y=y, eps=0.0,
            residuals=_bond_residuals(scenario, y, u, t, 0.0, extrapolation_order),
            energy=_total_energy(scenario),
        )
        emit(first)
        history.push(first)

        dt_planned = scenario.dt if scenario.mode == "fixed" else scenario.controller.dt_start
        step_index = 0
        while t < scenario.t_stop:
            step_index += 1
            u_held = records[-1].u
            for sub, sl in zip(scenario.subsystems, layout.input_slices):
                sub.set_inputs(u_held.values[sl])
            if scenario.mode == "fixed":
                # index-based sync times avoid accumulated addition drift,
                # so the step count is exactly ceil((t_stop - t_start) / dt)
                t_next = min(scenario.t_start + step_index * dt_planned,
                             scenario.t_stop)
            else:
                t_next = min(t + dt_planned, scenario.t_stop)
            h = t_next - t
            _step_all(scenario, h)
            t = t_next
            y = _gather_outputs(scenario, t)
            records[-1].dt = h  # actual size of the step that just ran
            u_next = SignalVector(apply_connections(scenario.graph, y).values,
                                  layout.input_labels, layout.input_units)
            residuals = _bond_residuals(scenario, y, u_held, t, h, extrapolation_order)
            eps = 0.0
            if estimator is not None:
                ctx = StepContext(t=t, dt=h, u_held=u_held, y=y, u_next_raw=u_next,
                                  history=history, residuals=residuals)
                sample = estimator.estimate(ctx)
                if sample.ready:
                    normalised = normalize(sample.errors, sample.references,
                                           scenario.tolerances)
                    eps = aggregate(normalised, scenario.aggregation)
            record = StepRecord(t=t, dt=0.0, u=u_next, y=y, eps=eps,
                                residuals=residuals, energy=_total_energy(scenario))
            emit(record)
            history.push(record)
            if controller is not None:
                # the pre-shortening dt is fed back, so a t_stop-shortened
                # final step does not distort the rate clamps
                try:
                    dt_planned = controller.compute_next_step_size(
                        dt_planned, max(eps, EPSILON_FLOOR)
                    )
                except ControllerError as exc:
                    raise ControllerError(
                        f"step {step_index} (t={t!r}): {exc}"
                    ) from exc
    except DivergenceError as exc:
        if exc.time is None:
            exc.time = t
        exc.records = records
        raise
    return records


@dataclass
class ComparisonSeries:
    """Per-synchronisation-point differences against the monolithic oracle."""

    times: list[float] = field(default_factory=list)
    dy: list[tuple[float, ...]] = field(default_factory=list)
    energy_cosim: list[float] = field(default_factory=list)
    energy_mono: list[float] = field(default_factory=list)
    energy_error: list[float] = field(default_factory=list)

    def max_abs_dy(self, k: int) -> float:
        return max(abs(d[k]) for d in self.dy)

    def integrated_abs_dy(self, k: int) -> float:
        """Time integral of |dy_k| over the run (left rectangle rule)."""
        total = 0.0
        for i in range(len(self.times) - 1):
            total += abs(self.dy[i][k]) * (self.times[i + 1] - self.times[i])
        return total


def compare_with_reference(records: Sequence[StepRecord],
                           series: MonolithicSeries) -> ComparisonSeries:
    """Output and energy differences, co-simulated minus monolithic.

    Each record time must match a monolithic sample to within the monolithic
    solver step.
    """
    comparison = ComparisonSeries()
    for record in records:
        idx = series.index_at(record.t)
        mono_y = series.outputs[idx]
        if len(mono_y) != len(record.y):
            raise ValueError(
                f"output count mismatch: co-simulation {len(record.y)}, "
                f"monolithic {len(mono_y)}"
            )
        comparison.times.append(record.t)
        comparison.dy.append(
            tuple(a - b for a, b in zip(record.y.values, mono_y))
        )
        comparison.energy_cosim.append(record.energy)
        comparison.energy_mono.append(series.energies[idx])
        comparison.energy_error.append(record.energy - series.energies[idx])
    return comparison
