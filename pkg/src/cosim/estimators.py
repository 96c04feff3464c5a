"""Rollback-free local coupling-error estimators.

Three families, all computable from interface signals alone:

* input errors: the difference between the freshly routed inputs and the
  values that were held (extrapolated) during the step, optionally corrected
  for direct feed-through through a small linear solve;
* output errors: the difference between each new output and a Lagrange
  polynomial extrapolation of its recent history;
* energy residuals: the spurious power and energy injected through each
  power bond, obtained from products of outputs and held inputs.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import ConnectionGraph, SignalVector, PowerBond, StepHistory
from .errors import EstimatorError

#: Condition-number limit beyond which the feed-through solve is refused.
FEEDTHROUGH_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class FeedthroughModel:
    """Sparse interface Jacobian entries (output index, input index) -> dy/du."""

    entries: Mapping[tuple[int, int], float]
    n_outputs: int
    n_inputs: int

    def __post_init__(self) -> None:
        for (i, j), value in self.entries.items():
            if not 0 <= i < self.n_outputs or not 0 <= j < self.n_inputs:
                raise EstimatorError(f"feed-through entry ({i}, {j}) out of range")
            if not math.isfinite(value):
                raise EstimatorError(f"feed-through entry ({i}, {j}) is not finite")

    @property
    def available(self) -> bool:
        return bool(self.entries)


@dataclass(frozen=True)
class BondResidual:
    """Residual power and energy of one power bond at one synchronisation point."""

    label: str
    delta_p: float
    delta_e: float
    t: float


def nepce_input_error(u_now: SignalVector, u_prev: SignalVector) -> SignalVector:
    """Local input error under zero-order hold: u[i] - u[i-1], elementwise."""
    if len(u_now) != len(u_prev):
        raise ValueError(
            f"input vectors differ in length: {len(u_now)} vs {len(u_prev)}"
        )
    return u_now.with_values(
        tuple(a - b for a, b in zip(u_now.values, u_prev.values))
    )


def nepce_feedthrough_correction(
    du_raw: SignalVector, graph: ConnectionGraph, ft: FeedthroughModel
) -> SignalVector:
    """Correct a raw input error for direct feed-through.

    Solves (I - L J_y) du = du_raw, where L routes outputs to inputs and J_y
    holds the interface Jacobian.  With J_y = 0 the input is returned
    unchanged.  An ill-conditioned system raises, advising fallback to the
    uncorrected estimate.
    """
    if not ft.available:
        return du_raw
    n_in, n_out = graph.n_inputs, graph.n_outputs
    if len(du_raw) != n_in:
        raise ValueError(f"error vector length {len(du_raw)} != n_inputs {n_in}")
    jac = np.zeros((n_out, n_in))
    for (i, j), value in ft.entries.items():
        jac[i, j] = value
    routing = np.zeros((n_in, n_out))
    for out_idx, in_idx, sign in graph.entries:
        routing[in_idx, out_idx] = sign
    system = np.eye(n_in) - routing @ jac
    condition = np.linalg.cond(system)
    if not np.isfinite(condition) or condition > FEEDTHROUGH_CONDITION_LIMIT:
        raise EstimatorError(
            f"feed-through system is near-singular (cond={condition:.3g}); "
            "fall back to the uncorrected input error"
        )
    corrected = np.linalg.solve(system, np.asarray(du_raw.values))
    return du_raw.with_values(tuple(float(v) for v in corrected))


def lagrange_predict(samples: Sequence[tuple[float, float]], t_target: float) -> float:
    """Evaluate the Lagrange polynomial through (t, y) samples at t_target.

    The polynomial order is len(samples) - 1 and must be at least 1.  Sample
    times must be strictly increasing; spacing may be nonuniform.
    """
    if len(samples) < 2:
        raise ValueError(f"need at least 2 samples, got {len(samples)}")
    times = [t for t, _ in samples]
    for a, b in zip(times, times[1:]):
        if b <= a:
            raise ValueError(f"sample times must be strictly increasing: {a} then {b}")
    prediction = 0.0
    for j, (t_j, y_j) in enumerate(samples):
        weight = 1.0
        for l, (t_l, _) in enumerate(samples):
            if l != j:
                weight *= (t_target - t_l) / (t_j - t_l)
        prediction += y_j * weight
    return prediction


def predictor_output_error(
    samples: Sequence[tuple[float, float]], y_now: float, t_now: float, r: int
) -> float:
    """Local output error y[i] - y_pred[i] from an order-r prediction.

    Uses the r + 1 most recent history samples.  For r = 1 and uniform steps
    this reduces to the second difference y[i] - 2 y[i-1] + y[i-2].
    """
    if r < 1:
        raise ValueError(f"predictor order must be >= 1, got {r}")
    if len(samples) < r + 1:
        raise ValueError(
            f"predictor order {r} needs {r + 1} history samples, got {len(samples)}"
        )
    window = list(samples[-(r + 1):])
    return y_now - lagrange_predict(window, t_now)


def ecco_residual_power(bond: PowerBond, y: SignalVector, u_held: SignalVector) -> float:
    """Residual power of a bond: -sum_k sigma_k * y_k * u_k (W).

    ``u_held`` are the input values that were held during the step ending at
    the current synchronisation point.  Positive values mean energy is being
    erroneously added to the system, negative values mean it leaks away.
    Exact at synchronisation points: this is the instantaneous spurious
    rate, not an estimate.
    """
    total = 0.0
    for out_idx, in_idx, sigma in bond.pairs:
        total += sigma * y.values[out_idx] * u_held.values[in_idx]
    return -total


def ecco_residual_energy(delta_p: float, dt: float, m: int = 0) -> float:
    """Residual energy over one macro step: delta_p * dt / (m + 2) (J).

    ``m`` is the input extrapolation order; zero-order hold gives
    delta_p * dt / 2.
    """
    if dt <= 0:
        raise ValueError(f"step size must be positive, got {dt}")
    if m < 0:
        raise ValueError(f"extrapolation order must be >= 0, got {m}")
    return delta_p * dt / (m + 2)


def ecco_total_residual(residuals: Sequence[BondResidual]) -> float:
    """Total residual energy over bonds; energies are additive (J)."""
    return math.fsum(r.delta_e for r in residuals)


def default_error_order(kind: str, m: int = 0, feedthrough_present: bool = False) -> int:
    """Polynomial order p of an estimator's error in the macro step size.

    Input-error estimation: p = m + 1.  Predictor/corrector: p = m + 1 with
    direct feed-through present, else m + 2.  Energy residuals: p = m + 2.
    """
    if kind == "nepce":
        return m + 1
    if kind == "predictor":
        return m + 1 if feedthrough_present else m + 2
    if kind == "ecco":
        return m + 2
    raise ValueError(f"unknown estimator kind {kind!r}")


@dataclass(frozen=True)
class StepContext:
    """Signals available to an estimator at one synchronisation point.

    ``u_held`` are the inputs that were applied during the step that just
    ended; ``u_next_raw`` are the freshly routed outputs (the inputs about
    to be applied).  ``history`` contains records up to the previous
    synchronisation point.
    """

    t: float
    dt: float
    u_held: SignalVector
    y: SignalVector
    u_next_raw: SignalVector
    history: StepHistory
    residuals: tuple[BondResidual, ...] = ()


@dataclass(frozen=True)
class ErrorSample:
    """Raw local errors plus the magnitudes used for relative normalisation."""

    errors: tuple[float, ...]
    references: tuple[float, ...]
    ready: bool = True


class Estimator(abc.ABC):
    """Pure mapping from a step context to local error estimates.

    ``width`` is the number of error components produced (signals or bonds);
    ``history_need`` the number of past records required before estimates
    become available.  Until then the step is treated as error-free.
    """

    kind: str = ""
    width: int = 0
    history_need: int = 0

    @abc.abstractmethod
    def estimate(self, ctx: StepContext) -> ErrorSample:
        ...

    def _not_ready(self) -> ErrorSample:
        zeros = (0.0,) * self.width
        return ErrorSample(zeros, zeros, ready=False)


class NepceEstimator(Estimator):
    """Input-error estimator; optional feed-through correction."""

    kind = "nepce"

    def __init__(self, graph: ConnectionGraph, feedthrough: FeedthroughModel | None = None):
        self.graph = graph
        self.feedthrough = feedthrough
        self.width = graph.n_inputs

    def estimate(self, ctx: StepContext) -> ErrorSample:
        du = nepce_input_error(ctx.u_next_raw, ctx.u_held)
        if self.feedthrough is not None and self.feedthrough.available:
            du = nepce_feedthrough_correction(du, self.graph, self.feedthrough)
        references = tuple(abs(v) for v in ctx.u_next_raw.values)
        return ErrorSample(du.values, references)


class PredictorEstimator(Estimator):
    """Output-error estimator from Lagrange extrapolation of order r."""

    kind = "predictor"

    def __init__(self, n_outputs: int, order: int = 1):
        if order < 1:
            raise ValueError(f"predictor order must be >= 1, got {order}")
        self.order = order
        self.width = n_outputs
        self.history_need = order + 1

    def estimate(self, ctx: StepContext) -> ErrorSample:
        records = ctx.history.window()
        if len(records) < self.history_need:
            return self._not_ready()
        errors = []
        for k in range(self.width):
            samples = [(rec.t, rec.y.values[k]) for rec in records]
            errors.append(
                predictor_output_error(samples, ctx.y.values[k], ctx.t, self.order)
            )
        references = tuple(abs(v) for v in ctx.y.values)
        return ErrorSample(tuple(errors), references)


class EccoEstimator(Estimator):
    """Energy-residual estimator over the scenario's power bonds."""

    kind = "ecco"

    def __init__(self, n_bonds: int, m: int = 0):
        if n_bonds < 1:
            raise ValueError("energy-residual estimation needs at least one power bond")
        self.width = n_bonds
        self.m = m

    def estimate(self, ctx: StepContext) -> ErrorSample:
        if len(ctx.residuals) != self.width:
            raise EstimatorError(
                f"expected {self.width} bond residuals, got {len(ctx.residuals)}"
            )
        errors = tuple(r.delta_e for r in ctx.residuals)
        return ErrorSample(errors, (0.0,) * self.width)
