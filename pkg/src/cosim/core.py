"""Domain types shared by all modules.

Signal vectors, the output-to-input connection graph, power bonds, the
minimal subsystem contract (set inputs / advance / get outputs) and the
bounded history of synchronisation points.
"""

from __future__ import annotations

import abc
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .errors import ConfigurationError


@dataclass(frozen=True)
class SignalVector:
    """Ordered real-valued coupling variables with unit metadata.

    The length is fixed for the lifetime of a simulation.  Values are stored
    as a plain tuple so instances are immutable and hashable.  Units are
    labels only; no unit algebra is performed.
    """

    values: tuple[float, ...]
    labels: tuple[str, ...] = ()
    units: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.labels and len(self.labels) != len(self.values):
            raise ConfigurationError(
                f"labels length {len(self.labels)} != values length {len(self.values)}"
            )
        if self.units and len(self.units) != len(self.values):
            raise ConfigurationError(
                f"units length {len(self.units)} != values length {len(self.values)}"
            )

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index: int) -> float:
        return self.values[index]

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.values)

    def with_values(self, values: Sequence[float]) -> "SignalVector":
        """New vector with the same labels/units and different values."""
        return SignalVector(tuple(values), self.labels, self.units)


@dataclass(frozen=True)
class ConnectionGraph:
    """Sparse signed mapping from outputs to inputs, u_j = sign * y_i.

    Each entry is (output index, input index, sign) with sign in {+1, -1}.
    Every input must be driven by exactly one output; one output may drive
    any number of inputs.
    """

    entries: tuple[tuple[int, int, int], ...]
    n_inputs: int
    n_outputs: int

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "entries", tuple((int(o), int(i), int(s)) for o, i, s in self.entries)
        )


def validate_graph(graph: ConnectionGraph, n_in: int, n_out: int) -> list[str]:
    """Check graph invariants; returns all violations (empty list means ok)."""
    violations: list[str] = []
    if graph.n_inputs != n_in:
        violations.append(f"graph declares {graph.n_inputs} inputs, expected {n_in}")
    if graph.n_outputs != n_out:
        violations.append(f"graph declares {graph.n_outputs} outputs, expected {n_out}")
    seen: dict[int, int] = {}
    for out_idx, in_idx, sign in graph.entries:
        if not 0 <= out_idx < n_out:
            violations.append(f"output index {out_idx} out of range (n_out={n_out})")
        if not 0 <= in_idx < n_in:
            violations.append(f"input index {in_idx} out of range (n_in={n_in})")
        if sign not in (1, -1):
            violations.append(f"sign {sign} for input {in_idx} must be +1 or -1")
        if in_idx in seen:
            violations.append(f"duplicate driver for input {in_idx}")
        seen[in_idx] = out_idx
    for j in range(n_in):
        if j not in seen:
            violations.append(f"input {j} has no driver")
    return violations


def apply_connections(graph: ConnectionGraph, y: SignalVector) -> SignalVector:
    """Route outputs to inputs: u_j = sign * y_i per graph entry."""
    if len(y) != graph.n_outputs:
        raise ConfigurationError(
            f"output vector length {len(y)} != graph n_outputs {graph.n_outputs}"
        )
    u = [0.0] * graph.n_inputs
    filled = [False] * graph.n_inputs
    for out_idx, in_idx, sign in graph.entries:
        if not 0 <= out_idx < graph.n_outputs or not 0 <= in_idx < graph.n_inputs:
            raise ConfigurationError(
                f"connection ({out_idx} -> {in_idx}) out of range"
            )
        if filled[in_idx]:
            raise ConfigurationError(f"duplicate driver for input {in_idx}")
        u[in_idx] = sign * y.values[out_idx]
        filled[in_idx] = True
    if not all(filled):
        missing = [j for j, f in enumerate(filled) if not f]
        raise ConfigurationError(f"inputs without driver: {missing}")
    return SignalVector(tuple(u))


@dataclass(frozen=True)
class PowerBond:
    """Oriented pairing of (output, input) signal pairs whose products are powers.

    Each pair (output index, input index, orientation) refers to one side of
    the bond: the output and the input exposed by the same subsystem at that
    port.  Orientations are chosen so that sum_k sigma_k * y_k * u_k vanishes
    under exact instantaneous coupling of a physically consistent bond.
    """

    pairs: tuple[tuple[int, int, int], ...]
    label: str = "bond"

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "pairs", tuple((int(o), int(i), int(s)) for o, i, s in self.pairs)
        )
        for _, _, sigma in self.pairs:
            if sigma not in (1, -1):
                raise ConfigurationError(f"bond orientation {sigma} must be +1 or -1")


class Subsystem(abc.ABC):
    """Minimal behavioural contract for a co-simulated subsystem.

    Three operations: accept input values, advance internal time by a given
    positive duration, report output values.  Advancing by h then h' must be
    equivalent to advancing by h + h'; outputs reported after a step
    correspond to the end time of that step.  Inputs are held constant over
    a step (zero-order hold, extrapolation order m = 0 for the built-ins).
    """

    input_labels: tuple[str, ...] = ()
    output_labels: tuple[str, ...] = ()
    input_units: tuple[str, ...] = ()
    output_units: tuple[str, ...] = ()
    extrapolation_order: int = 0

    @property
    def n_inputs(self) -> int:
        return len(self.input_labels)

    @property
    def n_outputs(self) -> int:
        return len(self.output_labels)

    @abc.abstractmethod
    def set_inputs(self, values: Sequence[float]) -> None:
        """Set the values of the input variables."""

    @abc.abstractmethod
    def do_step(self, h: float) -> None:
        """Advance internal time by h > 0 seconds."""

    @abc.abstractmethod
    def get_outputs(self) -> tuple[float, ...]:
        """Report output values at the current internal time."""

    def feedthrough(self) -> dict[tuple[int, int], float]:
        """Interface Jacobian entries (local output, local input) -> dy/du.

        Empty when no output depends algebraically on an input.
        """
        return {}

    def stored_energy(self) -> float | None:
        """Energy stored in this subsystem (J), or None if not tracked."""
        return None


@dataclass
class StepRecord:
    """One synchronisation point of a co-simulation run.

    ``dt`` is the size of the macro step *starting* at ``t`` (0.0 for the
    final record).  ``u`` holds the inputs applied on [t, t + dt); the inputs
    held during the step that *ended* at ``t`` are the previous record's
    ``u``.  ``eps`` and the bond residuals refer to the step that ended at
    ``t``.
    """

    t: float
    dt: float
    u: SignalVector
    y: SignalVector
    eps: float = 0.0
    residuals: tuple = ()
    energy: float = math.nan
    diverged: bool = False


class StepHistory:
    """Bounded, strictly time-ordered record of past synchronisation points.

    Single-writer (the master loop); capacity is fixed at construction and
    must cover the largest predictor order in use plus one.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigurationError(f"history capacity {capacity} must be >= 1")
        self.capacity = capacity
        self._records: deque[StepRecord] = deque(maxlen=capacity)

    def push(self, record: StepRecord) -> None:
        if self._records and record.t <= self._records[-1].t:
            raise ConfigurationError(
                f"history times must be strictly increasing: {record.t} after {self._records[-1].t}"
            )
        self._records.append(record)

    def window(self) -> tuple[StepRecord, ...]:
        """Most recent records, oldest first."""
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)
