"""Built-in benchmark subsystems and their monolithic reference models.

All built-ins integrate with forward Euler micro steps and hold their inputs
constant between synchronisation points.  The monolithic models solve the
fully coupled equations with a single forward Euler solver and serve as the
reference trajectory for coupling-error measurements.
"""

from __future__ import annotations

import abc
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Sequence

from .core import Subsystem
from .errors import ConfigurationError, DivergenceError

#: Any state or output beyond this magnitude (base units) aborts a run.
DIVERGENCE_LIMIT = 1e12


def _check_finite(name: str, value: float, time: float) -> None:
    if not math.isfinite(value) or abs(value) > DIVERGENCE_LIMIT:
        raise DivergenceError(
            f"{name} diverged: value {value!r} at t={time!r}", time=time
        )


class MicroSteppedSubsystem(Subsystem):
    """Forward Euler subsystem stepped in internal micro increments.

    A macro step of length h is split into repeated micro steps of
    ``micro_dt``; the last micro step is shortened so the internal clock
    lands exactly on h.
    """

    def __init__(self, micro_dt: float):
        if micro_dt <= 0:
            raise ConfigurationError(f"micro_dt must be positive, got {micro_dt}")
        self.micro_dt = micro_dt
        self.time = 0.0
        self._u = (0.0,) * len(self.input_labels)

    def set_inputs(self, values: Sequence[float]) -> None:
        if len(values) != len(self.input_labels):
            raise ValueError(
                f"expected {len(self.input_labels)} inputs, got {len(values)}"
            )
        self._u = tuple(float(v) for v in values)

    def do_step(self, h: float) -> None:
        if h <= 0:
            raise ValueError(f"step size must be positive, got {h}")
        remaining = h
        while remaining > 0:
            delta = self.micro_dt if remaining > self.micro_dt else remaining
            self._micro_step(delta)
            self.time += delta
            remaining -= delta
        self._check_state()

    @abc.abstractmethod
    def _micro_step(self, delta: float) -> None:
        """One forward Euler update over delta seconds with held inputs."""

    def _check_state(self) -> None:
        for value in self.get_outputs():
            _check_finite(type(self).__name__, value, self.time)


class MassSubsystem(MicroSteppedSubsystem):
    """Point mass driven by an external force; outputs its velocity.

    State: velocity v (m/s) and position x (m, kept for bookkeeping).
    Input: force F (N).  Output: v (m/s).
    """

    input_labels = ("F",)
    output_labels = ("v",)
    input_units = ("N",)
    output_units = ("m/s",)

    def __init__(self, m: float = 100.0, v: float = 0.0, x: float = 0.0,
                 micro_dt: float = 1e-4):
        if m <= 0:
            raise ConfigurationError(f"mass must be positive, got {m}")
        super().__init__(micro_dt)
        self.m = m
        self.v = v
        self.x = x

    def _micro_step(self, delta: float) -> None:
        self.v += self._u[0] / self.m * delta
        self.x += self.v * delta

    def get_outputs(self) -> tuple[float, ...]:
        return (self.v,)

    def stored_energy(self) -> float:
        return 0.5 * self.m * self.v * self.v


class SpringDamperSubsystem(MicroSteppedSubsystem):
    """Linear spring with optional damper; outputs the force on the mass.

    State: extension x (m), integrated from the received velocity.
    Input: velocity v (m/s).  Output: F = -k*x - d*v (N), the force exerted
    on the attached mass.  The damper term makes the output depend directly
    on the input (direct feed-through dF/dv = -d).
    """

    input_labels = ("v",)
    output_labels = ("F",)
    input_units = ("m/s",)
    output_units = ("N",)

    def __init__(self, k: float = 1e3, d: float = 0.0, x: float = 0.0,
                 micro_dt: float = 1e-4):
        if k <= 0:
            raise ConfigurationError(f"stiffness must be positive, got {k}")
        if d < 0:
            raise ConfigurationError(f"damping must be non-negative, got {d}")
        super().__init__(micro_dt)
        self.k = k
        self.d = d
        self.x = x

    def _micro_step(self, delta: float) -> None:
        self.x += self._u[0] * delta

    def get_outputs(self) -> tuple[float, ...]:
        return (-self.k * self.x - self.d * self._u[0],)

    def feedthrough(self) -> dict[tuple[int, int], float]:
        if self.d == 0.0:
            return {}
        return {(0, 0): -self.d}

    def stored_energy(self) -> float:
        return 0.5 * self.k * self.x * self.x


class ChassisSubsystem(MicroSteppedSubsystem):
    """Quarter-car chassis mass; outputs its vertical velocity.

    Input: suspension force on the chassis (N).  Output: v_c (m/s).
    """

    input_labels = ("F_susp",)
    output_labels = ("v_c",)
    input_units = ("N",)
    output_units = ("m/s",)

    def __init__(self, m_c: float = 400.0, v_c: float = 0.0, z_c: float = 0.0,
                 micro_dt: float = 1e-4):
        if m_c <= 0:
            raise ConfigurationError(f"chassis mass must be positive, got {m_c}")
        super().__init__(micro_dt)
        self.m_c = m_c
        self.v_c = v_c
        self.z_c = z_c

    def _micro_step(self, delta: float) -> None:
        self.v_c += self._u[0] / self.m_c * delta
        self.z_c += self.v_c * delta

    def get_outputs(self) -> tuple[float, ...]:
        return (self.v_c,)

    def stored_energy(self) -> float:
        return 0.5 * self.m_c * self.v_c * self.v_c


class SuspensionWheelSubsystem(MicroSteppedSubsystem):
    """Quarter-car suspension and wheel; outputs the force on the chassis.

    The chassis position is integrated internally (state z_cs) from the
    received chassis velocity, so the coupling needs only a force-velocity
    pair.  Input: v_c (m/s).  Output:
    F_susp = k_c*(z_w - z_cs) + d_c*(v_w - v_c) (N).
    """

    input_labels = ("v_c",)
    output_labels = ("F_susp",)
    input_units = ("m/s",)
    output_units = ("N",)

    def __init__(self, k_c: float = 1.5e4, d_c: float = 1e3, m_w: float = 40.0,
                 k_w: float = 1.5e5, z_cs: float = 0.0, z_w: float = 0.0,
                 v_w: float = 0.0, micro_dt: float = 1e-4):
        for name, value in (("k_c", k_c), ("d_c", d_c), ("m_w", m_w), ("k_w", k_w)):
            if value <= 0:
                raise ConfigurationError(f"{name} must be positive, got {value}")
        super().__init__(micro_dt)
        self.k_c = k_c
        self.d_c = d_c
        self.m_w = m_w
        self.k_w = k_w
        self.z_cs = z_cs
        self.z_w = z_w
        self.v_w = v_w

    def _micro_step(self, delta: float) -> None:
        u_v = self._u[0]
        self.z_cs += u_v * delta
        f_susp = self.k_c * (self.z_w - self.z_cs) + self.d_c * (self.v_w - u_v)
        self.v_w += (-f_susp - self.k_w * self.z_w) / self.m_w * delta
        self.z_w += self.v_w * delta

    def get_outputs(self) -> tuple[float, ...]:
        f_susp = self.k_c * (self.z_w - self.z_cs) + self.d_c * (self.v_w - self._u[0])
        return (f_susp,)

    def feedthrough(self) -> dict[tuple[int, int], float]:
        return {(0, 0): -self.d_c}

    def stored_energy(self) -> float:
        return (0.5 * self.m_w * self.v_w * self.v_w
                + 0.5 * self.k_c * (self.z_w - self.z_cs) ** 2
                + 0.5 * self.k_w * self.z_w * self.z_w)


class MonolithicModel(abc.ABC):
    """Single-solver model of a fully coupled system.

    Uses plain forward Euler: all derivatives are evaluated at the old state
    and every state variable is updated simultaneously.
    """

    output_labels: tuple[str, ...] = ()
    output_units: tuple[str, ...] = ()

    @abc.abstractmethod
    def step(self, delta: float) -> None:
        """One forward Euler update over delta seconds."""

    @abc.abstractmethod
    def get_outputs(self) -> tuple[float, ...]:
        """Instantaneous outputs at the current state."""

    @abc.abstractmethod
    def total_energy(self) -> float:
        """Total stored energy (J) at the current state."""


class MonolithicOscillator(MonolithicModel):
    """Mass-spring(-damper) oscillator solved in one state space."""

    output_labels = ("v", "F")
    output_units = ("m/s", "N")

    def __init__(self, m: float = 100.0, k: float = 1e3, d: float = 0.0,
                 x: float = 1.0, v: float = 0.0):
        self.m = m
        self.k = k
        self.d = d
        self.x = x
        self.v = v

    def _force(self) -> float:
        return -self.k * self.x - self.d * self.v

    def step(self, delta: float) -> None:
        f = self._force()
        x_new = self.x + self.v * delta
        v_new = self.v + f / self.m * delta
        self.x = x_new
        self.v = v_new

    def get_outputs(self) -> tuple[float, ...]:
        return (self.v, self._force())

    def total_energy(self) -> float:
        return 0.5 * self.m * self.v * self.v + 0.5 * self.k * self.x * self.x


class MonolithicQuarterCar(MonolithicModel):
    """Chassis-suspension-wheel system solved in one state space."""

    output_labels = ("v_c", "F_susp")
    output_units = ("m/s", "N")

    def __init__(self, m_c: float = 400.0, m_w: float = 40.0, k_c: float = 1.5e4,
                 k_w: float = 1.5e5, d_c: float = 1e3, z_c: float = 0.1,
                 v_c: float = 0.0, z_w: float = 0.0, v_w: float = 0.0):
        self.m_c = m_c
        self.m_w = m_w
        self.k_c = k_c
        self.k_w = k_w
        self.d_c = d_c
        self.z_c = z_c
        self.v_c = v_c
        self.z_w = z_w
        self.v_w = v_w

    def _force(self) -> float:
        return self.k_c * (self.z_w - self.z_c) + self.d_c * (self.v_w - self.v_c)

    def step(self, delta: float) -> None:
        f = self._force()
        a_c = f / self.m_c
        a_w = (-f - self.k_w * self.z_w) / self.m_w
        z_c_new = self.z_c + self.v_c * delta
        v_c_new = self.v_c + a_c * delta
        z_w_new = self.z_w + self.v_w * delta
        v_w_new = self.v_w + a_w * delta
        self.z_c, self.v_c, self.z_w, self.v_w = z_c_new, v_c_new, z_w_new, v_w_new

    def get_outputs(self) -> tuple[float, ...]:
        return (self.v_c, self._force())

    def total_energy(self) -> float:
        return (0.5 * self.m_c * self.v_c * self.v_c
                + 0.5 * self.m_w * self.v_w * self.v_w
                + 0.5 * self.k_c * (self.z_w - self.z_c) ** 2
                + 0.5 * self.k_w * self.z_w * self.z_w)


def total_energy(parts) -> float:
    """Sum of stored energies over subsystems or monolithic models (J)."""
    total = 0.0
    for part in parts:
        if isinstance(part, MonolithicModel):
            total += part.total_energy()
        else:
            energy = part.stored_energy()
            if energy is None:
                raise ValueError(f"{type(part).__name__} does not track energy")
            total += energy
    return total


@dataclass
class MonolithicSeries:
    """Sampled monolithic trajectory used as the coupling-error oracle."""

    dt: float
    times: list[float] = field(default_factory=list)
    outputs: list[tuple[float, ...]] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)

    def index_at(self, t: float, tol: float | None = None) -> int:
        """Index of the sample closest to t; errors beyond tol (default dt)."""
        tol = self.dt if tol is None else tol
        pos = bisect_left(self.times, t)
        best = None
        for idx in (pos - 1, pos, pos + 1):
            if 0 <= idx < len(self.times):
                if best is None or abs(self.times[idx] - t) < abs(self.times[best] - t):
                    best = idx
        if best is None or abs(self.times[best] - t) > tol:
            raise ValueError(f"no monolithic sample within {tol} of t={t}")
        return best


def run_monolithic(model: MonolithicModel, t_stop: float, dt: float,
                   t_start: float = 0.0,
                   sample_times: Sequence[float] | None = None) -> MonolithicSeries:
    """Run a monolithic model to t_stop, sampling every solver step.

    When sample_times is given, solver steps are shortened as needed so the
    trajectory lands exactly on each requested time (for oracle comparison
    at co-simulation synchronisation points).
    """
    if dt <= 0:
        raise ConfigurationError(f"solver step must be positive, got {dt}")
    if t_stop < t_start:
        raise ConfigurationError(f"t_stop {t_stop} before t_start {t_start}")
    targets: list[float] = []
    if sample_times is not None:
        targets = sorted(t for t in sample_times if t_start < t <= t_stop)
    series = MonolithicSeries(dt=dt)

    def record(t: float) -> None:
        outputs = model.get_outputs()
        for value in outputs:
            _check_finite(type(model).__name__, value, t)
        series.times.append(t)
        series.outputs.append(outputs)
        series.energies.append(model.total_energy())

    t = t_start
    record(t)
    next_target = 0
    while t < t_stop:
        t_next = min(t + dt, t_stop)
        while next_target < len(targets) and targets[next_target] <= t:
            next_target += 1
        if next_target < len(targets) and targets[next_target] < t_next:
            t_next = targets[next_target]
        model.step(t_next - t)
        t = t_next
        record(t)
    return series
