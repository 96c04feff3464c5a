"""PI macro step size controller with logarithmic integral state.

The control error is e = -log(eps).  Each call integrates the error,
forms the log of a candidate step size, applies absolute and rate-of-change
clamps, and then corrects the integral state for whatever clamping actually
happened (anti-windup), so the state always reflects the applied step:

    e   = -log(eps)
    I'  = I + k_i * e
    l   = k_p * e + I'
    dt* = alpha * exp(l)
    dt  = min(max(dt*, dt_min, theta_min * dt_old), dt_max, theta_max * dt_old)
    I   = I' + log(dt / alpha) - l

The safety factor alpha biases the candidate before clamping but is removed
again in the anti-windup update so the bias does not accumulate in I; with
the default alpha = 1 the update is the plain published form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import ConfigurationError, ControllerError


@dataclass
class ControllerConfig:
    """Gains, clamps and start value for the step size controller.

    Gains default to k_p = 0.4 / p and k_i = 0.3 / p for error order p.
    Rate limits theta bound the per-step change ratio; dt_min / dt_max bound
    the step itself.  The first step uses dt_start (conservatively dt_min).
    """

    order: int = 1
    kp: float | None = None
    ki: float | None = None
    dt_min: float = 1e-4
    dt_max: float = 1e-2
    theta_min: float = 0.2
    theta_max: float = 1.5
    safety_factor: float = 1.0
    dt_start: float | None = None

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ConfigurationError(f"error order must be >= 1, got {self.order}")
        if self.kp is None:
            self.kp = 0.4 / self.order
        if self.ki is None:
            self.ki = 0.3 / self.order
        if self.dt_start is None:
            self.dt_start = self.dt_min
        if not 0 < self.dt_min <= self.dt_start <= self.dt_max:
            raise ConfigurationError(
                f"need 0 < dt_min <= dt_start <= dt_max, got "
                f"({self.dt_min}, {self.dt_start}, {self.dt_max})"
            )
        if not 0 < self.theta_min < 1 < self.theta_max:
            raise ConfigurationError(
                f"need 0 < theta_min < 1 < theta_max, got "
                f"({self.theta_min}, {self.theta_max})"
            )
        if self.kp < 0:
            raise ConfigurationError(f"kp must be >= 0, got {self.kp}")
        if self.ki <= 0:
            raise ConfigurationError(f"ki must be > 0, got {self.ki}")
        if not 0 < self.safety_factor <= 1:
            raise ConfigurationError(
                f"safety factor must be in (0, 1], got {self.safety_factor}"
            )

    @classmethod
    def integral_only(cls, order: int = 1, **kwargs) -> "ControllerConfig":
        """Pure integrating controller preset: k_p = 0, k_i = 1 / p."""
        return cls(order=order, kp=0.0, ki=1.0 / order, **kwargs)


@dataclass
class ControllerState:
    """Log-space integral state plus the last applied step and control error."""

    integral: float
    last_dt: float
    last_error: float = 0.0


def reset(config: ControllerConfig) -> ControllerState:
    """Fresh state for a run.

    The integral starts at log(dt_start) rather than the literal zero of the
    published pseudocode, which presumes a unit time scale; this makes the
    first eps = 1 call neutral regardless of the time unit.
    """
    return ControllerState(integral=math.log(config.dt_start), last_dt=config.dt_start)


def compute_next_step_size(state: ControllerState, config: ControllerConfig,
                           dt_old: float, eps: float) -> float:
    """Next macro step size from the indicator value of the last step.

    Mutates ``state`` so the anti-windup identity holds after every call.
    ``eps`` must be positive and finite (callers floor warm-up zeros first).
    """
    if not math.isfinite(eps) or eps <= 0:
        raise ControllerError(f"error indicator must be positive and finite, got {eps!r}")
    if dt_old <= 0:
        raise ControllerError(f"previous step size must be positive, got {dt_old!r}")
    e = -math.log(eps)
    integral = state.integral + config.ki * e
    log_candidate = config.kp * e + integral
    dt_candidate = config.safety_factor * math.exp(log_candidate)
    dt = min(
        max(dt_candidate, config.dt_min, config.theta_min * dt_old),
        config.dt_max,
        config.theta_max * dt_old,
    )
    if dt < config.dt_min:
        # contradictory clamps (theta_max * dt_old < dt_min): hard bound wins
        warnings.warn(
            f"rate limit theta_max * dt_old = {dt:.3g} is below dt_min = "
            f"{config.dt_min:.3g}; applying dt_min",
            stacklevel=2,
        )
        dt = config.dt_min
    state.integral = integral + math.log(dt / config.safety_factor) - log_candidate
    state.last_dt = dt
    state.last_error = e
    return dt


def compact_reference(dt_prev: float, eps_now: float, eps_prev: float,
                      config: ControllerConfig) -> float:
    """Unclamped candidate step in closed form, used as an independent oracle.

    dt' = eps_now^(-kp - ki) * eps_prev^(kp) * dt_prev
    """
    if eps_now <= 0 or eps_prev <= 0:
        raise ControllerError("error indicators must be positive")
    return eps_now ** (-config.kp - config.ki) * eps_prev ** config.kp * dt_prev


class StepSizeController:
    """Stateful wrapper pairing a config with its evolving state."""

    def __init__(self, config: ControllerConfig):
        self.config = config
        self.state = reset(config)

    def reset(self) -> ControllerState:
        self.state = reset(self.config)
        return self.state

    def compute_next_step_size(self, dt_old: float, eps: float) -> float:
        return compute_next_step_size(self.state, self.config, dt_old, eps)
