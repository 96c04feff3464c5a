"""Tolerance normalisation and aggregation into a scalar error indicator.

Individual local errors are first normalised with per-signal absolute and
relative tolerances, eps_k = err_k / (abs_k + rel_k * |ref_k|), then reduced
to one non-negative scalar.  The controller targets indicator values near 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import ConfigurationError

#: Indicator values below this are clamped before the controller's logarithm,
#: so error-free and warm-up steps do not produce -inf control errors.
EPSILON_FLOOR = 1e-12


class AggregationKind(str, Enum):
    RMSE = "rmse"
    MAE = "mae"
    MAX = "max"


@dataclass(frozen=True)
class ToleranceSet:
    """Per-signal absolute (signal units) and relative (dimensionless) tolerances."""

    absolute: tuple[float, ...]
    relative: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "absolute", tuple(float(v) for v in self.absolute))
        object.__setattr__(self, "relative", tuple(float(v) for v in self.relative))
        if len(self.absolute) != len(self.relative):
            raise ConfigurationError(
                f"absolute / relative tolerance counts differ: "
                f"{len(self.absolute)} vs {len(self.relative)}"
            )
        for k, (abs_k, rel_k) in enumerate(zip(self.absolute, self.relative)):
            if abs_k < 0 or rel_k < 0:
                raise ConfigurationError(f"tolerances for signal {k} must be >= 0")
            if abs_k + rel_k == 0:
                raise ConfigurationError(
                    f"signal {k} has zero absolute and relative tolerance"
                )

    def __len__(self) -> int:
        return len(self.absolute)


def scaled_tolerances(sigma: float, typical_magnitudes: Sequence[float]) -> ToleranceSet:
    """Tolerances from one relative tolerance and typical signal magnitudes.

    Uses abs_k = sigma * typical_k and rel_k = sigma for every signal, so the
    normalised error becomes err_k / (sigma * (typical_k + |value_k|)).
    """
    if sigma <= 0:
        raise ConfigurationError(f"relative tolerance must be positive, got {sigma}")
    for k, u_bar in enumerate(typical_magnitudes):
        if u_bar <= 0:
            raise ConfigurationError(
                f"typical magnitude for signal {k} must be positive, got {u_bar}"
            )
    absolute = tuple(sigma * u_bar for u_bar in typical_magnitudes)
    relative = (float(sigma),) * len(absolute)
    return ToleranceSet(absolute, relative)


def normalize(errors: Sequence[float], references: Sequence[float],
              tol: ToleranceSet) -> tuple[float, ...]:
    """Sign-preserving normalised errors err_k / (abs_k + rel_k * |ref_k|)."""
    if not len(errors) == len(references) == len(tol):
        raise ValueError(
            f"length mismatch: {len(errors)} errors, {len(references)} references, "
            f"{len(tol)} tolerances"
        )
    return tuple(
        err / (abs_k + rel_k * abs(ref))
        for err, ref, abs_k, rel_k in zip(errors, references, tol.absolute, tol.relative)
    )


def aggregate(values: Sequence[float], kind: AggregationKind) -> float:
    """Reduce normalised errors to one non-negative scalar."""
    if len(values) == 0:
        raise ValueError("cannot aggregate an empty error vector")
    if kind is AggregationKind.RMSE:
        return math.sqrt(math.fsum(v * v for v in values) / len(values))
    if kind is AggregationKind.MAE:
        return math.fsum(abs(v) for v in values) / len(values)
    if kind is AggregationKind.MAX:
        # maximum of magnitudes, so a negative error never ranks below zero
        return max(abs(v) for v in values)
    raise ValueError(f"unknown aggregation kind {kind!r}")
