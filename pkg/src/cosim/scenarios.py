"""Built-in benchmark scenarios and their monolithic counterparts.

Two systems are provided.  The mass-spring oscillator: a 100 kg mass and a
1e3 N/m spring (40 N s/m damper in the damped variant), released from 1 m
displacement so 500 J is stored in the spring.  The quarter car: a 400 kg
chassis coupled by a force-velocity pair to a suspension (1.5e4 N/m,
1e3 N s/m) and wheel (40 kg on a 1.5e5 N/m tyre spring), released from
0.1 m chassis displacement.

Both use a crossed two-signal connection graph (all signs +1) and a single
force-velocity power bond.  The bond orientations are fixed so that the
residual power is positive exactly when the coupling adds energy.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import ConnectionGraph, PowerBond
from .subsystems import (
    ChassisSubsystem,
    MassSubsystem,
    MonolithicOscillator,
    MonolithicQuarterCar,
    SpringDamperSubsystem,
    SuspensionWheelSubsystem,
)


@dataclass(frozen=True)
class OscillatorParams:
    m: float = 100.0
    k: float = 1e3
    d: float = 0.0
    x0: float = 1.0
    v0: float = 0.0
    micro_dt: float = 1e-4


@dataclass(frozen=True)
class QuarterCarParams:
    m_c: float = 400.0
    m_w: float = 40.0
    k_c: float = 1.5e4
    k_w: float = 1.5e5
    d_c: float = 1e3
    z_c0: float = 0.1
    micro_dt: float = 1e-4


# Signal layout for both systems: outputs y = (velocity, force) and inputs
# u = (force, velocity), wired crosswise.  With the forces defined as acting
# *on* the mass-like subsystem, both graph signs are +1.  On the bond, the
# velocity-output side carries orientation -1 and the force-output side +1:
# the residual power then equals y_v * u_F - y_F * u_v, which vanishes under
# exact coupling and is positive when spurious energy enters the system.
_CROSSED_GRAPH = ConnectionGraph(entries=((1, 0, 1), (0, 1, 1)), n_inputs=2, n_outputs=2)


def oscillator_subsystems(params: OscillatorParams) -> tuple[MassSubsystem, SpringDamperSubsystem]:
    mass = MassSubsystem(m=params.m, v=params.v0, x=params.x0, micro_dt=params.micro_dt)
    spring = SpringDamperSubsystem(k=params.k, d=params.d, x=params.x0,
                                   micro_dt=params.micro_dt)
    return mass, spring


def oscillator_graph() -> ConnectionGraph:
    return _CROSSED_GRAPH


def oscillator_bond() -> PowerBond:
    return PowerBond(pairs=((0, 0, -1), (1, 1, 1)), label="mass_spring")


def oscillator_monolithic(params: OscillatorParams) -> MonolithicOscillator:
    return MonolithicOscillator(m=params.m, k=params.k, d=params.d,
                                x=params.x0, v=params.v0)


def quarter_car_subsystems(
    params: QuarterCarParams,
) -> tuple[ChassisSubsystem, SuspensionWheelSubsystem]:
    chassis = ChassisSubsystem(m_c=params.m_c, v_c=0.0, z_c=params.z_c0,
                               micro_dt=params.micro_dt)
    suspension = SuspensionWheelSubsystem(
        k_c=params.k_c, d_c=params.d_c, m_w=params.m_w, k_w=params.k_w,
        z_cs=params.z_c0, z_w=0.0, v_w=0.0, micro_dt=params.micro_dt,
    )
    return chassis, suspension


def quarter_car_graph() -> ConnectionGraph:
    return _CROSSED_GRAPH


def quarter_car_bond() -> PowerBond:
    return PowerBond(pairs=((0, 0, -1), (1, 1, 1)), label="chassis_suspension")


def quarter_car_monolithic(params: QuarterCarParams) -> MonolithicQuarterCar:
    return MonolithicQuarterCar(m_c=params.m_c, m_w=params.m_w, k_c=params.k_c,
                                k_w=params.k_w, d_c=params.d_c, z_c=params.z_c0)
