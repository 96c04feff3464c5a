"""Co-simulation master algorithms with minimal subsystem interfaces.

Couples black-box subsystems through set-inputs / step / get-outputs,
estimates coupling errors without rollback (input errors, predicted-output
errors, power-bond energy residuals) and adapts the macro step size with a
PI controller.
"""

from .controller import (
    ControllerConfig,
    ControllerState,
    StepSizeController,
    compact_reference,
    compute_next_step_size,
    reset,
)
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
from .errors import (
    ConfigurationError,
    ControllerError,
    CosimError,
    DivergenceError,
    EstimatorError,
)
from .estimators import (
    BondResidual,
    EccoEstimator,
    Estimator,
    FeedthroughModel,
    NepceEstimator,
    PredictorEstimator,
    StepContext,
    default_error_order,
    ecco_residual_energy,
    ecco_residual_power,
    ecco_total_residual,
    lagrange_predict,
    nepce_feedthrough_correction,
    nepce_input_error,
    predictor_output_error,
)
from .indicator import (
    EPSILON_FLOOR,
    AggregationKind,
    ToleranceSet,
    aggregate,
    normalize,
    scaled_tolerances,
)
from .master import (
    ComparisonSeries,
    Scenario,
    compare_with_reference,
    run_adaptive,
    run_fixed,
)
from .subsystems import (
    ChassisSubsystem,
    MassSubsystem,
    MonolithicOscillator,
    MonolithicQuarterCar,
    MonolithicSeries,
    SpringDamperSubsystem,
    SuspensionWheelSubsystem,
    run_monolithic,
    total_energy,
)

__version__ = "0.1.0"
