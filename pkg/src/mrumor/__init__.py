"""Analysis and simulation of the m-rumor spreading model."""

from .analytic import (
    FixedPointReport,
    MapKind,
    Stability,
    Trajectory,
    conversion_probability,
    drift,
    expectation_trajectory,
    expected_next,
    mean_field_fixed_points,
    mean_field_map,
)
from .core import (
    ModelParams,
    OutcomeKind,
    ParamError,
    Population,
    RunOutcome,
    initial_population,
    validate,
)
from .sim import EnsembleStats, RoomCensus, assign_rooms, ensemble, run, step

__version__ = "0.1.0"
