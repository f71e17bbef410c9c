"""Delayed within-host viral dynamics with mitotic transmission and saturating incidence."""
from .analysis import (
    Outcome,
    PermanenceBounds,
    TrajectoryVerdict,
    check_permanence,
    detect_outcome,
    permanence_bounds,
)
from .dde import History, Trajectory, dense_eval, integrate
from .equilibria import (
    Equilibrium,
    EquilibriumKind,
    NoInfectedEquilibrium,
    solve_infected,
    solve_infection_free,
)
from .errors import (
    BlowUpError,
    BracketError,
    ContractError,
    InconsistencyError,
    InvalidInputError,
    RangeError,
    ViraldynError,
)
from .linearization import (
    CharCoeffs,
    Classification,
    char_coeffs,
    classify,
    critical_delay,
    delay_length_estimate,
)
from .model import DelayedInput, ModelParams, State, eval_rhs, infection_free_t0, preset, r0
from .sensitivity import SensitivityReport, full_report, sensitivity_index

__version__ = "0.1.0"
