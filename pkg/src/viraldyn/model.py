"""Delayed hepatitis model with mitotic transmission and saturating incidence.

State variables are uninfected hepatocytes ``T``, infected hepatocytes ``I``
and free virions ``V``.  The vector field is

    T' = s - d T + a T (1 - (T + I)/Tmax) - b T V / (1 + alpha V)
    I' = b T(t-tau) V(t-tau) / (1 + alpha V(t-tau)) + a I (1 - (T + I)/Tmax) - mu I
    V' = p I - c V

Units are whatever the caller uses; nothing here converts them.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import InvalidInputError

logger = logging.getLogger(__name__)

PARAM_NAMES = ("s", "d", "a", "t_max", "b", "alpha", "mu", "p", "c", "tau")


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """The nine model constants plus the intracellular delay.

    Attributes
    ----------
    s : recruitment rate of uninfected cells (cells / volume / day)
    d : natural death rate of uninfected cells (1 / day)
    a : maximum mitotic proliferation rate (1 / day)
    t_max : carrying capacity of the liver (cells / volume)
    b : infection rate constant (volume / virion / day)
    alpha : saturation constant of the incidence (volume / virion)
    mu : death rate of infected cells (1 / day)
    p : virion production per infected cell (virions / cell / day)
    c : virion clearance rate (1 / day)
    tau : intracellular delay (day)
    """

    s: float
    d: float
    a: float
    t_max: float
    b: float
    alpha: float
    mu: float
    p: float
    c: float
    tau: float = 0.0

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise InvalidInputError(f"parameter {name!r} is not a number: {value!r}") from None
            if not math.isfinite(value):
                raise InvalidInputError(f"parameter {name!r} is not finite: {value!r}")
            if name in ("tau", "alpha"):
                if value < 0:
                    raise InvalidInputError(f"parameter {name!r} must be >= 0, got {value!r}")
            elif value <= 0:
                raise InvalidInputError(f"parameter {name!r} must be > 0, got {value!r}")
            object.__setattr__(self, name, value)
        if self.d > self.mu:
            logger.warning(
                "d=%g exceeds mu=%g; the permanence bounds assume d <= mu", self.d, self.mu
            )

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def rates(self) -> np.ndarray:
        """Model constants (without tau) packed for the compiled kernels."""
        return np.array([getattr(self, name) for name in PARAM_NAMES[:-1]], dtype=np.float64)


class State(NamedTuple):
    t_cells: float
    i_cells: float
    virions: float


class DelayedInput(NamedTuple):
    """Current state and the state one delay earlier."""

    current: State
    lagged: State


@njit(cache=True, nogil=True)
def rhs_components(prm, T, I, V, T_lag, V_lag):
    s, d, a, t_max, b, alpha, mu, p, c = prm[0], prm[1], prm[2], prm[3], prm[4], prm[5], prm[6], prm[7], prm[8]
    crowding = 1.0 - (T + I) / t_max
    dT = s - d * T + a * T * crowding - b * T * V / (1.0 + alpha * V)
    dI = b * T_lag * V_lag / (1.0 + alpha * V_lag) + a * I * crowding - mu * I
    dV = p * I - c * V
    return dT, dI, dV


def _as_state(x, what):
    try:
        st = State(*(float(v) for v in x))
    except (TypeError, ValueError):
        raise InvalidInputError(f"{what} must be a (T, I, V) triple, got {x!r}") from None
    if not all(math.isfinite(v) for v in st):
        raise InvalidInputError(f"{what} has non-finite components: {st}")
    return st


def eval_rhs(params: ModelParams, inp: DelayedInput) -> np.ndarray:
    """Rate of change ``(dT/dt, dI/dt, dV/dt)`` for a current and lagged state."""
    cur = _as_state(inp[0], "current state")
    lag = _as_state(inp[1], "lagged state")
    return np.array(rhs_components(params.rates(), cur[0], cur[1], cur[2], lag[0], lag[2]))


def rhs_scale(params: ModelParams, state) -> np.ndarray:
    """Per-component sum of absolute term magnitudes of the vector field at a
    constant state; used to turn RHS residuals into relative numbers."""
    T, I, V = (float(x) for x in state)
    pr = params
    crowd = abs(pr.a * T * (1.0 - (T + I) / pr.t_max))
    inf = pr.b * T * V / (1.0 + pr.alpha * V)
    return np.array([
        pr.s + pr.d * T + crowd + inf,
        inf + abs(pr.a * I * (1.0 - (T + I) / pr.t_max)) + pr.mu * I,
        pr.p * I + pr.c * V,
    ])


def relative_residual(params: ModelParams, state) -> float:
    st = _as_state(state, "state")
    r = np.abs(eval_rhs(params, DelayedInput(st, st)))
    scale = rhs_scale(params, st)
    scale[scale == 0.0] = 1.0
    return float(np.max(r / scale))


def positive_quadratic_root(qa: float, qb: float, qc: float) -> float:
    """Positive root of ``qa x^2 + qb x + qc`` for ``qa > 0 > qc``.

    Written in the cancellation-free form for either sign of ``qb``.
    """
    disc = math.sqrt(qb * qb - 4.0 * qa * qc)
    if qb <= 0.0:
        return (-qb + disc) / (2.0 * qa)
    return (-2.0 * qc) / (qb + disc)


def infection_free_t0(params: ModelParams) -> float:
    """Uninfected-cell level T0 at the infection-free equilibrium.

    Positive root of ``s - d T + a T (1 - T/Tmax) = 0``.
    """
    return positive_quadratic_root(params.a / params.t_max, params.d - params.a, -params.s)


def infection_ratio(params: ModelParams, t_cells: float, i_cells: float) -> float:
    # Ratio of gains to losses of infected cells at a quasi-steady virion level V = pI/c.
    b_eff = params.b * params.p / params.c
    alpha_eff = params.alpha * params.p / params.c
    return (b_eff * t_cells / (1.0 + alpha_eff * i_cells)
            + params.a * (1.0 - (t_cells + i_cells) / params.t_max)) / params.mu


def r0(params: ModelParams) -> float:
    """Basic reproduction number ``(1/mu) [b p T0 / c + a (1 - T0/Tmax)]``."""
    return infection_ratio(params, infection_free_t0(params), 0.0)


# --- parameter files -------------------------------------------------------

def parse_params(text: str, source: str = "<string>") -> ModelParams:
    """Parse ``name = value`` lines (``#`` starts a comment).

    Every key in ``PARAM_NAMES`` except ``tau`` is required; ``tau`` defaults to 0.
    Unknown or repeated keys are rejected.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{source}:{lineno}: expected 'name = value', got {raw!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in PARAM_NAMES:
            raise InvalidInputError(f"{source}:{lineno}: unknown parameter {key!r}")
        if key in values:
            raise InvalidInputError(f"{source}:{lineno}: duplicate parameter {key!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise InvalidInputError(f"{source}:{lineno}: bad value for {key!r}: {val!r}") from None
    missing = [k for k in PARAM_NAMES[:-1] if k not in values]
    if missing:
        raise InvalidInputError(f"{source}: missing parameters {', '.join(missing)}")
    return ModelParams(**values)


def load_params(path) -> ModelParams:
    path = Path(path)
    return parse_params(path.read_text(), source=str(path))


def format_params(params: ModelParams) -> str:
    return "".join(f"{name} = {getattr(params, name)!r}\n" for name in PARAM_NAMES)


_FIG1 = dict(s=8e5, d=4.7e-3, a=1.0, t_max=7e6, b=6e-8, alpha=0.001, mu=0.35, p=5.4, c=5.9)
_FIG5 = dict(s=0.01, d=0.02, a=0.95, t_max=1200.0, b=0.0027, alpha=0.001, mu=1.0, p=10.0, c=2.4)

# Parameter sets of the published simulations; tau is the first delay shown.
PRESETS = {
    "fig1": ModelParams(**_FIG1, tau=1.0),
    "fig3": ModelParams(**{**_FIG1, "a": 2.0, "mu": 0.3}, tau=1.0),
    "fig5": ModelParams(**_FIG5, tau=0.1),
    "fig7c": ModelParams(**{**_FIG5, "c": 5.0}, tau=4.0),
    "fig8": ModelParams(**{**_FIG5, "alpha": 0.005}, tau=10.0),
}


def preset(name: str, **overrides) -> ModelParams:
    try:
        base = PRESETS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown preset {name!r}; choose one of {', '.join(sorted(PRESETS))}"
        ) from None
    return base.replace(**overrides) if overrides else base
