"""Infection-free and infected equilibria.

The infected equilibrium is found on the one-dimensional curve obtained by
eliminating ``V = p I / c`` and solving the ``T'`` equation for ``T`` as a
function of ``I`` (``f_of_i``).  What remains is the scalar equation
``big_f(I) = 1``, whose left side is strictly decreasing with ``big_f(0) = R0``.
"""
from __future__ import annotations

import dataclasses
import enum
import math

from .errors import BracketError, InvalidInputError
from .model import (
    ModelParams,
    State,
    infection_free_t0,
    infection_ratio,
    positive_quadratic_root,
    r0,
    relative_residual,
)

DEFAULT_TOL = 1e-8
_MAX_DOUBLINGS = 60


class EquilibriumKind(enum.Enum):
    INFECTION_FREE = "InfectionFree"
    INFECTED = "Infected"


@dataclasses.dataclass(frozen=True)
class Equilibrium:
    kind: EquilibriumKind
    state: State
    residual: float
    r0_at_params: float

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "T": self.state.t_cells,
            "I": self.state.i_cells,
            "V": self.state.virions,
            "residual": self.residual,
            "r0": self.r0_at_params,
        }


@dataclasses.dataclass(frozen=True)
class NoInfectedEquilibrium:
    """Returned instead of an equilibrium when R0 <= 1.  Not an error."""

    r0_at_params: float

    def as_dict(self) -> dict:
        return {"kind": "NoInfectedEquilibrium", "r0": self.r0_at_params}


def solve_infection_free(params: ModelParams) -> Equilibrium:
    state = State(infection_free_t0(params), 0.0, 0.0)
    return Equilibrium(EquilibriumKind.INFECTION_FREE, state,
                       relative_residual(params, state), r0(params))


def f_of_i(params: ModelParams, i2: float) -> float:
    """Uninfected-cell level compatible with an infected level ``i2`` at steady state.

    Positive root of ``(a/Tmax) T^2 + (d - a + a i2/Tmax + b~ i2/(1 + alpha~ i2)) T - s``
    with ``b~ = b p / c`` and ``alpha~ = alpha p / c``.
    """
    if not i2 >= 0:
        raise InvalidInputError(f"i2 must be >= 0, got {i2!r}")
    if i2 == 0:
        return infection_free_t0(params)
    b_eff = params.b * params.p / params.c
    alpha_eff = params.alpha * params.p / params.c
    lin = (params.d - params.a + params.a * i2 / params.t_max
           + b_eff * i2 / (1.0 + alpha_eff * i2))
    return positive_quadratic_root(params.a / params.t_max, lin, -params.s)


def big_f(params: ModelParams, i2: float) -> float:
    """Infection ratio along the steady-state curve; equals 1 at the infected equilibrium."""
    return infection_ratio(params, f_of_i(params, i2), i2)


def solve_infected(params: ModelParams, tol: float = DEFAULT_TOL):
    """Unique infected equilibrium, or ``NoInfectedEquilibrium`` when R0 <= 1.

    Bisection on ``big_f(I) - 1`` over ``[0, I_hi]``; ``I_hi`` starts at Tmax and
    is doubled until the sign changes.
    """
    r = r0(params)
    if r <= 1.0:
        return NoInfectedEquilibrium(r)

    lo, hi = 0.0, params.t_max
    for _ in range(_MAX_DOUBLINGS):
        if big_f(params, hi) < 1.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketError("could not bracket the root of F(I) = 1", lo, hi)

    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if big_f(params, mid) > 1.0:
            lo = mid
        else:
            hi = mid
    i2 = 0.5 * (lo + hi)
    state = State(f_of_i(params, i2), i2, params.p * i2 / params.c)
    residual = relative_residual(params, state)
    if not residual <= tol:
        raise BracketError(
            f"infected equilibrium residual {residual:.3g} exceeds tolerance {tol:.3g}", lo, hi
        )
    return Equilibrium(EquilibriumKind.INFECTED, state, residual, r)


def equilibria(params: ModelParams) -> list:
    """Every equilibrium that exists at ``params`` (E1 first)."""
    out = [solve_infection_free(params)]
    e2 = solve_infected(params)
    if isinstance(e2, Equilibrium):
        out.append(e2)
    return out


def sign_changes(params: ModelParams, hi: float, n: int = 400) -> int:
    """Number of sign changes of ``big_f - 1`` on a geometric grid over ``(0, hi]``."""
    grid = [hi * 10.0 ** (-12.0 * (1.0 - k / (n - 1))) for k in range(n)]
    signs = [math.copysign(1.0, big_f(params, x) - 1.0) for x in grid]
    return sum(1 for u, v in zip(signs, signs[1:]) if u != v)
