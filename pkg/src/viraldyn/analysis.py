"""Long-time behaviour of simulated trajectories.

Three outcomes are distinguished on the tail of a run (the part after the
discarded transient): settling on an equilibrium, a sustained oscillation
with regular peaks of steady height, or neither.
"""
from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np

from .dde import Trajectory, dense_eval_many
from .errors import ContractError
from .model import ModelParams, State, infection_free_t0, positive_quadratic_root, r0

# Thresholds of the oscillation test; reported with every verdict.
AMPLITUDE_RATIO_BAND = (0.95, 1.05)
SPACING_CV_MAX = 0.05
NOISE_FLOOR = 1e-6
MIN_PEAKS = 5
DEFAULT_SETTLE_TOL = 1e-3
DEFAULT_TRANSIENT = 0.5


class Outcome(enum.Enum):
    CONVERGED = "ConvergedTo"
    OSCILLATION = "SustainedOscillation"
    UNDECIDED = "Undecided"


@dataclasses.dataclass(frozen=True)
class TrajectoryVerdict:
    outcome: Outcome
    transient_fraction: float
    peaks: list
    state: State | None = None
    equilibrium_kind: str | None = None
    distance: float | None = None
    period: float | None = None
    amplitude: tuple | None = None
    amplitude_ratios: list = dataclasses.field(default_factory=list)

    @property
    def label(self) -> str:
        if self.outcome is Outcome.CONVERGED:
            return f"ConvergedTo({self.equilibrium_kind})"
        return self.outcome.value

    def as_dict(self) -> dict:
        out = {
            "outcome": self.outcome.value,
            "label": self.label,
            "transient_fraction": self.transient_fraction,
            "equilibrium_kind": self.equilibrium_kind,
            "distance": self.distance,
            "period": self.period,
            "amplitude_T": None,
            "amplitude_I": None,
            "amplitude_V": None,
            "n_peaks": len(self.peaks),
            "amplitude_ratio_band": list(AMPLITUDE_RATIO_BAND),
            "spacing_cv_max": SPACING_CV_MAX,
            "min_peaks": MIN_PEAKS,
        }
        if self.state is not None:
            out.update(state_T=self.state[0], state_I=self.state[1], state_V=self.state[2])
        if self.amplitude is not None:
            out.update(amplitude_T=self.amplitude[0], amplitude_I=self.amplitude[1],
                       amplitude_V=self.amplitude[2])
        return out


def find_peaks(t, x, noise_floor: float = NOISE_FLOOR):
    """Local maxima of a sampled signal with parabolic sub-grid refinement.

    Returns ``(t_peak, x_peak, swing)`` arrays where ``swing`` is the rise
    from the lowest point since the previous peak.  A peak with no sampled
    local minimum before it has an unknown swing and is dropped, as are peaks
    whose swing is below ``noise_floor * max|x|``.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        return np.empty(0), np.empty(0), np.empty(0)
    idx = np.flatnonzero((x[1:-1] > x[:-2]) & (x[1:-1] >= x[2:])) + 1
    troughs = np.flatnonzero((x[1:-1] < x[:-2]) & (x[1:-1] <= x[2:])) + 1
    floor = noise_floor * float(np.max(np.abs(x)))
    tp, xp, sw = [], [], []
    prev = troughs[0] if troughs.size else x.size
    for i in idx:
        if i < prev:
            continue
        swing = x[i] - x[prev:i + 1].min()
        prev = i
        if swing <= floor:
            continue
        # parabola through (i-1, i, i+1); uniform spacing assumed locally
        y0, y1, y2 = x[i - 1], x[i], x[i + 1]
        denom = y0 - 2.0 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        shift = min(0.5, max(-0.5, shift))
        dt = 0.5 * (t[i + 1] - t[i - 1])
        tp.append(t[i] + shift * dt)
        xp.append(y1 - 0.25 * (y0 - y2) * shift)
        sw.append(swing)
    return np.array(tp), np.array(xp), np.array(sw)


def _window_start(n: int, transient_fraction: float) -> int:
    return min(n - 1, int(math.floor(transient_fraction * (n - 1))))


def detect_outcome(traj: Trajectory, candidates, settle_tol: float = DEFAULT_SETTLE_TOL,
                   transient_fraction: float = DEFAULT_TRANSIENT) -> TrajectoryVerdict:
    """Classify the tail of ``traj``.

    Converged: the largest deviation from one of ``candidates`` over the tail,
    measured relative to that equilibrium's largest component, is below
    ``settle_tol``.  Sustained oscillation: at least ``MIN_PEAKS`` peaks of
    ``V`` whose successive swing ratios lie in ``AMPLITUDE_RATIO_BAND`` and
    whose spacing has a coefficient of variation below ``SPACING_CV_MAX``.
    """
    if len(traj) == 0:
        raise ContractError("empty trajectory")
    if not 0.0 <= transient_fraction < 1.0:
        raise ContractError(f"transient_fraction must lie in [0, 1), got {transient_fraction!r}")
    start = _window_start(len(traj), transient_fraction)
    tail = traj.states[start:]
    times = traj.times[start:]

    best = None
    for eq in candidates:
        ref = np.asarray(eq.state, dtype=float)
        scale = float(np.max(np.abs(ref))) or 1.0
        dist = float(np.max(np.abs(tail - ref))) / scale
        if best is None or dist < best[0]:
            best = (dist, eq)

    tp, vp, swing = find_peaks(times, tail[:, 2])
    peaks = list(zip(tp.tolist(), vp.tolist()))

    if best is not None and best[0] < settle_tol:
        eq = best[1]
        return TrajectoryVerdict(Outcome.CONVERGED, transient_fraction, peaks,
                                 state=eq.state, equilibrium_kind=eq.kind.value, distance=best[0])

    distance = best[0] if best is not None else None
    if tp.size >= MIN_PEAKS:
        ratios = swing[1:] / swing[:-1]
        spacing = np.diff(tp)
        cv = float(np.std(spacing) / np.mean(spacing))
        lo, hi = AMPLITUDE_RATIO_BAND
        if np.all((ratios >= lo) & (ratios <= hi)) and cv < SPACING_CV_MAX:
            amp = tuple(float(v) for v in 0.5 * (tail.max(axis=0) - tail.min(axis=0)))
            return TrajectoryVerdict(Outcome.OSCILLATION, transient_fraction, peaks,
                                     distance=distance, period=float(np.mean(spacing)),
                                     amplitude=amp, amplitude_ratios=ratios.tolist())
        return TrajectoryVerdict(Outcome.UNDECIDED, transient_fraction, peaks,
                                 distance=distance, amplitude_ratios=ratios.tolist())
    return TrajectoryVerdict(Outcome.UNDECIDED, transient_fraction, peaks, distance=distance)


def peaks_csv(verdict: TrajectoryVerdict) -> str:
    return "t_peak,V_peak\n" + "".join(f"{t:.17g},{v:.17g}\n" for t, v in verdict.peaks)


# --- permanence -------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class PermanenceBounds:
    """Ultimate bounds on solutions.

    ``t_upper``: limsup of T.  ``w_upper``: limsup of ``T(t - tau) + I(t)``.
    ``i_upper``/``v_upper``: bounds on I and V implied by ``w_upper``.
    ``t_lower``: liminf of T (None when alpha = 0).
    """

    t_upper: float
    w_upper: float
    i_upper: float
    v_upper: float
    t_lower: float | None

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def permanence_bounds(params: ModelParams) -> PermanenceBounds:
    pr = params
    t_upper = infection_free_t0(pr)
    w_upper = (pr.a * pr.t_max / 2.0 + pr.s) / pr.d
    i_upper = w_upper
    v_upper = pr.p * i_upper / pr.c
    t_lower = None
    if pr.alpha > 0:
        growth = pr.a - pr.d - pr.b / pr.alpha - pr.a * i_upper / pr.t_max
        t_lower = positive_quadratic_root(pr.a / pr.t_max, -growth, -pr.s)
    return PermanenceBounds(t_upper, w_upper, i_upper, v_upper, t_lower)


@dataclasses.dataclass(frozen=True)
class BoundCheck:
    name: str
    observed: float
    bound: float
    margin: float
    passed: bool


@dataclasses.dataclass(frozen=True)
class PermanenceCheck:
    applicable: bool
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {"applicable": self.applicable, "passed": self.passed,
                "checks": [dataclasses.asdict(c) for c in self.checks]}


def w_series(traj: Trajectory, start: int = 0) -> np.ndarray:
    """``W(t) = T(t - tau) + I(t)`` at the knots from index ``start``."""
    lagged = dense_eval_many(traj, traj.times[start:] - traj.params.tau)
    return lagged[:, 0] + traj.states[start:, 1]


def check_permanence(traj: Trajectory, bounds: PermanenceBounds, slack: float = 1e-3,
                     transient_fraction: float = DEFAULT_TRANSIENT) -> PermanenceCheck:
    """Compare the tail of ``traj`` against ``bounds``.

    Upper bounds must hold within ``1 + slack``; the lower bound on T within
    ``1 - slack``.  When R0 > 1 the tail minima of T, I, V must also be
    positive; for R0 <= 1 that part is inapplicable and skipped.
    """
    start = _window_start(len(traj), transient_fraction)
    tail = traj.states[start:]
    hi = tail.max(axis=0)
    lo = tail.min(axis=0)
    w_max = float(w_series(traj, start).max())

    checks = []

    def upper(name, observed, bound):
        observed = float(observed)
        limit = bound * (1.0 + slack)
        checks.append(BoundCheck(name, observed, bound, (limit - observed) / bound, observed <= limit))

    def lower(name, observed, bound):
        observed = float(observed)
        if bound > 0:
            limit = bound * (1.0 - slack)
            checks.append(BoundCheck(name, observed, bound, (observed - limit) / bound, observed >= limit))
        else:
            # margin is absolute when the bound is zero
            checks.append(BoundCheck(name, observed, bound, observed, observed > bound))

    upper("T_max<=T0", hi[0], bounds.t_upper)
    upper("W_max<=W_bound", w_max, bounds.w_upper)
    upper("I_max<=M_I", hi[1], bounds.i_upper)
    upper("V_max<=M_V", hi[2], bounds.v_upper)
    if bounds.t_lower is not None:
        lower("T_min>=T_lower", lo[0], bounds.t_lower)

    applicable = r0(traj.params) > 1.0
    if applicable:
        for k, name in enumerate("TIV"):
            lower(f"{name}_min>0", lo[k], 0.0)
    return PermanenceCheck(applicable, checks)
