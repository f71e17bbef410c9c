"""Method-of-steps integration of the delayed model.

Classical RK4 on a uniform grid.  Lagged values come from cubic Hermite
interpolation through the stored knots (state and RHS value at each grid
point), or through the initial history for ``t - tau <= 0``.  Because the
step never exceeds the delay, every lagged stage time falls inside the part
of the solution that is already known.
"""
from __future__ import annotations

import dataclasses
import io
import math
from pathlib import Path

import numpy as np
from numba import njit
from scipy.interpolate import PchipInterpolator

from .errors import BlowUpError, ContractError, InvalidInputError, RangeError
from .model import ModelParams, State, rhs_components

POSITIVITY_EPS = 1e-9
STEPS_PER_DELAY = 40
STEPS_NO_DELAY = 100_000


@dataclasses.dataclass(frozen=True)
class History:
    """Initial function on ``[-tau, 0]`` as Hermite knots.

    Build with :meth:`constant` or :meth:`sampled`.
    """

    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    kind: str

    @classmethod
    def constant(cls, state, tau: float = 0.0) -> "History":
        y = np.asarray(state, dtype=float).reshape(1, 3)
        _check_history_states(y)
        if tau > 0:
            return cls(np.array([-float(tau), 0.0]), np.repeat(y, 2, axis=0), np.zeros((2, 3)), "constant")
        return cls(np.array([0.0]), y, np.zeros((1, 3)), "constant")

    @classmethod
    def sampled(cls, times, states, derivatives=None) -> "History":
        """Samples ``(t_k, state_k)`` with ``t`` ascending and ending at 0.

        Without explicit derivatives, knot slopes are taken from a PCHIP fit,
        which keeps the interpolant nonnegative between nonnegative samples.
        """
        t = np.asarray(times, dtype=float)
        y = np.asarray(states, dtype=float)
        if t.ndim != 1 or y.shape != (t.size, 3):
            raise InvalidInputError("sampled history needs times (n,) and states (n, 3)")
        if t.size < 2 or np.any(np.diff(t) <= 0) or t[-1] != 0.0:
            raise InvalidInputError("history times must increase strictly and end at 0")
        _check_history_states(y)
        if derivatives is None:
            m = PchipInterpolator(t, y, axis=0).derivative()(t)
        else:
            m = np.asarray(derivatives, dtype=float)
            if m.shape != y.shape:
                raise InvalidInputError("derivatives must match states in shape")
        return cls(t, y, m, "sampled")

    def covers(self, tau: float) -> bool:
        return self.times[0] <= -tau or (tau == 0 and self.times[-1] == 0.0)

    def __call__(self, t: float) -> State:
        if t > 0 or (t < self.times[0] and self.times.size > 1):
            raise RangeError(f"history is defined on [{self.times[0]}, 0], not at t={t}")
        return State(*_hermite_lookup(self.times, self.states, self.derivatives, float(t)))


def _check_history_states(y):
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("history states must be finite")
    if np.any(y < 0):
        raise InvalidInputError("history states must be nonnegative")


@njit(cache=True, nogil=True)
def _hermite(t, t0, t1, y0, y1, m0, m1, k):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    return h00 * y0[k] + h10 * h * m0[k] + h01 * y1[k] + h11 * h * m1[k]


@njit(cache=True, nogil=True)
def _knot_interval(times, n, t):
    """Index ``i`` with ``times[i] <= t <= times[i+1]`` among the first ``n`` knots."""
    i = np.searchsorted(times[:n], t, side="right") - 1
    if i < 0:
        i = 0
    if i > n - 2:
        i = n - 2
    return i


@njit(cache=True, nogil=True)
def _hermite_lookup(times, ys, ms, t):
    n = times.size
    if n == 1:
        return ys[0, 0], ys[0, 1], ys[0, 2]
    i = _knot_interval(times, n, t)
    if t == times[i]:
        return ys[i, 0], ys[i, 1], ys[i, 2]
    if t == times[i + 1]:
        return ys[i + 1, 0], ys[i + 1, 1], ys[i + 1, 2]
    return (_hermite(t, times[i], times[i + 1], ys[i], ys[i + 1], ms[i], ms[i + 1], 0),
            _hermite(t, times[i], times[i + 1], ys[i], ys[i + 1], ms[i], ms[i + 1], 1),
            _hermite(t, times[i], times[i + 1], ys[i], ys[i + 1], ms[i], ms[i + 1], 2))


@njit(cache=True, nogil=True)
def _lagged(t, h, n_known, ys, ms, hist_t, hist_y, hist_m):
    # State at time t <= t_{n_known-1}; uniform grid t_k = k h for the solution.
    if t <= 0.0:
        return _hermite_lookup(hist_t, hist_y, hist_m, t)
    k = int(math.floor(t / h))
    if k > n_known - 2:
        k = n_known - 2
    if k < 0:
        k = 0
    t0 = k * h
    t1 = (k + 1) * h
    if t == t1:
        return ys[k + 1, 0], ys[k + 1, 1], ys[k + 1, 2]
    if t == t0:
        return ys[k, 0], ys[k, 1], ys[k, 2]
    return (_hermite(t, t0, t1, ys[k], ys[k + 1], ms[k], ms[k + 1], 0),
            _hermite(t, t0, t1, ys[k], ys[k + 1], ms[k], ms[k + 1], 1),
            _hermite(t, t0, t1, ys[k], ys[k + 1], ms[k], ms[k + 1], 2))


@njit(cache=True, nogil=True)
def _march(prm, tau, h, n_steps, hist_t, hist_y, hist_m, eps):
    ys = np.empty((n_steps + 1, 3))
    ms = np.empty((n_steps + 1, 3))
    scale = np.zeros(3)
    for j in range(hist_y.shape[0]):
        for k in range(3):
            scale[k] = max(scale[k], abs(hist_y[j, k]))
    last = hist_y.shape[0] - 1
    ys[0, 0] = hist_y[last, 0]
    ys[0, 1] = hist_y[last, 1]
    ys[0, 2] = hist_y[last, 2]
    clamped = 0
    violations = 0

    for n in range(n_steps + 1):
        T, I, V = ys[n, 0], ys[n, 1], ys[n, 2]
        Tl, Vl = T, V
        if tau > 0.0:
            Tl, Il, Vl = _lagged(n * h - tau, h, n + 1, ys, ms, hist_t, hist_y, hist_m)
        k1 = rhs_components(prm, T, I, V, Tl, Vl)
        ms[n, 0], ms[n, 1], ms[n, 2] = k1
        if not (math.isfinite(k1[0]) and math.isfinite(k1[1]) and math.isfinite(k1[2])):
            return ys, ms, n, clamped, violations, 1
        if n == n_steps:
            break
        t = n * h
        Tm, Vm = 0.0, 0.0
        if tau > 0.0:
            Tm, Im, Vm = _lagged(t + 0.5 * h - tau, h, n + 1, ys, ms, hist_t, hist_y, hist_m)
        y2 = (T + 0.5 * h * k1[0], I + 0.5 * h * k1[1], V + 0.5 * h * k1[2])
        if tau == 0.0:
            Tm, Vm = y2[0], y2[2]
        k2 = rhs_components(prm, y2[0], y2[1], y2[2], Tm, Vm)
        y3 = (T + 0.5 * h * k2[0], I + 0.5 * h * k2[1], V + 0.5 * h * k2[2])
        if tau == 0.0:
            Tm, Vm = y3[0], y3[2]
        k3 = rhs_components(prm, y3[0], y3[1], y3[2], Tm, Vm)
        y4 = (T + h * k3[0], I + h * k3[1], V + h * k3[2])
        Te, Ve = y4[0], y4[2]
        if tau > 0.0:
            Te, Ie, Ve = _lagged(t + h - tau, h, n + 1, ys, ms, hist_t, hist_y, hist_m)
        k4 = rhs_components(prm, y4[0], y4[1], y4[2], Te, Ve)
        w = h / 6.0
        new = (T + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
               I + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
               V + w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]))
        for k in range(3):
            x = new[k]
            if not math.isfinite(x):
                return ys, ms, n, clamped, violations, 1
            if x < 0.0:
                if x >= -eps * scale[k]:
                    x = 0.0
                    clamped += 1
                else:
                    violations += 1
            ys[n + 1, k] = x
            if abs(x) > scale[k]:
                scale[k] = abs(x)
    return ys, ms, n_steps, clamped, violations, 0


@dataclasses.dataclass(frozen=True, eq=False)
class Trajectory:
    """Knots of a numerical solution on ``[0, t_end]`` plus the history it started from.

    ``clamped`` counts negative overshoots within the positivity tolerance
    that were reset to zero; ``positivity_violations`` counts larger ones,
    which are left in place.
    """

    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    params: ModelParams
    history: History
    step: float
    clamped: int = 0
    positivity_violations: int = 0

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __len__(self):
        return self.times.size

    def at(self, t: float) -> State:
        return dense_eval(self, t)

    def lagged_series(self) -> np.ndarray:
        """States one delay before each knot (history values for early knots)."""
        return np.array([dense_eval(self, t - self.params.tau) for t in self.times])

    def to_csv(self, path=None) -> str:
        text = format_csv(self.times, self.states)
        if path is not None:
            Path(path).write_text(text)
        return text


def default_step(tau: float, t_end: float) -> float:
    return tau / STEPS_PER_DELAY if tau > 0 else t_end / STEPS_NO_DELAY


def integrate(params: ModelParams, history, t_end: float, step: float | None = None) -> Trajectory:
    """Solve the delayed system from ``history`` up to ``t_end``.

    ``history`` is a :class:`History` or a single state (constant history).
    The step defaults to ``tau/40`` (or ``t_end/1e5`` without delay) and is
    shrunk slightly so that it divides ``t_end`` evenly.
    """
    tau = params.tau
    if not (t_end > 0 and math.isfinite(t_end)):
        raise ContractError(f"t_end must be positive and finite, got {t_end!r}")
    if not isinstance(history, History):
        history = History.constant(history, tau)
    if not history.covers(tau):
        raise ContractError(f"history starts at {history.times[0]}, after -tau = {-tau}")
    if step is None:
        step = default_step(tau, t_end)
    if not step > 0:
        raise ContractError(f"step must be positive, got {step!r}")
    if tau > 0 and step > tau:
        raise ContractError(f"step {step!r} exceeds the delay {tau!r}")
    n_steps = max(1, math.ceil(t_end / step - 1e-9))
    h = t_end / n_steps

    ys, ms, n_done, clamped, violations, status = _march(
        params.rates(), tau, h, n_steps, history.times, history.states,
        history.derivatives, POSITIVITY_EPS,
    )
    if status != 0:
        raise BlowUpError("non-finite state during integration", n_done * h)
    times = np.arange(n_steps + 1) * h
    return Trajectory(times, ys, ms, params, history, h, clamped, violations)


def dense_eval(traj: Trajectory, t: float) -> State:
    """Solution value at ``t`` in ``[-tau, t_end]`` by cubic Hermite interpolation."""
    t = float(t)
    lo = min(float(traj.history.times[0]), -traj.params.tau)
    if not (lo <= t <= traj.times[-1]):
        raise RangeError(f"t={t} outside [{lo}, {traj.times[-1]}]")
    if t < 0 or (t == 0 and traj.times.size == 0):
        return traj.history(t)
    return State(*_hermite_lookup(traj.times, traj.states, traj.derivatives, t))


@njit(cache=True, nogil=True)
def _lookup_many(times, ys, ms, ts):
    out = np.empty((ts.size, 3))
    for j in range(ts.size):
        out[j, 0], out[j, 1], out[j, 2] = _hermite_lookup(times, ys, ms, ts[j])
    return out


def dense_eval_many(traj: Trajectory, ts) -> np.ndarray:
    """Vectorised :func:`dense_eval`; returns an ``(n, 3)`` array."""
    ts = np.asarray(ts, dtype=float).ravel()
    if ts.size == 0:
        return np.empty((0, 3))
    lo = min(float(traj.history.times[0]), -traj.params.tau)
    if ts.min() < lo or ts.max() > traj.times[-1]:
        raise RangeError(f"query times outside [{lo}, {traj.times[-1]}]")
    out = np.empty((ts.size, 3))
    past = ts < 0
    h = traj.history
    out[past] = _lookup_many(h.times, h.states, h.derivatives, ts[past])
    out[~past] = _lookup_many(traj.times, traj.states, traj.derivatives, ts[~past])
    return out


# --- CSV ----------------------------------------------------------------------

CSV_HEADER = "t,T,I,V"


def format_csv(times, states) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for t, (T, I, V) in zip(times, states):
        buf.write(f"{t:.17g},{T:.17g},{I:.17g},{V:.17g}\n")
    return buf.getvalue()


def read_csv(path):
    """``(times, states)`` from a trajectory CSV."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise InvalidInputError(f"{path}: expected header {CSV_HEADER!r}")
    rows = np.array([[float(x) for x in line.split(",")] for line in lines[1:] if line.strip()])
    rows = rows.reshape(-1, 4)
    return rows[:, 0], rows[:, 1:]
