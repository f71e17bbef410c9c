import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viraldyn.analysis import (
    AMPLITUDE_RATIO_BAND,
    Outcome,
    check_permanence,
    detect_outcome,
    find_peaks,
    peaks_csv,
    permanence_bounds,
    w_series,
)
from viraldyn.dde import History, Trajectory, integrate
from viraldyn.equilibria import equilibria, solve_infection_free
from viraldyn.errors import ContractError
from viraldyn.model import infection_free_t0, preset


def synthetic(v_of_t, t_end=400.0, n=40001, tau=0.0):
    t = np.linspace(0.0, t_end, n)
    v = v_of_t(t)
    y = np.column_stack([np.full_like(t, 10.0), np.full_like(t, 1.0), v])
    return Trajectory(t, y, np.zeros_like(y), preset("fig5", tau=tau), History.constant(y[0]), t[1] - t[0])


def test_pure_sinusoid_recovers_period():
    period = 17.3
    tr = synthetic(lambda t: 50.0 + 10.0 * np.sin(2 * np.pi * t / period))
    v = detect_outcome(tr, [])
    assert v.outcome is Outcome.OSCILLATION
    assert v.period == pytest.approx(period, rel=0.01)
    assert v.amplitude[2] == pytest.approx(10.0, rel=1e-3)
    assert all(AMPLITUDE_RATIO_BAND[0] <= r <= AMPLITUDE_RATIO_BAND[1] for r in v.amplitude_ratios)


def test_fast_decay_is_undecided():
    tr = synthetic(lambda t: 50.0 + 10.0 * np.exp(-0.01 * t) * np.sin(2 * np.pi * t / 10.0))
    assert detect_outcome(tr, []).outcome is Outcome.UNDECIDED


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 1e4), st.floats(-50.0, 50.0))
def test_peaks_invariant_to_scale_and_shift(scale, shift):
    t = np.linspace(0.0, 200.0, 8001)
    x = 2.0 + np.sin(2 * np.pi * t / 13.0) + 0.3 * np.sin(2 * np.pi * t / 5.0)
    tp, xp, sw = find_peaks(t, x)
    tp2, xp2, sw2 = find_peaks(t + shift, scale * x)
    np.testing.assert_allclose(tp2, tp + shift, atol=1e-9 * (1 + abs(shift)))
    np.testing.assert_allclose(xp2, scale * xp, rtol=1e-12)
    np.testing.assert_allclose(sw2, scale * sw, rtol=1e-12)


def test_noise_floor_drops_tiny_wiggles():
    t = np.linspace(0.0, 100.0, 10001)
    x = 100.0 + 1e-7 * np.sin(2 * np.pi * t / 3.0)
    assert find_peaks(t, x)[0].size == 0


def test_constant_trajectory_at_e1():
    pr = preset("fig1", tau=1.0)
    eqs = equilibria(pr)
    tr = integrate(pr, eqs[0].state, 50.0)
    v = detect_outcome(tr, eqs)
    assert v.label == "ConvergedTo(InfectionFree)"
    assert v.distance < 1e-12


def test_fig3_settles_on_infected_state():
    pr = preset("fig3", tau=1.0)
    eqs = equilibria(pr)
    tr = integrate(pr, np.array(eqs[1].state) * 1.1, 500.0)
    assert detect_outcome(tr, eqs).label == "ConvergedTo(Infected)"


def test_fig5_long_delay_oscillates():
    pr = preset("fig5", tau=3.0)
    eqs = equilibria(pr)
    tr = integrate(pr, np.array(eqs[1].state) * 1.1, 4000.0)
    v = detect_outcome(tr, eqs)
    assert v.outcome is Outcome.OSCILLATION
    assert v.period > 0 and min(v.amplitude) > 0
    text = peaks_csv(v)
    assert text.splitlines()[0] == "t_peak,V_peak" and len(text.splitlines()) == len(v.peaks) + 1


def test_contract_errors():
    tr = synthetic(lambda t: np.sin(t))
    with pytest.raises(ContractError):
        detect_outcome(tr, [], transient_fraction=1.0)
    empty = Trajectory(np.empty(0), np.empty((0, 3)), np.empty((0, 3)), preset("fig5"),
                       History.constant((1.0, 1.0, 1.0)), 0.1)
    with pytest.raises(ContractError):
        detect_outcome(empty, [])


def test_verdict_json_is_flat():
    import json
    tr = synthetic(lambda t: 50.0 + 10.0 * np.sin(t))
    d = detect_outcome(tr, []).as_dict()
    json.dumps(d)
    assert all(not isinstance(v, dict) for v in d.values())
    assert d["amplitude_ratio_band"] == [0.95, 1.05]


def test_permanence_bounds_closed_forms():
    pr = preset("fig5")
    b = permanence_bounds(pr)
    assert b.t_upper == infection_free_t0(pr)
    m_i = (0.95 * 1200 / 2 + 0.01) / 0.02
    assert b.w_upper == pytest.approx(m_i, rel=1e-15) and b.i_upper == b.w_upper
    assert b.v_upper == pytest.approx(pr.p * m_i / pr.c, rel=1e-15)
    assert b.t_lower is not None and 0 < b.t_lower < b.t_upper
    # t_lower is the positive root of the comparison quadratic
    g = pr.a - pr.d - pr.b / pr.alpha - pr.a * m_i / pr.t_max
    x = b.t_lower
    assert abs(pr.s + g * x - pr.a / pr.t_max * x * x) < 1e-12
    assert permanence_bounds(preset("fig5", alpha=0.0)).t_lower is None


@pytest.mark.parametrize("tau", [0.1, 3.0])
def test_fig5_permanence(tau):
    pr = preset("fig5", tau=tau)
    eqs = equilibria(pr)
    tr = integrate(pr, np.array(eqs[1].state) * 1.1, 2000.0)
    chk = check_permanence(tr, permanence_bounds(pr))
    assert chk.applicable and chk.passed, chk.failures()
    mins = {c.name: c for c in chk.checks}
    assert all(mins[f"{k}_min>0"].margin > 0 for k in "TIV")


def test_permanence_inapplicable_below_threshold():
    pr = preset("fig1", tau=1.0)
    tr = integrate(pr, (7e6, 1e3, 1e3), 300.0)
    chk = check_permanence(tr, permanence_bounds(pr))
    assert not chk.applicable
    assert chk.passed
    assert not any(c.name.endswith("_min>0") for c in chk.checks)


def test_w_series_definition():
    pr = preset("fig5", tau=2.0)
    tr = integrate(pr, (20.0, 100.0, 400.0), 10.0)
    w = w_series(tr)
    k = 100  # t = 5.0 with step 0.05
    assert tr.times[k] == pytest.approx(5.0)
    assert w[k] == pytest.approx(tr.at(3.0)[0] + tr.states[k, 1], rel=1e-14)
