import numpy as np
import pytest

import oracles
from viraldyn.dde import (
    History,
    Trajectory,
    default_step,
    dense_eval,
    dense_eval_many,
    format_csv,
    integrate,
    read_csv,
)
from viraldyn.equilibria import solve_infected, solve_infection_free
from viraldyn.errors import BlowUpError, ContractError, InvalidInputError, RangeError
from viraldyn.model import preset


def max_rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0)))


@pytest.mark.parametrize("name,tau", [("fig5", 0.0), ("fig5", 0.7), ("fig3", 1.0), ("fig8", 10.0)])
def test_equilibrium_is_preserved(name, tau):
    pr = preset(name, tau=tau)
    t_end = 10 * tau if tau > 0 else 10.0
    for eq in (solve_infection_free(pr), solve_infected(pr)):
        tr = integrate(pr, eq.state, t_end)
        ref = np.asarray(eq.state)
        dev = np.abs(tr.states - ref) / np.maximum(np.abs(ref).max(), 1e-300)
        assert dev.max() <= 1e-9


@pytest.mark.parametrize("tau", [0.0, 1.0, 3.0])
def test_agrees_with_chained_adaptive_solver(tau):
    pr = preset("fig5", tau=tau)
    y0 = (20.0, 100.0, 400.0)
    t_end = 30.0
    tr = integrate(pr, y0, t_end, step=0.01)
    ref = oracles.steps_reference(pr, y0, t_end)
    for t in (0.5, 3.3, 17.0, 30.0):
        assert max_rel(dense_eval(tr, t), ref(t)) < 1e-7


def _self_convergence_ratio(pr, y0, t_end, h):
    ref = integrate(pr, y0, t_end, step=h / 4).states[-1]
    e1 = np.abs(integrate(pr, y0, t_end, step=h).states[-1] - ref).max()
    e2 = np.abs(integrate(pr, y0, t_end, step=h / 2).states[-1] - ref).max()
    return e1 / e2


def test_order_without_delay():
    pr = preset("fig5", tau=0.0)
    assert _self_convergence_ratio(pr, (20.0, 100.0, 400.0), 20.0, 0.2) >= 7


def test_order_with_delay():
    pr = preset("fig5", tau=1.0)
    assert _self_convergence_ratio(pr, (20.0, 100.0, 400.0), 20.0, 0.1) >= 5


def test_e1_approach_tightens_with_time():
    for tau in (0.0, 1.0, 5.0):
        pr = preset("fig1", tau=tau)
        e1 = np.asarray(solve_infection_free(pr).state)
        tr = integrate(pr, (7e6, 1e3, 1e3), 400.0, step=None if tau else 0.01)
        d = [np.abs(dense_eval(tr, t) - e1).max() / e1[0] for t in (100.0, 200.0, 400.0)]
        assert d[0] > d[1] > d[2]


def test_determinism():
    pr = preset("fig5", tau=3.0)
    a = integrate(pr, (20.0, 100.0, 400.0), 200.0)
    b = integrate(pr, (20.0, 100.0, 400.0), 200.0)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.times, b.times)


def test_positivity_from_small_infection():
    pr = preset("fig1", tau=1.0)
    tr = integrate(pr, (7e6, 1e3, 1e3), 300.0)
    scale = np.abs(tr.states).max(axis=0)
    assert (tr.states >= -1e-9 * scale).all()
    assert tr.positivity_violations == 0


def test_contract_errors():
    pr = preset("fig5", tau=0.5)
    with pytest.raises(ContractError):
        integrate(pr, (1.0, 1.0, 1.0), 10.0, step=0.6)
    with pytest.raises(ContractError):
        integrate(pr, (1.0, 1.0, 1.0), 0.0)
    with pytest.raises(ContractError):
        integrate(pr, (1.0, 1.0, 1.0), 10.0, step=-1.0)
    with pytest.raises(InvalidInputError):
        integrate(pr, (1.0, -1.0, 1.0), 10.0)
    short = History.constant((1.0, 1.0, 1.0), 0.2)
    with pytest.raises(ContractError):
        integrate(pr, short, 10.0)


def test_blow_up_reports_time():
    pr = preset("fig5", tau=0.0, c=1e4)
    with pytest.raises(BlowUpError) as info:
        integrate(pr, (20.0, 100.0, 400.0), 50.0, step=0.1)
    assert 0 <= info.value.last_good_time < 50.0


def test_default_step_and_uniform_grid():
    assert default_step(2.0, 100.0) == 2.0 / 40
    assert default_step(0.0, 100.0) == 100.0 / 1e5
    tr = integrate(preset("fig5", tau=0.3), (1.0, 1.0, 1.0), 1.0, step=0.07)
    assert tr.step <= 0.07 and tr.times[-1] == 1.0
    np.testing.assert_allclose(np.diff(tr.times), tr.step, rtol=1e-12)


def test_dense_eval_knots_bitwise_and_range():
    tr = integrate(preset("fig5", tau=1.0), (20.0, 100.0, 400.0), 5.0)
    for k in (0, 7, len(tr) - 1):
        assert tuple(dense_eval(tr, tr.times[k])) == tuple(tr.states[k])
    assert tuple(dense_eval(tr, -0.5)) == (20.0, 100.0, 400.0)
    with pytest.raises(RangeError):
        dense_eval(tr, -1.5)
    with pytest.raises(RangeError):
        dense_eval(tr, 5.5)
    ts = np.linspace(-1.0, 5.0, 101)
    np.testing.assert_array_equal(dense_eval_many(tr, ts), np.array([dense_eval(tr, t) for t in ts]))


def test_dense_eval_reproduces_linear_segments():
    t = np.linspace(0.0, 1.0, 6)
    slope = np.array([1.0, -2.0, 0.5])
    y = 3.0 + np.outer(t, slope)
    m = np.tile(slope, (t.size, 1))
    tr = Trajectory(t, y, m, preset("fig5", tau=0.0), History.constant(y[0]), 0.2)
    mid = 0.5 * (t[2] + t[3])
    np.testing.assert_allclose(dense_eval(tr, mid), 3.0 + mid * slope, atol=1e-12)


def test_dense_eval_fourth_order():
    pr = preset("fig5", tau=1.0)
    y0 = (20.0, 100.0, 400.0)
    fine = integrate(pr, y0, 10.0, step=1e-3)
    errs = []
    for h in (0.1, 0.05):
        tr = integrate(pr, y0, 10.0, step=h)
        ts = tr.times[40:-1] + 0.5 * h
        errs.append(np.abs(dense_eval_many(tr, ts) - dense_eval_many(fine, ts)).max())
    assert errs[0] / errs[1] > 10


def test_sampled_history_matches_constant():
    pr = preset("fig5", tau=1.0)
    ts = np.linspace(-1.0, 0.0, 5)
    hist = History.sampled(ts, np.tile([20.0, 100.0, 400.0], (5, 1)))
    a = integrate(pr, hist, 10.0)
    b = integrate(pr, (20.0, 100.0, 400.0), 10.0)
    np.testing.assert_allclose(a.states, b.states, rtol=1e-13)
    with pytest.raises(InvalidInputError):
        History.sampled([-1.0, -0.5], np.ones((2, 3)))


def test_csv_roundtrip(tmp_path):
    tr = integrate(preset("fig5", tau=1.0), (20.0, 100.0, 400.0), 3.0)
    path = tmp_path / "traj.csv"
    text = tr.to_csv(path)
    assert text.splitlines()[0] == "t,T,I,V"
    t, y = read_csv(path)
    assert np.array_equal(t, tr.times) and np.array_equal(y, tr.states)
    assert format_csv(t, y) == text
