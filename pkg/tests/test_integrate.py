"""Fixed-step RK4: accuracy, order, grids and per-step frozen inputs."""
import numpy as np
import pytest

from injectlab.integrate import TimeGrid, rk4_step, simulate


def test_single_step_matches_hand_expansion():
    # x' = x, one step h = 0.1 from 1: the RK4 polynomial gives
    # 1 + h + h^2/2 + h^3/6 + h^4/24 exactly
    out = rk4_step(lambda t, x: x, 0.0, np.array([1.0]), 0.1)
    h = 0.1
    expected = 1 + h + h**2 / 2 + h**3 / 6 + h**4 / 24
    assert out[0] == pytest.approx(expected, abs=1e-16)
    assert abs(out[0] - np.exp(h)) < 1e-7


def test_exponential_decay_accuracy():
    grid = TimeGrid(0.0, 1.0, 1e-3)
    traj = simulate(lambda t, x: -x, grid, [1.0])
    assert abs(traj.final_state[0] - np.exp(-1.0)) < 1e-10
    assert traj.states.shape == (1001, 1)
    assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(1.0)


def test_rotation_preserves_radius_and_angle():
    grid = TimeGrid(0.0, 6.28, 0.01)
    traj = simulate(lambda t, x: np.array([-x[1], x[0]]), grid, [1.0, 0.0])
    exact = np.array([np.cos(6.28), np.sin(6.28)])
    assert np.max(np.abs(traj.final_state - exact)) < 1e-8


def test_fourth_order_error_halving():
    # nonlinear scalar problem with a known solution:
    # x' = x sin(t), x(t) = exp(1 - cos t)
    def err(h):
        traj = simulate(lambda t, x: x * np.sin(t), TimeGrid(0.0, 2.0, h), [1.0])
        return abs(traj.final_state[0] - np.exp(1 - np.cos(2.0)))

    ratio = err(2e-3) / err(1e-3)
    assert 16 * 0.9 < ratio < 16 * 1.1


def test_determinism():
    rhs = lambda t, x: np.array([x[1], -np.sin(x[0])])
    grid = TimeGrid(0.0, 3.0, 1e-3)
    a = simulate(rhs, grid, [1.0, 0.0])
    b = simulate(rhs, grid, [1.0, 0.0])
    assert np.array_equal(a.states, b.states)


def test_probes_recorded_every_sample():
    grid = TimeGrid(0.0, 1.0, 0.1)
    traj = simulate(
        lambda t, x: -x, grid, [2.0],
        probes={"double": lambda t, x: 2.0 * x[0], "time": lambda t, x: t},
    )
    assert set(traj.probes) == {"double", "time"}
    assert np.allclose(traj.probes["double"], 2.0 * traj.states[:, 0])
    assert np.array_equal(traj.probes["time"], traj.times)


def test_nonfinite_derivative_is_diagnosed():
    def rhs(t, x):
        return np.array([1.0, np.inf if t >= 0.35 else 0.0])

    with pytest.raises(FloatingPointError) as err:
        simulate(rhs, TimeGrid(0.0, 1.0, 0.05), [0.0, 0.0])
    assert "component 1" in str(err.value)
    assert "t=0.35" in str(err.value)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, -0.1)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 0.1)  # empty horizon
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 0.3)  # 0.3 does not divide 1.0
    grid = TimeGrid(0.0, 1.0, 0.125)
    assert grid.n_steps == 8


def test_quarter_period_check():
    grid = TimeGrid(0.0, 1.0, 1e-3)
    grid.check_quarter_period(4e-3)  # quarter = 1e-3, exact
    grid.check_quarter_period(0.4)
    with pytest.raises(ValueError):
        grid.check_quarter_period(6e-3)  # quarter = 1.5e-3
    with pytest.raises(ValueError):
        grid.check_quarter_period(2e-3)  # quarter finer than the step


def test_prepare_step_freezes_discontinuous_forcing():
    # forcing flips sign at t = 0.5, exactly on a step boundary
    forcing = lambda t: 1.0 if t < 0.5 else -1.0
    grid = TimeGrid(0.0, 1.0, 0.1)

    frozen = simulate(
        lambda t, x, aux: np.array([aux]), grid, [0.0],
        prepare_step=lambda t, x: forcing(t),
    )
    # per-step plateaus integrate exactly: area 0.5 by t=0.5, 0 by t=1
    assert frozen.states[5, 0] == pytest.approx(0.5, abs=1e-15)
    assert frozen.final_state[0] == pytest.approx(0.0, abs=1e-15)

    # evaluating the switch inside the stages leaks the new plateau into the
    # step that ends at the switch and breaks the exact area
    naive = simulate(lambda t, x: np.array([forcing(t)]), grid, [0.0])
    assert abs(naive.final_state[0]) > 1e-3


def test_prepare_step_receives_step_start_state():
    seen = []

    def prepare(t, x):
        seen.append((t, float(x[0])))
        return 0.0

    simulate(lambda t, x, aux: np.array([1.0]), TimeGrid(0.0, 0.3, 0.1), [0.0],
             prepare_step=prepare)
    times = [t for t, _ in seen]
    assert times == pytest.approx([0.0, 0.1, 0.2])
    assert [v for _, v in seen] == pytest.approx([0.0, 0.1, 0.2])
