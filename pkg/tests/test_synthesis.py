"""Pole placement by coefficient matching and the compensator wiring."""
import numpy as np
import pytest

from injectlab.synthesis import (
    DEFAULT_CONTROLLER_POLES,
    DEFAULT_OBSERVER_POLES,
    Compensator,
    compensator_step,
    control_law,
    default_compensator,
    injected_control,
    place_controller_gains,
    place_observer_gains,
)
from injectlab.signals import PeriodicSignal


def test_triple_pole_gains_are_binomial_coefficients():
    # (s+1)^3 = s^3 + 3 s^2 + 3 s + 1  ->  k = (1, 3, 3)
    k = place_controller_gains((-1.0, -1.0, -1.0))
    assert np.allclose(k, [1.0, 3.0, 3.0], atol=1e-12)


def test_quadruple_pole_gains_are_binomial_coefficients():
    # (s+1)^4 = s^4 + 4 s^3 + 6 s^2 + 4 s + 1  ->  l = (4, 6, 4, 1)
    l = place_observer_gains((-1.0, -1.0, -1.0, -1.0))
    assert np.allclose(l, [4.0, 6.0, 4.0, 1.0], atol=1e-12)


def test_default_gain_values():
    # hand expansion of the default pole sets:
    #   controller: (s+6.06)(s^2 + 6.06 s + 3.03^2 + 5.25^2)
    #   observer:   (s+1.31)(s+0.80)(s^2 + 1.08 s + 0.54^2 + 0.63^2)
    k = place_controller_gains()
    assert np.allclose(k, [222.665004, 73.467, 12.12], atol=1e-9)
    l = place_observer_gains()
    assert np.allclose(l, [3.19, 4.0153, 2.584575, 0.721548], atol=1e-9)


def test_eigenvalue_round_trip_default_poles():
    comp = default_compensator()
    got = np.sort_complex(np.linalg.eigvals(comp.controller_matrix))
    want = np.sort_complex(np.array(DEFAULT_CONTROLLER_POLES))
    assert np.max(np.abs(got - want)) < 1e-9
    got = np.sort_complex(np.linalg.eigvals(comp.observer_error_matrix))
    want = np.sort_complex(np.array(DEFAULT_OBSERVER_POLES))
    assert np.max(np.abs(got - want)) < 1e-9


def test_eigenvalue_round_trip_random_stable_sets():
    rng = np.random.default_rng(3)
    for _ in range(20):
        re = -rng.uniform(0.2, 5.0)
        im = rng.uniform(0.1, 5.0)
        real_pole = -rng.uniform(0.2, 5.0)
        poles = (real_pole, complex(re, im), complex(re, -im))
        k = place_controller_gains(poles)
        a = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
        a[2] -= k
        got = np.sort_complex(np.linalg.eigvals(a))
        want = np.sort_complex(np.array(poles, dtype=complex))
        assert np.max(np.abs(got - want)) < 1e-8


@pytest.mark.parametrize("poles", [
    (-1.0, -2.0),                          # wrong count
    (-1.0, -2.0, 1.0),                     # unstable
    (-1.0, -2.0, 0.0),                     # marginal
    (-1.0, -2.0 + 1.0j, -2.0 - 2.0j),      # not conjugate-closed
    (-1.0, -2.0 + 1.0j, -3.0 - 1.0j),      # conjugate of a different pole
])
def test_controller_pole_validation(poles):
    with pytest.raises(ValueError):
        place_controller_gains(poles)


def test_observer_pole_validation():
    with pytest.raises(ValueError):
        place_observer_gains((-1.0, -2.0, -3.0))
    with pytest.raises(ValueError):
        place_observer_gains((-1.0, -2.0, -3.0, 0.5))


def test_compensator_shape_validation_and_reference_gain_default():
    with pytest.raises(ValueError):
        Compensator(k=np.ones(2), l=np.ones(4))
    with pytest.raises(ValueError):
        Compensator(k=np.ones(3), l=np.ones(3))
    comp = Compensator(k=np.array([5.0, 1.0, 1.0]), l=np.ones(4))
    assert comp.kref == 5.0  # defaults to k1 for unity dc gain
    custom = Compensator(k=np.array([5.0, 1.0, 1.0]), l=np.ones(4), kref=2.0)
    assert custom.kref == 2.0


def test_control_law_arithmetic():
    comp = Compensator(k=np.array([1.0, 2.0, 3.0]), l=np.ones(4), kd=1.0,
                       kref=5.0)
    u = control_law(comp, np.array([1.0, 1.0, 1.0, 1.0]), x1_ref=2.0)
    assert u == pytest.approx(-1 - 2 - 3 - 1 + 10.0)


def test_compensator_step_innovation_wiring():
    comp = Compensator(k=np.array([1.0, 2.0, 3.0]),
                       l=np.array([10.0, 20.0, 30.0, 40.0]))
    u, eta_dot = compensator_step(comp, np.zeros(4), y_v_fed=1.0, x1_ref=0.0)
    # zero estimate: u = 0 and the derivative is the innovation column
    assert u == 0.0
    assert np.allclose(eta_dot, [10.0, 20.0, 30.0, 40.0])

    eta = np.array([1.0, 0.5, -0.5, 0.2])
    u, eta_dot = compensator_step(comp, eta, y_v_fed=1.0, x1_ref=0.0)
    # innovation vanishes when the feed equals the first estimate
    assert u == pytest.approx(-1.0 - 1.0 + 1.5 - 0.2)
    assert np.allclose(eta_dot, [0.5, -0.5, u + 0.2, 0.0])


def test_constant_disturbance_cancellation_at_equilibrium():
    # at eta = (ref, 0, 0, d) with kd = 1 the actuation is exactly -d + the
    # reference feed-through, so x3' = u + d = 0 when ref = 0
    comp = default_compensator()
    d = -2.0
    eta = np.array([0.0, 0.0, 0.0, d])
    assert control_law(comp, eta, 0.0) == pytest.approx(-d)


def test_injected_control_superposition():
    sig = PeriodicSignal("square", amplitude=0.5)
    eps = 1e-3
    assert injected_control(sig, eps, 0.0, 2.0) == 2.5
    assert injected_control(sig, eps, eps / 2, 2.0) == 1.5
    # the injected component is zero-mean over any whole period
    ts = (np.arange(1000) + 0.5) * (eps / 1000)
    mean = np.mean([injected_control(sig, eps, t, 0.0) for t in ts])
    assert abs(mean) < 1e-12
