"""Feedback-linearization baseline and Chebyshev reference controls."""

import numpy as np
import pytest

from gramsynth import (NotFullyActuated, SteeringProblem,
                       chebyshev_reference_control, control_energy,
                       feedback_linearization_baseline, linear_system,
                       make_benchmark, solve_trajectory)


def test_baseline_integrator_chain():
    # pure integrators, B = Id: constant control along the straight line
    system = linear_system(np.zeros((2, 2)), np.eye(2))
    problem = SteeringProblem(system, np.zeros(2), np.array([1.0, 2.0]),
                              0.0, 2.0)
    u, energy = feedback_linearization_baseline(problem)
    assert np.allclose(u(0.3), [0.5, 1.0])
    assert energy == pytest.approx(np.linalg.norm([1.0, 2.0]) ** 2 / 4.0)


def test_baseline_zero_displacement():
    system = linear_system(np.zeros((2, 2)), np.eye(2))
    problem = SteeringProblem(system, np.ones(2), np.ones(2), 0.0, 1.0)
    u, energy = feedback_linearization_baseline(problem)
    assert np.allclose(u(0.7), np.zeros(2))
    assert energy == pytest.approx(0.0, abs=1e-15)


def test_baseline_hopfield_exact_steering(tight_solver):
    system, problem = make_benchmark("hopfield2d_full")
    u, energy = feedback_linearization_baseline(problem)
    traj = solve_trajectory(problem, u, tight_solver)
    assert np.linalg.norm(traj.endpoint - problem.x1) <= 1e-8
    assert energy > 0.0


def test_baseline_requires_full_actuation():
    system, problem = make_benchmark("unicycle")
    with pytest.raises(NotFullyActuated):
        feedback_linearization_baseline(problem)
    system, problem = make_benchmark("hopfield2d_under")
    with pytest.raises(NotFullyActuated):
        feedback_linearization_baseline(problem)


def test_chebyshev_zero_coefficients():
    u = chebyshev_reference_control(2, (0.0, 3.0),
                                    coefficients=np.zeros((2, 6)))
    assert np.array_equal(u(1.0), np.zeros(2))


def test_chebyshev_constant_term():
    coeff = np.zeros((1, 6))
    coeff[0, 0] = 1.0
    u = chebyshev_reference_control(1, (0.0, 2.0), coefficients=coeff)
    for t in (0.0, 0.77, 2.0):
        assert u(t) == pytest.approx([1.0])


def test_chebyshev_linear_term_maps_span():
    # T1(s) = s on the mapped interval
    coeff = np.zeros((1, 6))
    coeff[0, 1] = 1.0
    u = chebyshev_reference_control(1, (1.0, 3.0), coefficients=coeff)
    assert u(1.0) == pytest.approx([-1.0])
    assert u(2.0) == pytest.approx([0.0], abs=1e-15)
    assert u(3.0) == pytest.approx([1.0])


def test_chebyshev_seed_determinism():
    a = chebyshev_reference_control(3, (0.0, 1.0), seed=9)
    b = chebyshev_reference_control(3, (0.0, 1.0), seed=9)
    ts = np.linspace(0.0, 1.0, 11)
    assert np.array_equal(a.eval_many(ts), b.eval_many(ts))
    assert np.array_equal(a.coefficients, b.coefficients)
    c = chebyshev_reference_control(3, (0.0, 1.0), seed=10)
    assert not np.array_equal(a.coefficients, c.coefficients)


def test_chebyshev_eval_many_matches_scalar():
    u = chebyshev_reference_control(2, (0.0, 1.0), seed=4)
    ts = np.linspace(0.0, 1.0, 9)
    batch = u.eval_many(ts)
    single = np.stack([u(float(t)) for t in ts])
    assert np.allclose(batch, single, atol=1e-15)


def test_chebyshev_energy_positive():
    u = chebyshev_reference_control(2, (0.0, 1.0), seed=4)
    assert control_energy(u, 0.0, 1.0) > 0.0
