import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import eval_hermite

from fasttransport.modes import (
    N_CAP,
    TransportMode,
    hermite_functions,
    invariant_expectation,
    lr_phase,
    mode_populations,
    mode_wavefunction,
    oscillator_eigenfunction,
)
from fasttransport.params import NumericsConfig, PhysicalParams, TransportSpec
from fasttransport.trajectories import bang_bang_trajectory, rest_to_rest, stopping_trajectory
from fasttransport.wavefunction import Grid, WaveFunction, grid_for

P1 = PhysicalParams()


def test_hermite_functions_against_scipy():
    xi = np.linspace(-4, 4, 9)
    phi = hermite_functions(6, xi)
    for n in range(7):
        ref = eval_hermite(n, xi) * np.exp(-xi**2 / 2) / math.sqrt(2**n * math.factorial(n) * math.sqrt(math.pi))
        np.testing.assert_allclose(phi[n], ref, rtol=1e-12, atol=1e-15)


def test_hermite_functions_orthonormal_at_cap():
    xi = np.linspace(-14, 14, 4001)
    phi = hermite_functions(N_CAP, xi)
    gram = phi @ phi.T * (xi[1] - xi[0])
    np.testing.assert_allclose(gram, np.eye(N_CAP + 1), atol=1e-10)
    assert np.all(np.isfinite(phi))


def test_hermite_cap():
    with pytest.raises(ValueError):
        hermite_functions(N_CAP + 1, 0.0)
    with pytest.raises(ValueError):
        TransportMode(51, None)


def test_eigenvalue():
    traj = rest_to_rest(TransportSpec(1.0, 1.0), PhysicalParams(omega0=2.0, hbar=0.5))
    assert TransportMode(3, traj).eigenvalue == pytest.approx(3.5)


def test_mode_at_t0_is_eigenfunction():
    traj = rest_to_rest(TransportSpec(3.0, 4.0), P1)
    grid = grid_for(traj, NumericsConfig(grid_points=1024), n=2)
    psi = mode_wavefunction(TransportMode(2, traj), 0.0, grid)
    np.testing.assert_allclose(psi.amplitudes, oscillator_eigenfunction(2, grid.x, P1), atol=1e-15)


def test_mode_moments():
    traj = rest_to_rest(TransportSpec(5.0, 3.0), P1)
    grid = grid_for(traj, NumericsConfig())
    for t in (0.7, 1.5, 2.2):
        psi = mode_wavefunction(TransportMode(0, traj), t, grid)
        assert psi.norm() == pytest.approx(1.0, abs=1e-10)
        assert psi.expect_x() == pytest.approx(float(traj.qc(t)), rel=1e-8)
        assert psi.expect_p(1.0) == pytest.approx(float(traj.qc(t, 1)), rel=1e-8)


def test_stopping_mode_at_t0_is_boosted():
    v0 = 0.6
    traj = stopping_trajectory(TransportSpec(2.0, 4.0, v_initial=v0), P1)
    grid = grid_for(traj, NumericsConfig(grid_points=1024))
    psi = mode_wavefunction(TransportMode(1, traj), 0.0, grid)
    ref = np.exp(1j * v0 * grid.x) * oscillator_eigenfunction(1, grid.x, P1)
    np.testing.assert_allclose(psi.amplitudes, ref, atol=1e-14)


def test_norm_deficit_raises():
    traj = rest_to_rest(TransportSpec(1.0, 2.0), P1)
    with pytest.raises(ValueError, match="norm deficit"):
        mode_wavefunction(TransportMode(0, traj), 1.0, Grid.spanning(0.0, 1.0, 64))


def test_lr_phase_examples():
    traj = rest_to_rest(TransportSpec(1.0, 1.0), P1)
    mode = TransportMode(0, traj)
    assert lr_phase(mode, 0.0) == 0.0
    ref = -0.5 - 0.5 * quad(lambda t: float(traj.qc(t, 1)) ** 2, 0, 1, epsabs=1e-14)[0]
    assert lr_phase(mode, 1.0) == pytest.approx(ref, rel=1e-12)
    # q_c' = 30 s^2 (1 - s)^2, whose square integrates to 900 B(5, 5) = 10/7
    assert lr_phase(mode, 1.0) == pytest.approx(-0.5 - 0.5 * 10 / 7, rel=1e-12)


def test_lr_phase_static_trap():
    traj = rest_to_rest(TransportSpec(0.0, 3.0), P1)
    assert lr_phase(TransportMode(2, traj), 3.0) == pytest.approx(-2.5 * 3.0)


def test_invariant_of_modes():
    traj = rest_to_rest(TransportSpec(4.0, 2.5), P1)
    grid = grid_for(traj, NumericsConfig(), n=3)
    for n in (0, 3):
        for t in (0.0, 0.9, 2.0):
            psi = mode_wavefunction(TransportMode(n, traj), t, grid)
            assert invariant_expectation(psi, traj, t) == pytest.approx(n + 0.5, rel=1e-10)


def test_invariant_by_basis_expansion():
    # phi_0 at rest, seen by the bang-bang invariant at t_f / 2
    tf = 5.0
    traj = bang_bang_trajectory(TransportSpec(2.0, tf), P1)
    grid = grid_for(traj, NumericsConfig())
    psi = WaveFunction(oscillator_eigenfunction(0, grid.x, P1), grid)
    t = tf / 2
    pops = mode_populations(psi, traj, t, n_max=40)
    assert pops.sum() == pytest.approx(1.0, abs=1e-10)
    brute = np.sum((np.arange(41) + 0.5) * pops)
    assert invariant_expectation(psi, traj, t) == pytest.approx(brute, rel=1e-9)


def test_populations_of_a_mode():
    traj = rest_to_rest(TransportSpec(3.0, 2.0), P1)
    grid = grid_for(traj, NumericsConfig())
    psi = mode_wavefunction(TransportMode(0, traj), 1.3, grid)
    pops = mode_populations(psi, traj, 1.3, n_max=5)
    np.testing.assert_allclose(pops, [1, 0, 0, 0, 0, 0], atol=1e-12)


def test_lab_gauge_phase_differs_only_when_displaced():
    traj = rest_to_rest(TransportSpec(0.0, 2.0), P1)
    mode = TransportMode(0, traj)
    assert lr_phase(mode, 2.0, lab_gauge=True) == pytest.approx(lr_phase(mode, 2.0))
