import math

import numpy as np
import pytest

from fasttransport.params import NumericsConfig, PhysicalParams, TransportSpec
from fasttransport.perturbation import (
    BeamParams,
    closed_form,
    f_bang_bang,
    f_inverse,
    f_inverse_discrete,
    f_numeric,
    perturbation_report,
    perturbation_sweep,
    quartic_moment,
    tdse_overlap,
)
from fasttransport.trajectories import bang_bang_trajectory, custom_trajectory, rest_to_rest, stopping_trajectory

P1 = PhysicalParams()
BEAM = BeamParams.from_frequency(P1, 10.0)


def test_beam_constructors():
    assert BEAM.V0 == pytest.approx(50.0)
    assert BEAM.depth_ratio(P1) == pytest.approx(1.0)
    b = BeamParams.from_waist(P1, 2.0, math.pi)
    assert b.x_R == pytest.approx(4.0)
    with pytest.raises(ValueError):
        BeamParams(0.0, 1.0)


def test_quartic_moment_against_grid():
    from fasttransport.modes import oscillator_eigenfunction
    x = np.linspace(-15, 15, 6001)
    for n in (0, 3):
        rho = oscillator_eigenfunction(n, x, P1, 0.7) ** 2
        ref = np.sum(rho * (x - 0.2) ** 4) * (x[1] - x[0])
        assert quartic_moment(0.5, n, P1) == pytest.approx(ref, rel=1e-10)


def test_reference_point():
    tf = 4 * math.pi
    f = f_bang_bang(1, 0, 1.0, P1, BEAM)
    assert f < 0
    num = f_numeric(bang_bang_trajectory(TransportSpec(1.0, tf), P1), 0, P1, BEAM)
    assert num == pytest.approx(f, rel=1e-6)


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("n", [0, 1, 2])
def test_closed_forms_match_quadrature(N, n):
    d = 3.0
    spec = TransportSpec(d, 4 * math.pi * N)
    bb = f_numeric(bang_bang_trajectory(spec, P1), n, P1, BEAM)
    inv = f_numeric(rest_to_rest(spec, P1), n, P1, BEAM)
    assert f_bang_bang(N, n, d, P1, BEAM) == pytest.approx(bb, rel=1e-6)
    assert f_inverse_discrete(N, n, d, P1, BEAM) == pytest.approx(inv, rel=1e-6)


def test_general_quintic_form():
    for tf in (0.7, 3.3, 11.0):
        traj = rest_to_rest(TransportSpec(2.0, tf), P1)
        assert f_inverse(tf, 1, 2.0, P1, BEAM) == pytest.approx(f_numeric(traj, 1, P1, BEAM), rel=1e-6)


def test_discrete_and_general_forms_agree():
    p = PhysicalParams(omega0=1.7, hbar=0.8, mass=1.3)
    beam = BeamParams.from_frequency(p, 6.0)
    for N in (1, 2, 5):
        for n in (0, 4):
            tf = 4 * math.pi * N / p.omega0
            assert f_inverse(tf, n, 1.1, p, beam) == pytest.approx(f_inverse_discrete(N, n, 1.1, p, beam), rel=1e-12)


def test_inverse_beats_bang_bang():
    for omega0 in (0.3, 1.0, 4.0):
        p = PhysicalParams(omega0=omega0)
        beam = BeamParams.from_frequency(p, 10.0)
        for N in range(1, 6):
            for n in range(5):
                assert abs(f_inverse_discrete(N, n, 2.0, p, beam)) < abs(f_bang_bang(N, n, 2.0, p, beam))


def test_rayleigh_length_scaling():
    ratios = []
    for f in (f_bang_bang, f_inverse_discrete):
        lo = f(2, 1, 2.0, P1, BeamParams.from_frequency(P1, 5.0))
        hi = f(2, 1, 2.0, P1, BeamParams.from_frequency(P1, 50.0))
        ratios.append(lo / hi)
    np.testing.assert_allclose(ratios, 100.0, rtol=1e-12)


def test_diverges_at_both_frequency_limits():
    # m, hbar, d and x_R fixed; the depth follows omega0.  The low-frequency
    # branch grows like 1/omega0, the high-frequency one like omega0.
    def F(f, omega0):
        p = PhysicalParams(omega0=omega0)
        return f(1, 0, 1.0, p, BeamParams.from_frequency(p, 10.0))

    for f in (f_bang_bang, f_inverse_discrete):
        for ladder in ([1e-3, 1e-4, 1e-5], [1e3, 1e4, 1e5, 1e6, 1e7]):
            vals = np.array([F(f, w) for w in ladder])
            assert np.all(vals < 0)
            assert np.all(np.diff(vals) < 0)
            assert vals[-1] < F(f, 1.0)
        assert F(f, 1e-3) / F(f, 2e-3) == pytest.approx(2.0, rel=1e-3)


def test_zero_distance_leaves_hbar_term():
    tf = 3.0
    assert f_inverse(tf, 0, 0.0, P1, BEAM) == pytest.approx(-BEAM.V0 / BEAM.x_R**4 * 0.75 * tf, rel=1e-14)
    assert f_bang_bang(1, 2, 0.0, P1, BEAM) == pytest.approx(-BEAM.V0 / BEAM.x_R**4 * 3 * 13 * 0.25 * 4 * math.pi,
                                                             rel=1e-12)


def test_static_trap_oracle():
    tf = 2.5
    traj = rest_to_rest(TransportSpec(0.0, tf), P1)
    assert f_numeric(traj, 0, P1, BEAM) == pytest.approx(-BEAM.V0 / BEAM.x_R**4 * 3 * 0.25 * tf, rel=1e-12)


def test_time_reversal():
    traj = stopping_trajectory(TransportSpec(2.0, 3.0, v_initial=0.5), P1)
    tf = traj.duration
    rev = custom_trajectory(TransportSpec(2.0, tf), P1, qc=[lambda t: traj.qc(tf - t)],
                            q0=[lambda t: traj.q0(tf - t)])
    assert f_numeric(rev, 1, P1, BEAM) == pytest.approx(f_numeric(traj, 1, P1, BEAM), rel=1e-10)


def test_level_cap():
    with pytest.raises(ValueError):
        f_bang_bang(1, 51, 1.0, P1, BEAM)
    with pytest.raises(ValueError):
        f_numeric(rest_to_rest(TransportSpec(1.0, 1.0), P1), 51, P1, BEAM)
    with pytest.raises(ValueError):
        f_bang_bang(1.5, 0, 1.0, P1, BEAM)
    # the log-space prefactor stays finite at the cap
    assert math.isfinite(f_bang_bang(3, 50, 1.0, P1, BEAM))


def test_report():
    traj = bang_bang_trajectory(TransportSpec(2.0, 8 * math.pi), P1)
    rep = perturbation_report(traj, 1, BEAM)
    assert rep.discrepancy < 1e-6
    assert abs(rep.first_order_overlap) >= 1
    assert rep.to_dict()["first_order_overlap"]["im"] == pytest.approx(-rep.F_numeric)
    generic = bang_bang_trajectory(TransportSpec(2.0, 5.0), P1)
    assert math.isnan(closed_form(generic, 0, BEAM))
    assert math.isnan(perturbation_report(generic, 0, BEAM).discrepancy)


def test_sweep_rows():
    rows = perturbation_sweep(1.0, P1, BEAM, Ns=(1, 2), ns=(0, 1))
    assert [r[:2] for r in rows] == [(1, 0), (1, 1), (2, 0), (2, 1)]
    for _, _, bb, inv, nbb, ninv in rows:
        assert nbb == pytest.approx(bb, rel=1e-6)
        assert ninv == pytest.approx(inv, rel=1e-6)


@pytest.mark.slow
def test_tdse_overlap_is_second_order():
    beam = BeamParams.from_frequency(P1, 20.0)
    traj = rest_to_rest(TransportSpec(2.0, 2 * math.pi), P1)
    F = f_numeric(traj, 0, P1, beam)
    numerics = NumericsConfig(grid_padding=14, time_step=0.005, samples=2)
    err = [abs(tdse_overlap(traj, beam, 0, s, numerics) - complex(1, -s * F)) for s in (1.0, 0.5)]
    assert err[0] / err[1] == pytest.approx(4.0, abs=0.5)
