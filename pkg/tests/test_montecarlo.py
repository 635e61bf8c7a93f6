import numpy as np
import pytest
from scipy import stats

from rtnsim.bloch import to_bloch
from rtnsim.entanglement import Family, InitialState
from rtnsim.montecarlo import (
    ensemble_average,
    evolve_trajectory,
    sample_trajectory,
    trajectory_rng,
)
from rtnsim.noise import QubitSpec, RtnSource, two_qubit_transfer

SRC = RtnSource(0.1, np.pi / 3, 0.05, np.pi / 2)


def test_trajectory_properties():
    tr = sample_trajectory(SRC, 500.0, seed=3)
    assert tr.initial_sign in (1, -1)
    assert np.all(np.diff(tr.switch_times) > 0)
    assert tr.switch_times[0] >= 0 and tr.switch_times[-1] <= 500.0
    again = sample_trajectory(SRC, 500.0, seed=3)
    np.testing.assert_array_equal(tr.switch_times, again.switch_times)
    assert tr.sign_at(0.0) == tr.initial_sign
    assert tr.sign_at(tr.switch_times[0]) == -tr.initial_sign


def test_waiting_times_exponential_and_signs_unbiased():
    # long windows: gaps cut by the window end would bias a short-window sample
    gaps = np.concatenate([np.diff(sample_trajectory(SRC, 1e5, trajectory_rng(7, i)).switch_times,
                                   prepend=0.0) for i in range(3)])
    assert stats.kstest(gaps, "expon", args=(0, 1 / SRC.gamma)).pvalue > 1e-3
    signs = [sample_trajectory(SRC, 1.0, trajectory_rng(8, i)).initial_sign for i in range(400)]
    assert abs(np.mean(signs)) < 4 / np.sqrt(len(signs))


def test_static_single_run_matches_evolve_trajectory():
    src = RtnSource(0.1, 0.6, 0.0, 0.2)
    specs = (QubitSpec(1.0, src), QubitSpec(1.0))
    st_ = InitialState(Family.PHI)
    grid = np.linspace(0, 50, 26)
    res = ensemble_average(specs, st_, grid, n_runs=1, seed=11)
    tr = sample_trajectory(src, grid[-1], trajectory_rng(11, 0, 0))
    assert len(tr.switch_times) == 0
    rho = evolve_trajectory([tr, None], specs, st_.density_matrix(), grid)
    np.testing.assert_allclose(res.rho_mean, rho, atol=1e-14)


def test_single_trajectory_evolution_is_unitary_rotation():
    # closed-form check of one history: rotation about b0 z + s g then about b0 z - s g
    specs = (QubitSpec(1.0, SRC), QubitSpec(1.0))
    tr = sample_trajectory(SRC, 30.0, seed=2)
    grid = np.linspace(0, 30, 31)
    rho = evolve_trajectory([tr, None], specs, InitialState(Family.PSI).density_matrix(), grid)
    purity = np.einsum("mij,mji->m", rho, rho).real
    np.testing.assert_allclose(purity, 1.0, atol=1e-12)


def test_seed_determinism_and_partition_independence():
    specs = (QubitSpec(1.0, SRC), QubitSpec(1.0, RtnSource(0.1, 0.0, 0.5)))
    grid = np.linspace(0, 40, 21)
    st_ = InitialState(Family.PHI, r=0.7)
    a = ensemble_average(specs, st_, grid, n_runs=300, seed=4, chunk_size=64, workers=1)
    b = ensemble_average(specs, st_, grid, n_runs=300, seed=4, chunk_size=64, workers=1)
    c = ensemble_average(specs, st_, grid, n_runs=300, seed=4, chunk_size=64, workers=2)
    np.testing.assert_array_equal(a.rho_mean, b.rho_mean)
    np.testing.assert_array_equal(a.rho_mean, c.rho_mean)
    np.testing.assert_array_equal(a.stderr, c.stderr)
    d = ensemble_average(specs, st_, grid, n_runs=300, seed=5, chunk_size=64, workers=1)
    assert not np.array_equal(a.rho_mean, d.rho_mean)


def test_mean_state_is_a_density_matrix():
    specs = (QubitSpec(1.0, SRC), QubitSpec(1.0))
    res = ensemble_average(specs, InitialState(Family.PHI), np.linspace(0, 100, 11), n_runs=200, seed=1)
    to_bloch(res.rho_mean)  # Hermitian, unit trace
    assert np.all(np.linalg.eigvalsh(res.rho_mean) > -1e-12)


def test_stderr_scaling():
    specs = (QubitSpec(1.0, SRC), QubitSpec(1.0))
    grid = np.linspace(0, 60, 7)[1:]
    st_ = InitialState(Family.PHI)
    s1 = ensemble_average(specs, st_, grid, n_runs=2000, seed=9).stderr
    s2 = ensemble_average(specs, st_, grid, n_runs=4000, seed=9).stderr
    mask = s1 > 1e-3
    ratio = np.median(s1[mask] / s2[mask])
    assert ratio == pytest.approx(np.sqrt(2), rel=0.10)


def test_smoke_agreement_with_transfer_matrix():
    specs = (QubitSpec(1.0, SRC), QubitSpec(1.0))
    grid = np.linspace(0, 200, 101)
    st_ = InitialState(Family.PHI)
    res = ensemble_average(specs, st_, grid, n_runs=4000, seed=21)
    exact = two_qubit_transfer(*specs, grid) @ st_.bloch()
    assert np.abs(res.bloch - exact).max() <= 0.07


def test_validation():
    specs = (QubitSpec(1.0, SRC), QubitSpec(1.0))
    with pytest.raises(ValueError):
        ensemble_average(specs, InitialState(Family.PHI), [0, 1], n_runs=0)
    with pytest.raises(ValueError):
        sample_trajectory(SRC, 0.0, seed=1)
    tr = sample_trajectory(SRC, 5.0, seed=1)
    with pytest.raises(ValueError):
        evolve_trajectory([tr, None], specs, InitialState(Family.PHI).density_matrix(), [0, 10])
