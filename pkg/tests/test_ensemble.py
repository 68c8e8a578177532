import numpy as np
import pytest

import qqsd.backend as backend
from qqsd.ensemble import (EnsembleError, _batch_ranges, _pairwise_sum,
                           observable_series, run_ensemble)
from qqsd.model import SystemParams, build_hamiltonian, make_initial_state


def test_single_closed_trajectory_is_pure_projector():
    p = SystemParams(Gamma=0.0, gamma=0.3, dt=1e-3, t_max=1.0, n_traj=1, seed=4)
    dens = run_ensemble(p, initial_state="bell", stride=0.25)
    H = build_hamiltonian(p)
    psi0 = make_initial_state("bell")
    for t, rho in zip(dens.times, dens.rho):
        psi = np.exp(-1j * np.real(np.diag(H)) * t) * psi0
        assert np.allclose(rho, np.outer(psi, psi.conj()), atol=1e-8)
        assert abs(np.trace(rho @ rho).real - 1.0) < 1e-9


def test_initial_density_matrix_is_bell_projector():
    p = SystemParams(gamma=0.3, dt=1e-3, t_max=0.1, n_traj=8, seed=5)
    dens = run_ensemble(p, initial_state="bell", stride=0.05)
    rho0 = dens.rho[0]
    assert np.isclose(rho0[0, 0].real, 0.5)
    assert np.isclose(rho0[3, 3].real, 0.5)
    assert np.isclose(rho0[0, 3].real, 0.5)
    assert abs(rho0[1, 1]) < 1e-15


def test_trace_hermiticity_positivity_band():
    p = SystemParams(gamma=0.3, dt=1e-3, t_max=0.6, n_traj=60, seed=6)
    dens = run_ensemble(p, initial_state="bell", stride=0.1)
    traces = np.einsum('sii->s', dens.rho)
    assert np.allclose(traces.real, 1.0, atol=1e-9)
    assert np.abs(traces.imag).max() < 1e-12
    herm = np.abs(dens.rho - np.conj(np.swapaxes(dens.rho, 1, 2))).max()
    assert herm < 1e-12
    se_scale = np.nanmax(dens.stderr_negativity) + 1e-6
    for rho in dens.rho:
        assert np.linalg.eigvalsh(rho).min() >= -5 * se_scale


def test_determinism_bitwise_same_seed():
    p = SystemParams(gamma=0.3, dt=1e-3, t_max=0.3, n_traj=12, seed=7)
    d1 = run_ensemble(p, initial_state="bell", stride=0.05)
    d2 = run_ensemble(p, initial_state="bell", stride=0.05)
    assert np.array_equal(d1.rho, d2.rho)
    assert np.array_equal(d1.stderr_negativity, d2.stderr_negativity)


def test_determinism_across_worker_counts():
    if not backend.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    import numba
    p = SystemParams(gamma=0.3, dt=1e-3, t_max=0.3, n_traj=12, seed=8)
    saved = numba.get_num_threads()
    try:
        numba.set_num_threads(1)
        d1 = run_ensemble(p, initial_state="bell", stride=0.05)
        numba.set_num_threads(min(4, numba.config.NUMBA_NUM_THREADS))
        d2 = run_ensemble(p, initial_state="bell", stride=0.05)
    finally:
        numba.set_num_threads(saved)
    assert np.array_equal(d1.rho, d2.rho)


def test_ensemble_linearity_over_seed_ranges():
    base = dict(gamma=0.3, dt=1e-3, t_max=0.2, seed=9)
    p_all = SystemParams(n_traj=24, **base)
    p_a = SystemParams(n_traj=16, **base)
    p_b = SystemParams(n_traj=8, **base)
    d_all = run_ensemble(p_all, initial_state="bell", stride=0.05)
    d_a = run_ensemble(p_a, initial_state="bell", stride=0.05)
    d_b = run_ensemble(p_b, initial_state="bell", stride=0.05,
                       index_offset=16)
    combined = (16 * d_a.rho + 8 * d_b.rho) / 24
    assert np.allclose(d_all.rho, combined, rtol=0, atol=1e-13)


def test_stderr_scales_like_inverse_sqrt_n():
    base = dict(gamma=0.3, kappa=1.0, dt=2e-3, t_max=2.0, seed=10)
    se = {}
    for n in (250, 1000, 4000):
        p = SystemParams(n_traj=n, **base)
        d = run_ensemble(p, initial_state="bell", stride=0.25)
        se[n] = np.nanmean(d.stderr_negativity[1:])
    r1 = se[250] / se[1000]
    r2 = se[1000] / se[4000]
    assert 2.0 / 1.5 < r1 < 2.0 * 1.5
    assert 2.0 / 1.5 < r2 < 2.0 * 1.5


def test_truncation_orders_agree_near_markov():
    # with short bath memory the first-order noise functionals are small,
    # so both truncation orders give nearly the same ensemble
    base = dict(gamma=3.0, kappa=1.0, dt=1e-3, t_max=2.0, n_traj=200, seed=15)
    d1 = run_ensemble(SystemParams(order=1, **base), initial_state="bell",
                      stride=0.2)
    d0 = run_ensemble(SystemParams(order=0, **base), initial_state="bell",
                      stride=0.2)
    dn = np.abs(d1.negativity_series() - d0.negativity_series()).max()
    assert np.isfinite(dn)
    assert dn < 0.05


def test_halved_dt_within_monte_carlo_band():
    # dt robustness holds at the ensemble level: halving dt moves the
    # negativity by less than the Monte Carlo error band
    curves = {}
    for dt in (2e-3, 1e-3):
        p = SystemParams(gamma=0.3, kappa=1.0, dt=dt, t_max=2.0, n_traj=400,
                         seed=14)
        d = run_ensemble(p, initial_state="bell", stride=0.2)
        curves[dt] = (d.negativity_series(), d.stderr_negativity)
    n1, s1 = curves[2e-3]
    n2, s2 = curves[1e-3]
    band = np.hypot(s1, s2)[1:]
    assert np.all(np.abs(n1 - n2)[1:] <= 4 * band)


def test_failure_rate_threshold_raises():
    p = SystemParams(gamma=0.3, dt=1e-3, t_max=0.2, n_traj=8, seed=11)
    with pytest.raises(EnsembleError, match="failed"):
        run_ensemble(p, initial_state="bell", mode="linear", stride=0.05,
                     linear_norm_cap=1.0 + 1e-9)


def test_observable_series_basics():
    p = SystemParams(gamma=0.3, dt=1e-3, t_max=0.2, n_traj=10, seed=12)
    dens = run_ensemble(p, initial_state="bell", stride=0.05)
    t, neg, se = observable_series(dens, "negativity")
    assert np.isclose(neg[0], 1.0, atol=1e-12)
    t, pops, se_p = observable_series(dens, "populations")
    assert np.allclose(pops.sum(axis=1), 1.0, atol=1e-9)
    t, pur, _ = observable_series(dens, "purity")
    assert np.isclose(pur[0], 1.0, atol=1e-12)
    t, coh, _ = observable_series(dens, "coherences")
    assert coh.shape == (len(t), 15)
    with pytest.raises(ValueError):
        observable_series(dens, "entropy")


def test_pairwise_sum_and_batches():
    arrays = [np.full((2, 2), float(i)) for i in range(7)]
    assert np.allclose(_pairwise_sum(arrays), sum(arrays))
    ranges = _batch_ranges(10, 20)
    assert ranges[0] == (0, 1) and ranges[-1] == (9, 10) and len(ranges) == 10
    ranges = _batch_ranges(100, 20)
    assert len(ranges) == 20
    assert sum(b - a for a, b in ranges) == 100


def _trace_distance(a, b):
    return 0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum()


def test_linear_mode_mean_matches_nonlinear_at_short_time():
    # the combined standard error of the full matrix is calibrated from
    # disjoint-seed replicas of each mode (replica distance ~ sqrt(2) sigma)
    base = dict(gamma=0.3, kappa=1.0, Gamma=1.0, dt=1e-3, t_max=1.0, seed=13)
    p = SystemParams(n_traj=800, **base)
    runs = {}
    for mode in ("nonlinear", "linear"):
        runs[mode, "a"] = run_ensemble(p, initial_state="bell", mode=mode,
                                       stride=0.25)
        runs[mode, "b"] = run_ensemble(p, initial_state="bell", mode=mode,
                                       stride=0.25, index_offset=800)
    n_strides = len(runs["nonlinear", "a"].times)
    sigma = np.empty(n_strides)
    for k in range(n_strides):
        s_nl = _trace_distance(runs["nonlinear", "a"].rho[k],
                               runs["nonlinear", "b"].rho[k]) / np.sqrt(2)
        s_li = _trace_distance(runs["linear", "a"].rho[k],
                               runs["linear", "b"].rho[k]) / np.sqrt(2)
        sigma[k] = np.hypot(s_nl, s_li)
    floor = sigma[1:].mean()
    for k in range(n_strides):
        td = _trace_distance(runs["nonlinear", "a"].rho[k],
                             runs["linear", "a"].rho[k])
        assert td <= 3 * max(sigma[k], floor)
