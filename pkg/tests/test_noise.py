import numpy as np

from qqsd.model import SystemParams
from qqsd.noise import (autocorrelation_stats, fill_shifted, sample_ou_block,
                        sample_ou_path, sample_ou_values, stationary_variance,
                        trajectory_rng, update_shift)


def test_reproducible_paths():
    p = SystemParams(gamma=0.3, dt=1e-3, t_max=1.0, seed=42)
    z1 = sample_ou_values(p, trajectory_rng(p.seed, 3))
    z2 = sample_ou_values(p, trajectory_rng(p.seed, 3))
    assert np.array_equal(z1, z2)
    z3 = sample_ou_values(p, trajectory_rng(p.seed, 4))
    assert not np.array_equal(z1, z3)


def test_block_rows_independent_of_grouping():
    p = SystemParams(gamma=0.3, dt=1e-2, t_max=1.0, seed=11)
    whole = sample_ou_block(p, range(6))
    parts = np.vstack([sample_ou_block(p, range(0, 2)),
                       sample_ou_block(p, range(2, 6))])
    assert np.array_equal(whole, parts)


def test_path_length_matches_grid():
    p = SystemParams(dt=1e-3, t_max=2.0)
    path = sample_ou_path(p, trajectory_rng(p.seed, 0))
    assert len(path) == p.n_points == 2001


def test_stationary_variance_every_time():
    p = SystemParams(Gamma=1.0, gamma=0.3, dt=0.05, t_max=5.0, seed=5)
    block = sample_ou_block(p, range(4000))
    var = (np.abs(block) ** 2).mean(axis=0)
    se = (np.abs(block) ** 2).std(axis=0, ddof=1) / np.sqrt(block.shape[0])
    target = stationary_variance(p)
    assert target == 0.15
    assert np.all(np.abs(var - target) < 5 * se)


def test_mean_and_pseudo_correlation_vanish():
    p = SystemParams(Gamma=1.0, gamma=0.3, dt=0.05, t_max=5.0, seed=6)
    block = sample_ou_block(p, range(4000))
    mean = block.mean(axis=0)
    se = np.abs(block).std(axis=0, ddof=1) / np.sqrt(block.shape[0])
    assert np.all(np.abs(mean) < 5 * se)
    prod = block[:, 40] * block[:, 10]
    se_p = np.abs(prod).std(ddof=1) / np.sqrt(len(prod))
    assert abs(prod.mean()) < 5 * se_p


def test_autocorrelation_matches_exponential_kernel():
    p = SystemParams(Gamma=1.0, gamma=0.3, dt=0.05, t_max=12.0, seed=7)
    stats = autocorrelation_stats(p, 5000, [0, 20, 60, 200])
    dev = np.abs(stats["corr"] - stats["target"])
    assert np.all(dev < 5 * stats["corr_stderr"])
    assert np.all(np.abs(stats["pseudo"]) < 5 * stats["pseudo_stderr"])


def test_one_step_increment_variance_diffusive_limit():
    # exact one-step increment variance is Gamma*gamma*(1 - exp(-gamma*dt))
    p = SystemParams(Gamma=2.0, gamma=0.2, dt=1e-3, t_max=1.0, seed=8)
    a = np.exp(-p.gamma * p.dt)
    exact = p.Gamma * p.gamma * (1 - a)
    diffusive = p.Gamma * p.gamma**2 * p.dt
    assert abs(exact - diffusive) / diffusive < 1e-3
    block = sample_ou_block(p, range(3000))
    inc = block[:, 1:] - block[:, :-1]
    emp = (np.abs(inc) ** 2).mean()
    se = (np.abs(inc) ** 2).std(ddof=1) / np.sqrt(inc.size)
    assert abs(emp - exact) < 6 * se


def test_update_shift_zero_drive():
    p = SystemParams(Gamma=1.0, gamma=0.3)
    m = 0.0 + 0.0j
    for _ in range(50):
        m = update_shift(m, 0.0, p)
    assert m == 0.0


def test_update_shift_single_step_value():
    p = SystemParams(Gamma=1.0, gamma=0.3, dt=0.01, t_max=1.0)
    m = update_shift(0.0, 1.0, p)
    assert np.isclose(m, 0.0015)


def test_fill_shifted_zero_history_is_identity():
    p = SystemParams(gamma=0.3, dt=1e-2, t_max=1.0, seed=21)
    path = sample_ou_path(p, trajectory_rng(p.seed, 0))
    fill_shifted(path, np.zeros(len(path)), p)
    assert np.array_equal(path.shifted, path.values)
    assert path.shift_memory == 0.0


def test_fill_shifted_accumulates_memory():
    p = SystemParams(Gamma=1.0, gamma=0.3, dt=1e-2, t_max=1.0, seed=22)
    path = sample_ou_path(p, trajectory_rng(p.seed, 0))
    fill_shifted(path, np.ones(len(path)), p)
    assert path.shifted[0] == path.values[0]
    m1 = 0.5 * p.Gamma * p.gamma * p.dt
    assert np.isclose(path.shifted[1] - path.values[1], m1)


def test_update_shift_stationary_value():
    p = SystemParams(Gamma=1.0, gamma=0.3, dt=1e-3, t_max=1.0)
    c = 0.8 - 0.4j
    m = 0.0 + 0.0j
    for _ in range(60000):
        m = update_shift(m, c, p)
    assert abs(m - c * p.Gamma / 2) < 1e-3 * abs(c)
