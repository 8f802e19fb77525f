"""Colored-noise sampling and the linear stochastic unraveling engine."""

import numpy as np
import pytest

from qbmlab.bath import CorrelationKernel, SpectralDensity, ThermalBathSpec
from qbmlab.dynamics import (
    GaussianMomentState,
    MasterEquationSpec,
    NumericalFailure,
    SystemSpec,
    integrate_moments,
)
from qbmlab.fock import alpha_from_moments, coherent_state, position_momentum
from qbmlab.stochastic import (
    EnsembleHealthWarning,
    NoiseFactorizationError,
    NoiseSpec,
    SSEConfig,
    ccl_sse_config,
    empirical_noise_moments,
    ensemble_run,
    sample_colored_noise,
    sse_trajectory,
)

SYS = SystemSpec(m=1.0, omega_S=1.0)


# --------------------------------------------------------- colored noise

@pytest.fixture(scope="module")
def bath_noise_spec():
    bath = ThermalBathSpec(SpectralDensity(1.0, 0.5, 5.0), T=2.0)
    grid = np.linspace(0.0, 3.0, 16)
    kernel = CorrelationKernel.from_bath(bath, grid)
    return NoiseSpec.from_kernel(kernel, grid)


def test_sampled_noise_reproduces_kernel_moments(bath_noise_spec):
    spec = bath_noise_spec
    rng = np.random.default_rng(7)
    z = sample_colored_noise(spec, 30_000, rng)
    assert z.shape == (30_000, 16) and np.iscomplexobj(z)
    est = empirical_noise_moments(z)
    floor = 1e-12
    assert np.all(np.abs((est.D - spec.D).real)
                  <= 5.0 * np.maximum(est.se_D_re, floor))
    assert np.all(np.abs((est.D - spec.D).imag)
                  <= 5.0 * np.maximum(est.se_D_im, floor))
    # relation moments were requested to vanish
    assert np.all(np.abs(est.S.real) <= 5.0 * np.maximum(est.se_S_re, floor))
    assert np.all(np.abs(est.S.imag) <= 5.0 * np.maximum(est.se_S_im, floor))


def test_noise_with_full_relation_matrix_is_real():
    grid = np.linspace(0.0, 1.0, 5)
    d = np.exp(-np.abs(grid[:, None] - grid[None, :])).astype(complex)
    spec = NoiseSpec(grid=grid, D=d, S=d)
    z = sample_colored_noise(spec, 4000, np.random.default_rng(3))
    assert np.max(np.abs(z.imag)) <= 1e-7 * np.max(np.abs(z.real))
    est = empirical_noise_moments(z)
    assert np.all(np.abs((est.D - d).real)
                  <= 5.0 * np.maximum(est.se_D_re, 1e-12))


def test_unrealizable_relation_matrix_raises():
    grid = np.array([0.0, 1.0])
    d = np.eye(2, dtype=complex)
    spec = NoiseSpec(grid=grid, D=d, S=3.0 * d)
    with pytest.raises(NoiseFactorizationError, match="negative eigenvalue"):
        sample_colored_noise(spec, 10, np.random.default_rng(0))


def test_noise_spec_validation():
    grid = np.array([0.0, 1.0])
    with pytest.raises(ValueError, match="Hermitian"):
        NoiseSpec(grid=grid, D=np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="symmetric"):
        NoiseSpec(grid=grid, D=np.eye(2),
                  S=np.array([[0.0, 0.3], [-0.3, 0.0]]))
    with pytest.raises(ValueError, match=r"\(n, n\)"):
        NoiseSpec(grid=grid, D=np.eye(3))


def test_empirical_moments_need_two_samples():
    with pytest.raises(ValueError, match="two samples"):
        empirical_noise_moments(np.ones((1, 4)))


# --------------------------------------------------------- configuration

def test_config_validation():
    kw = dict(system=SYS, alpha=1.0, beta=0.1, dim=8, dt=1e-2,
              n_traj=10, seed=1)
    with pytest.raises(ValueError, match="S_scalar"):
        SSEConfig(D_scalar=1.0, S_scalar=1.5, **kw)
    with pytest.raises(ValueError, match="non-negative"):
        SSEConfig(D_scalar=-1.0, **kw)
    with pytest.raises(ValueError, match="seed"):
        SSEConfig(D_scalar=1.0, seed=2 ** 64,
                  **{k: v for k, v in kw.items() if k != "seed"})
    with pytest.raises(ValueError, match="dim"):
        SSEConfig(D_scalar=1.0, **{**kw, "dim": 1})


def test_ccl_config_prefactors():
    cfg = ccl_sse_config(SYS, gamma=0.05, T=2.0, dim=10, dt=1e-2,
                         n_traj=100, seed=5)
    assert cfg.alpha == 1.0
    assert cfg.beta == pytest.approx(1.0 / 8.0, rel=1e-12)
    assert cfg.D_scalar == pytest.approx(0.4, rel=1e-12)
    assert cfg.qp_hamiltonian == pytest.approx(0.05, rel=1e-12)
    with pytest.raises(ValueError, match="gamma"):
        ccl_sse_config(SYS, gamma=-0.1, T=2.0, dim=10, dt=1e-2,
                       n_traj=100, seed=5)


# ------------------------------------------------------------- the engine

def _one_step_expectation(config, psi0):
    """Exact ensemble expectation of every observable after one step."""
    c = config.constants
    q, p = position_momentum(config.dim, config.system, c)
    m = config.system.m
    h_det = p @ p / (2.0 * m) \
        + 0.5 * m * config.system.omega_S ** 2 * (q @ q) \
        + 0.5 * config.qp_hamiltonian * (q @ p + p @ q)
    a_op = config.alpha * q + 1j * config.beta * p
    drift = -1j * h_det / c.hbar \
        - 0.5 * config.D_scalar * (a_op.conj().T @ a_op)
    m_step = np.eye(config.dim) + config.dt * drift
    rho0 = np.outer(psi0, psi0.conj())
    rho1 = m_step @ rho0 @ m_step.conj().T \
        + config.dt * config.D_scalar * (a_op @ rho0 @ a_op.conj().T)
    obs = {"norm2": np.eye(config.dim), "q": q, "p": p, "qq": q @ q,
           "pp": p @ p, "qp": 0.5 * (q @ p + p @ q)}
    return {k: float(np.trace(o @ rho1).real) for k, o in obs.items()}, \
        {k: float(np.trace(o @ rho0).real) for k, o in obs.items()}


def test_one_step_mean_matches_exact_expectation():
    config = SSEConfig(system=SYS, alpha=1.0, beta=0.3, D_scalar=0.8,
                       S_scalar=0.8 * (0.3 + 0.4j), qp_hamiltonian=0.1,
                       dim=14, dt=0.05, t_span=(0.0, 0.05), store_every=1,
                       n_traj=20_000, seed=11)
    psi0 = coherent_state(14, 0.6 + 0.2j)
    result = ensemble_run(config, psi0)
    exact1, exact0 = _one_step_expectation(config, psi0)
    for name in ("norm2", "q", "p", "qq", "pp", "qp"):
        assert result.means[name][0] == pytest.approx(exact0[name], rel=1e-10)
        z = abs(result.means[name][1] - exact1[name]) \
            / max(result.stderr[name][1], 1e-15)
        assert z < 4.0, f"{name}: z = {z:.2f}"


def test_ensemble_is_bit_deterministic():
    config = SSEConfig(system=SYS, alpha=1.0, beta=0.2, D_scalar=0.5,
                       dim=8, dt=1e-2, t_span=(0.0, 0.5), store_every=10,
                       n_traj=600, seed=42)
    psi0 = coherent_state(8, 0.4)
    runs = [ensemble_run(config, psi0, threads=th) for th in (1, 4, 1)]
    for other in runs[1:]:
        for name in runs[0].means:
            assert np.array_equal(runs[0].means[name], other.means[name])
            assert np.array_equal(runs[0].stderr[name], other.stderr[name])
        assert np.array_equal(runs[0].alive, other.alive)


def test_means_do_not_depend_on_relation_scalar():
    common = dict(system=SYS, alpha=1.0, beta=0.125, D_scalar=0.4,
                  qp_hamiltonian=0.05, dim=12, dt=5e-3, t_span=(0.0, 0.5),
                  store_every=20, n_traj=2000, seed=13)
    psi0 = coherent_state(12, 0.3)
    res0 = ensemble_run(SSEConfig(S_scalar=0.0, **common), psi0)
    res1 = ensemble_run(SSEConfig(S_scalar=0.4, **common), psi0)
    for name in ("q", "p", "qq", "pp", "qp", "norm2"):
        gap = np.abs(res0.means[name] - res1.means[name])
        band = 5.0 * (res0.stderr[name] + res1.stderr[name]) + 1e-12
        assert np.all(gap <= band), name


def test_ccl_ensemble_tracks_moment_equations():
    config = ccl_sse_config(SYS, gamma=0.05, T=2.0, dim=25, dt=2e-3,
                            n_traj=2000, seed=99, t_span=(0.0, 2.0),
                            store_every=250)
    psi0 = coherent_state(25, alpha_from_moments(SYS, 0.4, 0.0))
    result = ensemble_run(config, psi0, threads=2)
    assert not result.failed_trajectories

    spec = MasterEquationSpec("ccl", SYS, gamma=0.05, T=2.0)
    state0 = GaussianMomentState(0.4, 0.0, 0.5, 0.5, 0.0)
    ode = integrate_moments(spec, state0, (0.0, 2.0), dt=1e-4,
                            store_every=5000)
    table = result.moment_table()
    assert np.allclose(table["t"], ode.times)
    for key, ref in (("mean_q", ode.mean_q), ("mean_p", ode.mean_p),
                     ("s_qq", ode.sigma_qq), ("s_pp", ode.sigma_pp),
                     ("s_qp", ode.sigma_qp)):
        z = np.abs(table[key][1:] - ref[1:]) \
            / np.maximum(table["se_" + key][1:], 1e-12)
        assert np.max(z) < 6.0, f"{key}: max z = {np.max(z):.2f}"
    # the linear unraveling keeps the mean squared norm near one
    assert np.all(np.abs(table["norm2"] - 1.0)
                  <= 6.0 * table["se_norm2"] + 1e-9)


def test_tiny_ensemble_matches_average_of_single_trajectories():
    config = SSEConfig(system=SYS, alpha=1.0, beta=0.1, D_scalar=0.3,
                       dim=8, dt=1e-2, t_span=(0.0, 0.3), store_every=10,
                       n_traj=3, seed=21)
    psi0 = coherent_state(8, 0.2)
    with pytest.warns(EnsembleHealthWarning, match="error bars"):
        result = ensemble_run(config, psi0)
    paths = [sse_trajectory(config, psi0, traj_index=i) for i in range(3)]
    stacked = np.stack([p.observables for p in paths])
    avg = stacked.mean(axis=0)
    names = ("norm2", "q", "p", "qq", "pp", "qp")
    for k, name in enumerate(names):
        assert np.allclose(result.means[name], avg[:, k], rtol=1e-10,
                           atol=1e-13)
    assert np.array_equal(paths[0].times, result.times)


def test_diverging_trajectories_raise_numerical_failure():
    config = SSEConfig(system=SYS, alpha=1.0, beta=0.0, D_scalar=50.0,
                       dim=10, dt=0.5, t_span=(0.0, 50.0), store_every=100,
                       n_traj=1, seed=2)
    psi0 = coherent_state(10, 1.0)
    with pytest.warns(EnsembleHealthWarning):
        with pytest.raises(NumericalFailure, match="diverged"):
            ensemble_run(config, psi0)
    path = sse_trajectory(config, psi0)
    assert path.aborted
    assert np.all(np.isnan(path.observables[-1]))


def test_small_ensembles_warn():
    config = SSEConfig(system=SYS, alpha=1.0, beta=0.1, D_scalar=0.1,
                       dim=6, dt=1e-2, t_span=(0.0, 0.1), store_every=10,
                       n_traj=5, seed=3)
    with pytest.warns(EnsembleHealthWarning, match="trajectories"):
        ensemble_run(config, coherent_state(6, 0.1))


def test_psi0_validation():
    config = SSEConfig(system=SYS, alpha=1.0, beta=0.1, D_scalar=0.1,
                       dim=6, dt=1e-2, t_span=(0.0, 0.1), n_traj=200, seed=3)
    with pytest.raises(ValueError, match="length dim"):
        ensemble_run(config, np.ones(5, dtype=complex))
    with pytest.raises(ValueError, match="normalized"):
        ensemble_run(config, np.full(6, 0.9, dtype=complex))


def test_moment_table_layout_and_trajectory_dump():
    config = SSEConfig(system=SYS, alpha=1.0, beta=0.1, D_scalar=0.2,
                       dim=8, dt=1e-2, t_span=(0.0, 0.25), store_every=5,
                       n_traj=120, seed=8)
    result = ensemble_run(config, coherent_state(8, 0.3),
                          keep_trajectories=4)
    table = result.moment_table()
    assert set(table) == {
        "t", "mean_q", "se_mean_q", "mean_p", "se_mean_p",
        "s_qq", "se_s_qq", "s_pp", "se_s_pp", "s_qp", "se_s_qp",
        "norm2", "se_norm2", "alive"}
    n_nodes = result.times.size
    assert all(v.shape == (n_nodes,) for v in table.values())
    assert result.dumped.shape == (4, n_nodes, 6)
    # uneven span: final node is kept even off the store stride
    assert result.times[-1] == pytest.approx(0.25)
    assert np.all(table["alive"] == 120)
