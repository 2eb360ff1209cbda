import numpy as np
import pytest

from randhelm import (
    DGFunction,
    DGSpace,
    NoiseSpec,
    RunConfig,
    build_uniform_mesh,
    get_assembler,
    lu_factorize,
    lu_solve,
    mode_rhs_update,
    run_multimodes,
    sample_average,
    sample_media,
    source_volume,
)


def _reference_modes(cfg):
    """Slow per-sample recursion used as an oracle for the driver."""
    mesh = build_uniform_mesh(cfg.mesh_n)
    space = DGSpace(mesh, cfg.degree)
    asm = get_assembler(space, cfg.penalties)
    factors = lu_factorize(asm.constant(cfg.k))
    N, M = cfg.num_modes, cfg.num_samples
    modes = np.zeros((N, M, space.ndof), dtype=complex)
    for j in range(M):
        media = sample_media(mesh, cfg.noise, j)
        S = source_volume(cfg.source, mesh, media, cfg.epsilon, cfg.k)
        Q = None
        u_prev = DGFunction.zero(space)
        for n in range(N):
            u = DGFunction(space, lu_solve(factors, asm.rhs(S, Q)))
            modes[n, j] = u.coefficients
            S, Q = mode_rhs_update(u, u_prev, media, cfg.k)
            u_prev = u
    return modes


def test_driver_matches_per_sample_recursion():
    cfg = RunConfig(k=5.0, epsilon=1.0 / 6.0, num_modes=3, num_samples=5, mesh_n=8)
    ref = _reference_modes(cfg)
    res = run_multimodes(cfg)
    for n in range(cfg.num_modes):
        phi_ref = ref[n].mean(axis=0)
        assert np.allclose(res.phis[n].coefficients, phi_ref, atol=1e-12)
    psi_ref = sum(
        cfg.epsilon**n * ref[n].mean(axis=0) for n in range(cfg.num_modes)
    )
    assert np.allclose(res.psi.coefficients, psi_ref, atol=1e-12)
    # The retained sample field is the truncated expansion of sample 0.
    u0 = sum(cfg.epsilon**n * ref[n, 0] for n in range(cfg.num_modes))
    assert np.allclose(res.sample_field.coefficients, u0, atol=1e-12)


def test_single_factorization_and_solve_count():
    cfg = RunConfig(k=5.0, epsilon=0.1, num_modes=3, num_samples=40, mesh_n=8)
    res = run_multimodes(cfg)
    assert res.counters.factorizations == 1
    assert res.counters.solves == cfg.num_samples * cfg.num_modes


def test_refactoring_variant_is_equivalent():
    cfg = RunConfig(k=5.0, epsilon=0.1, num_modes=2, num_samples=6, mesh_n=8)
    fast = run_multimodes(cfg)
    slow = run_multimodes(cfg, refactor_each_solve=True)
    scale = np.abs(fast.psi.coefficients).max()
    assert np.abs(fast.psi.coefficients - slow.psi.coefficients).max() <= 1e-12 * scale
    assert slow.counters.factorizations == cfg.num_samples * cfg.num_modes


def test_thread_count_does_not_change_results():
    cfg = RunConfig(k=5.0, epsilon=0.1, num_modes=3, num_samples=70, mesh_n=8)
    r1 = run_multimodes(cfg, threads=1)
    r3 = run_multimodes(cfg, threads=3)
    assert np.array_equal(r1.psi.coefficients, r3.psi.coefficients)
    for a, b in zip(r1.phis, r3.phis):
        assert np.array_equal(a.coefficients, b.coefficients)
    assert np.array_equal(r1.mode_l2, r3.mode_l2)


def test_zero_epsilon_collapses_to_mode_zero():
    cfg = RunConfig(k=5.0, epsilon=0.0, num_modes=3, num_samples=4, mesh_n=8)
    res = run_multimodes(cfg)
    assert np.array_equal(res.psi.coefficients, res.phis[0].coefficients)


def test_zero_noise_kills_higher_modes():
    cfg = RunConfig(
        k=5.0, epsilon=0.2, num_modes=3, num_samples=3, mesh_n=8,
        noise=NoiseSpec(low=0.0, high=0.0),
    )
    res = run_multimodes(cfg)
    u0 = np.abs(res.phis[0].coefficients).max()
    for n in (1, 2):
        assert np.abs(res.phis[n].coefficients).max() <= 1e-13 * u0


def test_psi_truncated():
    cfg = RunConfig(k=5.0, epsilon=0.1, num_modes=3, num_samples=4, mesh_n=8)
    res = run_multimodes(cfg)
    full = res.psi_truncated(3)
    assert np.allclose(full.coefficients, res.psi.coefficients, atol=1e-14)
    partial = res.psi_truncated(1)
    assert np.array_equal(partial.coefficients, res.phis[0].coefficients)
    with pytest.raises(ValueError):
        res.psi_truncated(0)
    with pytest.raises(ValueError):
        res.psi_truncated(4)


def test_mode_norm_diagnostics():
    cfg = RunConfig(k=5.0, epsilon=0.2, num_modes=3, num_samples=6, mesh_n=8)
    res = run_multimodes(cfg)
    assert res.mode_l2.shape == (3,)
    assert np.all(res.mode_l2 > 0.0)
    assert np.all(res.mode_h1 >= res.mode_l2 * 0.0)
    expected_rho = cfg.epsilon * res.mode_l2[1:] / res.mode_l2[:-1]
    assert np.allclose(res.rho, expected_rho, atol=1e-14)
    assert res.sigma_hat == pytest.approx(4.0 * cfg.epsilon * (1.0 + cfg.k))


def test_phi0_snapshots_match_shorter_runs():
    cfg = RunConfig(k=5.0, epsilon=0.1, num_modes=1, num_samples=50, mesh_n=8)
    res = run_multimodes(cfg, phi0_snapshot_sizes=(10, 40))
    for m in (10, 40):
        short = run_multimodes(
            RunConfig(k=5.0, epsilon=0.1, num_modes=1, num_samples=m, mesh_n=8)
        )
        assert np.allclose(
            res.phi0_snapshots[m].coefficients,
            short.phis[0].coefficients,
            atol=1e-13,
        )


def test_sample_average():
    mesh = build_uniform_mesh(2)
    space = DGSpace(mesh, 1)
    fs = [DGFunction(space, np.full(space.ndof, v)) for v in (1.0, 2.0, 6.0)]
    avg = sample_average(fs)
    assert np.allclose(avg.coefficients, 3.0)
    with pytest.raises(ValueError):
        sample_average([])
    other = DGFunction.zero(DGSpace(build_uniform_mesh(2), 1))
    with pytest.raises(ValueError):
        sample_average([fs[0], other])


def test_mode_rhs_update_formula():
    mesh = build_uniform_mesh(4)
    space = DGSpace(mesh, 1)
    asm = get_assembler(space)
    gen = np.random.default_rng(0)
    u_n = DGFunction(space, gen.standard_normal(space.ndof) * (1.0 + 0.5j))
    u_prev = DGFunction(space, gen.standard_normal(space.ndof) * (1.0 - 0.25j))
    media = sample_media(mesh, NoiseSpec(seed=2), 0)
    k = 5.0
    S, Q = mode_rhs_update(u_n, u_prev, media, k)
    uq = asm.eval_volume(u_n.coefficients)
    upq = asm.eval_volume(u_prev.coefficients)
    S_ref = 2.0 * k**2 * media.eta_volume * uq + k**2 * media.eta_volume**2 * upq
    Q_ref = -1j * k * media.eta_boundary * asm.eval_boundary(u_n.coefficients)
    assert np.allclose(S, S_ref, atol=1e-13)
    assert np.allclose(Q, Q_ref, atol=1e-13)
    other = DGFunction.zero(DGSpace(build_uniform_mesh(4), 1))
    with pytest.raises(ValueError):
        mode_rhs_update(u_n, other, media, k)


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(k=0.0)
    with pytest.raises(ValueError):
        RunConfig(epsilon=1.0)
    with pytest.raises(ValueError):
        RunConfig(num_modes=0)
    with pytest.raises(ValueError):
        RunConfig(num_samples=0)
    with pytest.raises(ValueError):
        RunConfig(mesh_n=0)
    with pytest.raises(ValueError):
        RunConfig(c0_hint=0.0)
