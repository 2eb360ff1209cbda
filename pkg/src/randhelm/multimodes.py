"""Multi-modes Monte Carlo driver with a single shared LU factorization.

Each realization expands the random-medium solution in powers of the
perturbation size epsilon; every mode solves the same constant-coefficient
IP-DG system with a right-hand side built from the previous two modes.
All M*N solves therefore reuse one factorization.  The sample loop may run
on a thread pool; per-sample results are reduced in fixed sample order, so
the output is bit-identical for any thread count.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assembly import Assembler, PenaltySet, get_assembler
from .linalg import SolverCounters, lu_factorize, lu_solve
from .mesh import TriMesh, build_uniform_mesh
from .randomness import MediaSample, NoiseSpec, sample_media
from .sources import SourceSpec, source_volume
from .space import DGFunction, DGSpace, broken_norms

__all__ = ["RunConfig", "RunResult", "run_multimodes", "mode_rhs_update", "sample_average"]


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one Monte Carlo run."""

    k: float = 5.0
    epsilon: float = 0.1
    num_modes: int = 3            # N
    num_samples: int = 100        # M
    mesh_n: int = 20              # subdivisions per side, h = 1/mesh_n
    degree: int = 1               # polynomial degree r
    penalties: PenaltySet = field(default_factory=PenaltySet)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    source: SourceSpec = field(default_factory=SourceSpec)
    c0_hint: float = 1.0

    def __post_init__(self):
        if self.k <= 0.0:
            raise ValueError("k must be positive")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.num_modes < 1 or self.num_samples < 1:
            raise ValueError("N and M must be at least 1")
        if self.mesh_n < 1 or self.degree < 1:
            raise ValueError("mesh_n and degree must be at least 1")
        if self.c0_hint <= 0.0:
            raise ValueError("c0_hint must be positive")

    @property
    def sigma_hat(self) -> float:
        """Empirical contraction diagnostic 4*eps*sqrt(C0)*(1+k)."""
        return 4.0 * self.epsilon * np.sqrt(self.c0_hint) * (1.0 + self.k)


@dataclass
class RunResult:
    """Mode averages, truncated mean field, diagnostics, and timings."""

    config: RunConfig
    psi: DGFunction                 # epsilon-weighted mean field over N modes
    phis: list[DGFunction]          # per-mode sample averages
    sample_field: DGFunction        # retained first-sample truncated field
    mode_l2: np.ndarray             # sample-mean L2 norm per mode
    mode_h1: np.ndarray             # sample-mean broken-H1 norm per mode
    rho: np.ndarray                 # decay ratios eps*|u_n|/|u_{n-1}|
    sigma_hat: float
    counters: SolverCounters
    timings: dict
    phi0_snapshots: dict = field(default_factory=dict)

    def psi_truncated(self, num_modes: int) -> DGFunction:
        """Rebuild the mean field from the first `num_modes` stored modes."""
        if not 1 <= num_modes <= len(self.phis):
            raise ValueError("num_modes out of range")
        acc = np.zeros_like(self.psi.coefficients)
        for n in range(num_modes):
            acc += self.config.epsilon**n * self.phis[n].coefficients
        return DGFunction(self.psi.space, acc)


def mode_rhs_update(u_n: DGFunction, u_prev: DGFunction, media: MediaSample, k: float):
    """Source data for the next mode from the previous two.

    Returns (S, Q) with S = 2k^2*eta*u_n + k^2*eta^2*u_prev at volume
    quadrature points and Q = -i*k*eta*u_n at boundary quadrature points.
    """
    if u_prev.space is not u_n.space:
        raise ValueError("mode functions live on different spaces")
    asm = get_assembler(u_n.space)
    k2 = k * k
    uq = asm.eval_volume(u_n.coefficients)
    upq = asm.eval_volume(u_prev.coefficients)
    S = 2.0 * k2 * media.eta_volume * uq + k2 * media.eta_volume**2 * upq
    Q = -1j * k * media.eta_boundary * asm.eval_boundary(u_n.coefficients)
    return S, Q


def sample_average(samples: list[DGFunction]) -> DGFunction:
    """Coefficientwise arithmetic mean of DG functions on a common space."""
    if not samples:
        raise ValueError("cannot average an empty sample list")
    space = samples[0].space
    if any(s.space is not space for s in samples):
        raise ValueError("samples live on different spaces")
    acc = np.zeros(space.ndof, dtype=complex)
    for s in samples:
        acc += s.coefficients
    return DGFunction(space, acc / len(samples))


_BLOCK = 32  # samples per solve batch; fixed so results never depend on threads


def _block_modes(js, config, asm, factors, system, refactor, norm_forms):
    """Mode recursion for a block of realizations.

    All samples of a block advance through the modes together, so each
    mode triggers one multi-right-hand-side substitution instead of one
    solve per sample.  Columns are independent; the result per sample is
    the same as with per-sample solves.
    """
    counters = SolverCounters()
    mesh = asm.mesh
    nb = len(js)
    media = [sample_media(mesh, config.noise, j) for j in js]
    eta = np.stack([m.eta_volume for m in media])
    eta_b = np.stack([m.eta_boundary for m in media])
    eta_sq = eta * eta
    k, k2 = config.k, config.k**2
    S = np.stack(
        [source_volume(config.source, mesh, m, config.epsilon, k) for m in media]
    )
    Q = None
    uq_prev = None
    N = config.num_modes
    modes = np.empty((N, nb, asm.space.ndof), dtype=complex)
    norms = np.empty((nb, N, 2))
    mass, stiff, jump, _ = norm_forms
    dofs = asm.space.dofs
    Wv, B = asm._Wv, asm._B
    nel, nq = Wv.shape
    ld = asm.space.local_dim
    for n in range(N):
        # Contiguous DOF numbering makes the volume load a plain reshape;
        # the quadrature contraction is a single BLAS matmul.
        S *= Wv
        barr = (S.reshape(nb * nel, nq) @ B).reshape(nb, -1)
        if Q is not None:
            contrib = np.einsum("beq,eqi->bei", asm._bweights * Q, asm._btrace)
            np.add.at(
                barr,
                (np.arange(nb)[:, None, None], asm._bdofs[None, :, :]),
                contrib,
            )
        rhs = np.ascontiguousarray(barr.T)
        if refactor:
            factors = lu_factorize(system, counters)
        X = lu_solve(factors, rhs, counters)
        if not np.all(np.isfinite(X)):
            raise FloatingPointError(f"nonfinite values in mode {n} of block {js}")
        modes[n] = X.T
        Xc = X.conj()
        norms[:, n, 0] = np.sqrt(
            np.maximum((Xc * (mass @ X)).real.sum(axis=0), 0.0)
        )
        norms[:, n, 1] = np.sqrt(
            np.maximum(
                (Xc * (stiff @ X)).real.sum(axis=0)
                + (Xc * (jump @ X)).real.sum(axis=0),
                0.0,
            )
        )
        local = modes[n].reshape(nb * nel, ld)
        uq = (local @ B.T).reshape(nb, nel, nq)
        S = uq * eta
        S *= 2.0 * k2
        if uq_prev is not None:
            uq_prev *= eta_sq
            uq_prev *= k2
            S += uq_prev
        blocal = modes[n][:, asm._bdofs]
        Q = (-1j * k) * eta_b * np.einsum("eqi,bei->beq", asm._btrace, blocal)
        uq_prev = uq
    return modes, norms, counters


def run_multimodes(
    config: RunConfig,
    threads: int = 1,
    refactor_each_solve: bool = False,
    phi0_snapshot_sizes=(),
) -> RunResult:
    """Run the single-factorization multi-modes Monte Carlo algorithm.

    Exactly one factorization is performed regardless of M and N (unless
    `refactor_each_solve` is set, a diagnostic mode used to verify the
    factor-reuse equivalence).  `phi0_snapshot_sizes` requests copies of
    the mode-0 sample average after the given sample counts.
    """
    t0 = time.perf_counter()
    mesh = build_uniform_mesh(config.mesh_n)
    space = DGSpace(mesh, config.degree)
    asm = get_assembler(space, config.penalties)
    system = asm.constant(config.k)
    t_assembly = time.perf_counter() - t0

    counters = SolverCounters()
    t0 = time.perf_counter()
    factors = None if refactor_each_solve else lu_factorize(system, counters)
    t_factorize = time.perf_counter() - t0

    N, M = config.num_modes, config.num_samples
    eps_pow = config.epsilon ** np.arange(N)
    psi_sum = np.zeros(space.ndof, dtype=complex)
    phi_sums = np.zeros((N, space.ndof), dtype=complex)
    norm_l2_sum = np.zeros(N)
    norm_h1_sum = np.zeros(N)
    sample_field = None
    snapshots: dict[int, np.ndarray] = {}
    snapshot_sizes = set(int(m) for m in phi0_snapshot_sizes)

    from .space import _norm_forms

    norm_forms = _norm_forms(space, config.penalties)
    t0 = time.perf_counter()

    # Fixed block structure: results are independent of the thread count.
    block = 1 if refactor_each_solve else _BLOCK
    blocks = [range(s, min(s + block, M)) for s in range(0, M, block)]

    def work(js):
        return _block_modes(
            js, config, asm, factors, system, refactor_each_solve, norm_forms
        )

    def reduce_block(js, modes, norms, worker_counters):
        nonlocal sample_field
        counters.merge(worker_counters)
        U = np.einsum("n,nbd->bd", eps_pow, modes)
        psi_sum[:] += U.sum(axis=0)
        for n in range(N):
            phi_sums[n] += modes[n].sum(axis=0)
        norm_l2_sum[:] += norms[:, :, 0].sum(axis=0)
        norm_h1_sum[:] += norms[:, :, 1].sum(axis=0)
        if js.start == 0:
            sample_field = DGFunction(space, U[0])
        for m in snapshot_sizes:
            if js.start < m <= js.stop:
                prefix = modes[0][: m - js.start].sum(axis=0)
                snapshots[m] = (phi_sums[0] - modes[0].sum(axis=0) + prefix) / m

    if threads <= 1:
        for js in blocks:
            modes, norms, wc = work(js)
            reduce_block(js, modes, norms, wc)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for js, (modes, norms, wc) in zip(blocks, pool.map(work, blocks)):
                reduce_block(js, modes, norms, wc)
    t_samples = time.perf_counter() - t0

    psi = DGFunction(space, psi_sum / M)
    phis = [DGFunction(space, phi_sums[n] / M) for n in range(N)]
    mode_l2 = norm_l2_sum / M
    mode_h1 = norm_h1_sum / M
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(mode_l2[:-1] > 0.0, config.epsilon * mode_l2[1:] / mode_l2[:-1], 0.0)

    return RunResult(
        config=config,
        psi=psi,
        phis=phis,
        sample_field=sample_field,
        mode_l2=mode_l2,
        mode_h1=mode_h1,
        rho=rho,
        sigma_hat=config.sigma_hat,
        counters=counters,
        timings={
            "assembly_seconds": t_assembly,
            "factorize_seconds": t_factorize,
            "sample_loop_seconds": t_samples,
        },
        phi0_snapshots={m: DGFunction(space, v) for m, v in snapshots.items()},
    )
