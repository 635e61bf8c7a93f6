"""Monte Carlo check of the noise average: explicit telegraph trajectories.

Each run draws a switching history per noisy qubit, evolves the two-qubit
density matrix exactly along it (piecewise-constant Hamiltonian, closed-form
SU(2) propagators) and the ensemble mean is accumulated on the time grid.

Random streams: trajectory ``i`` of qubit ``k`` (0 = A, 1 = B) draws from
``default_rng(SeedSequence(seed, spawn_key=(i, k)))``. Runs are processed in
fixed-size chunks whose partial sums are combined by a fixed pairwise tree,
so results are bitwise reproducible for a given seed, run count and chunk
size, whatever the number of worker processes.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bloch import MU, to_bloch
from .noise import QubitSpec, RtnSource

__all__ = [
    "Trajectory",
    "EnsembleResult",
    "trajectory_rng",
    "sample_trajectory",
    "evolve_trajectory",
    "ensemble_average",
    "DEFAULT_RUNS",
]

DEFAULT_RUNS = 40_000
DEFAULT_CHUNK = 2_000


@dataclass(frozen=True)
class Trajectory:
    initial_sign: int
    switch_times: np.ndarray
    horizon: float

    def sign_at(self, t):
        """``s(t)``; the value just after a switch at exactly ``t``."""
        t = np.asarray(t, dtype=float)
        flips = np.searchsorted(self.switch_times, t, side="right")
        return self.initial_sign * (1 - 2 * (flips % 2))


@dataclass
class EnsembleResult:
    grid: np.ndarray
    rho_mean: np.ndarray  # (M, 4, 4)
    n_runs: int
    stderr: np.ndarray  # (M, 15), standard error of each Bloch component

    @property
    def bloch(self) -> np.ndarray:
        return to_bloch(self.rho_mean)


def trajectory_rng(seed: int, index: int, qubit: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index, qubit)))


def sample_trajectory(src: RtnSource, horizon: float, seed=None) -> Trajectory:
    """Unbiased telegraph history on ``[0, horizon]``.

    ``seed`` may be an int or a ``numpy.random.Generator``. Waiting times are
    exponential with rate ``gamma``; no time discretization is involved.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sign = 1 if rng.random() < 0.5 else -1
    if src.gamma == 0:
        return Trajectory(sign, np.empty(0), float(horizon))
    mean = src.gamma * horizon
    block = int(mean + 6 * np.sqrt(mean) + 16)
    times = np.cumsum(rng.exponential(1 / src.gamma, size=block))
    while times[-1] <= horizon:
        more = np.cumsum(rng.exponential(1 / src.gamma, size=block)) + times[-1]
        times = np.concatenate([times, more])
    return Trajectory(sign, times[times <= horizon], float(horizon))


def _axis_angle(spec: QubitSpec, sign: int):
    """Rate ``|w|`` and unit axis of ``U = exp(+i t/2 w.sigma)`` for ``s = sign``.

    From ``H = -1/2 (b0 sz + s g.sigma)``, ``w = b0 z + s g``.
    """
    w = np.array([0.0, 0.0, spec.b0])
    if spec.source is not None:
        w = w + sign * spec.source.vector
    norm = np.linalg.norm(w)
    return norm, w / norm


def _propagate(spec: QubitSpec, signs, switches, grid):
    """SU(2) propagators ``U = [[a, -b*], [b, a*]]`` at each grid time.

    ``switches`` is ``(N, K)`` sorted per row, padded with ``inf``.
    Returns ``a, b`` of shape ``(M, N)``.
    """
    n = len(signs)
    rates = {}
    axes = {}
    for s in (1, -1):
        rates[s], axes[s] = _axis_angle(spec, s)
    switches = np.concatenate([switches, np.full((n, 1), np.inf)], axis=1)
    a = np.ones(n, dtype=complex)
    b = np.zeros(n, dtype=complex)
    tau = np.zeros(n)
    ptr = np.zeros(n, dtype=np.intp)
    s = np.asarray(signs, dtype=np.int8).copy()
    nxt = switches[:, 0].copy()
    out_a = np.empty((len(grid), n), dtype=complex)
    out_b = np.empty((len(grid), n), dtype=complex)

    def advance(idx, t_to):
        plus = s[idx] > 0
        rate = np.where(plus, rates[1], rates[-1])
        ax = np.where(plus[:, None], axes[1], axes[-1])
        half = 0.5 * rate * (t_to - tau[idx])
        c, sn = np.cos(half), np.sin(half)
        a1 = c + 1j * sn * ax[:, 2]
        b1 = -sn * ax[:, 1] + 1j * sn * ax[:, 0]
        a2, b2 = a[idx], b[idx]
        a[idx] = a1 * a2 - np.conj(b1) * b2
        b[idx] = b1 * a2 + np.conj(a1) * b2
        tau[idx] = t_to

    everyone = np.arange(n)
    for m, tm in enumerate(grid):
        while True:
            idx = np.nonzero(nxt <= tm)[0]
            if idx.size == 0:
                break
            advance(idx, nxt[idx])
            s[idx] = -s[idx]
            ptr[idx] += 1
            nxt[idx] = switches[idx, ptr[idx]]
        advance(everyone, tm)
        out_a[m] = a
        out_b[m] = b
    return out_a, out_b


def _su2(a, b):
    u = np.empty(a.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = a
    u[..., 0, 1] = -np.conj(b)
    u[..., 1, 0] = b
    u[..., 1, 1] = np.conj(a)
    return u


def _kron_stack(ua, ub):
    """Batched ``kron`` of ``(..., 2, 2)`` stacks."""
    out = ua[..., :, None, :, None] * ub[..., None, :, None, :]
    return out.reshape(out.shape[:-4] + (4, 4))


def _pad_switches(trajs):
    k = max((len(tr.switch_times) for tr in trajs), default=0)
    out = np.full((len(trajs), k), np.inf)
    for i, tr in enumerate(trajs):
        out[i, : len(tr.switch_times)] = tr.switch_times
    return out


def _qubit_unitaries(spec, trajs, grid):
    """``(M, N, 2, 2)`` propagators; ``trajs`` is None for a noise-free qubit."""
    if trajs is None:
        a, b = _propagate(spec, np.ones(1, dtype=np.int8), np.empty((1, 0)), grid)
    else:
        signs = np.array([tr.initial_sign for tr in trajs], dtype=np.int8)
        a, b = _propagate(spec, signs, _pad_switches(trajs), grid)
    return _su2(a, b)


def _check_grid(grid, horizon=None):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) < 0) or grid[0] < 0:
        raise ValueError("grid must be a non-decreasing list of non-negative times")
    if horizon is not None and grid[-1] > horizon:
        raise ValueError(f"grid extends to {grid[-1]} beyond the trajectory horizon {horizon}")
    return grid


def evolve_trajectory(trajs: Sequence[Optional[Trajectory]], specs: Sequence[QubitSpec],
                      initial, grid) -> np.ndarray:
    """Density matrices ``(M, 4, 4)`` along one pair of noise histories.

    ``trajs[k]`` is None for a noise-free qubit. The two-qubit state evolves
    as ``(U_A x U_B) rho (U_A x U_B)^dagger``.
    """
    for tr in trajs:
        if tr is not None:
            grid = _check_grid(grid, tr.horizon)
    grid = _check_grid(grid)
    rho0 = np.asarray(initial, dtype=complex)
    us = [_qubit_unitaries(sp, None if tr is None else [tr], grid)[:, 0]
          for sp, tr in zip(specs, trajs)]
    u = _kron_stack(us[0], us[1])
    return u @ rho0 @ np.conj(np.swapaxes(u, -1, -2))


def _sample_chunk(specs, horizon, seed, start, stop):
    out = []
    for k, spec in enumerate(specs):
        if spec.source is None:
            out.append(None)
            continue
        out.append([sample_trajectory(spec.source, horizon, trajectory_rng(seed, i, k))
                    for i in range(start, stop)])
    return out


def _chunk_sums(specs, rho0, grid, seed, start, stop):
    horizon = max(float(grid[-1]), 1e-300)
    trajs = _sample_chunk(specs, horizon, seed, start, stop)
    n = stop - start
    ua = _qubit_unitaries(specs[0], trajs[0], grid)
    ub = _qubit_unitaries(specs[1], trajs[1], grid)
    m = len(grid)
    sum_rho = np.empty((m, 4, 4), dtype=complex)
    sum_n = np.empty((m, 15))
    sum_n2 = np.empty((m, 15))
    # n_k = sum_ij rho_ij (mu_k)_ji as one matrix product
    proj = np.swapaxes(MU[1:], -1, -2).reshape(15, 16).T
    for j in range(m):
        u = _kron_stack(np.broadcast_to(ua[j], (n, 2, 2)), np.broadcast_to(ub[j], (n, 2, 2)))
        rho = u @ rho0 @ np.conj(np.swapaxes(u, -1, -2))
        comps = (rho.reshape(n, 16) @ proj).real
        sum_rho[j] = rho.sum(axis=0)
        sum_n[j] = comps.sum(axis=0)
        sum_n2[j] = (comps * comps).sum(axis=0)
    return sum_rho, sum_n, sum_n2


def _chunk_job(args):
    return _chunk_sums(*args)


def _tree_sum(parts):
    parts = list(parts)
    while len(parts) > 1:
        nxt = [tuple(x + y for x, y in zip(parts[i], parts[i + 1]))
               for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def ensemble_average(specs: Sequence[QubitSpec], state, grid, n_runs: int = DEFAULT_RUNS,
                     seed: int = 0, chunk_size: int = DEFAULT_CHUNK,
                     workers: Optional[int] = None) -> EnsembleResult:
    """Trajectory-averaged density matrix on ``grid``.

    ``state`` is anything with a ``density_matrix()`` method, or a 4x4 array.
    Qubits with a noise source get independent histories.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    grid = _check_grid(grid)
    rho0 = np.asarray(state.density_matrix() if hasattr(state, "density_matrix") else state,
                      dtype=complex)
    bounds = [(i, min(i + chunk_size, n_runs)) for i in range(0, n_runs, chunk_size)]
    jobs = [(tuple(specs), rho0, grid, seed, lo, hi) for lo, hi in bounds]
    workers = min(workers or os.cpu_count() or 1, len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_job, jobs))
    else:
        parts = [_chunk_job(j) for j in jobs]
    sum_rho, sum_n, sum_n2 = _tree_sum(parts)
    rho_mean = sum_rho / n_runs
    if n_runs > 1:
        var = np.clip(sum_n2 - sum_n**2 / n_runs, 0, None) / (n_runs - 1)
        stderr = np.sqrt(var / n_runs)
    else:
        stderr = np.full(sum_n.shape, np.nan)
    return EnsembleResult(grid, rho_mean, n_runs, stderr)
