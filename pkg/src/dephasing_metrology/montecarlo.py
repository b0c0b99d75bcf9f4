"""Stochastic-trajectory oracle for the analytic dephasing machinery.

Accumulated noise phases on a time grid form a centered Gaussian vector whose
covariance follows from the correlation function; sampling that vector exactly
(PSD factorization, no path discretization) and averaging the per-trajectory
unitaries reproduces the analytic coherence-decay kernel at the 1/sqrt(count)
Monte Carlo rate.  Consistent with the e^{-chi (m - m')^2} kernel convention,
phases are drawn with covariance 2 Sigma, and the empirical decay estimator is
half the sample variance.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt

from .control import SegmentCovariance, _window_integral
from .dicke import DickeState, m_values
from .errors import CovarianceNotPSD, InvalidParameter, NotAState
from .noise import Kind, NoiseModel

__all__ = [
    "TrajectoryEnsemble",
    "sample_phase_process",
    "empirical_chi",
    "empirical_average_state",
    "fidelity",
    "qfi_from_fidelity",
    "ou_path_ensemble",
    "ensemble_to_csv",
]


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Sampled accumulated phases: one row per trajectory, one column per
    grid point (cumulative) or segment."""

    samples: npt.NDArray[np.float64]
    seed: int
    grid: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise InvalidParameter("samples must be a 2-D array")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))

    @property
    def count(self) -> int:
        return self.samples.shape[0]


def _grid_covariance(model: NoiseModel, grid: npt.NDArray) -> npt.NDArray:
    """Covariance of the cumulative phases lambda(t_i) on an increasing grid."""
    bounds = np.concatenate(([0.0], grid))
    k = len(grid)
    seg = np.zeros((k, k))
    if model.kind is Kind.WHITE:
        # uncorrelated windows: independent segment phases
        seg[np.diag_indices(k)] = model.params["chi0"] \
            * model.params["omega_c"] * np.diff(bounds)
    else:
        for i in range(k):
            for j in range(i, k):
                seg[i, j] = seg[j, i] = _window_integral(
                    model, bounds[i], bounds[i + 1], bounds[j], bounds[j + 1])
    L = np.tril(np.ones((k, k)))    # lambda(t_i) = sum of segment phases
    return L @ seg @ L.T


def sample_phase_process(model: NoiseModel,
                         grid: Sequence[float] | SegmentCovariance,
                         count: int, seed: int) -> TrajectoryEnsemble:
    """Draw exact multivariate-normal phase trajectories.

    ``grid`` is either an increasing array of times (columns are cumulative
    phases lambda(t_i)) or a precomputed segment covariance (columns are
    per-segment phases of a pulsed run).  Deterministic for fixed seed.
    """
    if count < 0:
        raise InvalidParameter("trajectory count must be nonnegative")
    if isinstance(grid, SegmentCovariance):
        sigma = grid.sigma
        times = grid.delta_t
    else:
        times = np.asarray(grid, dtype=float)
        if times.ndim != 1 or len(times) == 0 or times[0] <= 0 or \
                np.any(np.diff(times) <= 0):
            raise InvalidParameter("grid must be increasing positive times")
        sigma = _grid_covariance(model, times)
    lam, U = np.linalg.eigh(2.0 * sigma)
    if lam.min() < -1e-10 * max(1.0, abs(lam).max()):
        raise CovarianceNotPSD(f"minimum eigenvalue {lam.min():.3e}")
    root = U @ np.diag(np.sqrt(np.maximum(lam, 0.0)))
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((count, len(times))) @ root.T
    return TrajectoryEnsemble(samples=samples, seed=seed, grid=times)


def empirical_chi(ensemble: TrajectoryEnsemble) -> npt.NDArray[np.float64]:
    """Per-column decay estimate: half the sample variance of the phase."""
    if ensemble.count < 2:
        raise InvalidParameter("need at least two trajectories")
    return np.var(ensemble.samples, axis=0, ddof=1) / 2.0


def empirical_average_state(rho0: DickeState, ensemble: TrajectoryEnsemble,
                            b: float, t: float,
                            column: int = -1) -> DickeState:
    """Average the per-trajectory phase unitaries over the ensemble.

    Applies e^{-i (b t + lambda) J_z} rho0 e^{+i (b t + lambda) J_z} for each
    sampled lambda; only the per-coherence phase means are needed, so the
    average is a kernel with entries E[e^{-i lambda dm}] e^{-i b t dm}.
    A zero-sample ensemble reduces to the deterministic rotation.
    """
    lam = ensemble.samples[:, column]
    m = m_values(rho0.N)
    dm_row = m[:, None] - m[None, :]            # (m - m') for each coherence
    dvals = np.arange(-rho0.N, rho0.N + 1.0)
    if lam.size:
        char = np.exp(-1j * np.outer(lam, dvals)).mean(axis=0)
    else:
        char = np.ones_like(dvals, dtype=complex)
    kernel = char[np.rint(dm_row + rho0.N).astype(int)] \
        * np.exp(-1j * b * t * dm_row)
    return DickeState(rho0.N, rho0.rho * kernel, b=b, t=t)


def _hermitian_sqrt(rho: npt.NDArray) -> npt.NDArray:
    lam, U = np.linalg.eigh(rho)
    return U @ np.diag(np.sqrt(np.maximum(lam, 0.0))) @ U.conj().T


def fidelity(rho: npt.NDArray, sigma: npt.NDArray, tol: float = 1e-8) -> float:
    """Uhlmann fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho))."""
    for mat in (rho, sigma):
        mat = np.asarray(mat)
        if abs(np.trace(mat).real - 1.0) > tol or \
                np.max(np.abs(mat - mat.conj().T)) > tol or \
                np.linalg.eigvalsh(mat).min() < -tol:
            raise NotAState("arguments must be PSD with unit trace")
    root = _hermitian_sqrt(rho)
    inner = root @ sigma @ root
    eigs = np.linalg.eigvalsh((inner + inner.conj().T) / 2.0)
    # floor round-off eigenvalues: sqrt amplifies O(eps) noise to O(sqrt(eps))
    eigs[eigs < 1e-14 * max(eigs.max(), 0.0)] = 0.0
    return float(np.sqrt(eigs).sum())


def qfi_from_fidelity(rho0: DickeState, b: float, chi: float, t: float,
                      delta: float = 1e-4) -> float:
    """Curvature route to the QFI: 8 (1 - F(rho_b, rho_{b+delta})) / delta^2."""
    from .dicke import evolve
    if delta <= 0:
        raise InvalidParameter("signal increment must be positive")
    f = fidelity(evolve(rho0, b, chi, t).rho,
                 evolve(rho0, b + delta, chi, t).rho)
    return 8.0 * (1.0 - f) / delta ** 2


def ou_path_ensemble(sigma2: float, omega_c: float, t: float, steps: int,
                     count: int, seed: int) -> TrajectoryEnsemble:
    """Path-level cross-check: integrate exact-update OU trajectories.

    Uses the exact AR(1) transition of the OU process (variance 2 sigma2 in
    the phase-kernel convention) and a trapezoidal phase integral; the
    accumulated-phase variance converges to 2 chi(t) as the step count grows.
    """
    if steps < 2 or count < 1:
        raise InvalidParameter("need steps >= 2 and count >= 1")
    rng = np.random.default_rng(seed)
    dt = t / steps
    decay = math.exp(-omega_c * dt)
    var = 2.0 * sigma2
    x = math.sqrt(var) * rng.standard_normal(count)
    lam = np.zeros(count)
    innov = math.sqrt(var * (1.0 - decay ** 2))
    for _ in range(steps):
        x_next = decay * x + innov * rng.standard_normal(count)
        lam += 0.5 * dt * (x + x_next)
        x = x_next
    return TrajectoryEnsemble(samples=lam[:, None], seed=seed,
                              grid=np.array([t]))


def ensemble_to_csv(ensemble: TrajectoryEnsemble) -> str:
    """CSV export with a reproducibility header (seed and grid)."""
    buf = io.StringIO()
    buf.write(f"# seed={ensemble.seed}\n")
    buf.write("# grid=" + ",".join(f"{g:.17g}" for g in ensemble.grid) + "\n")
    buf.write(",".join(f"lambda_{i}" for i in range(len(ensemble.grid))) + "\n")
    np.savetxt(buf, ensemble.samples, delimiter=",", fmt="%.17g")
    return buf.getvalue()
