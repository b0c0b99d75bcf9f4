"""Exact collective-spin evolution and estimation in the Dicke basis.

States of N exchange-symmetric qubits are represented in the maximal-spin
sector (J = N/2) as (N+1) x (N+1) density matrices indexed by the magnetic
quantum number m in ascending order -J..J.  The basis is chosen as the
eigenbasis of the dephasing generator, so that signal and noise act as

    rho[m, m'] -> rho0[m, m'] * exp(-i b t (m - m')) * exp(-chi (m - m')^2),

where chi(t) is the decay function of :mod:`dephasing_metrology.noise`.
"""

from __future__ import annotations

import enum
import functools
import json
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .errors import DimensionTooLarge, InvalidParameter, NotAState, ZeroSlope

__all__ = [
    "InputKind",
    "DickeState",
    "EstimationResult",
    "N_MAX_DEFAULT",
    "m_values",
    "collective_ops",
    "jx_eigenbasis",
    "build_input",
    "random_symmetric_state",
    "evolve",
    "drho_db",
    "qfi_and_sld",
    "expectation",
    "variance",
    "parity_observable",
    "moments_precision",
    "state_to_json",
    "state_from_json",
]

N_MAX_DEFAULT = 2048


class InputKind(str, enum.Enum):
    GHZ = "GHZ"
    CSS = "CSS"
    OATS = "OATS"


@dataclass(frozen=True)
class DickeState:
    """Symmetric-sector density matrix with its signal bookkeeping."""

    N: int
    rho: npt.NDArray[np.complex128]
    b: float = 0.0
    t: float = 0.0

    def __post_init__(self) -> None:
        if self.N < 1:
            raise InvalidParameter(f"probe count must be >= 1, got {self.N}")
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (self.N + 1, self.N + 1):
            raise InvalidParameter(
                f"state matrix must be {(self.N + 1, self.N + 1)}, got {rho.shape}")
        object.__setattr__(self, "rho", rho)

    def validate(self, tol: float = 1e-9) -> "DickeState":
        """Check Hermiticity, unit trace, and positivity."""
        if np.max(np.abs(self.rho - self.rho.conj().T)) > tol:
            raise NotAState("matrix is not Hermitian")
        if abs(np.trace(self.rho).real - 1.0) > max(tol, 1e-12):
            raise NotAState(f"trace is {np.trace(self.rho).real}, expected 1")
        if np.linalg.eigvalsh((self.rho + self.rho.conj().T) / 2).min() < -tol:
            raise NotAState("matrix has negative eigenvalues")
        return self


@dataclass(frozen=True)
class EstimationResult:
    """QFI with the optimal (SLD) observable and optional moments variance."""

    qfi: float
    sld: npt.NDArray[np.complex128]
    precision_variance: float | None = None


def m_values(N: int) -> npt.NDArray[np.float64]:
    """Magnetic quantum numbers -J..J in ascending order."""
    J = N / 2.0
    return np.arange(-J, J + 1.0)


@functools.lru_cache(maxsize=64)
def _collective_ops_cached(N: int):
    m = m_values(N)
    J = N / 2.0
    jz = np.diag(m)
    # raising operator: <m+1| J+ |m> = sqrt(J(J+1) - m(m+1))
    ladder = np.sqrt(J * (J + 1.0) - m[:-1] * (m[:-1] + 1.0))
    jp = np.zeros((N + 1, N + 1))
    jp[np.arange(1, N + 1), np.arange(N)] = ladder
    jx = (jp + jp.T) / 2.0
    jy = (jp - jp.T) / (2.0j)
    return jx.astype(complex), jy.astype(complex), jz.astype(complex)


def collective_ops(N: int) -> tuple[npt.NDArray, npt.NDArray, npt.NDArray]:
    """Collective spin operators (J_x, J_y, J_z) in the ascending-m basis."""
    return _collective_ops_cached(N)


@functools.lru_cache(maxsize=64)
def jx_eigenbasis(N: int) -> npt.NDArray[np.complex128]:
    """Columns are J_x eigenvectors ordered by ascending eigenvalue."""
    jx, _, _ = _collective_ops_cached(N)
    _, vecs = np.linalg.eigh(jx)
    # fix the eigenvector sign gauge: top-m component real positive
    signs = np.sign(vecs[-1, :].real)
    signs[signs == 0.0] = 1.0
    return vecs * signs[None, :]


def build_input(kind: InputKind | str, N: int, mu: float = 0.0,
                beta: float = 0.0, n_max: int = N_MAX_DEFAULT) -> DickeState:
    """Construct a GHZ, coherent (CSS), or one-axis-twisted (OATS) input state.

    GHZ is built directly in the dephasing eigenbasis.  CSS and OATS start
    from the top m-eigenstate, are twisted by exp(-i mu J_x^2) and rotated by
    R_z(beta), and are then expressed in the J_x eigenbasis, where the
    dephasing map of :func:`evolve` is diagonal.
    """
    kind = InputKind(kind)
    if N > n_max:
        raise DimensionTooLarge(f"N={N} exceeds configured maximum {n_max}")
    dim = N + 1
    if kind is InputKind.GHZ:
        psi = np.zeros(dim, dtype=complex)
        psi[0] = psi[-1] = 1.0 / np.sqrt(2.0)
        return DickeState(N, np.outer(psi, psi.conj()))
    m = m_values(N)
    psi_z = np.zeros(dim, dtype=complex)
    psi_z[-1] = 1.0  # fully polarized |J, J>
    if kind is InputKind.OATS and (mu != 0.0 or beta != 0.0):
        V = jx_eigenbasis(N)
        psi_z = V @ (np.exp(-1j * mu * m ** 2) * (V.conj().T @ psi_z))
        psi_z = np.exp(-1j * beta * m) * psi_z
    # express in the eigenbasis of the dephasing generator (J_x)
    psi = jx_eigenbasis(N).conj().T @ psi_z
    return DickeState(N, np.outer(psi, psi.conj()))


def random_symmetric_state(N: int, rng: np.random.Generator,
                           rank: int | None = None) -> DickeState:
    """Random mixed symmetric-sector state of the given rank (full by default)."""
    dim = N + 1
    rank = dim if rank is None else rank
    G = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = G @ G.conj().T
    rho /= np.trace(rho).real
    return DickeState(N, rho)


def evolve(rho0: DickeState, b: float, chi: float, t: float) -> DickeState:
    """Apply signal phases and collective dephasing to the input state."""
    if chi < 0:
        raise InvalidParameter(f"decay value must be nonnegative, got {chi}")
    m = m_values(rho0.N)
    dm = m[:, None] - m[None, :]
    kernel = np.exp(-1j * b * t * dm - chi * dm ** 2)
    return DickeState(rho0.N, rho0.rho * kernel, b=b, t=t)


def drho_db(rho_b: DickeState) -> npt.NDArray[np.complex128]:
    """Analytic derivative of the evolved state with respect to the signal."""
    m = m_values(rho_b.N)
    dm = m[:, None] - m[None, :]
    return -1j * rho_b.t * dm * rho_b.rho


def qfi_and_sld(rho_b: DickeState, drho: npt.NDArray,
                eig_floor: float = 1e-12) -> EstimationResult:
    """QFI and SLD from the eigendecomposition of the state.

    F = sum over eigenpairs with lam_i + lam_j > eig_floor of
    2 |<i| d rho |j>|^2 / (lam_i + lam_j); the SLD shares the same sums.
    """
    rho_b.validate()
    drho = np.asarray(drho, dtype=complex)
    lam, U = np.linalg.eigh(rho_b.rho)
    A = U.conj().T @ drho @ U
    denom = lam[:, None] + lam[None, :]
    mask = denom > eig_floor
    coeff = np.where(mask, 2.0 * A / np.where(mask, denom, 1.0), 0.0)
    qfi = float(np.sum(np.abs(A) ** 2 * np.where(mask, 2.0 / np.where(mask, denom, 1.0), 0.0)).real)
    sld = U @ coeff @ U.conj().T
    return EstimationResult(qfi=qfi, sld=sld)


def expectation(rho: npt.NDArray, O: npt.NDArray) -> float:
    return float(np.trace(rho @ O).real)


def variance(rho: npt.NDArray, O: npt.NDArray) -> float:
    mean = expectation(rho, O)
    return expectation(rho, O @ O) - mean ** 2


def parity_observable(N: int) -> npt.NDArray[np.complex128]:
    """m -> -m flip operator; reads out the extremal (GHZ) coherence fringe."""
    return np.fliplr(np.eye(N + 1)).astype(complex)


def moments_precision(rho0: DickeState, O: npt.NDArray, b0: float, chi: float,
                      t: float, T: float, delta: float | None = None) -> float:
    """Method-of-moments precision t * Var(O) / (T * slope^2).

    The slope of <O> in the signal is taken by central differences with step
    ``delta`` (default 1e-6 / t).
    """
    if t <= 0 or T <= 0:
        raise InvalidParameter("t and T must be strictly positive")
    delta = 1e-6 / t if delta is None else delta
    rho_b = evolve(rho0, b0, chi, t).rho
    plus = evolve(rho0, b0 + delta, chi, t).rho
    minus = evolve(rho0, b0 - delta, chi, t).rho
    slope = (expectation(plus, O) - expectation(minus, O)) / (2.0 * delta)
    scale = max(1.0, float(np.linalg.norm(O, 2))) * max(t, 1.0)
    if abs(slope) < 1e-10 * scale:
        raise ZeroSlope(f"observable slope {slope:.2e} carries no signal")
    return t * variance(rho_b, O) / (T * slope ** 2)


# --- serialization ------------------------------------------------------------

def state_to_json(state: DickeState) -> str:
    return json.dumps({
        "N": state.N,
        "b": state.b,
        "t": state.t,
        "rho_re": state.rho.real.tolist(),
        "rho_im": state.rho.imag.tolist(),
    })


def state_from_json(text: str) -> DickeState:
    doc = json.loads(text)
    rho = np.asarray(doc["rho_re"]) + 1j * np.asarray(doc["rho_im"])
    return DickeState(doc["N"], rho, b=doc["b"], t=doc["t"])
