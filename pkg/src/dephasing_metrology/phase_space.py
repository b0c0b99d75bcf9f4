"""Bosonic phase-space description of squeezed collective-spin protocols.

In the low-excitation (large-N) limit the collective spin maps to a single
bosonic mode with quadratures x = (a + a^dag)/sqrt(2), p = i(a^dag - a)/sqrt(2)
(vacuum covariance = identity).  One-axis-twisted inputs become Gaussian
states parametrized by a quadrature squeezing delta and shear eta; the signal
displaces the p quadrature by sqrt(N) b t and collective dephasing injects
2 N chi(t) of excess p-variance, so the single-shot QFI is

    F = N delta t^2 / (1 + 2 N delta chi(t)),

which matches the exact Dicke-basis computation in the validity regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt

from .errors import (
    DegenerateSqueezing,
    FitAmbiguous,
    HPViolation,
    InvalidDecay,
    InvalidParameter,
    SingularCovariance,
)
from .noise import DecayLaw

__all__ = [
    "GaussianState",
    "ValidityReport",
    "oats_params",
    "initial_state",
    "evolve_averaged",
    "gaussian_qfi",
    "oats_optimal",
    "hp_validity",
    "Table1Row",
    "TABLE1_STATES",
    "table1_row",
]


@dataclass(frozen=True)
class GaussianState:
    """Mean vector (<x>, <p>) and covariance of the single-mode description."""

    mean: npt.NDArray[np.float64]
    cov: npt.NDArray[np.float64]
    J: float

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (2,) or cov.shape != (2, 2):
            raise InvalidParameter("mean must be a 2-vector, cov 2x2")
        if abs(cov[0, 1] - cov[1, 0]) > 1e-10:
            raise InvalidParameter("covariance must be symmetric")
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise SingularCovariance("covariance must be positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class ValidityReport:
    """Low-excitation check: mode occupation against the 2J ceiling."""

    n_excitations: float
    ratio: float           # <a^dag a> / (2J)
    valid: bool            # ratio <= epsilon
    marginal: bool         # epsilon < ratio <= 1


def oats_params(mu: float, beta: float, J: float) -> tuple[float, float]:
    """Squeezing delta and shear eta of the twisted-rotated input family."""
    kappa = J * mu
    delta = 1.0 + 4.0 * kappa ** 2 * math.sin(beta) ** 2 \
        - 2.0 * kappa * math.sin(2.0 * beta)
    if delta <= 1e-12:
        raise DegenerateSqueezing(f"delta = {delta} outside the valid region")
    eta = (kappa ** 2 * math.sin(2.0 * beta) - kappa * math.cos(2.0 * beta)) / delta
    return delta, eta


def initial_state(mu: float, beta: float, J: float) -> GaussianState:
    """Pure Gaussian input with unit determinant covariance."""
    delta, eta = oats_params(mu, beta, J)
    cov = np.array([[delta, -2.0 * eta * delta],
                    [-2.0 * eta * delta, 1.0 / delta + 4.0 * eta ** 2 * delta]])
    return GaussianState(mean=np.zeros(2), cov=cov, J=J)


def evolve_averaged(state: GaussianState, b: float, t: float,
                    chi: float) -> GaussianState:
    """Noise-averaged evolution: p-displacement by the signal, p-variance
    injection 2 N chi from the dephasing average."""
    if chi < 0:
        raise InvalidParameter(f"decay value must be nonnegative, got {chi}")
    N = 2.0 * state.J
    mean = np.array([0.0, math.sqrt(N) * b * t])
    cov = state.cov + np.diag([0.0, 2.0 * N * chi])
    return GaussianState(mean=mean, cov=cov, J=state.J)


def gaussian_qfi(state: GaussianState, t: float) -> tuple[float, npt.NDArray]:
    """Single-shot QFI and SLD quadrature coefficients.

    F = dmu^T Sigma^{-1} dmu with dmu = (0, sqrt(N) t); the SLD observable is
    proportional to coeffs[0]*x + coeffs[1]*p, normalized to coeffs[1] = 1
    (equal to (2 eta, 1) for the twisted input family, independent of chi).
    """
    N = 2.0 * state.J
    dmu = np.array([0.0, math.sqrt(N) * t])
    try:
        sol = np.linalg.solve(state.cov, dmu)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(str(exc)) from None
    qfi = float(dmu @ sol)
    coeffs = sol / sol[1] if abs(sol[1]) > 1e-300 else sol
    return qfi, coeffs


def hp_validity(state: GaussianState, epsilon: float = 0.1) -> ValidityReport:
    """Occupation <a^dag a> = (tr cov - 2)/4 + |mean|^2/2 against 2J."""
    n_exc = (float(np.trace(state.cov)) - 2.0) / 4.0 \
        + float(state.mean @ state.mean) / 2.0
    ratio = n_exc / (2.0 * state.J)
    return ValidityReport(n_excitations=n_exc, ratio=ratio,
                          valid=ratio <= epsilon,
                          marginal=epsilon < ratio <= 1.0)


def oats_optimal(N: int, T: float, decay: DecayLaw, mu: float, beta: float,
                 enforce_validity: bool = True) -> tuple[float, float]:
    """Optimal interrogation time and total QFI of the twisted-input protocol.

    F_tot(t) = T N delta t / (1 + 2 N delta chi(t)).  For n = 1 the supremum
    T / (2 chi0 wc) is approached as t -> inf (+inf sentinel); for n >= 2 the
    unique maximizer satisfies (wc t*)^n = 1 / (2 (n-1) chi0 N delta).
    """
    if N < 1 or T <= 0:
        raise InvalidParameter("need N >= 1 and T > 0")
    n, chi0, wc = decay.n, decay.chi0, decay.omega_c
    if n < 1:
        raise InvalidDecay(f"decay exponent must be >= 1, got {n}")
    delta, _ = oats_params(mu, beta, N / 2.0)
    if n == 1:
        return math.inf, T / (2.0 * chi0 * wc)
    t_star = (1.0 / wc) * (2.0 * (n - 1.0) * chi0 * N * delta) ** (-1.0 / n)
    f_tot = T * N * delta * t_star * (n - 1.0) / n
    if enforce_validity:
        state = evolve_averaged(initial_state(mu, beta, N / 2.0), 0.0, t_star,
                                decay.chi(t_star))
        report = hp_validity(state)
        if not (report.valid or report.marginal):
            raise HPViolation(
                f"optimal state occupation ratio {report.ratio:.3f} exceeds 1")
    return t_star, f_tot


# --- Table-of-protocols fits ------------------------------------------------------

TABLE1_STATES = ("CSS", "KU-OATS", "PE-OATS", "GHZ")


def _state_params(state_spec: str, N: int) -> tuple[float, float]:
    """(mu, beta) of the named protocol at probe count N."""
    if state_spec == "CSS":
        return 0.0, 0.0
    if state_spec == "KU-OATS":
        return 3.0 ** (1.0 / 6.0) * N ** (-2.0 / 3.0), \
            math.pi / 2.0 - 3.0 ** (-1.0 / 6.0) * N ** (-1.0 / 3.0)
    if state_spec == "PE-OATS":
        return N ** (-0.5), -math.pi / 2.0
    raise InvalidParameter(f"unknown protocol {state_spec!r}")


@dataclass(frozen=True)
class Table1Row:
    state: str
    regime: str
    exponent: float
    prefactor: float
    residual: float


def table1_row(state_spec: str, noise_regime: str,
               N_list: Sequence[int] | None = None, T: float = 1.0,
               decay: DecayLaw | None = None) -> Table1Row:
    """Fit the precision scaling Delta-b ~ prefactor * N^exponent.

    Regimes: "ColoredN2" optimizes the protocol under a quadratic decay law;
    "White" uses the flat Markovian ceiling; "Noiseless" evaluates the
    noiseless QCRB at a fixed unit reference time.
    """
    if noise_regime not in ("ColoredN2", "White", "Noiseless"):
        raise InvalidParameter(f"unknown regime {noise_regime!r}")
    if N_list is None:
        N_list = [int(round(10 ** e)) for e in (2.0, 2.5, 3.0, 3.5, 4.0)]
    decay = decay or DecayLaw(n=2, chi0=1.0, omega_c=1.0)
    t_ref = 1.0 / decay.omega_c
    precisions = []
    for N in N_list:
        if state_spec == "GHZ":
            if noise_regime == "Noiseless":
                db2 = 1.0 / (T * t_ref * N ** 2)
            else:
                from .bounds import BoundQuery, ghz_optimal
                law = decay if noise_regime == "ColoredN2" else \
                    DecayLaw(n=1, chi0=decay.chi0, omega_c=decay.omega_c)
                _, _, db2 = ghz_optimal(BoundQuery(N=N, T=T, decay=law))
        else:
            mu, beta = _state_params(state_spec, N)
            delta, _ = oats_params(mu, beta, N / 2.0)
            if noise_regime == "Noiseless":
                db2 = 1.0 / (T * t_ref * N * delta)
            elif noise_regime == "White":
                db2 = 2.0 * decay.chi0 * decay.omega_c / T
            else:
                _, f_tot = oats_optimal(N, T, decay, mu, beta,
                                        enforce_validity=False)
                db2 = 1.0 / f_tot
        precisions.append(math.sqrt(db2))
    x = np.log(np.asarray(N_list, dtype=float))
    y = np.log(np.asarray(precisions))
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    if residual > 0.05:
        raise FitAmbiguous(f"scaling fit residual {residual:.3f} too large")
    prefactor = precisions[-1] / N_list[-1] ** slope
    return Table1Row(state=state_spec, regime=noise_regime,
                     exponent=float(slope), prefactor=float(prefactor),
                     residual=residual)
