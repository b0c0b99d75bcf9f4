"""Pulsed open-loop control: covariances, compression, and no-go bounds.

A pulse sequence splits the interrogation window [0, t] into Q' = Q + 1
segments.  The segment-integrated noise phases lambda_j form a centered
Gaussian vector with covariance Sigma, and the QFI of any controlled
protocol is bounded by the quadratic form dt^T Sigma^{-1} dt of the segment
durations.  In the short-time limit the dimensionless prefactor

    K_{Q'} = lim_{t -> 0} wc^2 dt^T Sigma^{-1} dt

is partition-independent and is computed here by three routes: a gamma
function closed form (Gaussian-cutoff spectra), a Hankel-determinant brute
force over spectral moments, and a high-precision numeric short-time limit.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import mpmath
import numpy as np
import numpy.typing as npt
from scipy import integrate, linalg
from scipy.special import gamma as gamma_fn

from .dicke import DickeState, collective_ops
from .errors import (
    CombinatorialOverflow,
    ExtrapolationUnstable,
    IllConditioned,
    InvalidParameter,
    QuadratureFailure,
    RankDeficient,
    SamplingBudgetExceeded,
    UnsupportedPulse,
)
from .noise import Kind, NoiseModel, chi_time_domain, correlation, spectral_moment

__all__ = [
    "Pulse",
    "PulseSequence",
    "SegmentCovariance",
    "Compression",
    "MonotonicityReport",
    "cpmg_sequence",
    "sequence_to_json",
    "sequence_from_json",
    "pulse_unitary",
    "toggling_axes",
    "build_segment_covariance",
    "detect_dp_blocks",
    "quadratic_form_bound",
    "total_qfi_bound",
    "check_compression_monotonicity",
    "kq_numeric",
    "kq_bruteforce",
    "kq_hankel_gaussian",
    "kq_growth_exponent",
    "controlled_nogo_bound",
    "nogo_curve",
    "gaussian_overlap",
    "continuous_to_pulsed",
    "analytic_controlled_average",
    "simulate_controlled_mixture",
]

_AXES = ("x", "y", "z")
_SIGMA = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


@dataclass(frozen=True)
class Pulse:
    """Instantaneous collective rotation exp(-i angle J_axis)."""

    axis: str
    angle: float

    def __post_init__(self) -> None:
        if self.axis not in _AXES and self.axis != "opaque":
            raise InvalidParameter(f"unknown pulse axis {self.axis!r}")


@dataclass(frozen=True)
class PulseSequence:
    """Pulses at fractional times 0 < a_1 < ... < a_Q < 1 of a window t."""

    fractions: tuple[float, ...]
    pulses: tuple[Pulse, ...]
    total_time: float

    def __post_init__(self) -> None:
        fr = tuple(float(a) for a in self.fractions)
        if len(fr) != len(self.pulses):
            raise InvalidParameter("one pulse per fraction required")
        if any(not 0.0 < a < 1.0 for a in fr):
            raise InvalidParameter("fractions must lie strictly inside (0, 1)")
        if any(b <= a for a, b in zip(fr, fr[1:])):
            raise InvalidParameter("fractions must increase strictly")
        if self.total_time <= 0:
            raise InvalidParameter("total time must be positive")
        object.__setattr__(self, "fractions", fr)
        object.__setattr__(self, "pulses", tuple(self.pulses))

    @property
    def q_prime(self) -> int:
        return len(self.fractions) + 1

    def boundaries(self) -> npt.NDArray[np.float64]:
        return np.concatenate(([0.0], np.asarray(self.fractions), [1.0])) \
            * self.total_time

    def delta_t(self) -> npt.NDArray[np.float64]:
        return np.diff(self.boundaries())


def cpmg_sequence(Q: int, t: float, axis: str = "x") -> PulseSequence:
    """Q equally spaced pi pulses about the given axis."""
    if Q < 0:
        raise InvalidParameter("pulse count must be nonnegative")
    fractions = tuple((k + 1) / (Q + 1) for k in range(Q))
    return PulseSequence(fractions, tuple(Pulse(axis, math.pi) for _ in range(Q)), t)


def sequence_to_json(seq: PulseSequence) -> str:
    return json.dumps({
        "fractions": list(seq.fractions),
        "pulses": [{"axis": p.axis, "angle": p.angle} for p in seq.pulses],
        "t": seq.total_time,
    })


def sequence_from_json(text: str) -> PulseSequence:
    doc = json.loads(text)
    pulses = tuple(Pulse(p["axis"], p["angle"]) for p in doc["pulses"])
    return PulseSequence(tuple(doc["fractions"]), pulses, doc["t"])


def pulse_unitary(N: int, pulse: Pulse) -> npt.NDArray[np.complex128]:
    """Collective rotation on the (N+1)-dimensional symmetric sector."""
    if pulse.axis == "opaque":
        raise UnsupportedPulse("opaque pulses have no rotation representation")
    jx, jy, jz = collective_ops(N)
    gen = {"x": jx, "y": jy, "z": jz}[pulse.axis]
    return linalg.expm(-1j * pulse.angle * gen)


# --- segment covariance --------------------------------------------------------------

@dataclass(frozen=True)
class SegmentCovariance:
    """Covariance of segment-integrated noise phases."""

    sigma: npt.NDArray[np.float64]
    t: float
    model: NoiseModel
    delta_t: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        sigma = np.asarray(self.sigma, dtype=float)
        if np.max(np.abs(sigma - sigma.T)) > 1e-12 * max(1.0, np.abs(sigma).max()):
            raise InvalidParameter("covariance must be symmetric")
        if np.linalg.eigvalsh(sigma).min() < -1e-12 * max(1.0, np.abs(sigma).max()):
            raise InvalidParameter("covariance must be positive semidefinite")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "delta_t", np.asarray(self.delta_t, dtype=float))


def _window_integral(model: NoiseModel, A: float, B: float, C: float,
                     D: float) -> float:
    """Double integral of the correlation over [A, B] x [C, D]."""
    p = model.params
    if model.kind is Kind.ORNSTEIN_UHLENBECK and B <= C:
        s2, wc = p["sigma2"], p["omega_c"]
        return s2 / wc ** 2 * (math.exp(-wc * (C - B)) - math.exp(-wc * (C - A))
                               - math.exp(-wc * (D - B)) + math.exp(-wc * (D - A)))
    if model.kind is Kind.BROWNIAN:
        amp = 2.0 * p["chi0"] * p["omega_c"] ** 3
        if B <= C:  # min(u, v) = u throughout
            return amp * (B ** 2 - A ** 2) / 2.0 * (D - C)
        # identical windows
        return amp * (B ** 3 / 3.0 - A ** 2 * B + 2.0 * A ** 3 / 3.0)
    if model.stationarity.value == "Stationary":
        # chi_ij = Psi(B-C) - Psi(A-C) - Psi(B-D) + Psi(A-D) with Psi'' = C(tau)
        def psi(u: float) -> float:
            u = abs(u)
            if u == 0.0:
                return 0.0
            val, err = integrate.quad(
                lambda tau: (u - tau) * correlation(model, 0.0, tau),
                0.0, u, epsabs=1e-12, limit=400)
            if not math.isfinite(val):
                raise QuadratureFailure("window quadrature failed")
            return val
        return psi(B - C) - psi(A - C) - psi(B - D) + psi(A - D)
    val, _ = integrate.dblquad(lambda v, u: correlation(model, u, v),
                               A, B, lambda _: C, lambda _: D, epsabs=1e-10)
    if not math.isfinite(val):
        raise QuadratureFailure("window quadrature failed")
    return val


def build_segment_covariance(model: NoiseModel,
                             seq: PulseSequence) -> SegmentCovariance:
    """Covariance Sigma_ij over the segment windows of the sequence."""
    bounds = seq.boundaries()
    dts = seq.delta_t()
    q = seq.q_prime
    sigma = np.zeros((q, q))
    if model.kind is Kind.WHITE:
        sigma[np.diag_indices(q)] = \
            model.params["chi0"] * model.params["omega_c"] * dts
        return SegmentCovariance(sigma, seq.total_time, model, dts)
    for i in range(q):
        sigma[i, i] = _window_integral(model, bounds[i], bounds[i + 1],
                                       bounds[i], bounds[i + 1])
        for j in range(i + 1, q):
            val = _window_integral(model, bounds[i], bounds[i + 1],
                                   bounds[j], bounds[j + 1])
            sigma[i, j] = sigma[j, i] = val
    return SegmentCovariance(sigma, seq.total_time, model, dts)


# --- dephasing-preserving compression ---------------------------------------------------

@dataclass(frozen=True)
class Compression:
    """Signed block-compression matrix S mapping segments to effective labels."""

    S: npt.NDArray[np.int64]
    blocks: tuple[tuple[int, int], ...]     # [start, end) index ranges
    signs: tuple[int, ...]                  # per-segment sign within its block

    def __post_init__(self) -> None:
        S = np.asarray(self.S, dtype=int)
        if np.linalg.matrix_rank(S) < S.shape[0]:
            raise RankDeficient("compression matrix must have full row rank")
        object.__setattr__(self, "S", S)


def _spin_half_unitary(pulse: Pulse) -> npt.NDArray[np.complex128]:
    if pulse.axis == "opaque":
        raise UnsupportedPulse(
            "dephasing-preserving detection needs linear collective rotations")
    return linalg.expm(-0.5j * pulse.angle * _SIGMA[pulse.axis])


def toggling_axes(seq: PulseSequence) -> npt.NDArray[np.float64]:
    """Per-segment toggling-frame direction of the dephasing generator.

    Segment j feels G_j = W_{j-1}^dag J_z W_{j-1} with W_j the product of the
    first j pulse unitaries; the direction is read off in the spin-1/2
    representation.
    """
    W = np.eye(2, dtype=complex)
    axes = []
    for j in range(seq.q_prime):
        G = W.conj().T @ _SIGMA["z"] @ W
        axes.append([np.trace(_SIGMA[a] @ G).real / 2.0 for a in _AXES])
        if j < len(seq.pulses):
            W = _spin_half_unitary(seq.pulses[j]) @ W
    return np.asarray(axes)


def detect_dp_blocks(seq: PulseSequence, tol: float = 1e-10) -> Compression:
    """Group maximal consecutive segments with collinear toggling generators.

    Each block of segments with G_j = +/- G_block compresses to one effective
    noise label with the per-segment signs; non-collinear neighbors stay as
    singleton blocks (identity rows).
    """
    axes = toggling_axes(seq)
    q = seq.q_prime
    blocks: list[tuple[int, int]] = []
    signs = [1] * q
    start = 0
    for j in range(1, q + 1):
        if j < q:
            dot = float(axes[start] @ axes[j])
            if abs(abs(dot) - 1.0) <= tol:
                signs[j] = signs[start] if dot > 0 else -signs[start]
                continue
        blocks.append((start, j))
        start = j
        if j < q:
            signs[j] = 1
    S = np.zeros((len(blocks), q), dtype=int)
    for row, (a, b) in enumerate(blocks):
        S[row, a:b] = signs[a:b]
    return Compression(S=S, blocks=tuple(blocks), signs=tuple(signs))


# --- quadratic-form bounds ----------------------------------------------------------------

def _spd_quadratic_form(sigma: npt.NDArray, vec: npt.NDArray,
                        cond_limit: float = 1e12) -> float:
    cond = np.linalg.cond(sigma)
    if not math.isfinite(cond) or cond > cond_limit:
        raise IllConditioned(
            f"covariance condition number {cond:.3e} exceeds {cond_limit:.0e}; "
            "use the scaled short-time route", condition_number=cond)
    c, low = linalg.cho_factor(sigma)
    return float(vec @ linalg.cho_solve((c, low), vec))


def quadratic_form_bound(cov: SegmentCovariance) -> float:
    """Single-shot QFI bound dt^T Sigma^{-1} dt."""
    return _spd_quadratic_form(cov.sigma, cov.delta_t)


def total_qfi_bound(cov: SegmentCovariance, T: float) -> float:
    """Total-runtime bound (T / t) * dt^T Sigma^{-1} dt."""
    return (T / cov.t) * quadratic_form_bound(cov)


@dataclass(frozen=True)
class MonotonicityReport:
    original: float
    compressed: float
    monotone: bool
    projector_idempotence_error: float
    projector_symmetry_error: float
    eigenvalue_error: float


def check_compression_monotonicity(sigma: npt.NDArray, S: npt.NDArray,
                                   vec: npt.NDArray) -> MonotonicityReport:
    """Verify (S v)^T (S Sigma S^T)^{-1} (S v) <= v^T Sigma^{-1} v.

    Also checks that P = Sigma^{1/2} S^T (S Sigma S^T)^{-1} S Sigma^{1/2} is
    an orthogonal projector.
    """
    sigma = np.asarray(sigma, dtype=float)
    S = np.asarray(S, dtype=float)
    if np.linalg.matrix_rank(S) < S.shape[0]:
        raise RankDeficient("compression matrix must have full row rank")
    original = _spd_quadratic_form(sigma, np.asarray(vec, dtype=float))
    mid = S @ sigma @ S.T
    compressed = _spd_quadratic_form(mid, S @ np.asarray(vec, dtype=float))
    lam, U = np.linalg.eigh(sigma)
    root = U @ np.diag(np.sqrt(np.maximum(lam, 0.0))) @ U.T
    P = root @ S.T @ np.linalg.solve(mid, S @ root)
    idem = float(np.max(np.abs(P @ P - P)))
    symm = float(np.max(np.abs(P - P.T)))
    eigs = np.linalg.eigvalsh((P + P.T) / 2.0)
    eig_err = float(np.max(np.minimum(np.abs(eigs), np.abs(eigs - 1.0))))
    slack = 1e-12 * max(1.0, abs(original))
    return MonotonicityReport(
        original=original, compressed=compressed,
        monotone=compressed <= original + slack,
        projector_idempotence_error=idem, projector_symmetry_error=symm,
        eigenvalue_error=eig_err)


# --- K_{Q'} short-time prefactor -------------------------------------------------------------

def kq_hankel_gaussian(q_prime: int, s: float, alpha: float,
                       omega_c: float) -> float:
    """Closed-form prefactor for the power-law/Gaussian-cutoff spectrum.

    K_{2n} = wc^2 / (2 A (n-1)!) * Gamma(g+n) / (Gamma(g) Gamma(g+1)) with
    A = alpha wc^2 / (4 pi), g = (s+1)/2; odd Q' maps to n = ceil(Q'/2).
    """
    if q_prime < 1:
        raise InvalidParameter("segment count must be >= 1")
    if s <= -1:
        raise InvalidParameter("spectral exponent must exceed -1")
    n = (q_prime + 1) // 2
    a_const = alpha * omega_c ** 2 / (4.0 * math.pi)
    g = (s + 1.0) / 2.0
    return omega_c ** 2 / (2.0 * a_const * math.factorial(n - 1)) \
        * gamma_fn(g + n) / (gamma_fn(g) * gamma_fn(g + 1.0))


def _leibniz_det(M: npt.NDArray) -> float:
    """Determinant by explicit signed-permutation enumeration."""
    k = M.shape[0]
    if k == 0:
        return 1.0
    total_terms = []
    for perm in itertools.permutations(range(k)):
        sign = 1
        seen = [False] * k
        for i in range(k):  # sign from cycle decomposition
            if seen[i]:
                continue
            length, j = 0, i
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
        prod = sign
        for i in range(k):
            prod *= M[i, perm[i]]
        total_terms.append(prod)
    return math.fsum(total_terms)


def kq_bruteforce(q_prime: int, moments: Sequence[float],
                  omega_c: float = 1.0, cap: int = 10) -> float:
    """Prefactor as a ratio of Hankel determinants of correlation coefficients.

    With c_k = 2 * moment(k) (the Taylor coefficients of the correlation up to
    the alternating (2k)! factor) and n = ceil(Q'/2),

        K = wc^2 * det[c_{a+b}]_{a,b=1..n-1} / det[c_{a+b-2}]_{a,b=1..n}.

    Determinants are evaluated both by explicit signed-permutation enumeration
    and by LU factorization; disagreement beyond 1e-10 is an error.
    """
    if q_prime < 1:
        raise InvalidParameter("segment count must be >= 1")
    if q_prime > cap:
        raise CombinatorialOverflow(
            f"Q' = {q_prime} exceeds the enumeration cap {cap}")
    n = (q_prime + 1) // 2
    c = [2.0 * m for m in moments]
    if len(c) < 2 * n - 1:
        raise InvalidParameter(
            f"need moments up to order {2 * n - 2}, got {len(moments) - 1}")
    num = np.array([[c[a + b] for b in range(1, n)] for a in range(1, n)])
    den = np.array([[c[a + b - 2] for b in range(1, n + 1)]
                    for a in range(1, n + 1)])
    num = num.reshape(n - 1, n - 1)
    det_num = _leibniz_det(num)
    det_den = _leibniz_det(den)
    lu_num = float(np.linalg.det(num)) if n > 1 else 1.0
    lu_den = float(np.linalg.det(den))
    for brute, lu in ((det_num, lu_num), (det_den, lu_den)):
        if abs(brute - lu) > 1e-10 * max(1.0, abs(brute)):
            raise QuadratureFailure("determinant routes disagree")
    return omega_c ** 2 * det_num / det_den


def _mp_segment_sigma(moment_vals: Sequence[mpmath.mpf],
                      bounds: Sequence[mpmath.mpf]) -> mpmath.matrix:
    """Segment covariance from the exact even-series of the correlation.

    Sigma_ij = sum_k (-1)^k c_k / (2k)! * [H(B-C) - H(A-C) - H(B-D) + H(A-D)],
    H(u) = u^{2k+2} / ((2k+1)(2k+2)) with sign(u) carried on odd powers via
    H(-u) = H(u) (even).
    """
    q = len(bounds) - 1
    sigma = mpmath.zeros(q, q)
    for i in range(q):
        for j in range(i, q):
            A, B = bounds[i], bounds[i + 1]
            C, D = bounds[j], bounds[j + 1]
            total = mpmath.mpf(0)
            for k, mu in enumerate(moment_vals):
                ck = 2 * mu
                coeff = (-1) ** k * ck / mpmath.factorial(2 * k)
                h = lambda u: abs(u) ** (2 * k + 2) / ((2 * k + 1) * (2 * k + 2))
                total += coeff * (h(B - C) - h(A - C) - h(B - D) + h(A - D))
            sigma[i, j] = total
            sigma[j, i] = total
    return sigma


def kq_numeric(model: NoiseModel, fractions: Sequence[float],
               t0: float | None = None, dps: int | None = None) -> float:
    """Short-time limit of wc^2 dt^T Sigma^{-1} dt by Richardson extrapolation.

    Sigma(t) is evaluated from the exact even Taylor series of the correlation
    in high-precision arithmetic (the determinant of Sigma collapses as
    t^{Q'(Q'+1)}, far below float64 resolution), on a 3-point geometric grid
    with ratio 2; the quadratic form is a series in t^2, so two Richardson
    levels eliminate the t^2 and t^4 corrections.
    """
    fractions = tuple(float(a) for a in fractions)
    if any(not 0.0 < a < 1.0 for a in fractions) or \
            any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise InvalidParameter("fractions must increase strictly inside (0, 1)")
    q = len(fractions) + 1
    wc = model.omega_c
    n_moments = q * (q + 1) // 2 + 4
    moments = [spectral_moment(model, k) for k in range(n_moments)]
    if t0 is None:
        t0 = 1e-3 / wc
    if dps is None:
        digits_lost = q * (q + 1) * max(1.0, -math.log10(wc * t0))
        dps = int(40 + digits_lost)
    values = []
    with mpmath.workdps(dps):
        mp_moments = [mpmath.mpf(m) for m in moments]
        for level in range(3):
            t = mpmath.mpf(t0) / 2 ** level
            bnds = [mpmath.mpf(0)] + [mpmath.mpf(a) * t for a in fractions] \
                + [t]
            sigma = _mp_segment_sigma(mp_moments, bnds)
            dts = mpmath.matrix([bnds[i + 1] - bnds[i] for i in range(q)])
            sol = mpmath.lu_solve(sigma, dts)
            qform = sum(dts[i] * sol[i] for i in range(q))
            values.append(mpmath.mpf(wc) ** 2 * qform)
        # Richardson in t^2 with grid ratio 2: weights 4 and 16
        r0 = (4 * values[1] - values[0]) / 3
        r1 = (4 * values[2] - values[1]) / 3
        final = (16 * r1 - r0) / 15
        first_corr = abs(values[2] - values[1])
        second_corr = abs(r1 - r0)
        if first_corr > 0 and second_corr > 4 * first_corr:
            raise ExtrapolationUnstable(
                f"Richardson table diverges: {float(first_corr):.3e} -> "
                f"{float(second_corr):.3e}")
        return float(final)


def kq_growth_exponent(s: float, q_values: Sequence[int], alpha: float = 1.0,
                       omega_c: float = 1.0) -> float:
    """Log-log slope of the closed-form prefactor against segment count."""
    qs = np.asarray(q_values, dtype=float)
    ks = np.array([kq_hankel_gaussian(int(q), s, alpha, omega_c)
                   for q in q_values])
    slope, _ = np.polyfit(np.log(qs), np.log(ks), 1)
    return float(slope)


# --- no-go bounds -------------------------------------------------------------------------

def controlled_nogo_bound(N: int, T: float, regime: str,
                          model: NoiseModel | None = None,
                          q_prime: int = 1,
                          K: float | None = None) -> tuple[float, float]:
    """Controlled precision floor (t*, min Delta-b^2) per noise regime.

    White noise: the floor chi0 wc / T is segmentation-independent (no finite
    maximizer; +inf sentinel).  Colored stationary noise: with prefactor K the
    two-branch bound min(T t N^2, (T/t) K / wc^2) peaks at t* = sqrt(K)/(wc N)
    giving Delta-b^2 >= (wc / T) K^{-1/2} / N.
    """
    if regime == "White":
        if model is None or model.kind is not Kind.WHITE:
            raise InvalidParameter("White regime requires a white model")
        p = model.params
        return math.inf, p["chi0"] * p["omega_c"] / T
    if regime != "ColoredStationary":
        raise InvalidParameter(f"unknown regime {regime!r}")
    if K is None:
        if model is None or model.kind is not Kind.GAUSSIAN_CUTOFF_SPECTRUM:
            raise InvalidParameter(
                "colored regime needs a Gaussian-cutoff model or explicit K")
        p = model.params
        K = kq_hankel_gaussian(q_prime, p["s"], p["alpha"], p["omega_c"])
    wc = 1.0 if model is None else model.omega_c
    t_star = math.sqrt(K) / (wc * N)
    return t_star, (wc / T) / (math.sqrt(K) * N)


def nogo_curve(N: int, T: float, K: float, omega_c: float,
               t_grid: Sequence[float]) -> npt.NDArray[np.float64]:
    """Two-branch precision curve Delta-b^2(t) = 1 / min(T t N^2, (T/t) K/wc^2)."""
    ts = np.asarray(t_grid, dtype=float)
    f = np.minimum(T * ts * N ** 2, (T / ts) * K / omega_c ** 2)
    return 1.0 / f


def gaussian_overlap(dphi: npt.NDArray, sigma: npt.NDArray) -> float:
    """Bhattacharyya overlap of equal-covariance Gaussians, exp(-d^T S^{-1} d / 8)."""
    dphi = np.asarray(dphi, dtype=float)
    return float(math.exp(-dphi @ np.linalg.solve(sigma, dphi) / 8.0))


# --- continuous-control discretization ---------------------------------------------------------

def continuous_to_pulsed(controls: Mapping[str, Sequence[float]],
                         t: float) -> PulseSequence:
    """Trotterize sampled control fields u_axis(t_l) into per-slice pulses.

    Each of the n uniform slices contributes pulses of area dt * u_axis at its
    midpoint; zero-amplitude slices emit no pulse.
    """
    lengths = {len(v) for v in controls.values()}
    if len(lengths) > 1:
        raise InvalidParameter("control fields must share one sample grid")
    n = lengths.pop() if lengths else 0
    dt = t / n if n else t
    fractions: list[float] = []
    pulses: list[Pulse] = []
    for ell in range(n):
        frac = (ell + 0.5) / n
        for axis in _AXES:
            if axis in controls and controls[axis][ell] != 0.0:
                if fractions and math.isclose(fractions[-1], frac):
                    frac = frac + 1e-12
                fractions.append(frac)
                pulses.append(Pulse(axis, dt * float(controls[axis][ell])))
    return PulseSequence(tuple(fractions), tuple(pulses), t)


# --- controlled ensemble simulation -------------------------------------------------------------

def analytic_controlled_average(rho0: DickeState, seq: PulseSequence,
                                cov: SegmentCovariance,
                                b: float) -> DickeState:
    """Exact noise-averaged state of a dephasing-preserving sequence.

    With all toggling generators equal to +/- J_z the branch unitaries merge
    into V_tot exp(-i Phi J_z) with Phi = sum_j y_j (b dt_j + lambda_j); the
    Gaussian average gives the uncontrolled-style kernel with effective time
    sum y_j dt_j and effective decay y^T Sigma y.
    """
    comp = detect_dp_blocks(seq)
    if len(comp.blocks) != 1:
        raise UnsupportedPulse(
            "analytic average requires a single dephasing-preserving block")
    y = np.asarray(comp.signs, dtype=float)
    axes = toggling_axes(seq)
    if abs(abs(axes[0] @ np.array([0.0, 0.0, 1.0])) - 1.0) > 1e-10:
        raise UnsupportedPulse("block generator must be the dephasing axis")
    y = y * float(np.sign(axes[0, 2]))
    t_eff = float(y @ cov.delta_t)
    chi_eff = float(y @ cov.sigma @ y)
    N = rho0.N
    m = np.arange(-N / 2.0, N / 2.0 + 1.0)
    dm = m[:, None] - m[None, :]
    kernel = np.exp(-1j * b * t_eff * dm - chi_eff * dm ** 2)
    v_tot = np.eye(N + 1, dtype=complex)
    for pulse in seq.pulses:
        v_tot = pulse_unitary(N, pulse) @ v_tot
    rho = v_tot @ (rho0.rho * kernel) @ v_tot.conj().T
    return DickeState(N, rho, b=b, t=seq.total_time)


def simulate_controlled_mixture(rho0: DickeState, seq: PulseSequence,
                                cov: SegmentCovariance, b: float,
                                sample_count: int, seed: int,
                                compression: Compression | None = None,
                                budget: int = 10 ** 7,
                                batch: int = 20000) -> DickeState:
    """Monte Carlo noise average of the pulsed evolution.

    Phases are drawn as lambda ~ N(0, 2 Sigma) (the factor 2 matches the
    coherence-decay kernel exp(-chi dm^2)); each trajectory applies the
    alternating segment phases and pulse unitaries, and states are averaged.
    With a compression, effective block labels are drawn from the compressed
    covariance and expanded by the block signs.
    """
    if sample_count < 0:
        raise InvalidParameter("sample count must be nonnegative")
    if sample_count > budget:
        raise SamplingBudgetExceeded(
            f"{sample_count} trajectories exceed the budget {budget}")
    N = rho0.N
    dim = N + 1
    m = np.arange(-N / 2.0, N / 2.0 + 1.0)
    rng = np.random.default_rng(seed)
    q = seq.q_prime
    if compression is not None:
        S = np.asarray(compression.S, dtype=float)
        root = _psd_root(2.0 * (S @ cov.sigma @ S.T))
        # expand block labels so that sum_j y_j lambda_j = Lambda_block
        expand = np.zeros((S.shape[0], q))
        for row, (a, bnd) in enumerate(compression.blocks):
            expand[row, a:bnd] = np.asarray(compression.signs[a:bnd],
                                            dtype=float) / (bnd - a)
        draw = lambda k: (rng.standard_normal((k, S.shape[0])) @ root.T) @ expand
    else:
        root = _psd_root(2.0 * cov.sigma)
        draw = lambda k: rng.standard_normal((k, q)) @ root.T
    dts = cov.delta_t
    unitaries = [pulse_unitary(N, p) for p in seq.pulses]
    acc = np.zeros((dim, dim), dtype=complex)
    done = 0
    while done < sample_count:
        k = min(batch, sample_count - done)
        lam = draw(k)
        U = np.broadcast_to(np.eye(dim, dtype=complex), (k, dim, dim)).copy()
        for j in range(q):
            phases = np.exp(-1j * (b * dts[j] + lam[:, j])[:, None] * m[None, :])
            U = phases[:, :, None] * U  # left-multiply diagonal segment phase
            if j < len(unitaries):
                U = unitaries[j][None, :, :] @ U
        states = U @ rho0.rho[None, :, :] @ U.conj().transpose(0, 2, 1)
        acc += states.sum(axis=0)
        done += k
    rho = acc / max(sample_count, 1)
    return DickeState(N, rho, b=b, t=seq.total_time)


def _psd_root(sigma: npt.NDArray) -> npt.NDArray[np.float64]:
    lam, U = np.linalg.eigh(np.asarray(sigma, dtype=float))
    if lam.min() < -1e-10 * max(1.0, abs(lam).max()):
        from .errors import CovarianceNotPSD
        raise CovarianceNotPSD(f"minimum eigenvalue {lam.min():.3e}")
    return U @ np.diag(np.sqrt(np.maximum(lam, 0.0)))
