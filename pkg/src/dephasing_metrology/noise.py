"""Gaussian dephasing-noise models and decoherence (decay) functions.

A model describes a zero-mean Gaussian process xi(t) through its two-point
correlation C(t1, t2) and, when (wide-sense) stationary, its spectrum S(w),
the Fourier transform of C(tau).  The decay function

    chi(t) = Int_0^t Int_0^t C(s, s') ds ds'

is the variance of the accumulated phase lambda(t) = Int_0^t xi(s) ds and
suppresses Dicke coherences (see :mod:`dephasing_metrology.dicke`).

Normalization conventions (single source of truth for the whole package):

* spectrum-domain decay:  chi(t) = (1/2 pi) Int S(w) F(t, w) dw with the
  first-order filter F(t, w) = |Int_0^t e^{i w s} ds|^2 = 4 sin^2(w t/2)/w^2;
* spectral moments:  moment(n) = (1/4 pi) Int_{-inf}^{inf} S(w) w^{2n} dw,
  so C(0) = 2 * moment(0) and the Taylor coefficients of the correlation are
  C(tau) = 2 * sum_k (-1)^k moment(k) tau^{2k}/(2k)!.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .errors import (
    DivergentMoment,
    FitAmbiguous,
    InvalidParameter,
    NegativeResult,
    NonIntegrableCorrelation,
    SpectrumUndefined,
)

__all__ = [
    "Kind",
    "Stationarity",
    "NoiseModel",
    "DecayLaw",
    "white",
    "ornstein_uhlenbeck",
    "gaussian_cutoff",
    "brownian",
    "integrated_stationary",
    "tabulated",
    "one_over_f",
    "correlation",
    "spectrum",
    "chi_time_domain",
    "chi_spectrum_domain",
    "chi_integrated_process",
    "chi",
    "first_order_filter",
    "second_order_filter",
    "spectral_moment",
    "moment_series",
    "fit_short_time_law",
    "short_time_law",
    "model_to_json",
    "model_from_json",
    "tabulated_from_csv",
]


class Kind(str, enum.Enum):
    WHITE = "White"
    ORNSTEIN_UHLENBECK = "OrnsteinUhlenbeck"
    GAUSSIAN_CUTOFF_SPECTRUM = "GaussianCutoffSpectrum"
    BROWNIAN = "Brownian"
    INTEGRATED_STATIONARY = "IntegratedStationary"
    TABULATED_CORRELATION = "TabulatedCorrelation"
    ONE_OVER_F = "OneOverF"


class Stationarity(str, enum.Enum):
    STATIONARY = "Stationary"
    WIDE_SENSE_GENERALIZED = "WideSenseGeneralized"
    NON_STATIONARY = "NonStationary"


_QUAD_ABS_TOL = 1e-12


@dataclass(frozen=True)
class NoiseModel:
    """Immutable description of a zero-mean Gaussian dephasing process."""

    kind: Kind
    params: Mapping[str, float]
    stationarity: Stationarity
    eta: "NoiseModel | None" = None          # inner process for integrated noise
    table: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    def __post_init__(self) -> None:
        p = dict(self.params)
        for key in ("omega_c", "chi0", "sigma2", "alpha", "omega_ir"):
            if key in p and p[key] <= 0:
                raise InvalidParameter(f"{key} must be strictly positive, got {p[key]}")
        if self.kind is Kind.INTEGRATED_STATIONARY:
            if self.eta is None:
                raise InvalidParameter("IntegratedStationary requires an inner model")
            if self.eta.stationarity is not Stationarity.STATIONARY:
                raise InvalidParameter("inner process must be stationary")
        if self.kind is Kind.TABULATED_CORRELATION and self.table is None:
            raise InvalidParameter("TabulatedCorrelation requires a (tau, C) table")

    @property
    def omega_c(self) -> float:
        return float(self.params.get("omega_c", 1.0))


@dataclass(frozen=True)
class DecayLaw:
    """Short-time power law chi(t) ~= chi0 * (omega_c * t)^n."""

    n: int
    chi0: float
    omega_c: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidParameter(f"decay exponent must be >= 1, got {self.n}")
        if self.chi0 <= 0 or self.omega_c <= 0:
            raise InvalidParameter("chi0 and omega_c must be strictly positive")

    def chi(self, t: float) -> float:
        return self.chi0 * (self.omega_c * t) ** self.n


# --- constructors -------------------------------------------------------------

def white(chi0: float = 1.0, omega_c: float = 1.0) -> NoiseModel:
    """Temporally uncorrelated noise, C(tau) = 2 chi0 wc delta(tau)."""
    return NoiseModel(Kind.WHITE, {"chi0": chi0, "omega_c": omega_c},
                      Stationarity.STATIONARY)


def ornstein_uhlenbeck(sigma2: float = 1.0, omega_c: float = 1.0) -> NoiseModel:
    """Exponentially correlated noise, C(tau) = sigma2 exp(-wc |tau|)."""
    return NoiseModel(Kind.ORNSTEIN_UHLENBECK,
                      {"sigma2": sigma2, "omega_c": omega_c},
                      Stationarity.STATIONARY)


def gaussian_cutoff(alpha: float = 1.0, s: float = 1.0,
                    omega_c: float = 1.0) -> NoiseModel:
    """Power-law spectrum with Gaussian cutoff, S = alpha |w|^s wc^{1-s} e^{-(w/wc)^2}."""
    if s <= -1:
        raise InvalidParameter(f"spectral exponent must exceed -1, got {s}")
    return NoiseModel(Kind.GAUSSIAN_CUTOFF_SPECTRUM,
                      {"alpha": alpha, "s": s, "omega_c": omega_c},
                      Stationarity.STATIONARY)


def brownian(chi0: float = 1.0, omega_c: float = 1.0) -> NoiseModel:
    """Integrated white noise, C(s, s') = 2 chi0 wc^3 min(s, s')."""
    return NoiseModel(Kind.BROWNIAN, {"chi0": chi0, "omega_c": omega_c},
                      Stationarity.NON_STATIONARY)


def integrated_stationary(eta: NoiseModel) -> NoiseModel:
    """Process xi(t) = Int_0^t eta(s) ds for a stationary inner process eta."""
    return NoiseModel(Kind.INTEGRATED_STATIONARY,
                      {"omega_c": eta.omega_c},
                      Stationarity.NON_STATIONARY, eta=eta)


def tabulated(tau: Sequence[float], corr: Sequence[float],
              omega_c: float = 1.0) -> NoiseModel:
    """Stationary correlation sampled on a tau grid; linear interpolation in |tau|."""
    tau_t = tuple(float(x) for x in tau)
    if any(b <= a for a, b in zip(tau_t, tau_t[1:])) or tau_t[0] != 0.0:
        raise InvalidParameter("tau grid must start at 0 and increase strictly")
    return NoiseModel(Kind.TABULATED_CORRELATION, {"omega_c": omega_c},
                      Stationarity.STATIONARY,
                      table=(tau_t, tuple(float(x) for x in corr)))


def one_over_f(alpha: float = 1.0, omega_ir: float = 1e-3,
               omega_c: float = 1.0) -> NoiseModel:
    """Band-limited 1/f spectrum, S = alpha wc^2/|w| on [w_ir, wc].

    Convenience model (infrared cutoff is not part of the reference setting).
    """
    if omega_ir >= omega_c:
        raise InvalidParameter("omega_ir must lie below omega_c")
    return NoiseModel(Kind.ONE_OVER_F,
                      {"alpha": alpha, "omega_ir": omega_ir, "omega_c": omega_c},
                      Stationarity.STATIONARY)


# --- correlation and spectrum ---------------------------------------------------

def spectrum(model: NoiseModel, omega: float) -> float:
    """Power spectral density S(omega).  Raises for non-stationary models."""
    p = model.params
    w = abs(float(omega))
    if model.kind is Kind.WHITE:
        return 2.0 * p["chi0"] * p["omega_c"]
    if model.kind is Kind.ORNSTEIN_UHLENBECK:
        wc = p["omega_c"]
        return 2.0 * p["sigma2"] * wc / (wc * wc + w * w)
    if model.kind is Kind.GAUSSIAN_CUTOFF_SPECTRUM:
        wc = p["omega_c"]
        return p["alpha"] * w ** p["s"] * wc ** (1.0 - p["s"]) * math.exp(-(w / wc) ** 2)
    if model.kind is Kind.ONE_OVER_F:
        if p["omega_ir"] <= w <= p["omega_c"]:
            return p["alpha"] * p["omega_c"] ** 2 / w
        return 0.0
    raise SpectrumUndefined(f"no spectrum for kind {model.kind.value}")


def _has_spectrum(model: NoiseModel) -> bool:
    return model.kind in (Kind.WHITE, Kind.ORNSTEIN_UHLENBECK,
                          Kind.GAUSSIAN_CUTOFF_SPECTRUM, Kind.ONE_OVER_F)


def correlation(model: NoiseModel, t1: float, t2: float) -> float:
    """Two-point correlation C(t1, t2).

    For stationary models this depends on |t2 - t1| only.  White noise has a
    delta correlation and is rejected here (its decay functions use closed
    forms instead).
    """
    p = model.params
    tau = abs(t2 - t1)
    if model.kind is Kind.ORNSTEIN_UHLENBECK:
        return p["sigma2"] * math.exp(-p["omega_c"] * tau)
    if model.kind is Kind.BROWNIAN:
        return 2.0 * p["chi0"] * p["omega_c"] ** 3 * min(t1, t2)
    if model.kind is Kind.TABULATED_CORRELATION:
        taus, vals = model.table
        if tau > taus[-1] * (1 + 1e-12):
            raise InvalidParameter(
                f"tau={tau} beyond tabulated range [0, {taus[-1]}]")
        return float(np.interp(tau, taus, vals))
    if model.kind is Kind.INTEGRATED_STATIONARY:
        # C(t1, t2) = Int_0^t1 Int_0^t2 C_eta(u - v) du dv
        inner = model.eta
        val, _ = integrate.dblquad(
            lambda v, u: correlation(inner, u, v), 0.0, t1,
            lambda _: 0.0, lambda _: t2, epsabs=_QUAD_ABS_TOL)
        return val
    if model.kind in (Kind.GAUSSIAN_CUTOFF_SPECTRUM, Kind.ONE_OVER_F):
        # cosine transform of the spectrum
        return _correlation_from_spectrum(model, tau)
    raise InvalidParameter(f"no pointwise correlation for kind {model.kind.value}")


def _spectrum_support(model: NoiseModel) -> float:
    """Frequency beyond which the spectrum is negligible."""
    p = model.params
    if model.kind is Kind.GAUSSIAN_CUTOFF_SPECTRUM:
        # alpha w^s e^{-(w/wc)^2} < 1e-16 * peak
        return p["omega_c"] * (7.0 + math.sqrt(max(p["s"], 0.0)))
    if model.kind is Kind.ORNSTEIN_UHLENBECK:
        return 1e4 * p["omega_c"]
    if model.kind is Kind.ONE_OVER_F:
        return p["omega_c"]
    if model.kind is Kind.WHITE:
        return math.inf
    raise SpectrumUndefined(f"no spectrum for kind {model.kind.value}")


def _correlation_from_spectrum(model: NoiseModel, tau: float) -> float:
    wmax = _spectrum_support(model)
    val, _ = integrate.quad(
        lambda w: spectrum(model, w) * math.cos(w * tau) / math.pi,
        0.0, wmax, epsabs=_QUAD_ABS_TOL, limit=500)
    return val


# --- filter functions ------------------------------------------------------------

def first_order_filter(t: float, omega: float) -> float:
    """F(t, w) = |Int_0^t e^{i w s} ds|^2 = 4 sin^2(w t / 2)/w^2  ->  t^2 as w -> 0."""
    x = omega * t / 2.0
    if abs(x) < 1e-6:
        return t * t * (1.0 - x * x / 3.0)
    return (2.0 * math.sin(x) / omega) ** 2


def second_order_filter(t: float, omega: float) -> float:
    """|1 - e^{i w t} + i w t|^2 / w^4  ->  t^4/4 as w -> 0."""
    th = omega * t
    if abs(th) < 1e-4:
        # (1-cos)^2 + (th-sin)^2 = th^4/4 - th^6/24 + O(th^8), divided by w^4
        return t ** 4 * (0.25 - th * th / 24.0)
    num = (1.0 - math.cos(th)) ** 2 + (th - math.sin(th)) ** 2
    return num / omega ** 4


# --- decay functions -------------------------------------------------------------

def chi_time_domain(model: NoiseModel, t: float) -> float:
    """chi(t) = Int_0^t Int_0^t C(s, s') ds ds', closed form when available."""
    if t < 0:
        raise InvalidParameter(f"time must be nonnegative, got {t}")
    if t == 0.0:
        return 0.0
    p = model.params
    if model.kind is Kind.WHITE:
        return p["chi0"] * p["omega_c"] * t
    if model.kind is Kind.ORNSTEIN_UHLENBECK:
        wc = p["omega_c"]
        return 2.0 * p["sigma2"] / wc ** 2 * (wc * t - 1.0 + math.exp(-wc * t))
    if model.kind is Kind.BROWNIAN:
        return (2.0 / 3.0) * p["chi0"] * (p["omega_c"] * t) ** 3
    if model.kind is Kind.INTEGRATED_STATIONARY:
        return chi_integrated_process(model.eta, t)
    if model.stationarity is Stationarity.STATIONARY:
        # chi = 2 Int_0^t (t - tau) C(tau) dtau
        val, err = integrate.quad(
            lambda tau: 2.0 * (t - tau) * correlation(model, 0.0, tau),
            0.0, t, epsabs=_QUAD_ABS_TOL, limit=500)
        if not math.isfinite(val) or err > max(1e-8, 1e-6 * abs(val)):
            raise NonIntegrableCorrelation(
                f"time-domain quadrature failed for {model.kind.value}")
        return _check_nonnegative(val)
    # generic non-stationary double integral
    val, err = integrate.dblquad(
        lambda s2, s1: correlation(model, s1, s2), 0.0, t,
        lambda _: 0.0, lambda _: t, epsabs=_QUAD_ABS_TOL)
    if not math.isfinite(val):
        raise NonIntegrableCorrelation(
            f"2-D quadrature failed for {model.kind.value}")
    return _check_nonnegative(val)


def _check_nonnegative(val: float, tol: float = 1e-9) -> float:
    if val < -tol:
        raise NegativeResult(f"decay function evaluated to {val}")
    return max(val, 0.0)


def _oscillatory_spectrum_integral(weight: Callable[[float], float], t: float,
                                   wmax: float) -> float:
    """Integrate weight(w)*(oscillatory filter) by summing over filter periods."""
    period = 2.0 * math.pi / t
    total = 0.0
    lo = 0.0
    k = 0
    while lo < wmax:
        hi = min(lo + period, wmax)
        chunk, _ = integrate.quad(weight, lo, hi, epsabs=_QUAD_ABS_TOL, limit=200)
        total += chunk
        k += 1
        if k > 4 and abs(chunk) < 1e-15 * max(abs(total), 1.0):
            break
        if k > 20000:
            raise NonIntegrableCorrelation("oscillatory quadrature did not converge")
        lo = hi
    return total


def chi_spectrum_domain(model: NoiseModel, t: float) -> float:
    """chi(t) = (1/2 pi) Int_{-inf}^{inf} S(w) F(t, w) dw for stationary models."""
    if t < 0:
        raise InvalidParameter(f"time must be nonnegative, got {t}")
    if not _has_spectrum(model):
        raise SpectrumUndefined(
            f"spectrum-domain decay undefined for kind {model.kind.value}")
    if t == 0.0:
        return 0.0
    if model.kind is Kind.WHITE:
        # flat spectrum: (1/2 pi) Int S F dw = S * t / 2 = chi0 wc t, exactly
        return model.params["chi0"] * model.params["omega_c"] * t
    wmax = _spectrum_support(model)
    val = _oscillatory_spectrum_integral(
        lambda w: spectrum(model, w) * first_order_filter(t, w) / math.pi,
        t, wmax)
    return _check_nonnegative(val)


def chi_integrated_process(eta_model: NoiseModel, t: float) -> float:
    """Decay of the integrated process xi = Int eta, via the second-order filter.

    chi(t) = (1/2 pi) Int S_eta(w) |1 - e^{i w t} + i w t|^2 / w^4 dw.
    """
    if t < 0:
        raise InvalidParameter(f"time must be nonnegative, got {t}")
    if not _has_spectrum(eta_model):
        raise SpectrumUndefined("inner process must expose a spectrum")
    if t == 0.0:
        return 0.0
    if eta_model.kind is Kind.WHITE:
        # flat S_eta = 2 chi0 wc reproduces the cubic (Brownian) law exactly
        p = eta_model.params
        return (2.0 / 3.0) * p["chi0"] * p["omega_c"] * t ** 3
    wmax = _spectrum_support(eta_model)
    # second-order filter decays ~ t^2/w^2 at large w; extend support accordingly
    wmax = max(wmax, 200.0 / t)
    val = _oscillatory_spectrum_integral(
        lambda w: spectrum(eta_model, w) * second_order_filter(t, w) / math.pi,
        t, wmax)
    return _check_nonnegative(val)


def chi(model: NoiseModel, t: float) -> float:
    """Decay function by the preferred (closed-form first) route."""
    if model.kind is Kind.INTEGRATED_STATIONARY:
        return chi_integrated_process(model.eta, t)
    return chi_time_domain(model, t)


# --- spectral moments --------------------------------------------------------------

def spectral_moment(model: NoiseModel, n: int) -> float:
    """moment(n) = (1/4 pi) Int_{-inf}^{inf} S(w) w^{2n} dw."""
    if n < 0:
        raise InvalidParameter(f"moment order must be nonnegative, got {n}")
    p = model.params
    if model.kind is Kind.GAUSSIAN_CUTOFF_SPECTRUM:
        a_const = p["alpha"] * p["omega_c"] ** 2 / (4.0 * math.pi)
        g = (p["s"] + 1.0) / 2.0
        return a_const * gamma_fn(n + g) * p["omega_c"] ** (2 * n)
    if model.kind is Kind.ORNSTEIN_UHLENBECK:
        if n == 0:
            return p["sigma2"] / 2.0
        raise DivergentMoment(
            f"Ornstein-Uhlenbeck spectrum has no moment of order {2 * n}")
    if model.kind is Kind.WHITE:
        raise DivergentMoment("flat spectrum has no finite moments")
    if model.kind is Kind.ONE_OVER_F:
        val, _ = integrate.quad(
            lambda w: spectrum(model, w) * w ** (2 * n) / (2.0 * math.pi),
            p["omega_ir"], p["omega_c"], epsabs=_QUAD_ABS_TOL, limit=200)
        return val
    raise SpectrumUndefined(f"no spectrum for kind {model.kind.value}")


def moment_series(model: NoiseModel, order: int) -> list[float]:
    """Moments 0..order; raises DivergentMoment if any is missing."""
    return [spectral_moment(model, k) for k in range(order + 1)]


# --- short-time law ------------------------------------------------------------------

def fit_short_time_law(model: NoiseModel, t_grid: Sequence[float] | None = None,
                       residual_tol: float = 1e-2) -> DecayLaw:
    """Log-log least-squares fit of chi(t) inside the window wc*t in [1e-4, 1e-2]."""
    wc = model.omega_c
    if t_grid is None:
        t_grid = np.geomspace(1e-4 / wc, 1e-2 / wc, 9)
    ts = np.asarray(t_grid, dtype=float)
    if np.any(ts * wc < 1e-4 * (1 - 1e-9)) or np.any(ts * wc > 1e-2 * (1 + 1e-9)):
        raise InvalidParameter("t grid must lie inside omega_c*t in [1e-4, 1e-2]")
    chis = np.array([chi(model, t) for t in ts])
    if np.any(chis <= 0):
        raise FitAmbiguous("decay function not strictly positive on the grid")
    x = np.log(wc * ts)
    y = np.log(chis)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    n = int(round(slope))
    if abs(slope - n) > 0.1 or n < 1:
        raise FitAmbiguous(f"fitted exponent {slope:.4f} is not near an integer >= 1")
    if resid > residual_tol:
        raise FitAmbiguous(f"fit residual {resid:.2e} exceeds threshold")
    chi0 = float(np.exp(np.mean(y - n * x)))
    return DecayLaw(n=n, chi0=chi0, omega_c=wc)


def short_time_law(model: NoiseModel) -> DecayLaw:
    """Analytic short-time law when known, fitted otherwise."""
    p = model.params
    if model.kind is Kind.WHITE:
        return DecayLaw(1, p["chi0"], p["omega_c"])
    if model.kind is Kind.ORNSTEIN_UHLENBECK:
        # chi ~ C(0) t^2 = sigma2 t^2
        return DecayLaw(2, p["sigma2"] / p["omega_c"] ** 2, p["omega_c"])
    if model.kind is Kind.BROWNIAN:
        return DecayLaw(3, 2.0 * p["chi0"] / 3.0, p["omega_c"])
    if model.kind is Kind.GAUSSIAN_CUTOFF_SPECTRUM:
        c0 = 2.0 * spectral_moment(model, 0)  # C(0)
        return DecayLaw(2, c0 / p["omega_c"] ** 2, p["omega_c"])
    return fit_short_time_law(model)


# --- serialization -------------------------------------------------------------------

def model_to_json(model: NoiseModel) -> str:
    doc: dict = {
        "kind": model.kind.value,
        "params": dict(model.params),
        "stationarity": model.stationarity.value,
    }
    if model.eta is not None:
        doc["eta"] = json.loads(model_to_json(model.eta))
    if model.table is not None:
        doc["table"] = {"tau": list(model.table[0]), "C": list(model.table[1])}
    return json.dumps(doc, sort_keys=True)


def _model_from_doc(doc: Mapping) -> NoiseModel:
    eta = _model_from_doc(doc["eta"]) if "eta" in doc else None
    table = None
    if "table" in doc:
        table = (tuple(doc["table"]["tau"]), tuple(doc["table"]["C"]))
    return NoiseModel(Kind(doc["kind"]), dict(doc["params"]),
                      Stationarity(doc["stationarity"]), eta=eta, table=table)


def model_from_json(text: str) -> NoiseModel:
    return _model_from_doc(json.loads(text))


def tabulated_from_csv(path: str, omega_c: float = 1.0) -> NoiseModel:
    """Load a two-column (tau, C) CSV into a tabulated-correlation model."""
    data = np.loadtxt(path, delimiter=",", comments="#")
    if data.ndim != 2 or data.shape[1] != 2:
        raise InvalidParameter("expected a two-column (tau, C) CSV")
    return tabulated(data[:, 0], data[:, 1], omega_c=omega_c)
