"""Reservoir kernels, Langevin-force correlations and thermal spectral factors.

The finite-cutoff kernels (``delta_tilde``, ``F_r``, ``F_i``) describe the
reservoir at a finite cutoff Omega and are provided for study and for the
sign-function audit.  Spectra and the simulator use the infinite-cutoff
forms through ``thermal_factor`` and ``Q_spectrum``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy import integrate

from .params import CONSTANTS, INFINITE_CUTOFF, PhysicalParams

__all__ = [
    "KernelConfig",
    "Model",
    "NoiseModel",
    "delta_tilde",
    "F_r",
    "F_i",
    "xcothx",
    "xcothx_minus_one",
    "thermal_factor",
    "thermal_excess",
    "thermal_factor_difference",
    "Q_spectrum",
]


@dataclass(frozen=True)
class KernelConfig:
    Omega_cutoff: float = INFINITE_CUTOFF
    quad_tol: float = 1e-10

    def __post_init__(self):
        if not (self.Omega_cutoff > 0):
            raise ValueError("Omega_cutoff must be positive (or inf)")
        if not (0 < self.quad_tol <= 1e-3):
            raise ValueError("quad_tol must lie in (0, 1e-3]")

    def finite_cutoff(self) -> float:
        if math.isinf(self.Omega_cutoff):
            raise ValueError(
                "kernel needs a finite cutoff; the infinite-cutoff limit is a distribution"
            )
        return self.Omega_cutoff


class Model(str, Enum):
    EXACT = "exact"
    DIOSI = "diosi"
    CLASSICAL = "classical"


@dataclass(frozen=True)
class NoiseModel:
    """Thermal-factor model for the mirror bath.

    ``eta`` and ``m`` only enter the Diosi variant.
    """

    kind: Model
    T: float
    eta: float = 0.0
    m: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Model(self.kind))
        if self.T < 0 or math.isnan(self.T):
            raise ValueError("temperature must be non-negative")
        if self.kind is Model.DIOSI and self.T == 0:
            raise ValueError("Diósi correction undefined at T=0")

    @classmethod
    def exact(cls, T: float) -> "NoiseModel":
        return cls(Model.EXACT, T)

    @classmethod
    def diosi(cls, T: float, eta: float, m: float) -> "NoiseModel":
        return cls(Model.DIOSI, T, eta, m)

    @classmethod
    def classical(cls, T: float) -> "NoiseModel":
        return cls(Model.CLASSICAL, T)

    @classmethod
    def from_params(cls, kind, params: PhysicalParams) -> "NoiseModel":
        return cls(Model(kind), params.T, params.eta, params.m)

    @property
    def damping_rate(self) -> float:
        return self.eta / self.m


# ---------------------------------------------------------------- finite cutoff


def delta_tilde(t, cfg: KernelConfig):
    """(1/pi) * integral_0^Omega cos(w t) dw = sin(Omega t)/(pi t)."""
    Omega = cfg.finite_cutoff()
    t = np.asarray(t, dtype=float)
    # np.sinc(x) = sin(pi x)/(pi x), exact 1 at x=0
    out = (Omega / np.pi) * np.sinc(Omega * t / np.pi)
    return out[()] if out.ndim == 0 else out


def _f_i_series(x: float) -> float:
    # sum_k (-1)^k x^(2k+1) / ((2k+1)! (2k+3)), |x| small
    total, term, k = 0.0, x, 0
    while True:
        contrib = term / (2 * k + 3)
        total += contrib
        if abs(contrib) <= 1e-18 * abs(total):
            return total
        k += 1
        term *= -x * x / ((2 * k) * (2 * k + 1))


def _f_r_zero_temperature_series(x: float) -> float:
    # sum_k (-1)^k x^(2k) / ((2k)! (2k+2))
    total, term, k = 0.0, 1.0, 0
    while True:
        contrib = term / (2 * k + 2)
        total += contrib
        if abs(contrib) <= 1e-18 * abs(total):
            return total
        k += 1
        term *= -x * x / ((2 * k - 1) * (2 * k))


def F_i(tau: float, cfg: KernelConfig) -> float:
    """-integral_0^Omega w sin(w tau) dw, closed form.

    Equals pi * d/dtau delta_tilde(tau).
    """
    Omega = cfg.finite_cutoff()
    x = Omega * tau
    if abs(x) < 0.5:
        return -Omega**2 * _f_i_series(x)
    return Omega * math.cos(x) / tau - math.sin(x) / tau**2


def _f_r_zero_temperature(tau: float, Omega: float) -> float:
    x = Omega * tau
    if abs(x) < 0.5:
        return Omega**2 * _f_r_zero_temperature_series(x)
    return Omega * math.sin(x) / tau + (math.cos(x) - 1.0) / tau**2


def F_r(tau: float, T: float, cfg: KernelConfig) -> float:
    """integral_0^Omega w cos(w tau) coth(hbar w / 2kT) dw.

    Closed form at T=0; adaptive quadrature (QAWO for tau != 0) otherwise.
    The integrand tends to 2kT/hbar as w -> 0.
    """
    Omega = cfg.finite_cutoff()
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if T == 0:
        return _f_r_zero_temperature(tau, Omega)
    hbar, kB = CONSTANTS.hbar, CONSTANTS.kB
    scale = hbar / (2.0 * kB * T)

    def weight(w):
        return xcothx(scale * w) / scale

    opts = dict(epsabs=0.0, epsrel=cfg.quad_tol, limit=500)
    if tau == 0:
        val, _ = integrate.quad(weight, 0.0, Omega, **opts)
    else:
        val, _ = integrate.quad(weight, 0.0, Omega, weight="cos", wvar=abs(tau), **opts)
    return val


# ---------------------------------------------------------------- thermal factor

_SERIES_SWITCH = 1.0
_N_TERMS = 24


def _bernoulli_numbers(n_max: int) -> list[Fraction]:
    # Akiyama-Tanigawa, exact rationals; B_1 = +1/2 convention (unused here)
    a = [Fraction(0)] * (n_max + 1)
    out = []
    for m in range(n_max + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    return out


def _xcoth_coefficients(n_terms: int) -> np.ndarray:
    # x coth x = sum_n c_n x^(2n),  c_n = 2^(2n) B_2n / (2n)!
    B = _bernoulli_numbers(2 * n_terms)
    return np.array(
        [float(2 ** (2 * n) * B[2 * n] / math.factorial(2 * n)) for n in range(n_terms)]
    )


_XCOTH_COEFFS = _xcoth_coefficients(_N_TERMS)


def _series_tail(x2: np.ndarray, start: int) -> np.ndarray:
    # sum_{n >= start} c_n x^(2n), Horner in x^2
    acc = np.zeros_like(x2)
    for c in _XCOTH_COEFFS[:start - 1:-1]:
        acc = acc * x2 + c
    return acc * x2**start


def xcothx(x):
    """x*coth(x), even, with the removable singularity at 0 (value 1)."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x < 1e-4
    xs = x[small] ** 2
    out[small] = 1.0 + xs / 3.0 - xs * xs / 45.0 + 2.0 * xs**3 / 945.0
    xl = x[~small]
    with np.errstate(over="ignore"):
        out[~small] = xl * (1.0 + 2.0 / np.expm1(2.0 * xl))
    return out[()] if out.ndim == 0 else out


def xcothx_minus_one(x):
    """x*coth(x) - 1 without cancellation near x = 0."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x < _SERIES_SWITCH
    out[small] = _series_tail(x[small] ** 2, 1)
    out[~small] = xcothx(x[~small]) - 1.0
    return out[()] if out.ndim == 0 else out


def _xcothx_minus_quadratic(x):
    """1 + x^2/3 - x*coth(x), i.e. the quartic-and-higher remainder (>= 0)."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x < _SERIES_SWITCH
    out[small] = -_series_tail(x[small] ** 2, 2)
    xl = x[~small]
    out[~small] = 1.0 + xl**2 / 3.0 - xcothx(xl)
    return out


def _coth_large(x):
    # coth(x) for x >= 1e-4 (x may be inf)
    with np.errstate(over="ignore"):
        return 1.0 + 2.0 / np.expm1(2.0 * x)


def _exact_parts(w, T):
    """x = hbar|w|/2kT and the small-x mask; None when kT underflows to 0."""
    kT = CONSTANTS.kB * T
    if kT == 0.0:
        return kT, None, None
    with np.errstate(over="ignore"):
        x = CONSTANTS.hbar * np.abs(w) / (2.0 * kT)
    return kT, x, x < 1e-4


def thermal_factor(omega, model: NoiseModel):
    """Thermal spectral weight (J) multiplying eta in the force spectrum.

    exact     : hbar w coth(hbar w / 2kT)  (-> 2kT at w=0, hbar|w| at T=0)
    diosi     : 2kT + hbar^2 (w^2 + eta^2/m^2) / (6kT)
    classical : 2kT
    """
    hbar, kB = CONSTANTS.hbar, CONSTANTS.kB
    w = np.asarray(omega, dtype=float)
    kT = kB * model.T
    if model.kind is Model.EXACT:
        kT, x, small = _exact_parts(w, model.T)
        if x is None:
            out = hbar * np.abs(w)
        else:
            out = np.empty_like(x)
            out[small] = 2.0 * kT * xcothx(x[small])
            out[~small] = hbar * np.abs(w)[~small] * _coth_large(x[~small])
    elif model.kind is Model.DIOSI:
        out = 2.0 * kT + hbar**2 * (w**2 + model.damping_rate**2) / (6.0 * kT)
    else:
        out = np.full_like(w, 2.0 * kT)
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


def thermal_excess(omega, model: NoiseModel):
    """thermal_factor(omega) - 2kT, computed without cancellation."""
    hbar, kB = CONSTANTS.hbar, CONSTANTS.kB
    w = np.asarray(omega, dtype=float)
    kT = kB * model.T
    if model.kind is Model.EXACT:
        kT, x, _ = _exact_parts(w, model.T)
        if x is None:
            out = hbar * np.abs(w)
        else:
            out = np.empty_like(x)
            near = x < _SERIES_SWITCH
            out[near] = 2.0 * kT * xcothx_minus_one(x[near])
            far = ~near
            out[far] = hbar * np.abs(w)[far] * _coth_large(x[far]) - 2.0 * kT
    elif model.kind is Model.DIOSI:
        out = hbar**2 * (w**2 + model.damping_rate**2) / (6.0 * kT)
    else:
        out = np.zeros_like(w)
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


def thermal_factor_difference(omega, model_a: NoiseModel, model_b: NoiseModel):
    """thermal_factor(a) - thermal_factor(b) at matching temperature.

    The Diosi-minus-exact difference is O((hbar w)^4/(kT)^3) at high
    temperature and is evaluated from the coth series remainder directly.
    """
    if model_a.T != model_b.T:
        raise ValueError("models must share a temperature")
    kinds = (model_a.kind, model_b.kind)
    if kinds == (Model.DIOSI, Model.EXACT) or kinds == (Model.EXACT, Model.DIOSI):
        diosi = model_a if model_a.kind is Model.DIOSI else model_b
        hbar, kB = CONSTANTS.hbar, CONSTANTS.kB
        kT = kB * diosi.T
        w = np.asarray(omega, dtype=float)
        diff = 2.0 * kT * _xcothx_minus_quadratic(hbar * w / (2.0 * kT))
        diff = diff + hbar**2 * diosi.damping_rate**2 / (6.0 * kT)
        diff = diff if model_a is diosi else -diff
        return diff[()] if diff.ndim == 0 else diff
    return thermal_excess(omega, model_a) - thermal_excess(omega, model_b)


def Q_spectrum(omega, eta: float, model: NoiseModel):
    """Non-symmetrised density of the Langevin force, eta*hbar*w*[1 + coth].

    Returned without the 2*pi*delta(w + w') factor.  The even part is
    eta * thermal_factor(w); the odd part eta*hbar*w comes from the
    commutator of the force and is model independent.
    """
    if eta < 0:
        raise ValueError("eta must be non-negative")
    w = np.asarray(omega, dtype=float)
    out = eta * (CONSTANTS.hbar * w + thermal_factor(w, model))
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out
