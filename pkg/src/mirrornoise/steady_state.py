"""Semiclassical operating point of the driven cavity with a movable mirror.

The steady intracavity intensity I = |B_st|^2 solves the real cubic

    I * [(gamma_c/2)^2 + (Delta0 - g*I)^2] = E^2,

with Delta0 = omega_c - omega_0 and g = hbar*omega_c^2/(m*omega_S^2*L^2).
Internally the cubic is solved in the frequency-valued variable u = g*I,
which keeps every coefficient in comfortable double-precision range.

Stability is assigned with the slope criterion d(E^2)/dI > 0 => stable.
The source derivation asserts bistability but states no stability rule;
the slope test is the usual one for dispersive optical bistability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import CONSTANTS, PhysicalParams, derive, validate

__all__ = [
    "SteadyState",
    "SweepRow",
    "real_cubic_roots",
    "intensity_cubic",
    "cubic_residual",
    "solve_all",
    "solve_resonant",
    "lock_drive_frequency",
    "sweep_bistability",
]

STABLE = "stable"
UNSTABLE = "unstable"
MARGINAL = "marginal"

# |discriminant| below this fraction of its natural scale is a fold point
_FOLD_TOL = 1e-12


@dataclass(frozen=True)
class SteadyState:
    """Operating point with the field phase rotated so that B_st >= 0."""

    B_st: float
    q_st: float
    Delta: float
    stability: str
    omega_0: float

    @property
    def intensity(self) -> float:
        return self.B_st**2

    @property
    def stable(self) -> bool:
        return self.stability == STABLE


@dataclass(frozen=True)
class SweepRow:
    Delta0: float
    intensities: tuple[float, ...]
    stabilities: tuple[str, ...]

    @property
    def n_roots(self) -> int:
        return len(self.intensities)


def real_cubic_roots(a: float, b: float, c: float, d: float) -> tuple[np.ndarray, bool]:
    """Real roots of a*x^3 + b*x^2 + c*x + d, ascending.

    Returns ``(roots, degenerate)`` where ``degenerate`` flags a repeated
    root (discriminant zero to within rounding); in that case the repeated
    root appears once.  Uses the trigonometric form when all three roots
    are real and Cardano's formula otherwise.
    """
    if a == 0:
        raise ValueError("leading coefficient must be nonzero")
    b, c, d = b / a, c / a, d / a
    shift = b / 3.0
    # depressed cubic t^3 + p t + q with x = t - b/3
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = -(4.0 * p**3 + 27.0 * q**2)
    scale = 4.0 * abs(p) ** 3 + 27.0 * q**2
    if scale == 0.0:
        return np.array([-shift]), True
    if abs(disc) <= _FOLD_TOL * scale:
        # double root at t = 3q/p, simple root at t = -3q/(2p)
        simple = -3.0 * q / (2.0 * p) - shift
        double = 3.0 * q / p - shift
        return np.sort(np.array([simple, double])), True
    if disc > 0:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * r)
        phi = math.acos(max(-1.0, min(1.0, arg)))
        t = r * np.cos((phi - 2.0 * np.pi * np.arange(3)) / 3.0)
        return np.sort(t - shift), False
    s = math.sqrt(-disc / 108.0)
    t = np.cbrt(-q / 2.0 + s) + np.cbrt(-q / 2.0 - s)
    return np.array([t - shift]), False


def intensity_cubic(params: PhysicalParams) -> tuple[np.ndarray, float]:
    """Monic coefficients of the steady-state cubic in u = g*I, plus g.

    u^3 - 2*Delta0*u^2 + (h^2 + Delta0^2)*u - g*E^2 = 0 with h = gamma_c/2.
    """
    der = derive(params)
    h = 0.5 * params.gamma_c
    D0 = params.detuning0
    coeffs = np.array([1.0, -2.0 * D0, h * h + D0 * D0, -der.g * der.E**2])
    return coeffs, der.g


def cubic_residual(coeffs: np.ndarray, u: float) -> float:
    """Residual of the cubic at ``u`` relative to the sum of term magnitudes."""
    terms = coeffs * np.array([u**3, u**2, u, 1.0])
    scale = np.sum(np.abs(terms))
    return float(abs(np.sum(terms)) / scale) if scale > 0 else 0.0


def _polish(coeffs: np.ndarray, u: float) -> float:
    # Newton steps in the original (non-depressed) cubic
    a, b, c, d = coeffs
    for _ in range(3):
        f = ((a * u + b) * u + c) * u + d
        df = (3.0 * a * u + 2.0 * b) * u + c
        if df == 0.0:
            break
        step = f / df
        u_new = u - step
        if cubic_residual(coeffs, u_new) > cubic_residual(coeffs, u):
            break
        u = u_new
        if abs(step) <= 1e-16 * abs(u):
            break
    return u


def _slope(params: PhysicalParams, u: float) -> float:
    """d(g E^2)/du at u, i.e. g * d(E^2)/dI."""
    h = 0.5 * params.gamma_c
    D0 = params.detuning0
    return 3.0 * u * u - 4.0 * D0 * u + h * h + D0 * D0


def _make_state(params: PhysicalParams, u: float, g: float, stability: str) -> SteadyState:
    intensity = u / g
    q_st = CONSTANTS.hbar * params.omega_c * intensity / (params.m * params.omega_S**2 * params.L)
    return SteadyState(
        B_st=math.sqrt(max(intensity, 0.0)),
        q_st=q_st,
        Delta=params.detuning0 - u,
        stability=stability,
        omega_0=params.omega_0,
    )


def solve_all(params: PhysicalParams) -> list[SteadyState]:
    """All non-negative steady states, sorted by ascending intensity."""
    validate(params).raise_if_invalid()
    coeffs, g = intensity_cubic(params)
    if coeffs[3] == 0.0:
        return [_make_state(params, 0.0, g, STABLE)]
    roots, degenerate = real_cubic_roots(*coeffs)
    states = []
    h2 = (0.5 * params.gamma_c) ** 2
    for u in roots:
        u = _polish(coeffs, float(u))
        if u < 0:
            continue
        slope = _slope(params, u)
        if degenerate and abs(slope) <= 1e-6 * (h2 + params.detuning0**2 + 3 * u * u):
            stability = MARGINAL
        else:
            stability = STABLE if slope > 0 else UNSTABLE
        states.append(_make_state(params, u, g, stability))
    return states


def lock_drive_frequency(params: PhysicalParams, max_iter: int = 50) -> float:
    """Drive frequency omega_0 giving zero effective detuning.

    Solves omega_0 = omega_c - g*I(omega_0) with I = (2E/gamma_c)^2 by
    fixed-point iteration; E depends weakly on omega_0 through the photon
    energy, so convergence takes a couple of steps.
    """
    g = derive(params).g
    w0 = params.omega_c
    for _ in range(max_iter):
        E2 = params.P * params.gamma_c / (CONSTANTS.hbar * w0)
        w_new = params.omega_c - g * 4.0 * E2 / params.gamma_c**2
        if w_new == w0:
            break
        w0 = w_new
    if not w0 > 0:
        raise ValueError("no positive drive frequency locks the cavity on resonance")
    return w0


def solve_resonant(params: PhysicalParams) -> SteadyState:
    """Operating point with Delta = 0, reached by retuning omega_0.

    The returned state carries the locked drive frequency; ``B_st`` is
    exactly ``2E/gamma_c`` with E evaluated at that frequency.
    """
    validate(params).raise_if_invalid()
    w0 = lock_drive_frequency(params)
    locked = params.replace(omega_0=w0)
    der = derive(locked)
    B = 2.0 * der.E / params.gamma_c
    I = B * B
    q_st = CONSTANTS.hbar * params.omega_c * I / (params.m * params.omega_S**2 * params.L)
    return SteadyState(B_st=B, q_st=q_st, Delta=0.0, stability=STABLE, omega_0=w0)


def sweep_bistability(
    params: PhysicalParams, detuning_range: tuple[float, float], n_points: int
) -> list[SweepRow]:
    """Steady-state intensities along a monotone grid of bare detunings.

    Each row re-solves the cubic at omega_0 = omega_c - Delta0.  The
    recorded ``Delta0`` is the detuning actually realised in floating
    point, which at optical frequencies is quantised to ~0.25 rad/s.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    lo, hi = detuning_range
    rows = []
    for D0 in np.linspace(lo, hi, n_points):
        row_params = params.replace(omega_0=params.omega_c - float(D0))
        states = solve_all(row_params)
        rows.append(
            SweepRow(
                # omega_c - omega_0 after rounding at optical frequency scale
                Delta0=row_params.detuning0,
                intensities=tuple(s.intensity for s in states),
                stabilities=tuple(s.stability for s in states),
            )
        )
    return rows
