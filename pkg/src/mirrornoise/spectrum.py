"""Closed-form homodyne phase-noise spectrum at zero effective detuning.

Normalised to the shot-noise level:

    S_Y(w) = 1
           + 4 (hbar wc^2 gc I / (m L^2))^2 / [((gc/2)^2 + w^2) |D(w)|^2]
           + 4 (wc^2 eta gc I / (m^2 L^2)) Theta(w) / |D(w)|^2

with D(w) = (i w - gc/2)(wS^2 - w^2 - i eta w / m), I = B_st^2 and
Theta the thermal factor of the chosen noise model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import Model, NoiseModel, thermal_factor, thermal_factor_difference
from .params import CONSTANTS, PhysicalParams
from .steady_state import SteadyState

__all__ = [
    "NotResonantError",
    "SpectrumComponents",
    "SpectrumResult",
    "ModelComparison",
    "D_of_omega",
    "abs_D_squared",
    "spectrum_at",
    "make_grid",
    "spectrum_grid",
    "spectrum_on",
    "compare_models",
    "thermal_difference_spectrum",
    "thermal_peak",
    "fig2_grid",
]

# |Delta| / gamma_c above this is treated as off resonance
RESONANCE_TOL = 1e-9


class NotResonantError(ValueError):
    pass


@dataclass(frozen=True)
class SpectrumComponents:
    """Per-node spectrum components (dimensionless, shot noise = 1)."""

    shot: np.ndarray
    radiation_pressure: np.ndarray
    thermal: np.ndarray
    total: np.ndarray


@dataclass(frozen=True)
class SpectrumResult:
    omega_grid: np.ndarray
    components: SpectrumComponents
    model: NoiseModel
    operating_point: SteadyState

    def columns(self) -> dict[str, np.ndarray]:
        c = self.components
        return {
            "omega": self.omega_grid,
            "shot": c.shot,
            "radiation_pressure": c.radiation_pressure,
            "thermal": c.thermal,
            "total": c.total,
        }


@dataclass(frozen=True)
class ModelComparison:
    omega: np.ndarray
    S_exact: np.ndarray
    S_diosi: np.ndarray
    S_classical: np.ndarray
    rel_diosi: np.ndarray
    rel_classical: np.ndarray

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "omega": self.omega,
            "S_exact": self.S_exact,
            "S_diosi": self.S_diosi,
            "S_classical": self.S_classical,
            "rel_diosi": self.rel_diosi,
            "rel_classical": self.rel_classical,
        }


def D_of_omega(omega, params: PhysicalParams):
    w = np.asarray(omega, dtype=float)
    out = (1j * w - 0.5 * params.gamma_c) * (
        params.omega_S**2 - w**2 - 1j * params.damping_rate * w
    )
    return out[()] if out.ndim == 0 else out


def abs_D_squared(omega, params: PhysicalParams):
    """|D(w)|^2 as a product of manifestly even real factors."""
    w = np.asarray(omega, dtype=float)
    w2 = w * w
    mech = (params.omega_S**2 - w2) ** 2 + (params.damping_rate * w) ** 2
    return (0.25 * params.gamma_c**2 + w2) * mech


def _check_resonant(params: PhysicalParams, op: SteadyState) -> None:
    if abs(op.Delta) > RESONANCE_TOL * params.gamma_c:
        raise NotResonantError(
            f"spectrum formula derived at Delta=0; operating point has Delta={op.Delta:g} rad/s"
        )


def _coefficients(params: PhysicalParams, op: SteadyState) -> tuple[float, float]:
    """Radiation-pressure and thermal prefactors.

    Grouped so intermediate products stay within about 1e+-60 even for
    optical frequencies and |B_st|^4 ~ 1e17.
    """
    I = op.B_st**2
    wc_L = params.omega_c / params.L
    rp_amp = (CONSTANTS.hbar / params.m) * wc_L**2 * params.gamma_c * I
    rp = 4.0 * rp_amp * rp_amp
    th = 4.0 * wc_L**2 * (params.eta / params.m) * (params.gamma_c / params.m) * I
    return rp, th


def spectrum_at(omega, params: PhysicalParams, op_point: SteadyState, model: NoiseModel) -> SpectrumComponents:
    """Spectrum components at one frequency or an array of frequencies."""
    _check_resonant(params, op_point)
    w = np.asarray(omega, dtype=float)
    rp_coef, th_coef = _coefficients(params, op_point)
    d2 = abs_D_squared(w, params)
    cav = 0.25 * params.gamma_c**2 + w * w
    with np.errstate(divide="ignore", invalid="ignore"):
        rp = rp_coef / (cav * d2)
        th = th_coef * thermal_factor(w, model) / d2
    if op_point.B_st == 0:
        rp = np.zeros_like(w)
        th = np.zeros_like(w)
    shot = np.ones_like(w)
    return SpectrumComponents(shot=shot, radiation_pressure=rp, thermal=th, total=shot + rp + th)


def make_grid(omega_min: float, omega_max: float, n: int, spacing: str = "lin") -> np.ndarray:
    if n < 2:
        raise ValueError("grid needs n >= 2")
    if not omega_max > omega_min:
        raise ValueError("grid needs omega_max > omega_min")
    if spacing == "lin":
        return np.linspace(omega_min, omega_max, n)
    if spacing == "log":
        if omega_min <= 0:
            raise ValueError("log grid needs omega_min > 0")
        return np.geomspace(omega_min, omega_max, n)
    raise ValueError(f"unknown grid spacing {spacing!r}")


def spectrum_grid(
    params: PhysicalParams,
    op_point: SteadyState,
    model: NoiseModel,
    omega_min: float,
    omega_max: float,
    n: int,
    spacing: str = "lin",
) -> SpectrumResult:
    grid = make_grid(omega_min, omega_max, n, spacing)
    return spectrum_on(grid, params, op_point, model)


def spectrum_on(grid, params, op_point, model) -> SpectrumResult:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("frequency grid must be strictly increasing with >= 2 nodes")
    comps = spectrum_at(grid, params, op_point, model)
    return SpectrumResult(omega_grid=grid, components=comps, model=model, operating_point=op_point)


def fig2_grid(params: PhysicalParams, n_core: int = 2001, n_tail: int = 200) -> np.ndarray:
    """Default plotting grid: log tails around a dense linear core.

    The core spans [0.5, 1.5] * omega_S; the tails reach down to
    omega_S/100 and up to 100 * max(omega_S, gamma_c).
    """
    wS = params.omega_S
    lo = np.geomspace(wS / 100.0, 0.5 * wS, n_tail, endpoint=False)
    core = np.linspace(0.5 * wS, 1.5 * wS, n_core)
    hi = np.geomspace(1.5 * wS, 100.0 * max(wS, params.gamma_c), n_tail + 1)[1:]
    return np.concatenate([lo, core, hi])


def compare_models(params: PhysicalParams, op_point: SteadyState, grid) -> ModelComparison:
    """Exact, Diosi and classical spectra with their relative differences.

    Differences are built from the thermal-factor differences rather than
    by subtracting totals, so they stay meaningful far below 1e-16.
    """
    if not params.T > 0:
        raise ValueError("model comparison needs T > 0")
    _check_resonant(params, op_point)
    w = np.asarray(grid, dtype=float)
    exact = NoiseModel.from_params(Model.EXACT, params)
    diosi = NoiseModel.from_params(Model.DIOSI, params)
    classical = NoiseModel.from_params(Model.CLASSICAL, params)
    s_exact = spectrum_at(w, params, op_point, exact).total
    s_diosi = spectrum_at(w, params, op_point, diosi).total
    s_classical = spectrum_at(w, params, op_point, classical).total
    _, th_coef = _coefficients(params, op_point)
    d2 = abs_D_squared(w, params)
    scale = th_coef / d2 / s_exact
    rel_d = np.abs(thermal_factor_difference(w, diosi, exact)) * scale
    rel_c = np.abs(thermal_factor_difference(w, exact, classical)) * scale
    return ModelComparison(w, s_exact, s_diosi, s_classical, rel_d, rel_c)


def thermal_difference_spectrum(omega, params, op_point, model_a, model_b):
    """S_a - S_b for two noise models (only the thermal term differs)."""
    _check_resonant(params, op_point)
    _, th_coef = _coefficients(params, op_point)
    return th_coef * thermal_factor_difference(omega, model_a, model_b) / abs_D_squared(omega, params)


def thermal_peak(result: SpectrumResult) -> float:
    """Frequency of the largest thermal component on the result grid."""
    return float(result.omega_grid[int(np.argmax(result.components.thermal))])
