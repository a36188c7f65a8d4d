"""Physical constants, input parameters and derived quantities.

All frequencies are angular (rad/s).  The reference parameter set quotes
its frequencies in "Hz" but every formula uses them as angular
frequencies, so they are taken verbatim as rad/s with no 2*pi factors.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

from scipy import constants as _codata

__all__ = [
    "Constants",
    "CONSTANTS",
    "HBAR",
    "KB",
    "C_LIGHT",
    "INFINITE_CUTOFF",
    "PhysicalParams",
    "DerivedParams",
    "ValidationReport",
    "ParameterError",
    "validate",
    "derive",
    "fig2_params",
]


@dataclass(frozen=True)
class Constants:
    hbar: float = _codata.hbar
    kB: float = _codata.k


CONSTANTS = Constants()
HBAR = CONSTANTS.hbar
KB = CONSTANTS.kB
C_LIGHT = _codata.c

#: Sentinel for the coarse-grained (Omega -> infinity) reservoir limit.
INFINITE_CUTOFF = math.inf

# omega_S above this fraction of the free spectral range c/2L breaks the
# single-mode (adiabatic) Hamiltonian.
ADIABATIC_FRACTION = 0.01
# gamma_c must exceed omega_S and eta/m by at least this factor for the
# phase quadrature to follow the mirror adiabatically.
BROADBAND_RATIO = 3.0


class ParameterError(ValueError):
    """Raised when a parameter set violates a hard invariant."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("; ".join(report.errors))


@dataclass(frozen=True)
class PhysicalParams:
    """Primitive inputs for mirror, cavity, drive and bath (SI units).

    ``eta`` is the friction coefficient in kg/s; the mechanical damping
    rate is ``eta / m``.
    """

    m: float
    omega_S: float
    eta: float
    omega_c: float
    omega_0: float
    gamma_c: float
    L: float
    P: float
    T: float
    Omega_cutoff: float = INFINITE_CUTOFF

    @property
    def damping_rate(self) -> float:
        return self.eta / self.m

    @property
    def detuning0(self) -> float:
        """Bare detuning omega_c - omega_0."""
        return self.omega_c - self.omega_0

    def replace(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class DerivedParams:
    E: float  # drive amplitude, sqrt(photons/s)
    g: float  # static radiation-pressure frequency shift per photon (rad/s)
    Q_mech: float


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_if_invalid(self) -> None:
        if self.errors:
            raise ParameterError(self)


_POSITIVE = {
    "m": "mass",
    "omega_S": "mechanical frequency",
    "gamma_c": "cavity decay rate",
    "L": "cavity length",
    "omega_c": "cavity frequency",
    "omega_0": "drive frequency",
}
_NONNEGATIVE = {"eta": "friction coefficient", "P": "input power", "T": "temperature"}


def validate(params: PhysicalParams) -> ValidationReport:
    """Check hard invariants (errors) and regime conditions (warnings).

    Never raises; callers decide what to do with the report.
    """
    report = ValidationReport()
    for name, label in _POSITIVE.items():
        value = getattr(params, name)
        if not math.isfinite(value):
            report.errors.append(f"{label} must be finite ({name}={value!r})")
        elif value <= 0:
            report.errors.append(f"{label} must be positive ({name}={value!r})")
    for name, label in _NONNEGATIVE.items():
        value = getattr(params, name)
        if not math.isfinite(value):
            report.errors.append(f"{label} must be finite ({name}={value!r})")
        elif value < 0:
            report.errors.append(f"{label} must be non-negative ({name}={value!r})")
    cutoff = params.Omega_cutoff
    if math.isnan(cutoff) or cutoff <= 0:
        report.errors.append(f"reservoir cutoff must be positive or inf (Omega_cutoff={cutoff!r})")
    if report.errors:
        return report

    fsr = C_LIGHT / (2.0 * params.L)
    if params.omega_S > ADIABATIC_FRACTION * fsr:
        report.warnings.append(
            f"adiabatic condition violated: omega_S={params.omega_S:g} is not << c/2L={fsr:g}"
        )
    slowest = max(params.omega_S, params.damping_rate)
    if params.gamma_c < BROADBAND_RATIO * slowest:
        report.warnings.append(
            "broadband-cavity condition violated: gamma_c="
            f"{params.gamma_c:g} is not >> max(omega_S, eta/m)={slowest:g}"
        )
    return report


def derive(params: PhysicalParams) -> DerivedParams:
    hbar = CONSTANTS.hbar
    E = math.sqrt(params.P * params.gamma_c / (hbar * params.omega_0))
    g = hbar * params.omega_c**2 / (params.m * params.omega_S**2 * params.L**2)
    Q = params.m * params.omega_S / params.eta if params.eta > 0 else math.inf
    return DerivedParams(E=E, g=g, Q_mech=Q)


def fig2_params() -> PhysicalParams:
    """The reference parameter set (drive frequency set equal to omega_c)."""
    return PhysicalParams(
        m=1e-5,
        omega_S=1.3e5,
        eta=3e-7,
        omega_c=1.8e15,
        omega_0=1.8e15,
        gamma_c=4.7e5,
        L=1e-2,
        P=1e-5,
        T=4.2,
    )
