import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrornoise.params import (
    CONSTANTS,
    HBAR,
    ParameterError,
    PhysicalParams,
    derive,
    fig2_params,
    validate,
)


def test_constants_are_codata():
    assert CONSTANTS.hbar == pytest.approx(1.054571817e-34, rel=1e-12)
    assert CONSTANTS.kB == pytest.approx(1.380649e-23, rel=1e-12)
    with pytest.raises(AttributeError):
        CONSTANTS.hbar = 1.0


def test_reference_set_is_clean(fig2):
    report = validate(fig2)
    assert report.errors == []
    assert report.warnings == []
    assert report.ok


def test_zero_mass_is_an_error(fig2):
    report = validate(fig2.replace(m=0.0))
    assert not report.ok
    assert any("mass must be positive" in e for e in report.errors)
    with pytest.raises(ParameterError, match="mass must be positive"):
        report.raise_if_invalid()


@pytest.mark.parametrize("name", ["eta", "P", "T"])
def test_negative_nonnegatives_rejected(fig2, name):
    report = validate(fig2.replace(**{name: -1.0}))
    assert any(name in e for e in report.errors)


def test_nan_and_bad_cutoff_rejected(fig2):
    assert not validate(fig2.replace(L=math.nan)).ok
    assert not validate(fig2.replace(Omega_cutoff=-1.0)).ok
    assert validate(fig2.replace(Omega_cutoff=1e9)).ok


def test_broadband_warning(fig2):
    report = validate(fig2.replace(gamma_c=fig2.omega_S))
    assert report.ok
    assert any("broadband-cavity condition violated" in w for w in report.warnings)


def test_adiabatic_warning(fig2):
    # c/2L = 1.5e9 for L = 0.1 m ... push omega_S above 1% of it
    report = validate(fig2.replace(L=0.1, omega_S=2e7, gamma_c=1e9))
    assert any("adiabatic condition violated" in w for w in report.warnings)


def test_drive_amplitude_reference_value(fig2):
    # sqrt(1e-5 * 4.7e5 / (hbar * 1.8e15)), by hand: 4.9759e9
    assert derive(fig2).E == pytest.approx(4.9759e9, rel=1e-4)


def test_zero_power_zero_drive(fig2):
    assert derive(fig2.replace(P=0.0)).E == 0.0


def test_quality_factor(fig2):
    assert derive(fig2).Q_mech == pytest.approx(1.3e5 / 3e-2, rel=1e-12)
    assert derive(fig2.replace(eta=0.0)).Q_mech == math.inf


def test_static_shift_coefficient(fig2):
    g = HBAR * 1.8e15**2 / (1e-5 * 1.3e5**2 * 1e-4)
    assert derive(fig2).g == pytest.approx(g, rel=1e-14)


def test_derive_is_pure(fig2):
    assert derive(fig2) == derive(fig2_params())


@given(
    P=st.floats(1e-12, 10.0),
    gamma_c=st.floats(1e2, 1e10),
    omega_0=st.floats(1e12, 1e16),
)
def test_power_round_trip(P, gamma_c, omega_0):
    p = fig2_params().replace(P=P, gamma_c=gamma_c, omega_0=omega_0)
    E = derive(p).E
    assert E**2 * HBAR * omega_0 / gamma_c == pytest.approx(P, rel=1e-12)


def test_params_immutable(fig2):
    with pytest.raises(AttributeError):
        fig2.m = 2.0
    assert PhysicalParams.field_names()[0] == "m"
    assert fig2.as_dict()["T"] == 4.2
