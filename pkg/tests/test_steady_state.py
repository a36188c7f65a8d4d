import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from mirrornoise.params import derive
from mirrornoise.steady_state import (
    cubic_residual,
    intensity_cubic,
    lock_drive_frequency,
    real_cubic_roots,
    solve_all,
    solve_resonant,
    sweep_bistability,
)


def bistable(fig2, detuning):
    # strong drive: g*E^2 far above gamma_c^3, so a three-root window exists
    return fig2.replace(P=2e-3, omega_0=fig2.omega_c - detuning)


def companion_roots(coeffs):
    r = np.linalg.eigvals(np.polynomial.polynomial.polycompanion(coeffs[::-1] / coeffs[0]))
    r = np.sort(r[np.abs(r.imag) < 1e-6 * np.abs(r).max()].real)
    return r


@given(
    roots=st.lists(st.floats(-100, 100), min_size=3, max_size=3),
    scale=st.floats(0.1, 10),
)
def test_cubic_roots_recover_known_roots(roots, scale):
    r = np.sort(roots)
    assume(np.min(np.diff(r)) > 1e-2)
    a, b, c, d = scale * np.poly(r)
    found, degenerate = real_cubic_roots(a, b, c, d)
    assert not degenerate
    assert found.size == 3
    np.testing.assert_allclose(found, r, atol=1e-7 * max(1.0, np.abs(r).max()))


def test_cubic_single_real_root():
    roots, degenerate = real_cubic_roots(1.0, 0.0, 1.0, -2.0)  # (x-1)(x^2+x+2)
    assert not degenerate
    np.testing.assert_allclose(roots, [1.0], rtol=1e-14)


def test_cubic_double_root_flagged():
    roots, degenerate = real_cubic_roots(*np.poly([1.0, 1.0, -2.0]))
    assert degenerate
    np.testing.assert_allclose(roots, [-2.0, 1.0], atol=1e-12)


def test_cubic_rejects_zero_leading():
    with pytest.raises(ValueError):
        real_cubic_roots(0.0, 1.0, 1.0, 1.0)


def test_resonant_single_root(fig2):
    states = solve_all(fig2.replace(omega_0=lock_drive_frequency(fig2)))
    assert len(states) == 1
    s = states[0]
    assert s.stable


def test_zero_detuning_bare_cubic_without_static_shift(fig2):
    # with Delta0 = 0 and negligible drive, B_st -> 2E/gamma_c
    p = fig2.replace(P=1e-20)
    (s,) = solve_all(p)
    assert s.B_st == pytest.approx(2 * derive(p).E / p.gamma_c, rel=1e-9)


def test_undriven_cavity(fig2):
    (s,) = solve_all(fig2.replace(P=0.0))
    assert s.B_st == 0.0 and s.q_st == 0.0


def test_three_roots_against_companion_oracle(fig2):
    p = bistable(fig2, 2.8 * fig2.gamma_c)
    states = solve_all(p)
    assert len(states) == 3
    assert [s.stability for s in states] == ["stable", "unstable", "stable"]
    coeffs, g = intensity_cubic(p)
    oracle = companion_roots(coeffs)
    np.testing.assert_allclose([s.intensity * g for s in states], oracle, rtol=1e-10)
    for s in states:
        assert cubic_residual(coeffs, s.intensity * g) < 1e-10
        assert s.B_st >= 0


def test_root_satisfies_intensity_equation(fig2):
    p = bistable(fig2, 2.8 * fig2.gamma_c)
    E2 = derive(p).E ** 2
    g = derive(p).g
    for s in solve_all(p):
        I = s.intensity
        lhs = I * ((p.gamma_c / 2) ** 2 + (p.detuning0 - g * I) ** 2)
        assert lhs == pytest.approx(E2, rel=1e-9)
        assert s.Delta == pytest.approx(p.detuning0 - g * I, abs=1e-6 * p.gamma_c)


def test_resonant_reference_values(fig2):
    s = solve_resonant(fig2)
    assert s.Delta == 0.0
    assert s.B_st == pytest.approx(2.12e4, rel=2e-3)
    assert s.intensity == pytest.approx(4.48e8, rel=2e-3)
    E = derive(fig2.replace(omega_0=s.omega_0)).E
    assert s.B_st == pytest.approx(2 * E / fig2.gamma_c, rel=1e-15)


def test_resonant_zero_power(fig2):
    s = solve_resonant(fig2.replace(P=0.0))
    assert s.B_st == 0.0 and s.q_st == 0.0


def test_doubling_power_doubles_intensity(fig2):
    # exact up to the tiny change of the locked drive frequency
    a = solve_resonant(fig2)
    b = solve_resonant(fig2.replace(P=2 * fig2.P))
    assert b.intensity / a.intensity == pytest.approx(2.0, rel=1e-10)


def test_resonant_matches_solve_all_at_locked_frequency(fig2):
    s = solve_resonant(fig2)
    (t,) = solve_all(fig2.replace(omega_0=s.omega_0))
    assert t.B_st == pytest.approx(s.B_st, rel=1e-12)


def test_static_displacement_formula(fig2):
    s = solve_resonant(fig2)
    from mirrornoise.params import HBAR

    q = HBAR * fig2.omega_c * s.intensity / (fig2.m * fig2.omega_S**2 * fig2.L)
    assert s.q_st == pytest.approx(q, rel=1e-14)


def test_sweep_at_zero_detuning_single_rooted(fig2):
    rows = sweep_bistability(fig2, (0.0, 0.0), 5)
    assert len(rows) == 5
    assert all(r.n_roots == 1 for r in rows)


def test_sweep_requires_two_points(fig2):
    with pytest.raises(ValueError):
        sweep_bistability(fig2, (0.0, 1.0), 1)


def discriminant_sign(p):
    (a, b, c, d), _ = intensity_cubic(p)
    disc = 18 * a * b * c * d - 4 * b**3 * d + b**2 * c**2 - 4 * a * c**3 - 27 * a**2 * d**2
    return np.sign(disc)


def test_sweep_window_matches_discriminant(fig2):
    base = fig2.replace(P=2e-3)
    rows = sweep_bistability(base, (0.0, 6.0 * fig2.gamma_c), 301)
    three = np.array([r.n_roots == 3 for r in rows])
    assert three.any()
    idx = np.flatnonzero(three)
    assert np.all(np.diff(idx) == 1)  # contiguous
    assert 0 < idx[0] and idx[-1] < len(rows) - 1  # closed on both sides
    oracle = np.array([discriminant_sign(base.replace(omega_0=base.omega_c - r.Delta0)) > 0 for r in rows])
    assert np.sum(three != oracle) <= 2


def _du_dD(u, D, h):
    # implicit-function slope of a root u(D) of the cubic in u = g*I
    slope = 3 * u * u - 4 * D * u + h * h + D * D
    return np.abs(2 * u * (D - u) / slope)


def test_sweep_roots_continuous_along_branches(fig2):
    base = fig2.replace(P=2e-3)
    rows = sweep_bistability(base, (0.0, 6.0 * fig2.gamma_c), 1201)
    _, g = intensity_cubic(base)
    h = base.gamma_c / 2
    d0 = np.array([r.Delta0 for r in rows])
    assert np.all(np.diff(d0) > 0)
    for a, b in zip(rows, rows[1:]):
        ua, ub = g * np.array(a.intensities), g * np.array(b.intensities)
        step = b.Delta0 - a.Delta0
        # every root that survives the step sits within the local slope bound of a root before it
        for u in ub:
            j = np.argmin(np.abs(ua - u))
            bound = 2 * step * max(_du_dD(ua[j], a.Delta0, h), _du_dD(u, b.Delta0, h)) + 1e-9 * u
            if a.n_roots == b.n_roots:
                assert abs(u - ua[j]) <= bound
            elif abs(u - ua[j]) > bound:
                # only a root born at a fold may lack a partner
                assert b.n_roots > a.n_roots
