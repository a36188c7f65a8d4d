"""Commutator bookkeeping for the harmonically bound Brownian mirror.

Every commutator of this linear system is a c-number multiple of i*hbar,
so the audit works with plain real functions: propagator entries of the
damped oscillator, quadrature of their products, and a small ODE for the
mixed position/noise commutator.  All returned commutators are in units
of i*hbar.

The reservoir-noise commutator in the infinite-cutoff limit is
2 i hbar eta delta'(s - s').  Its derivative is moved onto the smooth
propagator entries by integration by parts; the end points of the time
window carry weight theta(0) = 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import sici

from .kernels import KernelConfig, delta_tilde
from .params import PhysicalParams

__all__ = [
    "GreenFunctions",
    "CommutatorReport",
    "XiAudit",
    "SignIdentityAudit",
    "green",
    "theta",
    "sign",
    "xi",
    "noise_commutator",
    "audit_qp_commutator",
    "audit_xi_relation",
    "audit_sign_identity",
]


# ------------------------------------------------------------------ propagator


@dataclass(frozen=True)
class GreenFunctions:
    """Fundamental-solution entries: (q, p)(t) = G (q, p)(0)."""

    G_qq: np.ndarray
    G_qp: np.ndarray
    G_pq: np.ndarray
    G_pp: np.ndarray

    @property
    def det(self) -> np.ndarray:
        return self.G_qq * self.G_pp - self.G_qp * self.G_pq


def _cs(a: float, t):
    """cos/sin-like pair for x'' = -a x, valid for either sign of a.

    Returns (C, S) with C = cos(sqrt(a) t), S = sin(sqrt(a) t)/sqrt(a),
    continued analytically through a = 0 (critical damping).
    """
    t = np.asarray(t, dtype=float)
    z = a * t * t
    C = np.empty_like(t)
    S = np.empty_like(t)
    small = np.abs(z) < 1e-3
    zs, ts = z[small], t[small]
    # Taylor through z^4: truncation below 1e-15 for |z| < 1e-3
    C[small] = 1.0 - zs / 2 * (1.0 - zs / 12 * (1.0 - zs / 30 * (1.0 - zs / 56)))
    S[small] = ts * (1.0 - zs / 6 * (1.0 - zs / 20 * (1.0 - zs / 42 * (1.0 - zs / 72))))
    tl = t[~small]
    if a > 0:
        w = math.sqrt(a)
        C[~small] = np.cos(w * tl)
        S[~small] = np.sin(w * tl) / w
    elif a < 0:
        k = math.sqrt(-a)
        C[~small] = np.cosh(k * tl)
        S[~small] = np.sinh(k * tl) / k
    return C, S


def _propagator(omega_S: float, m: float, rate: float, t) -> GreenFunctions:
    # rate may be negative (anti-damped branch before t0) and t may be negative
    t = np.asarray(t, dtype=float)
    h = 0.5 * rate
    C, S = _cs(omega_S**2 - h * h, t)
    env = np.exp(-h * t)
    return GreenFunctions(
        G_qq=env * (C + h * S),
        G_qp=env * S / m,
        G_pq=-m * omega_S**2 * env * S,
        G_pp=env * (C - h * S),
    )


def _scalar(g: GreenFunctions) -> GreenFunctions:
    return GreenFunctions(*(float(x) if np.ndim(x) == 0 else x
                            for x in (g.G_qq, g.G_qp, g.G_pq, g.G_pp)))


def green(params: PhysicalParams, elapsed) -> GreenFunctions:
    """Damped-oscillator propagator after ``elapsed`` seconds (>= 0).

    The under-, over- and critically damped branches are selected by the
    sign of (eta/2m)^2 - omega_S^2 and joined smoothly at the boundary.
    """
    e = np.asarray(elapsed, dtype=float)
    if np.any(e < 0):
        raise ValueError("elapsed time must be non-negative")
    g = _propagator(params.omega_S, params.m, params.damping_rate, e)
    return _scalar(GreenFunctions(*(x[()] for x in (g.G_qq, g.G_qp, g.G_pq, g.G_pp))))


# ------------------------------------------------------------ step functions


def theta(x):
    """Heaviside step with theta(0) = 1/2."""
    return 0.5 * (1.0 + np.sign(x))


def sign(x):
    """Sign function with sign(0) = 0."""
    return np.sign(x)


def xi(t, t_prime, t0):
    """Support function of the mixed position/noise commutator.

    +1 on t0 < t' < t, -1 on t < t' < t0, zero elsewhere, with the
    half-weights implied by theta(0) = 1/2 on the boundaries.
    """
    fwd = theta(t - t0) * theta(t - t_prime) * theta(t_prime - t0)
    bwd = theta(t0 - t) * theta(t_prime - t) * theta(t0 - t_prime)
    return fwd - bwd


# --------------------------------------------------------- q,p commutator

_INDEX = {"qq": 0, "qp": 1, "pq": 2, "pp": 3}


def _prop1(omega_S: float, m: float, rate: float, t: float) -> tuple[float, float, float, float]:
    """Scalar fast path of ``_propagator``: (G_qq, G_qp, G_pq, G_pp)."""
    h = 0.5 * rate
    a = omega_S**2 - h * h
    z = a * t * t
    if abs(z) < 1e-3:
        C = 1.0 - z / 2 * (1.0 - z / 12 * (1.0 - z / 30 * (1.0 - z / 56)))
        S = t * (1.0 - z / 6 * (1.0 - z / 20 * (1.0 - z / 42 * (1.0 - z / 72))))
    elif a > 0:
        w = math.sqrt(a)
        C, S = math.cos(w * t), math.sin(w * t) / w
    else:
        k = math.sqrt(-a)
        C, S = math.cosh(k * t), math.sinh(k * t) / k
    env = math.exp(-h * t)
    return env * (C + h * S), env * S / m, -m * omega_S**2 * env * S, env * (C - h * S)


def _derivatives(omega_S: float, m: float, rate: float, g) -> tuple[float, float, float, float]:
    # time derivatives of the propagator entries, from the equations of motion
    qq, qp, pq, pp = g
    k = m * omega_S**2
    return pq / m, pp / m, -k * qq - rate * pq, -k * qp - rate * pp


def _integrand(params: PhysicalParams, a: str, b: str):
    wS, m, rate = params.omega_S, params.m, params.damping_rate
    ia, ib = _INDEX[a], _INDEX[b]

    def f(u):
        g = _prop1(wS, m, rate, u)
        return -g[ia] * _derivatives(wS, m, rate, g)[ib]

    return f


def _boundary(params: PhysicalParams, a: str, b: str, tau: float) -> float:
    wS, m, rate = params.omega_S, params.m, params.damping_rate
    gt = _prop1(wS, m, rate, tau)
    g0 = _prop1(wS, m, rate, 0.0)
    ia, ib = _INDEX[a], _INDEX[b]
    return 0.5 * (gt[ia] * gt[ib] - g0[ia] * g0[ib])


def noise_commutator(params: PhysicalParams, a: str, b: str, tau: float,
                     epsrel: float = 1e-12) -> tuple[float, float]:
    """Reservoir contribution to [A(t), B(t)] / (i hbar).

    A and B name the propagator entries multiplying the noise (``"qp"``
    for position, ``"pp"`` for momentum) and ``tau = t - t0``.  Returns
    the value and the quadrature error estimate of

        2 eta * [ -int_0^tau A(u) B'(u) du + (A B)(tau)/2 - (A B)(0)/2 ].
    """
    val, err = integrate.quad(_integrand(params, a, b), 0.0, tau,
                              epsabs=0.0, epsrel=epsrel, limit=500)
    scale = 2.0 * params.eta
    return scale * (val + _boundary(params, a, b, tau)), scale * err


@dataclass(frozen=True)
class CommutatorReport:
    t: np.ndarray
    c: np.ndarray  # [q(t), p(t)] / (i hbar)
    c_naive: np.ndarray  # same without the reservoir commutator
    qq: np.ndarray  # equal-time [q(t), q(t)] / (i hbar)
    pp: np.ndarray
    quad_error: float
    include_noise: bool = True
    notes: tuple[str, ...] = ()

    @property
    def deviation(self) -> np.ndarray:
        values = self.c if self.include_noise else self.c_naive
        return np.abs(values - 1.0)

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviation))

    def naive_decay_error(self, params: PhysicalParams) -> float:
        """max |c_naive(t) - exp(-eta t / m)|."""
        return float(np.max(np.abs(self.c_naive - np.exp(-params.damping_rate * self.t))))

    def columns(self) -> dict[str, np.ndarray]:
        values = self.c if self.include_noise else self.c_naive
        return {
            "t": self.t,
            "c_real": values,
            "c_imag": np.zeros_like(values),
            "deviation": self.deviation,
        }


def audit_qp_commutator(params: PhysicalParams, t_max: float, n_grid: int = 201,
                        include_noise: bool = True, epsrel: float = 1e-12) -> CommutatorReport:
    """Track [q(t), p(t)] from an initial i*hbar over [t0, t0 + t_max].

    The homogeneous part is det G(t); the reservoir part is the double
    time integral of the noise commutator against G_qp and G_pp.  With
    ``include_noise=False`` only the decaying homogeneous part is kept
    (the report's ``deviation`` then measures that variant).
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if n_grid < 2:
        raise ValueError("n_grid must be >= 2")
    t = np.linspace(0.0, t_max, n_grid)
    g = _propagator(params.omega_S, params.m, params.damping_rate, t)
    c_naive = g.det
    noise = np.zeros_like(t)
    qq = np.zeros_like(t)
    pp = np.zeros_like(t)
    err_total = 0.0
    notes = []
    if params.eta > 0:
        # accumulate panel by panel so every grid point reuses earlier work
        pairs = (("qp", "pp"), ("qp", "qp"), ("pp", "pp"))
        funcs = [_integrand(params, a, b) for a, b in pairs]
        acc = np.zeros(3)
        scale = 2.0 * params.eta
        # absolute floor: roundoff of an O(1/m * 1/omega_S) panel integral
        floor = 1e-15 / (params.m * params.omega_S)
        for k in range(1, n_grid):
            for j, f in enumerate(funcs):
                val, e = integrate.quad(f, t[k - 1], t[k], epsabs=floor, epsrel=epsrel, limit=200)
                acc[j] += val
                err_total += scale * e
            noise[k], qq[k], pp[k] = (
                scale * (acc[j] + _boundary(params, a, b, t[k])) for j, (a, b) in enumerate(pairs)
            )
        if err_total > 1e-8:
            notes.append(f"quadrature error estimate {err_total:.3g}")
    c = c_naive + noise
    if not np.all(np.isfinite(c)):
        raise FloatingPointError("commutator evaluation produced non-finite values")
    return CommutatorReport(t=t, c=c, c_naive=c_naive, qq=qq, pp=pp,
                            quad_error=err_total, include_noise=include_noise,
                            notes=tuple(notes))


# ------------------------------------------------------ mixed commutator


@dataclass(frozen=True)
class XiAudit:
    X_direct: float  # [q(t), Q(t')] / (i hbar) from the ODE
    X_closed: float  # from 2 eta d/dt' {[q(t), q(t')] Xi}
    residual: float  # |difference| relative to 2 eta / m
    t_prime: float  # value actually used (may be shifted off t0)
    notes: tuple[str, ...] = ()


def _qq_two_time(params: PhysicalParams, t: float, t_prime: float, t0: float) -> float:
    # [q(t), q(t')] / (i hbar) when t and t' lie on the same side of t0
    rate = params.damping_rate * float(sign(t - t0) or sign(t_prime - t0))
    return -_prop1(params.omega_S, params.m, rate, t - t_prime)[1]


def _xi_closed_form(params: PhysicalParams, t: float, t_prime: float, t0: float, h: float) -> float:
    w = float(xi(t, t_prime, t0))
    if w == 0.0:
        return 0.0
    if t_prime == t:
        # [q(t), q(t)] = 0, so only d/dt' of the commutator survives
        rate = params.damping_rate * float(sign(t - t0))
        return 2.0 * params.eta * w * _prop1(params.omega_S, params.m, rate, 0.0)[3] / params.m
    # central difference in t' of the propagator commutator, Richardson-extrapolated
    def d(step):
        return (_qq_two_time(params, t, t_prime + step, t0)
                - _qq_two_time(params, t, t_prime - step, t0)) / (2.0 * step)

    deriv = (4.0 * d(h / 2) - d(h)) / 3.0
    return 2.0 * params.eta * w * deriv


def _xi_ode(params: PhysicalParams, t: float, t_prime: float, t0: float, rtol: float) -> float:
    """Integrate X' = Y/m, Y' = -m wS^2 X - (eta/m) S(t - t0) Y + 2 eta delta'(t - t').

    The delta' source becomes jumps at t': X by 2 eta / m and Y by
    -2 eta (eta/m) S(t' - t0); a jump landing exactly on t is taken
    with weight 1/2.  Both start from zero at t0 and run towards t,
    backwards in time when t < t0.
    """
    if t == t0:
        return 0.0
    direction = 1.0 if t > t0 else -1.0
    wS, m, eta = params.omega_S, params.m, params.eta
    rate = params.damping_rate * direction

    def rhs(_s, y):
        return [y[1] / m, -m * wS**2 * y[0] - rate * y[1]]

    def run(y, a, b):
        if a == b:
            return np.asarray(y, dtype=float)
        sol = integrate.solve_ivp(rhs, (a, b), y, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise FloatingPointError(sol.message)
        return sol.y[:, -1]

    lo, hi = min(t0, t), max(t0, t)
    atol = rtol * 2.0 * eta / m * np.array([1.0, m * wS]) if eta > 0 else 1e-300
    y = np.zeros(2)
    # forward-time jumps; integrating backwards from t0 removes them instead
    jump = direction * np.array([2.0 * eta / m, -2.0 * eta * params.damping_rate * float(sign(t_prime - t0))])
    if lo < t_prime < hi:
        y = run(y, t0, t_prime) + jump
        y = run(y, t_prime, t)
    elif t_prime == t:
        y = run(y, t0, t) + 0.5 * jump
    else:
        y = run(y, t0, t)
    return float(y[0])


def audit_xi_relation(params: PhysicalParams, t: float, t_prime: float, t0: float,
                      rtol: float = 1e-12) -> XiAudit:
    """Compare the ODE solution for [q(t), Q(t')] with its closed form."""
    notes = []
    scale = 1.0 / params.omega_S
    if t_prime == t0:
        shift = 1e-6 * scale * (1.0 if t >= t0 else -1.0)
        t_prime = t0 + shift
        notes.append(f"t' on the t0 discontinuity; evaluated at t0 + {shift:.3g}")
    direct = _xi_ode(params, t, t_prime, t0, rtol)
    closed = _xi_closed_form(params, t, t_prime, t0, 1e-3 * scale)
    norm = 2.0 * params.eta / params.m
    residual = abs(direct - closed) / norm if norm > 0 else abs(direct - closed)
    return XiAudit(direct, closed, residual, t_prime, tuple(notes))


# -------------------------------------------------- sign-function identity


@dataclass(frozen=True)
class SignIdentityAudit:
    value: float  # I(t, t0)
    target: float  # S(t - t0) * pbar(t) / 2
    residual: float  # |value - target| / |pbar(t)|
    value_oracle: float  # same integral by the sine-integral split


def _default_pbar(params: PhysicalParams):
    def pbar(u):
        return _prop1(params.omega_S, params.m, params.damping_rate, u)[3]
    return pbar


def audit_sign_identity(params: PhysicalParams, t: float, t0: float, Omega: float,
                        pbar=None, epsrel: float = 1e-11) -> SignIdentityAudit:
    """I(t, t0) = int_{t0}^{t} delta_tilde(t - t') pbar(t') dt' vs S(t - t0) pbar(t)/2.

    ``pbar`` defaults to a damped-oscillator solution.  The integral is
    done in u = t - t': plain adaptive quadrature over the first few
    cutoff periods, then the oscillatory (QAWO) rule.  A second estimate
    splits off pbar(t) * Si(Omega (t - t0)) / pi and integrates the
    regular remainder; the two must agree.
    """
    cfg = KernelConfig(Omega_cutoff=Omega)
    f = pbar if pbar is not None else _default_pbar(params)
    tau = t - t0
    p_t = f(t)
    target = float(sign(tau)) * p_t / 2.0
    if tau == 0:
        return SignIdentityAudit(0.0, target, 0.0 if p_t == 0 else abs(target) / abs(p_t), 0.0)
    s = 1.0 if tau > 0 else -1.0
    span = abs(tau)
    opts = dict(epsabs=0.0, epsrel=epsrel, limit=1000)

    # direct: u in [0, span], integrand delta_tilde(u) f(t - s u) (dt' = -s du)
    u_split = min(span, 20.0 / Omega)
    near, _ = integrate.quad(lambda u: float(delta_tilde(u, cfg)) * f(t - s * u), 0.0, u_split, **opts)
    far = 0.0
    if u_split < span:
        far, _ = integrate.quad(lambda u: f(t - s * u) / (np.pi * u), u_split, span,
                                weight="sin", wvar=Omega, **opts)
    value = s * (near + far)

    # oracle: pbar(t) Si(Omega span)/pi + int sin(Omega u)/(pi u) [f(t - s u) - f(t)] du
    si = sici(Omega * span)[0]

    def regular(u):
        return (f(t - s * u) - p_t) / (np.pi * u) if u > 0 else 0.0

    rem, _ = integrate.quad(regular, 0.0, span, weight="sin", wvar=Omega, **opts)
    oracle = s * (p_t * si / np.pi + rem)

    residual = abs(value - target) / abs(p_t) if p_t != 0 else abs(value - target)
    return SignIdentityAudit(value, target, residual, oracle)
