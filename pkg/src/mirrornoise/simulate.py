"""Monte-Carlo integration of the linearised mirror/cavity fluctuations.

The simulation works with c-number fluctuations driven by Gaussian noise
of the symmetrised quantum densities; for this linear system that
reproduces the measured (symmetrised) homodyne spectrum exactly.

Internal units: time s = omega_S t, position z = q / q_ref with
q_ref = sqrt(hbar / (m omega_S)), momentum w = p / (m omega_S q_ref).
The full-cavity system reads

    z' = w
    w' = -z - G w + a_x X + F(s)
    X' = -(k/2) X + sqrt(k) xi_X
    Y' = -(k/2) Y + g_y z + sqrt(k) xi_Y
    Y_out = sqrt(k) Y - xi_Y

with k = gamma_c/omega_S, G = eta/(m omega_S), xi_X, xi_Y unit white
noises and F the thermal force of density G*Theta(omega_S nu)/(hbar omega_S).
The drift is integrated exactly over each step (matrix exponential with
the step-averaged output carried as an extra integral state).  The white
part of F uses Theta(0); the non-negative excess Theta(w) - Theta(0) is
synthesised in the frequency domain and held constant over each step.

Returned trajectories are in SI units; ``Y_out`` holds step averages
scaled so that the vacuum floor has density 1 per rad/s.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import linalg, signal

from .kernels import NoiseModel, thermal_excess, thermal_factor
from .params import CONSTANTS, PhysicalParams
from .steady_state import SteadyState

__all__ = [
    "SimConfig",
    "SimulationError",
    "Trajectory",
    "PsdEstimate",
    "SimCoefficients",
    "coefficients",
    "synthesize_noise",
    "integrate",
    "estimate_psd",
    "simulate_spectrum",
    "simulated_model_spectrum",
    "write_trajectory",
    "read_trajectory",
    "TRAJECTORY_COLUMNS",
]

log = logging.getLogger(__name__)

RESOLUTION_LIMIT = 0.1
TRAJECTORY_COLUMNS = ("t", "q", "p", "X", "Y", "Y_out")


class SimulationError(RuntimeError):
    """A trajectory blew up (non-finite state)."""


@dataclass(frozen=True)
class SimConfig:
    """Monte-Carlo settings.  ``dt`` is in units of 1/omega_S."""

    dt: float = 0.025
    n_steps: int = 400_000
    n_traj: int = 200
    seed: int = 0
    burn_in: float = 0.05
    welch_segment: int = 20_000
    adiabatic: bool = False
    thermal: bool = True
    vacuum: bool = True
    noise_scale: float = 1.0
    workers: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")
        if not (0 <= self.burn_in < 1):
            raise ValueError("burn_in must lie in [0, 1)")
        if self.welch_segment < 2:
            raise ValueError("welch_segment must be >= 2")
        if self.welch_segment > self.kept_steps:
            raise ValueError(
                f"welch_segment={self.welch_segment} exceeds the {self.kept_steps} steps kept after burn-in"
            )
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def burn_steps(self) -> int:
        return int(round(self.burn_in * self.n_steps))

    @property
    def kept_steps(self) -> int:
        return self.n_steps - int(round(self.burn_in * self.n_steps))

    def replace(self, **changes) -> "SimConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Y_out: np.ndarray
    index: int = 0

    def __post_init__(self):
        n = len(self.t)
        for name in TRAJECTORY_COLUMNS[1:]:
            if len(getattr(self, name)) != n:
                raise ValueError("trajectory arrays must have equal length")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


@dataclass(frozen=True)
class PsdEstimate:
    omega_grid: np.ndarray
    S_hat: np.ndarray
    stderr: np.ndarray
    n_traj: int = 0
    n_segments: int = 0
    per_traj: np.ndarray | None = field(default=None, repr=False, compare=False)

    def band(self, lo: float, hi: float) -> np.ndarray:
        return (self.omega_grid >= lo) & (self.omega_grid <= hi)

    def columns(self) -> dict[str, np.ndarray]:
        return {"omega": self.omega_grid, "S_hat": self.S_hat, "stderr": self.stderr}


# ------------------------------------------------------------ coefficients


@dataclass(frozen=True)
class SimCoefficients:
    omega_S: float
    q_ref: float
    p_ref: float
    kappa: float  # gamma_c / omega_S
    Gamma: float  # eta / (m omega_S)
    a_x: float
    g_y: float
    white_force: float  # density of the white thermal part
    model: NoiseModel

    def colored_force(self, nu) -> np.ndarray:
        """Excess thermal-force density above the white part, in internal units."""
        w = self.omega_S * np.abs(np.asarray(nu, dtype=float))
        excess = thermal_excess(w, self.model) - thermal_excess(0.0, self.model)
        return np.maximum(self.Gamma * excess / (CONSTANTS.hbar * self.omega_S), 0.0)

    def thermal_force(self, nu) -> np.ndarray:
        w = self.omega_S * np.asarray(nu, dtype=float)
        return self.Gamma * thermal_factor(w, self.model) / (CONSTANTS.hbar * self.omega_S)


def coefficients(params: PhysicalParams, op_point: SteadyState, model: NoiseModel) -> SimCoefficients:
    hbar = CONSTANTS.hbar
    wS = params.omega_S
    q_ref = math.sqrt(hbar / (params.m * wS))
    B = op_point.B_st
    Gamma = params.eta / (params.m * wS)
    white = Gamma * float(thermal_factor(0.0, model)) / (hbar * wS)
    return SimCoefficients(
        omega_S=wS,
        q_ref=q_ref,
        p_ref=params.m * wS * q_ref,
        kappa=params.gamma_c / wS,
        Gamma=Gamma,
        a_x=hbar * params.omega_c * B / (params.m * params.L * wS**2 * q_ref),
        g_y=2.0 * params.omega_c * B * q_ref / (params.L * wS),
        white_force=white,
        model=model,
    )


# ------------------------------------------------------------ noise synthesis


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(key=int(seed)))


def _trajectory_generator(seed: int, index: int) -> np.random.Generator:
    # counter-based split: one independent Philox key per trajectory
    return np.random.Generator(np.random.Philox(key=(int(index) << 64) | int(seed)))


def synthesize_noise(target_psd, n: int, dt: float, seed) -> np.ndarray:
    """Real stationary Gaussian series with two-sided density ``target_psd``.

    ``target_psd`` maps angular frequency to density (convention
    S(w) = int C(tau) exp(i w tau) dtau), so the series variance is
    int S dw / 2pi over the band |w| < pi/dt.  Built from independent
    Hermitian-symmetric Fourier coefficients; the series is periodic
    with period n*dt.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not dt > 0:
        raise ValueError("dt must be positive")
    rng = _generator(seed)
    omega = 2.0 * np.pi * np.fft.rfftfreq(n, dt)
    S = np.asarray(target_psd(omega), dtype=float) * np.ones_like(omega)
    S_neg = np.asarray(target_psd(-omega), dtype=float) * np.ones_like(omega)
    if np.any(~np.isfinite(S)) or np.any(S < 0):
        raise ValueError("target density must be finite and non-negative")
    if np.any(np.abs(S - S_neg) > 1e-12 * np.maximum(np.abs(S), np.abs(S_neg))):
        raise ValueError("target density must be even in omega")
    if not np.any(S > 0):
        return np.zeros(n)
    amp = np.sqrt(n * S / dt)
    re = rng.standard_normal(omega.size)
    im = rng.standard_normal(omega.size)
    coef = amp * (re + 1j * im) / math.sqrt(2.0)
    # zero-frequency (and Nyquist, for even n) coefficients are real
    coef[0] = amp[0] * re[0]
    if n % 2 == 0:
        coef[-1] = amp[-1] * re[-1]
    return np.fft.irfft(coef, n)


# ------------------------------------------------------------ discretisation


@dataclass(frozen=True)
class _Discrete:
    n: int  # dynamic states
    Phi: np.ndarray  # (d, n): maps state to [next state, step integrals]
    G: np.ndarray  # (d,): response to a unit force held over one step
    L: np.ndarray  # (d, d): square root of the step noise covariance


def _system(c: SimCoefficients, cfg: SimConfig):
    """Continuous drift M, noise input B and force column for the chosen mode.

    Noise inputs are (xi_X, xi_Y, xi_F), each unit white.  Integral states
    accumulate over one step and are reset afterwards.
    """
    k, G = c.kappa, c.Gamma
    vac = cfg.noise_scale if cfg.vacuum else 0.0
    th = cfg.noise_scale * math.sqrt(c.white_force) if cfg.thermal else 0.0
    if not cfg.adiabatic:
        # states z, w, X, Y | J = int sqrt(k) Y, W = -int xi_Y
        M = np.zeros((6, 6))
        M[0, 1] = 1.0
        M[1, 0], M[1, 1], M[1, 2] = -1.0, -G, c.a_x
        M[2, 2] = -0.5 * k
        M[3, 0], M[3, 3] = c.g_y, -0.5 * k
        M[4, 3] = math.sqrt(k)
        B = np.zeros((6, 3))
        B[2, 0] = vac * math.sqrt(k)
        B[3, 1] = vac * math.sqrt(k)
        B[5, 1] = -vac
        B[1, 2] = th
        return 4, M, B
    # adiabatic: states z, w | J = int (2 g_y/sqrt(k)) z, W = int xi_Y, V = int xi_X
    M = np.zeros((5, 5))
    M[0, 1] = 1.0
    M[1, 0], M[1, 1] = -1.0, -G
    M[2, 0] = 2.0 * c.g_y / math.sqrt(k)
    B = np.zeros((5, 3))
    B[1, 0] = vac * 2.0 * c.a_x / math.sqrt(k)
    B[3, 1] = vac
    B[4, 0] = vac
    B[1, 2] = th
    return 2, M, B


def _psd_sqrt(Q: np.ndarray) -> np.ndarray:
    Q = 0.5 * (Q + Q.T)
    vals, vecs = np.linalg.eigh(Q)
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)


def _discretise(c: SimCoefficients, cfg: SimConfig) -> _Discrete:
    n, M, B = _system(c, cfg)
    d = M.shape[0]
    dt = cfg.dt
    # Van Loan: covariance of the integrated noise over one step
    vl = np.zeros((2 * d, 2 * d))
    vl[:d, :d] = -M
    vl[:d, d:] = B @ B.T
    vl[d:, d:] = M.T
    E = linalg.expm(vl * dt)
    Phi_full = E[d:, d:].T
    Q = Phi_full @ E[:d, d:]
    # zero-order-hold response to a unit force on w
    zoh = np.zeros((d + 1, d + 1))
    zoh[:d, :d] = M
    zoh[1, d] = 1.0
    G = linalg.expm(zoh * dt)[:d, d]
    return _Discrete(n=n, Phi=np.ascontiguousarray(Phi_full[:, :n]), G=G, L=_psd_sqrt(Q))


@njit(cache=True)
def _advance(Phi, G, L, u, z, out):  # pragma: no cover - compiled
    n_steps, d = out.shape
    n = Phi.shape[1]
    x = np.zeros(n)
    y = np.zeros(d)
    for k in range(n_steps):
        for i in range(d):
            acc = G[i] * u[k]
            for j in range(n):
                acc += Phi[i, j] * x[j]
            for j in range(d):
                acc += L[i, j] * z[k, j]
            y[i] = acc
        for i in range(d):
            out[k, i] = y[i]
        for j in range(n):
            x[j] = y[j]


def _check_inputs(params, op_point, cfg, c: SimCoefficients):
    if abs(op_point.Delta) > 1e-9 * params.gamma_c:
        raise ValueError("simulation requires a zero-detuning operating point")
    if cfg.dt * max(c.kappa, 1.0) >= RESOLUTION_LIMIT:
        raise ValueError(
            f"time step too coarse: dt*max(gamma_c/omega_S, 1) = {cfg.dt * max(c.kappa, 1.0):.3g} "
            f">= {RESOLUTION_LIMIT}"
        )


def _raw(params, op_point, model, cfg, index, disc=None, coef=None):
    c = coef if coef is not None else coefficients(params, op_point, model)
    disc = disc if disc is not None else _discretise(c, cfg)
    rng = _trajectory_generator(cfg.seed, index)
    n_steps = cfg.n_steps
    d = disc.L.shape[0]
    if cfg.thermal and cfg.noise_scale > 0:
        u = cfg.noise_scale * synthesize_noise(c.colored_force, n_steps, cfg.dt, rng)
    else:
        u = np.zeros(n_steps)
    z = rng.standard_normal((n_steps, d))
    out = np.empty((n_steps, d))
    _advance(disc.Phi, disc.G, disc.L, u, z, out)
    if not np.all(np.isfinite(out)):
        bad = int(np.argmax(~np.all(np.isfinite(out), axis=1)))
        log.error("trajectory %d rejected: non-finite state at step %d", index, bad)
        raise SimulationError(f"trajectory {index} produced non-finite values at step {bad}")
    return c, disc, out


def _y_out(out: np.ndarray, disc: _Discrete, dt: float) -> np.ndarray:
    n = disc.n
    return (out[:, n] + out[:, n + 1]) / dt


def integrate(params: PhysicalParams, op_point: SteadyState, model: NoiseModel,
              cfg: SimConfig, index: int = 0) -> Trajectory:
    """One trajectory (number ``index`` of the ensemble), burn-in removed."""
    c = coefficients(params, op_point, model)
    _check_inputs(params, op_point, cfg, c)
    c, disc, out = _raw(params, op_point, model, cfg, index, coef=c)
    dt = cfg.dt
    k = c.kappa
    y_out = _y_out(out, disc, dt)
    if cfg.adiabatic:
        X = 2.0 / math.sqrt(k) * out[:, 4] / dt
        Y = 2.0 / k * c.g_y * out[:, 0] + 2.0 / math.sqrt(k) * out[:, 3] / dt
    else:
        X, Y = out[:, 2], out[:, 3]
    keep = slice(cfg.burn_steps, None)
    t = (np.arange(cfg.n_steps) + 1) * dt / c.omega_S
    root = math.sqrt(c.omega_S)
    return Trajectory(
        t=t[keep],
        q=c.q_ref * out[keep, 0],
        p=c.p_ref * out[keep, 1],
        X=X[keep].copy(),
        Y=Y[keep].copy(),
        Y_out=root * y_out[keep],
        index=index,
    )


# ------------------------------------------------------------ spectral estimate


def _welch(x: np.ndarray, dt: float, nperseg: int) -> tuple[np.ndarray, np.ndarray]:
    """Two-sided density at non-negative angular frequencies.

    Normalised so that a white series of variance 1/dt reads 1.
    """
    f, P = signal.welch(x, fs=1.0 / dt, window="hann", nperseg=nperseg,
                        noverlap=nperseg // 2, detrend=False,
                        return_onesided=False, scaling="density")
    pos = f >= 0
    order = np.argsort(f[pos])
    return 2.0 * np.pi * f[pos][order], P[pos][order]


def _n_segments(n: int, nperseg: int) -> int:
    step = nperseg - nperseg // 2
    return (n - nperseg) // step + 1


def _combine(omega, per_traj: np.ndarray, n_segments: int, segments=None) -> PsdEstimate:
    n_traj = per_traj.shape[0]
    S_hat = per_traj.mean(axis=0)
    if n_traj > 1:
        stderr = per_traj.std(axis=0, ddof=1) / math.sqrt(n_traj)
    else:
        # single trajectory: dispersion of the individual segments
        seg = segments if segments is not None else per_traj
        stderr = seg.std(axis=0, ddof=1) / math.sqrt(seg.shape[0]) if seg.shape[0] > 1 else np.zeros_like(S_hat)
    return PsdEstimate(omega, S_hat, stderr, n_traj, n_segments, per_traj)


def _segment_periodograms(x, dt, nperseg):
    step = nperseg - nperseg // 2
    starts = range(0, len(x) - nperseg + 1, step)
    rows = [_welch(x[s:s + nperseg], dt, nperseg)[1] for s in starts]
    return np.array(rows)


def estimate_psd(trajectories, cfg: SimConfig, field_name: str = "Y_out") -> PsdEstimate:
    """Welch estimate (Hann window, 50% overlap) averaged over trajectories."""
    trajs = list(trajectories)
    if not trajs:
        raise ValueError("need at least one trajectory")
    nperseg = cfg.welch_segment
    rows = []
    omega = None
    for tr in trajs:
        x = np.asarray(getattr(tr, field_name))
        if nperseg > len(x):
            raise ValueError(f"welch_segment={nperseg} longer than the {len(x)} samples available")
        omega, P = _welch(x, tr.dt, nperseg)
        rows.append(P)
    per_traj = np.array(rows)
    segs = None
    if len(trajs) == 1:
        segs = _segment_periodograms(np.asarray(getattr(trajs[0], field_name)), trajs[0].dt, nperseg)
    return _combine(omega, per_traj, _n_segments(len(x), nperseg), segs)


def _one_psd(params, op_point, model, cfg, disc, coef, index):
    _, _, out = _raw(params, op_point, model, cfg, index, disc=disc, coef=coef)
    y = math.sqrt(coef.omega_S) * _y_out(out, disc, cfg.dt)[cfg.burn_steps:]
    return _welch(y, cfg.dt / coef.omega_S, cfg.welch_segment)


def simulate_spectrum(params: PhysicalParams, op_point: SteadyState, model: NoiseModel,
                      cfg: SimConfig, progress=None) -> PsdEstimate:
    """Ensemble Welch estimate of the output phase-quadrature spectrum.

    Trajectories are reduced to their spectra one at a time, so memory
    stays at one trajectory per worker.  The result does not depend on
    ``cfg.workers``.
    """
    c = coefficients(params, op_point, model)
    _check_inputs(params, op_point, cfg, c)
    disc = _discretise(c, cfg)
    rows: list[np.ndarray | None] = [None] * cfg.n_traj
    omega = None

    def work(i):
        return i, _one_psd(params, op_point, model, cfg, disc, c, i)

    if cfg.workers == 1:
        results = map(work, range(cfg.n_traj))
    else:
        pool = ThreadPoolExecutor(max_workers=min(cfg.workers, os.cpu_count() or 1))
        results = pool.map(work, range(cfg.n_traj))
    try:
        for i, (w, P) in results:
            omega = w
            rows[i] = P
            if progress is not None:
                progress(i)
    finally:
        if cfg.workers != 1:
            pool.shutdown()
    per_traj = np.array(rows)
    return _combine(omega, per_traj, _n_segments(cfg.kept_steps, cfg.welch_segment))


def simulated_model_spectrum(omega, params: PhysicalParams, op_point: SteadyState,
                             model: NoiseModel, cfg: SimConfig | None = None) -> np.ndarray:
    """Exact output spectrum of the simulated linear system (internal model).

    Evaluated from the transfer functions of the continuous equations, so
    it includes the switches in ``cfg`` (vacuum/thermal/adiabatic).
    """
    cfg = cfg or SimConfig(n_steps=2, welch_segment=2, burn_in=0.0)
    c = coefficients(params, op_point, model)
    nu = np.asarray(omega, dtype=float) / c.omega_S
    s2 = cfg.noise_scale**2
    vac = s2 if cfg.vacuum else 0.0
    force = (c.thermal_force(nu) * s2) if cfg.thermal else 0.0 * nu
    chi = 1.0 / np.abs(1.0 - nu**2 - 1j * c.Gamma * nu) ** 2
    k = c.kappa
    if cfg.adiabatic:
        S_z = chi * (force + vac * 4.0 * c.a_x**2 / k)
        return vac + 4.0 * c.g_y**2 / k * S_z
    cav = 1.0 / ((0.5 * k) ** 2 + nu**2)
    S_z = chi * (force + vac * c.a_x**2 * k * cav)
    # intracavity and reflected vacuum combine into an all-pass filter: floor stays 1
    return vac + k * c.g_y**2 * cav * S_z


# ------------------------------------------------------------ trajectory dump


def write_trajectory(path, traj: Trajectory) -> None:
    """Binary columnar dump: float64 little-endian, columns t, q, p, X, Y, Y_out.

    Each column is written as one contiguous block of len(t) values.
    """
    data = np.stack([np.asarray(getattr(traj, name), dtype="<f8") for name in TRAJECTORY_COLUMNS])
    with open(path, "wb") as fh:
        fh.write(data.tobytes(order="C"))


def read_trajectory(path) -> Trajectory:
    raw = np.fromfile(path, dtype="<f8")
    if raw.size % len(TRAJECTORY_COLUMNS):
        raise ValueError("trajectory file length is not a multiple of the column count")
    cols = raw.reshape(len(TRAJECTORY_COLUMNS), -1)
    return Trajectory(*(cols[i].copy() for i in range(len(TRAJECTORY_COLUMNS))))
