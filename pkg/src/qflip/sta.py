"""Invariant-engineered detuning ramps robust to drive errors.

The drive keeps a fixed Rabi amplitude omega while the detuning delta(t)
is shaped so that an auxiliary angle theta(t) swings from 0 to pi in a
finite time T, carrying the qubit from |0> to |1> exactly along an
eigenstate of a dynamical invariant.  theta follows a fixed profile in
scaled time s = t/T,

    theta(s) = (pi / D) f(s),
    f(s) = a s - (pi^2/2) (1-s)^2 + (pi^2/3) (1-s)^3 + cos(pi s) + A,

with A = pi^2/6 - 1 and D = f(1) - f(0) = a + pi^2/6 - 2.  The boundary
conditions theta(0) = 0, theta(T) = pi and vanishing first and second
time derivatives at both ends are built into f, and they force the flip
duration T = pi a / (D omega).

The free parameter a tunes the first-order sensitivity of the flip to a
static detuning offset or to a Rabi amplitude error.  ``solve_a`` picks
the largest a (shortest T) at which the chosen sensitivity cancels.
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize

from .dynamics import OMEGA_DEFAULT, PulseSequence, PulseStep

# Ansatz constants: offset A from the left boundary conditions, and the
# smallest a for which the net rise D (hence T) stays positive.
ANSATZ_OFFSET = np.pi ** 2 / 6.0 - 1.0
A_MIN = 2.0 - np.pi ** 2 / 6.0

# Scaled-time offset used when a formula has a removable 0/0 at the
# profile endpoints: values at s in {0, 1} are taken at this distance.
_EDGE = 1e-6

# Grid size for the scaled-time quadratures in the error functionals.
# Root positions move by < 1e-6 between 8193 and 80001 points.
_QUAD_POINTS = 8193


class ErrorChannel(Enum):
    """Which first-order drive-error sensitivity to cancel."""

    DETUNING = "detuning"
    RABI = "rabi"


def _net_rise(a: float) -> float:
    return a + np.pi ** 2 / 6.0 - 2.0


def duration(a: float, omega: float) -> float:
    """Flip duration T = pi a / (D omega) of the profile with parameter a."""
    d = _net_rise(a)
    if d <= 0.0:
        raise ValueError("a must exceed %.6f for a positive duration" % A_MIN)
    return np.pi * a / (d * omega)


@dataclass(frozen=True)
class StaAnsatz:
    """A concrete ramp: profile parameter a and drive amplitude omega."""

    a: float
    omega: float = OMEGA_DEFAULT

    def __post_init__(self):
        if not (self.a > A_MIN):
            raise ValueError("a must exceed %.6f" % A_MIN)
        if not (self.omega > 0.0 and np.isfinite(self.omega)):
            raise ValueError("omega must be positive and finite")

    @property
    def big_d(self) -> float:
        return _net_rise(self.a)

    @property
    def duration(self) -> float:
        return duration(self.a, self.omega)


def _f(a, s):
    u = 1.0 - s
    return (a * s - 0.5 * np.pi ** 2 * u ** 2 + (np.pi ** 2 / 3.0) * u ** 3
            + np.cos(np.pi * s) + ANSATZ_OFFSET)


def _fp(a, s):
    u = 1.0 - s
    return a + np.pi ** 2 * u - np.pi ** 2 * u ** 2 - np.pi * np.sin(np.pi * s)


def _fpp(s):
    u = 1.0 - s
    return -np.pi ** 2 + 2.0 * np.pi ** 2 * u - np.pi ** 2 * np.cos(np.pi * s)


def theta(ansatz: StaAnsatz, s):
    """Profile angle at scaled time s, with time derivatives.

    Returns (theta, dtheta/dt, d2theta/dt2); vectorized over s.
    """
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise ValueError("s must lie in [0, 1]")
    a, d = ansatz.a, ansatz.big_d
    t_total = ansatz.duration
    th = (np.pi / d) * _f(a, s)
    th_dot = (np.pi / d) * _fp(a, s) / t_total
    th_ddot = (np.pi / d) * _fpp(s) / t_total ** 2
    return th, th_dot, th_ddot


def delta_of_t(ansatz: StaAnsatz, t):
    """Detuning delta(t) in rad/s that realizes the profile.

    delta/omega = -D f''(s) / (pi a^2 sqrt(1 - g^2)) + cot(theta) sqrt(1 - g^2)

    with g = thetadot/omega = f'(s)/a.  The expression has removable
    0/0 endpoints; t at 0 or T is evaluated a fraction _EDGE inside.
    Vectorized over t.  Raises if |g| exceeds 1, i.e. the profile asks
    for more angular speed than the drive amplitude provides.
    """
    t = np.asarray(t, dtype=np.float64)
    t_total = ansatz.duration
    if np.any(t < 0.0) or np.any(t > t_total * (1.0 + 1e-12)):
        raise ValueError("t must lie in [0, T]")
    s = np.clip(t / t_total, _EDGE, 1.0 - _EDGE)
    a, d = ansatz.a, ansatz.big_d
    g = _fp(a, s) / a
    q = 1.0 - g * g
    if np.any(q < -1e-12):
        raise ValueError("profile slope exceeds the drive amplitude (|thetadot| > omega)")
    q = np.maximum(q, 0.0)
    root = np.sqrt(q)
    th = (np.pi / d) * _f(a, s)
    out = ansatz.omega * (-d * _fpp(s) / (np.pi * a * a * root)
                          + root / np.tan(th))
    return out if out.shape else float(out)


def _phase_integrand(s, a, d):
    # sqrt(1 - g^2)/sin(theta); both factors vanish linearly at s in
    # {0, 1}, with the common limit (D/a) sqrt(2/a).
    if min(s, 1.0 - s) < 1e-7:
        return (d / a) * np.sqrt(2.0 / a)
    g = _fp(a, s) / a
    q = max(1.0 - g * g, 0.0)
    th = (np.pi / d) * _f(a, s)
    return np.sqrt(q) / np.sin(th)


def lr_phase(ansatz: StaAnsatz, t: float) -> float:
    """Accumulated phase gamma_+(t) of the tracked invariant eigenstate.

    gamma_+(t) = -(omega/2) integral_0^t sqrt(1 - g^2)/sin(theta) dt';
    the companion eigenstate carries gamma_- = -gamma_+.  Adaptive
    quadrature with the endpoint-safe integrand.
    """
    t_total = ansatz.duration
    if not (0.0 <= t <= t_total * (1.0 + 1e-12)):
        raise ValueError("t must lie in [0, T]")
    u = min(t / t_total, 1.0)
    if u == 0.0:
        return 0.0
    a, d = ansatz.a, ansatz.big_d
    val, _ = integrate.quad(_phase_integrand, 0.0, u, args=(a, d),
                            epsabs=1e-12, epsrel=1e-12, limit=200)
    return -(np.pi * a / (2.0 * d)) * val


def _profile_arrays(a: float, n: int):
    # theta, g = thetadot/omega, and gamma_+ on a uniform scaled-time grid.
    d = _net_rise(a)
    s = np.linspace(0.0, 1.0, n)
    th = (np.pi / d) * _f(a, s)
    g = _fp(a, s) / a
    q = np.maximum(1.0 - g * g, 0.0)
    integrand = np.empty_like(s)
    integrand[1:-1] = np.sqrt(q[1:-1]) / np.sin(th[1:-1])
    integrand[0] = integrand[-1] = (d / a) * np.sqrt(2.0 / a)
    gamma = -(np.pi * a / (2.0 * d)) * integrate.cumulative_simpson(
        integrand, x=s, initial=0.0)
    return s, th, g, gamma


def error_functional(a: float, channel: ErrorChannel) -> float:
    """Magnitude of the first-order flip error for a unit error amplitude.

    Dimensionless in both channels:

      DETUNING: |integral_0^1 exp(2i gamma_+) sin(theta) ds|
      RABI:     (2/D) |integral_0^1 exp(2i gamma_+) f'(s) sin^2(theta) ds|

    A flip designed at ``error_functional(a, ch) == 0`` is insensitive,
    to first order, to a static error in that channel.
    """
    if not (a > A_MIN):
        raise ValueError("a must exceed %.6f" % A_MIN)
    channel = ErrorChannel(channel)
    s, th, g, gamma = _profile_arrays(a, _QUAD_POINTS)
    phase = np.exp(2.0j * gamma)
    if channel is ErrorChannel.DETUNING:
        val = integrate.simpson(phase * np.sin(th), x=s)
        return float(abs(val))
    d = _net_rise(a)
    val = integrate.simpson(phase * _fp(a, s) * np.sin(th) ** 2, x=s)
    return float(2.0 * abs(val) / d)


@functools.lru_cache(maxsize=None)
def _solve_a_value(channel: ErrorChannel, a_lo: float, a_hi: float,
                   grid_step: float) -> float:
    grid = np.arange(a_lo, a_hi + 0.5 * grid_step, grid_step)
    vals = np.array([error_functional(a, channel) for a in grid])
    # Interior local minima, walked from large a (short T) downward.
    idx = [i for i in range(1, len(grid) - 1)
           if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]]
    for i in sorted(idx, key=lambda i: grid[i], reverse=True):
        res = optimize.minimize_scalar(
            error_functional, args=(channel,),
            bracket=(grid[i - 1], grid[i], grid[i + 1]),
            method="golden", options={"xtol": 1e-6})
        if res.fun < 1e-3:
            return float(res.x)
    raise RuntimeError("no zero of the %s error functional in [%g, %g]"
                       % (channel.value, a_lo, a_hi))


def solve_a(channel: ErrorChannel, omega: float = OMEGA_DEFAULT, *,
            a_lo: float = 0.36, a_hi: float = 1.5,
            grid_step: float = 0.01) -> StaAnsatz:
    """Ansatz whose first-order error in ``channel`` cancels.

    The functional has several zeros accumulating toward the a -> A_MIN
    divergence of T; the physically preferred root is the largest a
    (shortest flip), which is what a coarse scan plus golden-section
    refinement from the top finds.  The root is independent of omega.
    """
    channel = ErrorChannel(channel)
    a = _solve_a_value(channel, a_lo, a_hi, grid_step)
    return StaAnsatz(a=a, omega=omega)


def discretize(ansatz: StaAnsatz, n_steps: int) -> PulseSequence:
    """Sample the ramp into n equal-duration steps (midpoint detunings)."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    t_total = ansatz.duration
    dt = t_total / n_steps
    mids = (np.arange(n_steps) + 0.5) * dt
    deltas = np.atleast_1d(delta_of_t(ansatz, mids))
    steps = tuple(PulseStep(float(d), dt) for d in deltas)
    return PulseSequence(ansatz.omega, steps)


def write_pulse_table(seq: PulseSequence, path,
                      comments: dict | None = None) -> None:
    """Write a sequence as CSV: step index, delta/omega, duration in s."""
    with open(path, "w", newline="") as fh:
        for key in sorted(comments or {}):
            fh.write("# %s = %s\n" % (key, comments[key]))
        fh.write("# omega_rad_s = %.12e\n" % seq.omega)
        writer = csv.writer(fh)
        writer.writerow(["step", "delta_over_omega", "duration_s"])
        for i, step in enumerate(seq.steps):
            writer.writerow([i, "%.12e" % (step.delta / seq.omega),
                             "%.12e" % step.duration])


def read_pulse_table(path) -> PulseSequence:
    """Read a sequence written by ``write_pulse_table``."""
    omega = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("#").partition("=")
                if key.strip() == "omega_rad_s":
                    omega = float(value)
                continue
            rows.append(line)
    if omega is None:
        raise ValueError("pulse table lacks an omega_rad_s header")
    reader = csv.reader(rows)
    header = next(reader)
    if header != ["step", "delta_over_omega", "duration_s"]:
        raise ValueError("unrecognized pulse table columns: %r" % (header,))
    steps = tuple(PulseStep(float(r[1]) * omega, float(r[2])) for r in reader)
    return PulseSequence(omega, steps)
