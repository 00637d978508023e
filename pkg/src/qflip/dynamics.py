"""Two-level dynamics under piecewise-constant drives.

Model: a qubit driven at fixed Rabi frequency omega with a programmable
detuning delta(t) that is constant over each step,

    H(t)/hbar = (omega/2) sigma_x + (delta(t)/2) sigma_z.

Basis ordering is (|0>, |1>) with sigma_z |1> = +|1>, i.e.
sigma_z = diag(-1, +1), so the ground state has <sigma_z> = -1 and a
perfect flip reaches <sigma_z> = +1.

Coherent evolution uses the exact per-step propagator; pure dephasing
(coherence time t2) uses fixed-step RK4 on the master equation

    d(rho)/dt = -i [H, rho]/hbar + gamma_phi (sigma_z rho sigma_z - rho)

with gamma_phi = 1/(2 t2), which decays rho_01 like exp(-t/t2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

# Default drive amplitude (rad/s) shared by the design, training, and
# benchmarking defaults: a 3.3 kHz Rabi frequency.
OMEGA_DEFAULT = 2.0 * np.pi * 3300.0

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=np.complex128)

_TRACE_TOL = 1e-12
_HERM_TOL = 1e-12
_EIG_TOL = 1e-10


@dataclass(frozen=True)
class PulseStep:
    """One constant-detuning segment: detuning in rad/s, duration in s."""

    delta: float
    duration: float

    def __post_init__(self):
        if not np.isfinite(self.delta):
            raise ValueError("delta must be finite")
        if not (self.duration > 0.0 and np.isfinite(self.duration)):
            raise ValueError("duration must be positive and finite")


@dataclass(frozen=True)
class PulseSequence:
    """A drive program: nominal Rabi frequency plus ordered detuning steps."""

    omega: float
    steps: tuple[PulseStep, ...]

    def __post_init__(self):
        if not (self.omega > 0.0 and np.isfinite(self.omega)):
            raise ValueError("omega must be positive and finite")
        steps = tuple(self.steps)
        if not steps:
            raise ValueError("sequence needs at least one step")
        object.__setattr__(self, "steps", steps)

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.steps))

    def deltas(self) -> np.ndarray:
        return np.array([s.delta for s in self.steps], dtype=np.float64)

    def durations(self) -> np.ndarray:
        return np.array([s.duration for s in self.steps], dtype=np.float64)

    def repeated(self, m: int) -> "PulseSequence":
        """The same program applied back to back m times."""
        if m < 1:
            raise ValueError("m must be >= 1")
        return PulseSequence(self.omega, self.steps * m)

    def scaled(self, k: float) -> "PulseSequence":
        """Slow the drive down by k: omega/k, deltas/k, durations * k.

        The coherent dynamics are invariant under this rescaling; only
        incoherent processes notice the longer wall-clock time.
        """
        if not (k > 0.0 and np.isfinite(k)):
            raise ValueError("k must be positive and finite")
        steps = tuple(PulseStep(s.delta / k, s.duration * k) for s in self.steps)
        return PulseSequence(self.omega / k, steps)


@dataclass(frozen=True)
class ErrorModel:
    """Systematic drive errors and optional dephasing.

    delta_omega: fractional Rabi amplitude error, omega -> omega (1 + delta_omega).
    delta_delta: static detuning offset in units of omega, delta -> delta + delta_delta * omega.
    t2: coherence time in seconds, or None for closed evolution.
    """

    delta_omega: float = 0.0
    delta_delta: float = 0.0
    t2: float | None = None

    def __post_init__(self):
        if self.delta_omega <= -1.0:
            raise ValueError("delta_omega must keep the drive amplitude positive")
        if self.t2 is not None and not (self.t2 > 0.0):
            raise ValueError("t2 must be positive when given")

    def apply(self, seq: PulseSequence) -> tuple[float, np.ndarray, np.ndarray]:
        """Perturbed (omega, deltas, durations) arrays for a sequence."""
        omega = seq.omega * (1.0 + self.delta_omega)
        deltas = seq.deltas() + self.delta_delta * seq.omega
        return omega, deltas, seq.durations()


class QubitState:
    """A validated 2x2 density matrix.

    Construction checks trace one, hermiticity, and positivity (up to
    small numerical tolerances) so downstream code can trust the state.
    """

    __slots__ = ("rho",)

    def __init__(self, rho):
        rho = np.asarray(rho, dtype=np.complex128)
        if rho.shape != (2, 2):
            raise ValueError("state must be a 2x2 matrix")
        if abs(np.trace(rho) - 1.0) > _TRACE_TOL:
            raise ValueError("state trace deviates from 1 by more than %g" % _TRACE_TOL)
        if np.max(np.abs(rho - rho.conj().T)) > _HERM_TOL:
            raise ValueError("state is not hermitian within %g" % _HERM_TOL)
        evals = np.linalg.eigvalsh(rho)
        if evals[0] < -_EIG_TOL or evals[-1] > 1.0 + _EIG_TOL:
            raise ValueError("state eigenvalues outside [0, 1]")
        self.rho = rho

    @classmethod
    def ground(cls) -> "QubitState":
        return cls(np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128))

    @classmethod
    def excited(cls) -> "QubitState":
        return cls(np.array([[0.0, 0.0], [0.0, 1.0]], dtype=np.complex128))

    @classmethod
    def from_ket(cls, ket) -> "QubitState":
        ket = np.asarray(ket, dtype=np.complex128).reshape(2)
        norm = np.linalg.norm(ket)
        if norm == 0.0:
            raise ValueError("ket must be nonzero")
        ket = ket / norm
        return cls(np.outer(ket, ket.conj()))

    def __repr__(self):
        return "QubitState(%r)" % (self.rho,)


def step_unitary(omega: float, delta: float, dt: float) -> np.ndarray:
    """Exact single-step propagator (see module docstring for conventions)."""
    if dt < 0.0:
        raise ValueError("dt must be >= 0")
    return _kernels.step_unitary(float(omega), float(delta), float(dt))


def evolve_unitary(state: QubitState, seq: PulseSequence,
                   err: ErrorModel | None = None) -> QubitState:
    """Closed evolution of a state through a sequence with drive errors.

    err.t2 must be None here; dephasing needs ``evolve_lindblad``.
    """
    err = err or ErrorModel()
    if err.t2 is not None:
        raise ValueError("evolve_unitary is for closed dynamics; use evolve_lindblad for t2")
    omega, deltas, durations = err.apply(seq)
    rho = _kernels.propagate_unitary(state.rho, omega, deltas, durations)
    return QubitState(rho)


def evolve_lindblad(state: QubitState, seq: PulseSequence, err: ErrorModel,
                    substeps_per_step: int = 64) -> QubitState:
    """Evolution with pure dephasing (err.t2 required).

    substeps_per_step sets the RK4 resolution within each sequence step;
    the integrator converges at fourth order, so doubling it shrinks the
    error roughly 16x.  Raises if the integrated trace drifts past 1e-8.
    """
    if err.t2 is None:
        raise ValueError("evolve_lindblad needs err.t2; use evolve_unitary for closed dynamics")
    if substeps_per_step < 1:
        raise ValueError("substeps_per_step must be >= 1")
    omega, deltas, durations = err.apply(seq)
    gamma = 1.0 / (2.0 * err.t2)
    rho = _kernels.propagate_lindblad(state.rho, omega, deltas, durations,
                                      gamma, int(substeps_per_step))
    drift = abs(np.trace(rho) - 1.0)
    if drift > 1e-8:
        raise RuntimeError("trace drifted by %.3e during integration; "
                           "increase substeps_per_step" % drift)
    # RK4 keeps the trace to rounding but accumulates tiny drift; pin it.
    rho = rho / np.trace(rho).real
    return QubitState(rho)


def expectation_z(state: QubitState) -> float:
    """<sigma_z> of a state (-1 for |0>, +1 for |1>)."""
    return float(np.real(state.rho[1, 1] - state.rho[0, 0]))


def flip_probability(state: QubitState) -> float:
    """Population of |1>, clipped to [0, 1] against rounding."""
    return float(min(1.0, max(0.0, np.real(state.rho[1, 1]))))


def rabi_flip_probability(omega: float, delta: float, t: float | np.ndarray):
    """Analytic |0> -> |1> probability for a constant drive.

    P(t) = omega^2/(omega^2+delta^2) * sin^2(sqrt(omega^2+delta^2) t / 2).
    Vectorized over t.
    """
    w2 = omega * omega + delta * delta
    if w2 == 0.0:
        return np.zeros_like(np.asarray(t, dtype=np.float64))
    w = np.sqrt(w2)
    t = np.asarray(t, dtype=np.float64)
    out = (omega * omega / w2) * np.sin(0.5 * w * t) ** 2
    return out if out.shape else float(out)
