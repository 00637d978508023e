"""Phase-continuous IF waveform synthesis from pulse tables.

A sequence of detuning steps is realized on hardware by mixing a carrier
at f_c with an IF tone near f_0 - f_c.  Within segment n the IF phase
advances at the offset rate plus the programmed detuning,

    phi_n(tau) = (w0 - wc + delta_n) tau + phi_offset_n,

and each segment's starting offset is the accumulated end phase of the
previous one, so the synthesized waveform I(t) = A sin(phi(t)) is
continuous even though the frequency jumps between segments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dynamics import PulseSequence, PulseStep

# Default qubit and carrier frequencies (Hz); the IF sits at 200 MHz.
F0_DEFAULT = 12.6428e9
FC_DEFAULT = 12.4428e9


@dataclass(frozen=True)
class PhaseSegment:
    """One constant-frequency segment of the IF phase ramp."""

    delta: float          # programmed detuning, rad/s
    duration: float       # s
    phase_offset: float   # accumulated phase at segment start, rad

    def __post_init__(self):
        if not (self.duration > 0.0):
            raise ValueError("duration must be positive")


@dataclass(frozen=True)
class PhasePlan:
    """A full phase program plus the frequencies it was derived from."""

    f0_hz: float
    fc_hz: float
    omega: float
    segments: tuple[PhaseSegment, ...]

    def __post_init__(self):
        if not (self.f0_hz > self.fc_hz):
            raise ValueError("need f0 > fc (positive IF frequency)")
        if not (self.omega > 0.0):
            raise ValueError("omega must be positive")
        if not self.segments:
            raise ValueError("plan needs at least one segment")
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def if_rate(self) -> float:
        """Base IF angular rate w0 - wc in rad/s."""
        return 2.0 * np.pi * (self.f0_hz - self.fc_hz)

    @property
    def total_duration(self) -> float:
        return float(sum(seg.duration for seg in self.segments))


def build_phase_plan(seq: PulseSequence, f0_hz: float = F0_DEFAULT,
                     fc_hz: float = FC_DEFAULT) -> PhasePlan:
    """Accumulate segment phase offsets for a pulse sequence."""
    w_if = 2.0 * np.pi * (f0_hz - fc_hz)
    segments = []
    phase = 0.0
    for step in seq.steps:
        segments.append(PhaseSegment(step.delta, step.duration, phase))
        phase = phase + (w_if + step.delta) * step.duration
    return PhasePlan(f0_hz=f0_hz, fc_hz=fc_hz, omega=seq.omega,
                     segments=tuple(segments))


def plan_to_sequence(plan: PhasePlan) -> PulseSequence:
    """Recover the pulse sequence a plan was built from."""
    steps = tuple(PulseStep(seg.delta, seg.duration) for seg in plan.segments)
    return PulseSequence(plan.omega, steps)


def verify_continuity(plan: PhasePlan) -> float:
    """Largest phase jump (rad) across the plan's segment boundaries.

    Recomputes each segment's end phase and compares it with the next
    segment's stored offset; a plan built by ``build_phase_plan`` comes
    back as exactly zero.
    """
    worst = 0.0
    w_if = plan.if_rate
    for seg, nxt in zip(plan.segments[:-1], plan.segments[1:]):
        end = (w_if + seg.delta) * seg.duration + seg.phase_offset
        worst = max(worst, abs(end - nxt.phase_offset))
    return worst


def phase_at(plan: PhasePlan, t):
    """IF phase phi(t) at global time t (vectorized).

    Boundary instants belong to the following segment; by continuity the
    two evaluations agree.
    """
    t = np.asarray(t, dtype=np.float64)
    total = plan.total_duration
    if np.any(t < 0.0) or np.any(t > total * (1.0 + 1e-12)):
        raise ValueError("t must lie inside the plan duration")
    durations = np.array([seg.duration for seg in plan.segments])
    edges = np.concatenate([[0.0], np.cumsum(durations)])
    idx = np.clip(np.searchsorted(edges, t, side="right") - 1,
                  0, len(plan.segments) - 1)
    deltas = np.array([seg.delta for seg in plan.segments])
    offsets = np.array([seg.phase_offset for seg in plan.segments])
    tau = t - edges[idx]
    out = (plan.if_rate + deltas[idx]) * tau + offsets[idx]
    return out if out.shape else float(out)


@dataclass(frozen=True)
class WaveformSamples:
    """Sampled IF waveform I(t_k) = amplitude * sin(phi(t_k))."""

    sample_rate_hz: float
    amplitude: float
    times: np.ndarray
    samples: np.ndarray


def sample_waveform(plan: PhasePlan, sample_rate_hz: float,
                    amplitude: float = 1.0) -> WaveformSamples:
    """Sample the plan's waveform at a fixed rate.

    Rejects rates at or below twice the highest instantaneous frequency
    (w_if + delta)/2pi across segments.
    """
    if sample_rate_hz <= 0.0:
        raise ValueError("sample_rate_hz must be positive")
    f_max = max(abs(plan.if_rate + seg.delta) for seg in plan.segments)
    f_max /= 2.0 * np.pi
    if sample_rate_hz <= 2.0 * f_max:
        raise ValueError("sample rate %.6g Hz is not above the Nyquist rate "
                         "%.6g Hz" % (sample_rate_hz, 2.0 * f_max))
    n = int(np.floor(plan.total_duration * sample_rate_hz))
    times = np.arange(n, dtype=np.float64) / sample_rate_hz
    samples = amplitude * np.sin(phase_at(plan, times))
    return WaveformSamples(sample_rate_hz=sample_rate_hz, amplitude=amplitude,
                           times=times, samples=samples)


def write_plan_text(plan: PhasePlan, path) -> None:
    """Write a plan as structured text (12 significant digits)."""
    with open(path, "w") as fh:
        fh.write("f0_hz = %.12e\n" % plan.f0_hz)
        fh.write("fc_hz = %.12e\n" % plan.fc_hz)
        fh.write("omega_rad_s = %.12e\n" % plan.omega)
        fh.write("segments = %d\n" % len(plan.segments))
        fh.write("# delta_rad_s duration_s phase_offset_rad\n")
        for seg in plan.segments:
            fh.write("%.12e %.12e %.12e\n"
                     % (seg.delta, seg.duration, seg.phase_offset))


def write_waveform_csv(wave: WaveformSamples, plan: PhasePlan, path) -> None:
    """Write samples as CSV with a JSON metadata header line."""
    meta = {
        "f0_hz": plan.f0_hz,
        "fc_hz": plan.fc_hz,
        "omega_rad_s": plan.omega,
        "sample_rate_hz": wave.sample_rate_hz,
        "amplitude": wave.amplitude,
        "n_samples": int(wave.samples.size),
    }
    with open(path, "w") as fh:
        fh.write("# %s\n" % json.dumps(meta, sort_keys=True))
        fh.write("time_s,amplitude\n")
        for t, y in zip(wave.times, wave.samples):
            fh.write("%.12e,%.12e\n" % (t, y))
