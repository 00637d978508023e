"""Strategy comparisons: error sweeps, dephasing scans, and feedback.

Five flip strategies are compared on the same footing:

  PI_PULSE       resonant square pulse of duration pi/omega
  STA_DETUNING   invariant-engineered ramp, detuning-error optimal
  STA_RABI       invariant-engineered ramp, Rabi-error optimal
  DRL_POLICY     a trained policy unrolled open loop (fixed program)
  FEEDBACK_DRL   the same policy driven by per-cycle measurements

Sweeps evaluate the flip probability of each strategy's program over
grids of systematic errors, optionally through the thresholded detector
(``shots``), under dephasing, or repeated back to back.  Per-point
randomness is seeded from (seed, point index), so results do not depend
on evaluation order or thread count.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import ppo, sta
from .dynamics import (OMEGA_DEFAULT, ErrorModel, PulseSequence, PulseStep,
                       QubitState, evolve_lindblad, evolve_unitary,
                       expectation_z, flip_probability)
from .measurement import DetectorModel, PopulationEstimate, estimate_population
from .rl_env import EnvConfig, Phase, decode_action, rollout


class MethodKind(Enum):
    PI_PULSE = "pi_pulse"
    STA_DETUNING = "sta_detuning"
    STA_RABI = "sta_rabi"
    DRL_POLICY = "drl_policy"
    FEEDBACK_DRL = "feedback_drl"


@dataclass(frozen=True)
class Method:
    """A strategy choice; DRL variants carry their policy checkpoint."""

    kind: MethodKind
    checkpoint: str | None = None

    def __post_init__(self):
        needs = self.kind in (MethodKind.DRL_POLICY, MethodKind.FEEDBACK_DRL)
        if needs and not self.checkpoint:
            raise ValueError("%s needs a checkpoint path" % self.kind.value)
        if not needs and self.checkpoint:
            raise ValueError("%s does not take a checkpoint" % self.kind.value)


class ErrorAxis(Enum):
    RABI = "rabi_error"
    DETUNING = "detuning_error"


class DephasingMode(Enum):
    RABI_TIME = "rabi_time"        # slow the drive down k-fold
    FLIP_REPETITION = "flip_repetition"  # apply the flip m times


# Number of steps used to discretize the analog ramps for evaluation.
STA_EVAL_STEPS = 1024


def pi_pulse(omega: float = OMEGA_DEFAULT) -> PulseSequence:
    """Resonant flip: one zero-detuning step of duration pi/omega."""
    return PulseSequence(omega, (PulseStep(0.0, np.pi / omega),))


def _load_policy_env(method: Method):
    policy, meta = ppo.load_policy(method.checkpoint)
    config = ppo.env_config_from_meta(meta["env"], phase=Phase.FINETUNE)
    return policy, config


def build_sequence(method: Method, omega: float = OMEGA_DEFAULT,
                   sta_steps: int = STA_EVAL_STEPS) -> PulseSequence:
    """The fixed program a method plays open loop.

    FEEDBACK_DRL has no fixed program (it reacts to measurements), so it
    is rejected here; sweeps handle it point by point.
    """
    if method.kind is MethodKind.PI_PULSE:
        return pi_pulse(omega)
    if method.kind is MethodKind.STA_DETUNING:
        return sta.discretize(sta.solve_a(sta.ErrorChannel.DETUNING, omega), sta_steps)
    if method.kind is MethodKind.STA_RABI:
        return sta.discretize(sta.solve_a(sta.ErrorChannel.RABI, omega), sta_steps)
    if method.kind is MethodKind.DRL_POLICY:
        policy, config = _load_policy_env(method)
        res = rollout(policy, config, deterministic=True, errors=(0.0, 0.0))
        return res.sequence
    raise ValueError("feedback strategies have no fixed open-loop sequence")


def _true_state(seq: PulseSequence, err: ErrorModel, substeps: int) -> QubitState:
    state = QubitState.ground()
    if err.t2 is None:
        return evolve_unitary(state, seq, err)
    return evolve_lindblad(state, seq, err, substeps)


def _true_flip(seq: PulseSequence, err: ErrorModel, substeps: int) -> float:
    return flip_probability(_true_state(seq, err, substeps))


def _point_rng(seed, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


@dataclass
class SweepResult:
    """Grid evaluation of one method.

    values holds the quantity named by value_label ("p_hat" for flip
    probabilities, "log10_infidelity" for hybrid maps, "p_success" for
    repetition targets); std is the per-point standard error when shots
    were simulated, else zeros.
    """

    method: str
    axes: tuple[str, ...]
    grid: tuple[np.ndarray, ...]
    values: np.ndarray
    std: np.ndarray
    value_label: str
    n_shots: int
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            for key in sorted(self.metadata):
                fh.write("# %s = %s\n" % (key, self.metadata[key]))
            fh.write("# method = %s\n" % self.method)
            fh.write("# n_shots = %d\n" % self.n_shots)
            writer = csv.writer(fh)
            writer.writerow(list(self.axes) + [self.value_label, "std"])
            if len(self.axes) == 1:
                for x, v, s in zip(self.grid[0], self.values, self.std):
                    writer.writerow(["%.12e" % x, "%.12e" % v, "%.12e" % s])
            else:
                for i, x in enumerate(self.grid[0]):
                    for j, y in enumerate(self.grid[1]):
                        writer.writerow(["%.12e" % x, "%.12e" % y,
                                         "%.12e" % self.values[i, j],
                                         "%.12e" % self.std[i, j]])


def _map_points(fn, n_points: int, n_threads: int):
    if n_threads <= 1:
        return [fn(i) for i in range(n_points)]
    with ThreadPoolExecutor(max_workers=n_threads) as ex:
        return list(ex.map(fn, range(n_points)))


def _estimate(p: float, detector: DetectorModel | None, shots: int | None,
              rng) -> tuple[float, float]:
    if shots is None:
        return p, 0.0
    det = detector or DetectorModel()
    est = estimate_population(p, det, shots, rng)
    return est.p_hat, est.std_error


def sweep_1d(method: Method, axis: ErrorAxis, grid, *,
             omega: float = OMEGA_DEFAULT, shots: int | None = None,
             detector: DetectorModel | None = None, t2: float | None = None,
             substeps: int = 64, seed=0, n_threads: int = 1,
             feedback_shots: int | None = None,
             sta_steps: int = STA_EVAL_STEPS) -> SweepResult:
    """Flip probability along one systematic-error axis.

    Grid values are dimensionless: fractional Rabi amplitude error, or
    static detuning offset in units of omega.  shots=None reports exact
    probabilities; otherwise each point simulates a shot batch through
    the detector.  FEEDBACK_DRL runs its measurement-driven protocol at
    every point (feedback_shots per cycle; None for the ideal
    estimator).
    """
    grid = np.asarray(grid, dtype=np.float64)
    axis = ErrorAxis(axis)
    feedback = method.kind is MethodKind.FEEDBACK_DRL
    if feedback:
        policy, config = _load_policy_env(method)
        config = _replace_omega(config, omega)
    else:
        seq = build_sequence(method, omega, sta_steps)

    def err_at(g: float) -> ErrorModel:
        if axis is ErrorAxis.RABI:
            return ErrorModel(delta_omega=g, t2=t2)
        return ErrorModel(delta_delta=g, t2=t2)

    def point(i: int) -> tuple[float, float]:
        err = err_at(float(grid[i]))
        rng = _point_rng(seed, i)
        if feedback:
            fb = feedback_protocol(policy, config, err=err,
                                   detector=detector or DetectorModel(),
                                   shots_per_cycle=feedback_shots,
                                   seed=(seed, i), substeps=substeps)
            p = _true_flip(fb.sequence, err, substeps)
        else:
            p = _true_flip(seq, err, substeps)
        return _estimate(p, detector, shots, rng)

    out = _map_points(point, len(grid), n_threads)
    values = np.array([v for v, _ in out])
    std = np.array([s for _, s in out])
    return SweepResult(method=method.kind.value, axes=(axis.value,),
                       grid=(grid,), values=values, std=std,
                       value_label="p_hat", n_shots=shots or 0,
                       metadata={"omega_rad_s": omega, "seed": seed,
                                 "t2_s": t2 if t2 is not None else ""})


# Hybrid maps report log10(1 - p); probabilities above 1 - CLAMP are
# clamped so exact flips do not produce -inf.
HYBRID_CLAMP = 1e-6


def sweep_hybrid(method: Method, rabi_grid, detuning_grid, *,
                 omega: float = OMEGA_DEFAULT, shots: int | None = None,
                 detector: DetectorModel | None = None, seed=0,
                 n_threads: int = 1,
                 sta_steps: int = STA_EVAL_STEPS) -> SweepResult:
    """log10 flip infidelity over a 2-D grid of simultaneous errors."""
    rabi_grid = np.asarray(rabi_grid, dtype=np.float64)
    detuning_grid = np.asarray(detuning_grid, dtype=np.float64)
    seq = build_sequence(method, omega, sta_steps)
    nx, ny = len(rabi_grid), len(detuning_grid)

    def point(i: int) -> tuple[float, float]:
        err = ErrorModel(delta_omega=float(rabi_grid[i // ny]),
                         delta_delta=float(detuning_grid[i % ny]))
        p = _true_flip(seq, err, 64)
        p_hat, std = _estimate(p, detector, shots, _point_rng(seed, i))
        return np.log10(max(1.0 - p_hat, HYBRID_CLAMP)), std

    out = _map_points(point, nx * ny, n_threads)
    values = np.array([v for v, _ in out]).reshape(nx, ny)
    std = np.array([s for _, s in out]).reshape(nx, ny)
    return SweepResult(method=method.kind.value,
                       axes=(ErrorAxis.RABI.value, ErrorAxis.DETUNING.value),
                       grid=(rabi_grid, detuning_grid), values=values,
                       std=std, value_label="log10_infidelity",
                       n_shots=shots or 0,
                       metadata={"omega_rad_s": omega, "seed": seed,
                                 "clamp": HYBRID_CLAMP})


def sweep_dephasing(method: Method, mode: DephasingMode, grid, *, t2: float,
                    omega: float = OMEGA_DEFAULT, shots: int | None = None,
                    detector: DetectorModel | None = None, substeps: int = 64,
                    seed=0, n_threads: int = 1,
                    sta_steps: int = STA_EVAL_STEPS) -> SweepResult:
    """Dephasing cost of a strategy, two ways.

    RABI_TIME: slow the whole program down k-fold (omega/k, delta/k,
    durations x k); coherent dynamics are unchanged, only dephasing
    accumulates.  Grid holds the k factors.

    FLIP_REPETITION: apply the program m times back to back and report
    the probability of ending in the parity-correct target (|1> for odd
    m, |0> for even).  Grid holds the integer repeat counts.
    """
    mode = DephasingMode(mode)
    grid = np.asarray(grid, dtype=np.float64)
    base = build_sequence(method, omega, sta_steps)
    err = ErrorModel(t2=t2)

    def point(i: int) -> tuple[float, float]:
        g = float(grid[i])
        if mode is DephasingMode.RABI_TIME:
            if g <= 0.0:
                raise ValueError("time-scaling factors must be positive")
            seq = base.scaled(g)
            p = _true_flip(seq, err, substeps)
        else:
            m = int(round(g))
            if m < 1 or m != g:
                raise ValueError("repeat counts must be positive integers")
            seq = base.repeated(m)
            p1 = _true_flip(seq, err, substeps)
            p = p1 if m % 2 == 1 else 1.0 - p1
        return _estimate(p, detector, shots, _point_rng(seed, i))

    out = _map_points(point, len(grid), n_threads)
    values = np.array([v for v, _ in out])
    std = np.array([s for _, s in out])
    label = "p_hat" if mode is DephasingMode.RABI_TIME else "p_success"
    return SweepResult(method=method.kind.value, axes=(mode.value,),
                       grid=(grid,), values=values, std=std,
                       value_label=label, n_shots=shots or 0,
                       metadata={"omega_rad_s": omega, "seed": seed,
                                 "t2_s": t2})


def _replace_omega(config: EnvConfig, omega: float) -> EnvConfig:
    if config.omega == omega:
        return config
    raise ValueError("checkpoint was trained at omega = %.6g rad/s, not %.6g"
                     % (config.omega, omega))


@dataclass(frozen=True)
class FeedbackCycle:
    """One committed action and the measurement that preceded it."""

    cycle: int
    measured_sz: float
    action: float


@dataclass
class FeedbackResult:
    """Outcome of a measurement-driven episode."""

    sequence: PulseSequence
    estimate: PopulationEstimate
    cycles: list[FeedbackCycle]


def feedback_protocol(policy, config: EnvConfig, *,
                      err: ErrorModel = ErrorModel(),
                      detector: DetectorModel | None = None,
                      shots_per_cycle: int | None = None, seed=0,
                      substeps: int = 64,
                      final_shots: int | None = None) -> FeedbackResult:
    """Drive a policy with measured populations instead of simulated ones.

    The first action is committed blind from the known start (sz = -1).
    Each later cycle replays the committed prefix on the true (errored)
    system, estimates <sigma_z> from ``shots_per_cycle`` detector shots
    (or exactly, when None), and feeds that to the policy for the next
    action; an n-step program commits after n - 1 measurement cycles.
    The returned estimate measures the finished program with
    ``final_shots`` (defaulting to shots_per_cycle).
    """
    det = detector or DetectorModel()
    n = config.n_steps
    dt = config.step_duration
    actions: list[float] = []
    cycles: list[FeedbackCycle] = []

    first = float(policy.action(np.array([-1.0, 0.5, 0.0]), deterministic=True))
    actions.append(first)
    cycles.append(FeedbackCycle(cycle=0, measured_sz=-1.0, action=first))

    for cycle in range(1, n):
        steps = tuple(PulseStep(decode_action(a, config.delta_max), dt)
                      for a in actions)
        prefix = PulseSequence(config.omega, steps)
        state = _true_state(prefix, err, substeps)
        if shots_per_cycle is None:
            sz_hat = expectation_z(state)
        else:
            rng = _point_rng(seed, cycle)
            est = estimate_population(flip_probability(state), det,
                                      shots_per_cycle, rng)
            sz_hat = 2.0 * est.p_hat - 1.0
        obs = np.array([sz_hat, actions[-1], cycle / n])
        act = float(policy.action(obs, deterministic=True))
        actions.append(act)
        cycles.append(FeedbackCycle(cycle=cycle, measured_sz=sz_hat, action=act))

    steps = tuple(PulseStep(decode_action(a, config.delta_max), dt)
                  for a in actions)
    seq = PulseSequence(config.omega, steps)
    p_final = _true_flip(seq, err, substeps)
    final_shots = final_shots if final_shots is not None else shots_per_cycle
    if final_shots is None:
        estimate = PopulationEstimate(p_hat=p_final, std_error=0.0, n_shots=0)
    else:
        rng = _point_rng(seed, n)
        estimate = estimate_population(p_final, det, final_shots, rng)
    return FeedbackResult(sequence=seq, estimate=estimate, cycles=cycles)


def write_feedback_csv(result: FeedbackResult, path, metadata: dict | None = None) -> None:
    """Cycle log as CSV: cycle, measured <sigma_z>, committed action."""
    with open(path, "w", newline="") as fh:
        for key in sorted(metadata or {}):
            fh.write("# %s = %s\n" % (key, metadata[key]))
        fh.write("# final_p_hat = %.12e\n" % result.estimate.p_hat)
        fh.write("# final_std_error = %.12e\n" % result.estimate.std_error)
        writer = csv.writer(fh)
        writer.writerow(["cycle", "measured_sz", "action"])
        for c in result.cycles:
            writer.writerow([c.cycle, "%.12e" % c.measured_sz, "%.12e" % c.action])
