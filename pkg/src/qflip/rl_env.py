"""Fixed-step pulse-programming environment for policy training.

An episode programs a digital flip: the total time is divided into
n_steps equal slices, and at slice i the agent picks an action in [0, 1]
that is decoded into a constant detuning delta = (2 a - 1) delta_max
while the Rabi amplitude stays fixed.  The observation after each step
is (<sigma_z>, previous action, elapsed time fraction); an episode
starts from |0> at observation (-1, 0.5, 0).

Two reward phases:

  PRETRAIN: dense action shaping toward a linear detuning ramp,
      r_i = -|a_i - (i-1)/(n-1)|, with the drive held at nominal.
  FINETUNE: sparse control reward, zero except a terminal bonus when the
      final <sigma_z> exceeds the success threshold; each episode draws
      fresh systematic errors (uniform in +-error_halfwidths).

State evolution runs on the propagation kernels directly so training
loops stay cheap; optional dephasing (t2) uses the RK4 path.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .dynamics import OMEGA_DEFAULT, PulseSequence, PulseStep

OBS_DIM = 3

_RHO0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128)


class Phase(Enum):
    PRETRAIN = "pretrain"
    FINETUNE = "finetune"


@dataclass(frozen=True)
class EnvConfig:
    """Episode layout, drive limits, reward phase, and error statistics."""

    n_steps: int = 20
    total_time: float = 300e-6
    omega: float = OMEGA_DEFAULT
    delta_max: float = 2.0 * OMEGA_DEFAULT
    phase: Phase = Phase.PRETRAIN
    error_halfwidths: tuple[float, float] = (0.2, 0.2)
    t2: float | None = None
    success_threshold: float = 0.997
    terminal_bonus: float = 10.0
    substeps_per_step: int = 64

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not (self.total_time > 0.0):
            raise ValueError("total_time must be positive")
        if not (self.omega > 0.0):
            raise ValueError("omega must be positive")
        if self.delta_max < 0.0:
            raise ValueError("delta_max must be >= 0")
        hw = tuple(float(h) for h in self.error_halfwidths)
        if len(hw) != 2 or any(h < 0.0 for h in hw):
            raise ValueError("error_halfwidths must be two nonnegative numbers")
        object.__setattr__(self, "error_halfwidths", hw)
        if not (0.0 < self.success_threshold < 1.0):
            raise ValueError("success_threshold must lie in (0, 1)")
        if self.t2 is not None and not (self.t2 > 0.0):
            raise ValueError("t2 must be positive when given")
        if self.substeps_per_step < 1:
            raise ValueError("substeps_per_step must be >= 1")

    @property
    def step_duration(self) -> float:
        return self.total_time / self.n_steps


@dataclass(frozen=True)
class Observation:
    """What the agent sees after a step (and at reset)."""

    sz: float
    prev_action: float
    time_frac: float

    def as_array(self) -> np.ndarray:
        return np.array([self.sz, self.prev_action, self.time_frac],
                        dtype=np.float64)


def decode_action(action: float, delta_max: float) -> float:
    """Map an action in [0, 1] onto a detuning in [-delta_max, +delta_max]."""
    if not (0.0 <= action <= 1.0):
        raise ValueError("action must lie in [0, 1]")
    return (2.0 * action - 1.0) * delta_max


def ramp_target(step_index: int, n_steps: int) -> float:
    """Pretraining target action at 1-based step i: (i-1)/(n-1)."""
    if n_steps < 2:
        return 0.0
    return (step_index - 1) / (n_steps - 1)


class FlipEnv:
    """Episodic environment; see module docstring for the contract."""

    def __init__(self, config: EnvConfig, seed=None):
        self.config = config
        self.rng = np.random.default_rng(seed)
        self._rho = _RHO0.copy()
        self._i = 0
        self._prev_action = 0.5
        self._actions: list[float] = []
        self.errors = (0.0, 0.0)

    def reset(self, errors: tuple[float, float] | None = None) -> Observation:
        """Start a fresh episode; optionally pin the systematic errors.

        When errors is None, FINETUNE episodes draw (delta_omega,
        delta_delta) uniformly from +-error_halfwidths and PRETRAIN
        episodes run at nominal.
        """
        cfg = self.config
        if errors is not None:
            self.errors = (float(errors[0]), float(errors[1]))
        elif cfg.phase is Phase.FINETUNE:
            hw = cfg.error_halfwidths
            self.errors = (float(self.rng.uniform(-hw[0], hw[0])),
                           float(self.rng.uniform(-hw[1], hw[1])))
        else:
            self.errors = (0.0, 0.0)
        self._rho = _RHO0.copy()
        self._i = 0
        self._prev_action = 0.5
        self._actions = []
        return Observation(sz=-1.0, prev_action=0.5, time_frac=0.0)

    def _evolve_step(self, delta: float) -> None:
        cfg = self.config
        d_om, d_dl = self.errors
        omega = cfg.omega * (1.0 + d_om)
        deltas = np.array([delta + d_dl * cfg.omega])
        durations = np.array([cfg.step_duration])
        if cfg.t2 is None:
            self._rho = _kernels.propagate_unitary(self._rho, omega,
                                                   deltas, durations)
        else:
            gamma = 1.0 / (2.0 * cfg.t2)
            self._rho = _kernels.propagate_lindblad(
                self._rho, omega, deltas, durations, gamma,
                cfg.substeps_per_step)

    def step(self, action: float) -> tuple[Observation, float, bool]:
        """Apply one decoded pulse slice; returns (obs, reward, done)."""
        cfg = self.config
        if self._i >= cfg.n_steps:
            raise RuntimeError("episode is over; call reset()")
        action = float(action)
        delta = decode_action(action, cfg.delta_max)
        self._evolve_step(delta)
        self._i += 1
        self._prev_action = action
        self._actions.append(action)
        sz = float(np.real(self._rho[1, 1] - self._rho[0, 0]))
        obs = Observation(sz=sz, prev_action=action,
                          time_frac=self._i / cfg.n_steps)
        done = self._i == cfg.n_steps
        if cfg.phase is Phase.PRETRAIN:
            reward = -abs(action - ramp_target(self._i, cfg.n_steps))
        else:
            reward = cfg.terminal_bonus if (done and sz > cfg.success_threshold) else 0.0
        return obs, reward, done

    def sequence(self) -> PulseSequence:
        """Nominal pulse program committed so far this episode."""
        if not self._actions:
            raise RuntimeError("no steps taken yet")
        cfg = self.config
        steps = tuple(PulseStep(decode_action(a, cfg.delta_max),
                                cfg.step_duration) for a in self._actions)
        return PulseSequence(cfg.omega, steps)


@dataclass
class RolloutResult:
    """One full episode: the program it committed and what it achieved."""

    sequence: PulseSequence
    final_sz: float
    rewards: list[float]
    actions: list[float]
    sz_trace: list[float]


def rollout(policy, config: EnvConfig, *, deterministic: bool = True,
            seed=None, errors: tuple[float, float] | None = None) -> RolloutResult:
    """Run one episode under a policy.

    ``policy`` needs an ``action(obs_array, rng=..., deterministic=...)``
    method returning a float in [0, 1].  One seed drives both the
    environment's error draw and (in stochastic mode) the action
    sampling, so a repeated call reproduces the episode exactly.
    """
    env_seed, action_seed = np.random.SeedSequence(seed).spawn(2)
    env = FlipEnv(config, seed=env_seed)
    action_rng = np.random.default_rng(action_seed)
    obs = env.reset(errors=errors)
    rewards = []
    actions = []
    sz_trace = []
    done = False
    while not done:
        action = float(policy.action(obs.as_array(), rng=action_rng,
                                     deterministic=deterministic))
        obs, reward, done = env.step(action)
        rewards.append(reward)
        actions.append(action)
        sz_trace.append(obs.sz)
    return RolloutResult(sequence=env.sequence(), final_sz=obs.sz,
                         rewards=rewards, actions=actions, sz_trace=sz_trace)


def write_trace_csv(result: RolloutResult, path) -> None:
    """Episode trace as CSV: step, action, delta/omega, <sigma_z>, reward."""
    seq = result.sequence
    with open(path, "w") as fh:
        fh.write("step,action,delta_over_omega,sz,reward\n")
        for i, (a, step, sz, r) in enumerate(zip(result.actions, seq.steps,
                                                 result.sz_trace,
                                                 result.rewards), start=1):
            fh.write("%d,%.12e,%.12e,%.12e,%.12e\n"
                     % (i, a, step.delta / seq.omega, sz, r))
