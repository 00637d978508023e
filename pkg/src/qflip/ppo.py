"""Clipped proximal policy optimization in plain numpy.

The policy is a small MLP: a shared ReLU trunk feeding a Beta-policy
head and a scalar value head.  Actions live in (0, 1), matching the
pulse-programming environment, so a Beta(alpha, beta) policy with
alpha, beta = 1 + softplus(z) >= 1 is a natural fit (unimodal, bounded).

Training is the standard clipped-surrogate recipe: generalized
advantage estimation over fixed-length episodes, several full-batch
update epochs per collected batch, an entropy bonus, and Adam.  Forward,
backward, and the optimizer are written out explicitly; gradients of the
full loss are exact and are verified against finite differences in the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from . import checkpoint as _ckpt
from .rl_env import EnvConfig, FlipEnv, Phase, rollout


@dataclass(frozen=True)
class PpoHyperparams:
    learning_rate: float = 1e-4
    clip_epsilon: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    update_epochs: int = 4
    value_coef: float = 0.5
    entropy_coef: float = 0.01

    def __post_init__(self):
        if not (0.0 < self.clip_epsilon < 1.0):
            raise ValueError("clip_epsilon must lie in (0, 1)")
        if not (0.0 < self.discount <= 1.0):
            raise ValueError("discount must lie in (0, 1]")
        if not (0.0 <= self.gae_lambda <= 1.0):
            raise ValueError("gae_lambda must lie in [0, 1]")
        if self.update_epochs < 1:
            raise ValueError("update_epochs must be >= 1")


def _softplus(z):
    return np.logaddexp(0.0, z)


def _clip_unit(x):
    return np.clip(x, 1e-12, 1.0 - 1e-12)


def beta_log_pdf(x, alpha, beta):
    """log Beta(alpha, beta) density at x in (0, 1); vectorized."""
    x = _clip_unit(np.asarray(x, dtype=np.float64))
    return ((alpha - 1.0) * np.log(x) + (beta - 1.0) * np.log1p(-x)
            - special.betaln(alpha, beta))


def beta_entropy(alpha, beta):
    """Differential entropy of Beta(alpha, beta); vectorized."""
    s = alpha + beta
    return (special.betaln(alpha, beta)
            - (alpha - 1.0) * special.digamma(alpha)
            - (beta - 1.0) * special.digamma(beta)
            + (s - 2.0) * special.digamma(s))


def sample_action(alpha, beta, rng: np.random.Generator,
                  deterministic: bool = False) -> tuple[float, float]:
    """Draw (or take the mean) action and its log probability."""
    if deterministic:
        x = float(alpha / (alpha + beta))
    else:
        x = float(rng.beta(alpha, beta))
    x = float(_clip_unit(x))
    return x, float(beta_log_pdf(x, alpha, beta))


class PolicyNetwork:
    """Shared ReLU trunk with Beta-policy and value heads.

    Parameters live in ``self.params`` (name -> float64 array).  Layer
    weights start uniform in +-1/sqrt(fan_in); the policy head is scaled
    down by 0.01 so the initial policy is near Beta(1.7, 1.7), i.e. wide.
    """

    def __init__(self, obs_dim: int = 3, hidden: tuple[int, ...] = (32, 32, 32),
                 seed=None, params: dict[str, np.ndarray] | None = None):
        self.obs_dim = obs_dim
        self.hidden = tuple(hidden)
        if params is not None:
            self.params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
            return
        rng = np.random.default_rng(seed)
        sizes = [obs_dim, *self.hidden]
        p: dict[str, np.ndarray] = {}
        for i in range(len(self.hidden)):
            bound = 1.0 / math.sqrt(sizes[i])
            p["w%d" % (i + 1)] = rng.uniform(-bound, bound, (sizes[i], sizes[i + 1]))
            p["b%d" % (i + 1)] = rng.uniform(-bound, bound, sizes[i + 1])
        bound = 1.0 / math.sqrt(sizes[-1])
        p["wp"] = rng.uniform(-bound, bound, (sizes[-1], 2)) * 0.01
        p["bp"] = rng.uniform(-bound, bound, 2) * 0.01
        p["wv"] = rng.uniform(-bound, bound, (sizes[-1], 1))
        p["bv"] = rng.uniform(-bound, bound, 1)
        self.params = p

    def clone_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def load_params(self, params: dict[str, np.ndarray]) -> None:
        for k in self.params:
            self.params[k] = np.array(params[k], dtype=np.float64)

    def _forward_cached(self, x: np.ndarray) -> dict[str, np.ndarray]:
        p = self.params
        cache: dict[str, np.ndarray] = {"x": x}
        h = x
        for i in range(len(self.hidden)):
            z = h @ p["w%d" % (i + 1)] + p["b%d" % (i + 1)]
            h = np.maximum(z, 0.0)
            cache["z%d" % (i + 1)] = z
            cache["h%d" % (i + 1)] = h
        zp = h @ p["wp"] + p["bp"]
        zv = h @ p["wv"] + p["bv"]
        cache["zp"] = zp
        cache["alpha"] = 1.0 + _softplus(zp[:, 0])
        cache["beta"] = 1.0 + _softplus(zp[:, 1])
        cache["value"] = zv[:, 0]
        return cache

    def forward(self, obs):
        """(alpha, beta, value); obs is one observation or a batch."""
        x = np.asarray(obs, dtype=np.float64)
        single = x.ndim == 1
        cache = self._forward_cached(np.atleast_2d(x))
        a, b, v = cache["alpha"], cache["beta"], cache["value"]
        if single:
            return float(a[0]), float(b[0]), float(v[0])
        return a, b, v

    def action(self, obs, rng: np.random.Generator | None = None,
               deterministic: bool = True) -> float:
        alpha, beta, _ = self.forward(obs)
        if deterministic:
            return float(alpha / (alpha + beta))
        if rng is None:
            raise ValueError("stochastic action needs an rng")
        return sample_action(alpha, beta, rng)[0]

    def backward(self, cache, d_alpha, d_beta, d_value) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss given its partials at the heads."""
        p = self.params
        grads: dict[str, np.ndarray] = {}
        zp = cache["zp"]
        g_zp = np.stack([d_alpha * special.expit(zp[:, 0]),
                         d_beta * special.expit(zp[:, 1])], axis=1)
        g_zv = d_value[:, None]
        h_last = cache["h%d" % len(self.hidden)]
        grads["wp"] = h_last.T @ g_zp
        grads["bp"] = g_zp.sum(axis=0)
        grads["wv"] = h_last.T @ g_zv
        grads["bv"] = g_zv.sum(axis=0)
        g_h = g_zp @ p["wp"].T + g_zv @ p["wv"].T
        for i in range(len(self.hidden), 0, -1):
            g_z = g_h * (cache["z%d" % i] > 0.0)
            below = cache["h%d" % (i - 1)] if i > 1 else cache["x"]
            grads["w%d" % i] = below.T @ g_z
            grads["b%d" % i] = g_z.sum(axis=0)
            g_h = g_z @ p["w%d" % i].T
        return grads


@dataclass
class TrajectoryBatch:
    """Fixed-length episodes stacked as (episodes, steps, ...) arrays."""

    obs: np.ndarray        # (E, T, obs_dim)
    actions: np.ndarray    # (E, T)
    log_probs: np.ndarray  # (E, T)
    values: np.ndarray     # (E, T)
    rewards: np.ndarray    # (E, T)

    @property
    def n_episodes(self) -> int:
        return self.obs.shape[0]

    @property
    def n_steps(self) -> int:
        return self.obs.shape[1]


def collect_batch(policy: PolicyNetwork, env: FlipEnv, n_episodes: int,
                  rng: np.random.Generator) -> TrajectoryBatch:
    """Roll the stochastic policy for a batch of episodes."""
    t_steps = env.config.n_steps
    obs = np.empty((n_episodes, t_steps, policy.obs_dim))
    actions = np.empty((n_episodes, t_steps))
    log_probs = np.empty((n_episodes, t_steps))
    values = np.empty((n_episodes, t_steps))
    rewards = np.empty((n_episodes, t_steps))
    for e in range(n_episodes):
        ob = env.reset().as_array()
        for t in range(t_steps):
            alpha, beta, value = policy.forward(ob)
            a, lp = sample_action(alpha, beta, rng)
            obs[e, t] = ob
            actions[e, t] = a
            log_probs[e, t] = lp
            values[e, t] = value
            next_ob, reward, _ = env.step(a)
            rewards[e, t] = reward
            ob = next_ob.as_array()
    return TrajectoryBatch(obs=obs, actions=actions, log_probs=log_probs,
                           values=values, rewards=rewards)


def compute_gae(batch: TrajectoryBatch, discount: float,
                gae_lambda: float) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates and value targets, shape (E, T).

    Episodes terminate at the last step, so the bootstrap value beyond
    it is zero.
    """
    e, t = batch.rewards.shape
    adv = np.zeros((e, t))
    last = np.zeros(e)
    next_value = np.zeros(e)
    for i in range(t - 1, -1, -1):
        delta = batch.rewards[:, i] + discount * next_value - batch.values[:, i]
        last = delta + discount * gae_lambda * last
        adv[:, i] = last
        next_value = batch.values[:, i]
    returns = adv + batch.values
    return adv, returns


def loss_and_grads(policy: PolicyNetwork, obs, actions, old_log_probs,
                   advantages, returns, hp: PpoHyperparams):
    """Full clipped loss and its exact parameter gradients.

    loss = -mean(min(r A, clip(r) A)) + value_coef * mean((v - R)^2)
           - entropy_coef * mean(H)

    where r is the likelihood ratio against old_log_probs.  Advantages
    are used as given (normalize before calling for training).
    """
    obs = np.asarray(obs, dtype=np.float64)
    n = obs.shape[0]
    cache = policy._forward_cached(obs)
    alpha, beta, value = cache["alpha"], cache["beta"], cache["value"]
    x = _clip_unit(np.asarray(actions, dtype=np.float64))

    log_probs = beta_log_pdf(x, alpha, beta)
    ratio = np.exp(log_probs - old_log_probs)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - hp.clip_epsilon, 1.0 + hp.clip_epsilon) * advantages
    surr = np.minimum(unclipped, clipped)
    active = unclipped <= clipped
    policy_loss = -np.mean(surr)

    value_err = value - returns
    value_loss = np.mean(value_err ** 2)
    entropy = beta_entropy(alpha, beta)
    entropy_mean = np.mean(entropy)
    loss = policy_loss + hp.value_coef * value_loss - hp.entropy_coef * entropy_mean

    # Partials at the heads.
    d_lp = -(active * ratio * advantages) / n
    s = alpha + beta
    dig_a, dig_b, dig_s = (special.digamma(alpha), special.digamma(beta),
                           special.digamma(s))
    tri_a, tri_b, tri_s = (special.polygamma(1, alpha), special.polygamma(1, beta),
                           special.polygamma(1, s))
    dlp_da = np.log(x) - dig_a + dig_s
    dlp_db = np.log1p(-x) - dig_b + dig_s
    dh_da = -(alpha - 1.0) * tri_a + (s - 2.0) * tri_s
    dh_db = -(beta - 1.0) * tri_b + (s - 2.0) * tri_s
    d_alpha = d_lp * dlp_da - hp.entropy_coef * dh_da / n
    d_beta = d_lp * dlp_db - hp.entropy_coef * dh_db / n
    d_value = hp.value_coef * 2.0 * value_err / n

    grads = policy.backward(cache, d_alpha, d_beta, d_value)
    stats = {
        "loss": float(loss),
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(entropy_mean),
        "clip_fraction": float(np.mean(~active)),
    }
    return loss, grads, stats


class AdamState:
    """Adam with bias correction, keyed by parameter name."""

    def __init__(self, params: dict[str, np.ndarray], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray],
             grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k in sorted(params):
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def ppo_update(policy: PolicyNetwork, batch: TrajectoryBatch,
               hp: PpoHyperparams, adam: AdamState) -> dict:
    """Run the clipped-surrogate update epochs on one collected batch."""
    adv, returns = compute_gae(batch, hp.discount, hp.gae_lambda)
    flat = lambda a: a.reshape(-1, *a.shape[2:])
    obs = flat(batch.obs)
    actions = flat(batch.actions)
    old_lp = flat(batch.log_probs)
    adv = flat(adv)
    returns = flat(returns)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    stats = {}
    for _ in range(hp.update_epochs):
        _, grads, stats = loss_and_grads(policy, obs, actions, old_lp,
                                         adv, returns, hp)
        adam.step(policy.params, grads)
    stats["mean_return"] = float(batch.rewards.sum(axis=1).mean())
    return stats


@dataclass(frozen=True)
class TrainSchedule:
    """Episode budget per phase and the fine-tune threshold curriculum.

    The sparse flip bonus almost never fires at a tight success
    threshold, so fine-tuning walks through easier intermediate
    thresholds: ``threshold_stages`` lists (threshold, fraction of
    fine-tune batches) pairs.  The environment's own default threshold
    still defines success everywhere outside training.
    """

    pretrain_episodes: int = 20000
    finetune_episodes: int = 32000
    batch_episodes: int = 16
    eval_interval: int = 20   # batches between fine-tune evaluations
    threshold_stages: tuple[tuple[float, float], ...] = ((0.90, 0.6), (0.95, 0.4))

    def __post_init__(self):
        if self.batch_episodes < 1 or self.eval_interval < 1:
            raise ValueError("batch_episodes and eval_interval must be >= 1")
        if self.pretrain_episodes < 0 or self.finetune_episodes < 0:
            raise ValueError("episode counts must be >= 0")
        stages = tuple((float(t), float(f)) for t, f in self.threshold_stages)
        if not stages or any(not (0.0 < t < 1.0) or f <= 0.0 for t, f in stages):
            raise ValueError("threshold_stages needs (threshold in (0,1), "
                             "positive fraction) pairs")
        if abs(sum(f for _, f in stages) - 1.0) > 1e-9:
            raise ValueError("threshold_stages fractions must sum to 1")
        object.__setattr__(self, "threshold_stages", stages)


# Error draws probed by the fine-tune evaluation score (and reused by
# reporting): nominal plus one-at-a-time half-strength excursions.
EVAL_PROBES = ((0.0, 0.0), (0.1, 0.0), (-0.1, 0.0), (0.0, 0.1), (0.0, -0.1))


def evaluate_policy(policy: PolicyNetwork, config: EnvConfig,
                    probes=EVAL_PROBES) -> float:
    """Mean deterministic final <sigma_z> over fixed error probes."""
    scores = []
    for err in probes:
        res = rollout(policy, config, deterministic=True, seed=0, errors=err)
        scores.append(res.final_sz)
    return float(np.mean(scores))


@dataclass
class TrainResult:
    """Outcome of a two-phase training run."""

    policy: PolicyNetwork            # carries the best fine-tuned parameters
    pretrain_params: dict            # snapshot at the phase boundary
    best_eval: float
    curve: list


def train(config: EnvConfig, hp: PpoHyperparams | None = None,
          schedule: TrainSchedule | None = None, seed=0) -> TrainResult:
    """Pretrain toward the linear ramp, then fine-tune on the flip bonus.

    Deterministic for a given seed: one seed stream drives network
    initialization, the environments' error draws, and action sampling.
    The returned policy carries the parameters of the best fine-tune
    evaluation (``evaluate_policy``); the phase-boundary snapshot is
    kept alongside.
    """
    hp = hp or PpoHyperparams()
    schedule = schedule or TrainSchedule()
    ss = np.random.SeedSequence(seed)
    net_seed, pre_env_seed, fine_env_seed, action_seed = ss.spawn(4)
    policy = PolicyNetwork(seed=net_seed)
    adam = AdamState(policy.params, hp.learning_rate)
    action_rng = np.random.default_rng(action_seed)
    curve: list[dict] = []
    best = {"score": -np.inf, "params": None}

    def run_stage(phase: Phase, n_batches: int, env_seed, threshold: float,
                  label: str) -> None:
        cfg = replace(config, phase=phase, success_threshold=threshold)
        env = FlipEnv(cfg, seed=env_seed)
        for b in range(n_batches):
            batch = collect_batch(policy, env, schedule.batch_episodes, action_rng)
            stats = ppo_update(policy, batch, hp, adam)
            row = {"phase": label, "batch": b,
                   "episodes": (b + 1) * schedule.batch_episodes,
                   "eval_score": float("nan")}
            row.update({k: stats[k] for k in
                        ("mean_return", "policy_loss", "value_loss", "entropy")})
            if phase is Phase.FINETUNE and (
                    (b + 1) % schedule.eval_interval == 0 or b == n_batches - 1):
                score = evaluate_policy(policy, config)
                row["eval_score"] = score
                if score > best["score"]:
                    best["score"] = score
                    best["params"] = policy.clone_params()
            curve.append(row)

    n_pre = math.ceil(schedule.pretrain_episodes / schedule.batch_episodes)
    if n_pre:
        run_stage(Phase.PRETRAIN, n_pre, pre_env_seed,
                  config.success_threshold, "pretrain")
    pretrain_params = policy.clone_params()

    n_fine = math.ceil(schedule.finetune_episodes / schedule.batch_episodes)
    if n_fine:
        stage_seeds = fine_env_seed.spawn(len(schedule.threshold_stages))
        done = 0
        for i, ((thr, frac), sseed) in enumerate(
                zip(schedule.threshold_stages, stage_seeds)):
            last = i == len(schedule.threshold_stages) - 1
            nb = n_fine - done if last else int(round(frac * n_fine))
            run_stage(Phase.FINETUNE, nb, sseed, thr,
                      "finetune@%g" % thr)
            done += nb
    if best["params"] is not None:
        policy.load_params(best["params"])
        best_eval = best["score"]
    else:
        best_eval = evaluate_policy(policy, config)
    return TrainResult(policy=policy, pretrain_params=pretrain_params,
                       best_eval=best_eval, curve=curve)


def write_curve_csv(curve: list, path) -> None:
    """Training curve as CSV, one row per update batch."""
    cols = ["phase", "batch", "episodes", "mean_return", "policy_loss",
            "value_loss", "entropy", "eval_score"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in curve:
            fh.write(",".join(str(row[c]) for c in cols) + "\n")


def _env_meta(config: EnvConfig) -> dict:
    return {
        "n_steps": config.n_steps,
        "total_time_s": config.total_time,
        "omega_rad_s": config.omega,
        "delta_max_rad_s": config.delta_max,
        "success_threshold": config.success_threshold,
    }


def env_config_from_meta(meta: dict, phase: Phase = Phase.FINETUNE) -> EnvConfig:
    """Rebuild the env layout a checkpointed policy was trained for."""
    return EnvConfig(n_steps=int(meta["n_steps"]),
                     total_time=float(meta["total_time_s"]),
                     omega=float(meta["omega_rad_s"]),
                     delta_max=float(meta["delta_max_rad_s"]),
                     success_threshold=float(meta["success_threshold"]),
                     phase=phase)


def save_policy(path, policy: PolicyNetwork, config: EnvConfig,
                extra_meta: dict | None = None) -> None:
    """Checkpoint a policy with the env layout it was trained for."""
    meta = {"obs_dim": policy.obs_dim, "hidden": list(policy.hidden),
            "env": _env_meta(config)}
    meta.update(extra_meta or {})
    _ckpt.save_checkpoint(path, policy.params, meta)


def load_policy(path) -> tuple[PolicyNetwork, dict]:
    """Load a checkpointed policy; returns (policy, metadata)."""
    arrays, meta = _ckpt.load_checkpoint(path)
    policy = PolicyNetwork(obs_dim=int(meta.get("obs_dim", 3)),
                           hidden=tuple(meta.get("hidden", (32, 32, 32))),
                           params=arrays)
    return policy, meta
