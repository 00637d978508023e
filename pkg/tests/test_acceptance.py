"""End-to-end acceptance checks.

Each test prints one [PASS]/[FAIL] line (echoed in the terminal summary)
and asserts the criterion at its stated tolerance:

  1  ramp parameter recovery        8  PPO gradient correctness
  2  flip duration recovery         9  dephasing integrator oracle
  3  peak detuning magnitudes      10  repetition degradation
  4  zero-error ramp flip          11  feedback consistency
  5  analytic propagator oracles   12  waveform phase continuity
  6  robustness ordering           13  SPAM arithmetic
  7  policy training success
"""

import time
from dataclasses import replace

import numpy as np
import pytest

import conftest
from conftest import ppo_gradcheck_worst
from test_kernels import reference_step

from qflip import _kernels, sta
from qflip.bench import (
    DephasingMode,
    Method,
    MethodKind,
    feedback_protocol,
    pi_pulse,
    sweep_dephasing,
)
from qflip.dynamics import (
    OMEGA_DEFAULT,
    ErrorModel,
    PulseSequence,
    PulseStep,
    QubitState,
    evolve_lindblad,
    evolve_unitary,
    flip_probability,
    rabi_flip_probability,
)
from qflip.measurement import DetectorModel, spam_errors
from qflip.ppo import PolicyNetwork, train
from qflip.rl_env import EnvConfig, Phase, ramp_target, rollout
from qflip.waveform import build_phase_plan, sample_waveform, verify_continuity

TRAIN_SEEDS = (0, 1, 2)


def _report(num: int, ok: bool, text: str) -> None:
    line = "[%s] criterion %2d: %s" % ("PASS" if ok else "FAIL", num, text)
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def solved():
    """Fresh ramp-parameter solves with their wall-clock times."""
    sta._solve_a_value.cache_clear()
    out = {}
    for name, channel in (("detuning", sta.ErrorChannel.DETUNING),
                          ("rabi", sta.ErrorChannel.RABI)):
        t0 = time.monotonic()
        ansatz = sta.solve_a(channel)
        out[name] = (ansatz, time.monotonic() - t0)
    return out


def _seed_verdict(seed: int) -> dict:
    """Train one seed with the declared defaults and score it."""
    config = EnvConfig()
    t0 = time.monotonic()
    result = train(config, seed=seed)
    runtime = time.monotonic() - t0

    pre = PolicyNetwork(params=result.pretrain_params)
    pre_cfg = replace(config, phase=Phase.PRETRAIN)
    ramp = rollout(pre, pre_cfg, deterministic=True, errors=(0.0, 0.0))
    targets = [ramp_target(i, config.n_steps)
               for i in range(1, config.n_steps + 1)]
    ramp_dev = float(np.mean(np.abs(np.array(ramp.actions) - targets)))

    fine_cfg = replace(config, phase=Phase.FINETUNE)
    zero_sz = rollout(result.policy, fine_cfg, deterministic=True,
                      errors=(0.0, 0.0)).final_sz

    rng = np.random.default_rng(np.random.SeedSequence((777, seed)))
    draws = rng.uniform(-0.1, 0.1, size=(100, 2))
    pi_seq = pi_pulse(config.omega)
    drl_infids = []
    pi_infids = []
    for d_om, d_dl in draws:
        res = rollout(result.policy, fine_cfg, deterministic=True,
                      errors=(float(d_om), float(d_dl)))
        drl_infids.append(1.0 - 0.5 * (res.final_sz + 1.0))
        err = ErrorModel(delta_omega=float(d_om), delta_delta=float(d_dl))
        p_pi = flip_probability(evolve_unitary(QubitState.ground(), pi_seq, err))
        pi_infids.append(1.0 - p_pi)
    drl_mean = float(np.mean(drl_infids))
    pi_mean = float(np.mean(pi_infids))

    return {
        "seed": seed,
        "policy": result.policy,
        "config": fine_cfg,
        "runtime_s": runtime,
        "ramp_dev": ramp_dev,
        "zero_sz": zero_sz,
        "drl_mean_infid": drl_mean,
        "pi_mean_infid": pi_mean,
        "passed": (ramp_dev < 0.05 and zero_sz > 0.997
                   and drl_mean < pi_mean and runtime < 1800.0),
    }


@pytest.fixture(scope="module")
def trained():
    """Seed verdicts, stopping at the first fully passing seed."""
    verdicts = []
    for seed in TRAIN_SEEDS:
        verdicts.append(_seed_verdict(seed))
        if verdicts[-1]["passed"]:
            break
    return verdicts


def test_criterion_01_ramp_parameter_recovery(solved):
    (a_det, t_det) = solved["detuning"]
    (a_rabi, t_rabi) = solved["rabi"]
    ok = (abs(a_det.a - 0.604) <= 0.01 and abs(a_rabi.a - 0.728) <= 0.01
          and t_det < 30.0 and t_rabi < 30.0)
    _report(1, ok,
            "solve_a gives a=%.6f (detuning, want 0.604+-0.01, %.2fs) and "
            "a=%.6f (rabi, want 0.728+-0.01, %.2fs)"
            % (a_det.a, t_det, a_rabi.a, t_rabi))


def test_criterion_02_flip_duration_recovery(solved):
    t_det = solved["detuning"][0].duration
    t_rabi = solved["rabi"][0].duration
    ok = (abs(t_det / 364e-6 - 1.0) < 0.02
          and abs(t_rabi / 293e-6 - 1.0) < 0.02)
    _report(2, ok,
            "durations %.2f us (want 364 us +-2%%) and %.2f us "
            "(want 293 us +-2%%) at omega/2pi = 3.3 kHz"
            % (t_det * 1e6, t_rabi * 1e6))


def test_criterion_03_peak_detuning(solved):
    peaks = {}
    for name in ("detuning", "rabi"):
        ansatz = solved[name][0]
        t = np.linspace(0.0, ansatz.duration, 8001)
        peaks[name] = float(np.max(np.abs(sta.delta_of_t(ansatz, t)))
                            / ansatz.omega)
    ok = (abs(peaks["detuning"] - 1.5) <= 0.05
          and abs(peaks["rabi"] - 1.7) <= 0.05)
    _report(3, ok,
            "max|delta|/omega = %.4f (want 1.5+-0.05) and %.4f "
            "(want 1.7+-0.05)" % (peaks["detuning"], peaks["rabi"]))


def test_criterion_04_zero_error_ramp_flip(solved):
    worst_dense = 0.0
    worst_coarse = 0.0
    for name in ("detuning", "rabi"):
        ansatz = solved[name][0]
        for n, bucket in ((4096, "dense"), (20, "coarse")):
            seq = sta.discretize(ansatz, n)
            p = flip_probability(evolve_unitary(QubitState.ground(), seq))
            if bucket == "dense":
                worst_dense = max(worst_dense, 1.0 - p)
            else:
                worst_coarse = max(worst_coarse, 1.0 - p)
    ok = worst_dense < 1e-3 and worst_coarse < 1e-2
    _report(4, ok,
            "zero-error infidelity %.2e dense/4096 steps (< 1e-3) and "
            "%.2e at 20 steps (< 1e-2)" % (worst_dense, worst_coarse))


def test_criterion_05_analytic_propagator_oracles():
    omega = OMEGA_DEFAULT
    worst_formula = 0.0
    for g in np.linspace(-2.0, 2.0, 10):
        for frac in np.linspace(0.1, 2.0, 10):
            t = frac * np.pi / omega
            seq = PulseSequence(omega, (PulseStep(g * omega, t),))
            p = flip_probability(evolve_unitary(QubitState.ground(), seq))
            want = rabi_flip_probability(omega, g * omega, t)
            worst_formula = max(worst_formula, abs(p - want))

    rng = np.random.default_rng(12345)
    worst_series = 0.0
    for _ in range(100):
        om = rng.uniform(1e3, 5e4)
        dl = rng.uniform(-5e4, 5e4)
        dt = rng.uniform(0.0, 6.0 / np.hypot(om, dl))
        got = _kernels.step_unitary(om, dl, dt)
        worst_series = max(worst_series,
                           float(np.max(np.abs(got - reference_step(om, dl, dt)))))
    ok = worst_formula < 1e-9 and worst_series < 1e-10
    _report(5, ok,
            "flip probability vs closed form %.2e over 100-point grid "
            "(< 1e-9); step propagator vs series expm %.2e (< 1e-10)"
            % (worst_formula, worst_series))


def test_criterion_06_robustness_ordering(solved):
    results = {}
    for name, channel in (("detuning", "delta_delta"), ("rabi", "delta_omega")):
        seq = sta.discretize(solved[name][0], 1024)
        pi_seq = pi_pulse(seq.omega)
        for sign in (+1.0, -1.0):
            err = ErrorModel(**{channel: sign * 0.2})
            p_sta = flip_probability(evolve_unitary(QubitState.ground(), seq, err))
            p_pi = flip_probability(evolve_unitary(QubitState.ground(), pi_seq, err))
            results[(name, sign)] = (p_sta, p_pi)
    ok = all(p_sta > p_pi for p_sta, p_pi in results.values())
    detail = "; ".join(
        "%s %+0.1f: %.5f vs %.5f" % (name, sign, p_sta, p_pi)
        for (name, sign), (p_sta, p_pi) in sorted(results.items())
    )
    _report(6, ok, "flip probability ramp vs pi pulse at |error| = 0.2, "
                   "noiseless: " + detail)


def test_criterion_07_policy_training_success(trained):
    ok = any(v["passed"] for v in trained)
    detail = "; ".join(
        "seed %d: ramp_dev %.4f, zero-error sz %.5f, mean infid %.5f vs "
        "pi %.5f, %.0fs" % (v["seed"], v["ramp_dev"], v["zero_sz"],
                            v["drl_mean_infid"], v["pi_mean_infid"],
                            v["runtime_s"])
        for v in trained
    )
    _report(7, ok, "declared defaults, need ramp_dev < 0.05, sz > 0.997, "
                   "infidelity below pi pulse on >= 1 of seeds %s: %s"
                   % (list(TRAIN_SEEDS), detail))


def test_criterion_08_gradient_correctness():
    worst = ppo_gradcheck_worst(n_minibatches=10, seed=2024)
    _report(8, worst < 1e-4,
            "max relative gradient error %.3e on 10 random mini-batches "
            "(< 1e-4)" % worst)


def test_criterion_09_dephasing_oracle():
    t2 = 0.35e-3
    gamma = 1.0 / (2.0 * t2)
    delta = 2.0 * np.pi * 300.0
    t = t2
    rho0 = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    out = _kernels.propagate_lindblad(rho0, 0.0, np.array([delta]),
                                      np.array([t]), gamma, 64)
    decay_err = abs(abs(out[0, 1]) - 0.5 * np.exp(-t / t2))

    seq = PulseSequence(OMEGA_DEFAULT,
                        tuple(PulseStep(d, 3e-5) for d in
                              (0.0, 1.5e4, -2.5e4, 4e3)))
    err = ErrorModel(t2=t2)
    s0 = QubitState.ground()
    truth = evolve_lindblad(s0, seq, err, substeps_per_step=4096).rho
    e64 = np.max(np.abs(evolve_lindblad(s0, seq, err, 64).rho - truth))
    e128 = np.max(np.abs(evolve_lindblad(s0, seq, err, 128).rho - truth))
    ratio = float(e64 / e128)
    ok = decay_err < 1e-6 and ratio >= 8.0
    _report(9, ok,
            "coherence decay error %.2e at 64 substeps (< 1e-6); halving "
            "the step shrinks the error %.1fx (>= 8x)" % (decay_err, ratio))


def test_criterion_10_repetition_degradation():
    method = Method(MethodKind.PI_PULSE)
    grid = np.arange(1, 21, dtype=float)
    short = sweep_dephasing(method, DephasingMode.FLIP_REPETITION, grid,
                            t2=0.35e-3).values
    monotone = bool(np.all(np.diff(short) < 0.0))
    gentle = sweep_dephasing(method, DephasingMode.FLIP_REPETITION,
                             np.array([1.0, 20.0]), t2=200e-3).values
    drop = float(gentle[0] - gentle[1])
    ok = monotone and drop < 0.01
    _report(10, ok,
            "T2 = 0.35 ms success decays monotonically over m = 1..20 "
            "(%.3f -> %.3f); T2 = 200 ms degradation over 20 flips %.2e "
            "(< 1%%)" % (short[0], short[-1], drop))


def test_criterion_11_feedback_consistency(trained):
    winners = [v for v in trained if v["passed"]]
    pick = winners[0] if winners else trained[0]
    policy, config = pick["policy"], pick["config"]

    fb = feedback_protocol(policy, config, err=ErrorModel(),
                           shots_per_cycle=None)
    ol = rollout(policy, config, deterministic=True, errors=(0.0, 0.0))
    identical = ([c.action for c in fb.cycles] == ol.actions
                 and np.array_equal(fb.sequence.deltas(), ol.sequence.deltas())
                 and np.array_equal(fb.sequence.durations(),
                                    ol.sequence.durations()))

    p_ol = 0.5 * (ol.final_sz + 1.0)
    shot = feedback_protocol(policy, config, err=ErrorModel(),
                             detector=DetectorModel.ideal(),
                             shots_per_cycle=2000, seed=20)
    sigma = np.sqrt(max(p_ol * (1.0 - p_ol), 1.0 / 2000.0) / 2000.0)
    pull = abs(shot.estimate.p_hat - p_ol) / sigma
    ok = identical and pull <= 3.0
    _report(11, ok,
            "ideal-estimator feedback program %s open-loop rollout; "
            "2000-shot final p_hat %.5f vs %.5f open loop (%.2f binomial "
            "sigma, <= 3)" % ("matches" if identical else "differs from",
                              shot.estimate.p_hat, p_ol, pull))


def test_criterion_12_waveform_continuity(trained, solved):
    plans = []
    for name in ("detuning", "rabi"):
        plans.append(build_phase_plan(sta.discretize(solved[name][0], 20)))
    drl_seq = rollout(trained[0]["policy"], trained[0]["config"],
                      deterministic=True, errors=(0.0, 0.0)).sequence
    plans.append(build_phase_plan(drl_seq))
    rng = np.random.default_rng(9)
    for _ in range(5):
        steps = tuple(PulseStep(rng.uniform(-4e4, 4e4), rng.uniform(1e-7, 2e-6))
                      for _ in range(20))
        plans.append(build_phase_plan(PulseSequence(2.0e4, steps)))
    worst_jump = max(verify_continuity(p) for p in plans)

    delta = 2.0 * np.pi * 2.5e5
    plan = build_phase_plan(PulseSequence(1e4, (PulseStep(delta, 5e-6),)))
    wave = sample_waveform(plan, 1.0e9)
    spectrum = np.abs(np.fft.rfft(wave.samples))
    freqs = np.fft.rfftfreq(wave.samples.size, d=1.0 / wave.sample_rate_hz)
    peak = float(freqs[np.argmax(spectrum)])
    want = (plan.if_rate + delta) / (2.0 * np.pi)
    bin_width = wave.sample_rate_hz / wave.samples.size
    off = abs(peak - want) / bin_width
    ok = worst_jump < 1e-9 and off <= 1.0
    _report(12, ok,
            "worst boundary phase jump %.1e rad over %d twenty-segment "
            "plans (< 1e-9); FFT peak %.2f bins from (w0-wc+delta)/2pi "
            "(<= 1)" % (worst_jump, len(plans), off))


def test_criterion_13_spam_arithmetic():
    det = DetectorModel(lambda_dark=0.1, lambda_bright=10.0, threshold=2)
    fb, fd, mean = spam_errors(det)
    want_fd = np.exp(-10.0) * 61.0
    want_fb = 1.0 - np.exp(-0.1) * 1.105
    errs = (abs(fd - want_fd), abs(fb - want_fb),
            abs(mean - 0.5 * (want_fb + want_fd)))
    ok = max(errs) < 1e-12
    _report(13, ok,
            "false-dark %.3e vs e^-10 * 61, false-bright %.3e, mean %.3e "
            "all within 1e-12 of the hand-computed Poisson values"
            % errs)
