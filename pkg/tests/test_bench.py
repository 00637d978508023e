import numpy as np
import pytest

from qflip.bench import (
    HYBRID_CLAMP,
    DephasingMode,
    ErrorAxis,
    Method,
    MethodKind,
    build_sequence,
    feedback_protocol,
    pi_pulse,
    sweep_1d,
    sweep_dephasing,
    sweep_hybrid,
    write_feedback_csv,
)
from qflip.dynamics import (
    ErrorModel,
    QubitState,
    evolve_lindblad,
    evolve_unitary,
    flip_probability,
    rabi_flip_probability,
)
from qflip.measurement import DetectorModel
from qflip.ppo import PolicyNetwork, save_policy
from qflip.rl_env import EnvConfig, Phase, rollout


@pytest.fixture(scope="module")
def policy_ckpt(tmp_path_factory):
    """An untrained policy checkpoint (wiring tests, not performance)."""
    path = tmp_path_factory.mktemp("ckpt") / "policy.ckpt"
    config = EnvConfig(phase=Phase.FINETUNE)
    save_policy(path, PolicyNetwork(seed=3), config)
    return str(path), config


def test_method_validation():
    Method(MethodKind.PI_PULSE)
    Method(MethodKind.DRL_POLICY, checkpoint="x.ckpt")
    with pytest.raises(ValueError):
        Method(MethodKind.DRL_POLICY)
    with pytest.raises(ValueError):
        Method(MethodKind.FEEDBACK_DRL)
    with pytest.raises(ValueError):
        Method(MethodKind.PI_PULSE, checkpoint="x.ckpt")


def test_pi_pulse_shape():
    seq = pi_pulse(1.0e4)
    assert len(seq.steps) == 1
    assert seq.steps[0].delta == 0.0
    assert seq.total_duration == pytest.approx(np.pi / 1.0e4)


def test_build_sequence_variants(policy_ckpt):
    path, config = policy_ckpt
    assert len(build_sequence(Method(MethodKind.PI_PULSE)).steps) == 1
    sta_seq = build_sequence(Method(MethodKind.STA_DETUNING), sta_steps=64)
    assert len(sta_seq.steps) == 64
    drl_seq = build_sequence(Method(MethodKind.DRL_POLICY, checkpoint=path))
    assert len(drl_seq.steps) == config.n_steps
    with pytest.raises(ValueError):
        build_sequence(Method(MethodKind.FEEDBACK_DRL, checkpoint=path))


def test_sweep_1d_exact_matches_formula():
    grid = np.linspace(-0.5, 0.5, 11)
    res = sweep_1d(Method(MethodKind.PI_PULSE), ErrorAxis.DETUNING, grid)
    seq = pi_pulse()
    want = np.array([
        rabi_flip_probability(seq.omega, g * seq.omega, seq.total_duration)
        for g in grid
    ])
    assert np.max(np.abs(res.values - want)) < 1e-12
    assert np.all(res.std == 0.0)
    assert res.value_label == "p_hat"
    assert res.n_shots == 0
    # Symmetric pulse, symmetric response.
    assert np.allclose(res.values, res.values[::-1], atol=1e-12)


def test_sweep_1d_rabi_axis():
    grid = np.array([-0.2, 0.0, 0.2])
    res = sweep_1d(Method(MethodKind.PI_PULSE), ErrorAxis.RABI, grid)
    want = [np.sin(0.5 * np.pi * (1.0 + g)) ** 2 for g in grid]
    assert np.allclose(res.values, want, atol=1e-12)


def test_sta_beats_pi_at_design_error():
    grid = np.array([0.2])
    p_pi = sweep_1d(Method(MethodKind.PI_PULSE), ErrorAxis.DETUNING, grid).values[0]
    p_sta = sweep_1d(Method(MethodKind.STA_DETUNING), ErrorAxis.DETUNING, grid,
                     sta_steps=256).values[0]
    assert p_sta > p_pi


def test_sweep_shots_are_thread_and_order_independent():
    grid = np.linspace(-0.3, 0.3, 7)
    kw = dict(shots=400, detector=DetectorModel(), seed=42)
    a = sweep_1d(Method(MethodKind.PI_PULSE), ErrorAxis.DETUNING, grid,
                 n_threads=1, **kw)
    b = sweep_1d(Method(MethodKind.PI_PULSE), ErrorAxis.DETUNING, grid,
                 n_threads=4, **kw)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.std, b.std)
    assert np.all(a.std > 0.0)
    assert a.n_shots == 400
    c = sweep_1d(Method(MethodKind.PI_PULSE), ErrorAxis.DETUNING, grid,
                 n_threads=1, shots=400, detector=DetectorModel(), seed=43)
    assert not np.array_equal(a.values, c.values)


def test_sweep_hybrid_values_and_clamp():
    rabi = np.array([-0.1, 0.0, 0.1])
    det = np.array([-0.2, 0.0, 0.2])
    res = sweep_hybrid(Method(MethodKind.STA_DETUNING), rabi, det,
                       sta_steps=256)
    assert res.values.shape == (3, 3)
    assert res.value_label == "log10_infidelity"
    seq = build_sequence(Method(MethodKind.STA_DETUNING), sta_steps=256)
    err = ErrorModel(delta_omega=0.1, delta_delta=-0.2)
    p = flip_probability(evolve_unitary(QubitState.ground(), seq, err))
    assert res.values[2, 0] == pytest.approx(
        np.log10(max(1.0 - p, HYBRID_CLAMP)), abs=1e-12
    )
    # At zero error the ramp flip is essentially exact: the clamp bites.
    assert res.values[1, 1] == pytest.approx(np.log10(HYBRID_CLAMP))


def test_sweep_dephasing_time_scaling():
    res = sweep_dephasing(Method(MethodKind.PI_PULSE), DephasingMode.RABI_TIME,
                          [1.0, 2.0, 4.0, 8.0], t2=0.35e-3)
    assert res.value_label == "p_hat"
    assert np.all(np.diff(res.values) < 0.0)
    seq = pi_pulse().scaled(4.0)
    want = flip_probability(
        evolve_lindblad(QubitState.ground(), seq, ErrorModel(t2=0.35e-3))
    )
    assert res.values[2] == pytest.approx(want, abs=1e-12)
    with pytest.raises(ValueError):
        sweep_dephasing(Method(MethodKind.PI_PULSE), DephasingMode.RABI_TIME,
                        [0.0], t2=0.35e-3)


def test_sweep_dephasing_repetition_parity():
    res = sweep_dephasing(Method(MethodKind.PI_PULSE),
                          DephasingMode.FLIP_REPETITION,
                          [1, 2, 3], t2=0.35e-3)
    assert res.value_label == "p_success"
    seq2 = pi_pulse().repeated(2)
    p1 = flip_probability(
        evolve_lindblad(QubitState.ground(), seq2, ErrorModel(t2=0.35e-3))
    )
    assert res.values[1] == pytest.approx(1.0 - p1, abs=1e-12)
    with pytest.raises(ValueError):
        sweep_dephasing(Method(MethodKind.PI_PULSE),
                        DephasingMode.FLIP_REPETITION, [1.5], t2=0.35e-3)


def test_feedback_ideal_estimator_reproduces_rollout(policy_ckpt):
    path, config = policy_ckpt
    policy = PolicyNetwork(seed=3)
    fb = feedback_protocol(policy, config, err=ErrorModel(),
                           shots_per_cycle=None)
    ol = rollout(policy, config, deterministic=True, errors=(0.0, 0.0))
    fb_actions = [c.action for c in fb.cycles]
    assert fb_actions == ol.actions
    assert np.array_equal(fb.sequence.deltas(), ol.sequence.deltas())
    assert np.array_equal(fb.sequence.durations(), ol.sequence.durations())
    assert fb.estimate.p_hat == pytest.approx(0.5 * (ol.final_sz + 1.0),
                                              abs=1e-12)
    assert fb.estimate.std_error == 0.0
    assert len(fb.cycles) == config.n_steps


def test_feedback_with_shots_is_seeded(policy_ckpt):
    _, config = policy_ckpt
    policy = PolicyNetwork(seed=3)
    kw = dict(err=ErrorModel(delta_delta=0.05), detector=DetectorModel(),
              shots_per_cycle=50, final_shots=200)
    a = feedback_protocol(policy, config, seed=7, **kw)
    b = feedback_protocol(policy, config, seed=7, **kw)
    assert [c.action for c in a.cycles] == [c.action for c in b.cycles]
    assert a.estimate == b.estimate
    assert a.estimate.n_shots == 200
    c = feedback_protocol(policy, config, seed=8, **kw)
    assert a.estimate != c.estimate or a.cycles != c.cycles


def test_feedback_sweep_matches_direct_protocol(policy_ckpt):
    path, config = policy_ckpt
    policy = PolicyNetwork(seed=3)
    grid = np.array([-0.1, 0.0, 0.1])
    res = sweep_1d(Method(MethodKind.FEEDBACK_DRL, checkpoint=path),
                   ErrorAxis.DETUNING, grid, seed=5)
    for i, g in enumerate(grid):
        fb = feedback_protocol(policy, config,
                               err=ErrorModel(delta_delta=float(g)),
                               shots_per_cycle=None, seed=(5, i))
        assert res.values[i] == pytest.approx(fb.estimate.p_hat, abs=1e-12)
    with pytest.raises(ValueError):
        sweep_1d(Method(MethodKind.FEEDBACK_DRL, checkpoint=path),
                 ErrorAxis.DETUNING, grid, omega=config.omega * 2.0)


def test_sweep_csv_output(tmp_path):
    grid = np.linspace(-0.1, 0.1, 3)
    res = sweep_1d(Method(MethodKind.PI_PULSE), ErrorAxis.DETUNING, grid)
    p1 = tmp_path / "sweep.csv"
    res.to_csv(p1)
    lines = p1.read_text().splitlines()
    assert "detuning_error,p_hat,std" in lines
    assert len([l for l in lines if not l.startswith("#")]) == 4
    hy = sweep_hybrid(Method(MethodKind.PI_PULSE), grid, grid)
    p2 = tmp_path / "hybrid.csv"
    hy.to_csv(p2)
    lines = p2.read_text().splitlines()
    assert "rabi_error,detuning_error,log10_infidelity,std" in lines
    assert len([l for l in lines if not l.startswith("#")]) == 10


def test_write_feedback_csv(tmp_path, policy_ckpt):
    _, config = policy_ckpt
    policy = PolicyNetwork(seed=3)
    fb = feedback_protocol(policy, config, shots_per_cycle=None)
    path = tmp_path / "fb.csv"
    write_feedback_csv(fb, path, metadata={"run": "test"})
    lines = path.read_text().splitlines()
    assert lines[0] == "# run = test"
    assert any(l.startswith("# final_p_hat") for l in lines)
    assert "cycle,measured_sz,action" in lines
    assert len([l for l in lines if not l.startswith("#")]) == config.n_steps + 1
