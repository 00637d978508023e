"""Command-line entry points.

Subcommands::

    qflip sta-design   solve a ramp and write its pulse table
    qflip train        two-phase PPO training to a policy checkpoint
    qflip sweep        evaluate a strategy over an error or dephasing grid
    qflip feedback     run the measurement-driven protocol once
    qflip waveform     synthesize a phase-continuous IF waveform

Every output file carries a ``config_fingerprint`` header hashing the
effective inputs.  Exit codes: 0 success, 1 bad usage or config,
2 numerical failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench, ppo, runconfig, sta, svgplot, waveform
from .dynamics import ErrorModel
from .runconfig import ConfigError


class _Parser(argparse.ArgumentParser):
    """Argparse that reports problems as ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(message)


_METHODS = {
    "pi-pulse": bench.MethodKind.PI_PULSE,
    "sta-detuning": bench.MethodKind.STA_DETUNING,
    "sta-rabi": bench.MethodKind.STA_RABI,
    "drl": bench.MethodKind.DRL_POLICY,
    "feedback-drl": bench.MethodKind.FEEDBACK_DRL,
}


def _load(args) -> dict:
    return runconfig.load_config(args.config) if args.config else \
        {"schema_version": runconfig.SCHEMA_VERSION}


def _fingerprint(config: dict, args: dict) -> str:
    return runconfig.fingerprint({"config": config, "args": args})


def _build_parser() -> _Parser:
    parser = _Parser(prog="qflip", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sta-design", help="solve a ramp and write a pulse table")
    p.add_argument("--channel", choices=["detuning", "rabi"], required=True)
    p.add_argument("--omega-hz", type=float, default=3300.0,
                   help="Rabi frequency omega/2pi (default 3300)")
    p.add_argument("--n-steps", type=int, default=1024,
                   help="discretization steps (default 1024)")
    p.add_argument("--out", required=True, help="pulse table CSV path")

    p = sub.add_parser("train", help="train a policy and checkpoint it")
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", required=True, help="policy checkpoint path")
    p.add_argument("--pretrain-out", help="also checkpoint the phase boundary")
    p.add_argument("--curve", help="training curve CSV path")

    p = sub.add_parser("sweep", help="evaluate a strategy over a grid")
    p.add_argument("--config", help="JSON run config (env/detector)")
    p.add_argument("--method", choices=sorted(_METHODS), required=True)
    p.add_argument("--checkpoint", help="policy checkpoint for drl methods")
    p.add_argument("--axis", required=True,
                   choices=["rabi", "detuning", "hybrid", "dephasing-time",
                            "dephasing-flips"])
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--shots", type=int, default=0,
                   help="detector shots per point (0 = exact probabilities)")
    p.add_argument("--t2-s", type=float, default=None,
                   help="coherence time (required for dephasing axes)")
    p.add_argument("--feedback-shots", type=int, default=0,
                   help="per-cycle shots for feedback-drl (0 = ideal)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True, help="sweep CSV path")
    p.add_argument("--svg", help="optional chart path")

    p = sub.add_parser("feedback", help="run the measurement-driven protocol")
    p.add_argument("--config", help="JSON run config (env/detector)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--shots-per-cycle", type=int, default=0,
                   help="detector shots per cycle (0 = ideal estimator)")
    p.add_argument("--final-shots", type=int, default=None)
    p.add_argument("--delta-omega", type=float, default=0.0,
                   help="true fractional Rabi error")
    p.add_argument("--delta-delta", type=float, default=0.0,
                   help="true detuning offset in units of omega")
    p.add_argument("--t2-s", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="cycle log CSV path")

    p = sub.add_parser("waveform", help="synthesize an IF waveform")
    p.add_argument("--pulse-table", required=True, help="input pulse CSV")
    p.add_argument("--f0-hz", type=float, default=waveform.F0_DEFAULT)
    p.add_argument("--fc-hz", type=float, default=waveform.FC_DEFAULT)
    p.add_argument("--rate-hz", type=float, required=True)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--out", required=True, help="waveform CSV path")
    p.add_argument("--plan-out", help="optional phase plan text path")
    return parser


def _cmd_sta_design(args) -> int:
    channel = sta.ErrorChannel(args.channel)
    omega = 2.0 * np.pi * args.omega_hz
    ansatz = sta.solve_a(channel, omega)
    seq = sta.discretize(ansatz, args.n_steps)
    fp = _fingerprint({}, {"command": "sta-design", "channel": args.channel,
                           "omega_hz": args.omega_hz, "n_steps": args.n_steps})
    sta.write_pulse_table(seq, args.out, comments={"config_fingerprint": fp})
    tgrid = np.linspace(0.0, ansatz.duration, 4001)
    peak = float(np.max(np.abs(sta.delta_of_t(ansatz, tgrid))) / omega)
    print("channel=%s a=%.6f duration_us=%.3f peak_delta_over_omega=%.4f"
          % (channel.value, ansatz.a, ansatz.duration * 1e6, peak))
    print("wrote %s (fingerprint %s)" % (args.out, fp))
    return 0


def _cmd_train(args) -> int:
    cfg = _load(args)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    fp = _fingerprint(cfg, {"command": "train", "seed": seed})
    env_cfg = runconfig.env_config(cfg)
    result = ppo.train(env_cfg, hp=runconfig.hyperparams(cfg),
                       schedule=runconfig.schedule(cfg), seed=seed)
    meta = {"seed": seed, "config_fingerprint": fp,
            "best_eval": result.best_eval}
    ppo.save_policy(args.out, result.policy, env_cfg, extra_meta=meta)
    if args.pretrain_out:
        pre = ppo.PolicyNetwork(params=result.pretrain_params)
        ppo.save_policy(args.pretrain_out, pre, env_cfg,
                        extra_meta={**meta, "phase_boundary": True})
    if args.curve:
        ppo.write_curve_csv(result.curve, args.curve)
    print("best_eval=%.5f checkpoint=%s (fingerprint %s)"
          % (result.best_eval, args.out, fp))
    return 0


def _make_method(args) -> bench.Method:
    kind = _METHODS[args.method]
    if kind in (bench.MethodKind.DRL_POLICY, bench.MethodKind.FEEDBACK_DRL):
        if not args.checkpoint:
            raise ConfigError("--checkpoint is required for %s" % args.method)
        return bench.Method(kind, args.checkpoint)
    return bench.Method(kind)


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    omega = runconfig.env_config(cfg).omega
    det = runconfig.detector(cfg)
    method = _make_method(args)
    shots = args.shots or None
    fp = _fingerprint(cfg, {"command": "sweep", "method": args.method,
                            "axis": args.axis, "start": args.start,
                            "stop": args.stop, "points": args.points,
                            "shots": args.shots, "t2_s": args.t2_s,
                            "seed": args.seed})
    if args.axis in ("rabi", "detuning"):
        grid = np.linspace(args.start, args.stop, args.points)
        axis = bench.ErrorAxis.RABI if args.axis == "rabi" else bench.ErrorAxis.DETUNING
        result = bench.sweep_1d(method, axis, grid, omega=omega, shots=shots,
                                detector=det, t2=args.t2_s, seed=args.seed,
                                n_threads=args.threads,
                                feedback_shots=args.feedback_shots or None)
    elif args.axis == "hybrid":
        grid = np.linspace(args.start, args.stop, args.points)
        result = bench.sweep_hybrid(method, grid, grid, omega=omega,
                                    shots=shots, detector=det, seed=args.seed,
                                    n_threads=args.threads)
    else:
        if args.t2_s is None:
            raise ConfigError("--t2-s is required for dephasing sweeps")
        if args.axis == "dephasing-time":
            mode = bench.DephasingMode.RABI_TIME
            grid = np.linspace(args.start, args.stop, args.points)
        else:
            mode = bench.DephasingMode.FLIP_REPETITION
            grid = np.arange(int(round(args.start)), int(round(args.stop)) + 1,
                             dtype=np.float64)
        result = bench.sweep_dephasing(method, mode, grid, t2=args.t2_s,
                                       omega=omega, shots=shots, detector=det,
                                       seed=args.seed, n_threads=args.threads)
    result.metadata["config_fingerprint"] = fp
    result.to_csv(args.out)
    if args.svg:
        if len(result.axes) == 1:
            svgplot.line_chart(result.grid[0], {result.method: result.values},
                               args.svg, title=result.method,
                               x_label=result.axes[0],
                               y_label=result.value_label)
        else:
            svgplot.heatmap(result.grid[0], result.grid[1], result.values,
                            args.svg, title=result.method,
                            x_label=result.axes[0], y_label=result.axes[1])
    print("wrote %s (fingerprint %s)" % (args.out, fp))
    return 0


def _cmd_feedback(args) -> int:
    cfg = _load(args)
    det = runconfig.detector(cfg)
    policy, meta = ppo.load_policy(args.checkpoint)
    env_cfg = ppo.env_config_from_meta(meta["env"])
    err = ErrorModel(delta_omega=args.delta_omega,
                     delta_delta=args.delta_delta, t2=args.t2_s)
    fp = _fingerprint(cfg, {"command": "feedback",
                            "delta_omega": args.delta_omega,
                            "delta_delta": args.delta_delta,
                            "t2_s": args.t2_s, "seed": args.seed,
                            "shots_per_cycle": args.shots_per_cycle})
    result = bench.feedback_protocol(
        policy, env_cfg, err=err, detector=det,
        shots_per_cycle=args.shots_per_cycle or None,
        final_shots=args.final_shots, seed=args.seed)
    bench.write_feedback_csv(result, args.out,
                             metadata={"config_fingerprint": fp})
    print("final p_hat=%.6f +- %.6f (fingerprint %s)"
          % (result.estimate.p_hat, result.estimate.std_error, fp))
    return 0


def _cmd_waveform(args) -> int:
    seq = sta.read_pulse_table(args.pulse_table)
    plan = waveform.build_phase_plan(seq, f0_hz=args.f0_hz, fc_hz=args.fc_hz)
    wave = waveform.sample_waveform(plan, args.rate_hz, args.amplitude)
    waveform.write_waveform_csv(wave, plan, args.out)
    if args.plan_out:
        waveform.write_plan_text(plan, args.plan_out)
    jump = waveform.verify_continuity(plan)
    print("segments=%d samples=%d worst_phase_jump=%.3e rad"
          % (len(plan.segments), wave.samples.size, jump))
    return 0


_HANDLERS = {
    "sta-design": _cmd_sta_design,
    "train": _cmd_train,
    "sweep": _cmd_sweep,
    "feedback": _cmd_feedback,
    "waveform": _cmd_waveform,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (RuntimeError, ArithmeticError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("i/o failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
