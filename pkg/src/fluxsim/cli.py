"""Command-line entry point: ``fluxsim <command> [options]``.

Exit status 0 on success, 1 for usage or configuration errors, 2 for domain
failures (no minima found, operating point outside the four-state window,
uncompilable gate). Outputs are written atomically; JSON is pretty-printed
with sorted keys and carries no timestamp unless ``--timestamp`` is given.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import tempfile
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .circuit import ParameterError, load_circuit
from .dynamics import (
    CONVENTIONS,
    DEFAULT_CONVENTION,
    DtTooLargeError,
    OffResonantError,
    Trajectory,
    ZeroCouplingError,
    basis_state,
    evolve_full,
    evolve_rwa,
    fidelity_report,
    free_propagator,
    gate_unitary,
    matrix_to_json,
    populations,
    reduced_purity,
    rotating_frame,
)
from .effective import (
    DEFAULT_DELTA,
    EffectiveModel,
    OutsideWindowError,
    SelectivityWarning,
    assemble_from_circuit,
    default_flux_amplitude,
)
from .gates import (
    DURATION_SOURCES,
    PHASE_CONVENTIONS,
    CompileError,
    GateSpec,
    NoOscillationError,
    PulseSchedule,
    cnot_up_to_block_phase,
    compile_gate,
    estimate_operation_time,
    target_unitary,
)
from .minima import LABELS, find_minima, minima_to_json_obj, sweep_spectra
from .report import DEFAULT_F_OP, device_report, format_report

DEFAULT_SEED = 0
EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- output helpers -----------------------------------------------------------------


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _stamp(args, obj):
    if args.timestamp:
        obj = dict(obj)
        obj["generated_utc"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return obj


def _stamp_csv(args, text):
    if args.timestamp:
        now = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return f"# generated {now}\n" + text
    return text


def _emit(args, text):
    if args.output:
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)


# -- argument parsing helpers ------------------------------------------------------------


def _circuit(args):
    if not Path(args.circuit).is_file():
        raise UsageError(f"circuit file not found: {args.circuit}")
    return load_circuit(args.circuit)


def _floats(text, n_allowed, name):
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise UsageError(f"--{name} expects comma-separated numbers, got {text!r}") from None
    if len(vals) not in n_allowed:
        raise UsageError(f"--{name} expects {' or '.join(map(str, n_allowed))} values")
    return vals


def _deltas(args):
    if args.deltas is None:
        return DEFAULT_DELTA
    vals = _floats(args.deltas, (1, 4), "deltas")
    return vals[0] if len(vals) == 1 else tuple(vals)


def _check_output_dir(*paths):
    for p in paths:
        if p and not Path(p).resolve().parent.is_dir():
            raise UsageError(f"output directory does not exist: {Path(p).parent}")


def _load_model(path) -> EffectiveModel:
    if not Path(path).is_file():
        raise UsageError(f"model file not found: {path}")
    try:
        return EffectiveModel.from_json(Path(path).read_text(encoding="utf-8"))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad model file {path}: {exc}") from None


def _load_schedule(path) -> PulseSchedule:
    if not Path(path).is_file():
        raise UsageError(f"schedule file not found: {path}")
    try:
        return PulseSchedule.from_json(Path(path).read_text(encoding="utf-8"))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad schedule file {path}: {exc}") from None


def _assemble(args, params):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SelectivityWarning)
        return assemble_from_circuit(
            params, args.f_op, _deltas(args), default_flux_amplitude(params, args.field_gauss),
            args.n_seeds, args.seed,
        )


# -- commands -------------------------------------------------------------------------------


def cmd_find_minima(args) -> int:
    _check_output_dir(args.output)
    params = _circuit(args)
    f = params.frustration if args.f is None else args.f
    result = find_minima(params, f, args.n_seeds, args.seed)
    obj = minima_to_json_obj(result)
    obj["rng_seed"] = args.seed
    obj["n_seeds"] = args.n_seeds
    if not result.states:
        print(f"no minima found at f={f}", file=sys.stderr)
        return EXIT_DOMAIN
    _emit(args, dump_json(_stamp(args, obj)))
    print(f"{len(result)} minima at f={f}: {' '.join(result.labels)}", file=sys.stderr)
    return EXIT_OK


def _window_from_counts(fs, four):
    """Contiguous run of four-state rows containing the grid point nearest 0.5."""
    if not np.any(four):
        return None
    centre = int(np.argmin(np.abs(fs - 0.5)))
    if not four[centre]:
        return None
    lo = hi = centre
    while lo > 0 and four[lo - 1]:
        lo -= 1
    while hi + 1 < len(fs) and four[hi + 1]:
        hi += 1
    return fs[lo], fs[hi]


def cmd_sweep_spectra(args) -> int:
    _check_output_dir(args.output)
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    if not args.f_min < args.f_max:
        raise UsageError("--f-min must be below --f-max")
    params = _circuit(args)
    table = sweep_spectra(params, args.f_min, args.f_max, args.steps, args.n_seeds, args.seed)
    _emit(args, _stamp_csv(args, table.to_csv()))
    four = np.array([r.has_four_states() for r in table.rows])
    win = _window_from_counts(table.f_values, four)
    if win is None:
        print("four-state window: none on this grid", file=sys.stderr)
    else:
        lo, hi = win
        print(f"four-state window: f in [{lo:.6g}, {hi:.6g}], f_c = {(hi - lo) / 2:.6g}",
              file=sys.stderr)
    print(f"track breaks: {len(table.breaks)}", file=sys.stderr)
    return EXIT_OK


def cmd_effective_model(args) -> int:
    _check_output_dir(args.output)
    params = _circuit(args)
    model = _assemble(args, params)
    _emit(args, dump_json(_stamp(args, model.to_json_obj())))
    return EXIT_OK


def _gate_spec(args) -> GateSpec:
    try:
        if args.gate in ("rx", "ry"):
            if args.qubit is None or args.theta is None:
                raise UsageError(f"{args.gate} needs --qubit and --theta")
            return GateSpec(args.gate, args.qubit, args.theta)
        return GateSpec(args.gate)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_compile_gate(args) -> int:
    _check_output_dir(args.output, args.model_output)
    gate = _gate_spec(args)
    if (args.model is None) == (args.circuit is None):
        raise UsageError("give exactly one of --model or --circuit")
    if args.model is not None:
        model = _load_model(args.model)
        amplitude = args.amplitude if args.amplitude is not None else model.reference_amplitude
        if amplitude is None:
            raise UsageError("--amplitude is required for a model without a reference amplitude")
    else:
        params = _circuit(args)
        model = _assemble(args, params)
        amplitude = args.amplitude if args.amplitude is not None else model.reference_amplitude
    if amplitude <= 0:
        raise UsageError("--amplitude must be positive")
    sched = compile_gate(model, gate, amplitude, durations=args.durations,
                         phase_convention=args.phase_convention)
    predicted = estimate_operation_time(model, gate, amplitude, DEFAULT_CONVENTION)
    _emit(args, dump_json(_stamp(args, sched.to_json_obj())))
    if args.model_output:
        write_atomic(args.model_output, dump_json(_stamp(args, model.to_json_obj())))
    print(f"{gate.kind}: {len(sched.pulses)} pulse(s), total {sched.total_time:.6g} ns "
          f"(predicted tau_op {predicted:.6g} ns, {DEFAULT_CONVENTION})", file=sys.stderr)
    return EXIT_OK


def _initial_state(args):
    if args.initial is not None and args.amplitudes is not None:
        raise UsageError("give either --initial or --amplitudes")
    if args.amplitudes is not None:
        try:
            amps = np.array([complex(v.replace(" ", "")) for v in args.amplitudes.split(",")])
        except ValueError:
            raise UsageError(f"bad --amplitudes {args.amplitudes!r}") from None
        if amps.size != 4:
            raise UsageError("--amplitudes needs 4 values (00, 01, 10, 11)")
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise UsageError("--amplitudes must not all vanish")
        return amps / norm
    label = args.initial or "00"
    if label not in LABELS:
        raise UsageError(f"--initial must be one of {', '.join(LABELS)}")
    return basis_state(label)


def _simulate(model, sched, psi0, method, convention, dt, n_samples):
    """Trajectory over the whole schedule, pulses back to back from t = 0."""
    times, states, drift = [0.0], [psi0], 0.0
    psi, t = psi0, 0.0
    for p in sched.pulses:
        if p.duration == 0:
            continue
        if method == "full":
            traj = evolve_full(psi, model, p, dt=dt, t0=t, n_samples=n_samples)
            seg_t, seg = traj.times, traj.states
            drift = max(drift, traj.norm_drift)
        else:
            seg_t = t + np.linspace(0.0, p.duration, max(2, n_samples))
            seg = np.array([evolve_rwa(psi, model, replace(p, duration=s - t), t, convention)
                            for s in seg_t])
        times += list(seg_t[1:])
        states += list(seg[1:])
        psi, t = seg[-1], t + p.duration
    states = np.array(states)
    drift = max(drift, float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0))))
    return Trajectory(np.array(times), states, drift)


def cmd_simulate(args) -> int:
    _check_output_dir(args.trajectory, args.output)
    model = _load_model(args.model)
    sched = _load_schedule(args.schedule)
    psi0 = _initial_state(args)
    if args.dt is not None and args.dt <= 0:
        raise UsageError("--dt must be positive")
    traj = _simulate(model, sched, psi0, args.method, args.convention, args.dt, args.samples)
    total = sched.total_time
    final_rot = np.conj(free_propagator(model, total).T) @ traj.final
    out = {
        "method": args.method,
        "convention": args.convention,
        "total_time_ns": total,
        "initial": [[float(z.real), float(z.imag)] for z in psi0],
        "final_lab": [[float(z.real), float(z.imag)] for z in traj.final],
        "final_rotating": [[float(z.real), float(z.imag)] for z in final_rot],
        "final_populations": {lab: float(p) for lab, p in zip(LABELS, populations(traj.final))},
        "norm_drift": traj.norm_drift,
        "reduced_purity_q1": reduced_purity(traj.final, 1),
    }
    if sched.gate is not None:
        u = rotating_frame(gate_unitary(model, sched.pulses, args.method, args.convention, args.dt),
                           model, total)
        target = target_unitary(sched.gate)
        rep = fidelity_report(u, target)
        ideal = target @ psi0
        rep["state_fidelity"] = float(abs(np.vdot(ideal, final_rot)) ** 2)
        rep["population_distance"] = float(np.max(np.abs(populations(ideal) - populations(final_rot))))
        if sched.gate.kind == "cnot" and sched.block_phase is not None:
            rep["gate_fidelity_up_to_block_phase"] = fidelity_report(
                u, cnot_up_to_block_phase(sched.block_phase))["gate_fidelity"]
        out["target_gate"] = sched.gate.to_dict()
        out["fidelity"] = rep
        out["unitary_rotating"] = matrix_to_json(u)
    if args.trajectory:
        write_atomic(args.trajectory, _stamp_csv(args, traj.to_csv()))
    _emit(args, dump_json(_stamp(args, out)))
    pops = " ".join(f"{lab}:{p:.4f}" for lab, p in out["final_populations"].items())
    print(f"final populations {pops}", file=sys.stderr)
    if "fidelity" in out:
        print(f"population fidelity vs {sched.gate.kind}: "
              f"{out['fidelity']['population_fidelity']:.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    _check_output_dir(args.output)
    params = _circuit(args)
    rep = device_report(params, args.f_op, _deltas(args), args.field_gauss, args.n_seeds,
                        args.seed)
    if args.format == "json":
        _emit(args, dump_json(_stamp(args, rep)))
    else:
        _emit(args, format_report(rep))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fluxsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, circuit=True):
        if circuit:
            p.add_argument("--circuit", required=True, help="circuit TOML file")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                       help=f"multistart seed (default {DEFAULT_SEED})")
        p.add_argument("--n-seeds", type=int, default=64, help="starting points per frustration")
        p.add_argument("--output", help="output file (default: stdout)")
        p.add_argument("--timestamp", action="store_true", help="add a generation timestamp")

    def device(p):
        p.add_argument("--f-op", type=float, default=DEFAULT_F_OP, help="operating frustration")
        p.add_argument("--deltas", help="tunnelling amplitude(s) in GHz: one value or four "
                                        "(00-01,00-10,01-11,10-11)")
        p.add_argument("--field-gauss", type=float, default=1.0, help="drive field amplitude")

    p = sub.add_parser("find-minima", help="metastable states at one frustration")
    common(p)
    p.add_argument("--f", type=float, help="frustration (default: value in the circuit file)")
    p.set_defaults(func=cmd_find_minima)

    p = sub.add_parser("sweep-spectra", help="minima and harmonic levels versus frustration (CSV)")
    common(p)
    p.add_argument("--f-min", type=float, required=True)
    p.add_argument("--f-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.set_defaults(func=cmd_sweep_spectra)

    p = sub.add_parser("effective-model", help="four-level model at an operating point (JSON)")
    common(p)
    device(p)
    p.set_defaults(func=cmd_effective_model)

    p = sub.add_parser("compile-gate", help="pulse schedule for a gate (JSON)")
    p.add_argument("--circuit", help="circuit TOML file (model assembled at --f-op)")
    p.add_argument("--model", help="effective-model JSON instead of a circuit")
    common(p, circuit=False)
    device(p)
    p.add_argument("--gate", required=True, choices=["rx", "ry", "cnot", "bell-prep"])
    p.add_argument("--qubit", type=int, choices=[1, 2])
    p.add_argument("--theta", type=float, help="rotation angle in rad")
    p.add_argument("--amplitude", type=float, help="flux amplitude in Wb "
                                                   "(default: field over the mean loop area)")
    p.add_argument("--durations", choices=DURATION_SOURCES, default="calibrated")
    p.add_argument("--phase-convention", choices=PHASE_CONVENTIONS, default="target")
    p.add_argument("--model-output", help="also write the effective model used")
    p.set_defaults(func=cmd_compile_gate)

    p = sub.add_parser("simulate", help="run a schedule and report fidelities")
    p.add_argument("--model", required=True, help="effective-model JSON")
    p.add_argument("--schedule", required=True, help="schedule JSON from compile-gate")
    p.add_argument("--initial", help="initial basis label (default 00)")
    p.add_argument("--amplitudes", help="initial amplitudes for 00,01,10,11, e.g. 1,0,1j,0")
    p.add_argument("--method", choices=["rwa", "full"], default="full")
    p.add_argument("--convention", choices=CONVENTIONS, default=DEFAULT_CONVENTION)
    p.add_argument("--dt", type=float, help="integrator step in ns (default: largest admissible)")
    p.add_argument("--samples", type=int, default=101, help="trajectory samples per pulse")
    p.add_argument("--trajectory", help="trajectory CSV output")
    p.add_argument("--output", help="final-state JSON output (default: stdout)")
    p.add_argument("--timestamp", action="store_true", help="add a generation timestamp")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="device-scale summary")
    common(p)
    device(p)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_report)
    return parser


DOMAIN_ERRORS = (OutsideWindowError, CompileError, NoOscillationError, DomainError)
USAGE_ERRORS = (UsageError, ParameterError, DtTooLargeError, OffResonantError,
                ZeroCouplingError, FileNotFoundError, ValueError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DOMAIN_ERRORS as exc:
        print(f"fluxsim: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DtTooLargeError as exc:
        print(f"fluxsim: dt = {exc.dt:.6g} ns is too large; use --dt {exc.suggested:.6g} "
              "or smaller", file=sys.stderr)
        return EXIT_USAGE
    except USAGE_ERRORS as exc:
        print(f"fluxsim: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
