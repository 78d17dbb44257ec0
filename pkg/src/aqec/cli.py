"""Command-line entry point: ``aqec <command> [options]``.

Every command accepts ``--config FILE`` (flat ``key = value`` text, or JSON
when the name ends in ``.json``); keys are the long option names with dashes
or underscores. Explicit flags override file values. Frequencies are in MHz
and times in us on the command line.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
import time
import warnings

import numpy as np

SCHEMA_VERSION = 1

log = logging.getLogger("aqec")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ----------------------------------------------------------------------------- config files


def load_config(path) -> dict:
    """Read a flat config file into ``{dest: value}``."""
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    with open(path) as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed JSON config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("JSON config must be an object")
    else:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string("[config]\n" + text)
        except configparser.Error as exc:
            raise UsageError(f"malformed config {path}: {exc}") from exc
        data = dict(cp["config"])
    return {k.replace("-", "_"): v for k, v in data.items()}


def _parse(parser, sub_parsers, argv):
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        raw = load_config(args.config)
        raw.pop("config", None)
        sub = sub_parsers[args.command]
        actions = {a.dest.lower(): a for a in sub._actions}
        unknown = sorted(k for k in raw if k.lower() not in actions)
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        values = {}
        for k, v in raw.items():
            a = actions[k.lower()]
            if isinstance(a, (argparse._StoreTrueAction, argparse._StoreFalseAction)) and not isinstance(v, bool):
                v = str(v).strip().lower() in ("1", "true", "yes", "on")
            values[a.dest] = v
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


# ----------------------------------------------------------------------------- helpers


def _mhz(x):
    from .hilbert import mhz

    return float(mhz(float(x)))


def _csv_list(kind=float):
    def conv(text):
        try:
            return [kind(v) for v in str(text).split(",") if v.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc

    return conv


def _linspace_spec(text):
    """``lo:hi:n`` -> ``np.linspace(lo, hi, n)``; ``a,b,c`` -> explicit values."""
    text = str(text)
    if ":" in text:
        try:
            lo, hi, n = text.split(":")
            return np.linspace(float(lo), float(hi), int(n))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"expected lo:hi:n, got {text!r}") from exc
    return np.asarray(_csv_list()(text))


def _load_record(path):
    from .optimizer import SearchResult

    if not path:
        raise UsageError("--record is required")
    if not os.path.exists(path):
        raise UsageError(f"record not found: {path}")
    try:
        return SearchResult.load(path)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed record {path}: {exc}") from exc


def _code_source(args):
    """``(H, pair, cutoff, kappa, kappa_q)`` from ``--record`` or the analytic code."""
    from .codes import sqrt3_code, sqrt3_hamiltonian

    if args.record:
        rec = _load_record(args.record)
        model = rec.model()
        return model.hamiltonian(), rec.pair, rec.config.cutoff, _mhz(rec.config.kappa), _mhz(rec.config.kappa_q)
    H, _ = sqrt3_hamiltonian(args.variant, _mhz(args.scale), not args.no_stabilization, args.cutoff)
    return H, sqrt3_code(args.variant, args.cutoff), args.cutoff, _mhz(args.kappa), _mhz(args.kappa_q)


def _add_code_options(p):
    p.add_argument("--record", help="discovery record (JSON); default is the analytic sqrt3 code")
    p.add_argument("--variant", type=int, default=1, choices=(1, 2))
    p.add_argument("--scale", type=float, default=10.0, help="sqrt3 Hamiltonian scale (MHz)")
    p.add_argument("--no-stabilization", action="store_true")
    p.add_argument("--cutoff", type=int, default=20)
    p.add_argument("--kappa", type=float, default=0.1, help="photon loss (MHz)")
    p.add_argument("--kappa-q", type=float, default=20.0, help="ancilla decay (MHz)")


def _evolve_branches(H, pair, cutoff, kappa, kappa_q, t, steps_per_unit):
    from .codes import loss_model
    from .lindblad import propagate_code

    joint = pair.embed()
    if t <= 0:
        from .lindblad import code_initial_states

        return joint, code_initial_states(joint)
    traj = propagate_code(loss_model(H, cutoff, kappa, kappa_q), joint, [0.0, t],
                          max(1, int(np.ceil(t * steps_per_unit))), store_steps=False)
    return joint, traj.final


# ----------------------------------------------------------------------------- commands


def cmd_discover(args, rec):
    from .optimizer import SearchConfig, train

    cfg = SearchConfig(cutoff=args.cutoff, distance=args.distance, kappa=args.kappa, kappa_q=args.kappa_q, T=args.T,
                       bound=args.bound, lr=args.lr, lr_final=args.lr_final, iters=args.iters, seed=args.seed,
                       steps_per_unit=args.steps_per_unit, kind=args.kind, checkpoint_every=args.checkpoint_every,
                       checkpoint_path=args.out, tangent=not args.no_tangent)
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    def progress(it, F):
        if it % max(1, args.iters // 20 or 1) == 0:
            print(f"iter {it:6d}  F = {F:.6f}", flush=True)

    result = train(cfg, progress)
    result.save(args.out)
    rec["outputs"].append(args.out)
    rec["results"] = {"fidelity": result.fidelity, "average_fidelity": result.average_fidelity,
                      "best_iteration": result.best_iteration}
    print(f"best {cfg.kind} fidelity {result.fidelity:.8f} (average {result.average_fidelity:.8f}) "
          f"at iteration {result.best_iteration}; record -> {args.out}")


def cmd_evaluate(args, rec):
    from .codes import loss_model
    from .lindblad import propagate_code
    from .objective import FidelityCurve, break_even, weighted_fidelity

    r = _load_record(args.record)
    cfg = r.config
    model = r.model()
    joint = r.pair.embed()
    # reproduce the recorded objective with the exact training discretization
    traj = propagate_code(model, joint, [0.0, cfg.T], cfg.n_steps, store_steps=False)
    F_T = float(weighted_fidelity(joint, traj.final, cfg.kind))
    print(f"recorded {cfg.kind} F(T={cfg.T}) = {r.fidelity:.12f}; recomputed {F_T:.12f}; "
          f"diff {abs(F_T - r.fidelity):.2e}")
    tgrid = np.linspace(0.0, args.tmax, args.points)
    steps = max(1, int(np.ceil((tgrid[1] - tgrid[0]) * args.steps_per_unit))) if args.points > 1 else 1
    m = loss_model(model.hamiltonian(), cfg.cutoff, _mhz(cfg.kappa), _mhz(cfg.kappa_q))
    R = np.moveaxis(propagate_code(m, joint, tgrid, steps, store_steps=False).at_grid(), 1, 0)
    curve = FidelityCurve(tgrid, weighted_fidelity(joint, R, args.kind), break_even(tgrid, _mhz(cfg.kappa)))
    curve.to_csv(args.csv)
    rec["outputs"].append(args.csv)
    rec["results"] = {"recorded_fidelity": r.fidelity, "recomputed_fidelity": F_T}


def cmd_wigner(args, rec):
    from .codes import reduced_mode_state, wigner

    H, pair, cutoff, kappa, kappa_q = _code_source(args)
    joint, branches = _evolve_branches(H, pair, cutoff, kappa, kappa_q, args.time, args.steps_per_unit)
    # rho(theta, phi) is linear in the three evolved branches
    c, s = np.cos(args.theta / 2), np.exp(1j * args.phi) * np.sin(args.theta / 2)
    R00, R11, R10 = branches
    rho = abs(c) ** 2 * R00 + abs(s) ** 2 * R11 + s * np.conj(c) * R10 + c * np.conj(s) * R10.conj().T
    x = np.linspace(-args.xmax, args.xmax, args.points)
    grid = wigner(reduced_mode_state(rho), x, x)
    grid.to_csv(args.csv)
    rec["outputs"].append(args.csv)
    rec["results"] = {"max_leakage": grid.max_leakage}
    print(f"Wigner grid {args.points}x{args.points} -> {args.csv}")


def cmd_bloch_map(args, rec):
    from .objective import bloch_average, bloch_map, write_bloch_csv

    H, pair, cutoff, kappa, kappa_q = _code_source(args)
    joint, branches = _evolve_branches(H, pair, cutoff, kappa, kappa_q, args.time, args.steps_per_unit)
    theta, phi, F = bloch_map(joint, branches, args.n_theta, args.n_phi)
    write_bloch_csv(args.csv, theta, phi, F)
    rec["outputs"].append(args.csv)
    avg = bloch_average(theta, phi, F)
    rec["results"] = {"sphere_average": avg, "min": float(F.min()), "max": float(F.max())}
    print(f"Bloch map at t={args.time} us: average {avg:.6f}, range [{F.min():.6f}, {F.max():.6f}] -> {args.csv}")


def cmd_bandwidth(args, rec):
    from .dressed import CouplerParams, bandwidth_scan, coupler_spectrum, write_bandwidth_csv

    if args.g_ratios is None or args.d_ratios is None:
        p = CouplerParams.from_ratios(_mhz(args.delta1), _mhz(args.g1), args.g_ratio, args.d_ratio, args.n_max)
        spec = coupler_spectrum(p)
        print(f"bandwidth {spec.bandwidth / (2 * np.pi):.6g} MHz; emission frequencies (MHz) "
              f"{np.round(spec.delta_g / (2 * np.pi), 6).tolist()}")
        rec["results"] = {"bandwidth_mhz": spec.bandwidth / (2 * np.pi)}
        return
    gr, dr = args.g_ratios, args.d_ratios
    L = bandwidth_scan(gr, dr, _mhz(args.delta1), _mhz(args.g1), args.n_max) - np.log10(2 * np.pi)
    write_bandwidth_csv(args.csv, gr, dr, L)
    rec["outputs"].append(args.csv)
    print(f"scan {len(gr)}x{len(dr)} of log10(bandwidth / MHz) -> {args.csv}")


def cmd_fluxonium(args, rec):
    from .dressed import fluxonium_spectrum

    lv = fluxonium_spectrum(args.EC, args.EJ, args.EL, args.phi_ext, args.basis_size)
    rec["results"] = {"omega_ge_ghz": lv.omega_ge, "omega_ef_ghz": lv.omega_ef, "r": lv.r}
    print(f"omega_ge = {lv.omega_ge:.4f} GHz\nomega_ef = {lv.omega_ef:.4f} GHz\nr = {lv.r:.4f}")


def _circuit_config(args):
    from .circuit import CircuitConfig

    return CircuitConfig.desk(args.scale, args.a_cutoff, _mhz(args.chi), _mhz(args.delta1), args.r,
                              variant=args.variant)


def cmd_circuit_sim(args, rec):
    from .circuit import simulate_circuit
    from .codes import sqrt3_code
    from .objective import LogicalPair

    cfg = _circuit_config(args)
    tmax = args.tmax if args.tmax is not None else 0.3 / cfg.kappa
    tgrid = np.linspace(0.0, tmax, args.points)
    if args.code == "sqrt3":
        pair = sqrt3_code(args.variant, args.a_cutoff)
    else:
        pair = LogicalPair.fock(args.a_cutoff + 1, 0, 1)
    on, swap = {"none": (True, True), "drives-off": (False, False), "omega0": (True, False)}[args.ablation]
    curve = simulate_circuit(cfg, pair, tgrid, on, swap)
    curve.to_csv(args.csv)
    rec["outputs"].append(args.csv)
    rec["results"] = {"t_us": tgrid.tolist(), "fidelity": curve.values.tolist(), "break_even": curve.baseline.tolist()}
    print(f"F({tmax:.4g} us) = {curve.values[-1]:.6f}; break-even {curve.baseline[-1]:.6f} -> {args.csv}")


def cmd_verify_sqrt3(args, rec):
    from .ansatz import hamiltonian_distance, max_out_of_band
    from .codes import kl_check, sqrt3_closed_form_betas, sqrt3_construction
    from .hilbert import number_operator

    con = sqrt3_construction(args.variant, args.cutoff)
    res = con.constraint_residuals()
    print(f"sqrt3 code, variant {args.variant}")
    worst = 0.0
    for k, v in res.items():
        v = float(np.max(np.abs(v)))
        worst = max(worst, v)
        print(f"  {k:<22}{v:.3e}")
    N = number_operator(args.cutoff)
    nbar = [float(np.vdot(p, N @ p).real) for p in (con.pair.psi0, con.pair.psi1)]
    print(f"  mean photon numbers   {nbar[0]:.15f} {nbar[1]:.15f}")
    entries = np.array([abs(con.H_tilde[m, n]) for m, n in con.constraint_entries])
    print(f"  constraint entries    max {entries.max():.3e}")
    kl = kl_check(con.pair)
    print(f"  Knill-Laflamme        max residual {kl.max_residual:.3e}")
    d = hamiltonian_distance(con.H_tilde)
    oob = max_out_of_band(con.H_tilde, 2)
    print(f"  hamiltonian distance  {d} (out-of-band {oob:.3e})")
    b1, b2 = sqrt3_closed_form_betas(con)
    print(f"  beta closed form      {b1:.12f} {b2:.12f}  (solved {con.beta1:.12f} {con.beta2:.12f})")
    rec["results"] = {"max_constraint_residual": worst, "kl": kl.max_residual, "distance": d,
                      "constraint_entries": entries.max()}
    ok = worst < 1e-12 and kl.max_residual < 1e-10 and d == 2 and entries.max() < 1e-12
    print("  ->", "OK" if ok else "FAILED")
    if not ok:
        return 2


def cmd_gradcheck(args, rec):
    from .adjoint import gradcheck
    from .ansatz import distance_d_basis
    from .hilbert import joint_operators
    from .lindblad import LindbladModel
    from .objective import LogicalPair

    rng = np.random.default_rng(args.seed)
    basis = distance_d_basis(args.cutoff, args.distance)
    a, b = joint_operators(args.cutoff)
    alpha = rng.uniform(-1, 1, len(basis)) * _mhz(args.alpha_scale)
    model = LindbladModel(basis.terms, alpha, ((_mhz(args.kappa), a), (_mhz(args.kappa_q), b)))
    pair = LogicalPair.random(args.cutoff + 1, rng).embed()
    rep = gradcheck(model, pair, args.T, args.n_steps, args.kind, args.eps, args.rtol, args.atol)
    print(rep.table())
    rec["results"] = {"max_rel_err": rep.max_rel_err, "ok": rep.ok}
    if not rep.ok:
        return 2


def cmd_export_waveforms(args, rec):
    from .circuit import DressedFrame, synthesize_drives, synthesize_flux_waveforms, write_waveform_csv
    from .dressed import coupler_spectrum

    cfg = _circuit_config(args)
    frame = DressedFrame(coupler_spectrum(cfg.coupler), cfg.a_cutoff)
    drives = synthesize_drives(frame, cfg.coefficients, cfg.omega)
    n = int(np.ceil(args.tmax * args.rate)) + 1
    t = np.linspace(0.0, args.tmax, n)
    e1, e2 = synthesize_flux_waveforms(drives, t, _mhz(args.omega_a), _mhz(args.omega_c), args.phi, args.phi,
                                       args.phi)
    write_waveform_csv(args.csv, t, e1, e2)
    rec["outputs"].append(args.csv)
    print(f"{len(drives.tones)} tones, {n} samples -> {args.csv}")


# ----------------------------------------------------------------------------- parser


def _add_circuit_options(p):
    p.add_argument("--scale", type=float, default=0.02, help="rate/drive scale relative to the discovery setting")
    p.add_argument("--a-cutoff", type=int, default=8)
    p.add_argument("--chi", type=float, default=10.0, help="dispersive shift (MHz)")
    p.add_argument("--delta1", type=float, default=5000.0, help="g-e detuning (MHz)")
    p.add_argument("--r", type=float, default=1.2, help="matched ratio Delta2/Delta1 = g2^2/g1^2")
    p.add_argument("--variant", type=int, default=1, choices=(1, 2))


def build_parser():
    parser = _Parser(prog="aqec", description="Autonomous QEC discovery and verification toolkit.")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value file (or .json); flags override it")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="cap BLAS threads (default: all cores)")
    common.add_argument("--run-record", help="write a JSON run record here")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=func)
        subs[name] = p
        return p

    p = add("discover", cmd_discover, "gradient search for a code and its correcting Hamiltonian")
    p.add_argument("--cutoff", type=int, default=20)
    p.add_argument("--distance", type=int, default=None)
    p.add_argument("--kappa", type=float, default=0.1, help="MHz")
    p.add_argument("--kappa-q", type=float, default=20.0, help="MHz")
    p.add_argument("--T", type=float, default=0.5, help="us")
    p.add_argument("--bound", type=float, default=10.0, help="|alpha| bound (MHz)")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lr-final", type=float, default=3e-4)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--steps-per-unit", type=int, default=2000, help="RK4 steps per us")
    p.add_argument("--kind", default="modified", choices=("average", "modified", "entanglement"))
    p.add_argument("--checkpoint-every", type=int, default=100)
    p.add_argument("--no-tangent", action="store_true", help="feed raw amplitude gradients to Adam")
    p.add_argument("--out", default="record.json")

    p = add("evaluate", cmd_evaluate, "fidelity curve of a discovery record")
    p.add_argument("--record", required=False)
    p.add_argument("--tmax", type=float, default=10.0)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--steps-per-unit", type=int, default=1000)
    p.add_argument("--kind", default="average", choices=("average", "modified", "entanglement"))
    p.add_argument("--csv", default="fidelity.csv")

    p = add("wigner", cmd_wigner, "Wigner function of a code state")
    _add_code_options(p)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--time", type=float, default=0.0, help="evolve for this long first (us)")
    p.add_argument("--steps-per-unit", type=int, default=1000)
    p.add_argument("--xmax", type=float, default=4.0)
    p.add_argument("--points", type=int, default=81)
    p.add_argument("--csv", default="wigner.csv")

    p = add("bloch-map", cmd_bloch_map, "single-state fidelity over the Bloch sphere")
    _add_code_options(p)
    p.add_argument("--time", type=float, default=0.5)
    p.add_argument("--steps-per-unit", type=int, default=1000)
    p.add_argument("--n-theta", type=int, default=33)
    p.add_argument("--n-phi", type=int, default=64)
    p.add_argument("--csv", default="bloch.csv")

    p = add("bandwidth", cmd_bandwidth, "dressed emission bandwidth (single point or scan)")
    p.add_argument("--delta1", type=float, default=1000.0, help="MHz")
    p.add_argument("--g1", type=float, default=100.0, help="MHz")
    p.add_argument("--n-max", type=int, default=4)
    p.add_argument("--g-ratio", type=float, default=1.2, help="g2^2/g1^2 for a single point")
    p.add_argument("--d-ratio", type=float, default=1.2, help="Delta2/Delta1 for a single point")
    p.add_argument("--g-ratios", type=_linspace_spec, default=None, help="scan rows, lo:hi:n or a,b,c")
    p.add_argument("--d-ratios", type=_linspace_spec, default=None, help="scan columns, lo:hi:n or a,b,c")
    p.add_argument("--csv", default="bandwidth.csv")

    p = add("fluxonium", cmd_fluxonium, "fluxonium transition frequencies and matrix-element ratio")
    p.add_argument("--EC", type=float, default=0.95, help="GHz")
    p.add_argument("--EJ", type=float, default=4.75, help="GHz")
    p.add_argument("--EL", type=float, default=0.65, help="GHz")
    p.add_argument("--phi-ext", type=float, default=0.0)
    p.add_argument("--basis-size", type=int, default=60)

    p = add("circuit-sim", cmd_circuit_sim, "rotating-frame simulation with synthesized drives")
    _add_circuit_options(p)
    p.add_argument("--code", default="sqrt3", choices=("sqrt3", "trivial"))
    p.add_argument("--ablation", default="none", choices=("none", "drives-off", "omega0"))
    p.add_argument("--tmax", type=float, default=None, help="us (default 0.3 / kappa)")
    p.add_argument("--points", type=int, default=7)
    p.add_argument("--csv", default="circuit.csv")

    p = add("verify-sqrt3", cmd_verify_sqrt3, "check the analytic sqrt3 construction")
    p.add_argument("--variant", type=int, default=1, choices=(1, 2))
    p.add_argument("--cutoff", type=int, default=20)

    p = add("gradcheck", cmd_gradcheck, "adjoint gradients versus finite differences on a random model")
    p.add_argument("--cutoff", type=int, default=3)
    p.add_argument("--distance", type=int, default=2)
    p.add_argument("--T", type=float, default=0.05)
    p.add_argument("--n-steps", type=int, default=100)
    p.add_argument("--kind", default="modified", choices=("average", "modified", "entanglement"))
    p.add_argument("--alpha-scale", type=float, default=2.0, help="MHz")
    p.add_argument("--kappa", type=float, default=0.5, help="MHz")
    p.add_argument("--kappa-q", type=float, default=2.0, help="MHz")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--rtol", type=float, default=1e-5)
    p.add_argument("--atol", type=float, default=1e-9)

    p = add("export-waveforms", cmd_export_waveforms, "flux-pump waveforms eps1/eps2 as CSV")
    _add_circuit_options(p)
    p.add_argument("--tmax", type=float, default=0.01, help="us")
    p.add_argument("--rate", type=float, default=1e5, help="samples per us")
    p.add_argument("--omega-a", type=float, default=3500.0, help="MHz")
    p.add_argument("--omega-c", type=float, default=2500.0, help="MHz")
    p.add_argument("--phi", type=float, default=0.1)
    p.add_argument("--csv", default="waveforms.csv")
    return parser, subs


def _numerical_errors():
    from .dressed import BranchCrossingError, ConvergenceError
    from .lindblad import IntegrationDivergedError
    from .optimizer import StateCollapseError

    return (IntegrationDivergedError, ConvergenceError, BranchCrossingError, StateCollapseError, FloatingPointError,
            np.linalg.LinAlgError)


def run(argv=None) -> int:
    parser, subs = build_parser()
    try:
        args = _parse(parser, subs, argv)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    rec = {"schema_version": SCHEMA_VERSION, "command": args.command, "seed": args.seed,
           "config": {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in vars(args).items()
                      if k != "func"},
           "outputs": [], "timings": {}}
    t0 = time.perf_counter()
    try:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=args.threads), warnings.catch_warnings():
            warnings.simplefilter("default")
            code = args.func(args, rec) or 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _numerical_errors() as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        code = 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rec["timings"]["wall_s"] = time.perf_counter() - t0
    rec["exit_code"] = code
    if args.run_record:
        rec["outputs"].append(args.run_record)
        with open(args.run_record, "w") as fh:
            json.dump(rec, fh, indent=1, default=float)
    return code


def main():  # pragma: no cover
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
