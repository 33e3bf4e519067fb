"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys

import numpy as np

from . import io
from .compiler import CompileError, check_structure, compile_povm
from .linalg import make_rng, random_ket
from .povm import mub_probe_states_d4, sic_povm_d4, usd_state_sets, gram_det
from .simulator import apply_correction, calibrate, dither, sample_counts, simulate_batch
from .tasks.randomness import THREADS_ENV
from .tomography import TomographyError, measurement_fidelity, mle_reconstruct

log = logging.getLogger("povm_forge")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
VERIFY_TOL = 1e-8

NOUTCOME_REFERENCE = [0.0625, 0.1184, 0.1708, 0.2210, 0.2263, 0.2323, 0.2367, 0.2392,
                      0.2418, 0.2431, 0.2445, 0.2458, 0.2471, 0.2481, 0.2491, 0.2500]
W_OBS = 0.24730


class InputError(Exception):
    pass


class NumericalError(Exception):
    pass


def _emit(args, record, text: str):
    if args.json:
        print(json.dumps(record, indent=2))
    else:
        print(text)


def _probes(spec: str, dim: int):
    if spec == "mub":
        if dim != 4:
            raise InputError(f"built-in MUB probes exist for dim 4 only (program dim {dim})")
        return mub_probe_states_d4()
    states = io.states_from_dict(io.load_json(spec))
    if states.dim != dim:
        raise InputError(f"probe dimension {states.dim} does not match {dim}")
    return states


def _error(path, program):
    if path is None:
        return None
    return io.phase_error_from_dict(program, io.load_json(path))


# -- file commands

def cmd_compile(args) -> int:
    povm = io.povm_from_dict(io.load_json(args.povm))
    try:
        program, trace = compile_povm(povm)
    except CompileError as exc:
        raise InputError(str(exc)) from exc
    problems = check_structure(program, trace)
    if problems:
        raise NumericalError("; ".join(problems))
    text = io.dump_json(io.program_to_dict(program), args.out)
    summary = {"dim": program.dim, "n_outcomes": program.n_outcomes, "modules": program.n_modules,
               "effective_dims": trace.effective_dims,
               "active_mzis": int(program.active_mzis().sum())}
    if args.out is None:
        print(text)
        print(f"# {program.n_modules} modules, effective dims {trace.effective_dims}", file=sys.stderr)
    else:
        _emit(args, summary, f"wrote {args.out}: {program.n_modules} modules, "
                             f"effective dims {trace.effective_dims}, "
                             f"{summary['active_mzis']} active MZIs")
    return EXIT_OK


def _phase_diff(a, b):
    return np.abs(np.angle(np.exp(1j * (a - b))))


def cmd_verify(args) -> int:
    program = io.program_from_dict(io.load_json(args.program))
    povm = io.povm_from_dict(io.load_json(args.povm))
    if (program.dim, program.n_outcomes) != (povm.dim, povm.n_outcomes):
        raise InputError(f"program is d={program.dim}, n={program.n_outcomes} but measurement is "
                         f"d={povm.dim}, n={povm.n_outcomes}")
    if args.trials < 1:
        raise InputError("--trials must be >= 1")
    if args.probes == "mub":
        kets = _probes("mub", program.dim).states
    else:
        rng = make_rng(args.seed)
        kets = np.array([random_ket(program.dim, rng) for _ in range(args.trials)])
    p_sim = simulate_batch(program, kets)
    p_born = np.real(np.einsum("ka,iab,kb->ik", kets.conj(), povm.elements, kets))
    dev = np.abs(p_sim - p_born)
    worst = float(dev.max())
    i, k = np.unravel_index(int(np.argmax(dev)), dev.shape)
    tol = args.tol if args.tol is not None else VERIFY_TOL
    ok = worst < tol
    record = {"max_deviation": worst, "tolerance": tol, "pass": ok,
              "worst_outcome": int(i) + 1, "worst_probe": int(k)}
    lines = [f"max |p_sim - p_born| = {worst:.3e} over {len(kets)} probes ({'PASS' if ok else 'FAIL'})"]
    if not ok:
        bad = np.nonzero(dev.max(axis=1) >= tol)[0]
        first = int(bad[0]) + 1
        record["first_deviating_outcome"] = first
        lines.append(f"worst at outcome {i + 1}, probe {k}; first deviating outcome {first} "
                     f"({program.outcome_port(first)})")
        try:
            ref, _ = compile_povm(povm)
            diff = _phase_diff(program.phases, ref.phases)
            mi, mj, ms = np.unravel_index(int(np.argmax(diff)), diff.shape)
            if diff[mi, mj, ms] > 1e-9:
                where = f"{mi + 1}.{mj + 1}.{'alpha' if ms == 0 else 'beta'}"
                record["largest_setting_difference"] = {"shifter": where, "radians": float(diff[mi, mj, ms])}
                lines.append(f"largest difference from the compiled settings: {where} "
                             f"by {diff[mi, mj, ms]:.4f} rad")
        except CompileError:
            pass
    _emit(args, record, "\n".join(lines))
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_simulate(args) -> int:
    program = io.program_from_dict(io.load_json(args.program))
    states = _probes(args.states, program.dim)
    probs = simulate_batch(program, states.states, _error(args.error, program))
    record = {"probabilities": probs.T.tolist()}
    text = "\n".join(" ".join(f"{p:.10f}" for p in col) for col in probs.T)
    _emit(args, record, text)
    return EXIT_OK


def cmd_sample(args) -> int:
    program = io.program_from_dict(io.load_json(args.program))
    probes = _probes(args.probes, program.dim)
    if args.shots < 1:
        raise InputError("--shots must be >= 1")
    error = _error(args.error, program)
    if args.bias:
        program = dither(program, args.bias)
    counts = sample_counts(program, probes, args.shots, args.seed, error)
    text = io.dump_json(io.counts_to_dict(counts), args.out)
    if args.out is None:
        print(text)
    else:
        _emit(args, {"out": args.out, "shots": args.shots, "seed": args.seed},
              f"wrote {args.out}: {counts.n_outcomes} outcomes x {counts.n_probes} probes")
    return EXIT_OK


def cmd_tomo(args) -> int:
    counts = io.counts_from_dict(io.load_json(args.counts))
    ideal = io.povm_from_dict(io.load_json(args.ideal)) if args.ideal else None
    if args.probes == "mub":
        probes = mub_probe_states_d4()
    else:
        probes = io.states_from_dict(io.load_json(args.probes))
    try:
        res = mle_reconstruct(probes, counts, max_iter=args.max_iter)
    except TomographyError as exc:
        raise InputError(str(exc)) from exc
    if args.out:
        io.dump_json(io.matrices_to_dict(res.povm.elements), args.out)
    record = {"log_likelihood": res.log_likelihood, "iterations": res.iterations,
              "converged": res.converged}
    lines = [f"log-likelihood {res.log_likelihood:.6f} after {res.iterations} iterations"
             f"{'' if res.converged else ' (not converged)'}"]
    if ideal is not None:
        fid = measurement_fidelity(res.povm, ideal)
        record["fidelity"] = fid
        lines.append(f"measurement fidelity {fid:.6f}")
    if not args.out:
        record["povm"] = io.matrices_to_dict(res.povm.elements)
    _emit(args, record, "\n".join(lines) if args.out else json.dumps(record["povm"]) + "\n" + "\n".join(lines))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    program = io.program_from_dict(io.load_json(args.program))
    counts = io.counts_from_dict(io.load_json(args.counts))
    probes = _probes(args.probes, program.dim)
    measured = program if args.bias == 0 else dither(program, args.bias)
    res = calibrate(measured, probes, counts)
    est = io.phase_error_to_dict(res.error)
    if args.out:
        io.dump_json(est, args.out)
    if args.corrected:
        io.dump_json(io.program_to_dict(apply_correction(program, res.error)), args.corrected)
    record = {"residual": res.residual, "converged": res.converged, "iterations": res.iterations,
              "max_abs": res.error.max_abs, "deviations": est}
    _emit(args, record, f"residual {res.residual:.3e} after {res.iterations} iterations"
                        f"{'' if res.converged else ' (best so far, not converged)'}; "
                        f"max |dphi| = {res.error.max_abs:.5f} rad"
                        + ("" if args.out else "\n" + json.dumps(est, indent=2)))
    return EXIT_OK


# -- benchmark suites

def _rows_usd(args):
    from .tasks.discrimination import usd_optimize
    ref = [0.7259, 0.5974, 0.5575]
    for k, (s, r) in enumerate(zip(usd_state_sets(), ref), start=1):
        res = usd_optimize(s)
        yield (f"set{k} p_incn", res.p_incn, r,
               {"gram_det": gram_det(s), "coefficients": res.coefficients.tolist()})


def _rows_mesd(args):
    from .tasks.discrimination import mesd_min_error
    ref = [0.1364, 0.0921, 0.0953]
    for k, (s, r) in enumerate(zip(usd_state_sets(), ref), start=1):
        yield f"set{k} p_err", mesd_min_error(s), r, {}


def _rows_estimate(args):
    from .tasks import estimation as est
    opt = est.two_copy_optimal_povm()
    mp = est.massar_popescu_povm()
    yield "optimal average F", est.average_fidelity(opt), 0.75, {}
    yield "projective average F", est.average_fidelity(mp), 0.75, {}
    worst, n = est.worst_fidelity(mp)
    yield "projective worst F", worst, 2 / 3, {"direction": np.asarray(n).tolist()}
    yield "random guess F", est.average_fidelity(est.random_guess_scheme()), 0.5, {}


def _rows_witness(args):
    from .tasks.randomness import sic_witness
    from .povm import sic_states_d4
    s = sic_states_d4()
    g = np.abs(s.states.conj() @ s.states.T) ** 2
    off = g[~np.eye(len(s), dtype=bool)]
    yield "SIC witness", sic_witness(sic_povm_d4()), 0.25, {}
    yield "max pairwise overlap", float(off.max()), 0.2, {"min": float(off.min())}


def _rows_noutcome(args):
    from .tasks.randomness import max_psuc_n_outcomes
    ns = [1, 2, 3, 4, 15, 16] if args.fast else list(range(1, 17))
    for n in ns:
        res = max_psuc_n_outcomes(n, threads=args.threads)
        yield f"N={n}", res.value, NOUTCOME_REFERENCE[n - 1], {"best_subset": list(res.best_subset),
                                                                "n_sdps": res.n_sdps}


def _rows_hmin(args):
    from .tasks.randomness import min_entropy
    w = W_OBS if args.witness is None else args.witness
    res = min_entropy(w)
    yield f"H_min(W={w})", res.h_min, 2.740 if w == W_OBS else math.nan, {"p_guess": res.p_guess}


def _rows_shannon(args):
    from .tasks.randomness import shannon_bound
    w = W_OBS if args.witness is None else args.witness
    res = shannon_bound(w, m=args.m)
    ref = 2.951 if (w == W_OBS and args.m == 8) else math.nan
    yield (f"H(W={w}, m={args.m})", res.bound, ref,
           {"status": res.status, "c_m": res.quadrature.c_m, "node_terms": res.node_terms.tolist()})


def _rows_eat(args):
    from .tasks.eat import eat_rate, preset_params
    p = preset_params()
    res = eat_rate(p)
    yield "rate", res.rate, 2.9786, {"correction": res.correction, **res.terms}
    yield "f_min(W_obs)", res.f_min_obs, 3.0227, {}


SUITES = {"usd": _rows_usd, "mesd": _rows_mesd, "estimate": _rows_estimate, "witness": _rows_witness,
          "noutcome": _rows_noutcome, "hmin": _rows_hmin, "shannon": _rows_shannon, "eat": _rows_eat}


def cmd_bench(args) -> int:
    if args.threads is not None:
        os.environ[THREADS_ENV] = str(args.threads)
    rows = list(SUITES[args.suite](args))
    records = [io.task_record({"suite": args.suite, "case": case}, value,
                              {"reference": None if math.isnan(ref) else ref, **details})
               for case, value, ref, details in rows]
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["suite", "case", "value", "reference", "abs_diff"])
            for case, value, ref, _ in rows:
                w.writerow([args.suite, case, f"{value:.6f}", "" if math.isnan(ref) else f"{ref:.4f}",
                            "" if math.isnan(ref) else f"{abs(value - ref):.2e}"])
    width = max(len(r[0]) for r in rows)
    lines = [f"{'case':<{width}}  {'value':>10}  {'reference':>10}  {'abs diff':>9}"]
    for case, value, ref, _ in rows:
        r = "-" if math.isnan(ref) else f"{ref:.4f}"
        dv = "-" if math.isnan(ref) else f"{abs(value - ref):.2e}"
        lines.append(f"{case:<{width}}  {value:>10.6f}  {r:>10}  {dv:>9}")
    _emit(args, records, "\n".join(lines))
    return EXIT_OK


# -- parser

def _global_flags(p: argparse.ArgumentParser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0,
                   help="seed for every random draw (default 0)")
    p.add_argument("--tol", type=float, default=default, help="pass/fail tolerance (verify: 1e-8)")
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="machine-readable output")
    p.add_argument("--threads", type=int, default=default,
                   help=f"worker processes for sweeps (env {THREADS_ENV})")
    p.add_argument("-v", "--verbose", action="store_true",
                   default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="povm-forge", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = add("compile", cmd_compile, "compile a rank-1 measurement into MZI settings")
    p.add_argument("povm")
    p.add_argument("-o", "--out")

    p = add("verify", cmd_verify, "compare a program against the Born rule of a measurement")
    p.add_argument("program")
    p.add_argument("povm")
    p.add_argument("--probes", choices=["random", "mub"], default="random")
    p.add_argument("--trials", type=int, default=100, help="number of random probes")

    p = add("simulate", cmd_simulate, "outcome probabilities for a set of input states")
    p.add_argument("program")
    p.add_argument("--states", default="mub", help="state-set JSON file or 'mub'")
    p.add_argument("--error", help="phase-error JSON to inject")

    p = add("sample", cmd_sample, "sample synthetic counts")
    p.add_argument("program")
    p.add_argument("--probes", default="mub", help="state-set JSON file or 'mub'")
    p.add_argument("--shots", type=int, default=100000, help="shots per probe")
    p.add_argument("--error", help="phase-error JSON to inject")
    p.add_argument("--bias", type=float, default=0.0,
                   help="shift beta by this much on cross-state MZIs before sampling")
    p.add_argument("-o", "--out")

    p = add("tomo", cmd_tomo, "maximum-likelihood measurement tomography")
    p.add_argument("counts")
    p.add_argument("--probes", default="mub", help="state-set JSON file or 'mub'")
    p.add_argument("--ideal", help="measurement JSON to report fidelity against")
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("-o", "--out")

    p = add("calibrate", cmd_calibrate, "fit phase deviations to observed counts")
    p.add_argument("program")
    p.add_argument("counts")
    p.add_argument("--probes", default="mub", help="state-set JSON file or 'mub'")
    p.add_argument("-o", "--out", help="write the estimated phase error here")
    p.add_argument("--corrected", help="write the corrected program here")
    p.add_argument("--bias", type=float, default=0.0,
                   help="counts were taken with beta shifted by this much on cross-state MZIs "
                        "(see 'sample --bias'); resolves the sign of their deviations")

    p = add("bench", cmd_bench, "reproduce a benchmark table")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--fast", action="store_true", help="noutcome: only N in {1,2,3,4,15,16}")
    p.add_argument("--witness", type=float, help="hmin/shannon: witness value (default 0.2473)")
    p.add_argument("-m", type=int, default=8, help="shannon: quadrature nodes")
    p.add_argument("--csv", help="also write the table as CSV")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is None and THREADS_ENV in os.environ:
        try:
            args.threads = int(os.environ[THREADS_ENV])
        except ValueError:
            print(f"error: {THREADS_ENV} must be an integer", file=sys.stderr)
            return EXIT_INPUT
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    from .tasks.discrimination import SolverError
    try:
        return args.func(args)
    except (InputError, io.FormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, SolverError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
