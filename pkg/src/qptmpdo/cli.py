"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 validation error,
4 numeric failure. Human-readable summaries go to standard output; machine
results go only to the ``--out`` file (or, when ``--out`` is omitted, to
``$QPTMPDO_OUT_DIR/<command>.<format>`` if that variable is set).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import channels as ch
from . import linalg, mpdo, qpt_io
from .circuit import NoiseMode, NoisePolicy, attach_noise, load_circuit, route_to_adjacent
from .errors import (
    ConfigurationError,
    NumericInputError,
    OptimizationDivergedError,
    ParameterError,
    RepresentationError,
    ResourceError,
    ValidationError,
)
from .graph import load_graph

OUT_DIR_ENV = "QPTMPDO_OUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("qptmpdo")


@dataclass(frozen=True)
class CliConfig:
    """Validated options shared by the subcommands."""

    command: str
    chi: int | None
    kappa: int | None
    noise: str
    seed: int
    out: Path | None
    fmt: str

    @classmethod
    def from_args(cls, args) -> "CliConfig":
        for name in ("chi", "kappa"):
            v = getattr(args, name, None)
            if v is not None and v < 1:
                raise ConfigurationError(f"--{name} must be >= 1, got {v}")
        fmt = getattr(args, "format", "csv")
        out = getattr(args, "out", None)
        command = args.command if args.command != "qpt" else f"qpt-{args.qpt_command}"
        if out is None and os.environ.get(OUT_DIR_ENV) and command not in ("qpt-validate", "qpt-convert"):
            out = Path(os.environ[OUT_DIR_ENV]) / f"{command}.{fmt}"
        return cls(
            command=command,
            chi=getattr(args, "chi", None),
            kappa=getattr(args, "kappa", None),
            noise=getattr(args, "noise", "ideal"),
            seed=getattr(args, "seed", 0),
            out=Path(out) if out is not None else None,
            fmt=fmt,
        )

    def trunc(self) -> mpdo.TruncationConfig:
        return mpdo.TruncationConfig(chi_max=self.chi, kappa_max=self.kappa)


# --- shared option groups --------------------------------------------------


def _add_noise_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("noise")
    g.add_argument("--noise", choices=[m.value for m in NoiseMode], default="ideal")
    g.add_argument("--p1", type=float, default=0.0, help="single-qubit depolarizing rate")
    g.add_argument("--p2", type=float, default=0.0, help="two-qubit-gate depolarizing rate")
    g.add_argument("--t1", type=float, help="T1 in microseconds (all qubits)")
    g.add_argument("--t2", type=float, help="T2 in microseconds (all qubits)")
    g.add_argument("--p-meas", type=float, default=0.0, help="readout bit-flip probability")
    g.add_argument("--calibration", type=Path, help="calibration JSON (general model from its table)")
    g.add_argument("--qubit-order", nargs="+", help="calibration qubit names for chain sites 0, 1, ...")
    g.add_argument("--qpt", type=Path, help="QPT record file (required for --noise qpt)")
    g.add_argument("--rank-cutoff", type=int)
    g.add_argument("--eig-floor", type=float, default=1e-6)


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--chi", type=int, help="inner bond cap (default: uncapped)")
    p.add_argument("--kappa", type=int, help="noise bond cap (default: uncapped)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def _add_opt_flags(p: argparse.ArgumentParser, loss: str) -> None:
    g = p.add_argument_group("optimizer")
    g.add_argument("--epochs", type=int, default=200)
    g.add_argument("--lr", type=float, default=0.1)
    g.add_argument("--grad", choices=["fd", "param-shift"], default="fd")
    g.add_argument("--h", type=float, default=1e-3, help="finite-difference step (rad)")
    g.add_argument("--restarts", type=int, default=1)
    g.add_argument("--backend", choices=["mpdo", "dense"], default="mpdo")
    g.set_defaults(loss=loss)


def build_policy(args) -> NoisePolicy:
    mode = NoiseMode(args.noise)
    if mode is NoiseMode.IDEAL:
        return NoisePolicy.ideal()
    if mode is NoiseMode.QPT:
        if args.qpt is None:
            raise ConfigurationError("--noise qpt needs --qpt FILE")
        records = qpt_io.load_qpt_file(args.qpt)
        gateset = qpt_io.build_noisy_gateset(records, args.rank_cutoff, args.eig_floor)
        return NoisePolicy(NoiseMode.QPT, gateset=gateset, p_meas=args.p_meas)
    if args.calibration is not None:
        cal = qpt_io.load_calibration(args.calibration)
        pol = qpt_io.standard_policy_from_calibration(cal, qubit_order=args.qubit_order, p1=args.p1)
        if mode is NoiseMode.UNIFIED and pol.mode is not NoiseMode.IDEAL:
            pol = replace(pol, mode=NoiseMode.UNIFIED)
        return pol
    t1 = args.t1 * 1e-6 if args.t1 is not None else None
    t2 = args.t2 * 1e-6 if args.t2 is not None else None
    return NoisePolicy(mode, p1=args.p1, p2=args.p2, t1=t1, t2=t2, p_meas=args.p_meas)


def _emit(cfg: CliConfig, rows, kind: str) -> None:
    from .experiments.results import emit_results

    if cfg.out is None:
        return
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    emit_results(rows, cfg.out, cfg.fmt, kind)
    print(f"wrote {cfg.out}")


def _top(dist: np.ndarray, n: int, k: int = 8) -> str:
    order = np.argsort(-dist, kind="stable")[:k]
    return ", ".join(f"|{format(int(i), f'0{n}b')}> {dist[i]:.6f}" for i in order if dist[i] > 0)


# --- subcommands -----------------------------------------------------------


def cmd_run(args, cfg: CliConfig) -> int:
    from .experiments.results import distribution_rows

    circuit = load_circuit(args.circuit)
    policy = build_policy(args)
    prepared = attach_noise(route_to_adjacent(circuit), policy)
    state = mpdo.simulate_mpdo(prepared, cfg.trunc())
    dist, drift = mpdo.probabilities(state, return_drift=True)
    print(f"qubits: {circuit.n_qubits}  gates: {len(prepared)}  noise: {policy.mode.value}")
    print(f"trace drift: {drift:.3e}")
    print(f"truncation error (sum): {state.truncation_error:.6e}")
    for ev in state.log:
        if ev.error > 0:
            print(f"  {ev.kind} site {ev.site}: error {ev.error:.3e} (kept {ev.kept}, dropped {ev.discarded})")
    if args.shots:
        samples = mpdo.sample_bitstrings(state, args.shots, cfg.seed)
        print("samples: " + ", ".join(f"{b}:{c}" for b, c in sorted(samples.items())))
    print("distribution: " + _top(dist, circuit.n_qubits))
    _emit(cfg, distribution_rows(dist / dist.sum(), circuit.n_qubits), "distribution")
    return EXIT_OK


def _kraus_doc(key, k: ch.KrausChannel) -> dict:
    label, qubits = key
    return {
        "gate_label": label,
        "qubits": list(qubits),
        "eigenvalues": [float(e) for e in (k.eigenvalues if k.eigenvalues is not None else [])],
        "pruned_weight": k.pruned_weight,
        "kraus": [[[[float(z.real), float(z.imag)] for z in row] for row in op] for op in k.operators],
    }


def cmd_qpt(args, cfg: CliConfig) -> int:
    records = qpt_io.load_qpt_file(args.input)
    if args.qpt_command == "validate":
        for rec in records:
            herm = linalg.hermiticity_defect(rec.chi)
            choi = ch.chi_to_choi(rec.chi_matrix(), tol=qpt_io.RECORD_HERMITIAN_TOL)
            eta, _ = linalg.hermitian_eig(choi.entries, tol=qpt_io.RECORD_HERMITIAN_TOL)
            gs = qpt_io.build_noisy_gateset([rec], args.rank_cutoff, args.eig_floor)
            kraus = gs[(rec.gate_label, rec.qubits)]
            rep = ch.validate_cptp(kraus, qpt_io.GATESET_CPTP_TOL)
            print(f"record {rec.name}: timestamp {rec.timestamp}")
            print(f"  hermiticity defect: {herm:.3e}")
            print(f"  eta: " + " ".join(f"{e:.6g}" for e in eta))
            print(f"  kraus operators: {kraus.rank}  completeness defect: {rep.defect:.3e}")
            for i, e in enumerate(kraus.eigenvalues if kraus.eigenvalues is not None else []):
                print(f"    K{i}: eta = {e:.6g}")
        return EXIT_OK
    gateset = qpt_io.build_noisy_gateset(records, args.rank_cutoff, args.eig_floor)
    doc = {"schema_version": 1, "gates": [_kraus_doc(k, v) for k, v in gateset.items()]}
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=1)
    for key, k in gateset.items():
        print(f"{key[0]}{list(key[1])}: {k.rank} Kraus operator(s), pruned weight {k.pruned_weight:.3e}")
    print(f"wrote {out}")
    return EXIT_OK


def _opt_config(args):
    from .experiments.optimize import OptimizerConfig

    return OptimizerConfig(
        epochs=args.epochs, lr=args.lr, grad=args.grad, h=args.h, seed=args.seed, loss=args.loss,
        restarts=args.restarts,
    )


def cmd_maxcut(args, cfg: CliConfig) -> int:
    from .dense import maxcut_bruteforce
    from .experiments.maxcut import run_maxcut
    from .experiments.results import distribution_rows

    graph = load_graph(args.graph)
    policy = build_policy(args)
    res = run_maxcut(graph, args.p, _opt_config(args), policy, args.backend, cfg.trunc())
    brute = maxcut_bruteforce(graph)
    print(f"graph: {graph.n_vertices} vertices, {len(graph.edges)} edges; depth p = {args.p}")
    print(f"final loss {res.trace.final_loss:.6f} (initial {res.trace.initial_loss:.6f})")
    print("most probable: " + ", ".join(f"|{b}> (cut {graph.cut_value(b)})" for b in res.best_bitstrings))
    print("top states: " + _top(res.distribution, graph.n_vertices))
    print(f"expected cut {res.cut_value:.6f}; brute-force maximum {brute.value}")
    _emit(cfg, distribution_rows(res.distribution, graph.n_vertices), "distribution")
    return EXIT_OK


def cmd_entangler(args, cfg: CliConfig) -> int:
    from .experiments.entangler import IsingSpec, run_entangler
    from .experiments.results import trace_rows

    spec = IsingSpec(n_measure=args.n_measure, j_sm=args.j_sm)
    policy = build_policy(args)
    res = run_entangler(
        spec, args.depth, _opt_config(args), policy, args.backend, cfg.trunc(), reference_seed=args.reference_seed
    )
    tr = res.trace
    print(f"qubits: {spec.n_qubits} (target {spec.target}); depth {args.depth}; params {spec.n_params(args.depth)}")
    print(f"JSD: initial {tr.initial_loss:.6e} final {tr.final_loss:.6e}")
    print(f"fidelity: final {tr.fidelities[-1]:.6f}")
    print("distribution: " + _top(tr.distribution, spec.n_qubits))
    _emit(cfg, trace_rows(tr.losses, tr.fidelities), "trace")
    return EXIT_OK


def cmd_sweep(args, cfg: CliConfig) -> int:
    from .experiments.sweep import truncation_sweep

    policy = build_policy(args)
    table = truncation_sweep(
        args.qubits, args.depths, args.trials, args.chi_grid, args.kappa_grid, policy, cfg.seed,
        crosstalk=not args.no_crosstalk, workers=args.workers,
    )
    print(f"{'Q':>2} {'depth':>5} {'chi':>4} {'kappa':>5} {'mean F':>10} {'stderr':>9}")
    for p in table.points:
        print(f"{p.n_qubits:>2} {p.depth:>5} {p.chi!s:>4} {p.kappa!s:>5} {p.mean:>10.6f} {p.stderr:>9.2e}")
    _emit(cfg, table.rows(), "sweep")
    return EXIT_OK


# --- entry point -----------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qptmpdo", description="Noisy circuit simulation with MPDO tensor networks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a circuit file")
    p.add_argument("circuit", type=Path)
    p.add_argument("--shots", type=int, default=0)
    _add_sim_flags(p)
    _add_noise_flags(p)

    p = sub.add_parser("qpt", help="inspect or convert QPT record files")
    qsub = p.add_subparsers(dest="qpt_command", required=True)
    q = qsub.add_parser("convert", help="build a Kraus gateset file")
    q.add_argument("input", type=Path)
    q.add_argument("output", type=Path)
    q.add_argument("--rank-cutoff", type=int)
    q.add_argument("--eig-floor", type=float, default=1e-6)
    q = qsub.add_parser("validate", help="print per-record diagnostics")
    q.add_argument("input", type=Path)
    q.add_argument("--rank-cutoff", type=int)
    q.add_argument("--eig-floor", type=float, default=1e-6)

    p = sub.add_parser("maxcut", help="QAOA MaxCut on a graph file")
    p.add_argument("graph", type=Path)
    p.add_argument("-p", type=int, default=1, help="QAOA depth")
    _add_sim_flags(p)
    _add_noise_flags(p)
    _add_opt_flags(p, "neg_cut")

    p = sub.add_parser("entangler", help="variational entangled-state preparation")
    p.add_argument("--n-measure", type=int, default=2)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--j-sm", type=float, default=1.0)
    p.add_argument("--reference-seed", type=int, default=1234)
    _add_sim_flags(p)
    _add_noise_flags(p)
    _add_opt_flags(p, "jsd")

    p = sub.add_parser("sweep", help="random-circuit truncation sweep")
    p.add_argument("-Q", "--qubits", type=int, default=3)
    p.add_argument("--depths", type=int, nargs="+", default=[2, 4, 6])
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--chi-grid", type=int, nargs="+", default=[2, 4, 8])
    p.add_argument("--kappa-grid", type=int, nargs="+", default=[1, 2, 4])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-crosstalk", action="store_true")
    _add_sim_flags(p)
    _add_noise_flags(p)
    return parser


COMMANDS = {"run": cmd_run, "qpt": cmd_qpt, "maxcut": cmd_maxcut, "entangler": cmd_entangler, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = CliConfig.from_args(args)
        return COMMANDS[args.command](args, cfg)
    except (ValidationError, RepresentationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigurationError, ParameterError, FileNotFoundError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericInputError, OptimizationDivergedError, ResourceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
