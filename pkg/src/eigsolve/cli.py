"""Command-line entry point: ``eigsolve {run,vqe,compare,export}``."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import BatchStats, FidelityReport, batch_stats, fidelity_report
from .environment import Observable, ShotSource
from .errors import EigsolveError, NonHermitianInput, ParseError, UnknownPreset
from .presets import PRESETS
from .qcore import hermitian_defect
from .rlsolver import ProtocolOptions, RestartSchedule, Round, RunRecord, run_batch
from .vqe_baseline import VqeRunRecord, run_vqe

log = logging.getLogger("eigsolve")

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 1, 2
P_MODES = {"inverse": 1.0, "inverse-1.5": 1.5}
ESTIMATION_STREAM = 1


# -- observable files ---------------------------------------------------------------


def observable_to_dict(o: Observable) -> dict:
    return {
        "dim": o.dim,
        "label": o.label,
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in o.matrix],
    }


def export_observable(o: Observable, path: str | Path) -> None:
    """Write ``o`` as JSON; floats use shortest round-trip repr, so reloads are exact."""
    Path(path).write_text(json.dumps(observable_to_dict(o), indent=1) + "\n")


def parse_observable(text: str, source: str = "<string>") -> Observable:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be an object with dim, label, matrix")
    dim = doc.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 2:
        raise ParseError(f"{source}: 'dim' must be an integer >= 2")
    rows = doc.get("matrix")
    if not isinstance(rows, list) or len(rows) != dim:
        raise ParseError(f"{source}: 'matrix' must hold {dim} rows")
    m = np.zeros((dim, dim), dtype=np.complex128)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise ParseError(f"{source}: matrix row {i} must hold {dim} [re, im] pairs")
        for j, pair in enumerate(row):
            ok = (
                isinstance(pair, list)
                and len(pair) == 2
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)
            )
            if not ok:
                raise ParseError(f"{source}: matrix[{i}][{j}] must be a [re, im] pair of numbers")
            m[i, j] = complex(pair[0], pair[1])
    worst, (i, j) = hermitian_defect(m)
    if worst > 1e-9:
        raise NonHermitianInput(
            f"{source}: not Hermitian, worst pair matrix[{i}][{j}] vs matrix[{j}][{i}] "
            f"differs by {worst:.3e}"
        )
    return Observable(m, str(doc.get("label", "")))


def load_observable(path_or_name: str) -> Observable:
    """Resolve a preset name or read an observable file."""
    if path_or_name in PRESETS:
        return PRESETS[path_or_name].observable()
    path = Path(path_or_name)
    if not path.is_file():
        raise UnknownPreset(
            f"{path_or_name!r} is neither a preset ({', '.join(PRESETS)}) nor a readable file"
        )
    return parse_observable(path.read_text(), str(path))


# -- configuration --------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    observable: str
    schedule: RestartSchedule
    runs: int = 40
    base_seed: int = 1
    p_shots: int = 1000
    noise_eps: float = 0.0
    w_threshold: float = 0.1
    max_iterations: int = 50_000
    single_qubit_form: str = "euler"
    out_dir: Path = Path("eigsolve-out")
    history: bool = False
    fidelity_modes: tuple[str, ...] = ("overlap", "probability")
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("--runs must be at least 1")

    def options(self) -> ProtocolOptions:
        return ProtocolOptions(
            w_threshold=self.w_threshold,
            max_iterations=self.max_iterations,
            noise_eps=self.noise_eps,
            single_qubit_form=self.single_qubit_form,
            record_history=self.history,
        )


def resolve_schedule(args: argparse.Namespace) -> RestartSchedule:
    preset = PRESETS.get(args.observable)
    if args.rounds:
        rs = [float(v) for v in args.rounds.split(",") if v.strip()]
    elif args.r is not None:
        rs = [args.r]
    elif preset is not None and args.p is None and args.p_mode is None:
        return preset.schedule
    else:
        rs = [0.9]
    if args.p is not None:
        return RestartSchedule(tuple(Round(r, args.p) for r in rs))
    if args.p_mode is not None:
        factor = P_MODES[args.p_mode]
    elif preset is not None and len({round(x.p * x.r, 12) for x in preset.schedule.rounds}) == 1:
        factor = preset.schedule.rounds[0].p * preset.schedule.rounds[0].r
    else:
        factor = 1.0
    return RestartSchedule.from_ratios(rs, factor)


# -- records and reports -----------------------------------------------------------


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def record_to_dict(index: int, rec: RunRecord, report: FidelityReport) -> dict:
    errors = [
        {"stage": s, "outcome": m, "count": c} for (s, m), c in sorted(rec.errors.items())
    ]
    out = {
        "schema_version": SCHEMA_VERSION,
        "run_index": index,
        "seed": rec.seed,
        "label": rec.label,
        "dim": rec.dim,
        "converged": rec.converged,
        "total_iterations": rec.total_iterations,
        "stage_iterations": rec.stage_iterations,
        "round_iterations": rec.round_iterations,
        "stage_updates": rec.stage_updates,
        "errors": errors,
        "terminal_w": rec.terminal_w,
        "fidelities": [
            {
                "label": c.label,
                "probability": c.probability,
                "overlap": c.overlap,
                "matched_index": c.matched_index,
                "p_estimate": c.p_estimate,
                "fidelity_from_p0": c.fidelity_from_p0,
            }
            for c in report.columns
        ],
        "p_shots": report.shots,
        "agent": [[_pair(z) for z in row] for row in rec.agent.matrix],
    }
    if rec.euler is not None:
        out["euler"] = {"theta": rec.euler.theta, "phi": rec.euler.phi, "lambda": rec.euler.lam}
    if rec.history is not None:
        out["history"] = rec.history
    return out


def vqe_to_dict(rec: VqeRunRecord, threshold: float | None = None) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "label": rec.label,
        "seed": rec.seed,
        "shots_per_step": rec.shots_per_step,
        "evaluations": rec.evals,
        "total_shots": rec.total_shots,
        "energy_estimate": rec.energy,
        "exact_energy": rec.exact_energy,
        "ground_fidelity": rec.fidelity,
        "converged": rec.converged,
        "layers": rec.layers,
        "params": rec.params,
    }
    if threshold is not None:
        out["shots_to_threshold"] = rec.shots_to_fidelity(threshold)
    return out


def run_reports(o: Observable, records: Sequence[RunRecord], p_shots: int) -> list[FidelityReport]:
    reports = []
    for rec in records:
        src = ShotSource(rec.seed, stream=ESTIMATION_STREAM) if p_shots else None
        reports.append(fidelity_report(o, rec.agent, p_shots, src))
    return reports


def summarize(
    records: Sequence[RunRecord], reports: Sequence[FidelityReport], modes: Sequence[str]
) -> dict[str, BatchStats]:
    """Batch statistics keyed by ``<mode>_<basis label>``."""
    iterations = [r.total_iterations for r in records]
    out = {}
    for mode in modes:
        table = [rep.values(mode) for rep in reports]
        if any(v is None for row in table for v in row):
            continue
        for k, col in enumerate(reports[0].columns):
            out[f"{mode}_{col.label}"] = batch_stats([row[k] for row in table], iterations)
    return out


def write_outputs(
    out_dir: Path,
    records: Sequence[RunRecord],
    reports: Sequence[FidelityReport],
    stats: dict[str, BatchStats],
    metadata: dict,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "records.jsonl", "w") as fh:
        for i, (rec, rep) in enumerate(zip(records, reports)):
            fh.write(json.dumps(record_to_dict(i, rec, rep)) + "\n")
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fidelity", "mean", "std", "n_mean", "n_min", "n_max", "runs"])
        for name, s in stats.items():
            w.writerow([name, repr(s.mean), repr(s.std), repr(s.n_mean), s.n_min, s.n_max, s.count])
    with open(out_dir / "histogram.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fidelity", "bin_left", "bin_right", "count"])
        for name, s in stats.items():
            for left, right, count in s.histogram:
                w.writerow([name, left, right, count])
    (out_dir / "metadata.json").write_text(json.dumps(metadata, indent=2, default=str) + "\n")


def _metadata(command: str, config: dict) -> dict:
    return {
        "command": command,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "eigsolve_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": config,
    }


def run_command(config: ExperimentConfig) -> int:
    """Run a batch, write records/summary/histogram, and return the exit code."""
    o = load_observable(config.observable)
    preset = PRESETS.get(config.observable)
    records = run_batch(o, config.schedule, config.runs, config.base_seed, config.options())
    reports = run_reports(o, records, config.p_shots)
    modes = list(config.fidelity_modes)
    if o.dim == 2 and config.p_shots:
        modes.append("estimated")
    stats = summarize(records, reports, modes)
    meta = _metadata(
        "run",
        {
            "observable": config.observable,
            "rounds": [(r.r, r.p, r.w_reset) for r in config.schedule.rounds],
            "runs": config.runs,
            "base_seed": config.base_seed,
            "p_shots": config.p_shots,
            "noise_eps": config.noise_eps,
            "w_threshold": config.w_threshold,
            "max_iterations": config.max_iterations,
            "single_qubit_form": config.single_qubit_form,
        },
    )
    write_outputs(config.out_dir, records, reports, stats, meta)
    headline = preset.fidelity_mode if preset else "overlap"
    for name, s in stats.items():
        if name.startswith(headline):
            print(
                f"{name}: mean={s.mean:.4f} std={s.std:.4f} "
                f"N_mean={s.n_mean:.1f} N_min={s.n_min} N_max={s.n_max}"
            )
    stuck = [r.seed for r in records if not r.converged]
    if stuck:
        print(f"warning: {len(stuck)} run(s) hit --max-iters: seeds {stuck}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


@dataclass
class CompareRow:
    observable: str
    threshold: float
    rl_runs: int
    rl_mean_shots: float
    rl_fidelity: float
    rl_eigenvectors: int
    vqe_shots_per_step: int
    vqe_evaluations: int
    vqe_total_shots: int
    vqe_shots_to_threshold: int | None
    vqe_fidelity: float
    vqe_eigenvectors: int
    shot_ratio: float
    rl_meets_threshold: bool
    vqe_meets_threshold: bool


def compare(
    o: Observable,
    schedule: RestartSchedule,
    seed: int,
    runs: int = 40,
    shots_per_step: int = 500,
    threshold: float = 0.95,
    fidelity_mode: str = "overlap",
    options: ProtocolOptions = ProtocolOptions(),
) -> tuple[CompareRow, list[RunRecord], VqeRunRecord]:
    """Single-shot cost of the RL eigensolver versus VQE on one observable.

    RL fidelity is the weakest column mean over the batch (all eigenvectors);
    VQE fidelity is the ground-eigenspace weight of its final state.
    """
    records = run_batch(o, schedule, runs, seed, options)
    reports = [fidelity_report(o, r.agent) for r in records]
    col_means = np.mean([rep.values(fidelity_mode) for rep in reports], axis=0)
    rl_shots = float(np.mean([r.total_iterations for r in records]))
    vqe = run_vqe(o, shots_per_step, seed=seed)
    row = CompareRow(
        observable=o.label,
        threshold=threshold,
        rl_runs=runs,
        rl_mean_shots=rl_shots,
        rl_fidelity=float(col_means.min()),
        rl_eigenvectors=o.dim,
        vqe_shots_per_step=shots_per_step,
        vqe_evaluations=vqe.evals,
        vqe_total_shots=vqe.total_shots,
        vqe_shots_to_threshold=vqe.shots_to_fidelity(threshold),
        vqe_fidelity=vqe.fidelity,
        vqe_eigenvectors=1,
        shot_ratio=vqe.total_shots / rl_shots,
        rl_meets_threshold=bool(col_means.min() >= threshold),
        vqe_meets_threshold=bool(vqe.fidelity >= threshold),
    )
    return row, records, vqe


# -- argument parsing -----------------------------------------------------------------


def _add_observable_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--preset", choices=sorted(PRESETS), help="built-in observable")
    g.add_argument("--observable-file", help="JSON observable file (dim, label, matrix)")


def _add_schedule_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--r", type=float, help="reward ratio (single round)")
    p.add_argument("--p", type=float, help="punishment ratio, overrides --p-mode")
    p.add_argument("--p-mode", choices=sorted(P_MODES), help="p = 1/r or p = 1.5/r")
    p.add_argument("--rounds", help="comma-separated reward ratios of a restart schedule")
    p.add_argument("--w-threshold", type=float, default=0.1)
    p.add_argument("--max-iters", type=int, default=50_000, help="per-stage shot cap")
    p.add_argument("--noise-eps", type=float, default=0.0, help="per-bit readout flip probability")
    p.add_argument(
        "--single-qubit-form",
        choices=["euler", "rotation"],
        default="euler",
        help="agent parametrisation for one-qubit observables",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigsolve", description="Single-shot reinforcement-learning eigensolver simulator"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded batch of eigensolver experiments")
    _add_observable_args(run)
    _add_schedule_args(run)
    run.add_argument("--runs", type=int, default=40)
    run.add_argument("--seed", type=int, default=1, help="base seed; run i uses seed+i")
    run.add_argument("--shots", type=int, default=1000, help="shots per P_j estimate (0: skip)")
    run.add_argument("--out-dir", default="eigsolve-out")
    run.add_argument("--history", action="store_true", help="keep every outcome in the records")

    vqe = sub.add_parser("vqe", help="run the VQE baseline once")
    _add_observable_args(vqe)
    vqe.add_argument("--shots-per-step", type=int, help="default: preset budget or 1000")
    vqe.add_argument("--exact", action="store_true", help="noiseless expectation values")
    vqe.add_argument("--seed", type=int, default=1)
    vqe.add_argument("--tolerance", type=float, default=1e-2)
    vqe.add_argument("--layers", type=int)
    vqe.add_argument("--max-evals", type=int, default=400)
    vqe.add_argument("--out-dir")

    cmp_ = sub.add_parser("compare", help="RL vs VQE single-shot cost at a fidelity threshold")
    _add_observable_args(cmp_)
    _add_schedule_args(cmp_)
    cmp_.add_argument("--seed", type=int, default=1)
    cmp_.add_argument("--runs", type=int, default=40)
    cmp_.add_argument("--shots-per-step", type=int)
    cmp_.add_argument("--threshold", type=float, default=0.95)
    cmp_.add_argument("--out-dir")

    exp = sub.add_parser("export", help="write an observable file")
    _add_observable_args(exp)
    exp.add_argument("-o", "--output", help="destination (default: stdout)")
    return parser


def _observable_name(args) -> str:
    return args.preset or args.observable_file


def _write_jsonl(path: Path, rows: Sequence[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    args.observable = _observable_name(args)
    try:
        if args.command == "run":
            config = ExperimentConfig(
                observable=args.observable,
                schedule=resolve_schedule(args),
                runs=args.runs,
                base_seed=args.seed,
                p_shots=args.shots,
                noise_eps=args.noise_eps,
                w_threshold=args.w_threshold,
                max_iterations=args.max_iters,
                single_qubit_form=args.single_qubit_form,
                out_dir=Path(args.out_dir),
                history=args.history,
            )
            return run_command(config)

        o = load_observable(args.observable)
        preset = PRESETS.get(args.observable)
        if args.command == "export":
            if args.output:
                export_observable(o, args.output)
            else:
                sys.stdout.write(json.dumps(observable_to_dict(o), indent=1) + "\n")
            return EXIT_OK

        default_shots = preset.vqe_shots if preset else 1000
        shots = args.shots_per_step or default_shots
        if args.command == "vqe":
            rec = run_vqe(
                o,
                None if args.exact else shots,
                tolerance=args.tolerance,
                seed=args.seed,
                layers=args.layers,
                max_evals=args.max_evals,
            )
            row = vqe_to_dict(rec)
            print(json.dumps(row))
            if args.out_dir:
                _write_jsonl(Path(args.out_dir) / "vqe.jsonl", [row])
            return EXIT_OK

        if args.command == "compare":
            options = ProtocolOptions(
                w_threshold=args.w_threshold,
                max_iterations=args.max_iters,
                noise_eps=args.noise_eps,
                single_qubit_form=args.single_qubit_form,
            )
            row, _, _ = compare(
                o,
                resolve_schedule(args),
                args.seed,
                runs=args.runs,
                shots_per_step=shots,
                threshold=args.threshold,
                fidelity_mode=preset.fidelity_mode if preset else "overlap",
                options=options,
            )
            fields = list(row.__dataclass_fields__)
            w = csv.writer(sys.stdout)
            w.writerow(fields)
            w.writerow([getattr(row, f) for f in fields])
            if args.out_dir:
                out = Path(args.out_dir)
                out.mkdir(parents=True, exist_ok=True)
                with open(out / "compare.csv", "w", newline="") as fh:
                    cw = csv.writer(fh)
                    cw.writerow(fields)
                    cw.writerow([getattr(row, f) for f in fields])
            return EXIT_OK
    except (EigsolveError, ValueError, OSError) as exc:
        print(f"eigsolve: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    parser.error(f"unknown command {args.command}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
