"""``kbpot`` command line.

    kbpot gen    --out DIR [--n-proteins N --residues M --decoys K --sigmas ...] --seed S
    kbpot train  --data ROOT --scheme lpkp1|lpkp2 --out params.kbp [...]
    kbpot eval   --data ROOT --params params.kbp --out-dir DIR
    kbpot score  --params params.kbp FILE

Exit codes: 0 success, 2 usage, 3 data error, 4 solver error. Errors are
also written to stderr as one JSON object.

A ``--config FILE`` of ``key = value`` lines supplies defaults for any flag
(flag names with dashes or underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Sequence

from . import __version__
from .errors import DataError, KbpotError, SolverError
from .evaluation import evaluate_set
from .pdbio import NONCANONICAL_MAP, discover_ensembles, read_structure
from .potential import energy, featurize, read_params, write_params
from .synthgen import SynthConfig, generate, write_ensembles
from .training import TrainingConfig, train

logger = logging.getLogger("kbpot")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 2, 3, 4


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _csv_list(text: str) -> list[str]:
    if text.startswith("@"):
        text = ",".join(Path(text[1:]).read_text().split())
    return [t.strip() for t in text.split(",") if t.strip()]


def read_config_file(path: str | os.PathLike) -> dict[str, object]:
    """Parse ``key = value`` lines (``#`` comments, optional quotes)."""
    out: dict[str, object] = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        value = value.strip("\"'")
        if value.lower() in ("true", "false"):
            out[key.replace("-", "_")] = value.lower() == "true"
        else:
            out[key.replace("-", "_")] = value
    return out


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="ensemble directory or manifest file")
    p.add_argument("--proteins", type=_csv_list, help="comma-separated ids or @file restricting the set")
    p.add_argument("--unknown-residue", choices=("fail", "skip"), default="fail")
    p.add_argument("--map-noncanonical", action="store_true", help="map MSE->MET etc. instead of failing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kbpot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kbpot {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value defaults file")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--manifest", help="run manifest path (default: <output>.manifest.json)")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a synthetic ensemble set")
    g.add_argument("--out", required=True)
    g.add_argument("--n-proteins", type=int, default=SynthConfig.n_proteins)
    g.add_argument("--residues", type=int, default=SynthConfig.residues_per_protein)
    g.add_argument("--decoys", type=int, default=SynthConfig.decoys_per_protein)
    g.add_argument("--sigmas", type=_csv_floats, default=SynthConfig.perturbation_sigmas)
    g.add_argument("--alphabet", type=_csv_list, default=list(SynthConfig.alphabet))
    g.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("train", parents=[common], help="fit a potential by linear programming")
    _add_data_args(t)
    t.add_argument("--scheme", type=str.upper, choices=("LPKP1", "LPKP2"), default="LPKP1")
    t.add_argument("--epsilon", type=float, default=0.01)
    t.add_argument("--x-bound", type=float, default=4.0)
    t.add_argument("--decoys-per-protein", type=int, default=45)
    t.add_argument("--min-separation", type=int, default=1)
    t.add_argument("--slack", choices=("per-protein", "per-decoy", "per_protein", "per_decoy"),
                   default="per-protein")
    t.add_argument("--alpha", type=float, default=1.0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--paper-literal-sign", action="store_true",
                   help="use dF.X - S >= epsilon instead of dF.X + S >= epsilon")
    t.add_argument("--phase1", choices=("artificial", "composite"), default="artificial")
    t.add_argument("--dump-lp", help="also write the LP in fixed MPS format")
    t.add_argument("--report", help="JSON-lines report path (default: <out stem>.report.jsonl)")
    t.add_argument("--out", required=True)

    e = sub.add_parser("eval", parents=[common], help="rank natives among decoys")
    _add_data_args(e)
    e.add_argument("--params", required=True)
    e.add_argument("--out-dir", required=True)

    s = sub.add_parser("score", parents=[common], help="energy of one structure")
    s.add_argument("--params", required=True)
    s.add_argument("--chain")
    s.add_argument("structure")
    return parser


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config_file(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
        known = {a.dest: a for a in subparser._actions}  # noqa: SLF001
        unknown = sorted(set(cfg) - set(known))
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        defaults = {}
        for key, value in cfg.items():
            action = known[key]
            if isinstance(value, str) and action.type is not None:
                value = action.type(value)
            defaults[key] = value
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _file_hash(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_hashes(paths: Sequence[str | os.PathLike]) -> dict[str, str]:
    out = {}
    for p in map(Path, paths):
        if p.is_dir():
            for f in sorted(q for q in p.rglob("*") if q.is_file()):
                out[str(f)] = _file_hash(f)
        elif p.is_file():
            out[str(p)] = _file_hash(p)
    return out


def _write_manifest(args: argparse.Namespace, output: str, inputs: Sequence[str], started: float) -> None:
    path = Path(args.manifest) if args.manifest else Path(str(output).rstrip("/") + ".manifest.json")
    config = {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(vars(args).items())
              if k not in ("manifest",)}
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:],
        "config": config,
        "input_hashes": _input_hashes(inputs),
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "wall_time": time.perf_counter() - started,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n")


def _load(args: argparse.Namespace):
    kwargs = {"unknown_residue": args.unknown_residue}
    if args.map_noncanonical:
        kwargs["residue_map"] = NONCANONICAL_MAP
    return discover_ensembles(args.data, args.proteins, **kwargs)


def cmd_gen(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    config = SynthConfig(
        n_proteins=args.n_proteins,
        residues_per_protein=args.residues,
        decoys_per_protein=args.decoys,
        perturbation_sigmas=args.sigmas,
        rng_seed=args.seed,
        alphabet=tuple(args.alphabet),
    )
    write_ensembles(generate(config), args.out)
    _write_manifest(args, args.out, [], started)
    print(json.dumps({"out": args.out, "n_proteins": config.n_proteins}))
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    config = TrainingConfig(
        scheme=args.scheme,
        epsilon=args.epsilon,
        x_bound=args.x_bound,
        decoys_per_protein=args.decoys_per_protein,
        slack_granularity=args.slack,
        min_separation=args.min_separation,
        rng_seed=args.seed,
        alpha=args.alpha,
        paper_literal_sign=args.paper_literal_sign,
    )
    ensembles = _load(args)
    params, report = train(ensembles, config, threads=args.threads, dump_lp=args.dump_lp,
                           solve_kwargs={"phase1": args.phase1})
    write_params(params, args.out)
    report_path = args.report or str(Path(args.out).with_suffix("")) + ".report.jsonl"
    report.write(report_path)
    _write_manifest(args, args.out, [args.data], started)
    print(json.dumps({
        "status": report.status, "objective": report.objective_value,
        "n_constraints": report.n_constraints, "n_violated_margins": report.n_violated_margins,
        "iterations": report.iterations, "params": args.out, "report": report_path,
    }))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    params = read_params(args.params)
    ensembles = _load(args)
    summary, _ = evaluate_set(ensembles, params, args.out_dir, threads=args.threads)
    _write_manifest(args, args.out_dir, [args.data, args.params], started)
    print(json.dumps({
        "n_proteins": summary.n_proteins, "n_firsts": summary.n_firsts,
        "average_rank": summary.average_rank, "average_best_decoy_rmsd": summary.average_best_decoy_rmsd,
        "mean_correlation": summary.mean_correlation,
    }))
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    params = read_params(args.params)
    trace = read_structure(args.structure, args.chain)
    print(f"{energy(featurize(trace, params.basis, params.min_separation), params):.12f}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "score": cmd_score}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("KBPOT_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except SolverError as exc:
        error, code = exc, EXIT_SOLVER
    except (KbpotError, OSError, ValueError) as exc:
        error, code = exc, EXIT_DATA
    print(json.dumps({"error": type(error).__name__, "message": str(error), "exit_code": code}), file=sys.stderr)
    return code

if __name__ == "__main__":
    sys.exit(main())
