"""Assemble and solve the potential-training linear programs.

For every native n and decoy d of protein p, with feature difference
dF = F(d) - F(n):

    LPKP1:   dF @ X + S_p >= epsilon
    LPKP2:   the same, plus  dF @ X <= alpha * rmsd(d, n)

with -x_bound <= X <= x_bound, S >= 0 and objective  min sum(S).

Variables are ordered as the 1680 X entries followed by the slacks. Rows are
ordered as all margin rows (protein by protein, decoys in ensemble order)
followed by the distance rows in the same order.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import NoConstraints, SolverError, SolverInfeasible
from .geometry import rmsd
from .lp import GE, LE, LpInstance, LpSolution, Status, solve, write_mps
from .pdbio import DecoyEnsemble
from .potential import DEFAULT_BASIS, FeatureVector, PotentialParams, SplineBasisConfig, featurize
from .rng import derive_rng, stable_key

logger = logging.getLogger(__name__)

SCHEMES = ("LPKP1", "LPKP2")
GRANULARITIES = ("per_protein", "per_decoy")
_ZERO_ROW_TOL = 1e-12


@dataclass(frozen=True)
class TrainingConfig:
    scheme: str = "LPKP1"
    epsilon: float = 0.01
    x_bound: float = 4.0
    decoys_per_protein: int = 45
    slack_granularity: str = "per_protein"
    min_separation: int = 1
    rng_seed: int = 0
    alpha: float = 1.0
    paper_literal_sign: bool = False
    basis: SplineBasisConfig = DEFAULT_BASIS

    def __post_init__(self):
        object.__setattr__(self, "scheme", self.scheme.upper())
        object.__setattr__(self, "slack_granularity", self.slack_granularity.replace("-", "_"))
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.slack_granularity not in GRANULARITIES:
            raise ValueError(f"slack_granularity must be one of {GRANULARITIES}")
        if not self.epsilon > 0 or not self.x_bound > 0:
            raise ValueError("epsilon and x_bound must be positive")
        if self.decoys_per_protein < 1 or self.min_separation < 1:
            raise ValueError("decoys_per_protein and min_separation must be >= 1")


@dataclass(frozen=True, eq=False)
class FeaturizedEnsemble:
    """Features and native RMSDs for one protein, decoys in ensemble order."""

    protein_id: str
    native: FeatureVector
    decoy_ids: tuple[str, ...]
    decoys: tuple[FeatureVector, ...]
    rmsds: np.ndarray


@dataclass(frozen=True, eq=False)
class ConstraintRow:
    protein_index: int
    decoy_id: str
    indices: np.ndarray
    values: np.ndarray  # feature(decoy) - feature(native)
    rmsd: float


def decoy_rmsds(ensemble: DecoyEnsemble) -> np.ndarray:
    return np.array([rmsd(ensemble.native, t) for _, t in ensemble.decoys])


def subsample_decoys(
    ensemble: DecoyEnsemble, k: int, seed: int, rmsds: Sequence[float] | None = None
) -> DecoyEnsemble:
    """Pick ``k`` decoys spanning the RMSD range.

    Decoys are sorted by RMSD to the native and the sorted list is cut into
    ``k`` rank strata of (nearly) equal width, ``floor(i*n/k)`` boundaries;
    one decoy is drawn uniformly from each stratum. The result is in RMSD
    order. All decoys are kept (in RMSD order) when ``n <= k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    r = decoy_rmsds(ensemble) if rmsds is None else np.asarray(rmsds, dtype=np.float64)
    order = np.argsort(r, kind="stable")
    n = len(order)
    if n <= k:
        chosen = order
    else:
        rng = derive_rng(seed, "subsample", stable_key(ensemble.protein_id))
        bounds = (np.arange(k + 1) * n) // k
        chosen = np.array([order[rng.integers(bounds[i], bounds[i + 1])] for i in range(k)])
    return ensemble.with_decoys(ensemble.decoys[i] for i in chosen)


def featurize_ensemble(
    ensemble: DecoyEnsemble,
    basis: SplineBasisConfig = DEFAULT_BASIS,
    min_separation: int = 1,
    rmsds: Sequence[float] | None = None,
) -> FeaturizedEnsemble:
    r = decoy_rmsds(ensemble) if rmsds is None else np.asarray(rmsds, dtype=np.float64)
    return FeaturizedEnsemble(
        ensemble.protein_id,
        featurize(ensemble.native, basis, min_separation),
        tuple(ensemble.decoy_ids),
        tuple(featurize(t, basis, min_separation) for _, t in ensemble.decoys),
        r,
    )


def prepare(
    ensembles: Sequence[DecoyEnsemble], config: TrainingConfig, threads: int = 1
) -> list[FeaturizedEnsemble]:
    """RMSD -> stratified subsample -> featurize, per protein."""

    def one(ens: DecoyEnsemble) -> FeaturizedEnsemble:
        r = decoy_rmsds(ens)
        sub = subsample_decoys(ens, config.decoys_per_protein, config.rng_seed, r)
        keep = {d: x for d, x in zip(ens.decoy_ids, r)}
        return featurize_ensemble(sub, config.basis, config.min_separation, [keep[d] for d in sub.decoy_ids])

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, ensembles))
    return [one(e) for e in ensembles]


def constraint_rows(featurized: Sequence[FeaturizedEnsemble]) -> list[ConstraintRow]:
    rows = []
    for p, fe in enumerate(featurized):
        native = fe.native.to_dense()
        for did, feat, r in zip(fe.decoy_ids, fe.decoys, fe.rmsds):
            delta = feat.to_dense() - native
            idx = np.flatnonzero(np.abs(delta) > _ZERO_ROW_TOL)
            if idx.size == 0:
                logger.warning("%s: decoy %s featurizes identically to the native; row excluded",
                               fe.protein_id, did)
                continue
            rows.append(ConstraintRow(p, did, idx, delta[idx], float(r)))
    return rows


@dataclass(frozen=True, eq=False)
class TrainingLp:
    instance: LpInstance
    rows: tuple[ConstraintRow, ...]
    slack_of_row: np.ndarray  # slack variable index per margin row
    slack_protein: np.ndarray  # protein index per slack variable
    n_x: int

    @property
    def n_margin(self) -> int:
        return len(self.rows)


def assemble_lp(rows: Sequence[ConstraintRow], config: TrainingConfig) -> TrainingLp:
    if not rows:
        raise NoConstraints("no constraint rows survive (every decoy matches its native)")
    n_x = config.basis.n_params
    if config.slack_granularity == "per_protein":
        proteins = sorted({r.protein_index for r in rows})
        slot = {p: k for k, p in enumerate(proteins)}
        slack_of_row = np.array([n_x + slot[r.protein_index] for r in rows], dtype=np.int64)
        slack_protein = np.array(proteins, dtype=np.int64)
    else:
        slack_of_row = n_x + np.arange(len(rows), dtype=np.int64)
        slack_protein = np.array([r.protein_index for r in rows], dtype=np.int64)
    n_vars = n_x + slack_protein.size

    sign = -1.0 if config.paper_literal_sign else 1.0
    lp_rows = []
    for r, s in zip(rows, slack_of_row):
        lp_rows.append((np.append(r.indices, s), np.append(r.values, sign), GE, config.epsilon))
    if config.scheme == "LPKP2":
        for r in rows:
            lp_rows.append((r.indices, r.values, LE, config.alpha * r.rmsd))

    objective = np.zeros(n_vars)
    objective[n_x:] = 1.0
    lower = np.concatenate([np.full(n_x, -config.x_bound), np.zeros(slack_protein.size)])
    upper = np.concatenate([np.full(n_x, config.x_bound), np.full(slack_protein.size, np.inf)])
    instance = LpInstance.from_rows(n_vars, objective, lp_rows, lower, upper)
    return TrainingLp(instance, tuple(rows), slack_of_row, slack_protein, n_x)


def build_lp(ensembles: Sequence[DecoyEnsemble | FeaturizedEnsemble], config: TrainingConfig) -> LpInstance:
    """The training LP for ``ensembles`` (featurized as-is, no subsampling)."""
    featurized = [
        e if isinstance(e, FeaturizedEnsemble) else featurize_ensemble(e, config.basis, config.min_separation)
        for e in ensembles
    ]
    return assemble_lp(constraint_rows(featurized), config).instance


@dataclass
class TrainingReport:
    status: str
    objective_value: float
    n_constraints: int
    n_margin_constraints: int
    n_violated_margins: int
    iterations: int
    wall_time: float
    proteins: list[dict] = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"record": "protein", **p}) for p in self.proteins]
        summary = {k: v for k, v in asdict(self).items() if k != "proteins"}
        lines.append(json.dumps({"record": "summary", **summary}))
        return "\n".join(lines) + "\n"

    def write(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_jsonl())


def train(
    ensembles: Sequence[DecoyEnsemble],
    config: TrainingConfig = TrainingConfig(),
    *,
    threads: int = 1,
    dump_lp: str | os.PathLike | None = None,
    solve_kwargs: dict | None = None,
) -> tuple[PotentialParams, TrainingReport]:
    start = time.perf_counter()
    if not ensembles:
        raise NoConstraints("no ensembles to train on")
    featurized = prepare(ensembles, config, threads)
    problem = assemble_lp(constraint_rows(featurized), config)
    if dump_lp is not None:
        write_mps(problem.instance, dump_lp)
    sol = solve(problem.instance, **(solve_kwargs or {}))
    report = _report(sol, problem, featurized, config, time.perf_counter() - start)
    if sol.status is Status.INFEASIBLE:
        raise SolverInfeasible(
            f"training LP infeasible ({problem.n_margin} margin rows, scheme {config.scheme}, "
            f"paper_literal_sign={config.paper_literal_sign})"
        )
    if sol.status is not Status.OPTIMAL:
        raise SolverError(f"training LP not solved: {sol.status.value} after {sol.iterations} iterations")

    x = np.clip(sol.values[: problem.n_x], -config.x_bound, config.x_bound)
    params = PotentialParams(
        x, config.basis, config.scheme, config.epsilon, (-config.x_bound, config.x_bound), config.min_separation,
        extra={"objective": sol.objective_value, "iterations": sol.iterations},
    )
    return params, report


def margins(problem: TrainingLp, x: np.ndarray) -> np.ndarray:
    """dF @ X for every margin row."""
    return np.array([float(r.values @ x[r.indices]) for r in problem.rows])


def _report(sol: LpSolution, problem: TrainingLp, featurized, config: TrainingConfig, wall: float) -> TrainingReport:
    x = sol.values[: problem.n_x]
    gaps = margins(problem, x)
    violated = int(np.sum(gaps < config.epsilon - 1e-9))
    slack_values = sol.values[problem.n_x:]
    per_protein = np.zeros(len(featurized))
    np.add.at(per_protein, problem.slack_protein, slack_values)
    used = np.zeros(len(featurized), dtype=int)
    for r in problem.rows:
        used[r.protein_index] += 1
    proteins = [
        {"id": fe.protein_id, "n_decoys_used": int(used[p]), "slack_value": float(per_protein[p])}
        for p, fe in enumerate(featurized)
    ]
    return TrainingReport(
        sol.status.value, float(sol.objective_value), problem.instance.n_constraints, problem.n_margin,
        violated, sol.iterations, wall, proteins,
    )
