"""Native-detection metrics for a trained potential."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptyEnsemble, LengthMismatch
from .pdbio import DecoyEnsemble
from .potential import PotentialParams, energy, featurize
from .training import decoy_rmsds

TIE_TOL = 1e-9
UNDEFINED = "NA"  # CSV marker for an undefined correlation


@dataclass(frozen=True, eq=False)
class ProteinEval:
    protein_id: str
    native_rank: int
    native_energy: float
    best_decoy_id: str
    best_decoy_rmsd: float
    correlation: float | None  # None when either input has zero variance
    n_decoys: int
    n_ties: int
    decoy_ids: tuple[str, ...] = ()
    decoy_energies: np.ndarray = None
    decoy_rmsds: np.ndarray = None


@dataclass(frozen=True)
class EvalSummary:
    n_proteins: int
    n_firsts: int
    average_rank: float
    average_best_decoy_rmsd: float
    mean_correlation: float | None

    @property
    def fraction_firsts(self) -> float:
        return self.n_firsts / self.n_proteins


def native_rank(native_energy: float, decoy_energies, tie_tol: float = TIE_TOL) -> tuple[int, int]:
    """(rank, n_ties). Decoys within ``tie_tol`` of the native count against it."""
    e = np.asarray(decoy_energies, dtype=np.float64)
    ties = int(np.sum(np.abs(e - native_energy) <= tie_tol))
    return 1 + int(np.sum(e < native_energy + tie_tol)) if e.size else 1, ties


def correlation(energies, distances) -> float | None:
    """Sample correlation with the 1/(N-1) convention; None if either side is constant."""
    e = np.asarray(energies, dtype=np.float64)
    d = np.asarray(distances, dtype=np.float64)
    if e.shape != d.shape or e.ndim != 1:
        raise LengthMismatch(f"energies {e.shape} and distances {d.shape} differ")
    n = e.size
    if n < 2:
        raise LengthMismatch("correlation needs at least 2 points")
    sd_e = e.std(ddof=1)
    sd_d = d.std(ddof=1)
    if sd_e == 0.0 or sd_d == 0.0:
        return None
    r = float(np.sum((d - d.mean()) / sd_d * (e - e.mean()) / sd_e) / (n - 1))
    return min(1.0, max(-1.0, r))


def rank_native(
    ensemble: DecoyEnsemble, params: PotentialParams, rmsds: Sequence[float] | None = None
) -> ProteinEval:
    feats = lambda t: featurize(t, params.basis, params.min_separation)  # noqa: E731
    e_native = energy(feats(ensemble.native), params)
    e_decoys = np.array([energy(feats(t), params) for _, t in ensemble.decoys])
    r = decoy_rmsds(ensemble) if rmsds is None else np.asarray(rmsds, dtype=np.float64)
    rank, ties = native_rank(e_native, e_decoys)
    best = int(np.argmin(e_decoys))
    corr = correlation(e_decoys, r) if len(e_decoys) >= 2 else None
    return ProteinEval(
        ensemble.protein_id, rank, e_native, ensemble.decoy_ids[best], float(r[best]), corr,
        len(e_decoys), ties, tuple(ensemble.decoy_ids), e_decoys, r,
    )


def summarize(evals: Sequence[ProteinEval]) -> EvalSummary:
    if not evals:
        raise EmptyEnsemble("nothing to summarize")
    corrs = [e.correlation for e in evals if e.correlation is not None]
    return EvalSummary(
        n_proteins=len(evals),
        n_firsts=sum(e.native_rank == 1 for e in evals),
        average_rank=float(np.mean([e.native_rank for e in evals])),
        average_best_decoy_rmsd=float(np.mean([e.best_decoy_rmsd for e in evals])),
        mean_correlation=float(np.mean(corrs)) if corrs else None,
    )


def correlation_histogram(values: Sequence[float | None], width: float = 0.1) -> list[tuple[float, float, int]]:
    """Counts over [-1, 1] in bins of ``width``; the last bin includes 1.0."""
    n_bins = int(round(2.0 / width))
    counts = [0] * n_bins
    for v in values:
        if v is None:
            continue
        k = min(int(math.floor((v + 1.0) / width + 1e-12)), n_bins - 1)
        counts[max(k, 0)] += 1
    return [(round(-1.0 + k * width, 10), round(-1.0 + (k + 1) * width, 10), counts[k]) for k in range(n_bins)]


def _fmt_corr(c: float | None) -> str:
    return UNDEFINED if c is None else repr(c)


def write_outputs(evals: Sequence[ProteinEval], out_dir: str | os.PathLike) -> None:
    """per_protein.csv, scatter/<protein_id>.csv and corr_hist.csv."""
    out = Path(out_dir)
    (out / "scatter").mkdir(parents=True, exist_ok=True)
    with open(out / "per_protein.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["protein_id", "native_rank", "native_energy", "best_decoy_rmsd", "correlation"])
        for e in evals:
            w.writerow([e.protein_id, e.native_rank, repr(e.native_energy), repr(e.best_decoy_rmsd),
                        _fmt_corr(e.correlation)])
    for e in evals:
        with open(out / "scatter" / f"{e.protein_id}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["decoy_id", "rmsd", "energy"])
            for did, r, en in zip(e.decoy_ids, e.decoy_rmsds, e.decoy_energies):
                w.writerow([did, repr(float(r)), repr(float(en))])
    with open(out / "corr_hist.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_low", "bin_high", "count"])
        for lo, hi, c in correlation_histogram([e.correlation for e in evals]):
            w.writerow([f"{lo:.1f}", f"{hi:.1f}", c])


def evaluate_set(
    ensembles: Sequence[DecoyEnsemble],
    params: PotentialParams,
    out_dir: str | os.PathLike | None = None,
    threads: int = 1,
) -> tuple[EvalSummary, list[ProteinEval]]:
    if not ensembles:
        raise EmptyEnsemble("no ensembles to evaluate")
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            evals = list(pool.map(lambda e: rank_native(e, params), ensembles))
    else:
        evals = [rank_native(e, params) for e in ensembles]
    if out_dir is not None:
        write_outputs(evals, out_dir)
    return summarize(evals), evals
