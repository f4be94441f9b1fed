"""Optimal rigid superposition (Kabsch) and RMSD."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import LengthMismatch
from .pdbio import CaTrace

Points = Union[CaTrace, np.ndarray, Sequence[Sequence[float]]]


@dataclass(frozen=True, eq=False)
class Superposition:
    """``rotation @ mobile_k + translation`` best matches ``reference_k``."""

    rotation: np.ndarray
    translation: np.ndarray
    rmsd: float

    def apply(self, points: Points) -> np.ndarray:
        return _as_points(points) @ self.rotation.T + self.translation


def _as_points(x: Points) -> np.ndarray:
    if isinstance(x, CaTrace):
        return x.coords
    pts = np.asarray(x, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (m, 3) point array, got shape {pts.shape}")
    return pts


def norm2(v) -> float:
    """Euclidean norm; 0 for an empty vector."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        return 0.0
    return float(np.sqrt(np.sum(np.abs(v) ** 2)))


def superpose(reference: Points, mobile: Points) -> Superposition:
    """Proper rotation + translation of ``mobile`` minimizing RMSD to ``reference``.

    Reflections are excluded by flipping the sign of the smallest singular
    direction when the cross-covariance has negative determinant.
    """
    ref = _as_points(reference)
    mob = _as_points(mobile)
    if ref.shape != mob.shape:
        raise LengthMismatch(f"cannot superpose {len(ref)} points onto {len(mob)}")
    m = ref.shape[0]
    if m == 0:
        raise LengthMismatch("cannot superpose empty point sets")

    ref_c = ref.mean(axis=0)
    mob_c = mob.mean(axis=0)
    p = mob - mob_c
    q = ref - ref_c

    h = p.T @ q
    u, s, vt = np.linalg.svd(h)
    d = 1.0 if np.linalg.det(vt.T @ u.T) >= 0 else -1.0
    rotation = vt.T @ np.diag([1.0, 1.0, d]) @ u.T

    # Residual from the singular values is cancellation-prone near zero;
    # evaluate it directly.
    diff = q - p @ rotation.T
    rmsd = float(np.sqrt(np.sum(diff * diff) / m))
    translation = ref_c - rotation @ mob_c
    return Superposition(rotation, translation, rmsd)


def rmsd(reference: Points, mobile: Points) -> float:
    return superpose(reference, mobile).rmsd
