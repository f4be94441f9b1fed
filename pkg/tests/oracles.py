"""Independent brute-force references used by the test suite."""

import functools
import itertools

import numpy as np

from kbpot.potential import DEFAULT_BASIS, pair_index
from kbpot.pdbio import AMINO_ACIDS


def _rot(axis, deg):
    t = np.deg2rad(deg)
    c, s = np.cos(t), np.sin(t)
    i, j = [(1, 2), (2, 0), (0, 1)][axis]
    out = np.broadcast_to(np.eye(3), t.shape + (3, 3)).copy()
    out[..., i, i] = c
    out[..., j, j] = c
    out[..., i, j] = -s
    out[..., j, i] = s
    return out


@functools.lru_cache(maxsize=4)
def euler_grid(step_deg):
    """ZYZ Euler rotations on a regular grid of ``step_deg``."""
    a = np.arange(0.0, 360.0, step_deg)
    b = np.arange(0.0, 180.0 + 1e-9, step_deg)
    A, B, G = np.meshgrid(a, b, a, indexing="ij")
    return _rot(2, A.ravel()) @ _rot(1, B.ravel()) @ _rot(2, G.ravel())


def _rmsd_for(rotations, p, q):
    # p, q centered; rmsd of p vs R q for every R
    moved = rotations @ q.T  # (k, 3, n)
    return np.sqrt(np.mean(np.sum((moved - p.T) ** 2, axis=1), axis=1))


_OFFSETS = np.array(list(itertools.product((-2, -1, 0, 1, 2), repeat=3)), dtype=float)


@functools.lru_cache(maxsize=64)
def _local_moves(step):
    o = _OFFSETS * step
    return _rot(0, o[:, 0]) @ _rot(1, o[:, 1]) @ _rot(2, o[:, 2])


def grid_search_rmsd(reference, mobile, coarse_deg=10.0, final_deg=1e-4, keep=8):
    """Minimum RMSD over rotations found by grid search, no SVD.

    A coarse Euler grid is scanned, then the best ``keep`` rotations are
    refined by local grids of small x/y/z rotations, halving the step each
    round. The 1 degree level is passed through on the way down; refinement
    continues past it so the residual error is well below 1e-3 Å.
    """
    p = reference - reference.mean(axis=0)
    q = mobile - mobile.mean(axis=0)
    cands = euler_grid(coarse_deg)
    vals = _rmsd_for(cands, p, q)
    order = np.argsort(vals)[:keep]
    cands, vals = cands[order], vals[order]
    step = coarse_deg / 2
    while step >= final_deg:
        local = _local_moves(step)
        trial = (local[None] @ cands[:, None]).reshape(-1, 3, 3)
        tv = _rmsd_for(trial, p, q)
        order = np.argsort(tv)[:keep]
        cands, vals = trial[order], tv[order]
        step /= 2
    return float(vals[0])


def two_pass_pearson(x, y):
    """Textbook two-pass Pearson correlation using plain Python floats."""
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / (sxx * syy) ** 0.5


def bspline_cox_de_boor(p, r, start=2.2, step=0.6):
    """B-spline number ``p`` (1-based) by the Cox-de Boor recursion."""
    knots = [start + step * (p - 1 + k) for k in range(5)]

    def b(i, k, x):
        if k == 0:
            return 1.0 if knots[i] <= x < knots[i + 1] else 0.0
        left = (x - knots[i]) / (knots[i + k] - knots[i]) * b(i, k - 1, x)
        right = (knots[i + k + 1] - x) / (knots[i + k + 1] - knots[i + 1]) * b(i + 1, k - 1, x)
        return left + right

    return b(0, 3, r)


def naive_energy(trace, x, min_separation=1, n_basis=8):
    """Double loop over residue pairs and basis functions."""
    total = 0.0
    n = len(trace)
    for i in range(n):
        for j in range(i + min_separation, n):
            d = float(np.sqrt(sum((trace.coords[i][k] - trace.coords[j][k]) ** 2 for k in range(3))))
            a, b = trace.residues[i], trace.residues[j]
            ia, ib = sorted((AMINO_ACIDS.index(a), AMINO_ACIDS.index(b)))
            pair = pair_index(AMINO_ACIDS[ia], AMINO_ACIDS[ib])
            for p in range(1, n_basis + 1):
                total += x[pair * n_basis + p - 1] * bspline_cox_de_boor(p, d)
    return total


def vertex_enumeration(c, A_ub, b_ub, lower, upper, tol=1e-9):
    """Optimal objective of min c.x s.t. A_ub x <= b_ub, lower <= x <= upper.

    Every choice of n tight constraints among the rows and bounds is solved;
    the best feasible vertex wins. Returns None when no vertex is feasible.
    """
    n = len(c)
    G = np.vstack([A_ub, np.eye(n), -np.eye(n)]) if len(A_ub) else np.vstack([np.eye(n), -np.eye(n)])
    h = np.concatenate([b_ub, upper, -lower]) if len(A_ub) else np.concatenate([upper, -lower])
    combos = np.array(list(itertools.combinations(range(len(G)), n)))
    M = G[combos]
    rhs = h[combos]
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-10
    xs = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    feasible = np.all(xs @ G.T <= h + tol * (1 + np.abs(h)), axis=1)
    if not feasible.any():
        return None
    return float(np.min(xs[feasible] @ c))
