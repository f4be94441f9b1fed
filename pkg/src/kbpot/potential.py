"""Distance-dependent pair potential on cubic B-spline bases.

The energy of a structure is

    E = sum_{i<j} sum_p X[pair(aa_i, aa_j), p] * B_p(r_ij)

which is linear in X, so a structure is reduced once to a 1680-entry
feature vector (sums of basis values per pair type and basis) and the
energy is a dot product with X. Flat index of (pair, p) is ``pair * 8 + p - 1``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from .errors import BadBasisIndex, ConfigMismatch, MalformedRecord, UnknownResidue
from .pdbio import AMINO_ACIDS, CaTrace

N_TYPES = len(AMINO_ACIDS)
N_PAIRS = N_TYPES * (N_TYPES + 1) // 2  # 210

_AA_INDEX = {aa: i for i, aa in enumerate(AMINO_ACIDS)}


@dataclass(frozen=True)
class SplineBasisConfig:
    n_basis: int = 8
    knot_start: float = 2.2
    knot_step: float = 0.6
    support_width: float = 2.4

    def __post_init__(self):
        if self.n_basis < 1 or self.knot_step <= 0:
            raise ValueError("n_basis must be >= 1 and knot_step > 0")
        if not np.isclose(self.support_width, 4 * self.knot_step):
            raise ValueError("a uniform cubic B-spline spans exactly 4 knot intervals")

    @property
    def n_params(self) -> int:
        return N_PAIRS * self.n_basis

    def support(self, p: int) -> tuple[float, float]:
        """Closed support [lo, hi] of basis ``p`` (1-indexed)."""
        _check_basis(p, self)
        lo = self.knot_start + (p - 1) * self.knot_step
        return lo, lo + self.support_width

    @property
    def r_min(self) -> float:
        return self.knot_start

    @property
    def r_max(self) -> float:
        return self.support(self.n_basis)[1]


DEFAULT_BASIS = SplineBasisConfig()


def _check_basis(p: int, config: SplineBasisConfig) -> None:
    if not isinstance(p, (int, np.integer)) or not 1 <= p <= config.n_basis:
        raise BadBasisIndex(f"basis index must be an integer in 1..{config.n_basis}, got {p!r}")


def _cubic_bspline(u: np.ndarray) -> np.ndarray:
    """Normalized uniform cubic B-spline on knots 0..4 (zero outside)."""
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    # symmetric about u = 2; evaluate on the folded coordinate for accuracy
    t = np.abs(u - 2.0)
    inner = t < 1.0
    outer = (t >= 1.0) & (t < 2.0)
    ti = t[inner]
    out[inner] = (4.0 - 6.0 * ti * ti + 3.0 * ti * ti * ti) / 6.0
    to = 2.0 - t[outer]
    out[outer] = to * to * to / 6.0
    return out


def bspline_eval(p: int, r, config: SplineBasisConfig = DEFAULT_BASIS):
    """Value of basis ``p`` (1..n_basis) at distance(s) ``r`` in Å."""
    _check_basis(p, config)
    lo = config.knot_start + (p - 1) * config.knot_step
    u = (np.asarray(r, dtype=np.float64) - lo) / config.knot_step
    out = _cubic_bspline(u)
    return float(out) if out.ndim == 0 else out


def pair_index(a: str, b: str) -> int:
    """Index of the unordered pair {a, b} in 0..209 (upper triangle, row-major)."""
    try:
        i, j = _AA_INDEX[a], _AA_INDEX[b]
    except KeyError as exc:
        raise UnknownResidue(f"not a canonical amino acid: {exc.args[0]!r}") from None
    if i > j:
        i, j = j, i
    return i * N_TYPES - i * (i - 1) // 2 + (j - i)


PAIR_TYPES: tuple[tuple[str, str], ...] = tuple(combinations_with_replacement(AMINO_ACIDS, 2))

# Lookup table: _PAIR_TABLE[i, j] == pair_index(AMINO_ACIDS[i], AMINO_ACIDS[j])
_PAIR_TABLE = np.array([[pair_index(a, b) for b in AMINO_ACIDS] for a in AMINO_ACIDS], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Sparse aggregated basis sums; ``indices`` sorted and unique."""

    indices: np.ndarray
    values: np.ndarray
    config: SplineBasisConfig = DEFAULT_BASIS

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @property
    def size(self) -> int:
        return self.config.n_params

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.size)
        out[self.indices] = self.values
        return out

    def entry(self, pair: int, p: int) -> float:
        k = pair * self.config.n_basis + (p - 1)
        pos = np.searchsorted(self.indices, k)
        if pos < self.indices.size and self.indices[pos] == k:
            return float(self.values[pos])
        return 0.0

    @classmethod
    def from_dense(cls, dense: np.ndarray, config: SplineBasisConfig = DEFAULT_BASIS) -> "FeatureVector":
        dense = np.asarray(dense, dtype=np.float64)
        idx = np.flatnonzero(dense)
        return cls(idx, dense[idx], config)


def featurize(trace: CaTrace, config: SplineBasisConfig = DEFAULT_BASIS, min_separation: int = 1) -> FeatureVector:
    """Aggregate B_p(r_ij) over residue pairs i<j with j - i >= min_separation."""
    if min_separation < 1:
        raise ValueError("min_separation must be >= 1")
    coords = trace.coords
    m = len(trace)
    ii, jj = np.triu_indices(m, k=min_separation)
    r = np.linalg.norm(coords[ii] - coords[jj], axis=1)
    keep = (r > config.r_min) & (r < config.r_max)
    ii, jj, r = ii[keep], jj[keep], r[keep]
    types = np.array([_AA_INDEX[a] for a in trace.residues], dtype=np.int64)
    pairs = _PAIR_TABLE[types[ii], types[jj]]

    nb = config.n_basis
    u = (r - config.knot_start) / config.knot_step
    # basis p covers u in [p-1, p+3]
    first = np.floor(u).astype(np.int64) - 2  # lowest 1-indexed p that may be nonzero
    idx_parts, val_parts = [], []
    for offset in range(4):
        p = first + offset
        ok = (p >= 1) & (p <= nb)
        vals = _cubic_bspline(u[ok] - (p[ok] - 1))
        idx_parts.append(pairs[ok] * nb + (p[ok] - 1))
        val_parts.append(vals)
    idx = np.concatenate(idx_parts)
    vals = np.concatenate(val_parts)
    nz = vals > 0.0
    idx, vals = idx[nz], vals[nz]

    dense = np.zeros(config.n_params)
    np.add.at(dense, idx, vals)
    return FeatureVector.from_dense(dense, config)


@dataclass(frozen=True, eq=False)
class PotentialParams:
    """Trained coefficients X, shape (n_params,), plus training metadata."""

    x: np.ndarray
    basis: SplineBasisConfig = DEFAULT_BASIS
    scheme: str = "LPKP1"
    epsilon: float = 0.01
    bounds: tuple[float, float] = (-4.0, 4.0)
    min_separation: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        if x.shape != (self.basis.n_params,):
            raise ValueError(f"expected {self.basis.n_params} parameters, got shape {x.shape}")
        lo, hi = self.bounds
        if np.any(x < lo) or np.any(x > hi):
            raise ValueError(f"parameters outside bounds [{lo}, {hi}]")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def zeros(cls, basis: SplineBasisConfig = DEFAULT_BASIS, **kwargs) -> "PotentialParams":
        return cls(np.zeros(basis.n_params), basis, **kwargs)

    def value(self, a: str, b: str, p: int) -> float:
        _check_basis(p, self.basis)
        return float(self.x[pair_index(a, b) * self.basis.n_basis + p - 1])

    def pair_potential(self, a: str, b: str, r) -> np.ndarray:
        """The learned pair energy as a function of distance, for plotting."""
        r = np.asarray(r, dtype=np.float64)
        base = pair_index(a, b) * self.basis.n_basis
        return sum(self.x[base + p - 1] * bspline_eval(p, r, self.basis)
                   for p in range(1, self.basis.n_basis + 1))


def energy(features: FeatureVector, params: PotentialParams) -> float:
    if features.config != params.basis:
        raise ConfigMismatch("feature vector and parameters use different spline bases")
    return float(np.dot(features.values, params.x[features.indices]))


# --- parameter file ------------------------------------------------------------

PARAMS_MAGIC = "kbpot-params v1"


def _fmt(v: float) -> str:
    return f"{v:g}" if float(v) == float(f"{v:g}") else repr(float(v))


def format_params(params: PotentialParams) -> str:
    b = params.basis
    lo, hi = params.bounds
    lines = [
        PARAMS_MAGIC,
        f"basis {b.n_basis} {_fmt(b.knot_start)} {_fmt(b.knot_step)} {_fmt(b.support_width)}",
        f"scheme {params.scheme} epsilon {_fmt(params.epsilon)} bounds {_fmt(lo)} {_fmt(hi)} "
        f"min_separation {params.min_separation}",
    ]
    for k, (a, c) in enumerate(PAIR_TYPES):
        for p in range(1, b.n_basis + 1):
            lines.append(f"{a} {c} {p} {params.x[k * b.n_basis + p - 1]:.16e}")
    return "\n".join(lines) + "\n"


def parse_params(text: str) -> PotentialParams:
    rows = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((n, line.split()))
    if not rows or " ".join(rows[0][1]) != PARAMS_MAGIC:
        raise MalformedRecord(rows[0][0] if rows else 1, f"expected {PARAMS_MAGIC!r} header")
    try:
        n, tok = rows[1]
        if tok[0] != "basis" or len(tok) != 5:
            raise ValueError
        basis = SplineBasisConfig(int(tok[1]), float(tok[2]), float(tok[3]), float(tok[4]))
        n, tok = rows[2]
        if (len(tok) != 9 or tok[0] != "scheme" or tok[2] != "epsilon"
                or tok[4] != "bounds" or tok[7] != "min_separation"):
            raise ValueError
        scheme, epsilon = tok[1], float(tok[3])
        bounds = (float(tok[5]), float(tok[6]))
        min_sep = int(tok[8])
    except (ValueError, IndexError):
        raise MalformedRecord(n, "bad parameter-file header") from None

    x = np.full(basis.n_params, np.nan)
    for n, tok in rows[3:]:
        if len(tok) != 4:
            raise MalformedRecord(n, "expected '<AA3> <AA3> <p> <value>'")
        try:
            a, b = tok[0], tok[1]
            if a > b:
                raise ValueError
            p = int(tok[2])
            _check_basis(p, basis)
            k = pair_index(a, b) * basis.n_basis + p - 1
            x[k] = float(tok[3])
        except (ValueError, UnknownResidue, BadBasisIndex):
            raise MalformedRecord(n, f"bad parameter line {' '.join(tok)!r}") from None
    if len(rows) - 3 != basis.n_params or np.isnan(x).any():
        raise MalformedRecord(rows[-1][0], f"expected exactly {basis.n_params} distinct parameter lines")
    return PotentialParams(x, basis, scheme, epsilon, bounds, min_sep)


def write_params(params: PotentialParams, path: str | os.PathLike) -> None:
    Path(path).write_text(format_params(params))


def read_params(path: str | os.PathLike) -> PotentialParams:
    return parse_params(Path(path).read_text())
