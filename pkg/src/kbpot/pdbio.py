"""Reading and writing Cα traces.

PDB coordinates are read by fixed columns (PDB v3.3), never by splitting on
whitespace. Only the first MODEL of a file is used and only one chain is
kept per structure.
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyEnsemble, MalformedRecord, NoCaAtoms, UnknownResidue

logger = logging.getLogger(__name__)

# Sorted lexicographically; this order defines the pair index.
AMINO_ACIDS: tuple[str, ...] = (
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE",
    "LEU", "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
)
_CANONICAL = frozenset(AMINO_ACIDS)

# Opt-in only; pass as ``residue_map`` to parse_structure.
NONCANONICAL_MAP: dict[str, str] = {
    "MSE": "MET",
    "SEP": "SER",
    "TPO": "THR",
    "PTR": "TYR",
    "HYP": "PRO",
    "MLY": "LYS",
    "CSO": "CYS",
    "HIE": "HIS",
    "HID": "HIS",
    "HIP": "HIS",
}

TRACE_MAGIC = "kbpot-trace v1"


@dataclass(frozen=True, eq=False)
class CaTrace:
    """Ordered Cα positions and residue types of one structure."""

    id: str
    residues: tuple[str, ...]
    coords: np.ndarray  # (m, 3), Å

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 3:
            raise ValueError(f"{self.id}: coords must have shape (m, 3), got {coords.shape}")
        residues = tuple(self.residues)
        if len(residues) != coords.shape[0]:
            raise ValueError(f"{self.id}: {len(residues)} residue types for {coords.shape[0]} positions")
        if len(residues) < 2:
            raise ValueError(f"{self.id}: a trace needs at least 2 residues")
        bad = [r for r in residues if r not in _CANONICAL]
        if bad:
            raise UnknownResidue(f"{self.id}: non-canonical residue type(s) {sorted(set(bad))}")
        if not np.all(np.isfinite(coords)):
            raise ValueError(f"{self.id}: non-finite coordinates")
        if np.any(np.all(coords[1:] == coords[:-1], axis=1)):
            raise ValueError(f"{self.id}: two consecutive Cα positions are identical")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "residues", residues)

    def __len__(self) -> int:
        return len(self.residues)

    def same_structure(self, other: "CaTrace") -> bool:
        return self.residues == other.residues and np.array_equal(self.coords, other.coords)


@dataclass(frozen=True)
class DecoyEnsemble:
    protein_id: str
    native: CaTrace
    decoys: tuple[tuple[str, CaTrace], ...]

    def __post_init__(self):
        object.__setattr__(self, "decoys", tuple((str(d), t) for d, t in self.decoys))
        for decoy_id, trace in self.decoys:
            if trace.residues != self.native.residues:
                raise ValueError(f"{self.protein_id}: decoy {decoy_id} does not match the native sequence")

    @property
    def decoy_ids(self) -> tuple[str, ...]:
        return tuple(d for d, _ in self.decoys)

    def with_decoys(self, decoys: Iterable[tuple[str, CaTrace]]) -> "DecoyEnsemble":
        return DecoyEnsemble(self.protein_id, self.native, tuple(decoys))


def _float_field(line: str, start: int, stop: int, line_number: int, name: str) -> float:
    field = line[start:stop]
    try:
        value = float(field)
    except ValueError:
        raise MalformedRecord(line_number, f"unparsable {name} coordinate {field.strip()!r}") from None
    if not np.isfinite(value):
        raise MalformedRecord(line_number, f"non-finite {name} coordinate {field.strip()!r}")
    return value


def parse_structure(
    text: str,
    chain_filter: str | None = None,
    *,
    structure_id: str = "",
    unknown_residue: str = "fail",
    residue_map: Mapping[str, str] | None = None,
) -> CaTrace:
    """Extract the Cα trace from PDB-format text.

    Residues come from atoms named CA (HETATM records only with the exact
    `` CA `` atom name, so calcium ions are ignored). altLoc must be blank
    or ``A``. Without ``chain_filter`` the first chain encountered is used.

    ``unknown_residue`` is ``"fail"`` (raise :class:`UnknownResidue`) or
    ``"skip"`` (drop the residue).
    """
    if unknown_residue not in ("fail", "skip"):
        raise ValueError(f"unknown_residue must be 'fail' or 'skip', not {unknown_residue!r}")
    if text.startswith(TRACE_MAGIC):
        trace = parse_trace(text)
        return trace if not structure_id else CaTrace(structure_id, trace.residues, trace.coords)

    residue_map = residue_map or {}
    chain = chain_filter
    records: dict[tuple[int, str], tuple[int, str, tuple[float, float, float]]] = {}
    order = 0
    seen_atom = False
    for line_number, line in enumerate(text.splitlines(), start=1):
        record = line[:6]
        if record.startswith("ENDMDL") or (record.startswith("MODEL") and seen_atom):
            break
        if record not in ("ATOM  ", "HETATM"):
            continue
        seen_atom = True
        atom_name = line[12:16]
        if record == "HETATM":
            if atom_name != " CA ":
                continue
        elif atom_name.strip() != "CA":
            continue
        alt_loc = line[16:17]
        if alt_loc not in ("", " ", "A"):
            continue
        line_chain = line[21:22]
        if chain is None:
            chain = line_chain
        if line_chain != chain:
            continue
        resname = line[17:20].strip().upper()
        if resname not in _CANONICAL:
            if resname in residue_map:
                resname = residue_map[resname]
            elif unknown_residue == "skip":
                logger.debug("skipping non-canonical residue %s at line %d", resname, line_number)
                continue
            else:
                raise UnknownResidue(f"line {line_number}: non-canonical residue {resname!r}")
        try:
            resseq = int(line[22:26])
        except ValueError:
            raise MalformedRecord(line_number, f"unparsable residue number {line[22:26]!r}") from None
        icode = line[26:27].strip()
        xyz = (
            _float_field(line, 30, 38, line_number, "x"),
            _float_field(line, 38, 46, line_number, "y"),
            _float_field(line, 46, 54, line_number, "z"),
        )
        key = (resseq, icode)
        if key in records:
            continue
        records[key] = (order, resname, xyz)
        order += 1

    if not records:
        raise NoCaAtoms(f"{structure_id or 'structure'}: no CA atoms found")
    keys = sorted(records)
    return CaTrace(
        structure_id,
        tuple(records[k][1] for k in keys),
        np.array([records[k][2] for k in keys], dtype=np.float64),
    )


_PDB_ID_WITH_CHAIN = re.compile(r"^[0-9][A-Za-z0-9]{3}([A-Za-z0-9-])$")


def chain_from_protein_id(protein_id: str) -> str | None:
    """``1em9A`` -> ``A``; ``1chd-`` -> None; anything else -> None."""
    m = _PDB_ID_WITH_CHAIN.match(protein_id)
    if not m or m.group(1) == "-":
        return None
    return m.group(1)


def read_structure(path: str | os.PathLike, chain_filter: str | None = None, **kwargs) -> CaTrace:
    path = Path(path)
    kwargs.setdefault("structure_id", path.stem)
    return parse_structure(path.read_text(), chain_filter, **kwargs)


def format_pdb(trace: CaTrace, chain_id: str = "A") -> str:
    """Write a CA-only PDB string (3-decimal coordinates)."""
    lines = [f"HEADER    {trace.id}"]
    for i, (resname, (x, y, z)) in enumerate(zip(trace.residues, trace.coords), start=1):
        lines.append(
            f"ATOM  {i:5d}  CA  {resname} {chain_id}{i:4d}    "
            f"{x:8.3f}{y:8.3f}{z:8.3f}  1.00  0.00           C"
        )
    lines.append("END")
    return "\n".join(lines) + "\n"


def format_trace(trace: CaTrace) -> str:
    """Lossless text serialization (coordinates as shortest round-trip repr)."""
    lines = [TRACE_MAGIC, f"id {trace.id}"]
    for resname, (x, y, z) in zip(trace.residues, trace.coords):
        lines.append(f"{resname} {float(x)!r} {float(y)!r} {float(z)!r}")
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> CaTrace:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != TRACE_MAGIC:
        raise MalformedRecord(1, f"expected {TRACE_MAGIC!r} header")
    if not lines[1].startswith("id"):
        raise MalformedRecord(2, "expected 'id <name>' line")
    trace_id = lines[1][2:].strip()
    residues, coords = [], []
    for n, line in enumerate(lines[2:], start=3):
        parts = line.split()
        if len(parts) != 4:
            raise MalformedRecord(n, "expected '<AA3> x y z'")
        residues.append(parts[0])
        try:
            coords.append([float(v) for v in parts[1:]])
        except ValueError:
            raise MalformedRecord(n, "unparsable coordinate") from None
    if not residues:
        raise NoCaAtoms(f"{trace_id}: empty trace file")
    return CaTrace(trace_id, tuple(residues), np.array(coords))


def load_ensemble(
    native_path: str | os.PathLike,
    decoy_paths: Sequence[str | os.PathLike],
    *,
    protein_id: str | None = None,
    chain_filter: str | None = None,
    **parse_kwargs,
) -> DecoyEnsemble:
    """Read a native and its decoys; decoys whose sequence differs are dropped.

    Raises :class:`EmptyEnsemble` when no decoy survives.
    """
    native_path = Path(native_path)
    if protein_id is None:
        protein_id = native_path.parent.name if native_path.stem == "native" else native_path.stem
    native = read_structure(native_path, chain_filter, structure_id=protein_id, **parse_kwargs)
    decoys = []
    for path in decoy_paths:
        path = Path(path)
        trace = read_structure(path, chain_filter, **parse_kwargs)
        if len(trace) != len(native):
            logger.warning("%s: dropping decoy %s (length %d, native %d)",
                           protein_id, trace.id, len(trace), len(native))
            continue
        if trace.residues != native.residues:
            logger.warning("%s: dropping decoy %s (sequence differs from native)", protein_id, trace.id)
            continue
        decoys.append((trace.id, trace))
    if not decoys:
        raise EmptyEnsemble(f"{protein_id}: no decoys match the native structure")
    return DecoyEnsemble(protein_id, native, tuple(decoys))


def _read_manifest(path: Path) -> dict[str, dict[str, list[Path]]]:
    entries: dict[str, dict[str, list[Path]]] = {}
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3 or parts[1] not in ("native", "decoy"):
            raise MalformedRecord(n, "manifest lines are 'protein_id, native|decoy, path'")
        pid, role, p = parts
        file_path = Path(p) if os.path.isabs(p) else path.parent / p
        entries.setdefault(pid, {"native": [], "decoy": []})[role].append(file_path)
    return entries


def discover_ensembles(
    root: str | os.PathLike,
    protein_ids: Sequence[str] | None = None,
    **parse_kwargs,
) -> list[DecoyEnsemble]:
    """Load every ensemble under ``root``.

    ``root`` is either a directory laid out as ``<id>/native.pdb`` plus
    ``<id>/decoys/*.pdb`` or a manifest file of ``protein_id, role, path``
    lines. Proteins are returned sorted by id; decoys sorted by file name.
    A chain letter embedded in PDB-style ids (``1em9A``) selects the chain.
    """
    root = Path(root)
    layout: dict[str, tuple[Path, list[Path]]] = {}
    if root.is_file():
        for pid, roles in _read_manifest(root).items():
            if len(roles["native"]) != 1:
                raise MalformedRecord(0, f"{pid}: manifest needs exactly one native entry")
            layout[pid] = (roles["native"][0], roles["decoy"])
    elif root.is_dir():
        for sub in sorted(p for p in root.iterdir() if p.is_dir()):
            native = sub / "native.pdb"
            if not native.exists():
                continue
            decoy_dir = sub / "decoys"
            decoys = sorted(decoy_dir.glob("*.pdb")) if decoy_dir.is_dir() else []
            layout[sub.name] = (native, decoys)
    else:
        raise EmptyEnsemble(f"{root}: no such file or directory")

    if protein_ids is not None:
        missing = [p for p in protein_ids if p not in layout]
        if missing:
            raise EmptyEnsemble(f"proteins not found under {root}: {missing}")
        layout = {p: layout[p] for p in protein_ids}
    if not layout:
        raise EmptyEnsemble(f"{root}: no ensembles found")

    ensembles = []
    for pid in sorted(layout) if protein_ids is None else list(layout):
        native, decoys = layout[pid]
        ensembles.append(load_ensemble(native, decoys, protein_id=pid,
                                       chain_filter=chain_from_protein_id(pid), **parse_kwargs))
    return ensembles
