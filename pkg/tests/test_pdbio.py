import logging

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import atom_line, random_trace, traces
from kbpot.errors import EmptyEnsemble, MalformedRecord, NoCaAtoms, UnknownResidue
from kbpot.pdbio import (
    AMINO_ACIDS,
    NONCANONICAL_MAP,
    CaTrace,
    chain_from_protein_id,
    discover_ensembles,
    format_pdb,
    format_trace,
    load_ensemble,
    parse_structure,
    parse_trace,
)


def test_amino_acids_sorted_twenty():
    assert len(AMINO_ACIDS) == 20
    assert list(AMINO_ACIDS) == sorted(AMINO_ACIDS)


def test_three_ca_records_in_file_order():
    text = "\n".join([
        atom_line(1, "ALA", 1, 0.0, 0.0, 0.0),
        atom_line(2, "ALA", 1, 1.0, 0.0, 0.0, atom=" N  "),
        atom_line(3, "GLY", 2, 3.8, 0.0, 0.0),
        atom_line(4, "ALA", 3, 7.6, 0.0, 0.0),
    ])
    t = parse_structure(text)
    assert t.residues == ("ALA", "GLY", "ALA")
    np.testing.assert_array_equal(t.coords[:, 0], [0.0, 3.8, 7.6])


def test_altloc_keeps_only_a():
    text = "\n".join([
        atom_line(1, "ALA", 1, 0.0, 0.0, 0.0),
        atom_line(2, "GLY", 2, 3.8, 0.0, 0.0, alt="A"),
        atom_line(3, "GLY", 2, 9.9, 9.9, 9.9, alt="B"),
    ])
    t = parse_structure(text)
    assert len(t) == 2
    np.testing.assert_array_equal(t.coords[1], [3.8, 0.0, 0.0])


def test_altloc_b_before_a():
    text = "\n".join([
        atom_line(1, "ALA", 1, 0.0, 0.0, 0.0),
        atom_line(2, "GLY", 2, 9.9, 9.9, 9.9, alt="B"),
        atom_line(3, "GLY", 2, 3.8, 0.0, 0.0, alt="A"),
    ])
    np.testing.assert_array_equal(parse_structure(text).coords[1], [3.8, 0.0, 0.0])


def test_malformed_coordinate_names_line():
    good = atom_line(1, "ALA", 1, 0.0, 0.0, 0.0)
    bad = atom_line(2, "GLY", 2, 0.0, 0.0, 0.0)
    bad = bad[:30] + " abc.def" + bad[38:]
    with pytest.raises(MalformedRecord) as info:
        parse_structure("REMARK x\n" + good + "\n" + bad)
    assert info.value.line_number == 3
    assert "line 3" in str(info.value)


def test_fixed_columns_with_merged_fields():
    # negative coordinates with no separating whitespace
    line = atom_line(1, "ALA", 1, -100.123, -200.456, -300.789)
    line2 = atom_line(2, "GLY", 2, -999.999, -999.999, 12.5)
    t = parse_structure(line + "\n" + line2)
    assert "-200.456-300.789" in line
    np.testing.assert_allclose(t.coords[0], [-100.123, -200.456, -300.789])
    np.testing.assert_allclose(t.coords[1], [-999.999, -999.999, 12.5])


def test_no_ca_atoms():
    with pytest.raises(NoCaAtoms):
        parse_structure(atom_line(1, "ALA", 1, 0, 0, 0, atom=" N  ") + "\nEND\n")


def test_unknown_residue_fail_skip_map():
    text = "\n".join([
        atom_line(1, "ALA", 1, 0, 0, 0),
        atom_line(2, "MSE", 2, 3.8, 0, 0),
        atom_line(3, "GLY", 3, 7.6, 0, 0),
    ])
    with pytest.raises(UnknownResidue):
        parse_structure(text)
    assert parse_structure(text, unknown_residue="skip").residues == ("ALA", "GLY")
    assert parse_structure(text, residue_map=NONCANONICAL_MAP).residues == ("ALA", "MET", "GLY")


def test_first_model_only():
    m1 = [atom_line(1, "ALA", 1, 0, 0, 0), atom_line(2, "GLY", 2, 3.8, 0, 0)]
    m2 = [atom_line(1, "ALA", 1, 5, 5, 5), atom_line(2, "GLY", 2, 9, 9, 9)]
    text = "\n".join(["MODEL        1", *m1, "ENDMDL", "MODEL        2", *m2, "ENDMDL"])
    np.testing.assert_array_equal(parse_structure(text).coords[0], [0, 0, 0])


def test_chain_selection_and_ordering():
    text = "\n".join([
        atom_line(1, "ALA", 5, 0, 0, 0, chain="A"),
        atom_line(2, "GLY", 3, 3.8, 0, 0, chain="A"),
        atom_line(3, "SER", 4, 1, 1, 1, chain="B"),
        atom_line(4, "THR", 5, 2, 2, 2, chain="B"),
        atom_line(5, "CYS", 3, 4, 0, 0, chain="A", icode="A"),
    ])
    assert parse_structure(text).residues == ("GLY", "CYS", "ALA")
    assert parse_structure(text, "B").residues == ("SER", "THR")


def test_hetatm_calcium_ignored():
    text = "\n".join([
        atom_line(1, "ALA", 1, 0, 0, 0),
        atom_line(2, "GLY", 2, 3.8, 0, 0),
        atom_line(3, " CA", 3, 20, 20, 20, atom="CA  ", record="HETATM", chain="A"),
    ])
    assert len(parse_structure(text)) == 2


def test_chain_from_protein_id():
    assert chain_from_protein_id("1em9A") == "A"
    assert chain_from_protein_id("1abc-") is None
    assert chain_from_protein_id("syn0001") is None


def test_trace_invariants():
    with pytest.raises(ValueError):
        CaTrace("x", ("ALA",), np.zeros((1, 3)))
    with pytest.raises(UnknownResidue):
        CaTrace("x", ("ALA", "XYZ"), np.array([[0, 0, 0], [1, 0, 0]], float))
    with pytest.raises(ValueError):
        CaTrace("x", ("ALA", "GLY"), np.array([[0, 0, 0], [0, 0, 0]], float))
    with pytest.raises(ValueError):
        CaTrace("x", ("ALA", "GLY"), np.array([[0, 0, 0], [np.nan, 0, 0]], float))


@settings(max_examples=50, deadline=None)
@given(traces())
def test_trace_round_trip_bit_exact(t):
    back = parse_trace(format_trace(t))
    assert back.residues == t.residues
    assert back.coords.tobytes() == t.coords.tobytes()
    assert parse_structure(format_trace(t)).coords.tobytes() == t.coords.tobytes()


@settings(max_examples=30, deadline=None)
@given(traces())
def test_parsing_deterministic_and_pdb_round_trip(t):
    text = format_pdb(t)
    a, b = parse_structure(text), parse_structure(text)
    assert a.same_structure(b)
    assert a.residues == t.residues
    np.testing.assert_allclose(a.coords, t.coords, atol=5e-4)


def _write(path, trace):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_pdb(trace))
    return path


def test_load_ensemble_keeps_matching(tmp_path, rng):
    native = random_trace(rng, 50, "n")
    paths = []
    for k in range(3):
        d = CaTrace(f"d{k}", native.residues, native.coords + rng.normal(size=native.coords.shape))
        paths.append(_write(tmp_path / f"d{k}.pdb", d))
    ens = load_ensemble(_write(tmp_path / "native.pdb", native), paths, protein_id="p")
    assert len(ens.decoys) == 3
    assert ens.decoy_ids == ("d0", "d1", "d2")


def test_load_ensemble_drops_short_decoy(tmp_path, rng, caplog):
    native = random_trace(rng, 50, "n")
    good = CaTrace("good", native.residues, native.coords + 0.5)
    short = CaTrace("short", native.residues[:49], native.coords[:49])
    with caplog.at_level(logging.WARNING):
        ens = load_ensemble(
            _write(tmp_path / "native.pdb", native),
            [_write(tmp_path / "short.pdb", short), _write(tmp_path / "good.pdb", good)],
        )
    assert ens.decoy_ids == ("good",)
    assert any("short" in r.getMessage() for r in caplog.records)


def test_load_ensemble_all_mismatched(tmp_path, rng):
    native = random_trace(rng, 20, "n")
    other = random_trace(np.random.default_rng(7), 20, "o")
    with pytest.raises(EmptyEnsemble):
        load_ensemble(_write(tmp_path / "native.pdb", native), [_write(tmp_path / "o.pdb", other)])


def test_discover_directory_and_manifest(tmp_path, rng):
    native = random_trace(rng, 12, "n")
    for pid in ("p2", "p1"):
        _write(tmp_path / "data" / pid / "native.pdb", native)
        for k in (2, 1):
            d = CaTrace(f"x{k}", native.residues, native.coords + k)
            _write(tmp_path / "data" / pid / "decoys" / f"x{k}.pdb", d)
    found = discover_ensembles(tmp_path / "data")
    assert [e.protein_id for e in found] == ["p1", "p2"]
    assert found[0].decoy_ids == ("x1", "x2")
    assert [e.protein_id for e in discover_ensembles(tmp_path / "data", ["p2"])] == ["p2"]

    manifest = tmp_path / "m.txt"
    manifest.write_text(
        "# protein, role, path\n"
        "p1, native, data/p1/native.pdb\n"
        "p1, decoy, data/p1/decoys/x2.pdb\n"
    )
    (ens,) = discover_ensembles(manifest)
    assert ens.protein_id == "p1" and len(ens.decoys) == 1
