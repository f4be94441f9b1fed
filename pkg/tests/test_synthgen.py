import numpy as np
import pytest
from scipy.stats import spearmanr

from kbpot.geometry import rmsd
from kbpot.pdbio import AMINO_ACIDS, format_pdb
from kbpot.synthgen import SynthConfig, generate, generate_protein, random_chain, write_ensembles


def test_bond_lengths_and_self_avoidance():
    for ens in generate(SynthConfig(n_proteins=3, residues_per_protein=80, decoys_per_protein=2)):
        c = ens.native.coords
        np.testing.assert_allclose(np.linalg.norm(np.diff(c, axis=0), axis=1), 3.8, atol=1e-9)
        d = np.linalg.norm(c[:, None] - c[None], axis=2)
        assert d[np.triu_indices(len(c), 1)].min() >= 2.2


def test_same_seed_identical():
    cfg = SynthConfig(n_proteins=2, residues_per_protein=20, decoys_per_protein=3, rng_seed=5)
    a, b = generate(cfg), generate(cfg)
    for x, y in zip(a, b):
        assert format_pdb(x.native) == format_pdb(y.native)
        assert [format_pdb(t) for _, t in x.decoys] == [format_pdb(t) for _, t in y.decoys]
    other = generate(SynthConfig(n_proteins=2, residues_per_protein=20, decoys_per_protein=3, rng_seed=6))
    assert format_pdb(other[0].native) != format_pdb(a[0].native)


def test_protein_independent_of_set_size():
    small = generate(SynthConfig(n_proteins=2, residues_per_protein=20, decoys_per_protein=2))
    big = generate(SynthConfig(n_proteins=5, residues_per_protein=20, decoys_per_protein=2))
    assert small[1].native.same_structure(big[1].native)


def test_small_sigma_limit():
    cfg = SynthConfig(n_proteins=1, residues_per_protein=30, decoys_per_protein=5, perturbation_sigmas=(1e-6,))
    ens = generate_protein(cfg, 0)
    assert max(rmsd(ens.native, t) for _, t in ens.decoys) < 1e-5


def test_rmsd_increases_with_sigma():
    sigmas = (0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0)
    per_sigma = []
    for k, s in enumerate(sigmas):
        cfg = SynthConfig(n_proteins=1, residues_per_protein=40, decoys_per_protein=50,
                          perturbation_sigmas=(s,), rng_seed=k)
        ens = generate_protein(cfg, 0)
        per_sigma.append(np.mean([rmsd(ens.native, t) for _, t in ens.decoys]))
    rho = spearmanr(sigmas, per_sigma).statistic
    assert rho > 0.9


def test_alphabet_restriction():
    cfg = SynthConfig(n_proteins=1, residues_per_protein=50, decoys_per_protein=1, alphabet=AMINO_ACIDS[:3])
    assert set(generate(cfg)[0].native.residues) <= set(AMINO_ACIDS[:3])
    with pytest.raises(ValueError):
        SynthConfig(alphabet=("XXX",))


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(n_proteins=0)
    with pytest.raises(ValueError):
        SynthConfig(perturbation_sigmas=(1.0, -0.5))


def test_write_layout(tmp_path):
    ens = generate(SynthConfig(n_proteins=2, residues_per_protein=10, decoys_per_protein=3))
    write_ensembles(ens, tmp_path)
    assert (tmp_path / "syn0001" / "native.pdb").exists()
    assert len(list((tmp_path / "syn0000" / "decoys").glob("*.pdb"))) == 3


def test_random_chain_deterministic():
    a = random_chain(np.random.default_rng(1), 30)
    b = random_chain(np.random.default_rng(1), 30)
    np.testing.assert_array_equal(a, b)
