import pytest

from cycpept_ingest.smiles import SmilesError, parse_smiles


class TestAtomsAndHydrogens:
    @pytest.mark.parametrize("smiles,n_atoms,h_counts", [
        ("C", 1, [4]),
        ("CCO", 3, [3, 2, 1]),
        ("C=C", 2, [2, 2]),
        ("C#N", 2, [1, 0]),
        ("c1ccccc1", 6, [1] * 6),              # benzene
        ("c1ccncc1", 6, [1, 1, 1, 0, 1, 1]),   # pyridine
        ("c1cc[nH]c1", 5, [1, 1, 1, 1, 1]),    # pyrrole
        ("CC(=O)O", 4, [3, 0, 0, 1]),
        ("[NH3+]CC(=O)[O-]", 5, [3, 2, 0, 0, 0]),
        ("CS(=O)(=O)C", 5, [3, 0, 0, 0, 3]),   # hypervalent sulfur
        ("ClCBr", 3, [0, 2, 0]),               # two-letter halogens
    ])
    def test_atom_and_hydrogen_counts(self, smiles, n_atoms, h_counts):
        mol = parse_smiles(smiles)
        assert len(mol.atoms) == n_atoms
        assert [a.total_h for a in mol.atoms] == h_counts

    def test_bracket_fields(self):
        mol = parse_smiles("[13C@@H3+]")
        atom = mol.atoms[0]
        assert atom.isotope == 13
        assert atom.chiral == "@@"
        assert atom.explicit_h == 3
        assert atom.charge == 1

    def test_charges(self):
        assert parse_smiles("[O-]").atoms[0].charge == -1
        assert parse_smiles("[Fe+2]").atoms[0].charge == 2
        assert parse_smiles("[Fe++]").atoms[0].charge == 2


class TestRingsAndBranches:
    def test_ring_membership(self):
        mol = parse_smiles("CC1CCC1C")
        assert [a.in_ring for a in mol.atoms] == [False, True, True, True, True, False]

    def test_two_digit_ring_closure(self):
        mol = parse_smiles("C%10CCCCC%10")
        assert all(a.in_ring for a in mol.atoms)
        assert len(mol.bonds) == 6

    def test_fused_rings(self):
        mol = parse_smiles("c1ccc2ccccc2c1")  # naphthalene
        assert len(mol.atoms) == 10
        assert all(a.in_ring for a in mol.atoms)

    def test_branching(self):
        mol = parse_smiles("CC(C)(C)C")  # neopentane
        assert mol.degree(1) == 4

    def test_macrocycle(self):
        mol = parse_smiles("C1NC(=O)CNC(=O)CNC1=O")  # cyclo(Gly-Gly-Gly)
        ring_atoms = sum(a.in_ring for a in mol.atoms)
        assert ring_atoms == 9
        carbonyl_oxygens = sum(1 for a in mol.atoms if a.element == "O")
        assert carbonyl_oxygens == 3

    def test_dot_fragments(self):
        mol = parse_smiles("CC.OC")
        assert len(mol.atoms) == 4
        assert len(mol.bonds) == 2


class TestErrors:
    @pytest.mark.parametrize("bad", [
        "", "   ",
        "C(", "C)C",
        "C1CC",          # unclosed ring
        "C=", "=C",      # dangling / leading bond
        "C==C",          # double bond symbol
        "[C",            # unclosed bracket
        "Xx",            # unknown element
    ])
    def test_rejects(self, bad):
        with pytest.raises(SmilesError):
            parse_smiles(bad)

    def test_consecutive_dots_tolerated(self):
        assert len(parse_smiles("C..C").atoms) == 2

    def test_bond_before_dot_rejected(self):
        with pytest.raises(SmilesError):
            parse_smiles("C=.C")

    def test_duplicate_bond_rejected(self):
        with pytest.raises(SmilesError):
            parse_smiles("C12CC12")
