from cycpept_ingest.fingerprint import (
    fingerprint_pairs,
    merge_counts,
    morgan_count_fingerprint,
)
from cycpept_ingest.smiles import parse_smiles


def fp(smiles, **kw):
    return morgan_count_fingerprint(parse_smiles(smiles), **kw)


class TestDeterminism:
    def test_identical_across_calls(self):
        assert fp("CC(C)Cc1ccc(cc1)C(C)C(=O)O") == fp("CC(C)Cc1ccc(cc1)C(C)C(=O)O")

    def test_pinned_hash_value(self):
        # Frozen feature-id sample; a change here means the hash scheme moved
        # and every stored dataset would silently mismatch.
        counts = fp("C")
        assert counts == {7805507310553629715: 1}

    def test_atom_order_invariance(self):
        assert fp("CCO") == fp("OCC")
        assert fp("N[C@@H](C)C(=O)O") == fp("OC(=O)[C@H](C)N")


class TestCounting:
    def test_counts_reflect_symmetry(self):
        counts = fp("CCO")
        assert sum(counts.values()) >= 3  # radius-0 ids for three atoms
        # the two methyl/methylene carbons differ (degree), so at least three
        # distinct radius-0 environments exist
        assert len(counts) >= 3

    def test_equivalent_atoms_share_features(self):
        counts = fp("CC(C)(C)C")  # four equivalent methyls
        assert 4 in counts.values()

    def test_radius_grows_feature_set(self):
        base = fp("CC(C)Cc1ccc(cc1)C(C)C(=O)O", radius=1)
        deep = fp("CC(C)Cc1ccc(cc1)C(C)C(=O)O", radius=3)
        assert len(deep) > len(base)

    def test_saturated_environments_not_duplicated(self):
        # in a 2-atom molecule the radius-1 env covers everything; higher
        # radii must not keep emitting new copies
        r1 = fp("CO", radius=1)
        r3 = fp("CO", radius=3)
        assert r1 == r3


class TestChirality:
    def test_sensitive_by_default(self):
        assert fp("N[C@@H](C)C(=O)O") != fp("N[C@H](C)C(=O)O")

    def test_insensitive_when_disabled(self):
        a = fp("N[C@@H](C)C(=O)O", chirality=False)
        b = fp("N[C@H](C)C(=O)O", chirality=False)
        assert a == b


class TestHelpers:
    def test_pairs_sorted_and_positive(self):
        pairs = fingerprint_pairs(fp("c1ccccc1O"))
        ids = [p[0] for p in pairs]
        assert ids == sorted(ids)
        assert all(c >= 1 for _, c in pairs)
        assert all(0 <= i < 2**64 for i, _ in pairs)

    def test_merge_counts(self):
        merged = merge_counts([{1: 2, 5: 1}, {5: 3, 9: 1}])
        assert merged == {1: 2, 5: 4, 9: 1}
