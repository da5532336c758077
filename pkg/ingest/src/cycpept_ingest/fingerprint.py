"""Circular count fingerprints over the parsed molecular graph.

The construction follows the extended-connectivity scheme: every atom starts
from a local invariant, neighborhoods are hashed outward for `radius`
iterations, and each (atom, radius) environment contributes one count to its
hashed feature id. Environments that stop growing (the bond set at radius r
equals the bond set at radius r-1) are emitted once only. Feature ids live in
the full unsigned 64-bit space with a pinned hash, so fingerprints are stable
across runs and platforms.
"""

from __future__ import annotations

from .graphkeys import atom_seed, bond_code, hash64, normalized_chiral_tags
from .smiles import Molecule

DEFAULT_RADIUS = 3


def _bond_sets_by_radius(mol: Molecule, start: int, radius: int) -> list[frozenset[int]]:
    """bond-index sets reachable within 1..radius steps of `start`."""
    sets = []
    seen_atoms = {start}
    seen_bonds: set[int] = set()
    frontier = [start]
    for _ in range(radius):
        next_frontier = []
        for i in frontier:
            for bond_index in mol._adj[i]:
                bond = mol.bonds[bond_index]
                j = bond.other(i)
                seen_bonds.add(bond_index)
                if j not in seen_atoms:
                    seen_atoms.add(j)
                    next_frontier.append(j)
        sets.append(frozenset(seen_bonds))
        frontier = next_frontier
    return sets


def morgan_count_fingerprint(
    mol: Molecule, radius: int = DEFAULT_RADIUS, chirality: bool = True
) -> dict[int, int]:
    """feature id -> count over all atom environments up to `radius`."""
    counts: dict[int, int] = {}
    tags = normalized_chiral_tags(mol) if chirality else {}
    codes = {
        i: atom_seed(mol, i, chirality, chiral_tag=tags.get(i))
        for i in range(len(mol.atoms))
    }
    for code in codes.values():
        counts[code] = counts.get(code, 0) + 1
    bond_sets = {i: _bond_sets_by_radius(mol, i, radius) for i in range(len(mol.atoms))}
    previous_sets = {i: frozenset() for i in range(len(mol.atoms))}
    for r in range(1, radius + 1):
        nxt = {}
        for i in range(len(mol.atoms)):
            neighborhood = sorted(
                (bond_code(bond, chirality), codes[j]) for j, bond in mol.neighbors(i)
            )
            nxt[i] = hash64("env", codes[i], *[f"{c}{v}" for c, v in neighborhood])
        codes = nxt
        for i in range(len(mol.atoms)):
            grown = bond_sets[i][r - 1]
            if grown == previous_sets[i]:
                continue  # environment stopped growing; already emitted
            previous_sets[i] = grown
            counts[codes[i]] = counts.get(codes[i], 0) + 1
    return counts


def fingerprint_pairs(counts: dict[int, int]) -> list[list[int]]:
    """Sorted [feature_id, count] pairs, the interchange-format encoding."""
    return [[fid, counts[fid]] for fid in sorted(counts)]


def merge_counts(parts: list[dict[int, int]]) -> dict[int, int]:
    merged: dict[int, int] = {}
    for part in parts:
        for fid, count in part.items():
            merged[fid] = merged.get(fid, 0) + count
    return merged
