"""Permutation-invariant molecular keys via iterated neighborhood hashing,
plus Murcko-style scaffold extraction.

All hashes are 64-bit BLAKE2b digests of canonical string encodings, so keys
are stable across runs, platforms and library versions. Keys are invariant to
atom reordering by construction (final atom/edge codes are combined as sorted
multisets). Stereo annotations (@/@@ tags, directional bonds) are folded into
the atom and bond codes when chirality is enabled; this distinguishes
stereoisomers as annotated in the source rather than performing full CIP
perception.
"""

from __future__ import annotations

import hashlib

from .smiles import Bond, Molecule

_WL_ROUNDS = 8


def hash64(*fields) -> int:
    payload = "\x1f".join(str(f) for f in fields).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


def bond_code(bond: Bond, chirality: bool) -> str:
    code = {1.0: "-", 1.5: ":", 2.0: "=", 3.0: "#", 4.0: "$"}[bond.order]
    if chirality and bond.direction:
        code += bond.direction
    return code


def atom_seed(
    mol: Molecule,
    index: int,
    chirality: bool,
    degree: int | None = None,
    hydrogens: int | None = None,
    in_ring: bool | None = None,
    chiral_tag: str | None = None,
) -> int:
    atom = mol.atoms[index]
    tag = chiral_tag if chiral_tag is not None else atom.chiral
    return hash64(
        "atom",
        atom.element,
        int(atom.aromatic),
        atom.charge,
        atom.total_h if hydrogens is None else hydrogens,
        mol.degree(index) if degree is None else degree,
        atom.isotope if atom.isotope is not None else "",
        tag if (chirality and tag) else "",
        int(atom.in_ring if in_ring is None else in_ring),
    )


def _permutation_parity(perm: list[int]) -> int:
    """0 for even, 1 for odd."""
    seen = [False] * len(perm)
    parity = 0
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycle = 0
        node = start
        while not seen[node]:
            seen[node] = True
            node = perm[node]
            cycle += 1
        parity ^= (cycle - 1) & 1
    return parity


def normalized_chiral_tags(mol: Molecule) -> dict[int, str]:
    """@/@@ tags re-expressed against a canonical neighbor order.

    The written tag is defined relative to the order neighbors appear in the
    SMILES text; permuting that order flips the tag. Sorting the four
    substituents by chirality-blind canonical codes and flipping the tag for
    odd permutations makes equivalent writings agree. Centers whose
    substituents cannot be distinguished (tied codes) or that do not have
    exactly four slots keep their literal tag.
    """
    tags: dict[int, str] = {}
    chiral_atoms = [a for a in mol.atoms if a.chiral]
    if not chiral_atoms:
        return tags
    blind = wl_codes(mol, chirality=False)[-1]
    for atom in chiral_atoms:
        slots = [s for s in atom.written_order if s[0] != "ring"]
        if len(slots) != 4:
            tags[atom.index] = atom.chiral
            continue
        keys = [(-1, 0) if s == ("H",) else (1, blind[s[1]]) for s in slots]
        if len(set(keys)) != 4:
            tags[atom.index] = atom.chiral
            continue
        order = sorted(range(4), key=lambda k: keys[k])
        flip = _permutation_parity(order)
        if flip:
            tags[atom.index] = "@@" if atom.chiral == "@" else "@"
        else:
            tags[atom.index] = atom.chiral
    return tags


def wl_codes(
    mol: Molecule,
    chirality: bool,
    rounds: int = _WL_ROUNDS,
    subset: set[int] | None = None,
) -> list[dict[int, int]]:
    """Per-round atom codes; restricted to `subset` when given.

    For subgraphs, severed single bonds are treated as hydrogens (degree drops
    and the hydrogen count rises), so a scaffold's key matches the standalone
    molecule with the side chains replaced by H.
    """
    atoms = sorted(subset) if subset is not None else range(len(mol.atoms))
    atoms = list(atoms)
    member = set(atoms)
    tags = normalized_chiral_tags(mol) if chirality else {}
    if subset is None:
        codes = {i: atom_seed(mol, i, chirality, chiral_tag=tags.get(i)) for i in atoms}
    else:
        codes = {}
        for i in atoms:
            sub_degree = sum(1 for j, _ in mol.neighbors(i) if j in member)
            cut = mol.degree(i) - sub_degree
            sub_ring = any(
                bond.in_ring for j, bond in mol.neighbors(i) if j in member
            )
            codes[i] = atom_seed(
                mol,
                i,
                chirality,
                degree=sub_degree,
                hydrogens=mol.atoms[i].total_h + cut,
                in_ring=sub_ring,
                chiral_tag=tags.get(i),
            )
    history = [dict(codes)]
    for _ in range(rounds):
        nxt = {}
        for i in atoms:
            neighborhood = sorted(
                (bond_code(bond, chirality), codes[j])
                for j, bond in mol.neighbors(i)
                if j in member
            )
            nxt[i] = hash64("wl", codes[i], *[f"{c}{v}" for c, v in neighborhood])
        codes = nxt
        history.append(dict(codes))
    return history


def canonical_key(
    mol: Molecule, chirality: bool = True, subset: set[int] | None = None
) -> str:
    """Stable hex identity for the (sub)graph, invariant to atom order."""
    history = wl_codes(mol, chirality, subset=subset)
    final = history[-1]
    member = set(final)
    edge_codes = sorted(
        hash64(
            "edge",
            bond_code(bond, chirality),
            *sorted((final[bond.a], final[bond.b])),
        )
        for bond in mol.bonds
        if bond.a in member and bond.b in member
    )
    digest = hash64(
        "mol",
        len(member),
        len(edge_codes),
        *sorted(final.values()),
        *edge_codes,
    )
    return f"{digest:016x}"


def murcko_scaffold_atoms(mol: Molecule) -> set[int]:
    """Ring systems plus linkers plus exocyclic multiple-bond partners.

    Empty set when the molecule is acyclic.
    """
    ring_atoms = {a.index for a in mol.atoms if a.in_ring}
    if not ring_atoms:
        return set()
    kept = set(range(len(mol.atoms)))
    # iteratively strip terminal atoms outside rings (side chains)
    changed = True
    while changed:
        changed = False
        for i in sorted(kept):
            if i in ring_atoms:
                continue
            degree = sum(1 for j, _ in mol.neighbors(i) if j in kept)
            if degree <= 1:
                kept.discard(i)
                changed = True
    # re-attach atoms double/triple-bonded to the scaffold (e.g. carbonyl O)
    for bond in mol.bonds:
        if bond.order >= 2.0:
            if bond.a in kept and bond.b not in kept:
                kept.add(bond.b)
            elif bond.b in kept and bond.a not in kept:
                kept.add(bond.a)
    return kept


ACYCLIC_SCAFFOLD = "ACYCLIC"


def scaffold_key(mol: Molecule) -> str:
    """Murcko scaffold identity, ignoring chirality."""
    atoms = murcko_scaffold_atoms(mol)
    if not atoms:
        return ACYCLIC_SCAFFOLD
    return canonical_key(mol, chirality=False, subset=atoms)
