"""A small SMILES parser sufficient for the peptide chemistry in CycPeptMPDB.

Supports the organic subset (B C N O P S F Cl Br I and aromatic b c n o p s),
bracket atoms with isotope / chirality (@, @@) / hydrogen count / charge /
atom-class fields, branches, ring-closure digits including %nn, explicit bond
symbols (- = # $ : / \\) and dot-separated fragments. Aromaticity is taken as
written (no perception or kekulization); implicit hydrogen counts follow the
standard valence rules with aromatic bonds counted as 1.5.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class SmilesError(ValueError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"position {position}: {message}"
        super().__init__(message)
        self.position = position


ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_ORGANIC = {"b", "c", "n", "o", "p", "s"}
TWO_LETTER = {"Cl", "Br"}

# smallest-first allowed valences; implicit H fills to the smallest that fits
DEFAULT_VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
    "H": (1,),
}

BOND_ORDERS = {"-": 1.0, "=": 2.0, "#": 3.0, "$": 4.0, ":": 1.5, "/": 1.0, "\\": 1.0}


@dataclass
class Atom:
    index: int
    element: str  # capitalized element symbol
    aromatic: bool = False
    isotope: int | None = None
    charge: int = 0
    explicit_h: int | None = None  # set only by bracket atoms
    chiral: str | None = None  # "@" or "@@"
    in_ring: bool = False
    _implicit_h: int = 0
    # neighbor slots in the order they are written, for chirality parity:
    # ("atom", index) or ("H",); ring closures land at their digit's position
    written_order: list = field(default_factory=list)

    @property
    def total_h(self) -> int:
        return self.explicit_h if self.explicit_h is not None else self._implicit_h


@dataclass
class Bond:
    a: int
    b: int
    order: float  # 1, 1.5, 2, 3, 4
    direction: str | None = None  # "/" or "\\" as written
    in_ring: bool = False

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a


@dataclass
class Molecule:
    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)
    _adj: dict[int, list[int]] = field(default_factory=dict)

    def add_atom(self, atom: Atom) -> int:
        atom.index = len(self.atoms)
        self.atoms.append(atom)
        self._adj[atom.index] = []
        return atom.index

    def add_bond(self, a: int, b: int, order: float, direction: str | None = None) -> None:
        if a == b:
            raise SmilesError("self-bond")
        for bond_index in self._adj[a]:
            bond = self.bonds[bond_index]
            if bond.other(a) == b:
                raise SmilesError(f"duplicate bond between atoms {a} and {b}")
        bond = Bond(a, b, order, direction)
        self.bonds.append(bond)
        self._adj[a].append(len(self.bonds) - 1)
        self._adj[b].append(len(self.bonds) - 1)

    def neighbors(self, idx: int):
        """(neighbor index, Bond) pairs."""
        return [(self.bonds[bi].other(idx), self.bonds[bi]) for bi in self._adj[idx]]

    def degree(self, idx: int) -> int:
        return len(self._adj[idx])

    def __len__(self) -> int:
        return len(self.atoms)


def _finalize(mol: Molecule) -> Molecule:
    _assign_implicit_hydrogens(mol)
    _mark_rings(mol)
    return mol


def _assign_implicit_hydrogens(mol: Molecule) -> None:
    for atom in mol.atoms:
        if atom.explicit_h is not None:
            continue
        order_sum = sum(b.order for _, b in mol.neighbors(atom.index))
        order_sum = int(-(-order_sum // 1))  # ceil: aromatic 1.5s round up
        valences = DEFAULT_VALENCES.get(atom.element)
        if valences is None:
            atom._implicit_h = 0
            continue
        # charge shifts the target valence in the common organic cases
        shift = atom.charge if atom.element in ("N", "O", "S", "P") else -abs(atom.charge)
        h = 0
        for valence in valences:
            if valence + shift >= order_sum:
                h = valence + shift - order_sum
                break
        atom._implicit_h = max(0, h)


def _mark_rings(mol: Molecule) -> None:
    """An edge lies in a ring iff it is not a bridge (DFS lowpoint test)."""
    n = len(mol.atoms)
    visited = [False] * n
    depth = [0] * n
    low = [0] * n
    bridges = set()
    for root in range(n):
        if visited[root]:
            continue
        stack = [(root, -1, iter(mol._adj[root]))]
        visited[root] = True
        while stack:
            node, parent_bond, it = stack[-1]
            advanced = False
            for bond_index in it:
                bond = mol.bonds[bond_index]
                nxt = bond.other(node)
                if bond_index == parent_bond:
                    continue
                if not visited[nxt]:
                    visited[nxt] = True
                    depth[nxt] = depth[node] + 1
                    low[nxt] = depth[nxt]
                    stack.append((nxt, bond_index, iter(mol._adj[nxt])))
                    advanced = True
                    break
                low[node] = min(low[node], depth[nxt])
            if not advanced:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[node])
                    if low[node] > depth[parent]:
                        bridges.add(parent_bond)
    for bond_index, bond in enumerate(mol.bonds):
        bond.in_ring = bond_index not in bridges
    for bond in mol.bonds:
        if bond.in_ring:
            mol.atoms[bond.a].in_ring = True
            mol.atoms[bond.b].in_ring = True


def _parse_bracket(text: str, start: int) -> tuple[Atom, int]:
    end = text.find("]", start)
    if end < 0:
        raise SmilesError("unclosed bracket atom", start)
    body = text[start + 1 : end]
    pos = 0
    isotope = None
    while pos < len(body) and body[pos].isdigit():
        pos += 1
    if pos:
        isotope = int(body[:pos])
    sym_start = pos
    if pos < len(body) and body[pos].isalpha():
        pos += 1
        if pos < len(body) and body[pos].islower() and body[sym_start : pos + 1].capitalize() in (
            TWO_LETTER | {"Si", "Se", "As", "Na", "Li", "Mg", "Ca", "Zn", "Fe", "Te"}
        ):
            pos += 1
    else:
        raise SmilesError("bracket atom without element symbol", start)
    raw_symbol = body[sym_start:pos]
    aromatic = raw_symbol[0].islower()
    element = raw_symbol.capitalize()
    chiral = None
    if pos < len(body) and body[pos] == "@":
        pos += 1
        if pos < len(body) and body[pos] == "@":
            chiral = "@@"
            pos += 1
        else:
            chiral = "@"
    explicit_h = 0
    if pos < len(body) and body[pos] == "H":
        pos += 1
        count_start = pos
        while pos < len(body) and body[pos].isdigit():
            pos += 1
        explicit_h = int(body[count_start:pos]) if pos > count_start else 1
    charge = 0
    while pos < len(body) and body[pos] in "+-":
        sign = 1 if body[pos] == "+" else -1
        pos += 1
        count_start = pos
        while pos < len(body) and body[pos].isdigit():
            pos += 1
        if pos > count_start:
            charge += sign * int(body[count_start:pos])
        else:
            charge += sign
    if pos < len(body) and body[pos] == ":":
        pos += 1
        count_start = pos
        while pos < len(body) and body[pos].isdigit():
            pos += 1
        if pos == count_start:
            raise SmilesError("bad atom-class field", start)
    if pos != len(body):
        raise SmilesError(f"trailing bracket content {body[pos:]!r}", start)
    if element == "H" and explicit_h:
        raise SmilesError("hydrogen atom with hydrogen count", start)
    atom = Atom(
        index=-1,
        element=element,
        aromatic=aromatic,
        isotope=isotope,
        charge=charge,
        explicit_h=explicit_h,
        chiral=chiral,
    )
    return atom, end + 1


def parse_smiles(text: str) -> Molecule:
    if not text or not text.strip():
        raise SmilesError("empty SMILES")
    text = text.strip()
    mol = Molecule()
    prev: int | None = None
    pending_bond: str | None = None
    branch_stack: list[int | None] = []
    ring_open: dict[int, tuple[int, str | None]] = {}
    i = 0

    def attach(new_index: int):
        nonlocal prev, pending_bond
        atom = mol.atoms[new_index]
        if prev is not None:
            order, direction = _bond_order(pending_bond, prev, new_index)
            mol.add_bond(prev, new_index, order, direction)
            atom.written_order.append(("atom", prev))
            mol.atoms[prev].written_order.append(("atom", new_index))
        elif pending_bond is not None:
            raise SmilesError("bond symbol without a preceding atom")
        if atom.explicit_h:
            for _ in range(atom.explicit_h):
                atom.written_order.append(("H",))
        prev = new_index
        pending_bond = None

    def _bond_order(symbol, a, b):
        if symbol is None:
            if mol.atoms[a].aromatic and mol.atoms[b].aromatic:
                return 1.5, None
            return 1.0, None
        order = BOND_ORDERS[symbol]
        direction = symbol if symbol in ("/", "\\") else None
        return order, direction

    while i < len(text):
        ch = text[i]
        if ch in BOND_ORDERS:
            if pending_bond is not None:
                raise SmilesError("two consecutive bond symbols", i)
            pending_bond = ch
            i += 1
        elif ch == "(":
            if prev is None:
                raise SmilesError("branch before any atom", i)
            branch_stack.append(prev)
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise SmilesError("unbalanced ')'", i)
            prev = branch_stack.pop()
            i += 1
        elif ch == ".":
            if pending_bond is not None:
                raise SmilesError("bond symbol before dot", i)
            prev = None
            i += 1
        elif ch.isdigit() or ch == "%":
            if prev is None:
                raise SmilesError("ring closure before any atom", i)
            if ch == "%":
                if i + 2 >= len(text) or not text[i + 1 : i + 3].isdigit():
                    raise SmilesError("bad %nn ring closure", i)
                number = int(text[i + 1 : i + 3])
                i += 3
            else:
                number = int(ch)
                i += 1
            if number in ring_open:
                partner, opening_bond = ring_open.pop(number)
                symbol = pending_bond or opening_bond
                if pending_bond and opening_bond and pending_bond != opening_bond:
                    raise SmilesError(f"ring closure {number} bond mismatch", i)
                order, direction = _bond_order(symbol, partner, prev)
                mol.add_bond(partner, prev, order, direction)
                mol.atoms[prev].written_order.append(("atom", partner))
                slots = mol.atoms[partner].written_order
                slots[slots.index(("ring", number))] = ("atom", prev)
                pending_bond = None
            else:
                ring_open[number] = (prev, pending_bond)
                mol.atoms[prev].written_order.append(("ring", number))
                pending_bond = None
        elif ch == "[":
            atom, i = _parse_bracket(text, i)
            attach(mol.add_atom(atom))
        elif ch.isalpha():
            if text[i : i + 2] in TWO_LETTER:
                symbol = text[i : i + 2]
                i += 2
            else:
                symbol = ch
                i += 1
            if symbol in ORGANIC_SUBSET:
                atom = Atom(index=-1, element=symbol, aromatic=False)
            elif symbol in AROMATIC_ORGANIC:
                atom = Atom(index=-1, element=symbol.upper(), aromatic=True)
            else:
                raise SmilesError(f"element {symbol!r} needs brackets", i)
            attach(mol.add_atom(atom))
        else:
            raise SmilesError(f"unexpected character {ch!r}", i)
    if branch_stack:
        raise SmilesError("unbalanced '('")
    if ring_open:
        raise SmilesError(f"unclosed ring bonds {sorted(ring_open)}")
    if pending_bond is not None:
        raise SmilesError("dangling bond symbol")
    if not mol.atoms:
        raise SmilesError("no atoms")
    return _finalize(mol)
