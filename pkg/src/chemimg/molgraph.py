"""SMILES parsing into an annotated molecular graph.

Supports the pragmatic subset of SMILES found in property-prediction
datasets: organic-subset atoms, bracket atoms with charge and H-count,
single/double/triple/aromatic bonds, branches, ring closures (including
%nn), and dot-separated fragments. Stereo markers (``/ \\ @``) are accepted
and ignored; isotope labels are parsed and discarded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

# Symbol -> atomic number, full periodic table (needed for bracket atoms
# like [Na+] or [Fe] and for value maps over atomic numbers 1..118).
PERIODIC_TABLE = {
    "H": 1, "He": 2, "Li": 3, "Be": 4, "B": 5, "C": 6, "N": 7, "O": 8,
    "F": 9, "Ne": 10, "Na": 11, "Mg": 12, "Al": 13, "Si": 14, "P": 15,
    "S": 16, "Cl": 17, "Ar": 18, "K": 19, "Ca": 20, "Sc": 21, "Ti": 22,
    "V": 23, "Cr": 24, "Mn": 25, "Fe": 26, "Co": 27, "Ni": 28, "Cu": 29,
    "Zn": 30, "Ga": 31, "Ge": 32, "As": 33, "Se": 34, "Br": 35, "Kr": 36,
    "Rb": 37, "Sr": 38, "Y": 39, "Zr": 40, "Nb": 41, "Mo": 42, "Tc": 43,
    "Ru": 44, "Rh": 45, "Pd": 46, "Ag": 47, "Cd": 48, "In": 49, "Sn": 50,
    "Sb": 51, "Te": 52, "I": 53, "Xe": 54, "Cs": 55, "Ba": 56, "La": 57,
    "Ce": 58, "Pr": 59, "Nd": 60, "Pm": 61, "Sm": 62, "Eu": 63, "Gd": 64,
    "Tb": 65, "Dy": 66, "Ho": 67, "Er": 68, "Tm": 69, "Yb": 70, "Lu": 71,
    "Hf": 72, "Ta": 73, "W": 74, "Re": 75, "Os": 76, "Ir": 77, "Pt": 78,
    "Au": 79, "Hg": 80, "Tl": 81, "Pb": 82, "Bi": 83, "Po": 84, "At": 85,
    "Rn": 86, "Fr": 87, "Ra": 88, "Ac": 89, "Th": 90, "Pa": 91, "U": 92,
    "Np": 93, "Pu": 94, "Am": 95, "Cm": 96, "Bk": 97, "Cf": 98, "Es": 99,
    "Fm": 100, "Md": 101, "No": 102, "Lr": 103, "Rf": 104, "Db": 105,
    "Sg": 106, "Bh": 107, "Hs": 108, "Mt": 109, "Ds": 110, "Rg": 111,
    "Cn": 112, "Nh": 113, "Fl": 114, "Mc": 115, "Lv": 116, "Ts": 117,
    "Og": 118,
}

# Atoms writable without brackets, and their lowercase aromatic forms.
ORGANIC_SUBSET = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")

# Neutral default valences for implicit-hydrogen filling.
DEFAULT_VALENCE = {
    "B": 3, "C": 4, "N": 3, "O": 2, "P": 3, "S": 2,
    "F": 1, "Cl": 1, "Br": 1, "I": 1,
}

SINGLE = "single"
DOUBLE = "double"
TRIPLE = "triple"
AROMATIC = "aromatic"

# Numeric order used wherever one number per bond is needed; aromatic
# bonds carry 1.5 (no kekulization anywhere in the pipeline).
BOND_ORDER_VALUE = {SINGLE: 1.0, DOUBLE: 2.0, TRIPLE: 3.0, AROMATIC: 1.5}

_BOND_SYMBOLS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC}

_BRACKET_RE = re.compile(
    r"^(?P<isotope>\d+)?"
    r"(?P<symbol>[A-Z][a-z]?|b|c|n|o|p|s)"
    r"(?P<stereo>@{1,2})?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+{1,3}|-{1,3}|\+\d+|-\d+)?"
    r"(?::\d+)?$"
)


class SmilesError(ValueError):
    """Base for all SMILES parse failures; carries the character position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (position {position})")
        self.position = position


class EmptyInput(SmilesError):
    pass


class UnknownElement(SmilesError):
    pass


class UnbalancedParen(SmilesError):
    pass


class UnclosedRing(SmilesError):
    pass


class SmilesSyntaxError(SmilesError):
    """Malformed token outside the specific error categories above."""


@dataclass
class Atom:
    element: str
    atomic_number: int
    formal_charge: int = 0
    explicit_h: int = 0
    implicit_h: int = 0
    is_aromatic: bool = False
    index: int = 0
    from_bracket: bool = False
    over_valent: bool = False


@dataclass
class Bond:
    a: int
    b: int
    order_kind: str

    def key(self):
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


@dataclass
class Molecule:
    atoms: list = field(default_factory=list)
    bonds: list = field(default_factory=list)
    name: str | None = None

    def neighbors(self, idx):
        """Indices of atoms bonded to atom `idx`, in bond order."""
        out = []
        for bond in self.bonds:
            if bond.a == idx:
                out.append(bond.b)
            elif bond.b == idx:
                out.append(bond.a)
        return out

    def bonds_of(self, idx):
        return [b for b in self.bonds if b.a == idx or b.b == idx]


def parse_smiles(text, name=None):
    """Parse a SMILES string into a Molecule.

    Aromatic flags come straight from lowercase notation; implicit
    hydrogens are not filled in here (see assign_implicit_hydrogens).

    Raises EmptyInput, UnknownElement, UnbalancedParen, UnclosedRing, or
    SmilesSyntaxError, each reporting the offending character position.
    """
    if text is None or text.strip() == "":
        raise EmptyInput("empty SMILES", 0)
    text = text.strip()

    atoms = []
    bonds = []
    bond_pairs = set()
    prev = None            # index of the atom the next bond attaches to
    pending = None         # explicit bond symbol awaiting its second atom
    branch_stack = []      # (atom index, '(' position)
    ring_open = {}         # ring number -> (atom index, bond symbol, position)

    def add_bond(a, b, kind, pos):
        if a == b:
            raise SmilesSyntaxError("ring bond joins an atom to itself", pos)
        key = (a, b) if a < b else (b, a)
        if key in bond_pairs:
            raise SmilesSyntaxError("duplicate bond between atom pair", pos)
        bond_pairs.add(key)
        bonds.append(Bond(a, b, kind))

    def add_atom(atom, pos):
        nonlocal prev, pending
        atom.index = len(atoms)
        atoms.append(atom)
        if prev is not None:
            kind = pending
            if kind is None:
                both_aromatic = atoms[prev].is_aromatic and atom.is_aromatic
                kind = AROMATIC if both_aromatic else SINGLE
            add_bond(prev, atom.index, kind, pos)
        prev = atom.index
        pending = None

    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "(":
            if prev is None:
                raise UnbalancedParen("branch opened before any atom", i)
            branch_stack.append((prev, i))
            i += 1
        elif c == ")":
            if not branch_stack:
                raise UnbalancedParen("unmatched closing parenthesis", i)
            if pending is not None:
                raise SmilesSyntaxError("dangling bond before ')'", i)
            prev = branch_stack.pop()[0]
            i += 1
        elif c in _BOND_SYMBOLS:
            if prev is None:
                raise SmilesSyntaxError("bond symbol before any atom", i)
            pending = _BOND_SYMBOLS[c]
            i += 1
        elif c in "/\\":
            # Directional bond markers: treated as plain single bonds.
            if prev is None:
                raise SmilesSyntaxError("bond symbol before any atom", i)
            pending = SINGLE
            i += 1
        elif c == ".":
            if branch_stack:
                raise UnbalancedParen("fragment separator inside branch", i)
            if pending is not None:
                raise SmilesSyntaxError("bond symbol before fragment separator", i)
            prev = None
            i += 1
        elif c.isdigit() or c == "%":
            if prev is None:
                raise UnclosedRing("ring closure before any atom", i)
            if c == "%":
                if i + 2 >= n or not text[i + 1 : i + 3].isdigit():
                    raise SmilesSyntaxError("'%' needs two ring digits", i)
                num = int(text[i + 1 : i + 3])
                width = 3
            else:
                num = int(c)
                width = 1
            if num in ring_open:
                other, opened_sym, opened_pos = ring_open.pop(num)
                kind = pending if pending is not None else opened_sym
                if kind is None:
                    both = atoms[other].is_aromatic and atoms[prev].is_aromatic
                    kind = AROMATIC if both else SINGLE
                add_bond(other, prev, kind, i)
                pending = None
            else:
                ring_open[num] = (prev, pending, i)
                pending = None
            i += width
        elif c == "[":
            end = text.find("]", i)
            if end < 0:
                raise SmilesSyntaxError("unterminated bracket atom", i)
            add_atom(_parse_bracket(text[i + 1 : end], i + 1), i)
            i = end + 1
        elif c.isalpha():
            matched = None
            for sym in ORGANIC_SUBSET:
                if text.startswith(sym, i):
                    matched = sym
                    break
            if matched is not None:
                add_atom(Atom(matched, PERIODIC_TABLE[matched]), i)
                i += len(matched)
            elif c in AROMATIC_ORGANIC:
                sym = c.upper()
                add_atom(Atom(sym, PERIODIC_TABLE[sym], is_aromatic=True), i)
                i += 1
            else:
                raise UnknownElement(f"unknown element {c!r}", i)
        else:
            raise UnknownElement(f"unexpected character {c!r}", i)

    if branch_stack:
        raise UnbalancedParen("unclosed branch", branch_stack[-1][1])
    if ring_open:
        num, (_, _, pos) = min(ring_open.items(), key=lambda kv: kv[1][2])
        raise UnclosedRing(f"unmatched ring closure {num}", pos)
    if pending is not None:
        raise SmilesSyntaxError("dangling bond at end of input", n - 1)

    return Molecule(atoms=atoms, bonds=bonds, name=name)


def _parse_bracket(body, pos):
    match = _BRACKET_RE.match(body)
    if match is None:
        raise SmilesSyntaxError(f"malformed bracket atom [{body}]", pos)
    symbol = match.group("symbol")
    aromatic = symbol[0].islower()
    element = symbol.capitalize()
    if element not in PERIODIC_TABLE:
        raise UnknownElement(f"unknown element {symbol!r}", pos)

    hcount = 0
    h = match.group("hcount")
    if h is not None:
        hcount = 1 if h == "H" else int(h[1:])

    charge = 0
    ch = match.group("charge")
    if ch is not None:
        if set(ch) <= {"+"}:
            charge = len(ch)
        elif set(ch) <= {"-"}:
            charge = -len(ch)
        else:
            charge = int(ch)

    return Atom(
        element,
        PERIODIC_TABLE[element],
        formal_charge=charge,
        explicit_h=hcount,
        is_aromatic=aromatic,
        from_bracket=True,
    )


def assign_implicit_hydrogens(mol):
    """Return a copy of `mol` with implicit hydrogen counts filled in.

    Organic-subset atoms written without brackets receive
    ``default_valence - floor(bond order sum)`` hydrogens (aromatic bonds
    count 1.5), floored at zero. Bracket atoms keep their written H count
    and get no implicit hydrogens. Over-valent atoms are tolerated: they
    get zero hydrogens and an `over_valent` flag instead of an error.
    """
    order_sum = [0.0] * len(mol.atoms)
    for bond in mol.bonds:
        value = BOND_ORDER_VALUE[bond.order_kind]
        order_sum[bond.a] += value
        order_sum[bond.b] += value

    new_atoms = []
    for atom in mol.atoms:
        if atom.from_bracket or atom.element not in DEFAULT_VALENCE:
            new_atoms.append(replace(atom, implicit_h=0))
            continue
        remainder = DEFAULT_VALENCE[atom.element] - order_sum[atom.index]
        count = int(remainder) if remainder > 0 else 0
        new_atoms.append(
            replace(atom, implicit_h=count, over_valent=remainder < 0)
        )
    return Molecule(atoms=new_atoms, bonds=list(mol.bonds), name=mol.name)


def molecule_from_smiles(text, name=None):
    """Parse and hydrogen-fill in one step."""
    return assign_implicit_hydrogens(parse_smiles(text, name=name))


def molecular_formula(mol):
    """Hill-order formula counting implicit and explicit hydrogens."""
    counts = {}
    h_total = 0
    for atom in mol.atoms:
        if atom.element == "H":
            h_total += 1
        else:
            counts[atom.element] = counts.get(atom.element, 0) + 1
        h_total += atom.explicit_h + atom.implicit_h

    parts = []
    if "C" in counts:
        parts.append(("C", counts.pop("C")))
        if h_total:
            parts.append(("H", h_total))
        parts.extend(sorted(counts.items()))
    else:
        if h_total:
            counts["H"] = counts.get("H", 0) + h_total
        parts.extend(sorted(counts.items()))
    return "".join(sym + (str(k) if k > 1 else "") for sym, k in parts)
