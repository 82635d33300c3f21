"""Per-atom and per-bond chemical annotations for image channels.

Covers the four channel quantities: numeric bond order, valence (explicit
graph connections), a rule-based hybridization code, and iteratively
equalized partial charges (the Gasteiger/PEOE scheme, with implicit
hydrogens expanded into the iteration as pseudo-atoms).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .molgraph import AROMATIC, BOND_ORDER_VALUE, DOUBLE, TRIPLE

HYB_NONE = 0
HYB_SP = 1
HYB_SP2 = 2
HYB_SP3 = 3

_HYB_LABEL = {HYB_NONE: "none", HYB_SP: "sp", HYB_SP2: "sp2", HYB_SP3: "sp3"}

# Elements that default to sp3 when saturated.
_SP3_ELEMENTS = {"C", "N", "O", "S", "P", "B"}

# Damping divisor for hydrogen donors: fixed cation electronegativity.
HYDROGEN_CATION_CHI = 20.02


class MissingParams(KeyError):
    """No charge parameters for this (element, hybridization) pair."""

    def __init__(self, element, hyb_code):
        label = _HYB_LABEL.get(hyb_code, str(hyb_code))
        super().__init__(f"no PEOE parameters for {element} ({label})")
        self.element = element
        self.hybridization = label


@dataclass
class PeoeParams:
    """Coefficient table for chi(q) = a + b*q + c*q^2 per (element, hyb)."""

    entries: dict
    hydrogen_cation_chi: float = HYDROGEN_CATION_CHI

    def lookup(self, element, hyb_code):
        row = self.entries.get((element, _HYB_LABEL[hyb_code]))
        if row is None:
            row = self.entries.get((element, "*"))
        if row is None:
            raise MissingParams(element, hyb_code)
        return row


def load_peoe_params(path=None):
    """Parse the shipped coefficient table (or one at `path`)."""
    if path is None:
        text = (
            resources.files("chemimg").joinpath("data/peoe_params.txt")
            .read_text(encoding="utf-8")
        )
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    entries = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        element, hyb, a, b, c = line.split()
        entries[(element, hyb)] = (float(a), float(b), float(c))
    return PeoeParams(entries=entries)


_DEFAULT_PARAMS = None


def default_peoe_params():
    global _DEFAULT_PARAMS
    if _DEFAULT_PARAMS is None:
        _DEFAULT_PARAMS = load_peoe_params()
    return _DEFAULT_PARAMS


@dataclass
class AtomAnnotations:
    valence: int
    hybridization_code: int
    partial_charge: float


def bond_order(bond):
    """Numeric order: single 1.0, double 2.0, triple 3.0, aromatic 1.5."""
    return BOND_ORDER_VALUE[bond.order_kind]


def valence(mol, atom_index):
    """Number of explicit connections (graph neighbors); hydrogens that
    are written as graph atoms count, implicit ones do not."""
    if not 0 <= atom_index < len(mol.atoms):
        raise IndexError(f"atom index {atom_index} out of range")
    return len(mol.neighbors(atom_index))


def hybridization(mol, atom_index):
    """Rule-based hybridization code (0 none, 1 sp, 2 sp2, 3 sp3).

    A triple bond or two double bonds make an atom sp; any double or
    aromatic bond makes it sp2; otherwise common-element atoms with at
    least one connection or hydrogen are sp3. Bare ions stay at 0.
    """
    if not 0 <= atom_index < len(mol.atoms):
        raise IndexError(f"atom index {atom_index} out of range")
    kinds = [b.order_kind for b in mol.bonds_of(atom_index)]
    n_double = sum(1 for k in kinds if k == DOUBLE)
    if TRIPLE in kinds or n_double >= 2:
        return HYB_SP
    if n_double >= 1 or AROMATIC in kinds:
        return HYB_SP2
    atom = mol.atoms[atom_index]
    has_h = atom.implicit_h > 0 or atom.explicit_h > 0
    if atom.element in _SP3_ELEMENTS and (kinds or has_h):
        return HYB_SP3
    return HYB_NONE


@dataclass
class GasteigerResult:
    """Charges after the damped equalization iteration.

    `charges` covers the molecule's graph atoms in order. Hydrogens that
    entered the iteration as pseudo-atoms (implicit plus bracket H counts)
    are reported separately in `hydrogen_charges`, one list per graph
    atom; they are never folded into the heavy-atom values.
    `step_transfer` records the total charge magnitude moved at each step.
    """

    charges: np.ndarray
    hydrogen_charges: list
    step_transfer: list

    @property
    def total_charge(self):
        return float(self.charges.sum()) + float(
            sum(sum(hs) for hs in self.hydrogen_charges)
        )


def gasteiger_charges(mol, params=None, iterations=6):
    """Partial charges by damped electronegativity equalization.

    Starting from formal charges, each step moves charge across every
    bond from the less to the more electronegative end:
    dq = (chi_high - chi_low) / chi_plus(donor) * (1/2)^step, where
    chi_plus is a + b + c of the donor (hydrogen uses a fixed constant).
    Steps are synchronous: all transfers in a step see the same charges,
    so symmetry-equivalent atoms stay exactly equal.

    Raises MissingParams when an atom has no coefficient row; callers
    encoding datasets should skip the molecule and log it.
    """
    if params is None:
        params = default_peoe_params()

    n_atoms = len(mol.atoms)
    coeff = []
    chi_plus = []
    charge0 = []
    edges = []
    h_sites = [[] for _ in range(n_atoms)]

    for atom in mol.atoms:
        abc = params.lookup(atom.element, hybridization(mol, atom.index))
        coeff.append(abc)
        if atom.element == "H":
            chi_plus.append(params.hydrogen_cation_chi)
        else:
            chi_plus.append(sum(abc))
        charge0.append(float(atom.formal_charge))
    for bond in mol.bonds:
        edges.append((bond.a, bond.b))

    h_abc = params.lookup("H", HYB_NONE)
    for atom in mol.atoms:
        for _ in range(atom.implicit_h + (atom.explicit_h if atom.from_bracket else 0)):
            site = len(coeff)
            coeff.append(h_abc)
            chi_plus.append(params.hydrogen_cation_chi)
            charge0.append(0.0)
            edges.append((atom.index, site))
            h_sites[atom.index].append(site)

    a = np.array([row[0] for row in coeff])
    b = np.array([row[1] for row in coeff])
    c = np.array([row[2] for row in coeff])
    plus = np.array(chi_plus)
    q = np.array(charge0)

    damp = 0.5
    step_transfer = []
    for _ in range(iterations):
        chi = a + b * q + c * q * q
        delta = np.zeros_like(q)
        moved = 0.0
        for u, v in edges:
            if chi[u] == chi[v]:
                continue
            donor, acceptor = (u, v) if chi[u] < chi[v] else (v, u)
            dq = (chi[acceptor] - chi[donor]) / plus[donor] * damp
            delta[donor] += dq
            delta[acceptor] -= dq
            moved += dq
        q = q + delta
        step_transfer.append(moved)
        damp *= 0.5

    return GasteigerResult(
        charges=q[:n_atoms],
        hydrogen_charges=[[float(q[s]) for s in sites] for sites in h_sites],
        step_transfer=step_transfer,
    )


def annotate_atoms(mol, params=None, iterations=6):
    """Valence, hybridization, and partial charge for every atom."""
    result = gasteiger_charges(mol, params=params, iterations=iterations)
    return [
        AtomAnnotations(
            valence=valence(mol, i),
            hybridization_code=hybridization(mol, i),
            partial_charge=float(result.charges[i]),
        )
        for i in range(len(mol.atoms))
    ]
