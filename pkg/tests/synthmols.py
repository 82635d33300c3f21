"""Synthetic molecule populations for end-to-end tests.

Seeded template-grammar SMILES assembly over four structural families:

    aza-heterocycles   five/six-membered rings with a ring nitrogen
    carbocycles        the same rings, all-carbon (no N anywhere)
    acyclic amines     open chains containing exactly one nitrogen
    plain chains       open C/O chains, no nitrogen

Everything stays inside the C/N/O organic subset at <= ~12 heavy atoms,
so every generated molecule survives 2D layout and rasterization in all
image schemas (checked by test_acceptance.py over the whole corpus).

Two populations are derived from the families:

    random_dataset    structure-independent random binary labels, for
                      runs where the images should carry either perfect
                      information (Truth) or none (Noise).
    ablation_dataset  label = "molecule carries chloro substituents".
                      Positives hold two or three chlorines on the same
                      skeletons the negatives use; negatives are
                      halogen-free with only a third of them ringed.
                      Atom-value images can read the element directly;
                      binary silhouettes and atom-dot images see only
                      the weak ring-fraction difference, so achievable
                      AUC rises from the reduced schemas to the full
                      one.
"""

import csv

import numpy as np

# ---------------------------------------------------------------- chains


_CHAIN_UNITS = ["C", "C", "C", "CC", "C(C)", "C(=O)", "O"]


def _chain_smiles(rng):
    """Open-chain C/O molecule, 4..10 heavy atoms, no nitrogen."""
    parts = ["C"]
    prev_o = False
    for _ in range(int(rng.integers(2, 7))):
        pick = _CHAIN_UNITS[int(rng.integers(len(_CHAIN_UNITS)))]
        if pick == "O" and prev_o:
            pick = "C"
        prev_o = pick == "O"
        parts.append(pick)
    parts.append("C")
    return "".join(parts)


def _amine_smiles(rng):
    """Open chain with exactly one N (primary/secondary/tertiary)."""
    n = int(rng.integers(4, 9))
    atoms = ["C"] * n
    pos = int(rng.integers(0, n))
    atoms[pos] = "N(C)" if (0 < pos < n - 1 and rng.random() < 0.3) else "N"
    # optional alcohol on the far end, never adjacent to the nitrogen
    if pos >= 2 and rng.random() < 0.2:
        atoms[0] = "OC"
    return "".join(atoms)


# ----------------------------------------------------------------- rings

# core = ring atoms in SMILES order; positions marked True accept a
# substituent branch.  Aromatic nitrogens never take one; the saturated
# ring N accepts only a methyl (handled separately below).
_AZA_CORES = [
    (["C", "C", "C", "N", "C", "C"], True),    # piperidine
    (["C", "C", "C", "N", "C"], True),         # pyrrolidine
    (["C", "C", "O", "C", "C", "N"], True),    # morpholine
    (["c", "c", "c", "n", "c", "c"], False),   # pyridine
    (["c", "c", "c", "[nH]", "c"], False),     # pyrrole
    (["c", "c", "c", "n(C)", "c"], False),     # N-methylpyrrole
]
_CARBO_CORES = [
    (["C", "C", "C", "C", "C", "C"], True),
    (["C", "C", "C", "C", "C"], True),
    (["c", "c", "c", "c", "c", "c"], False),
]
_RING_SUBS_SATURATED = ["(C)", "(CC)", "(O)", "(=O)"]
_RING_SUBS_AROMATIC = ["(C)", "(CC)", "(O)", "(CO)"]


def _ring_smiles(rng, cores):
    core, saturated = cores[int(rng.integers(len(cores)))]
    atoms = list(core)
    plain = [i for i, a in enumerate(atoms) if a in ("C", "c")]
    pool = _RING_SUBS_SATURATED if saturated else _RING_SUBS_AROMATIC
    subs = {}
    for _ in range(int(rng.integers(0, 3))):
        if plain:
            i = plain.pop(int(rng.integers(len(plain))))
            subs[i] = pool[int(rng.integers(len(pool)))]
    if saturated and "N" in atoms and rng.random() < 0.3:
        subs[atoms.index("N")] = "(C)"
    out = [atoms[0], "1", subs.get(0, "")]
    for i in range(1, len(atoms)):
        out.append(atoms[i])
        out.append(subs.get(i, ""))
    out.append("1")
    return "".join(out)


def _aza_ring_smiles(rng):
    return _ring_smiles(rng, _AZA_CORES)


def _carbocycle_smiles(rng):
    return _ring_smiles(rng, _CARBO_CORES)


# -------------------------------------------------- twinned skeletons
#
# The ablation positives are built by turning monovalent carbons into
# chlorines on skeletons drawn from the same grammar as the negatives.
# 2D layout depends only on graph topology, so the swap leaves atom
# coordinates bit-identical: silhouette and atom-dot images cannot tell
# a positive from a negative skeleton, only atom-value images can.
# Every skeleton carries designated "handle" sites — monovalent carbons
# (ring methyl/ethyl tips or undecorated chain ends) — so both classes
# share one skeleton distribution and the swap is always available.


def _skeleton(rng, ringed):
    """(atoms, decor, handles) token lists plus swap sites.

    A handle is ("decor", i) for a methyl/ethyl branch at position i,
    or ("atom", i) for an undecorated terminal chain carbon; swapping a
    handle to chlorine changes the element but no graph topology."""
    if ringed:
        aromatic = rng.random() < 0.35
        m = 6 if (aromatic or rng.random() < 0.6) else 5
        atoms = ["c" if aromatic else "C"] * m
        decor = [""] * m
        sites = [int(k) for k in rng.permutation(m)]
        handles = []
        for k in sites[:2]:
            decor[k] = "(C)" if rng.random() < 0.7 else "(CC)"
            handles.append(("decor", k))
        if rng.random() < 0.4:
            extra = ("(O)", "(CO)") if aromatic else ("(O)", "(=O)")
            decor[sites[2]] = extra[int(rng.integers(2))]
    else:
        n = int(rng.integers(5, 11))
        atoms = ["C"] * n
        decor = [""] * n
        if rng.random() < 0.4:
            # ether oxygen, kept away from the terminal handle sites
            atoms[int(rng.integers(2, n - 2))] = "O"
        handles = [("atom", 0), ("atom", n - 1)]
        if rng.random() < 0.35:
            k = int(rng.integers(1, n - 1))
            if atoms[k] == "C":
                decor[k] = "(C)" if rng.random() < 0.6 else "(=O)"
                if decor[k] == "(C)":
                    handles.append(("decor", k))
    return atoms, decor, handles


def _swap_to_chloro(atoms, decor, picked):
    for kind, k in picked:
        if kind == "atom":
            atoms[k] = "Cl"
        elif decor[k] == "(C)":
            decor[k] = "(Cl)"
        else:
            decor[k] = "(CCl)"


def _assemble(atoms, decor, ringed):
    if not ringed:
        return "".join(a + d for a, d in zip(atoms, decor))
    out = [atoms[0], "1", decor[0]]
    for a, d in zip(atoms[1:], decor[1:]):
        out.append(a)
        out.append(d)
    out.append("1")
    return "".join(out)


# ----------------------------------------------------------- populations

_FAMILIES = (_aza_ring_smiles, _carbocycle_smiles,
             _amine_smiles, _chain_smiles)


def random_dataset(n=300, seed=0):
    """(smiles, label) rows: uniform family mix, labels independent coin
    flips — the image content carries no information about the label."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        family = _FAMILIES[int(rng.integers(len(_FAMILIES)))]
        rows.append((family(rng), float(rng.integers(0, 2))))
    return rows


def ablation_dataset(n=500, seed=0):
    """(smiles, label) rows where label=1 iff the molecule carries
    chloro substituents (every positive holds two or three Cl).

    Positives are carbon->chlorine swaps at the handle sites of
    skeletons drawn from the same grammar as the negatives, so
    coordinates never betray the label.  The only geometric signal is
    a deliberate ring-fraction tilt (0.7 in positives vs 0.3 in
    negatives): reduced schemas can reach a modest AUC from ring
    presence alone, while the high-valued chlorine pixels let the
    full-value schema decide the label outright."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        positive = i % 2 == 0
        ringed = rng.random() < (0.7 if positive else 0.3)
        atoms, decor, handles = _skeleton(rng, ringed)
        if positive:
            order = [int(j) for j in rng.permutation(len(handles))]
            want = 3 if (len(handles) > 2 and rng.random() < 0.25) else 2
            _swap_to_chloro(atoms, decor,
                            [handles[j] for j in order[:want]])
        rows.append((_assemble(atoms, decor, ringed),
                     1.0 if positive else 0.0))
    order = rng.permutation(len(rows))
    return [rows[i] for i in order]


_CHARGE_SPECIALS = [
    "C", "CCO", "OCCO", "c1ccccc1", "C1CCCCC1",
    "[NH4+]", "C[NH3+]", "CC[NH3+]", "CC(=O)[O-]", "[O-]CC",
]


def charge_corpus(n=100, seed=0):
    """SMILES list for charge-model checks: family mix plus hand-picked
    symmetric molecules and ions (formal-charge conservation cases)."""
    rng = np.random.default_rng(seed)
    out = list(_CHARGE_SPECIALS)
    while len(out) < n:
        family = _FAMILIES[int(rng.integers(len(_FAMILIES)))]
        out.append(family(rng))
    return out[:n]


def write_csv(rows, path, task="label"):
    """Write (smiles, label) rows in the loader's table format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["smiles", task])
        for smiles, label in rows:
            writer.writerow([smiles, repr(float(label))])
    return path
