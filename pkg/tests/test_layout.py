"""Coordinate generation and rotation tests."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chemimg.layout import (
    BOND_LENGTH,
    LayoutOverlap,
    MIN_NONBONDED_DIST,
    center_and_rotate,
    generate_coords,
)
from chemimg.molgraph import molecule_from_smiles


def bonded_keys(mol):
    return {b.key() for b in mol.bonds}


def all_bond_lengths(mol, coords):
    return [float(np.hypot(*(coords[b.a] - coords[b.b]))) for b in mol.bonds]


def min_nonbonded(mol, coords):
    keys = bonded_keys(mol)
    n = len(coords)
    dists = [float(np.hypot(*(coords[i] - coords[j])))
             for i in range(n) for j in range(i + 1, n)
             if (i, j) not in keys]
    return min(dists) if dists else math.inf


class TestBasicShapes:
    def test_single_atom_at_origin(self):
        coords = generate_coords(molecule_from_smiles("C"))
        assert coords.shape == (1, 2)
        np.testing.assert_allclose(coords[0], [0.0, 0.0])

    def test_propane_zigzag(self):
        mol = molecule_from_smiles("CCC")
        coords = generate_coords(mol)
        lengths = all_bond_lengths(mol, coords)
        np.testing.assert_allclose(lengths, [BOND_LENGTH] * 2, atol=1e-6)
        v1 = coords[0] - coords[1]
        v2 = coords[2] - coords[1]
        cosang = np.dot(v1, v2) / (np.linalg.norm(v1) * np.linalg.norm(v2))
        angle = math.degrees(math.acos(cosang))
        assert angle == pytest.approx(120.0, abs=1e-6)

    def test_benzene_regular_hexagon(self):
        mol = molecule_from_smiles("c1ccccc1")
        coords = generate_coords(mol)
        center = coords.mean(axis=0)
        radii = np.hypot(*(coords - center).T)
        # edge 1.5 implies circumradius 1.5 for a hexagon
        np.testing.assert_allclose(radii, BOND_LENGTH, atol=1e-6)
        np.testing.assert_allclose(
            all_bond_lengths(mol, coords), [BOND_LENGTH] * 6, atol=1e-6)

    @pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 8])
    def test_ring_regularity(self, n):
        smi = "C1" + "C" * (n - 1) + "1"
        mol = molecule_from_smiles(smi)
        coords = generate_coords(mol)
        center = coords.mean(axis=0)
        radii = np.hypot(*(coords - center).T)
        expected = BOND_LENGTH / (2.0 * math.sin(math.pi / n))
        np.testing.assert_allclose(radii, expected, atol=1e-6)

    def test_long_chain_exact_bonds(self):
        mol = molecule_from_smiles("C" * 12)
        coords = generate_coords(mol)
        np.testing.assert_allclose(
            all_bond_lengths(mol, coords), [BOND_LENGTH] * 11, atol=1e-6)
        assert min_nonbonded(mol, coords) >= MIN_NONBONDED_DIST

    def test_fused_rings_share_edge(self):
        mol = molecule_from_smiles("c1ccc2ccccc2c1")
        coords = generate_coords(mol)
        lengths = all_bond_lengths(mol, coords)
        assert all(1.2 <= l <= 1.8 for l in lengths)
        # the junction bond is shared between both hexagons exactly
        assert min(lengths) == pytest.approx(BOND_LENGTH, abs=1e-6)
        assert min_nonbonded(mol, coords) >= MIN_NONBONDED_DIST

    def test_fragments_tiled_with_gap(self):
        mol = molecule_from_smiles("CC.O")
        coords = generate_coords(mol)
        gap = coords[2, 0] - max(coords[0, 0], coords[1, 0])
        assert gap >= 3.0 - 1e-9

    def test_substituents_fill_gaps(self):
        mol = molecule_from_smiles("C(C)(C)(C)C")
        coords = generate_coords(mol)
        angles = sorted(
            math.degrees(math.atan2(*(coords[i] - coords[0])[::-1])) % 360
            for i in range(1, 5))
        diffs = [angles[(k + 1) % 4] - angles[k] for k in range(3)]
        np.testing.assert_allclose(diffs, 90.0, atol=1e-6)


class TestRobustness:
    @pytest.mark.parametrize("smi", [
        "CC(C)CC1CCCCC1",
        "c1ccc2ccccc2c1",
        "C1CCCCC1C1CCCC1",
        "CC1(C)CCC1",
        "C1CC12CC2",
        "OCC(O)C(O)C(O)C(O)CO",
        "c1ccccc1.c1ccccc1.CCO",
        "N#CCC#N",
        "CC(=O)Oc1ccccc1C(=O)O",
    ])
    def test_no_collisions(self, smi):
        mol = molecule_from_smiles(smi)
        coords = generate_coords(mol)
        assert min_nonbonded(mol, coords) >= MIN_NONBONDED_DIST
        for l in all_bond_lengths(mol, coords):
            assert 1.2 <= l <= 1.8

    def test_deterministic(self):
        mol = molecule_from_smiles("CC(=O)Oc1ccccc1C(=O)O")
        a = generate_coords(mol)
        b = generate_coords(mol)
        assert np.array_equal(a, b)

    def test_overlap_raises(self):
        # twelve branches force 30 degree spacing: first-shell neighbors
        # land 2*1.5*sin(15deg) = 0.78 A apart, below the 0.9 A floor
        smi = "C(" + ")(".join(["C"] * 12) + ")"
        mol = molecule_from_smiles(smi)
        with pytest.raises(LayoutOverlap):
            generate_coords(mol)


class TestCenterAndRotate:
    def test_identity_centers(self):
        mol = molecule_from_smiles("CCO")
        coords = generate_coords(mol)
        out = center_and_rotate(coords, 0.0)
        bbox_center = (out.min(axis=0) + out.max(axis=0)) / 2.0
        np.testing.assert_allclose(bbox_center, 0.0, atol=1e-12)
        # shape identical up to translation
        np.testing.assert_allclose(
            out - out[0], coords - coords[0], atol=1e-12)

    def test_rotation_preserves_bond(self):
        mol = molecule_from_smiles("CC")
        coords = generate_coords(mol)
        out = center_and_rotate(coords, 90.0)
        bond = out[1] - out[0]
        assert abs(bond[0]) < 1e-9
        assert abs(bond[1]) == pytest.approx(BOND_LENGTH, abs=1e-9)

    def test_hexagon_sixty_degree_symmetry(self):
        coords = generate_coords(molecule_from_smiles("c1ccccc1"))
        base = center_and_rotate(coords, 0.0)
        rot = center_and_rotate(coords, 60.0)
        for p in rot:
            assert np.hypot(*(base - p).T).min() < 1e-9

    @given(st.floats(min_value=-360.0, max_value=360.0,
                     allow_nan=False, allow_subnormal=False))
    def test_isometry(self, angle):
        coords = generate_coords(molecule_from_smiles("CC(C)CO"))
        out = center_and_rotate(coords, angle)
        before = np.hypot(*(coords[:, None] - coords[None, :]).transpose(2, 0, 1))
        after = np.hypot(*(out[:, None] - out[None, :]).transpose(2, 0, 1))
        np.testing.assert_allclose(after, before, atol=1e-9)

    def test_empty_input(self):
        out = center_and_rotate(np.zeros((0, 2)), 45.0)
        assert out.shape == (0, 2)
