import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from balanced_bundles.balance import balance_iterate
from balanced_bundles.bundles import BundleSpec, apply_automorphism, eq8_basis, random_basis
from balanced_bundles.errors import DimensionMismatchError
from balanced_bundles.geometry import build_quadrature
from balanced_bundles.grassmann import GrassMap, eq8_map, ftilde_map, projectors
from balanced_bundles.rigidity import (
    EQUIVALENT,
    INCONCLUSIVE,
    NOT_EQUIVALENT,
    compare,
    find_unitary,
    overlap_invariant,
    overlap_table_gap,
    random_unitary,
    sample_points,
    validation_points,
)


def field(gmap, pts):
    return projectors(gmap, np.array([p.z0 for p in pts]), np.array([p.z1 for p in pts]))


def test_sample_points():
    pts = sample_points(30)
    assert len(pts) == 30
    assert all(min(abs(p.z0), abs(p.z1)) > 0.2 for p in pts)
    assert all(abs(abs(p.z0) ** 2 + abs(p.z1) ** 2 - 1) < 1e-12 for p in pts)
    assert [p.z1 for p in sample_points(30)] == [p.z1 for p in pts]
    v = validation_points(10)
    assert {p.z1 for p in v}.isdisjoint({p.z1 for p in pts})


def test_random_unitary():
    U = random_unitary(5, np.random.default_rng(0))
    assert np.allclose(U @ np.conj(U.T), np.eye(5))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_rotated_map_is_equivalent(seed):
    U = random_unitary(4, np.random.default_rng(seed))
    v = compare(eq8_map(), eq8_map().rotated(U))
    assert v.verdict == EQUIVALENT
    assert v.gap < 1e-12 and v.residual <= 1e-6
    pts = validation_points(20)
    moved = v.U @ field(eq8_map(), pts) @ np.conj(v.U.T)
    assert np.abs(moved - field(eq8_map().rotated(U), pts)).max() < 1e-6


def test_overlap_invariant_ignores_frame_and_unitary():
    b = random_basis(BundleSpec((1, 2)), 0)
    gmap = GrassMap.from_basis(b)
    U = random_unitary(b.N, np.random.default_rng(1))
    pts = sample_points(12)
    assert overlap_invariant(gmap, gmap.rotated(U), pts) < 1e-12
    W = np.array([[1, 2], [0, 1j]])
    gauged = GrassMap(gmap.N, gmap.r, lambda a, c: gmap.frames(a, c) @ W)
    assert overlap_invariant(gmap, gauged, pts) < 1e-12


def test_eq8_vs_ftilde():
    v = compare(eq8_map(), ftilde_map())
    assert v.verdict == NOT_EQUIVALENT
    assert v.gap == pytest.approx(0.7495, abs=1e-3)
    assert v.U is None and v.residual is None
    i, j = v.witness["pair"]
    assert abs(v.witness["overlap_A"] - v.witness["overlap_B"]) == pytest.approx(v.gap)
    assert i != j


def test_best_alignment_of_eq8_and_ftilde_fails():
    _, residual = find_unitary(eq8_map(), ftilde_map(), sample_points())
    assert residual > 0.5


def test_inconclusive_when_gap_threshold_too_loose():
    v = compare(eq8_map(), ftilde_map(), gap_threshold=10.0)
    assert v.verdict == INCONCLUSIVE and v.U is None and v.residual > 0.5


def test_symmetry():
    # eq8 is fixed by U(2) acting on the fibre factor, so the two witnesses need
    # not be inverse; their product must still preserve the projector field
    U0 = random_unitary(4, np.random.default_rng(3))
    A, B = eq8_map(), eq8_map().rotated(U0)
    ab, ba = compare(A, B), compare(B, A)
    assert ab.verdict == ba.verdict == EQUIVALENT
    pts = validation_points(20)
    PA = field(A, pts)
    loop = ba.U @ ab.U
    assert np.abs(loop @ PA @ np.conj(loop.T) - PA).max() < 1e-6
    assert compare(A, ftilde_map()).verdict == compare(ftilde_map(), A).verdict == NOT_EQUIVALENT


def test_balanced_maps_are_equivalent():
    spec = BundleSpec((1, 1))
    scheme = build_quadrature(16, 16)
    maps = [GrassMap.from_basis(balance_iterate(random_basis(spec, seed), scheme).final_basis) for seed in (0, 1)]
    assert compare(*maps).verdict == EQUIVALENT
    assert compare(maps[0], eq8_map()).verdict == EQUIVALENT


def test_automorphism_does_not_change_the_map():
    b = apply_automorphism(eq8_basis(), np.array([[1, 2], [3j, 1]]))
    assert overlap_invariant(eq8_map(), GrassMap.from_basis(b), sample_points(10)) < 1e-12


def test_dimension_mismatch():
    other = GrassMap.from_basis(random_basis(BundleSpec((1, 2)), 0))
    with pytest.raises(DimensionMismatchError):
        compare(eq8_map(), other)
    with pytest.raises(ValueError):
        overlap_table_gap(eq8_map(), eq8_map(), sample_points(1))


def test_verdict_serialization():
    v = compare(eq8_map(), ftilde_map())
    data = json.loads(v.dumps())
    assert data["schema"] == "balanced-bundles/verdict/v1"
    assert data["verdict"] == NOT_EQUIVALENT
    assert len(data["points"]) == 30
    eq = json.loads(compare(eq8_map(), eq8_map()).dumps())
    assert len(eq["U"]) == 4
