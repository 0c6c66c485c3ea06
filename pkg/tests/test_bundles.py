import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from balanced_bundles.bundles import (
    Basis,
    BundleSpec,
    apply_automorphism,
    eq8_basis,
    fubini_study_basis,
    monomial_basis,
    monomial_frame,
    random_basis,
    rank_check,
    section_matrix,
)
from balanced_bundles.errors import InvalidBasisError, ParseError
from balanced_bundles.geometry import ChartPoint
from balanced_bundles.rigidity import sample_points

degree_lists = st.lists(st.integers(0, 4), min_size=1, max_size=3)


def test_spec_counts():
    spec = BundleSpec((1, 3))
    assert (spec.rank, spec.N, spec.offsets) == (2, 6, (0, 2))
    assert spec.is_very_ample and not BundleSpec((0, 1)).is_very_ample
    assert BundleSpec.parse("2, 2") == BundleSpec((2, 2))
    assert str(spec) == "O(1) + O(3)"


@pytest.mark.parametrize("bad", [(), (-1,), (1, -2)])
def test_spec_rejects(bad):
    with pytest.raises(ValueError):
        BundleSpec(bad)


def test_spec_parse_error():
    with pytest.raises(ParseError):
        BundleSpec.parse("1,x")


def test_monomial_frame_layout():
    spec = BundleSpec((2, 1))
    M = monomial_frame(spec, 2.0, 3.0)
    expected = np.array([[4, 0], [6, 0], [9, 0], [0, 2], [0, 3]])
    assert np.array_equal(M, expected)


def test_eq8_section_matrix():
    S = section_matrix(eq8_basis(), ChartPoint(2.0, 5.0))
    assert np.array_equal(S, [[2, 0], [0, 2], [5, 0], [0, 5]])


@settings(max_examples=30, deadline=None)
@given(degrees=degree_lists, seed=st.integers(0, 10_000),
       c=st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_homogeneity(degrees, seed, c):
    spec = BundleSpec(tuple(degrees))
    b = random_basis(spec, seed)
    x = ChartPoint(0.8, 0.3 - 0.5j)
    scale = np.array([c**k for k in spec.degrees])
    assert np.allclose(section_matrix(b, x.rescaled(c)), section_matrix(b, x) * scale, rtol=1e-10, atol=1e-12)


def test_basis_validation():
    spec = BundleSpec((1,))
    with pytest.raises(InvalidBasisError):
        Basis(spec, np.eye(3))
    with pytest.raises(InvalidBasisError):
        Basis(spec, [[1, 2], [2, 4]])
    with pytest.raises(InvalidBasisError):
        Basis(spec, [[1, np.nan], [0, 1]])
    b = monomial_basis(spec)
    with pytest.raises(ValueError):
        b.coeffs[0, 0] = 2


@settings(max_examples=25, deadline=None)
@given(degrees=degree_lists, seed=st.integers(0, 10_000))
def test_serialization_round_trip(degrees, seed):
    b = random_basis(BundleSpec(tuple(degrees)), seed)
    back = Basis.loads(b.dumps())
    assert back.spec == b.spec
    assert np.array_equal(back.coeffs, b.coeffs)


def test_save_load(tmp_path):
    b = random_basis(BundleSpec((1, 2)), 3)
    b.save(tmp_path / "b.json")
    assert np.array_equal(Basis.load(tmp_path / "b.json").coeffs, b.coeffs)


@pytest.mark.parametrize("text", ["not json", json.dumps({"schema": "other"}),
                                  json.dumps({"schema": "balanced-bundles/basis/v1", "degrees": [1]})])
def test_loads_rejects(text):
    with pytest.raises(ParseError):
        Basis.loads(text)


def test_random_basis_deterministic():
    spec = BundleSpec((2, 2))
    a, b = random_basis(spec, 4), random_basis(spec, 4)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert not np.array_equal(a.coeffs, random_basis(spec, 5).coeffs)
    assert np.linalg.cond(a.coeffs) < 1e6


def test_rank_check():
    pts = sample_points(20) + [ChartPoint(1, 0), ChartPoint(0, 1)]
    assert rank_check(eq8_basis(), pts)
    assert rank_check(fubini_study_basis(BundleSpec((0, 3))), pts)
    with pytest.raises(ValueError):
        rank_check(eq8_basis(), [])


def test_fubini_study_weights():
    b = fubini_study_basis(BundleSpec((3,)))
    assert np.allclose(np.diag(b.coeffs).real, np.sqrt([1, 3, 3, 1]))


def test_transformed():
    b = random_basis(BundleSpec((1, 1)), 0)
    A = np.arange(16).reshape(4, 4) + np.eye(4)
    x = ChartPoint(1.0, 0.4j)
    assert np.allclose(section_matrix(b.transformed(A), x), A @ section_matrix(b, x))


def test_automorphism_frame_rule():
    b = random_basis(BundleSpec((2, 2)), 1)
    F = np.array([[1, 2j], [0.5, -1]])
    x = ChartPoint(0.3, 1 + 1j)
    assert np.allclose(section_matrix(apply_automorphism(b, F), x), section_matrix(b, x) @ F.T)


def test_automorphism_respects_degrees():
    b = random_basis(BundleSpec((1, 2)), 1)
    apply_automorphism(b, np.diag([2.0, 3.0]))
    with pytest.raises(ValueError):
        apply_automorphism(b, np.ones((2, 2)))
