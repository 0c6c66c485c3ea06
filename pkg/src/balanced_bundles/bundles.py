"""Split bundles O(k_1) + ... + O(k_r) over CP^1 and their sections.

A section of O(k) is a homogeneous polynomial of degree k, stored by its
coefficients on the monomials ``z0^(k-a) z1^a`` for ``a = 0..k``.  A section
of the direct sum is one such block per summand, concatenated in summand
order, so a basis of global sections is an ``N x N`` coefficient matrix whose
row ``j`` is the section ``s_j``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidBasisError, ParseError
from .geometry import ChartPoint

BASIS_SCHEMA = "balanced-bundles/basis/v1"

# Reciprocal condition number below which coefficients are not a basis.
_RCOND_MIN = 1e-12


@dataclass(frozen=True)
class BundleSpec:
    degrees: tuple[int, ...]

    def __post_init__(self):
        degrees = tuple(int(k) for k in self.degrees)
        if not degrees:
            raise ValueError("a bundle needs at least one summand")
        if any(k < 0 for k in degrees):
            raise ValueError(f"degrees must be non-negative, got {degrees}")
        object.__setattr__(self, "degrees", degrees)

    @classmethod
    def parse(cls, text: str) -> "BundleSpec":
        try:
            return cls(tuple(int(part) for part in text.split(",") if part.strip()))
        except ValueError as exc:
            raise ParseError(f"bad degree list {text!r}: {exc}") from None

    @property
    def rank(self) -> int:
        return len(self.degrees)

    @property
    def N(self) -> int:
        return sum(k + 1 for k in self.degrees)

    @property
    def offsets(self) -> tuple[int, ...]:
        out, pos = [], 0
        for k in self.degrees:
            out.append(pos)
            pos += k + 1
        return tuple(out)

    @property
    def is_very_ample(self) -> bool:
        return all(k >= 1 for k in self.degrees)

    def __str__(self) -> str:
        return " + ".join(f"O({k})" for k in self.degrees)


@dataclass(frozen=True, eq=False)
class Basis:
    """An ordered basis ``(s_1, ..., s_N)`` of global sections."""

    spec: BundleSpec
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        N = self.spec.N
        if coeffs.shape != (N, N):
            raise InvalidBasisError(f"{self.spec} needs a {N}x{N} coefficient matrix, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise InvalidBasisError("coefficients must be finite")
        sv = np.linalg.svd(coeffs, compute_uv=False)
        if sv[0] == 0 or sv[-1] < _RCOND_MIN * sv[0]:
            raise InvalidBasisError(
                f"coefficient matrix is singular (rcond {sv[-1] / sv[0] if sv[0] else 0:.3g}); "
                "the sections are linearly dependent"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def N(self) -> int:
        return self.spec.N

    @property
    def rank(self) -> int:
        return self.spec.rank

    def transformed(self, A: np.ndarray) -> "Basis":
        """The basis ``A s``, i.e. new section ``j`` is ``sum_k A[j, k] s_k``."""
        return Basis(self.spec, np.asarray(A) @ self.coeffs)

    def to_dict(self) -> dict:
        return {
            "schema": BASIS_SCHEMA,
            "degrees": list(self.spec.degrees),
            "coeffs": [[[float(c.real), float(c.imag)] for c in row] for row in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Basis":
        if data.get("schema") != BASIS_SCHEMA:
            raise ParseError(f"expected schema {BASIS_SCHEMA!r}, got {data.get('schema')!r}")
        try:
            spec = BundleSpec(tuple(data["degrees"]))
            coeffs = np.array([[complex(re, im) for re, im in row] for row in data["coeffs"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed basis record: {exc}") from None
        return cls(spec, coeffs)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "Basis":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"basis file is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def load(cls, path) -> "Basis":
        return cls.loads(Path(path).read_text())


def monomial_frame(spec: BundleSpec, z0, z1) -> np.ndarray:
    """Block matrix ``M(x)`` with ``S(x) = coeffs @ M(x)``, shape ``(..., N, r)``."""
    z0 = np.asarray(z0, dtype=complex)
    z1 = np.asarray(z1, dtype=complex)
    shape = np.broadcast(z0, z1).shape
    M = np.zeros(shape + (spec.N, spec.rank), dtype=complex)
    for alpha, (k, off) in enumerate(zip(spec.degrees, spec.offsets)):
        for a in range(k + 1):
            M[..., off + a, alpha] = z0 ** (k - a) * z1**a
    return M


def section_matrices(basis: Basis, z0, z1) -> np.ndarray:
    """Batch evaluation of the section matrix, shape ``(..., N, r)``."""
    return basis.coeffs @ monomial_frame(basis.spec, z0, z1)


def section_matrix(basis: Basis, x: ChartPoint) -> np.ndarray:
    """``S(x)`` with ``S[j, alpha]`` the alpha-th component of ``s_j`` at ``x``."""
    return section_matrices(basis, x.z0, x.z1)


def rank_check(basis: Basis, sample: Sequence[ChartPoint]) -> bool:
    """True iff ``S(x)`` has full column rank ``r`` at every sample point."""
    if not sample:
        raise ValueError("rank_check needs a non-empty sample")
    z0 = np.array([x.z0 for x in sample])
    z1 = np.array([x.z1 for x in sample])
    sv = np.linalg.svd(section_matrices(basis, z0, z1), compute_uv=False)
    return bool(np.all(sv[:, -1] > 1e-10 * sv[:, 0]))


def random_basis(spec: BundleSpec, seed: int) -> Basis:
    """Standard complex Gaussian coefficients, redrawn until cond < 1e6."""
    rng = np.random.default_rng(seed)
    N = spec.N
    for _ in range(100):
        coeffs = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2)
        if np.linalg.cond(coeffs) < 1e6:
            return Basis(spec, coeffs)
    raise InvalidBasisError(f"no well-conditioned random basis for {spec} after 100 draws (seed {seed})")


def monomial_basis(spec: BundleSpec) -> Basis:
    return Basis(spec, np.eye(spec.N))


def fubini_study_basis(spec: BundleSpec) -> Basis:
    """Monomials weighted by ``sqrt(binom(k, a))``.

    Its pullback metric is the Fubini-Study metric on each summand, so the
    basis is balanced whenever all degrees are equal.
    """
    weights = np.concatenate(
        [[math.sqrt(math.comb(k, a)) for a in range(k + 1)] for k in spec.degrees]
    )
    return Basis(spec, np.diag(weights))


def eq8_basis() -> Basis:
    """Sections of O(1)+O(1) whose Kodaira map is ``[z0 I; z1 I]`` in G(2, 4).

    Rows are ``(z0, 0), (0, z0), (z1, 0), (0, z1)``.
    """
    coeffs = np.zeros((4, 4))
    coeffs[0, 0] = 1.0  # (z0, 0)
    coeffs[1, 2] = 1.0  # (0, z0)
    coeffs[2, 1] = 1.0  # (z1, 0)
    coeffs[3, 3] = 1.0  # (0, z1)
    return Basis(BundleSpec((1, 1)), coeffs)


def apply_automorphism(basis: Basis, F: np.ndarray) -> Basis:
    """Apply a constant bundle automorphism ``F`` (``r x r``) to every section.

    Only summands of equal degree may be mixed: ``F[a, b]`` must vanish when
    ``k_a != k_b``.  In the frame, ``S(x)`` becomes ``S(x) F^T``.
    """
    spec = basis.spec
    F = np.asarray(F, dtype=complex)
    if F.shape != (spec.rank, spec.rank):
        raise ValueError(f"automorphism must be {spec.rank}x{spec.rank}")
    for a, ka in enumerate(spec.degrees):
        for b, kb in enumerate(spec.degrees):
            if ka != kb and F[a, b] != 0:
                raise ValueError(f"constant map cannot mix O({kb}) into O({ka})")
    coeffs = np.zeros_like(basis.coeffs)
    for a, (ka, oa) in enumerate(zip(spec.degrees, spec.offsets)):
        for b, (kb, ob) in enumerate(zip(spec.degrees, spec.offsets)):
            if ka == kb:
                coeffs[:, oa:oa + ka + 1] += F[a, b] * basis.coeffs[:, ob:ob + kb + 1]
    return Basis(spec, coeffs)
