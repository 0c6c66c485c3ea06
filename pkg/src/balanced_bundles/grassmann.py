"""Maps from CP^1 into the Grassmannian G(r, N).

A map is presented by an ``N x r`` frame ``S(x)`` whose column span is the
image point; the class in G(r, N) is gauge invariant, and so is the
orthogonal projector ``P = S (S^* S)^{-1} S^*`` that we use as its canonical
encoding.  For the Kodaira map of a basis ``s``, the pullback of the quotient
metric satisfies ``h_s(s_j, s_k)(x) = P(x)[j, k]``; in the local frame it is
``(S^* S)^{-1}``.

Form densities are always with respect to ``dx^dy`` in the affine chart
``z = z1/z0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .bundles import Basis, eq8_basis, section_matrices
from .errors import FiniteDifferenceError, ParseError, SingularPointError
from .geometry import ChartPoint, ddbar_coefficient
from .mapexpr import compile_matrix

EXPLICIT_MAP_SCHEMA = "balanced-bundles/explicit-map/v1"

RANK_RTOL = 1e-10

# Scalar turning -(i/2) tr(P (dP^dbarP - dbarP^dP)) into (i/2) ddbar log det(S^*S).
# Frozen from calibrate_projector_form(); tests re-derive it.
PROJECTOR_FORM_PREFACTOR = -1.0

_S3 = math.sqrt(3.0)

# The non-rigid companion of the eq8 map, entries verbatim.
FTILDE_ENTRIES = [
    ["z0^2", "z0*conj(z1)*(sqrt(3)-1)/2"],
    ["-z0*z1*(sqrt(3)-1)/2", "z0*conj(z0) + z1*conj(z1)*sqrt(3)/2"],
    ["-z0*z1*(sqrt(3)+1)/2", "-z1*conj(z1)/2"],
    ["z1^2", "conj(z0)*z1*(1-sqrt(3))/2"],
]


def ftilde_frame(z0, z1) -> np.ndarray:
    z0 = np.asarray(z0, dtype=complex)
    z1 = np.asarray(z1, dtype=complex)
    a0 = np.abs(z0) ** 2
    a1 = np.abs(z1) ** 2
    S = np.empty(np.broadcast(z0, z1).shape + (4, 2), dtype=complex)
    S[..., 0, 0] = z0**2
    S[..., 0, 1] = z0 * np.conj(z1) * (_S3 - 1) / 2
    S[..., 1, 0] = -z0 * z1 * (_S3 - 1) / 2
    S[..., 1, 1] = a0 + 0.5 * a1 * _S3
    S[..., 2, 0] = -z0 * z1 * (_S3 + 1) / 2
    S[..., 2, 1] = -0.5 * a1
    S[..., 3, 0] = z1**2
    S[..., 3, 1] = np.conj(z0) * z1 * (1 - _S3) / 2
    return S


@dataclass(frozen=True, eq=False)
class HolomorphicBasis:
    basis: Basis

    def __call__(self, z0, z1) -> np.ndarray:
        return section_matrices(self.basis, z0, z1)


@dataclass(frozen=True, eq=False)
class ExplicitMatrix:
    frame: Callable[[np.ndarray, np.ndarray], np.ndarray]
    entries: list[list[str]] | None = None

    def __call__(self, z0, z1) -> np.ndarray:
        return self.frame(z0, z1)


@dataclass(frozen=True, eq=False)
class GrassMap:
    N: int
    r: int
    representative: HolomorphicBasis | ExplicitMatrix
    name: str = field(default="")

    @classmethod
    def from_basis(cls, basis: Basis, name: str = "") -> "GrassMap":
        return cls(basis.N, basis.rank, HolomorphicBasis(basis), name)

    @classmethod
    def from_entries(cls, entries: list[list[str]], name: str = "") -> "GrassMap":
        frame = compile_matrix(entries)
        return cls(len(entries), len(entries[0]), ExplicitMatrix(frame, entries), name)

    @property
    def basis(self) -> Basis | None:
        rep = self.representative
        return rep.basis if isinstance(rep, HolomorphicBasis) else None

    def frames(self, z0, z1) -> np.ndarray:
        S = np.asarray(self.representative(z0, z1))
        if S.shape[-2:] != (self.N, self.r):
            raise ParseError(f"representative returned shape {S.shape[-2:]}, expected {(self.N, self.r)}")
        return S

    def rotated(self, U: np.ndarray, name: str = "") -> "GrassMap":
        """The map ``x -> U . f(x)`` for an ``N x N`` matrix ``U``."""
        U = np.asarray(U, dtype=complex)
        if self.basis is not None:
            return GrassMap.from_basis(self.basis.transformed(U), name)
        rep = self.representative
        return GrassMap(self.N, self.r, ExplicitMatrix(lambda z0, z1: U @ rep(z0, z1)), name)

    def to_dict(self) -> dict:
        if self.basis is not None:
            return self.basis.to_dict()
        if self.representative.entries is None:
            raise ParseError("this explicit map has no textual entry table to serialize")
        return {"schema": EXPLICIT_MAP_SCHEMA, "N": self.N, "r": self.r,
                "entries": self.representative.entries}


def load_map(path, name: str = "") -> GrassMap:
    """Read a map file: either a basis record or an explicit entry table."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from None
    schema = data.get("schema")
    if schema == EXPLICIT_MAP_SCHEMA:
        gm = GrassMap.from_entries(data.get("entries"), name or str(path))
        if (gm.N, gm.r) != (data.get("N"), data.get("r")):
            raise ParseError(f"{path}: declared N, r = {data.get('N')}, {data.get('r')} "
                             f"but entry table is {gm.N} x {gm.r}")
        return gm
    return GrassMap.from_basis(Basis.from_dict(data), name or str(path))


def eq8_map() -> GrassMap:
    return GrassMap.from_basis(eq8_basis(), "eq8")


def ftilde_map() -> GrassMap:
    return GrassMap(4, 2, ExplicitMatrix(ftilde_frame, FTILDE_ENTRIES), "ftilde")


def projectors(gmap: GrassMap, z0, z1) -> np.ndarray:
    """Batch projectors ``(..., N, N)``; raises on rank-deficient points."""
    S = gmap.frames(z0, z1)
    U, sv, _ = np.linalg.svd(S, full_matrices=False)
    bad = ~(sv[..., -1] > RANK_RTOL * sv[..., 0])
    if np.any(bad):
        idx = np.unravel_index(int(np.argmax(bad)), bad.shape)
        p0 = np.broadcast_to(np.asarray(z0, dtype=complex), bad.shape)[idx]
        p1 = np.broadcast_to(np.asarray(z1, dtype=complex), bad.shape)[idx]
        raise SingularPointError(ChartPoint(p0, p1))
    return U @ np.conj(np.swapaxes(U, -1, -2))


def projector(gmap: GrassMap, x: ChartPoint) -> np.ndarray:
    return projectors(gmap, x.z0, x.z1)


def _chart_frame(basis: Basis, z: complex) -> np.ndarray:
    return section_matrices(basis, 1.0, z)


def _gram_factor(basis: Basis, z: complex) -> np.ndarray:
    S = _chart_frame(basis, z)
    try:
        return np.linalg.cholesky(np.conj(S.T) @ S)
    except np.linalg.LinAlgError:
        raise SingularPointError(ChartPoint(1.0, z), f"S^*S is singular at z={z}") from None


def pullback_metric(basis: Basis, z: complex) -> np.ndarray:
    """Frame matrix ``(S^* S)^{-1}`` of the pullback metric at chart point ``z``."""
    L = _gram_factor(basis, z)
    Linv = np.linalg.inv(L)
    return np.conj(Linv.T) @ Linv


def log_det_gram(basis: Basis, z: complex) -> float:
    """``log det(S^* S)`` via Cholesky."""
    L = _gram_factor(basis, z)
    return float(2.0 * np.sum(np.log(np.abs(np.diag(L)))))


@dataclass(frozen=True)
class FormField:
    """A real (1,1)-form on the affine chart, as a density against ``dx^dy``."""

    coefficient: Callable[[complex], float]

    def __call__(self, z: complex) -> float:
        value = float(self.coefficient(z))
        if not math.isfinite(value):
            raise FiniteDifferenceError(f"form coefficient is not finite at z={z}")
        return value


def pullback_form_holo(basis: Basis, step: float = 1e-3, richardson: int = 1) -> FormField:
    """Pullback of the Grassmannian Kahler form, ``(i/2) ddbar log det(S^* S)``.

    This is also the curvature form of the pullback metric,
    ``-(i/2) ddbar log det (S^* S)^{-1}``; :func:`ricci_form` computes it along
    that route.
    """
    return FormField(lambda z: ddbar_coefficient(lambda w: log_det_gram(basis, w), z, step, richardson))


def ricci_form(basis: Basis, step: float = 1e-3, richardson: int = 1) -> FormField:
    """``-(i/2) ddbar log det h`` with ``h`` from :func:`pullback_metric`."""

    def log_det_h(w):
        sign, logdet = np.linalg.slogdet(pullback_metric(basis, w))
        return logdet

    return FormField(lambda z: -ddbar_coefficient(log_det_h, z, step, richardson))


def _projector_at(gmap: GrassMap, z: complex, swapped: bool) -> np.ndarray:
    return projectors(gmap, z, 1.0) if swapped else projectors(gmap, 1.0, z)


def projector_derivatives(
    gmap: GrassMap, z: complex, step: float = 1e-3, swapped: bool = False
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(P, dP/dz, dP/dzbar)`` by Richardson-extrapolated central differences.

    With ``swapped`` the chart coordinate is ``z0/z1`` instead of ``z1/z0``.
    """

    def central(h):
        Px = (_projector_at(gmap, z + h, swapped) - _projector_at(gmap, z - h, swapped)) / (2 * h)
        Py = (_projector_at(gmap, z + 1j * h, swapped) - _projector_at(gmap, z - 1j * h, swapped)) / (2 * h)
        return Px, Py

    Px1, Py1 = central(step)
    Px2, Py2 = central(step / 2)
    Px = (4 * Px2 - Px1) / 3
    Py = (4 * Py2 - Py1) / 3
    P = _projector_at(gmap, z, swapped)
    if not (np.all(np.isfinite(Px)) and np.all(np.isfinite(Py))):
        raise FiniteDifferenceError(f"non-finite projector derivative at z={z}")
    return P, (Px - 1j * Py) / 2, (Px + 1j * Py) / 2


def projector_form_candidate(gmap: GrassMap, z: complex, step: float = 1e-3) -> float:
    """Density of ``-(i/2) tr(P (dP^dbarP - dbarP^dP))`` before calibration."""
    P, Pz, Pzb = projector_derivatives(gmap, z, step)
    # dP^dbarP - dbarP^dP = (Pz Pzb + Pzb Pz) dz^dzbar and dz^dzbar = -2i dx^dy
    t = np.trace(P @ (Pz @ Pzb + Pzb @ Pz))
    return float((-0.5j * -2j * t).real)


def calibrate_projector_form(points: Sequence[complex] | None = None) -> float:
    """Fit the scalar relating the projector expression to the log-det route.

    The fit uses the eq8 map; the result must be one of +-1, +-1/2.
    """
    if points is None:
        points = [0.35 * k * np.exp(0.7j * k) for k in range(10)]
    basis = eq8_basis()
    gmap = GrassMap.from_basis(basis)
    holo = pullback_form_holo(basis)
    ref = np.array([holo(z) for z in points])
    cand = np.array([projector_form_candidate(gmap, z) for z in points])
    fitted = float(ref @ cand / (cand @ cand))
    nearest = min((1.0, -1.0, 0.5, -0.5), key=lambda c: abs(c - fitted))
    if abs(fitted - nearest) > 1e-6:
        raise AssertionError(f"projector form prefactor {fitted!r} is not +-1 or +-1/2")
    return fitted


def pullback_form_projector(gmap: GrassMap, step: float = 1e-3) -> FormField:
    """Gauge-invariant pullback of the Grassmannian Kahler form.

    Uses only the projector field, so it applies to non-holomorphic frames of
    holomorphic maps.
    """
    return FormField(lambda z: PROJECTOR_FORM_PREFACTOR * projector_form_candidate(gmap, z, step))


def holomorphy_defect(gmap: GrassMap, x: ChartPoint, step: float = 1e-3) -> float:
    """``||(I - P) dP/dzbar P||_F``; vanishes iff the image moves holomorphically."""
    swapped = abs(x.z0) < abs(x.z1)
    z = x.z0 / x.z1 if swapped else x.z1 / x.z0
    P, _, Pzb = projector_derivatives(gmap, z, step, swapped)
    Q = np.eye(gmap.N) - P
    return float(np.linalg.norm(Q @ Pzb @ P))


def grass_rank_check(gmap: GrassMap, sample: Sequence[ChartPoint]) -> bool:
    z0 = np.array([x.z0 for x in sample])
    z1 = np.array([x.z1 for x in sample])
    sv = np.linalg.svd(gmap.frames(z0, z1), compute_uv=False)
    return bool(np.all(sv[:, -1] > RANK_RTOL * sv[:, 0]))
