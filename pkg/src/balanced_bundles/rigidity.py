"""Unitary equivalence of maps into G(r, N).

Two maps ``f_A, f_B`` are unitarily equivalent when ``P_B(x) = U P_A(x) U^*``
for one ``U`` in U(N) and every ``x``.  The pairwise overlaps
``tr(P(x) P(y))`` are unchanged by such a ``U`` and by any change of frame,
so a gap between the overlap tables of two maps certifies inequivalence.
Equivalence is certified constructively by exhibiting ``U``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError
from .geometry import ChartPoint
from .grassmann import GrassMap, projectors

VERDICT_SCHEMA = "balanced-bundles/verdict/v1"

EQUIVALENT = "Equivalent"
NOT_EQUIVALENT = "NotEquivalent"
INCONCLUSIVE = "Inconclusive"

DEFAULT_TOL = 1e-6
DEFAULT_GAP = 1e-5
N_STARTS = 8

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def sample_points(n: int = 30, cap: float = 0.9) -> list[ChartPoint]:
    """Deterministic spiral points on the sphere, kept away from both poles."""
    pts = []
    for i in range(n):
        t = cap * (1.0 - 2.0 * (i + 0.5) / n)
        phi = _GOLDEN_ANGLE * i
        pts.append(ChartPoint(math.sqrt((1 + t) / 2), math.sqrt((1 - t) / 2) * np.exp(1j * phi)))
    return pts


def validation_points(n: int = 50, seed: int = 20_250_101) -> list[ChartPoint]:
    """Fresh points from an independent random stream."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(-0.95, 0.95, n)
    phi = rng.uniform(0.0, 2 * np.pi, n)
    return [ChartPoint(math.sqrt((1 + a) / 2), math.sqrt((1 - a) / 2) * np.exp(1j * b)) for a, b in zip(t, phi)]


def _check_dims(a: GrassMap, b: GrassMap) -> None:
    if (a.N, a.r) != (b.N, b.r):
        raise DimensionMismatchError(f"maps land in G({a.r},{a.N}) and G({b.r},{b.N})")


def _field(gmap: GrassMap, points: Sequence[ChartPoint]) -> np.ndarray:
    return projectors(gmap, np.array([p.z0 for p in points]), np.array([p.z1 for p in points]))


def _overlaps(P: np.ndarray) -> np.ndarray:
    return np.einsum("iab,jba->ij", P, P).real


def overlap_table_gap(mapA: GrassMap, mapB: GrassMap, points: Sequence[ChartPoint]):
    """Largest overlap gap together with the pair attaining it."""
    _check_dims(mapA, mapB)
    if len(points) < 2:
        raise ValueError("overlap_invariant needs at least two points")
    TA = _overlaps(_field(mapA, points))
    TB = _overlaps(_field(mapB, points))
    diff = np.abs(TA - TB)
    i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
    return float(diff[i, j]), (int(i), int(j), float(TA[i, j]), float(TB[i, j]))


def overlap_invariant(mapA: GrassMap, mapB: GrassMap, points: Sequence[ChartPoint]) -> float:
    """``max |tr(P_A(x) P_A(y)) - tr(P_B(x) P_B(y))|`` over point pairs."""
    return overlap_table_gap(mapA, mapB, points)[0]


def random_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    Z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def _polar(M: np.ndarray) -> np.ndarray:
    X, _, Yh = np.linalg.svd(M)
    return X @ Yh


def _align(PA: np.ndarray, PB: np.ndarray, U: np.ndarray, max_iter: int, ftol: float):
    # maximizing sum tr(P_B U P_A U^*) (convex in U) by its linearization is monotone
    target = float(np.einsum("iab,iba->", PB, PB).real)
    prev = -np.inf
    for _ in range(max_iter):
        M = np.einsum("iab,bc,icd->ad", PB, U, PA)
        U = _polar(M)
        val = float(np.einsum("iab,bc,icd,ad->", PB, U, PA, np.conj(U)).real)
        if abs(val - prev) <= ftol * max(target, 1.0):
            break
        prev = val
    return U


def _residuals(PA: np.ndarray, PB: np.ndarray, U: np.ndarray) -> np.ndarray:
    moved = U @ PA @ np.conj(U.T)
    return np.linalg.norm(PB - moved, axis=(1, 2))


def find_unitary(
    mapA: GrassMap,
    mapB: GrassMap,
    points: Sequence[ChartPoint],
    n_starts: int = N_STARTS,
    seed: int = 0,
    max_iter: int = 5000,
) -> tuple[np.ndarray, float]:
    """Best ``U`` with ``U P_A(x) U^* ~ P_B(x)`` on the sample.

    Alternating polar updates from ``n_starts`` random unitary starts; the
    residual is the worst pointwise Frobenius defect of the best start (ties
    go to the lower start index).
    """
    _check_dims(mapA, mapB)
    PA = _field(mapA, points)
    PB = _field(mapB, points)
    rng = np.random.default_rng(seed)
    best_U, best_res = None, math.inf
    for _ in range(n_starts):
        U = _align(PA, PB, random_unitary(mapA.N, rng), max_iter, 1e-16)
        res = float(_residuals(PA, PB, U).max())
        if res < best_res:
            best_U, best_res = U, res
    return best_U, best_res


@dataclass
class EquivalenceVerdict:
    verdict: str
    gap: float
    residual: float | None = None
    U: np.ndarray | None = None
    witness: dict | None = None
    tol: float = DEFAULT_TOL
    gap_threshold: float = DEFAULT_GAP
    points: list[ChartPoint] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "schema": VERDICT_SCHEMA,
            "verdict": self.verdict,
            "overlap_gap": self.gap,
            "residual": self.residual,
            "tolerances": {"equivalent": self.tol, "not_equivalent_gap": self.gap_threshold},
            "points": [[[p.z0.real, p.z0.imag], [p.z1.real, p.z1.imag]] for p in self.points],
        }
        if self.U is not None:
            out["U"] = [[[float(c.real), float(c.imag)] for c in row] for row in self.U]
        if self.witness is not None:
            out["witness"] = self.witness
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def compare(
    mapA: GrassMap,
    mapB: GrassMap,
    points: Sequence[ChartPoint] | None = None,
    tol: float = DEFAULT_TOL,
    gap_threshold: float | None = None,
    seed: int = 0,
) -> EquivalenceVerdict:
    """Decide unitary equivalence.

    Inequivalence is only ever certified by an overlap gap; an alignment
    that merely fails to converge gives ``Inconclusive``.
    """
    points = list(points) if points is not None else sample_points()
    gap_threshold = 10 * tol if gap_threshold is None else gap_threshold
    gap, (i, j, a, b) = overlap_table_gap(mapA, mapB, points)
    common = dict(gap=gap, tol=tol, gap_threshold=gap_threshold, points=points)
    if gap > gap_threshold:
        witness = {
            "pair": [i, j],
            "x": [points[i].z0.real, points[i].z0.imag, points[i].z1.real, points[i].z1.imag],
            "y": [points[j].z0.real, points[j].z0.imag, points[j].z1.real, points[j].z1.imag],
            "overlap_A": a,
            "overlap_B": b,
        }
        return EquivalenceVerdict(NOT_EQUIVALENT, witness=witness, **common)
    U, residual = find_unitary(mapA, mapB, points, seed=seed)
    kind = EQUIVALENT if residual <= tol else INCONCLUSIVE
    return EquivalenceVerdict(kind, residual=residual, U=U if kind == EQUIVALENT else None, **common)
