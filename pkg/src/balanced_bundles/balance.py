"""L^2 Gram matrices, the balanced condition and Gram-whitening.

The L^2 product of two sections with respect to the pullback metric of a
basis ``s`` is the normalized integral of ``h_s(t_j, t_k)``.  When ``t = s``
the integrand is the projector entry ``P(x)[j, k]``, which makes the trace
of the Gram matrix equal to the rank.  A basis is balanced when its Gram
matrix is ``(r/N) I``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bundles import Basis, BundleSpec, section_matrices
from .errors import InvalidBasisError, PreconditionError, SingularGramError, SingularPointError
from .geometry import ChartPoint, QuadratureScheme, build_quadrature, integrate_values
from .grassmann import GrassMap, projectors, pullback_metric

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "balanced-bundles/balance-report/v1"
EIGEN_FLOOR = 1e-14
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: np.ndarray
    rank: int
    scheme_id: str

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @property
    def target(self) -> float:
        return self.rank / self.N

    def residual(self) -> float:
        """``||G - (r/N) I||_F``."""
        return float(np.linalg.norm(self.entries - self.target * np.eye(self.N)))


def default_scheme(spec: BundleSpec) -> QuadratureScheme:
    """A product rule large enough for every monomial pairing of the spec."""
    k = max(spec.degrees)
    return build_quadrature(max(16, 2 * k + 2), max(16, 4 * k + 4))


def _node_projectors(gmap: GrassMap, scheme: QuadratureScheme) -> np.ndarray:
    try:
        return projectors(gmap, scheme.z0, scheme.z1)
    except SingularPointError as exc:
        raise SingularPointError(exc.point, f"basepoint encountered at quadrature node {exc.point}") from None


def gram(basis: Basis, scheme: QuadratureScheme, metric: Basis | None = None) -> GramMatrix:
    """Gram matrix ``<s_j, s_k>`` with respect to the pullback metric of ``metric``.

    ``metric`` defaults to ``basis`` itself, which is the product that enters
    the balanced condition; passing another basis of the same bundle pairs
    the sections of ``basis`` against that basis's pullback metric.
    """
    if metric is None or metric is basis:
        G = integrate_values(_node_projectors(GrassMap.from_basis(basis), scheme), scheme)
    else:
        if metric.spec != basis.spec:
            raise PreconditionError(f"metric basis is on {metric.spec}, sections on {basis.spec}")
        # h_t(s_j, s_k) = (S H S^*)[j, k] with H = (T^* T)^{-1} from the metric basis
        T = section_matrices(metric, scheme.z0, scheme.z1)
        _node_projectors(GrassMap.from_basis(metric), scheme)
        S = section_matrices(basis, scheme.z0, scheme.z1)
        TT = np.conj(np.swapaxes(T, -1, -2)) @ T
        values = S @ np.linalg.solve(TT, np.conj(np.swapaxes(S, -1, -2)))
        G = integrate_values(values, scheme)
    G = 0.5 * (G + np.conj(G.T))
    return GramMatrix(G, basis.rank, scheme.identifier)


def map_gram(gmap: GrassMap, scheme: QuadratureScheme) -> GramMatrix:
    """Gram matrix of the section data behind any map: the average projector."""
    G = integrate_values(_node_projectors(gmap, scheme), scheme)
    return GramMatrix(0.5 * (G + np.conj(G.T)), gmap.r, scheme.identifier)


def is_balanced(G: GramMatrix, tol: float = DEFAULT_TOL) -> bool:
    return G.residual() <= tol


def moment_map(
    basis: Basis, scheme: QuadratureScheme, sample: list[ChartPoint]
) -> tuple[float, np.ndarray]:
    """Both components of the moment map at ``(s, h_s)``.

    Returns the worst deviation over ``sample`` of the frame matrix of
    ``sum_j h(., s_j) s_j`` from the identity, and the traceless part
    ``G - (tr G / N) I`` of the Gram matrix.
    """
    defect = 0.0
    for x in sample:
        S = section_matrices(basis, x.z0, x.z1)
        StS = np.conj(S.T) @ S
        H = np.linalg.inv(StS)
        # sum_j h(sigma_a, s_j) s_j = sum_b (H S^* S)[a, b] sigma_b in any local frame
        defect = max(defect, float(np.linalg.norm(H @ StS - np.eye(basis.rank))))
    G = gram(basis, scheme).entries
    traceless = G - (np.trace(G).real / basis.N) * np.eye(basis.N)
    return defect, traceless


def inverse_sqrt(G: np.ndarray) -> np.ndarray:
    """Inverse Hermitian square root by eigendecomposition."""
    evals, V = np.linalg.eigh(G)
    if evals[0] < EIGEN_FLOOR * max(evals[-1], 1.0):
        raise SingularGramError(f"Gram matrix is numerically singular (smallest eigenvalue {evals[0]:.3e})")
    evals = np.maximum(evals, EIGEN_FLOOR)
    return (V / np.sqrt(evals)) @ np.conj(V.T)


def t_step(basis: Basis, scheme: QuadratureScheme) -> Basis:
    """One whitening step ``s <- sqrt(r/N) G^{-1/2} s``.

    The constant ``sqrt(r/N)`` is a global scalar (invisible to the projector
    and the Gram matrix) chosen so that balanced bases are exact fixed points.
    """
    return _whiten(basis, gram(basis, scheme))


def _whiten(basis: Basis, G: GramMatrix) -> Basis:
    return basis.transformed(np.sqrt(G.target) * inverse_sqrt(G.entries))


@dataclass
class BalanceReport:
    iterations: int
    residual_history: list[float]
    converged: bool
    final_basis: Basis
    tolerance: float = DEFAULT_TOL
    scheme_id: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "degrees": list(self.final_basis.spec.degrees),
            "scheme": self.scheme_id,
            "tolerance": self.tolerance,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_residual": self.residual_history[-1],
            "residual_history": list(self.residual_history),
            "monotone": all(b <= a for a, b in zip(self.residual_history, self.residual_history[1:])),
            "final_basis": self.final_basis.to_dict(),
            **self.extra,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "BalanceReport":
        known = {"schema", "degrees", "scheme", "tolerance", "iterations", "converged",
                 "final_residual", "residual_history", "monotone", "final_basis"}
        return cls(
            iterations=data["iterations"],
            residual_history=list(data["residual_history"]),
            converged=data["converged"],
            final_basis=Basis.from_dict(data["final_basis"]),
            tolerance=data["tolerance"],
            scheme_id=data["scheme"],
            extra={k: v for k, v in data.items() if k not in known},
        )


def balance_iterate(
    start: Basis,
    scheme: QuadratureScheme,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> BalanceReport:
    """Repeat :func:`t_step` until the Gram residual is at most ``tol``.

    Non-convergence is reported through ``converged=False``, not raised.
    """
    basis = start
    G = gram(basis, scheme)
    history = [G.residual()]
    steps = 0
    stopped = None
    while history[-1] > tol and steps < max_iter:
        try:
            nxt = _whiten(basis, G)
            G_next = gram(nxt, scheme)
        except (SingularGramError, SingularPointError, InvalidBasisError) as exc:
            # the orbit degenerates when no balanced basis exists
            stopped = f"{type(exc).__name__}: {exc}"
            logger.info("balancing stopped after %d steps: %s", steps, stopped)
            break
        basis, G = nxt, G_next
        history.append(G.residual())
        steps += 1
        if history[-1] > history[-2]:
            logger.info("residual increased at step %d: %.6e -> %.6e", steps, history[-2], history[-1])
    extra = {"stopped": stopped} if stopped else {}
    return BalanceReport(steps, history, history[-1] <= tol, basis, tol, scheme.identifier, extra)


def direct_sum(b1: Basis, b2: Basis, scheme: QuadratureScheme | None = None,
               tol: float = DEFAULT_TOL) -> Basis:
    """Block-diagonal basis ``((s^1, 0), ..., (0, s^2), ...)`` of the direct sum.

    Both inputs must be balanced and have equal rank-to-dimension ratios.
    """
    q1 = Fraction(b1.rank, b1.N)
    q2 = Fraction(b2.rank, b2.N)
    if q1 != q2:
        raise PreconditionError(
            f"rank/dimension ratios differ: r1/N1 = {q1} but r2/N2 = {q2}; "
            "the direct sum of balanced bases is balanced only when they agree"
        )
    for label, b in (("first", b1), ("second", b2)):
        residual = gram(b, scheme or default_scheme(b.spec)).residual()
        if residual > tol:
            raise PreconditionError(f"{label} basis is not balanced (residual {residual:.3e} > {tol:g})")
    spec = BundleSpec(b1.spec.degrees + b2.spec.degrees)
    coeffs = np.zeros((spec.N, spec.N), dtype=complex)
    coeffs[: b1.N, : b1.N] = b1.coeffs
    coeffs[b1.N:, b1.N:] = b2.coeffs
    return Basis(spec, coeffs)


def normalized_metric(basis: Basis, zs, ref: complex = 0.0) -> np.ndarray:
    """Pullback metric at ``zs`` in the frame that is orthonormal at ``ref``.

    For a bundle whose summands share one degree, bundle automorphisms are
    constant ``GL(r)`` matrices, so this removes the automorphism gauge up to
    a unitary change of frame.  Mixed degrees are rejected.
    """
    if len(set(basis.spec.degrees)) != 1:
        raise PreconditionError(f"gauge normalization needs equal degrees, got {basis.spec}")
    W = inverse_sqrt(pullback_metric(basis, ref))
    return np.array([W @ pullback_metric(basis, z) @ W for z in zs])
