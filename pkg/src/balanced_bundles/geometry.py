"""The projective line with a scaled Fubini-Study form.

Conventions: the Fubini-Study form is ``(i/2) ddbar log(|z0|^2 + |z1|^2)``,
whose density in the affine chart ``z = z1/z0`` is ``1/(1+|z|^2)^2`` with
respect to ``dx^dy``.  The total volume is ``pi``; with the scale ``lam`` it is
``lam * pi``.  All quadrature weights are normalized by the volume, so
integrals are averages and do not depend on ``lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import FiniteDifferenceError, IntegrationError


@dataclass(frozen=True)
class ChartPoint:
    """A point ``[z0 : z1]`` of CP^1 in homogeneous coordinates."""

    z0: complex
    z1: complex

    def __post_init__(self):
        object.__setattr__(self, "z0", complex(self.z0))
        object.__setattr__(self, "z1", complex(self.z1))
        if self.z0 == 0 and self.z1 == 0:
            raise ValueError("(z0, z1) = (0, 0) is not a point of CP^1")

    @classmethod
    def from_affine(cls, z: complex) -> "ChartPoint":
        return cls(1.0, z)

    @property
    def z(self) -> complex:
        """Affine coordinate ``z1/z0``; infinite at the pole ``z0 = 0``."""
        if self.z0 == 0:
            return complex(math.inf, 0.0)
        return self.z1 / self.z0

    def rescaled(self, c: complex) -> "ChartPoint":
        return ChartPoint(c * self.z0, c * self.z1)

    def normalized(self) -> "ChartPoint":
        n = math.hypot(abs(self.z0), abs(self.z1))
        return ChartPoint(self.z0 / n, self.z1 / n)

    def __str__(self) -> str:
        return f"[{self.z0:.6g} : {self.z1:.6g}]"


@dataclass(frozen=True)
class FubiniStudyForm:
    """``lam * omega_FS`` on CP^1."""

    lam: float = 1.0

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"scale lam must be a positive real, got {self.lam!r}")

    @property
    def volume(self) -> float:
        return self.lam * math.pi

    def density(self, z):
        """Chart density of the form with respect to ``dx^dy``."""
        return self.lam / (1.0 + np.abs(z) ** 2) ** 2


@dataclass(frozen=True, eq=False)
class QuadratureScheme:
    """Nodes and volume-normalized weights on CP^1.

    Nodes are stored as unit-norm homogeneous coordinates in two complex
    arrays so integrands can be evaluated in batch.
    """

    z0: np.ndarray
    z1: np.ndarray
    weights: np.ndarray
    n_polar: int
    n_azimuthal: int
    form: FubiniStudyForm = field(default_factory=FubiniStudyForm)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def nodes(self) -> list[ChartPoint]:
        return [ChartPoint(a, b) for a, b in zip(self.z0, self.z1)]

    @property
    def identifier(self) -> str:
        return f"gauss-legendre{self.n_polar}x{self.n_azimuthal}"


def build_quadrature(
    n_polar: int, n_azimuthal: int, form: FubiniStudyForm | None = None
) -> QuadratureScheme:
    """Product rule: Gauss-Legendre in ``cos(theta)`` times a uniform rule in ``phi``.

    Chart points are ``z = tan(theta/2) e^{i phi}``; in homogeneous form
    ``(cos(theta/2), sin(theta/2) e^{i phi})``.  The rule integrates
    ``|z0|^{2a} |z1|^{2b} / |z|^{2(a+b)}`` exactly when ``a + b <= n_polar - 1``;
    an integrand carrying a phase ``e^{i m phi}`` needs ``|m| < n_azimuthal``.
    """
    if n_polar < 2 or n_azimuthal < 4:
        raise ValueError(
            f"need n_polar >= 2 and n_azimuthal >= 4, got {n_polar} x {n_azimuthal}"
        )
    form = form or FubiniStudyForm()
    t, w = np.polynomial.legendre.leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_azimuthal) / n_azimuthal
    # omega_FS is the round sphere of radius 1/2: area element dt dphi / 4
    area = form.lam * 0.25 * np.outer(w, np.full(n_azimuthal, 2.0 * np.pi / n_azimuthal))
    c = np.sqrt((1.0 + t) / 2.0)
    s = np.sqrt((1.0 - t) / 2.0)
    z0 = np.repeat(c, n_azimuthal).astype(complex)
    z1 = (s[:, None] * np.exp(1j * phi)[None, :]).ravel()
    weights = area.ravel() / form.volume
    return QuadratureScheme(z0, z1, weights, n_polar, n_azimuthal, form)


def integrate(f: Callable[[ChartPoint], object], scheme: QuadratureScheme):
    """Normalized integral ``(1/V) * int f omega``, as a weighted node sum."""
    total = None
    for w, node in zip(scheme.weights, scheme.nodes):
        value = np.asarray(f(node))
        if not np.all(np.isfinite(value)):
            raise IntegrationError(f"integrand is not finite at node {node}")
        total = w * value if total is None else total + w * value
    return total[()] if total.ndim == 0 else total


def integrate_values(values: np.ndarray, scheme: QuadratureScheme) -> np.ndarray:
    """Batch form of :func:`integrate` for values already sampled at the nodes."""
    values = np.asarray(values)
    if values.shape[0] != len(scheme):
        raise ValueError("leading axis of values must match the number of nodes")
    bad = ~np.isfinite(values.reshape(len(scheme), -1)).all(axis=1)
    if bad.any():
        i = int(np.argmax(bad))
        raise IntegrationError(
            f"integrand is not finite at node {ChartPoint(scheme.z0[i], scheme.z1[i])}"
        )
    return np.tensordot(scheme.weights, values, axes=(0, 0))


def _laplacian(u, z: complex, h: float) -> float:
    samples = np.array([u(z + h), u(z - h), u(z + 1j * h), u(z - 1j * h), u(z)], dtype=float)
    if not np.all(np.isfinite(samples)):
        raise FiniteDifferenceError(f"non-finite sample in the stencil around z={z} (step {h})")
    return (samples[:4].sum() - 4.0 * samples[4]) / h**2


def ddbar_coefficient(
    u: Callable[[complex], float], z: complex, step: float = 1e-3, richardson: int = 1
) -> float:
    """Density of ``(i/2) ddbar u`` at ``z``, i.e. ``(u_xx + u_yy) / 4``.

    Five-point central Laplacian (second order in ``step``), optionally
    improved by ``richardson`` levels of step-halving extrapolation.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    table = [_laplacian(u, z, step / 2**k) / 4.0 for k in range(richardson + 1)]
    for level in range(1, richardson + 1):
        factor = 4.0**level
        table = [(factor * table[k + 1] - table[k]) / (factor - 1.0) for k in range(len(table) - 1)]
    return float(table[0])
