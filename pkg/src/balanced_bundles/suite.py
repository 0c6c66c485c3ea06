"""Executable checks for every acceptance criterion.

Each check returns a :class:`CheckResult`; :func:`run_paper_suite` runs them
all.  The quadrature size and the f-tilde map are parameters so that a
degraded rule or a tampered transcription can be shown to fail.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .balance import (
    balance_iterate,
    direct_sum,
    gram,
    moment_map,
    normalized_metric,
)
from .bundles import (
    BundleSpec,
    eq8_basis,
    fubini_study_basis,
    monomial_basis,
    random_basis,
)
from .errors import PreconditionError
from .geometry import ChartPoint, FubiniStudyForm, build_quadrature, ddbar_coefficient
from .grassmann import (
    GrassMap,
    eq8_map,
    ftilde_map,
    grass_rank_check,
    holomorphy_defect,
    projectors,
    pullback_form_holo,
    pullback_form_projector,
)
from .rigidity import EQUIVALENT, NOT_EQUIVALENT, compare, random_unitary, sample_points


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def probe_points(n: int = 20) -> list[complex]:
    """Deterministic affine points with ``|z| < 2``."""
    return [0.1 * k * np.exp(1.3j * k) for k in range(n)]


def fs_density(z, lam: float = 1.0):
    return FubiniStudyForm(lam).density(z)


def beta_moment(a: int, b: int) -> Fraction:
    """Normalized FS integral of ``|z0|^{2a} |z1|^{2b} / |z|^{2(a+b)}``."""
    return Fraction(math.factorial(a) * math.factorial(b), math.factorial(a + b + 1))


def check_quadrature_oracle(n_polar: int = 16, n_azimuthal: int = 16) -> CheckResult:
    scheme = build_quadrature(n_polar, n_azimuthal)
    worst, where = 0.0, None
    for k in range(1, 5):
        spec = BundleSpec((k,))
        G = gram(monomial_basis(spec), scheme, metric=fubini_study_basis(spec)).entries
        oracle = np.diag([float(beta_moment(k - a, a)) for a in range(k + 1)])
        err = np.abs(G - oracle)
        if err.max() > worst:
            worst = float(err.max())
            where = (k,) + tuple(int(i) for i in np.unravel_index(int(np.argmax(err)), err.shape))
    ok = worst <= 1e-12
    detail = f"max |G - a!b!/(k+1)!| = {worst:.2e} over O(1)..O(4) on {scheme.identifier}"
    if not ok:
        detail += f"; worst entry O({where[0]})[{where[1]},{where[2]}] - quadrature too coarse for the oracle"
    return CheckResult("1 quadrature beta oracle", ok, detail)


def check_eq8_balanced(n_polar: int = 16, n_azimuthal: int = 16) -> CheckResult:
    grams = [gram(eq8_basis(), build_quadrature(n_polar, n_azimuthal, FubiniStudyForm(lam))).entries
             for lam in (0.5, 1.0, 2.0)]
    res = max(float(np.linalg.norm(G - 0.5 * np.eye(4))) for G in grams)
    spread = max(float(np.abs(G - grams[1]).max()) for G in grams)
    ok = res <= 1e-10 and spread <= 1e-15
    return CheckResult("2 eq8 balanced, lambda-invariant", ok,
                       f"||G - I/2|| = {res:.2e}, spread over lambda in (0.5,1,2) = {spread:.1e}")


def check_kahler_eq8() -> CheckResult:
    form = pullback_form_holo(eq8_basis())
    err = max(abs(form(z) - fs_density(z, 2.0)) for z in probe_points())
    return CheckResult("3 eq8 Kahler at lambda=2", err <= 1e-5, f"max |f*w_Gr - 2 w_FS| = {err:.2e} at 20 points")


def check_ftilde(gmap: GrassMap | None = None) -> CheckResult:
    gmap = gmap or ftilde_map()
    pts = [ChartPoint.from_affine(z) for z in probe_points()]
    rank_ok = grass_rank_check(gmap, pts + sample_points(50))
    rng = np.random.default_rng(11)
    rand = [ChartPoint.from_affine(complex(*rng.uniform(-1.5, 1.5, 2))) for _ in range(20)]
    holo = max(holomorphy_defect(gmap, x) for x in rand)
    form = pullback_form_projector(gmap)
    err = max(abs(form(z) - fs_density(z, 2.0)) for z in probe_points())
    ok = rank_ok and holo <= 1e-5 and err <= 1e-4
    return CheckResult("4 ftilde rank/holomorphy/pullback", ok,
                       f"rank 2: {rank_ok}, holomorphy defect {holo:.1e}, max |f~*w_Gr - 2 w_FS| = {err:.1e}")


def check_rigidity_failure(gmap: GrassMap | None = None) -> CheckResult:
    v = compare(eq8_map(), gmap or ftilde_map())
    ok = v.verdict == NOT_EQUIVALENT and v.gap > 1e-3
    return CheckResult("5 eq8 vs ftilde not unitarily equivalent", ok, f"verdict {v.verdict}, overlap gap {v.gap:.4f}")


def check_uniqueness(n_polar: int = 16, n_azimuthal: int = 16) -> CheckResult:
    spec = BundleSpec((1, 1))
    scheme = build_quadrature(n_polar, n_azimuthal)
    zs = probe_points()
    reports = [balance_iterate(random_basis(spec, seed), scheme) for seed in range(5)]
    converged = all(r.converged for r in reports)
    metrics = [normalized_metric(r.final_basis, zs) for r in reports]
    pairwise = max(float(np.abs(a - b).max()) for a, b in itertools.combinations(metrics, 2))
    target = np.array([np.eye(2) / (1 + abs(z) ** 2) for z in zs])
    to_target = max(float(np.abs(m - target).max()) for m in metrics)
    ok = converged and pairwise <= 1e-8 and to_target <= 1e-8
    iters = [r.iterations for r in reports]
    return CheckResult("6 uniqueness of the balanced metric on O(1)+O(1)", ok,
                       f"converged {converged} (iterations {iters}), pairwise {pairwise:.1e}, "
                       f"vs I/(1+|z|^2) {to_target:.1e}")


def check_direct_sum(n_polar: int = 16, n_azimuthal: int = 16) -> CheckResult:
    spec = BundleSpec((1,))
    scheme = build_quadrature(n_polar, n_azimuthal)
    # squared residuals of the summands add, so the inputs are balanced past the target
    b1 = balance_iterate(random_basis(spec, 0), scheme, tol=1e-12).final_basis
    b2 = balance_iterate(random_basis(spec, 1), scheme, tol=1e-12).final_basis
    s = direct_sum(b1, b2, scheme)
    res = gram(s, scheme).residual()
    v = compare(GrassMap.from_basis(s), eq8_map())
    ok = res <= 1e-10 and v.verdict == EQUIVALENT
    return CheckResult("7 direct sum of balanced O(1) bases", ok,
                       f"residual {res:.1e}, compare with eq8: {v.verdict} (residual {v.residual})")


def shipped_bases() -> dict:
    """Named bases with their expected balancedness."""
    one, two = BundleSpec((1,)), BundleSpec((2,))
    return {
        "eq8": (eq8_basis(), True),
        "fubini-study O(1)": (fubini_study_basis(one), True),
        "fubini-study O(2)": (fubini_study_basis(two), True),
        "fubini-study O(3)": (fubini_study_basis(BundleSpec((3,))), True),
        "fubini-study O(2)+O(2)": (fubini_study_basis(BundleSpec((2, 2))), True),
        "O(1) + O(1) direct sum": (direct_sum(fubini_study_basis(one), fubini_study_basis(one)), True),
        "monomial O(2)": (monomial_basis(two), False),
    }


def check_moment_map(n_polar: int = 16, n_azimuthal: int = 16) -> CheckResult:
    scheme = build_quadrature(n_polar, n_azimuthal)
    sample = sample_points(20)
    ok, parts = True, []
    for name, (basis, balanced) in shipped_bases().items():
        defect, traceless = moment_map(basis, scheme, sample)
        t = float(np.linalg.norm(traceless))
        good = defect <= 1e-10 and (t <= 1e-10 if balanced else t > 1e-2)
        ok &= good
        parts.append(f"{name}: {defect:.0e}/{t:.1e}")
    return CheckResult("8 moment map (defect/traceless)", ok, "; ".join(parts))


def check_ratio_precondition() -> CheckResult:
    try:
        direct_sum(fubini_study_basis(BundleSpec((1,))), fubini_study_basis(BundleSpec((3,))))
    except PreconditionError as exc:
        return CheckResult("9 ratio precondition", "1/2" in str(exc) and "1/4" in str(exc), str(exc))
    return CheckResult("9 ratio precondition", False, "direct_sum accepted O(1) + O(3)")


def _ddbar_order() -> float:
    u = lambda z: math.log1p(abs(z) ** 2)
    z = 0.3 + 0.2j
    exact = 1.0 / (1.0 + abs(z) ** 2) ** 2
    e1 = abs(ddbar_coefficient(u, z, 0.02, richardson=0) - exact)
    e2 = abs(ddbar_coefficient(u, z, 0.01, richardson=0) - exact)
    return e1 / e2


def check_invariants(n_polar: int = 16, n_azimuthal: int = 16) -> CheckResult:
    scheme = build_quadrature(n_polar, n_azimuthal)
    rng = np.random.default_rng(5)
    specs = [BundleSpec(d) for d in ((1,), (2,), (3,), (1, 1), (2, 2))]
    trace_err = 0.0
    for i in range(50):
        b = random_basis(specs[i % len(specs)], 1000 + i)
        trace_err = max(trace_err, abs(np.trace(gram(b, scheme).entries).real - b.rank))
    pts = sample_points(20)
    z0 = np.array([p.z0 for p in pts])
    z1 = np.array([p.z1 for p in pts])
    idem = gauge = equiv = 0.0
    for seed in range(5):
        b = random_basis(BundleSpec((1, 2)), seed)
        gmap = GrassMap.from_basis(b)
        P = projectors(gmap, z0, z1)
        idem = max(idem, float(np.abs(P @ P - P).max()), float(np.abs(np.trace(P, axis1=1, axis2=2) - 2).max()))
        W = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        gauged = GrassMap(gmap.N, gmap.r, lambda a, c, g=gmap, W=W: g.frames(a, c) @ W)
        gauge = max(gauge, float(np.abs(projectors(gauged, z0, z1) - P).max()))
        U = random_unitary(b.N, rng)
        PU = projectors(gmap.rotated(U), z0, z1)
        equiv = max(equiv, float(np.abs(PU - U @ P @ np.conj(U.T)).max()))
    order = _ddbar_order()
    ok = trace_err <= 1e-10 and idem <= 1e-10 and gauge <= 1e-12 and equiv <= 1e-12 and 3.5 <= order <= 4.5
    return CheckResult("10 invariants", ok,
                       f"trace law {trace_err:.1e}, idempotence {idem:.1e}, gauge {gauge:.1e}, "
                       f"unitary {equiv:.1e}, ddbar halving ratio {order:.2f}")


def run_paper_suite(
    n_polar: int = 16, n_azimuthal: int = 16, ftilde: GrassMap | None = None
) -> list[CheckResult]:
    q = dict(n_polar=n_polar, n_azimuthal=n_azimuthal)
    checks: list[tuple[str, Callable[[], CheckResult]]] = [
        ("1 quadrature beta oracle", lambda: check_quadrature_oracle(**q)),
        ("2 eq8 balanced, lambda-invariant", lambda: check_eq8_balanced(**q)),
        ("3 eq8 Kahler at lambda=2", check_kahler_eq8),
        ("4 ftilde rank/holomorphy/pullback", lambda: check_ftilde(ftilde)),
        ("5 eq8 vs ftilde not unitarily equivalent", lambda: check_rigidity_failure(ftilde)),
        ("6 uniqueness of the balanced metric on O(1)+O(1)", lambda: check_uniqueness(**q)),
        ("7 direct sum of balanced O(1) bases", lambda: check_direct_sum(**q)),
        ("8 moment map (defect/traceless)", lambda: check_moment_map(**q)),
        ("9 ratio precondition", check_ratio_precondition),
        ("10 invariants", lambda: check_invariants(**q)),
    ]
    results = []
    for name, check in checks:
        try:
            results.append(check())
        except Exception as exc:  # a crashing check is a failing check
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    return results
