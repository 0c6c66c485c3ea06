"""Command-line front end.

Subcommands: ``balance``, ``verify``, ``compare`` and ``paper-suite``.
Every option can also come from a JSON config file (``--config``) whose
keys are the long option names with dashes replaced by underscores; flags
given on the command line win over the file.  Reports are JSON, written
to ``--output`` or stdout.

Exit statuses::

    0  ok
    1  paper-suite: at least one check failed
    2  usage error (bad flag or config field)
    3  data error (unreadable/singular basis, dimension mismatch, ...)
    4  balancing did not converge (the report is still written)
    5  compare: the maps were not shown to be equivalent
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .balance import (
    BalanceReport,
    balance_iterate,
    gram,
    map_gram,
    moment_map,
    normalized_metric,
)
from .bundles import Basis, BundleSpec, fubini_study_basis, monomial_basis, random_basis
from .errors import BalancedBundlesError, ParseError
from .geometry import ChartPoint, FubiniStudyForm, build_quadrature
from .grassmann import (
    PROJECTOR_FORM_PREFACTOR,
    GrassMap,
    eq8_map,
    ftilde_map,
    holomorphy_defect,
    load_map,
    pullback_form_holo,
    pullback_form_projector,
)
from .rigidity import EQUIVALENT, compare, random_unitary
from .suite import fs_density, probe_points, run_paper_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SUITE_FAILED = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NOT_CONVERGED = 4
EXIT_NOT_EQUIVALENT = 5

CONFIG_SCHEMA = "balanced-bundles/config/v1"
BATCH_SCHEMA = "balanced-bundles/balance-batch/v1"
VERIFY_SCHEMA = "balanced-bundles/verify-report/v1"

class UsageError(Exception):
    pass


@dataclass
class JobConfig:
    task: str
    degrees: BundleSpec | None = None
    basis: str = "random"
    basis_file: str | None = None
    example: str | None = None
    seeds: tuple[int, ...] = (0,)
    n_polar: int = 16
    n_azimuthal: int = 16
    tol: float = 1e-10
    max_iter: int = 500
    lam: float | None = None
    output: str | None = None

    @property
    def form(self) -> FubiniStudyForm:
        return FubiniStudyForm(1.0 if self.lam is None else self.lam)

    def scheme(self):
        return build_quadrature(self.n_polar, self.n_azimuthal, self.form)


def _parse_seeds(text) -> tuple[int, ...]:
    if isinstance(text, int):
        return (text,)
    if isinstance(text, list):
        return tuple(int(s) for s in text)
    m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", str(text))
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        return tuple(range(lo, hi + 1))
    try:
        return tuple(int(s) for s in str(text).split(",") if s.strip())
    except ValueError:
        raise UsageError(f"field 'seeds': cannot parse {text!r} (use N, A..B or A,B,C)") from None


def _spec(text, field="degrees") -> BundleSpec:
    try:
        if isinstance(text, list):
            return BundleSpec(tuple(int(k) for k in text))
        return BundleSpec.parse(str(text))
    except (ParseError, ValueError) as exc:
        raise UsageError(f"field '{field}': {exc}") from None


def build_config(args: argparse.Namespace) -> JobConfig:
    cfg = JobConfig(task=args.task)
    if getattr(args, "degrees", None) is not None:
        cfg.degrees = _spec(args.degrees)
    for name in ("basis", "basis_file", "example", "n_polar", "n_azimuthal", "tol", "max_iter", "lam", "output"):
        value = getattr(args, name, None)
        if name == "tol" and args.task == "compare":
            continue  # compare's --tol is the equivalence tolerance
        if value is not None:
            setattr(cfg, name, value)
    seeds = getattr(args, "seeds", None)
    seed = getattr(args, "seed", None)
    if seeds is not None:
        cfg.seeds = _parse_seeds(seeds)
    elif seed is not None:
        cfg.seeds = (int(seed),)
    if cfg.n_polar < 2 or cfg.n_azimuthal < 4:
        raise UsageError("fields 'n_polar'/'n_azimuthal': need n_polar >= 2 and n_azimuthal >= 4")
    if cfg.lam is not None and not cfg.lam > 0:
        raise UsageError("field 'lam': must be positive")
    if cfg.task == "balance" and cfg.degrees is None and cfg.basis_file is None:
        raise UsageError("field 'degrees': required for balance (or give 'basis_file')")
    if cfg.task == "verify" and not (cfg.degrees or cfg.example or cfg.basis_file):
        raise UsageError("field 'degrees': verify needs 'degrees', 'example' or 'basis_file'")
    if cfg.task in ("balance", "verify") and cfg.degrees is not None and not cfg.degrees.is_very_ample:
        raise UsageError(f"field 'degrees': {cfg.degrees} has an O(0) summand, which is not very ample")
    return cfg


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _start_basis(cfg: JobConfig, seed: int) -> Basis:
    if cfg.basis_file:
        return Basis.load(cfg.basis_file)
    if cfg.basis == "random":
        return random_basis(cfg.degrees, seed)
    if cfg.basis == "monomial":
        return monomial_basis(cfg.degrees)
    if cfg.basis == "fubini-study":
        return fubini_study_basis(cfg.degrees)
    raise UsageError(f"field 'basis': unknown basis kind {cfg.basis!r}")


def run_balance(cfg: JobConfig, compare_metrics: bool = False) -> int:
    scheme = cfg.scheme()
    seeds = cfg.seeds if cfg.basis == "random" and not cfg.basis_file else cfg.seeds[:1]
    reports = []
    for seed in seeds:
        report = balance_iterate(_start_basis(cfg, seed), scheme, cfg.tol, cfg.max_iter)
        report.extra["seed"] = seed
        report.extra["lambda"] = cfg.form.lam
        reports.append(report)
    all_converged = all(r.converged for r in reports)
    if len(reports) == 1 and not compare_metrics:
        text = reports[0].dumps()
    else:
        data = {"schema": BATCH_SCHEMA, "converged": all_converged, "runs": [r.to_dict() for r in reports]}
        if compare_metrics:
            data["metric_comparison"] = _metric_comparison(reports)
        text = json.dumps(data, indent=1, sort_keys=True)
    _emit(text, cfg.output)
    for r in reports:
        logger.info("seed %s: converged=%s after %d steps, residual %.3e",
                    r.extra["seed"], r.converged, r.iterations, r.residual_history[-1])
    return EXIT_OK if all_converged else EXIT_NOT_CONVERGED


def _metric_comparison(reports: list[BalanceReport]) -> dict:
    zs = probe_points()
    converged = [r for r in reports if r.converged]
    if len(converged) < 2:
        return {"compared": len(converged), "max_pairwise": None}
    try:
        metrics = [normalized_metric(r.final_basis, zs) for r in converged]
    except BalancedBundlesError as exc:
        return {"compared": 0, "error": str(exc)}
    pairwise = max(float(np.abs(a - b).max()) for a, b in itertools.combinations(metrics, 2))
    return {
        "compared": len(converged),
        "gauge": "frame orthonormal at z=0",
        "points": [[z.real, z.imag] for z in zs],
        "max_pairwise": pairwise,
        "agree": pairwise <= 1e-8,
    }


def _kahler_block(values: list[float], zs: list[complex], lam: float | None) -> dict:
    fs = np.array([fs_density(z) for z in zs])
    vals = np.array(values)
    fitted = float(np.mean(vals / fs))
    checked = fitted if lam is None else lam
    err = float(np.abs(vals - checked * fs).max())
    return {
        "points": [[z.real, z.imag] for z in zs],
        "pullback_density": vals.tolist(),
        "fitted_lambda": fitted,
        "lambda_checked": checked,
        "max_abs_error": err,
        "kahler": err <= 1e-5,
    }


def run_verify(cfg: JobConfig) -> int:
    scheme = cfg.scheme()
    zs = probe_points()
    sample = [ChartPoint.from_affine(z) for z in zs]
    if cfg.example == "eq8":
        gmap = eq8_map()
        lam = 2.0 if cfg.lam is None else cfg.lam
    elif cfg.example == "ftilde":
        gmap = ftilde_map()
        lam = 2.0 if cfg.lam is None else cfg.lam
    elif cfg.example is not None:
        raise UsageError(f"field 'example': unknown example {cfg.example!r} (eq8, ftilde)")
    else:
        gmap = GrassMap.from_basis(_start_basis(cfg, cfg.seeds[0]))
        lam = cfg.lam
    report = {"schema": VERIFY_SCHEMA, "subject": gmap.name or cfg.basis, "N": gmap.N, "r": gmap.r,
              "scheme": scheme.identifier, "lambda": cfg.form.lam,
              "projector_form_prefactor": PROJECTOR_FORM_PREFACTOR}
    basis = gmap.basis
    if basis is not None:
        G = gram(basis, scheme)
        defect, traceless = moment_map(basis, scheme, sample)
        report["degrees"] = list(basis.spec.degrees)
        report["moment_map"] = {"reproducing_defect": defect, "traceless_norm": float(np.linalg.norm(traceless))}
        form = pullback_form_holo(basis)
    else:
        G = map_gram(gmap, scheme)
        traceless = G.entries - np.trace(G.entries).real / G.N * np.eye(G.N)
        report["moment_map"] = {"reproducing_defect": None, "traceless_norm": float(np.linalg.norm(traceless))}
        form = pullback_form_projector(gmap)
    report["gram_residual"] = G.residual()
    report["gram_diagonal"] = np.diag(G.entries).real.tolist()
    report["balanced"] = G.residual() <= cfg.tol
    report["pullback_form"] = _kahler_block([form(z) for z in zs], zs, lam)
    report["holomorphy_defect_max"] = max(holomorphy_defect(gmap, x) for x in sample)
    report["holomorphic"] = report["holomorphy_defect_max"] <= 1e-5
    _emit(json.dumps(report, indent=1, sort_keys=True), cfg.output)
    pf = report["pullback_form"]
    mark = {True: "yes", False: "no"}
    logger.info("balanced: %s (residual %.3e); Kahler at lambda=%.6g: %s; holomorphic: %s",
                mark[report["balanced"]], report["gram_residual"], pf["lambda_checked"],
                mark[pf["kahler"]], mark[report["holomorphic"]])
    return EXIT_OK


_REF = re.compile(r"^(?P<name>[a-z][a-z0-9-]*)(?:[:(](?P<args>[^)]*)\)?)?$")


def resolve_map(ref: str, cfg: JobConfig) -> GrassMap:
    """Map references: ``eq8``, ``ftilde``, ``eq8-rotated:SEED``,
    ``balanced:DEGREES:SEED``, ``random:DEGREES:SEED``, ``monomial:DEGREES``,
    ``fubini-study:DEGREES`` or a path to a basis / explicit-map file.

    The parenthesised form ``balanced(1,1;seed 0)`` is accepted too.
    """
    m = _REF.match(ref.strip())
    if m is None or Path(ref).exists():
        return load_map(ref)
    name = m.group("name")
    raw = m.group("args") or ""
    parts = [p.strip().removeprefix("seed").strip() for p in re.split(r"[;:]", raw) if p.strip()]
    if name == "eq8" and not parts:
        return eq8_map()
    if name == "ftilde" and not parts:
        return ftilde_map()
    if name == "eq8-rotated" and len(parts) == 1:
        U = random_unitary(4, np.random.default_rng(int(parts[0])))
        return eq8_map().rotated(U, ref)
    if name in ("balanced", "random") and len(parts) == 2:
        start = random_basis(_spec(parts[0], "map reference"), int(parts[1]))
        if name == "random":
            return GrassMap.from_basis(start, ref)
        report = balance_iterate(start, cfg.scheme(), cfg.tol, cfg.max_iter)
        if not report.converged:
            raise BalancedBundlesError(f"{ref}: balancing did not converge (residual {report.residual_history[-1]:.3e})")
        return GrassMap.from_basis(report.final_basis, ref)
    if name in ("monomial", "fubini-study") and len(parts) == 1:
        spec = _spec(parts[0], "map reference")
        return GrassMap.from_basis(monomial_basis(spec) if name == "monomial" else fubini_study_basis(spec), ref)
    if Path(ref).suffix:
        return load_map(ref)
    raise UsageError(f"cannot resolve map reference {ref!r}")


def run_compare(cfg: JobConfig, a: str, b: str, tol: float, seed: int) -> int:
    mapA = resolve_map(a, cfg)
    mapB = resolve_map(b, cfg)
    verdict = compare(mapA, mapB, tol=tol, seed=seed)
    data = verdict.to_dict()
    data["a"], data["b"] = a, b
    _emit(json.dumps(data, indent=1, sort_keys=True), cfg.output)
    logger.info("%s vs %s: %s (gap %.3e)", a, b, verdict.verdict, verdict.gap)
    return EXIT_OK if verdict.verdict == EQUIVALENT else EXIT_NOT_EQUIVALENT


def run_suite(cfg: JobConfig) -> int:
    results = run_paper_suite(cfg.n_polar, cfg.n_azimuthal)
    lines = [r.line() for r in results]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    _emit("\n".join(lines), cfg.output)
    return EXIT_OK if failed == 0 else EXIT_SUITE_FAILED


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; command-line flags take precedence")
    p.add_argument("--n-polar", type=int, help="Gauss-Legendre nodes in the polar variable (default 16)")
    p.add_argument("--n-azimuthal", type=int, help="uniform azimuthal nodes (default 16)")
    p.add_argument("--lam", type=float, help="scale lambda of the Kahler form lambda*omega_FS")
    p.add_argument("--output", "-o", help="report path (default: stdout)")


def make_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="balanced-bundles", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="task", required=True)
    subs = {}

    p = sub.add_parser("balance", help="run Gram whitening until the basis is balanced")
    _add_common(p)
    p.add_argument("--degrees", help="comma-separated degrees k_i of O(k_1)+...+O(k_r)")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", help="several seeds: A..B or A,B,C")
    p.add_argument("--basis", choices=("random", "monomial", "fubini-study"))
    p.add_argument("--basis-file")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--compare-metrics", action="store_true", default=None,
                   help="compare the balanced metrics of all converged runs")
    subs["balance"] = p

    p = sub.add_parser("verify", help="report balancedness, moment map, pullback form, holomorphy")
    _add_common(p)
    p.add_argument("--example", choices=("eq8", "ftilde"))
    p.add_argument("--degrees")
    p.add_argument("--seed", type=int)
    p.add_argument("--basis", choices=("random", "monomial", "fubini-study"))
    p.add_argument("--basis-file")
    p.add_argument("--tol", type=float)
    subs["verify"] = p

    p = sub.add_parser("compare", help="decide unitary equivalence of two maps into G(r,N)")
    _add_common(p)
    p.add_argument("--a", help="first map reference")
    p.add_argument("--b", help="second map reference")
    p.add_argument("--tol", type=float, help="equivalence tolerance (default 1e-6)")
    p.add_argument("--seed", type=int, help="seed of the multi-start alignment (default 0)")
    subs["compare"] = p

    p = sub.add_parser("paper-suite", help="run every acceptance check and print a table")
    _add_common(p)
    subs["paper-suite"] = p
    return parser, subs


def _apply_config(args: argparse.Namespace, subparser: argparse.ArgumentParser) -> None:
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"config file {args.config}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {args.config}: top level must be an object")
    if data.get("schema", CONFIG_SCHEMA) != CONFIG_SCHEMA:
        raise UsageError(f"field 'schema': expected {CONFIG_SCHEMA!r}, got {data['schema']!r}")
    if data.get("task", args.task) != args.task:
        raise UsageError(f"field 'task': config is for {data['task']!r}, command is {args.task!r}")
    known = {a.dest for a in subparser._actions}
    for key, value in data.items():
        if key in ("task", "schema"):
            continue
        if key not in known or key == "config":
            raise UsageError(f"field {key!r}: not an option of {args.task}")
        if getattr(args, key) is None:
            if key == "degrees" and isinstance(value, list):
                value = ",".join(str(k) for k in value)
            setattr(args, key, value)


def main(argv: list[str] | None = None) -> int:
    parser, subs = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s:%(levelname)s:%(message)s", stream=sys.stderr)
    try:
        if args.config:
            _apply_config(args, subs[args.task])
        cfg = build_config(args)
        if args.task == "balance":
            return run_balance(cfg, bool(args.compare_metrics))
        if args.task == "verify":
            return run_verify(cfg)
        if args.task == "compare":
            if not args.a or not args.b:
                raise UsageError("fields 'a' and 'b': compare needs two map references")
            return run_compare(cfg, args.a, args.b, args.tol if args.tol is not None else 1e-6,
                               args.seed if args.seed is not None else 0)
        return run_suite(cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"balanced-bundles: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BalancedBundlesError, OSError, ValueError) as exc:
        print(f"balanced-bundles: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
