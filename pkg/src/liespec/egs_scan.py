"""Ratio scans, randomized invariant verification, degeneration sweeps, reporting.

The central quantity is the homothety-invariant product
``lambda1 * diam^2``.  Scans sample seeded random metrics, compute certified
spectral gaps and diameter estimates, and record named check flags; reports
are emitted as CSV or JSON with identical field names.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import (DEFAULT_EPS_NET, DEFAULT_GRID_RESOLUTION, DEFAULT_KNN,
                       DEFAULT_NET_SIZE, DiameterEstimate, Net,
                       biinvariant_diameter, build_net, graph_diameter,
                       torus_diameter)
from .lie_core import LieGroupCatalogEntry
from .metric_space import (MetricSpec, metric_from_matrix, random_rotation,
                           sample_metric)
from .rep_theory import assemble_minus_CA, lambda1_certified, spin_irrep

__all__ = [
    "DiamConfig",
    "ScanRecord",
    "ScanSummary",
    "egs_ratio",
    "scan",
    "DegenerationReport",
    "degeneration_experiment",
    "PropertyReport",
    "property_suite",
    "write_scan_csv",
    "scan_to_json",
    "CHECK_NAMES",
]

LI_TOL = 1e-6
EXACT_TOL = 1e-9

CHECK_NAMES = ("li_ok", "simple_bounds_ok", "remark_diam_ok",
               "remark_lambda_ok", "urakawa_ok")

GOLDEN = (1 + math.sqrt(5)) / 2


@dataclass(frozen=True)
class DiamConfig:
    """How to compute diameters during scans and experiments."""

    method: str = "auto"  # auto | graph | lattice | biinv
    net_size: int = DEFAULT_NET_SIZE
    knn: int = DEFAULT_KNN
    grid_resolution: int = DEFAULT_GRID_RESOLUTION
    eps_net: float = DEFAULT_EPS_NET
    net_seed: int = 0

    def resolve(self, entry: LieGroupCatalogEntry) -> str:
        if self.method != "auto":
            return self.method
        if entry.kind == "torus":
            return "lattice"
        if entry.kind in ("su2", "so3"):
            return "graph"
        raise ValueError(f"no diameter estimator for {entry.name}")


@dataclass(frozen=True)
class ScanRecord:
    seed: int
    group: str
    m: int
    sigma: tuple
    lambda1: float
    lambda1_certified: bool
    lambda1_witness: str
    diam_lower: float
    diam_value: float
    diam_upper: float
    diam_method: str
    ratio: float
    checks: dict

    def violated(self) -> list[str]:
        return [k for k in CHECK_NAMES if not self.checks[k]]


@dataclass(frozen=True)
class ScanSummary:
    n_samples: int
    max_ratio: float
    argmax_seed: int
    argmax_sigma: tuple
    violation_counts: dict
    violations: list  # (seed, check name) pairs, enough to reproduce


_LAMBDA1_IDENTITY: dict[str, float] = {}


def lambda1_identity(entry: LieGroupCatalogEntry) -> float:
    """Certified spectral gap of the reference bi-invariant metric, cached."""
    val = _LAMBDA1_IDENTITY.get(entry.name)
    if val is None:
        res = lambda1_certified(entry, metric_from_matrix(np.eye(entry.dim)))
        assert res.certified
        val = res.lambda1
        _LAMBDA1_IDENTITY[entry.name] = val
    return val


def _compute_diameter(entry: LieGroupCatalogEntry, spec: MetricSpec,
                      config: DiamConfig, net: Optional[Net]) -> DiameterEstimate:
    method = config.resolve(entry)
    if method == "lattice":
        return torus_diameter(spec, grid_resolution=config.grid_resolution)
    if method == "graph":
        if net is None:
            net = build_net(entry, config.net_size, config.knn, config.net_seed)
        return graph_diameter(entry, spec, net, eps_net=config.eps_net)
    if method == "biinv":
        return biinvariant_diameter(entry)
    raise ValueError(f"unsupported diameter method {method!r} for ratio scans")


def _run_checks(entry: LieGroupCatalogEntry, spec: MetricSpec, lam1: float,
                diam: DiameterEstimate, eps_net: float) -> dict:
    lam_i = lambda1_identity(entry)
    s1, sm = spec.sigma[0], spec.sigma[-1]
    s2 = spec.sigma[1] if spec.m > 1 else spec.sigma[0]
    scale = max(1.0, lam_i * s1 * s1)
    checks = {}
    checks["li_ok"] = lam1 * diam.lower ** 2 >= math.pi ** 2 / 4 - LI_TOL
    checks["simple_bounds_ok"] = (
        lam1 >= lam_i * sm * sm - EXACT_TOL * scale
        and lam1 <= lam_i * s1 * s1 + EXACT_TOL * scale)
    checks["urakawa_ok"] = lam1 <= lam_i * float(np.trace(spec.AAt)) + EXACT_TOL * scale
    if entry.kind == "su2":
        checks["remark_lambda_ok"] = (
            lam1 > 2 * s2 * s2 - EXACT_TOL * scale and lam1 <= 8 * s2 * s2 + EXACT_TOL * scale)
        checks["remark_diam_ok"] = (
            diam.value * s2 >= math.pi / 2 * (1 - eps_net)
            and diam.value * s2 <= math.pi * (1 + eps_net))
    elif entry.kind == "so3":
        checks["remark_lambda_ok"] = (
            lam1 > 4 * s2 * s2 - EXACT_TOL * scale and lam1 <= 8 * s2 * s2 + EXACT_TOL * scale)
        checks["remark_diam_ok"] = (
            diam.value * s2 >= math.pi / 2 * (1 - eps_net)
            and diam.value * s2 <= math.sqrt(3) * math.pi / 2 * (1 + eps_net))
    elif entry.kind == "torus":
        # Simple two-sided bound with the grid slack of the estimate.
        d0 = biinvariant_diameter(entry).value
        slack = diam.upper - diam.value
        checks["remark_lambda_ok"] = True
        checks["remark_diam_ok"] = (
            diam.value >= d0 / s1 - slack - EXACT_TOL
            and diam.value <= d0 / sm + EXACT_TOL * max(1.0, d0 / sm))
    else:
        checks["remark_lambda_ok"] = True
        checks["remark_diam_ok"] = True
    return {k: bool(checks[k]) for k in CHECK_NAMES}


def egs_ratio(entry: LieGroupCatalogEntry, spec: MetricSpec,
              diam_config: DiamConfig = DiamConfig(), seed: int = 0,
              net: Optional[Net] = None) -> ScanRecord:
    """One ratio record: certified gap, diameter estimate, check flags."""
    res = lambda1_certified(entry, spec)
    diam = _compute_diameter(entry, spec, diam_config, net)
    checks = _run_checks(entry, spec, res.lambda1, diam, diam_config.eps_net)
    return ScanRecord(
        seed=seed, group=entry.name, m=entry.dim, sigma=tuple(float(s) for s in spec.sigma),
        lambda1=res.lambda1, lambda1_certified=res.certified, lambda1_witness=res.witness,
        diam_lower=diam.lower, diam_value=diam.value, diam_upper=diam.upper,
        diam_method=diam.method, ratio=res.lambda1 * diam.value ** 2, checks=checks)


# -- parallel scan plumbing (fork-safe module state) -------------------------

_WORKER: dict = {}


def _scan_init(entry, lo, hi, config, net):
    _WORKER.update(entry=entry, lo=lo, hi=hi, config=config, net=net)


def _scan_one(seed: int) -> ScanRecord:
    spec = sample_metric(_WORKER["entry"], _WORKER["lo"], _WORKER["hi"], seed)
    return egs_ratio(_WORKER["entry"], spec, _WORKER["config"], seed=seed,
                     net=_WORKER["net"])


def scan(entry: LieGroupCatalogEntry, n_samples: int, lo: float = 0.2,
         hi: float = 5.0, diam_config: DiamConfig = DiamConfig(),
         base_seed: int = 0, jobs: int = 1,
         net: Optional[Net] = None) -> tuple[list[ScanRecord], ScanSummary]:
    """Seeded scan over random metrics; per-sample seed = base_seed + index.

    Output is independent of ``jobs``: records are always ordered by index and
    aggregation is order-free.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if net is None and diam_config.resolve(entry) == "graph":
        net = build_net(entry, diam_config.net_size, diam_config.knn,
                        diam_config.net_seed)
    seeds = [base_seed + i for i in range(n_samples)]
    if jobs <= 1:
        _scan_init(entry, lo, hi, diam_config, net)
        records = [_scan_one(s) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_scan_init,
                                 initargs=(entry, lo, hi, diam_config, net)) as ex:
            records = list(ex.map(_scan_one, seeds, chunksize=max(1, n_samples // (4 * jobs))))
    violations = [(r.seed, name) for r in records for name in r.violated()]
    counts = {name: sum(1 for _, n in violations if n == name) for name in CHECK_NAMES}
    best = max(records, key=lambda r: r.ratio)
    summary = ScanSummary(
        n_samples=n_samples, max_ratio=best.ratio, argmax_seed=best.seed,
        argmax_sigma=best.sigma, violation_counts=counts, violations=violations)
    return records, summary


# ---------------------------------------------------------------------------
# Degeneration sweeps
# ---------------------------------------------------------------------------

DEGENERATION_KINDS = ("shrink-transverse", "enlarge-generating", "torus-dense-line")


@dataclass(frozen=True)
class DegenerationRow:
    s: float
    sigma: tuple
    lambda1: float
    lambda1_certified: bool
    diam_value: Optional[float]
    diam_lower: Optional[float]
    diam_upper: Optional[float]
    tracked: dict


@dataclass(frozen=True)
class DegenerationReport:
    kind: str
    group: str
    s_values: tuple
    rows: list
    monotone: dict  # tracked key -> 'increasing' | 'decreasing' | 'mixed'


def _monotone_tag(values: Sequence[float]) -> str:
    diffs = np.diff(np.asarray(values, dtype=float))
    if np.all(diffs > 0):
        return "increasing"
    if np.all(diffs < 0):
        return "decreasing"
    return "mixed"


def two_generator_rotation_su2xsu2() -> np.ndarray:
    """Orthogonal P whose first two columns already bracket-generate su2+su2.

    Columns 1-2 span a generic two-generator pair (asymmetric mixing angles
    keep the pair out of every automorphism graph); the rest is a Gram-Schmidt
    completion.
    """
    beta = math.pi / 5
    y1 = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 1.0]) / math.sqrt(2)
    y2 = np.array([0.0, math.cos(beta), 0.0, 0.0, math.sin(beta), 0.0])
    cols = [y1, y2]
    for j in range(6):
        e = np.zeros(6)
        e[j] = 1.0
        v = e - sum(np.dot(e, c) * c for c in cols)
        nrm = np.linalg.norm(v)
        if nrm > 1e-9:
            cols.append(v / nrm)
        if len(cols) == 6:
            break
    return np.stack(cols, axis=1)


def dense_line_rotation_t2() -> np.ndarray:
    """Rotation aligning the first torus direction with an irrational slope."""
    theta = math.atan2(1.0, GOLDEN)
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def degeneration_experiment(entry: LieGroupCatalogEntry, kind: str,
                            s_values: Sequence[float],
                            diam_config: DiamConfig = DiamConfig(),
                            net: Optional[Net] = None) -> DegenerationReport:
    """Sweep a one-parameter family of metrics and track the relevant product.

    shrink-transverse: directions transverse to a maximal-dimension subgroup
    get cheap (s down); the gap collapses and the diameter blows up.
    enlarge-generating: a bracket-generating pair gets expensive (s up) on
    su2 x su2; the gap divided by sigma_4^2 blows up.  torus-dense-line: the
    direction of a dense line gets expensive on T^2; diam * sigma_2 collapses.
    Diameters appear only where an estimator exists (graph for su2, lattice
    for tori).
    """
    if kind not in DEGENERATION_KINDS:
        raise ValueError(f"unknown degeneration kind {kind!r}")
    s_values = tuple(float(s) for s in s_values)
    if len(s_values) < 2 or np.any(np.diff(s_values) == 0):
        raise ValueError("need at least two distinct s values")
    if not (np.all(np.diff(s_values) > 0) or np.all(np.diff(s_values) < 0)):
        raise ValueError("s values must be monotone")

    if kind == "shrink-transverse":
        if entry.kind == "su2":
            def make(s):
                return np.diag([1.0, s, s])
            tracked_keys = ("lambda1_over_sigma1_sq", "diam_times_sigma1", "lambda1_over_s_sq")
            want_diam = True
        elif entry.kind == "product" and entry.name == "su2xsu2":
            def make(s):
                return np.diag([1.0, 1.0, 1.0, 1.0, s, s])
            tracked_keys = ("lambda1_over_sigma4_sq",)
            want_diam = False
        else:
            raise ValueError("shrink-transverse runs on su2 or su2xsu2")
    elif kind == "enlarge-generating":
        if not (entry.kind == "product" and entry.name == "su2xsu2"):
            raise ValueError("enlarge-generating runs on su2xsu2")
        P = two_generator_rotation_su2xsu2()

        def make(s):
            return P @ np.diag([s, s, s, 1.0, 1.0, 1.0])
        tracked_keys = ("lambda1_over_sigma4_sq",)
        want_diam = False
    else:  # torus-dense-line
        if not (entry.kind == "torus" and entry.dim == 2):
            raise ValueError("torus-dense-line runs on t2")
        P = dense_line_rotation_t2()

        def make(s):
            return P @ np.diag([s, 1.0])
        tracked_keys = ("diam_times_sigma2",)
        want_diam = True

    if want_diam and entry.kind == "su2" and net is None:
        net = build_net(entry, diam_config.net_size, diam_config.knn,
                        diam_config.net_seed)

    rows = []
    for s in s_values:
        spec = metric_from_matrix(make(s))
        res = lambda1_certified(entry, spec)
        diam = None
        if want_diam:
            diam = _compute_diameter(entry, spec, diam_config, net)
        tracked = {}
        for key in tracked_keys:
            if key == "lambda1_over_sigma1_sq":
                tracked[key] = res.lambda1 / spec.sigma[0] ** 2
            elif key == "lambda1_over_sigma4_sq":
                tracked[key] = res.lambda1 / spec.sigma[3] ** 2
            elif key == "lambda1_over_s_sq":
                tracked[key] = res.lambda1 / s ** 2
            elif key == "diam_times_sigma1":
                tracked[key] = diam.value * spec.sigma[0]
            elif key == "diam_times_sigma2":
                tracked[key] = diam.value * spec.sigma[1]
        rows.append(DegenerationRow(
            s=s, sigma=tuple(float(x) for x in spec.sigma),
            lambda1=res.lambda1, lambda1_certified=res.certified,
            diam_value=None if diam is None else diam.value,
            diam_lower=None if diam is None else diam.lower,
            diam_upper=None if diam is None else diam.upper,
            tracked=tracked))
    monotone = {key: _monotone_tag([r.tracked[key] for r in rows])
                for key in tracked_keys}
    return DegenerationReport(kind=kind, group=entry.name, s_values=s_values,
                              rows=rows, monotone=monotone)


# ---------------------------------------------------------------------------
# Randomized verification suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PropertyCheck:
    name: str
    trials: int
    failures: list


@dataclass(frozen=True)
class PropertyReport:
    group: str
    checks: list

    @property
    def all_passed(self) -> bool:
        return all(not c.failures for c in self.checks)


def _loewner_bump(spec: MetricSpec, rng: np.random.Generator) -> MetricSpec:
    """Metric Loewner-above spec: B B^t = A A^t + v v^t (PSD rank-one bump)."""
    v = rng.standard_normal(spec.m) * float(np.mean(spec.sigma))
    bbt = spec.AAt + np.outer(v, v)
    return metric_from_matrix(np.linalg.cholesky(bbt))


def property_suite(entry: LieGroupCatalogEntry, n_trials: int = 25,
                   seed: int = 0, net: Optional[Net] = None,
                   lo: float = 0.2, hi: float = 5.0) -> PropertyReport:
    """Randomized checks of the structural identities behind the estimates.

    Covers: metric invariance under right orthogonal factors, Loewner
    monotonicity of lengths, spectral gaps and fixed-net diameters, the mixed
    Casimir assembly identity, the simple two-sided gap bounds, the trace
    bound, and gap homothety.  Failures carry the matrices needed to
    reproduce.
    """
    if n_trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    checks = []

    def record(name, fn):
        failures = []
        for t in range(n_trials):
            data = fn(t)
            if data is not None:
                failures.append(data)
        checks.append(PropertyCheck(name=name, trials=n_trials, failures=failures))

    specs = [sample_metric(entry, lo, hi, seed=int(rng.integers(2 ** 31)))
             for _ in range(n_trials)]
    bumped = [_loewner_bump(s, rng) for s in specs]

    def right_invariance(t):
        s = specs[t]
        R = random_rotation(entry.dim, rng)
        other = metric_from_matrix(s.A @ R)
        err = float(np.max(np.abs(other.gram - s.gram)))
        if err > 1e-9 * max(1.0, float(np.max(np.abs(s.gram)))):
            return {"A": s.A.tolist(), "R": R.tolist(), "err": err}
        return None
    record("metric_right_orthogonal_invariance", right_invariance)

    def length_monotonicity(t):
        a, b = specs[t], bumped[t]
        X = rng.standard_normal((20, entry.dim))
        qa = np.einsum("ni,ij,nj->n", X, a.gram, X)
        qb = np.einsum("ni,ij,nj->n", X, b.gram, X)
        if np.any(qa < qb - 1e-9 * np.maximum(1.0, qb)):
            return {"A": a.A.tolist(), "B": b.A.tolist()}
        return None
    record("loewner_length_monotonicity", length_monotonicity)

    def gap_monotonicity(t):
        a, b = specs[t], bumped[t]
        la = lambda1_certified(entry, a).lambda1
        lb = lambda1_certified(entry, b).lambda1
        if la > lb + 1e-9 * max(1.0, lb):
            return {"A": a.A.tolist(), "B": b.A.tolist(), "la": la, "lb": lb}
        return None
    record("spectral_gap_loewner_monotonicity", gap_monotonicity)

    def mixed_casimir_identity(t):
        a, b = specs[t].A, bumped[t].A
        irrep = spin_irrep(1) if entry.kind in ("su2", "so3") else None
        if irrep is None:
            from .rep_theory import enumerate_irreps
            irrep = enumerate_irreps(entry, 100.0)[min(t % 3, 2)]
        lhs = assemble_minus_CA(irrep, metric_from_matrix(a @ b))
        ga = np.einsum("ki,kab->iab", a, irrep.generators)
        rhs = -np.einsum("ij,iab,jbc->ac", b @ b.T, ga, ga)
        rhs = 0.5 * (rhs + rhs.conj().T)
        err = float(np.max(np.abs(lhs - rhs)))
        if err > 1e-10 * max(1.0, float(np.max(np.abs(lhs)))):
            return {"A": a.tolist(), "B": b.tolist(), "err": err}
        return None
    record("mixed_casimir_assembly_identity", mixed_casimir_identity)

    if entry.kind in ("su2", "so3"):
        local_net = net or build_net(entry, 2000, DEFAULT_KNN, seed=0)

        def diam_monotonicity(t):
            a, b = specs[t], bumped[t]
            da = graph_diameter(entry, a, local_net).value
            db = graph_diameter(entry, b, local_net).value
            if da < db - 1e-9 * max(1.0, db):
                return {"A": a.A.tolist(), "B": b.A.tolist(), "da": da, "db": db}
            return None
        record("diameter_loewner_monotonicity", diam_monotonicity)

    lam_i = lambda1_identity(entry)

    def simple_bounds(t):
        s = specs[t]
        lam = lambda1_certified(entry, s).lambda1
        lo_b = lam_i * s.sigma[-1] ** 2
        hi_b = lam_i * s.sigma[0] ** 2
        tol = 1e-9 * max(1.0, hi_b)
        if not (lo_b - tol <= lam <= hi_b + tol):
            return {"A": s.A.tolist(), "lambda1": lam}
        return None
    record("spectral_simple_bounds", simple_bounds)

    def trace_bound(t):
        s = specs[t]
        lam = lambda1_certified(entry, s).lambda1
        tr = float(np.trace(s.AAt))
        tol = 1e-9 * max(1.0, lam_i * tr)
        if lam > lam_i * tr + tol or s.sigma[0] ** 2 > tr + tol:
            return {"A": s.A.tolist(), "lambda1": lam, "trace": tr}
        return None
    record("trace_upper_bound", trace_bound)

    def homothety(t):
        s = specs[t]
        c = float(rng.uniform(0.5, 2.0))
        lam = lambda1_certified(entry, s).lambda1
        lam_t = lambda1_certified(entry, metric_from_matrix(c * s.A)).lambda1
        if abs(lam_t - c * c * lam) > 1e-9 * max(1.0, lam_t):
            return {"A": s.A.tolist(), "c": c}
        return None
    record("spectral_homothety", homothety)

    return PropertyReport(group=entry.name, checks=checks)


# ---------------------------------------------------------------------------
# CSV / JSON output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def scan_columns(m: int) -> list[str]:
    return (["seed", "group", "m"] + [f"sigma_{i + 1}" for i in range(m)]
            + ["lambda1", "lambda1_certified", "lambda1_witness",
               "diam_lower", "diam_value", "diam_upper", "diam_method", "ratio"]
            + list(CHECK_NAMES))


def record_row(rec: ScanRecord) -> list[str]:
    row = [str(rec.seed), rec.group, str(rec.m)]
    row += [_fmt(s) for s in rec.sigma]
    row += [_fmt(rec.lambda1), _fmt(rec.lambda1_certified), rec.lambda1_witness,
            _fmt(rec.diam_lower), _fmt(rec.diam_value), _fmt(rec.diam_upper),
            rec.diam_method, _fmt(rec.ratio)]
    row += [_fmt(rec.checks[k]) for k in CHECK_NAMES]
    return row


def write_scan_csv(records: Sequence[ScanRecord], stream) -> None:
    if not records:
        raise ValueError("no records to write")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(scan_columns(records[0].m))
    for rec in records:
        writer.writerow(record_row(rec))


def scan_csv_text(records: Sequence[ScanRecord]) -> str:
    buf = io.StringIO()
    write_scan_csv(records, buf)
    return buf.getvalue()


def record_to_dict(rec: ScanRecord) -> dict:
    d = {"seed": rec.seed, "group": rec.group, "m": rec.m}
    for i, s in enumerate(rec.sigma):
        d[f"sigma_{i + 1}"] = s
    d.update(lambda1=rec.lambda1, lambda1_certified=rec.lambda1_certified,
             lambda1_witness=rec.lambda1_witness, diam_lower=rec.diam_lower,
             diam_value=rec.diam_value, diam_upper=rec.diam_upper,
             diam_method=rec.diam_method, ratio=rec.ratio)
    for k in CHECK_NAMES:
        d[k] = rec.checks[k]
    return d


def scan_to_json(records: Sequence[ScanRecord], summary: ScanSummary) -> str:
    payload = {
        "schema_version": 1,
        "records": [record_to_dict(r) for r in records],
        "summary": {
            "n_samples": summary.n_samples,
            "max_ratio": summary.max_ratio,
            "argmax_seed": summary.argmax_seed,
            "argmax_sigma": list(summary.argmax_sigma),
            "violation_counts": summary.violation_counts,
            "violations": [list(v) for v in summary.violations],
        },
    }
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"
