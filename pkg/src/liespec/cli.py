"""Command-line front end.

Subcommands map one-to-one onto library operations: ``sigma`` (metric scale
parameters), ``lambda1`` (certified spectral gap), ``diam`` (diameter
estimates), ``ell`` (bracket-generating index), ``scan`` (ratio scans),
``degenerate`` (degeneration sweeps), ``verify`` (randomized invariant checks).

Exit codes: 0 success, 2 input validation failure, 3 computation failure
(certification impossible under the requested cap).  All randomness sits
behind explicit seeds (default 0).  Set LIESPEC_NET_CACHE to a directory to
reuse quaternion nets across runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from . import startup_self_test
from .egs_scan import (DiamConfig, degeneration_experiment, property_suite,
                       scan, scan_csv_text, scan_to_json)
from .geometry import (Net, biinvariant_diameter, build_net, graph_diameter,
                       load_net_nodes, net_cache_file, paper_diameter_bounds,
                       save_net_nodes, torus_diameter)
from .lie_core import (LieGroupCatalogEntry, ell_index, entry_from_key,
                       prefix_subalgebra_dims)
from .metric_space import (MatrixFormatError, SingularMatrixError,
                           metric_from_matrix, read_matrix)
from .rep_theory import lambda1_certified

SCHEMA_VERSION = 1


class ComputationError(RuntimeError):
    """Raised when a requested computation cannot be completed/certified."""


def _parse_matrix(entry: LieGroupCatalogEntry, text: Optional[str]) -> np.ndarray:
    m = entry.dim
    if text is None:
        return np.eye(m)
    if os.path.exists(text):
        A = read_matrix(text)
    else:
        toks = text.replace(",", " ").split()
        try:
            vals = [float(t) for t in toks]
        except ValueError as e:
            raise MatrixFormatError(f"cannot parse matrix entries: {text!r}") from e
        if len(vals) != m * m:
            raise MatrixFormatError(f"need {m * m} entries for {entry.name}, got {len(vals)}")
        A = np.array(vals).reshape(m, m)
    if not np.all(np.isfinite(A)):
        raise MatrixFormatError("NaN/Inf entries are not allowed")
    if A.shape != (m, m):
        raise MatrixFormatError(f"matrix is {A.shape[0]}x{A.shape[1]}, group needs {m}x{m}")
    return A


def _emit(args, payload: dict, table_lines: list[str]) -> None:
    out = sys.stdout
    close = False
    if getattr(args, "out", None):
        out = open(args.out, "w", encoding="utf-8")
        close = True
    try:
        if args.format == "json":
            payload = {"schema_version": SCHEMA_VERSION, **payload}
            out.write(json.dumps(payload, indent=2) + "\n")
        else:
            out.write("\n".join(table_lines) + "\n")
    finally:
        if close:
            out.close()


def _get_net(entry, args) -> Net:
    cache_dir = os.environ.get("LIESPEC_NET_CACHE")
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        path = net_cache_file(cache_dir, entry.kind, args.net_size, args.seed)
        if os.path.exists(path):
            nodes = load_net_nodes(path)
            return build_net(entry, knn=args.knn, seed=args.seed, nodes=nodes)
        net = build_net(entry, args.net_size, args.knn, args.seed)
        save_net_nodes(path, net)
        return net
    return build_net(entry, args.net_size, args.knn, args.seed)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_sigma(args) -> int:
    entry = entry_from_key(args.group)
    spec = metric_from_matrix(_parse_matrix(entry, args.matrix))
    sig = " ".join(f"{s:.12g}" for s in spec.sigma)
    lines = [f"m={entry.dim}", f"sigma= {sig}", "P_sort="]
    lines += ["  " + " ".join(f"{x: .12g}" for x in row) for row in spec.P_sort]
    _emit(args, {"m": entry.dim, "sigma": list(map(float, spec.sigma)),
                 "P_sort": spec.P_sort.tolist()}, lines)
    return 0


def _cmd_lambda1(args) -> int:
    entry = entry_from_key(args.group)
    spec = metric_from_matrix(_parse_matrix(entry, args.matrix))
    res = lambda1_certified(entry, spec, window_cap=args.window_cap)
    if not res.certified:
        raise ComputationError(f"uncertified result: {res.reason}")
    lines = [f"lambda1={res.lambda1:.12g} witness={res.witness} "
             f"certified={'true' if res.certified else 'false'}",
             f"window={res.window:.12g} evaluations={res.evaluations}"]
    _emit(args, {"lambda1": res.lambda1, "witness": res.witness,
                 "certified": res.certified, "window": res.window,
                 "evaluations": res.evaluations}, lines)
    return 0


def _cmd_diam(args) -> int:
    entry = entry_from_key(args.group)
    spec = metric_from_matrix(_parse_matrix(entry, args.matrix))
    method = args.method
    if method == "auto":
        method = "lattice" if entry.kind == "torus" else "graph"
    if method == "bounds":
        b = paper_diameter_bounds(entry, spec)
        lines = [f"diam_lower={b.lower:.12g} ({b.lower_source})",
                 f"diam_upper={b.upper:.12g} ({b.upper_source})"]
        _emit(args, {"method": "PaperBounds", "lower": b.lower, "upper": b.upper,
                     "lower_source": b.lower_source, "upper_source": b.upper_source},
              lines)
        return 0
    if method == "biinv":
        est = biinvariant_diameter(entry)
    elif method == "lattice":
        est = torus_diameter(spec, grid_resolution=args.grid_resolution)
    elif method == "graph":
        if entry.kind not in ("su2", "so3"):
            raise MatrixFormatError(f"graph method unavailable for {entry.name}")
        net = _get_net(entry, args)
        est = graph_diameter(entry, spec, net, eps_net=args.eps_net)
    else:  # pragma: no cover - argparse restricts choices
        raise MatrixFormatError(f"unknown method {method}")
    lines = [f"diam={est.value:.12g} lower={est.lower:.12g} upper={est.upper:.12g} "
             f"method={est.method}"]
    _emit(args, {"method": est.method, "value": est.value, "lower": est.lower,
                 "upper": est.upper, "params": est.params}, lines)
    return 0


def _cmd_ell(args) -> int:
    entry = entry_from_key(args.group)
    P = _parse_matrix(entry, args.rotation)
    ell = ell_index(entry, P)
    dims = prefix_subalgebra_dims(entry, P)
    lines = [f"ell={ell}",
             "prefix_dims= " + " ".join(str(d) for d in dims)]
    _emit(args, {"ell": ell, "prefix_dims": dims}, lines)
    return 0


def _cmd_scan(args) -> int:
    entry = entry_from_key(args.group)
    config = DiamConfig(method=args.method, net_size=args.net_size, knn=args.knn,
                        grid_resolution=args.grid_resolution, eps_net=args.eps_net,
                        net_seed=args.seed)
    records, summary = scan(entry, args.samples, lo=args.sigma_lo, hi=args.sigma_hi,
                            diam_config=config, base_seed=args.seed, jobs=args.jobs)
    if args.format == "json":
        text = scan_to_json(records, summary)
    else:
        text = scan_csv_text(records)
        viol = sum(summary.violation_counts.values())
        text += (f"# max_ratio={summary.max_ratio:.17g} argmax_seed={summary.argmax_seed}"
                 f" violations={viol}\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_degenerate(args) -> int:
    entry = entry_from_key(args.group)
    s_values = [float(t) for t in args.s_values.replace(",", " ").split()]
    config = DiamConfig(net_size=args.net_size, knn=args.knn,
                        grid_resolution=args.grid_resolution, eps_net=args.eps_net,
                        net_seed=args.seed)
    report = degeneration_experiment(entry, args.kind, s_values, diam_config=config)
    lines = [f"kind={report.kind} group={report.group}"]
    keys = list(report.rows[0].tracked.keys())
    header = "s sigma lambda1 diam " + " ".join(keys)
    lines.append(header)
    for row in report.rows:
        diam = "-" if row.diam_value is None else f"{row.diam_value:.6g}"
        sig = ",".join(f"{x:.4g}" for x in row.sigma)
        tr = " ".join(f"{row.tracked[k]:.6g}" for k in keys)
        lines.append(f"{row.s:g} {sig} {row.lambda1:.6g} {diam} {tr}")
    lines += [f"monotone[{k}]={v}" for k, v in report.monotone.items()]
    payload = {
        "kind": report.kind, "group": report.group,
        "s_values": list(report.s_values),
        "rows": [{"s": r.s, "sigma": list(r.sigma), "lambda1": r.lambda1,
                  "lambda1_certified": r.lambda1_certified,
                  "diam_value": r.diam_value, "diam_lower": r.diam_lower,
                  "diam_upper": r.diam_upper, "tracked": r.tracked}
                 for r in report.rows],
        "monotone": report.monotone,
    }
    _emit(args, payload, lines)
    return 0


def _cmd_verify(args) -> int:
    entry = entry_from_key(args.group)
    report = property_suite(entry, n_trials=args.trials, seed=args.seed)
    lines = [f"group={report.group} trials={args.trials}"]
    for c in report.checks:
        status = "pass" if not c.failures else f"FAIL({len(c.failures)})"
        lines.append(f"{c.name}: {status}")
        for f in c.failures[:3]:
            lines.append(f"  counterexample: {f}")
    lines.append("all_passed=" + ("true" if report.all_passed else "false"))
    payload = {
        "group": report.group,
        "checks": [{"name": c.name, "trials": c.trials, "failures": c.failures}
                   for c in report.checks],
        "all_passed": report.all_passed,
    }
    _emit(args, payload, lines)
    return 0 if report.all_passed else 3


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="liespec",
        description="Spectral gaps and diameters of left-invariant metrics "
                    "on compact Lie groups (t1..t4, su2, so3, su2xsu2).")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, matrix=True):
        p.add_argument("--group", required=True,
                       help="group key: t1..t4, su2, so3, su2xsu2")
        if matrix:
            p.add_argument("--matrix", default=None,
                           help="row-major entries (comma/space separated) or a "
                                "matrix file path; defaults to the identity")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("table", "csv", "json"), default="table")
        p.add_argument("--out", default=None, help="write output to this file")

    def net_flags(p):
        p.add_argument("--net-size", type=int, default=20000)
        p.add_argument("--knn", type=int, default=12)
        p.add_argument("--grid-resolution", type=int, default=64)
        p.add_argument("--eps-net", type=float, default=0.10)

    p = sub.add_parser("sigma", help="metric scale parameters")
    common(p)
    p.set_defaults(fn=_cmd_sigma)

    p = sub.add_parser("lambda1", help="certified spectral gap")
    common(p)
    p.add_argument("--window-cap", type=float, default=1e6)
    p.set_defaults(fn=_cmd_lambda1)

    p = sub.add_parser("diam", help="diameter estimate")
    common(p)
    p.add_argument("--method", choices=("auto", "graph", "lattice", "biinv", "bounds"),
                   default="auto")
    net_flags(p)
    p.set_defaults(fn=_cmd_diam)

    p = sub.add_parser("ell", help="bracket-generating index of a rotation")
    common(p, matrix=False)
    p.add_argument("--rotation", default=None,
                   help="orthogonal matrix (inline or file); defaults to identity")
    p.set_defaults(fn=_cmd_ell)

    p = sub.add_parser("scan", help="seeded random ratio scan (CSV/JSON)")
    common(p, matrix=False)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--sigma-lo", type=float, default=0.2)
    p.add_argument("--sigma-hi", type=float, default=5.0)
    p.add_argument("--method", choices=("auto", "graph", "lattice"), default="auto")
    p.add_argument("--jobs", type=int, default=1)
    net_flags(p)
    p.set_defaults(fn=_cmd_scan)

    p = sub.add_parser("degenerate", help="degeneration sweep")
    common(p, matrix=False)
    p.add_argument("--kind", required=True,
                   choices=("shrink-transverse", "enlarge-generating", "torus-dense-line"))
    p.add_argument("--s-values", required=True, help="comma separated list")
    net_flags(p)
    p.set_defaults(fn=_cmd_degenerate)

    p = sub.add_parser("verify", help="randomized verification suite")
    common(p, matrix=False)
    p.add_argument("--trials", type=int, default=25)
    p.set_defaults(fn=_cmd_verify)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        startup_self_test()
        return args.fn(args)
    except (MatrixFormatError, SingularMatrixError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ComputationError, RuntimeError) as e:
        print(f"computation failed: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
