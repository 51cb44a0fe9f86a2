"""Command-line interface.

Two subcommands:

    baryopt run <config.json> [--seed N] [--out-dir DIR] [--format {csv,json}]
    baryopt checks [scope]    [--seed N] [--out-dir DIR] [--format {csv,json}]

`run` executes one experiment described by a JSON config (see the README for
the schema) and writes `<base>.summary.json` plus, for iterative methods, a
trace file `<base>.trace.csv` or `<base>.trace.json`.  `checks` runs the
property-check registry for one module scope or all of them.

Outputs are byte-identical across repeated invocations with the same inputs:
floats are serialized with their shortest round-trip representation, JSON
keys are sorted, and nothing time- or host-dependent is written.

Exit codes: 0 on success; 2 when the requested computation did not converge
(proximal inner failure, iteration cap, flow divergence); 1 for config or
domain errors and for failed checks.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .checks import SCOPES, format_result, run_checks
from .errors import (
    ConfigError,
    DegenerateMetricError,
    DimensionMismatchError,
    HessiansUnavailableError,
    InvalidDomainError,
    ProxNonConvergenceError,
)
from .flows import KIND_MIN_MAX, KIND_MIN_MIN, FlowConfig, integrate_flow
from .landscape import LandscapePoint, riemannian_hessian
from .objectives import (
    ConstantFamily,
    QuadraticFamily,
    outer_sum,
    symmetric_quadratic,
)
from .ppa import STATUS_CONVERGED, PpaConfig, run_ppa
from .prox import ProxConfig, prox
from .simplex_geometry import HybridPoint, SimplexPoint, logits_from_point

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_NOT_CONVERGED = 2

_METHODS = ("prox_eval", "ppa", "flow_min_max", "flow_min_min", "landscape", "checks")

_PROX_PARAMS = ("lam", "inner_tol", "inner_max_iter", "allow_newton")
_PPA_ONLY_PARAMS = ("stop_tol", "max_outer_iter", "fp_tol", "record_every")
_PPA_PARAMS = _PROX_PARAMS + _PPA_ONLY_PARAMS
_FLOW_PARAMS = ("t_end", "dt", "record_every", "xi_cap")
_LANDSCAPE_PARAMS = ("eps_critical", "eps_eig_scale")
_CHECKS_PARAMS = ("scope",)

_PARAM_WHITELIST = {
    "prox_eval": _PROX_PARAMS,
    "ppa": _PPA_PARAMS,
    "flow_min_max": _FLOW_PARAMS,
    "flow_min_min": _FLOW_PARAMS,
    "landscape": _LANDSCAPE_PARAMS,
    "checks": _CHECKS_PARAMS,
}


# ---------------------------------------------------------------------------
# config parsing


def _require_dict(value, where):
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a JSON object, got {type(value).__name__}")
    return value


def _check_keys(d, allowed, required, where):
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")
    for key in required:
        if key not in d:
            raise ConfigError(f"missing key {key!r} in {where}")


def _build_problem(node, where="problem"):
    _require_dict(node, where)
    kind = node.get("kind")
    if kind == "symmetric_quadratic":
        _check_keys(node, ("kind",), ("kind",), where)
        return symmetric_quadratic()
    if kind == "quadratic":
        _check_keys(node, ("kind", "A", "b", "c"), ("kind", "A", "b", "c"), where)
        return QuadraticFamily(
            np.asarray(node["A"], dtype=float),
            np.asarray(node["b"], dtype=float),
            np.asarray(node["c"], dtype=float),
        )
    if kind == "constant":
        _check_keys(node, ("kind", "c", "m"), ("kind", "c"), where)
        return ConstantFamily(np.asarray(node["c"], dtype=float), m=int(node.get("m", 1)))
    if kind == "outer_sum":
        _check_keys(node, ("kind", "first", "second"), ("kind", "first", "second"), where)
        first = _build_problem(node["first"], where + ".first")
        second = _build_problem(node["second"], where + ".second")
        return outer_sum(first, second)
    raise ConfigError(
        f"unknown problem kind {kind!r} in {where}; expected one of "
        "('symmetric_quadratic', 'quadratic', 'constant', 'outer_sum')"
    )


def _parse_init(node, fam):
    _require_dict(node, "init")
    _check_keys(node, ("x", "q"), ("x", "q"), "init")
    x = np.asarray(node["x"], dtype=float)
    q = SimplexPoint.from_probs(np.asarray(node["q"], dtype=float))
    if q.size != fam.S:
        raise DimensionMismatchError(
            f"init.q has {q.size} entries, problem has {fam.S} states"
        )
    return fam.check_point(x), q


def _subset(params, keys):
    return {k: params[k] for k in keys if k in params}


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"invalid JSON in {path}: line {err.lineno} column {err.colno}: {err.msg}"
        ) from err
    _require_dict(doc, "config")
    _check_keys(doc, ("problem", "method", "params", "init", "output"),
                ("problem", "method"), "config")
    method = doc["method"]
    if method not in _METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {_METHODS}")
    params = _require_dict(doc.get("params", {}), "params")
    _check_keys(params, _PARAM_WHITELIST[method], (), f"params (method {method!r})")
    output = _require_dict(doc.get("output", {}), "output")
    _check_keys(output, ("path", "format"), (), "output")
    if "format" in output and output["format"] not in ("csv", "json"):
        raise ConfigError(
            f"unknown output format {output['format']!r}; expected 'csv' or 'json'"
        )
    return doc, method, params, output


# ---------------------------------------------------------------------------
# deterministic serialization


def _json_safe(value):
    # bool is a subclass of int; keep it boolean in the output
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return None if math.isnan(f) else f
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    return value


def _dump_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(doc), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _cell(value):
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    f = float(value)
    return "nan" if math.isnan(f) else repr(f)


def _write_trace(base, columns, rows, fmt):
    if fmt == "csv":
        path = base + ".trace.csv"
        lines = [",".join(columns)]
        lines += [",".join(_cell(v) for v in row) for row in rows]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        path = base + ".trace.json"
        _dump_json(path, {"columns": list(columns), "rows": [list(r) for r in rows]})
    return path


def _vector_columns(prefix, n):
    return [f"{prefix}{i}" for i in range(n)]


# ---------------------------------------------------------------------------
# method runners


def _run_prox_eval(fam, x, q, params, summary):
    cfg = ProxConfig(**_subset(params, _PROX_PARAMS))
    try:
        res = prox(fam, x, q, cfg)
    except ProxNonConvergenceError as err:
        summary.update(status="inner_failure", message=str(err))
        return None, EXIT_NOT_CONVERGED
    summary.update(
        status="ok",
        x=res.x,
        q=res.q.probs,
        residual_x=res.residual[0],
        residual_q=res.residual[1],
        inner_iterations=res.inner_iterations,
    )
    return None, EXIT_OK


def _run_ppa(fam, x, q, params, summary):
    prox_cfg = ProxConfig(**_subset(params, _PROX_PARAMS))
    cfg = PpaConfig(prox_cfg=prox_cfg, **_subset(params, _PPA_ONLY_PARAMS))
    trace = run_ppa(fam, x, q, cfg)
    final = trace.records[-1]
    summary.update(
        status=trace.status,
        iterations=trace.iterations,
        no_fixed_point_suspected=trace.no_fixed_point_suspected,
        x=final.x,
        q=final.q.probs,
        objective=final.objective,
        barygrad_norm=final.barygrad_norm,
        loss_spread=final.loss_spread,
        n_records=len(trace.records),
    )
    columns = (
        ["k"]
        + _vector_columns("x", fam.m)
        + _vector_columns("q", fam.S)
        + ["F", "barygrad_norm", "loss_spread", "prox_displacement", "step_bregman"]
    )
    rows = [
        [r.k, *r.x, *r.q.probs, r.objective, r.barygrad_norm, r.loss_spread,
         r.prox_displacement, r.step_bregman]
        for r in trace.records
    ]
    code = EXIT_OK if trace.status == STATUS_CONVERGED else EXIT_NOT_CONVERGED
    return (columns, rows), code


def _run_flow(fam, x, q, params, summary, kind):
    cfg = FlowConfig(**_subset(params, _FLOW_PARAMS))
    trace = integrate_flow(fam, x, q, kind, cfg)
    summary.update(
        status=trace.status,
        kind=kind,
        t_final=trace.t[-1],
        x=trace.x[-1],
        q=trace.q[-1],
        objective=trace.objective[-1],
        n_records=int(trace.t.size),
    )
    columns = (
        ["t"]
        + _vector_columns("x", fam.m)
        + _vector_columns("q", fam.S)
        + ["F", "df_dt_analytic", "entropy", "entropy_rate_analytic"]
    )
    rows = [
        [trace.t[i], *trace.x[i], *trace.q[i], trace.objective[i],
         trace.objective_rate[i], trace.entropy[i], trace.entropy_rate[i]]
        for i in range(trace.t.size)
    ]
    code = EXIT_OK if trace.status == "completed" else EXIT_NOT_CONVERGED
    return (columns, rows), code


def _run_landscape(fam, x, q, params, summary):
    point = LandscapePoint(x, logits_from_point(q))
    report = riemannian_hessian(fam, point, **_subset(params, _LANDSCAPE_PARAMS))
    summary.update(
        classification=report.classification,
        grad_norm=report.grad_norm,
        inertia=list(report.inertia),
        schur_b2=report.schur_b2,
        riemannian=report.riemannian,
        euclidean=report.euclidean,
    )
    return None, EXIT_OK


def _run_checks_method(params, seed, summary):
    scope = params.get("scope", "all")
    results = run_checks(scope=scope, seed=seed)
    for res in results:
        print(format_result(res))
    n_passed = sum(r.passed for r in results)
    n_failed = len(results) - n_passed
    print(f"{n_passed} passed, {n_failed} failed")
    summary.update(
        scope=scope,
        passed=n_failed == 0,
        n_passed=n_passed,
        n_failed=n_failed,
        results=[
            {"name": r.name, "passed": r.passed, "worst": r.worst,
             "tol": r.tol, "detail": r.detail}
            for r in results
        ],
    )
    return None, EXIT_OK if n_failed == 0 else EXIT_FAILED


def _cmd_run(args):
    doc, method, params, output = load_config(args.config)
    fam = _build_problem(doc["problem"])
    summary = {
        "method": method,
        "problem": doc["problem"]["kind"],
        "seed": args.seed,
    }

    if method == "checks":
        trace_data, code = _run_checks_method(params, args.seed, summary)
    else:
        if "init" not in doc:
            raise ConfigError(f"missing key 'init' in config (method {method!r})")
        x, q = _parse_init(doc["init"], fam)
        if method == "prox_eval":
            trace_data, code = _run_prox_eval(fam, x, q, params, summary)
        elif method == "ppa":
            trace_data, code = _run_ppa(fam, x, q, params, summary)
        elif method == "flow_min_max":
            trace_data, code = _run_flow(fam, x, q, params, summary, KIND_MIN_MAX)
        elif method == "flow_min_min":
            trace_data, code = _run_flow(fam, x, q, params, summary, KIND_MIN_MIN)
        else:
            trace_data, code = _run_landscape(fam, x, q, params, summary)

    os.makedirs(args.out_dir, exist_ok=True)
    stem = output.get("path") or os.path.splitext(os.path.basename(args.config))[0]
    base = os.path.join(args.out_dir, stem)
    fmt = args.format or output.get("format") or "csv"

    written = []
    if trace_data is not None:
        written.append(_write_trace(base, trace_data[0], trace_data[1], fmt))
    summary_path = base + ".summary.json"
    _dump_json(summary_path, summary)
    written.append(summary_path)
    for path in written:
        print(f"wrote {path}")
    status = summary.get("status") or summary.get("classification") or (
        "ok" if code == EXIT_OK else "failed"
    )
    print(f"{method}: {status}")
    return code


def _cmd_checks(args):
    results = run_checks(scope=args.scope, seed=args.seed)
    n_passed = sum(r.passed for r in results)
    n_failed = len(results) - n_passed
    if args.format == "json":
        doc = {
            "scope": args.scope,
            "seed": args.seed,
            "passed": n_failed == 0,
            "n_passed": n_passed,
            "n_failed": n_failed,
            "results": [
                {"name": r.name, "passed": r.passed, "worst": r.worst,
                 "tol": r.tol, "detail": r.detail}
                for r in results
            ],
        }
        print(json.dumps(_json_safe(doc), sort_keys=True, indent=2))
    else:
        for res in results:
            print(format_result(res))
        print(f"{n_passed} passed, {n_failed} failed")
    return EXIT_OK if n_failed == 0 else EXIT_FAILED


def build_parser():
    parser = argparse.ArgumentParser(
        prog="baryopt",
        description="Proximal saddle steps, weighted-loss landscapes, and "
        "coupled flows on R^m x int(simplex).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one JSON experiment config")
    run_p.add_argument("config", help="path to the JSON config file")

    checks_p = sub.add_parser("checks", help="run property checks")
    checks_p.add_argument(
        "scope", nargs="?", default="all", choices=SCOPES + ("all",),
        help="module scope to check (default: all)",
    )

    for p in (run_p, checks_p):
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized checks (default: 0)")
        p.add_argument("--out-dir", default=".",
                       help="directory for output files (default: .)")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="trace format; overrides the config (default: csv)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_checks(args)
    except (ConfigError, InvalidDomainError, DimensionMismatchError,
            DegenerateMetricError, HessiansUnavailableError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAILED
    except ProxNonConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
