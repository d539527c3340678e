"""Command line: ``quncert verify|sweep|demo``.

Exit codes: 0 success, 1 a verdict was violated or a check failed,
2 malformed input.
"""

import argparse
import csv
import io
import json
import platform
import sys

import numpy as np

from . import __version__
from .core import DEFAULT_TOL, PAULI_X, PAULI_Y, PAULI_Z, DensityState, Tolerances
from .joint import marginals
from .oracle import random_joint_povm, sample
from .relations import nogo_check
from .scenario import ScenarioError, load_scenario, parse_scenario, run_tasks
from .sweep import run_sweep

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _tolerances(args, base=DEFAULT_TOL):
    changes = {k: v for k, v in (("rank_tol", args.tol_rank), ("eq_tol", args.tol_eq),
                                 ("ineq_tol", args.tol_ineq)) if v is not None}
    return base.replace(**changes) if changes else base


def _environment(tol, seed=None):
    return {"version": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "tolerances": tol.to_dict(), "seed": seed}


def _int_list(text):
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


# ----------------------------------------------------------------- rows

def _relation_rows(task, payload, verdict):
    items = payload if isinstance(payload, list) else [payload]
    rows = []
    for item in items:
        links = item.get("links")
        for link in links if links is not None else [item]:
            if "relation" in link and "lhs" in link:
                rows.append({"task": task, "id": link["relation"], "lhs": link["lhs"],
                             "bound": link["bound"], "slack": link["slack"], "verdict": link["verdict"]})
    if not rows:
        value = payload.get("value", "") if isinstance(payload, dict) else ""
        rows.append({"task": task, "id": task, "lhs": value, "bound": "", "slack": "",
                     "verdict": verdict or ""})
    return rows


def _rows(report):
    if "tasks" in report:
        rows = []
        for t in report["tasks"]:
            rows += _relation_rows(f"{t['index']}:{t['kind']}", t["result"], t.get("verdict"))
        return rows
    rows = []
    for name, agg in report.get("relations", {}).items():
        verdict = "violated" if agg["violated"] else ("holds" if agg["holds"] else "inapplicable")
        rows.append({"task": "sweep", "id": name, "lhs": "", "bound": "", "slack": agg["min_slack"],
                     "verdict": verdict})
    return rows


def _emit(report, args):
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, ["task", "id", "lhs", "bound", "slack", "verdict"], lineterminator="\n")
        w.writeheader()
        w.writerows(_rows(report))
        text = buf.getvalue()
    else:
        text = json.dumps(report, indent=2, default=_json_default) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


# --------------------------------------------------------------- verify

def run_verify(scenario, tol):
    """Run a parsed scenario; returns ``(report, exit_code)``."""
    if tol is not None:
        scenario = scenario.with_tolerances(tol)
    tasks = run_tasks(scenario)
    violated = [t["index"] for t in tasks if t.get("verdict") == "violated"]
    report = {"environment": _environment(scenario.tolerances), "tasks": tasks,
              "summary": {"tasks": len(tasks), "violated": violated, "passed": not violated}}
    return report, (EXIT_FAIL if violated else EXIT_OK)


def _cmd_verify(args):
    try:
        scenario = load_scenario(args.scenario)
        tol = _tolerances(args, scenario.tolerances) if _tol_given(args) else None
        report, code = run_verify(scenario, tol)
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(report, args)
    return code


def _tol_given(args):
    return any(v is not None for v in (args.tol_rank, args.tol_eq, args.tol_ineq))


# ---------------------------------------------------------------- sweep

def _cmd_sweep(args):
    tol = _tolerances(args)
    dims = _int_list(args.dims)
    if args.count < 0 or not dims or min(dims) < 2 or args.outcomes < 1 or args.jobs < 1:
        print("error: need count >= 0, dims >= 2, outcomes >= 1, jobs >= 1", file=sys.stderr)
        return EXIT_INPUT
    summary = run_sweep(args.count, args.seed, tuple(dims), args.outcomes, tol,
                        identities=not args.relations_only, jobs=args.jobs)
    report = {"environment": _environment(tol, args.seed), **summary}
    _emit(report, args)
    return EXIT_OK if summary["passed"] else EXIT_FAIL


# ----------------------------------------------------------------- demos

def _m(a):
    a = np.asarray(a, dtype=complex)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


I2 = np.eye(2)


def _noisy_z(eta, values=None):
    out = {"outcomes": ["+", "-"], "effects": [_m((I2 + eta * PAULI_Z) / 2), _m((I2 - eta * PAULI_Z) / 2)]}
    if values is not None:
        out["values"] = list(values)
    return out


def _akg_joint(eta, values):
    grid = [[_m((I2 + a * eta * PAULI_X + b * eta * PAULI_Z) / 4) for b in (1, -1)] for a in (1, -1)]
    return {"factors": [["+", "-"], ["+", "-"]], "effects": grid,
            "values": [list(values), list(values)]}


def _marginal_x(eta):
    return {"outcomes": ["+", "-"], "effects": [_m((I2 + eta * PAULI_X) / 2), _m((I2 - eta * PAULI_X) / 2)]}


DEMO_SCENARIOS = {
    "trivial-reduction": (
        "A trivial measurement learns nothing, so the error relation reduces to the "
        "Schrodinger relation: R = R0, I = I0 and the bound equals 1 here.",
        {"dim": 2,
         "states": {"up": _m((I2 + PAULI_Z) / 2)},
         "observables": {"X": _m(PAULI_X), "Y": _m(PAULI_Y)},
         "measurements": {"T": {"outcomes": ["a", "b"], "effects": [_m(0.3 * I2), _m(0.7 * I2)]}},
         "tasks": [{"kind": "relation_error", "A": "X", "B": "Y", "M": "T", "state": "up"},
                   {"kind": "schrodinger_and_kr", "A": "X", "B": "Y", "state": "up"}]},
        [("tasks.0.result.bound", 1.0), ("tasks.0.result.components.R", 0.0),
         ("tasks.0.result.components.I", 1.0), ("tasks.1.result.values.1", 1.0)]),
    "projective-errorless": (
        "Measuring Z projectively is errorless for Z over any state: all five conditions hold.",
        {"dim": 2,
         "states": {"mixed": _m(np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]]))},
         "observables": {"Z": _m(PAULI_Z)},
         "measurements": {"P": _noisy_z(1.0, (1, -1))},
         "tasks": [{"kind": "errorless", "A": "Z", "M": "P", "state": "mixed"},
                   {"kind": "error", "A": "Z", "M": "P", "state": "mixed"},
                   {"kind": "error_repr", "A": "Z", "M": "P", "state": "mixed"}]},
        [("tasks.0.result.a", True), ("tasks.0.result.b", True), ("tasks.0.result.c", True),
         ("tasks.0.result.d", True), ("tasks.0.result.e", True),
         ("tasks.1.result.value", 0.0), ("tasks.2.result.value", 0.0)]),
    "noisy-qubit": (
        "Noisy Z measurement with effects (I +- Z/2)/2 over the maximally mixed state: "
        "error sqrt(3)/2, representability error sqrt(3), gap 9/4, representative (2, -2).",
        {"dim": 2,
         "states": {"mixed": _m(I2 / 2)},
         "observables": {"Z": _m(PAULI_Z)},
         "measurements": {"M": _noisy_z(0.5)},
         "functions": {"rep": [2.0, -2.0]},
         "tasks": [{"kind": "error", "A": "Z", "M": "M", "state": "mixed"},
                   {"kind": "error_repr", "A": "Z", "M": "M", "state": "mixed"},
                   {"kind": "two_errors", "A": "Z", "M": "M", "state": "mixed"},
                   {"kind": "decompositions", "A": "Z", "f": "rep", "M": "M", "state": "mixed"},
                   {"kind": "relation_representatives", "A": "Z", "B": "Z", "f": "rep", "g": "rep",
                    "M": "M", "state": "mixed"}]},
        [("tasks.0.result.value", np.sqrt(3) / 2), ("tasks.1.result.value", np.sqrt(3)),
         ("tasks.2.result.gap_sq", 2.25), ("tasks.4.result.lhs", 4.0), ("tasks.4.result.bound", 4.0)]),
    "akg-saturation": (
        "Joint measurement (I + a X/sqrt2 + b Z/sqrt2)/4 over (I + Y)/2 saturates both "
        "representability relations: 1 = 1 and 2 = 2.",
        {"dim": 2,
         "states": {"y": _m((I2 + PAULI_Y) / 2)},
         "observables": {"X": _m(PAULI_X), "Z": _m(PAULI_Z)},
         "measurements": {"MX": _marginal_x(1 / np.sqrt(2)), "MZ": _noisy_z(1 / np.sqrt(2))},
         "joint_measurements": {"J": _akg_joint(1 / np.sqrt(2), (np.sqrt(2), -np.sqrt(2)))},
         "functions": {"rep": [np.sqrt(2), -np.sqrt(2)]},
         "tasks": [{"kind": "joint_certificate", "M": "MX", "N": "MZ", "J": "J", "state": "y"},
                   {"kind": "relation_joint_repr", "A": "X", "B": "Z", "M": "MX", "N": "MZ", "J": "J",
                    "state": "y"},
                   {"kind": "relation_representatives_joint", "A": "X", "B": "Z", "f": "rep", "g": "rep",
                    "M": "MX", "N": "MZ", "J": "J", "state": "y"},
                   {"kind": "akg_chains", "A": "X", "B": "Z", "J": "J", "state": "y"}]},
        [("tasks.0.result.holds", True), ("tasks.1.result.lhs", 1.0), ("tasks.1.result.bound", 1.0),
         ("tasks.2.result.lhs", 2.0), ("tasks.2.result.bound", 2.0)]),
    "ozawa-chain": (
        "Value-based error of the noisy Z measurement: values +-1 give 1 >= sqrt(3)/2, "
        "unbiased values +-2 give sqrt(3), equal to the representability error.",
        {"dim": 2,
         "states": {"mixed": _m(I2 / 2)},
         "observables": {"X": _m(PAULI_X), "Z": _m(PAULI_Z)},
         "joint_measurements": {
             "J1": {"factors": [["+", "-"], ["*"]], "values": [[1, -1], [0]],
                    "effects": [[_m((I2 + PAULI_Z / 2) / 2)], [_m((I2 - PAULI_Z / 2) / 2)]]},
             "J2": {"factors": [["+", "-"], ["*"]], "values": [[2, -2], [0]],
                    "effects": [[_m((I2 + PAULI_Z / 2) / 2)], [_m((I2 - PAULI_Z / 2) / 2)]]}},
         "tasks": [{"kind": "ozawa_chain", "A": "Z", "B": "X", "J": "J1", "state": "mixed"},
                   {"kind": "ozawa_chain", "A": "Z", "B": "X", "J": "J2", "state": "mixed"}]},
        [("tasks.0.result.diagnostics.ozawa_error_A", 1.0),
         ("tasks.0.result.diagnostics.error_A", np.sqrt(3) / 2),
         ("tasks.1.result.diagnostics.ozawa_error_A", np.sqrt(3))]),
    "classical-bsc": (
        "Binary symmetric channel with flip probability 1/4 on the uniform law: "
        "error sqrt(3)/2 and representability error sqrt(3).",
        {"dim": 1,
         "channels": {"K": {"in_outcomes": ["+1", "-1"], "out_outcomes": ["+1", "-1"],
                            "kernel": [[0.75, 0.25], [0.25, 0.75]]}},
         "distributions": {"p": {"outcomes": ["+1", "-1"], "weights": [0.5, 0.5]}},
         "functions": {"a": [1.0, -1.0]},
         "tasks": [{"kind": "classical_error", "a": "a", "K": "K", "p": "p"},
                   {"kind": "classical_error_repr", "a": "a", "K": "K", "p": "p"},
                   {"kind": "classical_relations", "a": "a", "b": "a", "K": "K", "p": "p"}]},
        [("tasks.0.result.value", np.sqrt(3) / 2), ("tasks.1.result.value", np.sqrt(3))]),
}

DEMOS = tuple(DEMO_SCENARIOS) + ("nogo-sweep",)


def _lookup(report, path):
    cur = report
    for part in path.split("."):
        cur = cur[int(part)] if isinstance(cur, list) else cur[part]
    return cur


def _check_expectations(report, expectations, atol=1e-9):
    checks = []
    for path, want in expectations:
        got = _lookup(report, path)
        ok = got == want if isinstance(want, bool) else abs(float(got) - float(want)) <= atol
        checks.append({"field": path, "expected": want, "got": got, "ok": bool(ok)})
    return checks


def _nogo_demo(seed, count, tol):
    rho = DensityState((I2 + PAULI_Y) / 2, tol)
    rng = np.random.default_rng(seed)
    cands = []
    for _ in range(count):
        J = random_joint_povm(rng, 2, int(rng.integers(2, 5)), int(rng.integers(2, 5)), False, tol)
        M, N = marginals(J)
        cands.append((M, N, J))
    rep = nogo_check(PAULI_X, PAULI_Z, rho, cands, threshold=1e-3)
    return rep.to_dict()


def run_demo(name, seed=0, tol=DEFAULT_TOL, count=1000, samples=10 ** 6):
    """Run a built-in fixture; returns ``(report, exit_code)``."""
    if name == "nogo-sweep":
        payload = _nogo_demo(seed, count, tol)
        ok = payload["applicable"] and not payload["errorless_candidates"] and payload["min_max_error"] >= 1e-3
        narrative = ("No certified joint measurement measures X and Z errorlessly over (I + Y)/2; "
                     f"the smallest max-error over {payload['n_certified']} certified candidates is "
                     f"{payload['min_max_error']:.4g}.")
        return ({"environment": _environment(tol, seed), "demo": name, "narrative": narrative,
                 "result": payload, "passed": bool(ok)}, EXIT_OK if ok else EXIT_FAIL)
    if name not in DEMO_SCENARIOS:
        raise KeyError(name)
    narrative, data, expectations = DEMO_SCENARIOS[name]
    data = {**data, "tolerances": tol.to_dict()}
    report, code = run_verify(parse_scenario(data), None)
    checks = _check_expectations(report, expectations)
    if name == "noisy-qubit":
        checks.append(_sampling_check(seed, samples, tol))
    report.update({"demo": name, "narrative": narrative, "checks": checks})
    report["environment"]["seed"] = seed
    ok = code == EXIT_OK and all(c["ok"] for c in checks)
    report["passed"] = ok
    return report, EXIT_OK if ok else EXIT_FAIL


def _sampling_check(seed, n, tol):
    """Sampled mean and variance of the representative (2, -2) against 0 and 4."""
    from .measurement import Povm

    M = Povm([(I2 + PAULI_Z / 2) / 2, (I2 - PAULI_Z / 2) / 2], tol=tol)
    run = sample(M, DensityState(I2 / 2, tol), n, seed, {"rep": [2.0, -2.0]})
    c = run.checks["rep"]
    return {"field": "sampling.rep", "expected": {"mean": c["mean"], "variance": c["variance"]},
            "got": {"mean": run.means["rep"], "variance": run.variances["rep"]},
            "ok": bool(c["mean_ok"] and c["var_ok"])}


def _cmd_demo(args):
    if args.name not in DEMOS:
        print(f"error: unknown demo {args.name!r}; choose from {', '.join(DEMOS)}", file=sys.stderr)
        return EXIT_INPUT
    report, code = run_demo(args.name, args.seed, _tolerances(args), count=args.count or 1000)
    if args.format == "json" and not args.output:
        print(report["narrative"], file=sys.stderr)
    _emit(report, args)
    return code


# ---------------------------------------------------------------- parser

def build_parser():
    parser = argparse.ArgumentParser(prog="quncert", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rank", type=float, default=None,
                        help=f"relative rank cutoff (default {DEFAULT_TOL.rank_tol:g})")
    common.add_argument("--tol-eq", type=float, default=None,
                        help=f"equality threshold (default {DEFAULT_TOL.eq_tol:g})")
    common.add_argument("--tol-ineq", type=float, default=None,
                        help=f"allowed negative slack (default {DEFAULT_TOL.ineq_tol:g})")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", default=None, help="write the report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run the tasks of a JSON scenario")
    p.add_argument("scenario")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="check random instances")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--dims", default="2-5", help="dimensions, e.g. 2-5 or 2,3")
    p.add_argument("--outcomes", type=int, default=8, help="max outcomes per factor")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--relations-only", action="store_true", help="skip identity and oracle checks")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("demo", parents=[common], help="run a built-in fixture")
    p.add_argument("name", help=", ".join(DEMOS))
    p.add_argument("--count", type=int, default=None, help="candidates for nogo-sweep")
    p.set_defaults(func=_cmd_demo)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        _tolerances(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
