"""JSON scenarios: parsing, validation, serialization and task execution.

A scenario is an object with named sections.  Complex matrices are written
as ``{"re": [[...]], "im": [[...]]}`` (``im`` optional).  Example::

    {"dim": 2,
     "states": {"rho": {"re": [[0.5, 0], [0, 0.5]]}},
     "observables": {"Z": {"re": [[1, 0], [0, -1]]}},
     "measurements": {"M": {"outcomes": ["+", "-"], "values": [1, -1],
                            "effects": [{"re": [[0.75, 0], [0, 0.25]]},
                                        {"re": [[0.25, 0], [0, 0.75]]}]}},
     "tasks": [{"kind": "error", "A": "Z", "M": "M", "state": "rho"}]}

The raw arrays are kept as parsed so that serializing and re-parsing is
exact; the validated objects are built once by :meth:`Scenario.objects`.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import relations as rel
from .core import DEFAULT_TOL, DensityState, ProbDist, Tolerances, hermitian
from .errors import (ConstraintViolated, LocalizedChannel, LocalizedMeasurement, NotRepresentable,
                     decompositions, errorless_conditions, two_errors_identity)
from .joint import JointPovm, is_local_joint_measurement
from .measurement import Povm, StochasticChannel

__all__ = ["ScenarioError", "Scenario", "parse_scenario", "load_scenario", "run_tasks", "TASKS"]

SECTIONS = ("states", "observables", "measurements", "joint_measurements", "channels",
            "distributions", "functions")


class ScenarioError(ValueError):
    """Malformed scenario; the message names the offending field."""


def _fail(path, msg):
    raise ScenarioError(f"{path}: {msg}")


def _matrix(obj, path, dim):
    if not isinstance(obj, dict) or "re" not in obj:
        _fail(path, 'expected {"re": [[...]], "im": [[...]]}')
    unknown = set(obj) - {"re", "im"}
    if unknown:
        _fail(path, f"unknown keys {sorted(unknown)}")
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        _fail(path, f"non-numeric entries ({exc})")
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        _fail(path, f"expected {dim}x{dim} real and imaginary parts, got {re.shape} and {im.shape}")
    return re + 1j * im


def _vector(obj, path, n=None):
    try:
        v = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        _fail(path, f"non-numeric entries ({exc})")
    if v.ndim != 1 or (n is not None and v.shape[0] != n):
        _fail(path, f"expected a list of {n if n is not None else 'some'} numbers")
    return v


def _labels(obj, path):
    if not isinstance(obj, list) or not all(isinstance(x, str) for x in obj):
        _fail(path, "expected a list of strings")
    return list(obj)


def _enc(a):
    a = np.asarray(a)
    out = {"re": np.real(a).tolist()}
    if np.iscomplexobj(a) and np.any(np.imag(a)):
        out["im"] = np.imag(a).tolist()
    return out


def _section(data, name):
    sec = data.get(name, {})
    if not isinstance(sec, dict):
        _fail(name, "expected an object of named entries")
    return sec


@dataclass(eq=False)
class Scenario:
    """Raw scenario content.  Equality compares every array exactly."""

    dim: int
    tolerances: Tolerances = DEFAULT_TOL
    states: dict = field(default_factory=dict)
    observables: dict = field(default_factory=dict)
    measurements: dict = field(default_factory=dict)
    joint_measurements: dict = field(default_factory=dict)
    channels: dict = field(default_factory=dict)
    distributions: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    tasks: list = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return json.dumps(self.to_dict(), sort_keys=True) == json.dumps(other.to_dict(), sort_keys=True)

    def to_dict(self):
        out = {"dim": self.dim, "tolerances": self.tolerances.to_dict()}
        out["states"] = {k: _enc(v) for k, v in self.states.items()}
        out["observables"] = {k: _enc(v) for k, v in self.observables.items()}
        out["measurements"] = {
            k: {"outcomes": m["outcomes"], "effects": [_enc(e) for e in m["effects"]],
                **({"values": m["values"].tolist()} if m["values"] is not None else {})}
            for k, m in self.measurements.items()}
        out["joint_measurements"] = {
            k: {"factors": [list(f) for f in j["factors"]],
                "effects": [[_enc(e) for e in row] for row in j["effects"]],
                **({"values": [None if v is None else v.tolist() for v in j["values"]]}
                   if j["values"] is not None else {})}
            for k, j in self.joint_measurements.items()}
        out["channels"] = {k: {"in_outcomes": c["in_outcomes"], "out_outcomes": c["out_outcomes"],
                               "kernel": c["kernel"].tolist()} for k, c in self.channels.items()}
        out["distributions"] = {k: {"outcomes": d["outcomes"], "weights": d["weights"].tolist()}
                                for k, d in self.distributions.items()}
        out["functions"] = {k: v.tolist() for k, v in self.functions.items()}
        out["tasks"] = [dict(t) for t in self.tasks]
        return out

    def dumps(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    def with_tolerances(self, tol):
        s = parse_scenario(self.to_dict())
        s.tolerances = tol
        return s

    def objects(self):
        """Validated typed objects by section; raises :class:`ScenarioError` with the field path."""
        tol = self.tolerances
        obj = {name: {} for name in SECTIONS}
        for k, m in self.states.items():
            obj["states"][k] = _build(f"states.{k}", DensityState, m, tol)
        for k, a in self.observables.items():
            obj["observables"][k] = _build(f"observables.{k}", hermitian, a, tol)
        for k, m in self.measurements.items():
            obj["measurements"][k] = _build(f"measurements.{k}", Povm, np.array(m["effects"]),
                                            m["outcomes"], m["values"], tol)
        for k, j in self.joint_measurements.items():
            obj["joint_measurements"][k] = _build(f"joint_measurements.{k}", JointPovm, np.array(j["effects"]),
                                                  j["factors"], j["values"], tol)
        for k, c in self.channels.items():
            obj["channels"][k] = _build(f"channels.{k}", StochasticChannel, c["kernel"],
                                        c["in_outcomes"], c["out_outcomes"], tol)
        for k, d in self.distributions.items():
            obj["distributions"][k] = _build(f"distributions.{k}", ProbDist, d["weights"], d["outcomes"], tol)
        obj["functions"] = dict(self.functions)
        return obj


def _build(path, cls, *args):
    try:
        return cls(*args)
    except ValueError as exc:
        _fail(path, str(exc))


def parse_scenario(data):
    """Parse a scenario object tree (as loaded from JSON) and validate it."""
    if not isinstance(data, dict):
        _fail("<root>", "expected an object")
    unknown = set(data) - {"dim", "tolerances", "tasks", *SECTIONS}
    if unknown:
        _fail("<root>", f"unknown sections {sorted(unknown)}")
    dim = data.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        _fail("dim", "expected a positive integer")
    try:
        tol = Tolerances(**{**DEFAULT_TOL.to_dict(), **data.get("tolerances", {})})
    except (TypeError, ValueError) as exc:
        _fail("tolerances", str(exc))
    s = Scenario(dim, tol)
    for k, v in _section(data, "states").items():
        s.states[k] = _matrix(v, f"states.{k}", dim)
    for k, v in _section(data, "observables").items():
        s.observables[k] = _matrix(v, f"observables.{k}", dim)
    for k, v in _section(data, "measurements").items():
        p = f"measurements.{k}"
        if not isinstance(v, dict) or "effects" not in v:
            _fail(p, "expected an object with 'effects'")
        effects = [_matrix(e, f"{p}.effects[{i}]", dim) for i, e in enumerate(v["effects"])]
        outcomes = _labels(v.get("outcomes", [str(i) for i in range(len(effects))]), f"{p}.outcomes")
        values = None if v.get("values") is None else _vector(v["values"], f"{p}.values", len(effects))
        s.measurements[k] = {"outcomes": outcomes, "effects": effects, "values": values}
    for k, v in _section(data, "joint_measurements").items():
        p = f"joint_measurements.{k}"
        if not isinstance(v, dict) or "effects" not in v or "factors" not in v:
            _fail(p, "expected an object with 'factors' and 'effects'")
        factors = v["factors"]
        if not isinstance(factors, list) or len(factors) != 2:
            _fail(f"{p}.factors", "expected two label lists")
        factors = [_labels(f, f"{p}.factors[{i}]") for i, f in enumerate(factors)]
        rows = v["effects"]
        if not isinstance(rows, list) or len(rows) != len(factors[0]):
            _fail(f"{p}.effects", f"expected {len(factors[0])} rows")
        effects = []
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != len(factors[1]):
                _fail(f"{p}.effects[{i}]", f"expected {len(factors[1])} entries")
            effects.append([_matrix(e, f"{p}.effects[{i}][{j}]", dim) for j, e in enumerate(row)])
        values = v.get("values")
        if values is not None:
            if not isinstance(values, list) or len(values) != 2:
                _fail(f"{p}.values", "expected two value lists (or null entries)")
            values = [None if x is None else _vector(x, f"{p}.values[{i}]", len(factors[i]))
                      for i, x in enumerate(values)]
        s.joint_measurements[k] = {"factors": factors, "effects": effects, "values": values}
    for k, v in _section(data, "channels").items():
        p = f"channels.{k}"
        if not isinstance(v, dict) or "kernel" not in v:
            _fail(p, "expected an object with 'kernel'")
        try:
            K = np.asarray(v["kernel"], dtype=float)
        except (TypeError, ValueError) as exc:
            _fail(f"{p}.kernel", f"non-numeric entries ({exc})")
        if K.ndim != 2:
            _fail(f"{p}.kernel", "expected a matrix (rows = outputs, columns = inputs)")
        s.channels[k] = {
            "kernel": K,
            "in_outcomes": _labels(v.get("in_outcomes", [str(i) for i in range(K.shape[1])]), f"{p}.in_outcomes"),
            "out_outcomes": _labels(v.get("out_outcomes", [str(i) for i in range(K.shape[0])]), f"{p}.out_outcomes"),
        }
    for k, v in _section(data, "distributions").items():
        p = f"distributions.{k}"
        if not isinstance(v, dict) or "weights" not in v:
            _fail(p, "expected an object with 'weights'")
        w = _vector(v["weights"], f"{p}.weights")
        s.distributions[k] = {"weights": w,
                              "outcomes": _labels(v.get("outcomes", [str(i) for i in range(w.size)]), f"{p}.outcomes")}
    for k, v in _section(data, "functions").items():
        s.functions[k] = _vector(v, f"functions.{k}")
    tasks = data.get("tasks", [])
    if not isinstance(tasks, list):
        _fail("tasks", "expected a list")
    for i, t in enumerate(tasks):
        if not isinstance(t, dict) or t.get("kind") not in TASKS:
            _fail(f"tasks[{i}]", f"unknown task kind {t.get('kind') if isinstance(t, dict) else t!r}; "
                                 f"expected one of {sorted(TASKS)}")
        s.tasks.append(dict(t))
    objs = s.objects()
    for i, t in enumerate(s.tasks):
        _resolve(t, objs, f"tasks[{i}]")
    return s


def load_scenario(path):
    """Read and parse a JSON scenario file; JSON syntax errors report line and column."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_scenario(data)


# task kind -> (argument name -> section), optional argument names
_ARGS = {
    "A": "observables", "B": "observables", "state": "states",
    "M": "measurements", "N": "measurements", "J": "joint_measurements",
    "K": "channels", "p": "distributions",
    "f": "functions", "g": "functions", "a": "functions", "b": "functions",
}

TASKS = {
    "error": (("A", "M", "state"), ()),
    "error_repr": (("A", "M", "state"), ()),
    "errorless": (("A", "M", "state"), ()),
    "two_errors": (("A", "M", "state"), ()),
    "decompositions": (("A", "f", "M", "state"), ()),
    "classical_error": (("a", "K", "p"), ()),
    "classical_error_repr": (("a", "K", "p"), ()),
    "joint_certificate": (("M", "N", "J", "state"), ()),
    "relation_error": (("A", "B", "M", "state"), ()),
    "relation_error_repr": (("A", "B", "M", "state"), ()),
    "relation_representatives": (("A", "B", "f", "g", "M", "state"), ()),
    "relation_joint_error": (("A", "B", "M", "N", "J", "state"), ()),
    "relation_joint_repr": (("A", "B", "M", "N", "J", "state"), ()),
    "relation_gauge": (("A", "B", "f", "g", "M", "N", "J", "state"), ()),
    "relation_representatives_joint": (("A", "B", "f", "g", "M", "N", "J", "state"), ()),
    "classical_relations": (("a", "b", "K", "p"), ("f", "g")),
    "schrodinger_and_kr": (("A", "B", "state"), ()),
    "ozawa_chain": (("A", "B", "J", "state"), ()),
    "akg_chains": (("A", "B", "J", "state"), ()),
}


def _resolve(task, objs, path):
    required, optional = TASKS[task["kind"]]
    out = {}
    for name in required + optional:
        if name not in task:
            if name in required:
                _fail(path, f"missing argument {name!r}")
            out[name] = None
            continue
        ref = task[name]
        section = _ARGS[name]
        if ref not in objs[section]:
            _fail(f"{path}.{name}", f"unresolved reference {ref!r} in {section}")
        out[name] = objs[section][ref]
    return out


def _run_one(kind, a):
    if kind in ("error", "error_repr"):
        ctx = LocalizedMeasurement(a["M"], a["state"])
        return getattr(ctx, kind)(a["A"]).to_dict(), None
    if kind in ("classical_error", "classical_error_repr"):
        ctx = LocalizedChannel(a["K"], a["p"])
        return getattr(ctx, kind.split("_", 1)[1])(a["a"]).to_dict(), None
    if kind == "errorless":
        v = errorless_conditions(a["A"], a["M"], a["state"])
        return v.to_dict(), ("holds" if v.consistent else "violated")
    if kind == "two_errors":
        r = two_errors_identity(a["A"], a["M"], a["state"])
        ok = r.residual <= a["state"].tol.eq_tol * max(1.0, r.error_repr_sq)
        return r.to_dict(), ("holds" if ok else "violated")
    if kind == "decompositions":
        r = decompositions(a["A"], a["f"], a["M"], a["state"])
        ok = r.max_residual <= a["state"].tol.eq_tol * max(1.0, r.gauge ** 2)
        return r.to_dict(), ("holds" if ok else "violated")
    if kind == "joint_certificate":
        c = is_local_joint_measurement(a["M"], a["N"], a["J"], a["state"])
        return c.to_dict(), None
    fn = getattr(rel, kind)
    if kind in ("relation_error", "relation_error_repr"):
        out = fn(a["A"], a["B"], a["M"], a["state"])
    elif kind == "relation_representatives":
        out = fn(a["A"], a["B"], a["f"], a["g"], a["M"], a["state"])
    elif kind in ("relation_joint_error", "relation_joint_repr"):
        out = fn(a["A"], a["B"], a["M"], a["N"], a["J"], a["state"])
    elif kind in ("relation_gauge", "relation_representatives_joint"):
        out = fn(a["A"], a["B"], a["f"], a["g"], a["M"], a["N"], a["J"], a["state"])
    elif kind == "classical_relations":
        out = fn(a["a"], a["b"], a["K"], a["p"], a["f"], a["g"])
    elif kind == "schrodinger_and_kr":
        out = fn(a["A"], a["B"], a["state"])
    else:
        out = fn(a["A"], a["B"], a["J"], a["state"])
    items = out if isinstance(out, (list, tuple)) else [out]
    verdicts = {x.verdict for x in items}
    verdict = "violated" if "violated" in verdicts else ("holds" if "holds" in verdicts else "inapplicable")
    payload = [x.to_dict() for x in items] if len(items) > 1 else items[0].to_dict()
    return payload, verdict


def run_tasks(scenario):
    """Execute the tasks in order; returns the list of task result records."""
    objs = scenario.objects()
    results = []
    for i, task in enumerate(scenario.tasks):
        args = _resolve(task, objs, f"tasks[{i}]")
        record = {"index": i, "kind": task["kind"], "args": {k: v for k, v in task.items() if k != "kind"}}
        try:
            payload, verdict = _run_one(task["kind"], args)
            record["result"], record["verdict"] = payload, verdict
        except (ConstraintViolated, NotRepresentable) as exc:
            record["result"], record["verdict"] = {"error": str(exc), "type": type(exc).__name__}, "violated"
        results.append(record)
    return results
