"""Declarative source scenarios.

A scenario describes a multiparty source either as an explicit pmf table or
as independent base variables combined through deterministic maps (XOR,
tupling).  The latter form keeps the structured three-example sources exact:
probabilities entered as rational strings compile to Fraction masses.

Scenario dict schema::

    {"name": ...,
     "params": {"q": "1/5"},            # defaults, overridable
     "base": {"W1": {"uniform": 2},     # or {"bernoulli": "q"} / {"probs": [...]}
              "V1": {"bernoulli": "q"}},
     "parties": [[expr, ...], ...]}     # one component list per party

    expr := "VarName" | {"xor": [expr, expr, ...]}

or, for an explicit table::

    {"name": ..., "sizes": [2, 2], "pmf": {"0,0": "1/2", "1,1": "1/2"}}

Party symbols are the mixed-radix encoding of their component values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .core import Alphabet, JointDistribution
from .errors import InvalidArgumentError


@dataclass(frozen=True)
class Scenario:
    name: str
    dist: JointDistribution
    params: dict

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.dist.sizes)

    @property
    def m(self) -> int:
        return len(self.dist.parties)


def _as_prob(value) -> Fraction:
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


def _base_pmf(spec, params) -> list[Fraction]:
    if "uniform" in spec:
        k = int(spec["uniform"])
        return [Fraction(1, k)] * k
    if "bernoulli" in spec:
        p = spec["bernoulli"]
        if isinstance(p, str) and p in params:
            p = params[p]
        p = _as_prob(p)
        return [1 - p, p]
    if "probs" in spec:
        probs = [_as_prob(v) for v in spec["probs"]]
        if sum(probs) != 1:
            raise InvalidArgumentError("base variable probs do not sum to 1")
        return probs
    raise InvalidArgumentError(f"unknown base variable spec {spec}")


def _eval_expr(expr, assignment, var_sizes):
    """Evaluate one component expression; returns (value, component size)."""
    if isinstance(expr, str):
        if expr not in assignment:
            raise InvalidArgumentError(f"unknown base variable {expr!r}")
        return assignment[expr], var_sizes[expr]
    if isinstance(expr, dict) and "xor" in expr:
        value = 0
        for sub in expr["xor"]:
            v, size = _eval_expr(sub, assignment, var_sizes)
            if size != 2:
                raise InvalidArgumentError("xor needs binary operands")
            value ^= v
        return value, 2
    raise InvalidArgumentError(f"unknown expression {expr!r}")


def compile_scenario(spec: dict, **overrides) -> Scenario:
    """Compile a scenario dict to an exact JointDistribution."""
    params = dict(spec.get("params", {}))
    params.update(overrides)
    params = {k: _as_prob(v) for k, v in params.items()}
    name = spec.get("name", "scenario")

    if "pmf" in spec:
        sizes = [int(s) for s in spec["sizes"]]
        mass = {}
        for key, weight in spec["pmf"].items():
            sym = tuple(int(t) for t in str(key).split(","))
            mass[sym] = _as_prob(weight)
        dist = JointDistribution(range(1, len(sizes) + 1), sizes, mass)
        return Scenario(name, dist, params)

    var_names = list(spec["base"])
    var_pmfs = {v: _base_pmf(spec["base"][v], params) for v in var_names}
    var_sizes = {v: len(var_pmfs[v]) for v in var_names}
    party_exprs = spec["parties"]
    if len(party_exprs) < 2:
        raise InvalidArgumentError("need at least 2 parties")

    # One pass to fix per-party component sizes (independent of assignment).
    probe = {v: 0 for v in var_names}
    comp_sizes = [[_eval_expr(e, probe, var_sizes)[1] for e in comps]
                  for comps in party_exprs]
    sizes = [1 for _ in party_exprs]
    for i, comp in enumerate(comp_sizes):
        for s in comp:
            sizes[i] *= s

    mass: dict[tuple, Fraction] = {}
    for values in product(*[range(var_sizes[v]) for v in var_names]):
        assignment = dict(zip(var_names, values))
        prob = Fraction(1)
        for v in var_names:
            prob *= var_pmfs[v][assignment[v]]
        if prob == 0:
            continue
        symbol = []
        for comps, csizes in zip(party_exprs, comp_sizes):
            encoded = 0
            for expr, size in zip(comps, csizes):
                value, _ = _eval_expr(expr, assignment, var_sizes)
                encoded = encoded * size + value
            symbol.append(encoded)
        key = tuple(symbol)
        mass[key] = mass.get(key, Fraction(0)) + prob
    dist = JointDistribution(range(1, len(sizes) + 1), sizes, mass)
    return Scenario(name, dist, params)


_EX1 = {
    "name": "ex1",
    "params": {"q": "1/5"},
    "base": {"W1": {"uniform": 2}, "V1": {"bernoulli": "q"}},
    "parties": [["W1"], [{"xor": ["W1", "V1"]}], ["V1"]],
}

_EX2 = {
    "name": "ex2",
    "params": {"q": "1/5"},
    "base": {"W1": {"uniform": 2}, "W2": {"uniform": 2},
             "V1": {"bernoulli": "q"}, "V2": {"bernoulli": "q"}},
    "parties": [["W1", "W2"],
                [{"xor": ["W1", "V1"]}, "W2"],
                [{"xor": ["W2", "V2"]}]],
}

_EX3 = {
    "name": "ex3",
    "params": {"q": "1/5"},
    "base": {"W1": {"uniform": 2}, "W2": {"uniform": 2},
             "W3": {"uniform": 2},
             "V1": {"bernoulli": "q"}, "V2": {"bernoulli": "q"}},
    "parties": [["W1", "W2"],
                [{"xor": ["W1", "V1"]}, "W2"],
                [{"xor": ["W2", "V2"]}],
                ["W3"]],
}

BUILTIN_SPECS = {"ex1": _EX1, "ex2": _EX2, "ex3": _EX3}


def get_scenario(name: str, **overrides) -> Scenario:
    """Look up a built-in scenario by name (ex1, ex2, ex3)."""
    if name not in BUILTIN_SPECS:
        raise InvalidArgumentError(
            f"unknown scenario {name!r}; built-ins: {sorted(BUILTIN_SPECS)}")
    return compile_scenario(BUILTIN_SPECS[name], **overrides)


def load_scenario(path: str, **overrides) -> Scenario:
    """Load a scenario from a JSON file."""
    with open(path) as f:
        spec = json.load(f)
    return compile_scenario(spec, **overrides)
