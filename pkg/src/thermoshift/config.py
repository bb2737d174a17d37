"""Reading and writing shift, potential, measure and itinerary files.

Shift definitions and measures are JSON; potentials are plain text with a
header line ``alphabet <p> depth <r>`` followed by ``<word> <value>`` lines.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from thermoshift.edit_metric import GoodSet
from thermoshift.errors import ConfigError, DomainError
from thermoshift.measures import MarkovMeasure, Potential, bernoulli, stationary_vector
from thermoshift.moran import Itinerary
from thermoshift.shift_spaces import SFT, BetaShift, FullShift, GapSet, SGapShift, Subshift, to_word, word_str


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing field {key!r}")
    return d[key]


# -- shifts ---------------------------------------------------------------------


def parse_gaps(spec) -> GapSet:
    if isinstance(spec, list):
        return GapSet.finite(spec)
    if isinstance(spec, dict):
        rule = _require(spec, "rule", "gap set")
        if rule == "arithmetic":
            return GapSet.arithmetic(int(spec.get("start", 0)), int(_require(spec, "step", "gap set")))
        if rule == "cofinite":
            return GapSet.cofinite(spec.get("exclude", []))
        if rule == "naturals":
            return GapSet.naturals()
    raise ConfigError(f"unrecognised gap set {spec!r}")


def shift_from_dict(d: dict) -> Subshift:
    kind = _require(d, "kind", "shift")
    try:
        if kind == "full":
            return FullShift(int(_require(d, "alphabet", "full shift")))
        if kind == "sft":
            return SFT(int(_require(d, "alphabet", "sft")), tuple(_require(d, "forbidden", "sft")))
        if kind == "beta":
            return BetaShift(str(_require(d, "beta", "beta shift")))
        if kind == "sgap":
            return SGapShift(parse_gaps(_require(d, "gaps", "sgap shift")), bool(d.get("zero_point", False)))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown shift kind {kind!r}")


def good_set_from_dict(X: Subshift, d: dict | None) -> GoodSet:
    if d is None:
        return GoodSet(X)
    kind = _require(d, "kind", "good set")
    if kind == "explicit":
        return GoodSet(X, kind, words=frozenset(_require(d, "words", "good set")))
    if kind == "whole":
        return GoodSet(X)
    return GoodSet(X, kind, word=_require(d, "word", "good set"))


def shift_to_dict(X: Subshift, good: GoodSet | None = None) -> dict:
    d = dict(X.description())
    if good is not None and good.kind != "whole":
        d["good_set"] = good.description()
    return d


def load_shift(path) -> tuple[Subshift, GoodSet]:
    d = _load_json(path)
    X = shift_from_dict(d)
    return X, good_set_from_dict(X, d.get("good_set"))


def dump_shift(X: Subshift, good: GoodSet | None = None) -> str:
    return canonical_json(shift_to_dict(X, good))


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


# -- potentials -------------------------------------------------------------------


def parse_potential(text: str) -> Potential:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ConfigError("empty potential file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "alphabet" or head[2] != "depth":
        raise ConfigError("potential header must read 'alphabet <p> depth <r>'")
    p, r = int(head[1]), int(head[3])
    values = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ConfigError(f"bad potential line {ln!r}")
        w = to_word(parts[0], p)
        if len(w) != r:
            raise ConfigError(f"word {parts[0]} does not have length {r}")
        values[w] = float(parts[1])
    return Potential.from_dict(p, r, values)


def format_potential(phi: Potential) -> str:
    out = [f"alphabet {phi.p} depth {phi.depth}"]
    for idx in np.ndindex(*phi.table.shape):
        v = phi.table[idx]
        if not np.isnan(v):
            out.append(f"{word_str(idx)} {float(v)!r}")
    return "\n".join(out) + "\n"


def load_potential(path) -> Potential:
    try:
        return parse_potential(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc


# -- measures ---------------------------------------------------------------------


def measure_from_dict(d: dict) -> MarkovMeasure:
    if "bernoulli" in d:
        return bernoulli(d["bernoulli"])
    p = int(_require(d, "alphabet", "measure"))
    states = [to_word(s, p) for s in _require(d, "states", "measure")]
    index = {s: i for i, s in enumerate(states)}
    M = np.zeros((len(states), len(states)))
    for src, dst, prob in _require(d, "transitions", "measure"):
        try:
            M[index[to_word(src, p)], index[to_word(dst, p)]] = float(prob)
        except KeyError as exc:
            raise ConfigError(f"transition mentions an unknown state {exc.args[0]!r}") from exc
    try:
        return MarkovMeasure.from_matrix(p, states, M, d.get("stationary"))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def measure_to_dict(mu: MarkovMeasure) -> dict:
    states = mu.states
    M = mu.transition_matrix()
    trans = [[word_str(states[i]), word_str(states[j]), float(M[i, j])] for i, j in zip(*np.nonzero(M))]
    return {
        "alphabet": mu.p,
        "states": [word_str(s) for s in states],
        "transitions": trans,
        "stationary": [float(v) for v in stationary_vector(M)],
    }


def load_measure(path) -> MarkovMeasure:
    return measure_from_dict(_load_json(path))


def itinerary_from_dict(X: Subshift, d: dict) -> Itinerary:
    measures = tuple(measure_from_dict(m) for m in _require(d, "measures", "itinerary"))
    return Itinerary(X, measures, int(d.get("depth", 2)), d.get("chain_bound"))


def load_itinerary(X: Subshift, path) -> Itinerary:
    try:
        return itinerary_from_dict(X, _load_json(path))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
