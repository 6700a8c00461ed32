"""Byte-deterministic serialization of graphs, twists, and classes.

Class file format: a JSON object with a format version, the ambient pair,
and a list of terms sorted by canonical key, each term carrying the graph
(ordered genera, edges as vertex-index pairs under their edge id, legs as a
marking -> vertex map), kappa and psi decorations, and the coefficient in
lowest terms as "p/q".
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction

from .errors import InvalidInput
from .graphs import StableGraph, make_graph
from .strata import DecoratedStratum, TautClass, canonical_stratum

FORMAT_VERSION = 1


def graph_to_data(graph: StableGraph) -> dict:
    return {
        "vertices": list(graph.genus),
        "edges": [[a, b] for a, b in graph.edges],
        "legs": {str(m): graph.leg_home(m) for m in range(1, graph.n + 1)},
    }


def graph_from_data(data: dict) -> StableGraph:
    genus = data["vertices"]
    legs = [[] for _ in genus]
    for m, v in data["legs"].items():
        legs[int(v)].append(int(m))
    edges = [tuple(e) for e in data["edges"]]
    return make_graph(genus, legs, edges)


def twist_to_data(values) -> dict:
    return {str(e): v for e, v in values.items()}


def term_to_data(term: DecoratedStratum, coeff: Fraction) -> dict:
    kappa = {str(v): {str(a): x for a, x in vk}
             for v, vk in enumerate(term.kappa) if vk}
    psi = {}
    for m, y in sorted(term.psi_leg.items()):
        psi[f"m{m}"] = y
    for (e, s), y in sorted(term.psi_edge.items()):
        psi[f"e{e}.{s}"] = y
    return {
        "graph": graph_to_data(term.graph),
        "kappa": kappa,
        "psi": psi,
        "coeff": f"{coeff.numerator}/{coeff.denominator}",
    }


def class_to_data(cls: TautClass) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "ambient": {"g": cls.ambient[0], "n": cls.ambient[1]},
        "terms": [term_to_data(t, c) for t, c in cls.sorted_terms()],
    }


def class_to_json(cls: TautClass) -> str:
    return json.dumps(class_to_data(cls), sort_keys=True, separators=(",", ":")) + "\n"


def class_from_data(data: dict) -> TautClass:
    if data.get("format_version") != FORMAT_VERSION:
        raise InvalidInput("unsupported class format version")
    g, n = data["ambient"]["g"], data["ambient"]["n"]
    out = TautClass((g, n))
    for td in data["terms"]:
        graph = graph_from_data(td["graph"])
        kappa = {int(v): {int(a): x for a, x in vk.items()}
                 for v, vk in td["kappa"].items()}
        psi_leg = {}
        psi_edge = {}
        for key, y in td["psi"].items():
            if key.startswith("m"):
                psi_leg[int(key[1:])] = y
            else:
                e, s = key[1:].split(".")
                psi_edge[(int(e), int(s))] = y
        num, den = td["coeff"].split("/")
        s = canonical_stratum(graph.genus, graph.legs, graph.edges,
                              kappa=kappa, psi_leg=psi_leg, psi_edge=psi_edge)
        out._add(s, Fraction(int(num), int(den)))
    return out


def write_atomic(path: str, content: str) -> None:
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"
