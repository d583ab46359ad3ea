"""Simple undirected graphs for MaxCut."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ParameterError, SchemaError


@dataclass(frozen=True)
class MaxCutGraph:
    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple(tuple(int(v) for v in e) for e in self.edges)
        seen = set()
        for e in edges:
            if len(e) != 2 or e[0] == e[1]:
                raise ParameterError(f"invalid edge {e}")
            if not all(0 <= v < self.n_vertices for v in e):
                raise ParameterError(f"edge {e} out of range for {self.n_vertices} vertices")
            key = frozenset(e)
            if key in seen:
                raise ParameterError(f"duplicate edge {e}")
            seen.add(key)
        object.__setattr__(self, "edges", edges)

    def cut_value(self, bits: str | int) -> int:
        """Number of edges cut by a bitstring (vertex 0 is the leftmost bit)."""
        if isinstance(bits, int):
            bits = format(bits, f"0{self.n_vertices}b")
        return sum(bits[i] != bits[k] for i, k in self.edges)

    def to_dict(self) -> dict:
        return {"n": self.n_vertices, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "MaxCutGraph":
        try:
            return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"graph document needs 'n' and 'edges': {exc}") from exc


def load_graph(path) -> MaxCutGraph:
    with open(path) as fh:
        return MaxCutGraph.from_dict(json.load(fh))


def cycle_graph(n: int) -> MaxCutGraph:
    return MaxCutGraph(n, tuple((i, (i + 1) % n) for i in range(n)))


# 4-vertex ring and the 5-vertex graph whose optimal cuts are
# {2,3}|{0,1,4}, {0,3}|{1,2,4} and {1,4}|{0,2,3}
RING_GRAPH_4 = cycle_graph(4)
BENCH_GRAPH_5 = MaxCutGraph(5, ((0, 1), (0, 2), (1, 2), (1, 3), (3, 4)))
