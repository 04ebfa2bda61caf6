"""Compatibility graphs and the structural analyses the matching model relies on.

Vertices carry arbitrary string names but every algorithm works on the
indices ``0..n-1`` in declaration order. Words are tuples of indices.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import InputError

MAX_VERTICES = 20


class CompatibilityGraph:
    """A simple connected undirected graph on at most 20 vertices.

    >>> g = CompatibilityGraph.from_edges("1234", [("1", "2"), ("2", "3"), ("2", "4"), ("3", "4")])
    >>> g.format_word(sorted(g.neighbors(g.index("2"))))
    '134'
    """

    __slots__ = ("vertices", "adj", "_index", "_edges", "adj_matrix")

    def __init__(self, vertices: Sequence[str], edges: Iterable[tuple[str, str]]):
        names = tuple(str(v) for v in vertices)
        if not names:
            raise InputError("graph needs at least one vertex")
        if len(set(names)) != len(names):
            raise InputError("duplicate vertex names")
        if len(names) > MAX_VERTICES:
            raise InputError(f"graphs are capped at {MAX_VERTICES} vertices, got {len(names)}")
        index = {name: i for i, name in enumerate(names)}
        nbrs: list[set[int]] = [set() for _ in names]
        seen = set()
        for edge in edges:
            if len(edge) != 2:
                raise InputError(f"edge {edge!r} must have two endpoints")
            a, b = (str(x) for x in edge)
            for x in (a, b):
                if x not in index:
                    raise InputError(f"edge endpoint {x!r} is not a vertex")
            i, j = index[a], index[b]
            if i == j:
                raise InputError(f"self-loop at {a!r}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise InputError(f"parallel edge {a!r}-{b!r}")
            seen.add(key)
            nbrs[i].add(j)
            nbrs[j].add(i)
        self.vertices = names
        self._index = index
        self.adj = tuple(frozenset(s) for s in nbrs)
        self._edges = tuple(sorted(seen))
        self.adj_matrix = tuple(tuple(j in s for j in range(len(names))) for s in nbrs)
        if not _connected(self.adj):
            raise InputError("compatibility graph must be connected")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(cls, vertices, edges):
        return cls(list(vertices), edges)

    @classmethod
    def from_json(cls, data):
        if isinstance(data, (str, Path)):
            try:
                data = json.loads(Path(data).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read graph file: {exc}") from exc
        if not isinstance(data, dict) or "vertices" not in data or "edges" not in data:
            raise InputError('graph JSON needs "vertices" and "edges"')
        return cls(data["vertices"], [tuple(e) for e in data["edges"]])

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [[self.vertices[i], self.vertices[j]] for i, j in self._edges],
        }

    # -- basic queries ----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self._edges

    def index(self, name) -> int:
        try:
            return self._index[str(name)]
        except KeyError:
            raise InputError(f"unknown vertex {name!r}") from None

    def name(self, i: int) -> str:
        return self.vertices[i]

    def neighbors(self, i: int) -> frozenset[int]:
        return self.adj[i]

    def adjacent(self, i: int, j: int) -> bool:
        return j in self.adj[i]

    def check_vertex(self, i) -> int:
        if not isinstance(i, int) or not 0 <= i < self.n:
            raise InputError(f"unknown vertex index {i!r}")
        return i

    # -- words ------------------------------------------------------------

    def parse_word(self, text) -> tuple[int, ...]:
        """Read a word from names.

        Accepts a sequence of names, a string with separators (space or
        comma), or a bare string when every vertex name is one character.
        """
        if isinstance(text, str):
            text = text.strip()
            if not text or text in ("∅", "-"):
                return ()
            if any(sep in text for sep in " ,"):
                parts = [p for p in text.replace(",", " ").split() if p]
            elif all(len(v) == 1 for v in self.vertices):
                parts = list(text)
            else:
                parts = [text]
        else:
            parts = list(text)
        return tuple(self.index(p) for p in parts)

    def format_word(self, word: Iterable[int]) -> str:
        names = [self.vertices[i] for i in word]
        if all(len(v) == 1 for v in self.vertices):
            return "".join(names)
        return " ".join(names)

    def word_names(self, word: Iterable[int]) -> list[str]:
        return [self.vertices[i] for i in word]

    def is_admissible(self, word: Sequence[int]) -> bool:
        """True when no two letters of ``word`` are adjacent."""
        letters = set(word)
        return all(not (self.adj[a] & letters) for a in letters)

    def __eq__(self, other):
        return (
            isinstance(other, CompatibilityGraph)
            and self.vertices == other.vertices
            and self._edges == other._edges
        )

    def __hash__(self):
        return hash((self.vertices, self._edges))

    def __repr__(self):
        es = ", ".join(f"{self.vertices[i]}-{self.vertices[j]}" for i, j in self._edges)
        return f"CompatibilityGraph(V={list(self.vertices)}, E=[{es}])"


def _connected(adj) -> bool:
    seen = {0}
    todo = [0]
    while todo:
        for j in adj[todo.pop()]:
            if j not in seen:
                seen.add(j)
                todo.append(j)
    return len(seen) == len(adj)


@dataclass(frozen=True)
class IndependentSet:
    members: frozenset
    maximal: bool

    def sorted(self) -> tuple[int, ...]:
        return tuple(sorted(self.members))


def neighborhood(g: CompatibilityGraph, u: Iterable[int]) -> frozenset[int]:
    """E(U): vertices adjacent to at least one member of ``u``."""
    out: set[int] = set()
    for i in u:
        out |= g.adj[g.check_vertex(i)]
    return frozenset(out)


def independent_sets(g: CompatibilityGraph) -> list[IndependentSet]:
    """All non-empty independent sets in shortlex order of their member lists."""
    found: list[tuple[int, ...]] = []

    def grow(current: list[int], allowed: frozenset):
        for v in sorted(allowed):
            if v <= (current[-1] if current else -1):
                continue
            nxt = current + [v]
            found.append(tuple(nxt))
            grow(nxt, allowed - g.adj[v] - {v})

    grow([], frozenset(range(g.n)))
    found.sort(key=lambda s: (len(s), s))
    out = []
    for s in found:
        members = frozenset(s)
        blocked = members | neighborhood(g, members)
        out.append(IndependentSet(members, len(blocked) == g.n))
    return out


def is_bipartite(g: CompatibilityGraph) -> tuple[bool, Optional[tuple[frozenset, frozenset]]]:
    """Return ``(True, (side0, side1))`` for a bipartite graph, else ``(False, None)``."""
    color = [-1] * g.n
    color[0] = 0
    todo = deque([0])
    while todo:
        u = todo.popleft()
        for v in g.adj[u]:
            if color[v] < 0:
                color[v] = 1 - color[u]
                todo.append(v)
            elif color[v] == color[u]:
                return False, None
    sides = (
        frozenset(i for i in range(g.n) if color[i] == 0),
        frozenset(i for i in range(g.n) if color[i] == 1),
    )
    return True, sides


def separability_order(g: CompatibilityGraph) -> Optional[tuple[int, list[frozenset]]]:
    """Partition into p >= 2 maximal independent sets with all cross pairs adjacent.

    Such a partition exists exactly when non-adjacency is an equivalence
    relation, its classes being the parts.
    """
    parts: list[frozenset] = []
    placed = [False] * g.n
    for i in range(g.n):
        if placed[i]:
            continue
        part = frozenset(j for j in range(g.n) if j == i or j not in g.adj[i])
        for j in part:
            if placed[j]:
                return None
            # every member must see the same non-neighbourhood
            if frozenset(k for k in range(g.n) if k == j or k not in g.adj[j]) != part:
                return None
            placed[j] = True
        parts.append(part)
    if len(parts) < 2:
        return None
    return len(parts), parts


def _bfs(g: CompatibilityGraph, source: int):
    dist = [-1] * g.n
    parent = [-1] * g.n
    dist[source] = 0
    todo = deque([source])
    while todo:
        u = todo.popleft()
        for v in sorted(g.adj[u]):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                parent[v] = u
                todo.append(v)
    return dist, parent


def _path(parent, target) -> list[int]:
    path = [target]
    while parent[path[-1]] >= 0:
        path.append(parent[path[-1]])
    return path[::-1]


def shortest_path(g: CompatibilityGraph, a: int, b: int) -> list[int]:
    _, parent = _bfs(g, a)
    return _path(parent, b)


def distance(g: CompatibilityGraph, a: int, b: int) -> int:
    return _bfs(g, a)[0][b]


def shortest_odd_cycle(g: CompatibilityGraph) -> Optional[tuple[int, ...]]:
    """A shortest odd cycle (hence induced), found by BFS from every vertex."""
    best = None
    for s in range(g.n):
        dist, parent = _bfs(g, s)
        for u, v in g.edges:
            if dist[u] != dist[v]:
                continue
            length = 2 * dist[u] + 1
            if best is not None and length >= len(best):
                continue
            left, right = _path(parent, u), _path(parent, v)
            cycle = left + right[:0:-1]
            if len(set(cycle)) == len(cycle) == length:
                best = tuple(cycle)
    return best


def spanning_odd_cycle(g: CompatibilityGraph) -> Optional[tuple[int, ...]]:
    """Closed walk of odd length through every vertex, or None if bipartite.

    Starts from a shortest odd cycle and adds an out-and-back excursion to
    each vertex still uncovered, in ascending order.
    """
    cycle = shortest_odd_cycle(g)
    if cycle is None:
        return None
    walk = list(cycle)
    covered = set(cycle)
    root = cycle[0]
    _, parent = _bfs(g, root)
    for x in range(g.n):
        if x in covered:
            continue
        path = _path(parent, x)  # root ... x
        excursion = [root] + path[1:] + path[-2:0:-1]
        walk.extend(excursion)
        covered.update(path)
    return tuple(walk)


def is_closed_walk(g: CompatibilityGraph, walk: Sequence[int]) -> bool:
    n = len(walk)
    return n > 0 and all(walk[(k + 1) % n] in g.adj[walk[k]] for k in range(n))


# -- graphs used throughout the docs and tests --------------------------------

def paw() -> CompatibilityGraph:
    """Triangle 2-3-4 with a pendant vertex 1 attached to 2."""
    return CompatibilityGraph("1234", [("1", "2"), ("2", "3"), ("2", "4"), ("3", "4")])


def complete(n: int) -> CompatibilityGraph:
    names = [str(i + 1) for i in range(n)]
    return CompatibilityGraph(names, [(a, b) for k, a in enumerate(names) for b in names[k + 1:]])


def single_edge() -> CompatibilityGraph:
    return CompatibilityGraph("12", [("1", "2")])


def octahedron() -> CompatibilityGraph:
    """Complete tripartite graph on {1,4}, {2,5}, {3,6}: separable of order 3."""
    names = "123456"
    blocks = {"1": 0, "4": 0, "2": 1, "5": 1, "3": 2, "6": 2}
    edges = [(a, b) for k, a in enumerate(names) for b in names[k + 1:] if blocks[a] != blocks[b]]
    return CompatibilityGraph(names, edges)


def cycle_graph(n: int) -> CompatibilityGraph:
    names = [str(i + 1) for i in range(n)]
    return CompatibilityGraph(names, [(names[i], names[(i + 1) % n]) for i in range(n)])
