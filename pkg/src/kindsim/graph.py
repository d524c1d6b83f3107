"""Finite connected graphs: construction, edge-list I/O and traversal."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import TAG_ERDOS_RENYI, seed_sequence

ER_RETRY_BUDGET = 1000


class GraphError(ValueError):
    pass


class InvalidSpec(GraphError):
    pass


class ConnectivityRetryExhausted(GraphError):
    pass


class ParseError(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class Disconnected(GraphError):
    pass


class EmptyGraph(GraphError):
    pass


class NoPath(GraphError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple connected graph on vertices ``0..n_vertices-1``.

    Use :meth:`from_edges` to build one; it validates every invariant.
    ``src``/``dst`` list the ``2|E|`` oriented edges in lexicographic order,
    which is the order the event kernels index into.
    """

    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...]
    label: str = field(default="")
    src: np.ndarray = field(default=None, repr=False)
    dst: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_edges(cls, n_vertices: int, edges, label: str = "") -> "Graph":
        if n_vertices < 1:
            raise EmptyGraph("graph has no vertices")
        seen = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u < 0 or v < 0 or u >= n_vertices or v >= n_vertices:
                raise GraphError(f"edge ({u}, {v}) out of range for {n_vertices} vertices")
            if u == v:
                raise SelfLoop(f"self-loop at vertex {u}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise DuplicateEdge(f"duplicate edge {key}")
            seen.add(key)
        if not seen:
            raise EmptyGraph("graph has no edges")
        ordered = tuple(sorted(seen))
        adj: list[list[int]] = [[] for _ in range(n_vertices)]
        for u, v in ordered:
            adj[u].append(v)
            adj[v].append(u)
        adjacency = tuple(tuple(sorted(a)) for a in adj)
        if not is_connected(adjacency):
            raise Disconnected(f"graph on {n_vertices} vertices is not connected")
        src = np.fromiter((x for x in range(n_vertices) for _ in adjacency[x]), dtype=np.int64)
        dst = np.fromiter((y for x in range(n_vertices) for y in adjacency[x]), dtype=np.int64)
        src.setflags(write=False)
        dst.setflags(write=False)
        return cls(n_vertices, ordered, adjacency, label or f"graph({n_vertices})", src, dst)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_oriented(self) -> int:
        return self.src.shape[0]

    def degree(self, x: int) -> int:
        return len(self.adjacency[x])

    def neighbors(self, x: int) -> tuple[int, ...]:
        return self.adjacency[x]

    def oriented_edges(self):
        return list(zip(self.src.tolist(), self.dst.tolist()))

    def adjacency_matrix(self):
        """Symmetric 0/1 adjacency as a ``scipy.sparse`` CSR array."""
        from scipy import sparse

        data = np.ones(self.n_oriented)
        return sparse.csr_array((data, (self.src, self.dst)), shape=(self.n_vertices,) * 2)

    def descriptor(self) -> dict:
        return {"label": self.label, "n_vertices": self.n_vertices, "n_edges": self.n_edges}

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n_vertices == other.n_vertices and self.edges == other.edges

    def __hash__(self):
        return hash((self.n_vertices, self.edges))


@dataclass(frozen=True)
class GraphSpec:
    """Recipe for a graph: ``complete``, ``cycle``, ``grid``, ``erdos_renyi`` or ``file``."""

    kind: str
    n: int | None = None
    width: int | None = None
    height: int | None = None
    p: float | None = None
    path: str | None = None

    def __post_init__(self):
        k = self.kind
        if k in ("complete", "cycle"):
            if self.n is None or self.n < 2:
                raise InvalidSpec(f"{k} graph needs n >= 2, got {self.n}")
            if k == "cycle" and self.n < 3:
                raise InvalidSpec("cycle needs n >= 3 (n = 2 would duplicate its edge)")
        elif k == "grid":
            if self.width is None or self.height is None or self.width < 1 or self.height < 1:
                raise InvalidSpec("grid needs positive width and height")
            if self.width * self.height < 2:
                raise InvalidSpec("grid needs at least 2 vertices")
        elif k == "erdos_renyi":
            if self.n is None or self.n < 2:
                raise InvalidSpec(f"erdos_renyi graph needs n >= 2, got {self.n}")
            if self.p is None or not (0.0 < self.p <= 1.0):
                raise InvalidSpec(f"erdos_renyi needs p in (0, 1], got {self.p}")
        elif k == "file":
            if not self.path:
                raise InvalidSpec("file graph needs a path")
        else:
            raise InvalidSpec(f"unknown graph kind {k!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "GraphSpec":
        d = dict(d)
        kind = d.pop("kind", None)
        if kind is None:
            raise InvalidSpec("graph spec is missing 'kind'")
        allowed = {"n", "width", "height", "p", "path"}
        extra = set(d) - allowed
        if extra:
            raise InvalidSpec(f"unknown graph spec fields: {sorted(extra)}")
        return cls(kind=kind, **d)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for name in ("n", "width", "height", "p", "path"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        return out

    def with_n(self, n: int) -> "GraphSpec":
        """Same family with population size ``n`` (square-ish for grids)."""
        if self.kind == "grid":
            w = int(round(n ** 0.5))
            if w * w != n:
                raise InvalidSpec(f"grid family needs a square population, got {n}")
            return GraphSpec("grid", width=w, height=w)
        if self.kind == "file":
            raise InvalidSpec("file graphs have a fixed size")
        return GraphSpec(self.kind, n=n, p=self.p)

    def __str__(self):
        if self.kind == "grid":
            return f"grid({self.width},{self.height})"
        if self.kind == "erdos_renyi":
            return f"erdos_renyi({self.n},{self.p})"
        if self.kind == "file":
            return f"file({self.path})"
        return f"{self.kind}({self.n})"


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)], f"complete({n})")


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)], f"cycle({n})")


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)], f"path({n})")


def grid_graph(width: int, height: int) -> Graph:
    edges = []
    for r in range(height):
        for c in range(width):
            v = r * width + c
            if c + 1 < width:
                edges.append((v, v + 1))
            if r + 1 < height:
                edges.append((v, v + width))
    return Graph.from_edges(width * height, edges, f"grid({width},{height})")


def erdos_renyi_graph(n: int, p: float, seed: int, retries: int = ER_RETRY_BUDGET) -> Graph:
    """G(n, p) conditioned on connectivity, by rejection over derived sub-seeds."""
    iu, ju = np.triu_indices(n, k=1)
    for attempt in range(retries):
        rng = np.random.default_rng(seed_sequence(seed, TAG_ERDOS_RENYI, attempt))
        keep = rng.random(iu.shape[0]) < p
        edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
        if not edges:
            continue
        try:
            return Graph.from_edges(n, edges, f"erdos_renyi({n},{p})")
        except Disconnected:
            continue
    raise ConnectivityRetryExhausted(
        f"no connected G({n}, {p}) sample in {retries} attempts"
    )


def generate(spec: GraphSpec, seed: int = 0) -> Graph:
    if spec.kind == "complete":
        return complete_graph(spec.n)
    if spec.kind == "cycle":
        return cycle_graph(spec.n)
    if spec.kind == "grid":
        return grid_graph(spec.width, spec.height)
    if spec.kind == "erdos_renyi":
        return erdos_renyi_graph(spec.n, spec.p, seed)
    if spec.kind == "file":
        with open(spec.path, encoding="utf-8") as fh:
            g = parse_edge_list(fh.read())
        return Graph.from_edges(g.n_vertices, g.edges, f"file({spec.path})")
    raise InvalidSpec(f"unknown graph kind {spec.kind!r}")


def parse_edge_list(text: str) -> Graph:
    """Parse the whitespace-separated edge-list format.

    One edge ``u v`` per line; ``#`` starts a comment line and blank lines are
    ignored.  Vertex indices must be dense, so any index in ``0..max`` that
    never appears leaves an isolated vertex and the graph is rejected as
    disconnected.
    """
    edges = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected two vertex indices, got {s!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer vertex in {s!r}") from None
        if u < 0 or v < 0:
            raise ParseError(f"line {lineno}: negative vertex index in {s!r}")
        edges.append((u, v))
    if not edges:
        raise EmptyGraph("edge list contains no edges")
    n = 1 + max(max(e) for e in edges)
    return Graph.from_edges(n, edges, f"edgelist({n})")


def serialize_edge_list(g: Graph) -> str:
    return "".join(f"{u} {v}\n" for u, v in g.edges)


def _bfs_parents(adjacency: Sequence[Sequence[int]], start: int) -> list[int]:
    parent = [-1] * len(adjacency)
    parent[start] = start
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in sorted(adjacency[u]):
            if parent[w] < 0:
                parent[w] = u
                queue.append(w)
    return parent


def is_connected(g) -> bool:
    """True iff every vertex is reachable from vertex 0.

    Accepts a :class:`Graph` or a bare adjacency sequence.
    """
    adjacency = getattr(g, "adjacency", g)
    if len(adjacency) == 0:
        return False
    return all(p >= 0 for p in _bfs_parents(adjacency, 0))


def shortest_path(g: Graph, x: int, y: int) -> list[int]:
    """Minimal-length path from ``x`` to ``y``; neighbors are explored in ascending order."""
    n = g.n_vertices
    if not (0 <= x < n and 0 <= y < n):
        raise GraphError(f"vertex out of range: {x}, {y}")
    if x == y:
        return [x]
    parent = _bfs_parents(g.adjacency, x)
    if parent[y] < 0:
        raise NoPath(f"no path from {x} to {y}")
    path = [y]
    while path[-1] != x:
        path.append(parent[path[-1]])
    return path[::-1]
