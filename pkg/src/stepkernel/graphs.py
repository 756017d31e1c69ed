"""Finite simple graphs and the constructions used by the density calculus.

Vertices are the integers ``0..n-1``. Every constructor fixes a deterministic
labelling so that densities, rooted kernels and file outputs are reproducible.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Sequence

from .errors import CapExceededError

Edge = tuple[int, int]

SPANNING_EDGE_CAP = 20
CANONICAL_VERTEX_CAP = 8


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on ``range(vertex_count)``.

    ``edges`` is normalised to a sorted tuple of ``(u, v)`` pairs with ``u < v``,
    so equal edge sets compare (and hash) equal.
    """

    vertex_count: int
    edges: tuple[Edge, ...] = ()

    def __post_init__(self) -> None:
        n = self.vertex_count
        if not isinstance(n, int) or n < 0:
            raise ValueError(f"vertex_count must be a nonnegative integer, got {n!r}")
        seen: set[Edge] = set()
        for raw in self.edges:
            u, v = (int(x) for x in raw)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge {(u, v)} has an endpoint outside [0, {n})")
            e = (u, v) if u < v else (v, u)
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def neighbors(self) -> tuple[frozenset[int], ...]:
        nbrs: list[set[int]] = [set() for _ in range(self.vertex_count)]
        for u, v in self.edges:
            nbrs[u].add(v)
            nbrs[v].add(u)
        return tuple(frozenset(s) for s in nbrs)

    def degrees(self) -> list[int]:
        return [len(s) for s in self.neighbors]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbors[u]

    def is_connected(self) -> bool:
        if self.vertex_count <= 1:
            return True
        seen = {0}
        stack = [0]
        while stack:
            for w in self.neighbors[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.vertex_count

    def min_degree(self) -> int:
        return min(self.degrees(), default=0)

    def relabel(self, perm: Sequence[int]) -> Graph:
        """Return the graph with vertex ``v`` renamed to ``perm[v]``."""
        if sorted(perm) != list(range(self.vertex_count)):
            raise ValueError("perm must be a permutation of the vertex set")
        return Graph(self.vertex_count, tuple((perm[u], perm[v]) for u, v in self.edges))

    def __str__(self) -> str:
        return f"Graph(n={self.vertex_count}, edges={list(self.edges)})"


@dataclass(frozen=True)
class GlueSpec:
    """Independent set ``I`` of the first factor, and the root vertex that carries H2."""

    independent_set: tuple[int, ...]
    root: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "independent_set", tuple(sorted(set(self.independent_set))))

    def validate(self, h1: Graph) -> None:
        n = h1.vertex_count
        members = set(self.independent_set)
        if any(not 0 <= v < n for v in members) or not 0 <= self.root < n:
            raise ValueError("glue vertices must be vertices of H1")
        if self.root in members:
            raise ValueError("root must not belong to the independent set")
        for u, v in h1.edges:
            if u in members and v in members:
                raise ValueError(f"set {sorted(members)} is not independent in H1: edge {(u, v)}")


# -- named families ---------------------------------------------------------------


def empty(n: int) -> Graph:
    return Graph(n)


def clique(k: int) -> Graph:
    if k < 1:
        raise ValueError("clique needs k >= 1")
    return Graph(k, tuple(itertools.combinations(range(k), 2)))


def cycle(k: int) -> Graph:
    if k < 3:
        raise ValueError("cycle needs k >= 3")
    return Graph(k, tuple((i, (i + 1) % k) for i in range(k)))


def path(length: int) -> Graph:
    """Path with ``length`` edges on vertices ``0..length``."""
    if length < 0:
        raise ValueError("path length must be >= 0")
    return Graph(length + 1, tuple((i, i + 1) for i in range(length)))


def star(leaves: int) -> Graph:
    """Centre 0 joined to leaves ``1..leaves``."""
    if leaves < 0:
        raise ValueError("star needs a nonnegative number of leaves")
    return Graph(leaves + 1, tuple((0, i) for i in range(1, leaves + 1)))


def wheel(k: int) -> Graph:
    """Hub 0 joined to every vertex of the rim cycle ``1..k``.

    This is exactly the labelling produced by ``glue(clique(2), GlueSpec((0,), 1), cycle(k))``.
    """
    if k < 3:
        raise ValueError("wheel needs k >= 3")
    rim = [(1 + i, 1 + (i + 1) % k) for i in range(k)]
    spokes = [(0, i) for i in range(1, k + 1)]
    return Graph(k + 1, tuple(rim + spokes))


def diamond() -> Graph:
    """K4 minus the edge {1, 3}; vertices 0 and 2 have degree three."""
    return Graph(4, ((0, 1), (0, 2), (0, 3), (1, 2), (2, 3)))


def theta(lengths: Sequence[int]) -> Graph:
    """Generalised theta graph with hubs 0 and 1.

    ``lengths[i]`` is the number of internal vertices of the i-th path; a zero
    entry is the direct edge {0, 1} and may appear at most once.
    """
    s = [int(x) for x in lengths]
    if not s:
        raise ValueError("theta needs at least one path")
    if any(x < 0 for x in s):
        raise ValueError("path lengths must be nonnegative")
    if s.count(0) > 1:
        raise ValueError("two zero-length paths would create a double edge")
    edges: list[Edge] = []
    nxt = 2
    for internal in s:
        prev = 0
        for _ in range(internal):
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
        edges.append((prev, 1))
    return Graph(nxt, tuple(edges))


def h0() -> Graph:
    """The 6-cycle 0-1-2-3-4-5 with chords {0,4} and {1,3} (6 vertices, 8 edges)."""
    return Graph(6, tuple((i, (i + 1) % 6) for i in range(6)) + ((0, 4), (1, 3)))


# -- constructions ----------------------------------------------------------------


def subdivide(h: Graph, ell: int) -> Graph:
    """Replace every edge by a path of length ``ell + 1``.

    Original vertices keep their labels; the new internal vertices are appended
    edge by edge (in sorted edge order), each run ordered from ``u`` towards ``v``.
    """
    if ell < 1:
        raise ValueError("subdivision needs ell >= 1")
    edges: list[Edge] = []
    nxt = h.vertex_count
    for u, v in h.edges:
        prev = u
        for _ in range(ell):
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
        edges.append((prev, v))
    return Graph(nxt, tuple(edges))


def glue(h1: Graph, spec: GlueSpec, h2: Graph) -> Graph:
    """Copies of ``h1`` sharing ``spec.independent_set``, with ``h2`` placed on the root copies.

    Labelling: the shared set first (in increasing H1 order), then one block per
    vertex of ``h2``, each holding that copy's non-shared vertices in H1 order.
    """
    spec.validate(h1)
    if h2.vertex_count == 0:
        raise ValueError("H2 must have at least one vertex")
    shared = spec.independent_set
    private = [v for v in range(h1.vertex_count) if v not in set(shared)]
    k, m = len(shared), len(private)

    def image(copy: int, v: int) -> int:
        if v in shared:
            return shared.index(v)
        return k + copy * m + private.index(v)

    edges: list[Edge] = []
    for c in range(h2.vertex_count):
        edges.extend((image(c, u), image(c, v)) for u, v in h1.edges)
    edges.extend((image(c, spec.root), image(d, spec.root)) for c, d in h2.edges)
    return Graph(k + h2.vertex_count * m, tuple(edges))


def disjoint_union(g: Graph, h: Graph) -> Graph:
    off = g.vertex_count
    return Graph(off + h.vertex_count, g.edges + tuple((u + off, v + off) for u, v in h.edges))


def spanning_subgraphs(h: Graph) -> Iterator[Graph]:
    """All ``2**e(h)`` edge subsets, by increasing bitmask over ``h.edges``."""
    e = h.edge_count
    if e > SPANNING_EDGE_CAP:
        raise CapExceededError(f"{e} edges exceeds the spanning-subgraph cap of {SPANNING_EDGE_CAP}")
    for mask in range(1 << e):
        yield Graph(h.vertex_count, tuple(h.edges[i] for i in range(e) if mask >> i & 1))


def has_degree_one_vertex(h: Graph) -> bool:
    return 1 in h.degrees()


# -- isomorphism ------------------------------------------------------------------


def _refined_cells(h: Graph) -> list[list[int]]:
    """Colour refinement started from degrees; cells come in an isomorphism-invariant order."""
    colour = h.degrees()
    ncolours = len(set(colour))
    while True:
        sig = [(colour[v], tuple(sorted(colour[u] for u in h.neighbors[v]))) for v in range(h.vertex_count)]
        ranks = {s: i for i, s in enumerate(sorted(set(sig)))}
        colour = [ranks[s] for s in sig]
        if len(ranks) == ncolours:
            break
        ncolours = len(ranks)
    cells: list[list[int]] = [[] for _ in range(ncolours)]
    for v, c in enumerate(colour):
        cells[c].append(v)
    return cells


def canonical_form(h: Graph) -> bytes:
    """Byte string that is equal for two graphs iff they are isomorphic.

    Brute force over the vertex orders compatible with colour refinement; capped
    at ``CANONICAL_VERTEX_CAP`` vertices.
    """
    n = h.vertex_count
    if n > CANONICAL_VERTEX_CAP:
        raise CapExceededError(f"canonical_form supports at most {CANONICAL_VERTEX_CAP} vertices, got {n}")
    pairs = list(itertools.combinations(range(n), 2))
    adj = h.neighbors
    best = -1
    for parts in itertools.product(*(itertools.permutations(c) for c in _refined_cells(h))):
        order = [v for part in parts for v in part]
        code = 0
        for a, b in pairs:
            code = (code << 1) | (order[b] in adj[order[a]])
        if code > best:
            best = code
    nbytes = (len(pairs) + 7) // 8
    return bytes([n]) + best.to_bytes(nbytes, "big")


def is_isomorphic(g: Graph, h: Graph) -> bool:
    if g.vertex_count != h.vertex_count or g.edge_count != h.edge_count:
        return False
    if sorted(g.degrees()) != sorted(h.degrees()):
        return False
    return canonical_form(g) == canonical_form(h)


@lru_cache(maxsize=None)
def graph_classes(n: int) -> tuple[Graph, ...]:
    """One representative per isomorphism class of graphs on exactly ``n`` vertices.

    Built by adding a vertex with every possible neighbourhood to each class on
    ``n - 1`` vertices; ordered by canonical form.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > CANONICAL_VERTEX_CAP:
        raise CapExceededError(f"class enumeration is capped at {CANONICAL_VERTEX_CAP} vertices")
    if n == 0:
        return (Graph(0),)
    found: dict[bytes, Graph] = {}
    for base in graph_classes(n - 1):
        for mask in range(1 << (n - 1)):
            extra = tuple((v, n - 1) for v in range(n - 1) if mask >> v & 1)
            g = Graph(n, base.edges + extra)
            found.setdefault(canonical_form(g), g)
    return tuple(found[k] for k in sorted(found))


def connected_two_cores(max_vertices: int, min_vertices: int = 3) -> list[Graph]:
    """Connected graphs of minimum degree at least two, one per isomorphism class."""
    out = []
    for n in range(min_vertices, max_vertices + 1):
        out.extend(g for g in graph_classes(n) if g.min_degree() >= 2 and g.is_connected())
    return out


def is_theta_graph(h: Graph) -> bool:
    """True if ``h`` (ignoring isolated vertices) is a generalised theta graph.

    That is: two hubs joined by internally disjoint paths, every other vertex of
    degree two. Cycles and single paths are included.
    """
    live = [v for v in range(h.vertex_count) if h.neighbors[v]]
    if not live:
        return False
    sub = induced(h, live)
    if not sub.is_connected():
        return False
    deg = sub.degrees()
    big = [v for v, d in enumerate(deg) if d != 2]
    if not big:
        return True  # a cycle
    if len(big) != 2:
        return False
    a, b = big
    if deg[a] != deg[b]:
        return False
    # follow each edge out of a through degree-2 vertices; all walks must end at b
    for first in sub.neighbors[a]:
        prev, cur = a, first
        while cur not in (a, b):
            prev, cur = cur, next(w for w in sub.neighbors[cur] if w != prev)
        if cur != b:
            return False
    return True


def induced(h: Graph, vertices: Iterable[int]) -> Graph:
    keep = list(vertices)
    pos = {v: i for i, v in enumerate(keep)}
    return Graph(len(keep), tuple((pos[u], pos[v]) for u, v in h.edges if u in pos and v in pos))


# -- I/O --------------------------------------------------------------------------


def parse_graph(text: str) -> Graph:
    """Parse either the JSON form ``{"n": .., "edges": [[u, v], ..]}`` or the text form.

    The text form is a first line holding ``n`` followed by one ``u v`` pair per line.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        data = json.loads(stripped)
        try:
            return Graph(int(data["n"]), tuple((int(u), int(v)) for u, v in data["edges"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed graph JSON: {exc}") from exc
    lines = [ln.split("#", 1)[0].strip() for ln in stripped.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty graph file")
    n = int(lines[0])
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"expected 'u v', got {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph(n, tuple(edges))


def format_graph(h: Graph) -> str:
    return "\n".join([str(h.vertex_count)] + [f"{u} {v}" for u, v in h.edges]) + "\n"


def graph_to_json(h: Graph) -> dict:
    return {"n": h.vertex_count, "edges": [list(e) for e in h.edges]}
