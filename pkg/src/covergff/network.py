"""Finite weighted networks.

A :class:`Network` holds a dense symmetric conductance matrix over vertices
``0..n-1`` plus a distinguished root.  Diagonal entries are self-loop
conductances.  Graphs without explicit weights follow the unit convention:
every edge has conductance 1 and every self-loop conductance 2.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class NetworkError(ValueError):
    """Base class for invalid network input."""


class ParseError(NetworkError):
    pass


class NonPositiveConductanceError(NetworkError):
    pass


class DisconnectedError(NetworkError):
    pass


class RootOutOfRangeError(NetworkError):
    pass


class NotATreeError(NetworkError):
    pass


@dataclass(frozen=True, eq=False)
class Network:
    """Connected network with symmetric conductances and a root vertex."""

    conductance: np.ndarray
    root: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        c = np.array(self.conductance, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] == 0:
            raise NetworkError("conductance must be a non-empty square matrix")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise NonPositiveConductanceError("conductances must be finite and nonnegative")
        if not np.array_equal(c, c.T):
            raise NetworkError("conductance matrix is not symmetric")
        n = c.shape[0]
        if not 0 <= int(self.root) < n:
            raise RootOutOfRangeError(f"root {self.root} outside 0..{n - 1}")
        if n > 1 and not _connected(c > 0):
            raise DisconnectedError("support of the conductances is not connected")
        if np.any(c.sum(axis=1) <= 0):
            raise NetworkError("every vertex needs positive total conductance")
        c.setflags(write=False)
        object.__setattr__(self, "conductance", c)
        object.__setattr__(self, "root", int(self.root))

    @property
    def n(self) -> int:
        return self.conductance.shape[0]

    @property
    def vertex_conductance(self) -> np.ndarray:
        """c_v, self-loop included."""
        return self.conductance.sum(axis=1)

    @property
    def check_conductance(self) -> np.ndarray:
        """c_v - c_vv: rate of leaving v per unit local time."""
        return self.vertex_conductance - np.diag(self.conductance)

    @property
    def total_conductance(self) -> float:
        """Sum of c_v; equals 2|E| under the unit convention."""
        return float(self.conductance.sum())

    @property
    def edge_count(self) -> int:
        """Number of edges; a self-loop counts once."""
        return int(np.count_nonzero(np.triu(self.conductance)))

    @property
    def adjacency(self) -> np.ndarray:
        """Boolean adjacency over distinct neighbours (no self-loops)."""
        if "adj" not in self._cache:
            a = self.conductance > 0
            np.fill_diagonal(a, False)
            a.setflags(write=False)
            self._cache["adj"] = a
        return self._cache["adj"]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n > 1 else 0

    def neighbors(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[v])

    def has_self_loops(self) -> bool:
        return bool(np.any(np.diag(self.conductance) > 0))

    def is_unit(self) -> bool:
        """True if all weights follow the unit convention."""
        c = self.conductance
        off = c[self.adjacency]
        return bool(np.all(off == 1.0) and np.all(np.isin(np.diag(c), (0.0, 2.0))))

    def edges(self) -> list[tuple[int, int, float]]:
        iu, ju = np.nonzero(np.triu(self.conductance))
        return [(int(i), int(j), float(self.conductance[i, j])) for i, j in zip(iu, ju)]

    def with_root(self, root: int) -> "Network":
        return Network(self.conductance, root)


def _connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for u in np.flatnonzero(adj[v]):
            if not seen[u]:
                seen[u] = True
                queue.append(u)
    return bool(seen.all())


# ---------------------------------------------------------------- file format


def load_network(text: str, root: int = 0) -> Network:
    """Parse an edge list of ``u v c`` lines.

    Blank lines and ``#`` comments are ignored.  Repeated pairs add their
    conductances; ``u u c`` adds ``c`` to the self-loop at ``u``.
    """
    triples = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: expected 'u v c', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
            c = float(parts[2])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        if u < 0 or v < 0:
            raise ParseError(f"line {lineno}: negative vertex index")
        if not (c > 0) or not math.isfinite(c):
            raise NonPositiveConductanceError(f"line {lineno}: conductance must be positive, got {c}")
        triples.append((u, v, c))
    if not triples:
        raise ParseError("no edges")
    return from_edges(triples, root=root)


def read_network(path: str | Path, root: int = 0) -> Network:
    return load_network(Path(path).read_text(), root=root)


def dumps(net: Network) -> str:
    """Serialise as sorted ``u v c`` lines, 17 significant digits."""
    return "".join(f"{u} {v} {c:.17g}\n" for u, v, c in net.edges())


def write_network(net: Network, path: str | Path) -> None:
    Path(path).write_text(dumps(net))


def from_edges(edges, n: int | None = None, root: int = 0) -> Network:
    """Build a network from ``(u, v)`` or ``(u, v, c)`` tuples.

    Pairs without a weight use the unit convention (2 for self-loops).
    """
    triples = []
    for e in edges:
        if len(e) == 2:
            u, v = e
            c = 2.0 if u == v else 1.0
        else:
            u, v, c = e
        triples.append((int(u), int(v), float(c)))
    size = max(max(u, v) for u, v, _ in triples) + 1
    if n is not None:
        if n < size:
            raise NetworkError(f"edge endpoint beyond n={n}")
        size = n
    if not 0 <= root < size:
        raise RootOutOfRangeError(f"root {root} outside 0..{size - 1}")
    c = np.zeros((size, size))
    for u, v, w in triples:
        if u == v:
            c[u, u] += w
        else:
            c[u, v] += w
            c[v, u] += w
    return Network(c, root)


# ------------------------------------------------------------ graph families


def single_edge() -> Network:
    return from_edges([(0, 1)])


def path_graph(n: int, root: int = 0) -> Network:
    if n < 2:
        raise NetworkError("path needs at least 2 vertices")
    return from_edges([(i, i + 1) for i in range(n - 1)], root=root)


def cycle_graph(n: int, root: int = 0) -> Network:
    return from_edges([(i, (i + 1) % n) for i in range(n)], root=root)


def star_graph(leaves: int, root: int = 0) -> Network:
    return from_edges([(0, i) for i in range(1, leaves + 1)], root=root)


def complete_graph(n: int, root: int = 0) -> Network:
    return from_edges([(i, j) for i in range(n) for j in range(i + 1, n)], root=root)


def binary_tree(depth: int) -> Network:
    """Complete binary tree of the given depth, rooted at its top vertex 0."""
    n = 2 ** (depth + 1) - 1
    return from_edges([((i - 1) // 2, i) for i in range(1, n)])


def random_tree(n: int, seed: int = 0, max_degree: int | None = None) -> Network:
    """Random recursive tree: vertex i attaches to a uniform earlier vertex.

    With ``max_degree`` the attachment is restricted to vertices whose degree
    is still below the cap.
    """
    rng = np.random.default_rng(seed)
    deg = np.zeros(n, dtype=int)
    edges = []
    for i in range(1, n):
        pool = np.arange(i)
        if max_degree is not None:
            pool = pool[deg[:i] < max_degree]
        p = int(rng.choice(pool))
        edges.append((p, i))
        deg[p] += 1
        deg[i] += 1
    return from_edges(edges)


def ladder_graph(rungs: int) -> Network:
    """2 x rungs grid; maximum degree 3."""
    edges = []
    for i in range(rungs):
        edges.append((2 * i, 2 * i + 1))
        if i + 1 < rungs:
            edges.append((2 * i, 2 * i + 2))
            edges.append((2 * i + 1, 2 * i + 3))
    return from_edges(edges)


FAMILIES = {
    "edge": lambda: single_edge(),
    "path": lambda n: path_graph(int(n)),
    "cycle": lambda n: cycle_graph(int(n)),
    "star": lambda k: star_graph(int(k)),
    "complete": lambda n: complete_graph(int(n)),
    "binary-tree": lambda d: binary_tree(int(d)),
    "random-tree": lambda n, s=0: random_tree(int(n), int(s)),
    "ladder": lambda k: ladder_graph(int(k)),
}


def resolve_network(spec: str, root: int | None = None) -> Network:
    """Load a network from a file path or a family spec like ``path:200``."""
    p = Path(spec)
    if p.exists():
        return read_network(p, root=root or 0)
    name, _, args = spec.partition(":")
    if name not in FAMILIES:
        raise NetworkError(f"no such file or graph family: {spec!r}")
    net = FAMILIES[name](*[a for a in args.split(",") if a])
    return net.with_root(root) if root is not None else net


# ---------------------------------------------------------- structural queries


def connected_ordering(net: Network) -> list[int]:
    """Breadth-first order from the root, ties broken by ascending index.

    Each vertex after the first is adjacent to some earlier one.
    """
    order = [net.root]
    seen = {net.root}
    queue = deque(order)
    adj = net.adjacency
    while queue:
        v = queue.popleft()
        for u in np.flatnonzero(adj[v]):
            u = int(u)
            if u not in seen:
                seen.add(u)
                order.append(u)
                queue.append(u)
    return order


def is_tree(net: Network) -> bool:
    return net.edge_count == net.n - 1 and not net.has_self_loops()


def tree_parents(net: Network) -> np.ndarray:
    """Parent of every vertex, oriented toward the root (root maps to -1)."""
    if not is_tree(net):
        raise NotATreeError("network is not a tree")
    parent = np.full(net.n, -1)
    order = connected_ordering(net)
    seen = {net.root}
    for v in order:
        for u in net.neighbors(v):
            u = int(u)
            if u not in seen:
                parent[u] = v
                seen.add(u)
    return parent


def hop_diameter(net: Network) -> int:
    """Diameter in number of edges."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import shortest_path

    dist = shortest_path(csr_matrix(net.adjacency), unweighted=True, directed=False)
    return int(dist.max())
