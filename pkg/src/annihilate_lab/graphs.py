"""Graph geometries, sites, and random-walk kernels.

Four geometries are supported: the integer line, Z^d, the torus
(Z/2rZ)^d with canonical representatives in (-r, r], and the d-ary
root-directed subtree of the bidirected 2d-regular tree.

Sites are coordinate tuples (lattice, torus) or words over {0..d-1}
(tree, root = empty word).  Tree walkers that leave the root-directed
subtree can never return or interact with anything that matters to
root observables, so they are absorbed into the ESCAPED marker.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass


class _Escaped:
    """Singleton marker for tree walkers that left the subtree."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ESCAPED"


ESCAPED = _Escaped()

Site = tuple  # coordinate vector or tree word


@dataclass(frozen=True)
class GraphSpec:
    """Geometry descriptor: line | lattice:d | torus:d:r | bitree:d:n."""

    kind: str
    dim: int = 1        # lattice/torus dimension; tree branching d
    radius: int = 0     # torus halfwidth r
    depth: int = 0      # tree depth n

    def __post_init__(self):
        if self.kind not in ("line", "lattice", "torus", "bitree"):
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.dim <= 0:
            raise ValueError("dimension must be positive")
        if self.kind == "torus" and self.radius <= 0:
            raise ValueError("torus halfwidth r must be positive")
        if self.kind == "bitree":
            if self.dim < 2:
                raise ValueError("bidirected tree requires branching d >= 2")
            if self.depth < 0:
                raise ValueError("tree depth must be nonnegative")

    @classmethod
    def line(cls) -> "GraphSpec":
        return cls("line")

    @classmethod
    def lattice(cls, d: int) -> "GraphSpec":
        return cls("lattice", dim=d)

    @classmethod
    def torus(cls, d: int, r: int) -> "GraphSpec":
        return cls("torus", dim=d, radius=r)

    @classmethod
    def bitree(cls, d: int, n: int) -> "GraphSpec":
        return cls("bitree", dim=d, depth=n)

    @classmethod
    def parse(cls, text: str) -> "GraphSpec":
        """Parse the config syntax: line | lattice:d | torus:d:r | bitree:d:n."""
        parts = text.strip().split(":")
        kind = parts[0]
        try:
            if kind == "line" and len(parts) == 1:
                return cls.line()
            if kind == "lattice" and len(parts) == 2:
                return cls.lattice(int(parts[1]))
            if kind == "torus" and len(parts) == 3:
                return cls.torus(int(parts[1]), int(parts[2]))
            if kind == "bitree" and len(parts) == 3:
                return cls.bitree(int(parts[1]), int(parts[2]))
        except ValueError as exc:
            raise ValueError(f"bad graph spec {text!r}") from exc
        raise ValueError(f"bad graph spec {text!r}")

    def format(self) -> str:
        if self.kind == "line":
            return "line"
        if self.kind == "lattice":
            return f"lattice:{self.dim}"
        if self.kind == "torus":
            return f"torus:{self.dim}:{self.radius}"
        return f"bitree:{self.dim}:{self.depth}"


class Graph:
    """Immutable graph handle: root, kernel sampling, distances."""

    spec: GraphSpec
    root: Site
    n_directions: int

    def step(self, site: Site, k: int) -> Site:
        """Deterministic kernel step along direction index k."""
        raise NotImplementedError

    def distance_to_root(self, site: Site) -> int:
        raise NotImplementedError


class LatticeGraph(Graph):
    def __init__(self, spec: GraphSpec):
        self.spec = spec
        self.d = spec.dim
        self.root = (0,) * self.d
        self.n_directions = 2 * self.d

    def step(self, site: Site, k: int) -> Site:
        if site is ESCAPED:
            raise ValueError("cannot step an escaped walker")
        axis, sign = divmod(k, 2)
        delta = 1 if sign == 0 else -1
        new = list(site)
        new[axis] += delta
        return tuple(new)

    def distance_to_root(self, site: Site) -> int:
        return max(abs(c) for c in site)

    def ball(self, radius: int) -> list:
        """All sites with l-infinity norm <= radius."""
        rng = range(-radius, radius + 1)
        return [tuple(c) for c in itertools.product(rng, repeat=self.d)]


class TorusGraph(Graph):
    """(Z/2rZ)^d with representatives in (-r, r]."""

    def __init__(self, spec: GraphSpec):
        self.spec = spec
        self.d = spec.dim
        self.r = spec.radius
        self.root = (0,) * self.d
        self.n_directions = 2 * self.d

    def wrap(self, c: int) -> int:
        r = self.r
        return (c + r - 1) % (2 * r) - r + 1

    def step(self, site: Site, k: int) -> Site:
        if site is ESCAPED:
            raise ValueError("cannot step an escaped walker")
        axis, sign = divmod(k, 2)
        delta = 1 if sign == 0 else -1
        new = list(site)
        new[axis] = self.wrap(new[axis] + delta)
        return tuple(new)

    def distance_to_root(self, site: Site) -> int:
        return max(abs(c) for c in site)

    def all_sites(self) -> list:
        rng = range(-self.r + 1, self.r + 1)
        return [tuple(c) for c in itertools.product(rng, repeat=self.d)]

    @property
    def n_sites(self) -> int:
        return (2 * self.r) ** self.d


class BiTreeGraph(Graph):
    """Root-directed d-ary subtree of the bidirected 2d-regular tree.

    From a subtree vertex, one of the d out-edges points to the parent
    and the rest leave the subtree for good; from the root all out-edges
    leave.  Walkers taking an off-subtree edge are absorbed (ESCAPED).
    """

    def __init__(self, spec: GraphSpec):
        self.spec = spec
        self.d = spec.dim
        self.depth = spec.depth
        self.root = ()
        self.n_directions = self.d

    def step(self, site: Site, k: int):
        if site is ESCAPED:
            raise ValueError("cannot step an escaped walker")
        if len(site) == 0 or k != 0:
            return ESCAPED
        return site[:-1]

    def distance_to_root(self, site: Site) -> int:
        return len(site)

    def level(self, k: int) -> list:
        return [tuple(w) for w in itertools.product(range(self.d), repeat=k)]

    def levels(self, lo: int, hi: int) -> list:
        out = []
        for k in range(lo, hi + 1):
            out.extend(self.level(k))
        return out

    @property
    def n_sites(self) -> int:
        return sum(self.d**k for k in range(self.depth + 1))


def make_graph(spec: GraphSpec) -> Graph:
    """Build a graph handle; rejects out-of-bounds spec fields."""
    if spec.kind in ("line", "lattice"):
        return LatticeGraph(spec if spec.kind == "lattice" else GraphSpec("lattice", dim=1))
    if spec.kind == "torus":
        return TorusGraph(spec)
    return BiTreeGraph(spec)


def sample_step(graph: Graph, site: Site, rng) -> Site:
    """Kernel sample: uniform over the 2d neighbors (lattice/torus) or the
    d out-edges (tree).  `rng` must expose below(n) -> int in [0, n)."""
    if site is ESCAPED:
        raise ValueError("sample_step called on an escaped walker")
    return graph.step(site, rng.below(graph.n_directions))


def distance_to_root(graph: Graph, site: Site) -> int:
    if site is ESCAPED:
        raise ValueError("distance undefined for escaped walkers")
    return graph.distance_to_root(site)


def truncation_radius(spec: GraphSpec, t: float, c: float) -> int:
    """Initial-region radius that makes truncation error negligible:
    ceil(c*sqrt(t log t)) on lattices and tori, ceil(c*t) on the tree."""
    if t < 2:
        raise ValueError("truncation radius needs t >= 2")
    if c <= 0:
        raise ValueError("truncation constant must be positive")
    if spec.kind == "bitree":
        return math.ceil(c * t)
    return math.ceil(c * math.sqrt(t * math.log(t)))


def site_sort_key(graph: Graph, site: Site):
    """Distance-then-lexicographic vertex order used for particle numbering."""
    return (graph.distance_to_root(site), site)
