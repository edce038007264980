"""DAGs, partially directed graphs, d-separation and Meek orientation.

Nodes are string labels. Wherever iteration order matters it follows
:func:`node_key`, a natural sort ("X2" before "X10"), so every result is
reproducible.
"""
from __future__ import annotations

import itertools
import json
import logging
import re
from collections import deque
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Mapping

from .exceptions import (
    CyclicGraph,
    MissingSepset,
    NoSeparatorFound,
    OverlappingSets,
    UnknownNode,
)

logger = logging.getLogger(__name__)

_DIGITS = re.compile(r"(\d+)")


def node_key(label: str):
    """Natural sort key: digit runs compare numerically."""
    return tuple(int(p) if p.isdigit() else p for p in _DIGITS.split(str(label)))


def sort_nodes(nodes: Iterable[str]) -> list:
    return sorted(nodes, key=node_key)


def pair(a: str, b: str) -> tuple:
    """Canonical unordered pair."""
    return (a, b) if node_key(a) <= node_key(b) else (b, a)


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph with per-node support size and latent flag."""

    nodes: tuple
    edges: frozenset
    cards: Mapping = field(default_factory=dict)
    latent: frozenset = frozenset()

    def __post_init__(self):
        nodes = tuple(sort_nodes(str(n) for n in self.nodes))
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate node labels")
        known = set(nodes)
        edges = set()
        for a, b in self.edges:
            a, b = str(a), str(b)
            if a not in known or b not in known:
                raise UnknownNode(f"edge {a}->{b} uses an unknown node")
            if a == b:
                raise CyclicGraph(f"self-loop on {a}")
            if (a, b) in edges:
                raise ValueError(f"duplicate edge {a}->{b}")
            edges.add((a, b))
        parents = {n: [] for n in nodes}
        children = {n: [] for n in nodes}
        for a, b in edges:
            parents[b].append(a)
            children[a].append(b)
        try:
            order = tuple(TopologicalSorter({n: parents[n] for n in nodes}).static_order())
        except CycleError as exc:
            raise CyclicGraph(f"graph has a directed cycle: {exc.args[1]}") from None
        cards = {str(k): int(v) for k, v in dict(self.cards).items()}
        for n in nodes:
            cards.setdefault(n, 2)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", frozenset(edges))
        object.__setattr__(self, "cards", cards)
        object.__setattr__(self, "latent", frozenset(str(n) for n in self.latent))
        object.__setattr__(self, "_parents", {n: tuple(sort_nodes(p)) for n, p in parents.items()})
        object.__setattr__(self, "_children", {n: tuple(sort_nodes(c)) for n, c in children.items()})
        object.__setattr__(self, "_order", order)

    def parents(self, node: str) -> tuple:
        return self._parents[node]

    def children(self, node: str) -> tuple:
        return self._children[node]

    def topological_order(self) -> tuple:
        return self._order

    @property
    def observed(self) -> tuple:
        return tuple(n for n in self.nodes if n not in self.latent)

    @property
    def latents(self) -> tuple:
        return tuple(n for n in self.nodes if n in self.latent)

    def ancestors(self, nodes: Iterable[str]) -> set:
        """``nodes`` together with all their ancestors."""
        seen = set()
        stack = list(nodes)
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(self._parents[v])
        return seen

    def descendants(self, node: str) -> set:
        seen = set()
        stack = list(self._children[node])
        while stack:
            v = stack.pop()
            if v not in seen:
                seen.add(v)
                stack.extend(self._children[v])
        return seen

    def adjacent(self, a: str, b: str) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def subgraph(self, nodes: Iterable[str]) -> "Dag":
        keep = set(nodes)
        return Dag(
            nodes=tuple(keep),
            edges=frozenset((a, b) for a, b in self.edges if a in keep and b in keep),
            cards={n: self.cards[n] for n in keep},
            latent=frozenset(n for n in self.latent if n in keep),
        )


def _check_sets(g: Dag, *sets) -> list:
    out = []
    for s in sets:
        s = {str(v) for v in s}
        unknown = s.difference(g.nodes)
        if unknown:
            raise UnknownNode(f"unknown nodes {sort_nodes(unknown)}")
        out.append(s)
    for a, b in itertools.combinations(out, 2):
        if a & b:
            raise OverlappingSets(f"sets overlap on {sort_nodes(a & b)}")
    return out


def d_separated(g: Dag, A: Iterable[str], B: Iterable[str], Z: Iterable[str] = ()) -> bool:
    """Whether ``Z`` d-separates every node of ``A`` from every node of ``B``.

    Reachability ("Bayes ball") search over (node, direction) states: a
    trail may pass a collider only when the collider is an ancestor of, or
    in, ``Z``, and may pass a non-collider only when it is outside ``Z``.
    """
    A, B, Z = _check_sets(g, A, B, Z)
    anc_z = g.ancestors(Z)
    # direction "up": arrived from a child; "down": arrived from a parent
    queue = deque((a, "up") for a in A)
    visited = set()
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node not in Z and node in B:
            return False
        if direction == "up" and node not in Z:
            queue.extend((p, "up") for p in g.parents(node))
            queue.extend((c, "down") for c in g.children(node))
        elif direction == "down":
            if node not in Z:
                queue.extend((c, "down") for c in g.children(node))
            if node in anc_z:
                queue.extend((p, "up") for p in g.parents(node))
    return True


def _support(g: Dag, nodes) -> int:
    out = 1
    for n in nodes:
        out *= g.cards[n]
    return out


def minimal_dsep_support(g: Dag, X: Iterable[str], max_size: int = 3) -> tuple[int, tuple]:
    """Smallest joint support of a set ``S`` outside ``X`` that d-separates
    every pair of ``X``; returns ``(support, S)``.

    Candidate sets up to ``max_size`` nodes are tried in increasing order of
    support (then size, then node order), so the first hit is minimal. The
    empty set qualifies when ``X`` is pairwise independent, giving support 1.

    Raises
    ------
    NoSeparatorFound
        No candidate works; the exception carries the support of all other
        variables as a fallback.
    """
    X = sort_nodes({str(x) for x in X})
    if len(X) < 2:
        raise ValueError("need at least two variables")
    _check_sets(g, X)
    others = [n for n in g.nodes if n not in set(X)]
    candidates = []
    for size in range(0, min(max_size, len(others)) + 1):
        for combo in itertools.combinations(others, size):
            candidates.append((_support(g, combo), size, combo))
    candidates.sort(key=lambda c: (c[0], c[1], [node_key(n) for n in c[2]]))
    pairs = list(itertools.combinations(X, 2))
    for support, _, combo in candidates:
        if all(d_separated(g, {a}, {b}, combo) for a, b in pairs):
            return support, tuple(combo)
    raise NoSeparatorFound(
        f"no separating set of size <= {max_size} for {X}",
        support=_support(g, others),
        witness=tuple(others),
    )


@dataclass(frozen=True)
class PartialDag:
    """Mixed graph with directed ``(a, b)`` meaning a->b and undirected pairs."""

    nodes: tuple
    directed: frozenset = frozenset()
    undirected: frozenset = frozenset()

    def __post_init__(self):
        nodes = tuple(sort_nodes(str(n) for n in self.nodes))
        known = set(nodes)
        directed = frozenset((str(a), str(b)) for a, b in self.directed)
        undirected = frozenset(pair(str(a), str(b)) for a, b in self.undirected)
        seen = set()
        for a, b in list(directed) + list(undirected):
            if a not in known or b not in known:
                raise UnknownNode(f"edge {a}-{b} uses an unknown node")
            if a == b:
                raise ValueError(f"self-loop on {a}")
            key = frozenset((a, b))
            if key in seen:
                raise ValueError(f"pair {a},{b} appears in more than one edge")
            seen.add(key)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)
        if _has_directed_cycle(nodes, directed):
            raise CyclicGraph("directed edges form a cycle")

    @classmethod
    def complete(cls, nodes: Iterable[str]) -> "PartialDag":
        nodes = sort_nodes(nodes)
        return cls(tuple(nodes), undirected=frozenset(itertools.combinations(nodes, 2)))

    @classmethod
    def from_dag(cls, g: Dag) -> "PartialDag":
        return cls(g.nodes, directed=g.edges)

    def adjacent(self, a: str, b: str) -> bool:
        return (a, b) in self.directed or (b, a) in self.directed or pair(a, b) in self.undirected

    def neighbors(self, a: str) -> list:
        return [b for b in self.nodes if b != a and self.adjacent(a, b)]

    def skeleton(self) -> frozenset:
        return frozenset(pair(a, b) for a, b in self.directed) | self.undirected

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "directed": [list(e) for e in sorted(self.directed, key=lambda e: (node_key(e[0]), node_key(e[1])))],
            "undirected": [list(e) for e in sorted(self.undirected, key=lambda e: (node_key(e[0]), node_key(e[1])))],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PartialDag":
        return cls(
            nodes=tuple(d["nodes"]),
            directed=frozenset(tuple(e) for e in d.get("directed", [])),
            undirected=frozenset(tuple(e) for e in d.get("undirected", [])),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PartialDag":
        return cls.from_dict(json.loads(text))


def _has_directed_cycle(nodes, directed) -> bool:
    try:
        graph = {n: [] for n in nodes}
        for a, b in directed:
            graph[b].append(a)
        tuple(TopologicalSorter(graph).static_order())
    except CycleError:
        return True
    return False


class _Mixed:
    """Mutable working copy used by the orientation procedures."""

    def __init__(self, p: PartialDag):
        self.nodes = list(p.nodes)
        self.directed = set(p.directed)
        self.undirected = set(p.undirected)

    def adjacent(self, a, b):
        return (a, b) in self.directed or (b, a) in self.directed or pair(a, b) in self.undirected

    def is_undirected(self, a, b):
        return pair(a, b) in self.undirected

    def is_directed(self, a, b):
        return (a, b) in self.directed

    def reaches(self, src, dst) -> bool:
        """Directed path src ~> dst."""
        stack, seen = [src], set()
        while stack:
            v = stack.pop()
            if v == dst:
                return True
            if v in seen:
                continue
            seen.add(v)
            stack.extend(b for a, b in self.directed if a == v)
        return False

    def orient(self, a, b) -> bool:
        """Turn a-b into a->b unless that would close a directed cycle."""
        if not self.is_undirected(a, b):
            return False
        if self.reaches(b, a):
            return False
        self.undirected.discard(pair(a, b))
        self.directed.add((a, b))
        return True

    def freeze(self) -> PartialDag:
        return PartialDag(tuple(self.nodes), frozenset(self.directed), frozenset(self.undirected))


def orient_v_structures(skeleton: PartialDag, sepsets: Mapping) -> PartialDag:
    """Orient every unshielded triple ``i - k - j`` with ``k`` outside
    ``sepset(i, j)`` as the collider ``i -> k <- j``.

    ``sepsets`` maps unordered pairs (``frozenset`` or any 2-tuple) of
    non-adjacent nodes to their separating set. Triples are visited in node
    order; an orientation that contradicts an earlier one is dropped and
    logged (first write wins).
    """
    if skeleton.directed:
        raise ValueError("skeleton must contain only undirected edges")
    seps = {frozenset(k): set(v) for k, v in sepsets.items()}
    work = _Mixed(skeleton)
    for k in work.nodes:
        nbrs = [n for n in work.nodes if n != k and skeleton.adjacent(n, k)]
        for i, j in itertools.combinations(nbrs, 2):
            if skeleton.adjacent(i, j):
                continue
            key = frozenset((i, j))
            if key not in seps:
                raise MissingSepset(f"no separating set recorded for {i}, {j}")
            if k in seps[key]:
                continue
            for a in (i, j):
                if work.is_directed(k, a):
                    logger.warning("conflicting v-structure at %s: keeping %s->%s", k, k, a)
                elif not work.orient(a, k) and not work.is_directed(a, k):
                    logger.warning("cannot orient %s->%s without a cycle", a, k)
    return work.freeze()


def _apply_meek_rules(g: _Mixed) -> bool:
    changed = False
    for a, b in sorted(g.undirected, key=lambda e: (node_key(e[0]), node_key(e[1]))):
        if not g.is_undirected(a, b):
            continue
        for x, y in ((a, b), (b, a)):
            if _meek_orients(g, x, y) and g.orient(x, y):
                changed = True
                break
    return changed


def _meek_orients(g: _Mixed, x: str, y: str) -> bool:
    """Whether one of Meek's rules R1-R4 forces x - y into x -> y."""
    others = [n for n in g.nodes if n != x and n != y]
    # R1: c -> x - y with c, y non-adjacent
    for c in others:
        if g.is_directed(c, x) and not g.adjacent(c, y):
            return True
    # R2: x -> c -> y
    for c in others:
        if g.is_directed(x, c) and g.is_directed(c, y):
            return True
    # R3: x - c -> y, x - d -> y, c and d non-adjacent
    mids = [c for c in others if g.is_undirected(x, c) and g.is_directed(c, y)]
    for c, d in itertools.combinations(mids, 2):
        if not g.adjacent(c, d):
            return True
    # R4: x adj c, c -> d -> y, x adj d, c and y non-adjacent
    for d in others:
        if not (g.is_directed(d, y) and g.adjacent(x, d)):
            continue
        for c in others:
            if c != d and g.is_directed(c, d) and g.adjacent(x, c) and not g.adjacent(c, y):
                return True
    return False


def meek_closure(p: PartialDag) -> PartialDag:
    """Apply Meek's rules R1-R4 until nothing changes.

    Orientations that would close a directed cycle are skipped, so the
    result never contains one; adjacencies are never added or removed.
    """
    work = _Mixed(p)
    while _apply_meek_rules(work):
        pass
    return work.freeze()


def cpdag(g: Dag) -> PartialDag:
    """Markov equivalence class pattern of a DAG: skeleton, its unshielded
    colliders, then Meek closure."""
    directed = set()
    for k in g.nodes:
        pa = g.parents(k)
        for i, j in itertools.combinations(pa, 2):
            if not g.adjacent(i, j):
                directed.add((i, k))
                directed.add((j, k))
    undirected = {pair(a, b) for a, b in g.edges if (a, b) not in directed}
    return meek_closure(PartialDag(g.nodes, frozenset(directed), frozenset(undirected)))
