"""Ground-truth discrete latent structure models: construction, forward
sampling and exact marginal distributions.

A conditional probability table (CPT) for node ``v`` with parents
``(p1, ..., pk)`` (in node order) is an array of shape
``(card(v), card(p1), ..., card(pk))`` whose entry ``[x, a1, ..., ak]`` is
``P(v = x | p1 = a1, ..., pk = ak)``. Serialised CPTs are flattened
row-major in that axis order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exceptions import SupportViolation
from .graph import Dag
from .tensor import CategoricalDataset, ContingencyTensor

STRUCTURES = {
    "SM1": [("L1", "L2")],
    "SM2": [("L1", "L2"), ("L2", "L3")],
    "SM3": [("L1", "L2"), ("L1", "L3"), ("L2", "L4"), ("L3", "L4")],
    "Collider": [("L1", "L2"), ("L3", "L2")],
    "Star": [("L1", "L2"), ("L1", "L3"), ("L1", "L4")],
}
N_LATENTS = {"SM1": 2, "SM2": 3, "SM3": 4, "Collider": 3, "Star": 4}
MEASUREMENTS = {"MM1": 3, "MM2": 4}

CPT_LOW, CPT_HIGH = 0.1, 0.8
MIN_SINGULAR = 1e-6


@dataclass(frozen=True)
class LsmSpec:
    """A discrete causal model over latent and observed nodes."""

    graph: Dag
    cpts: Mapping = field(default_factory=dict)

    def __post_init__(self):
        cpts = {}
        for node in self.graph.nodes:
            if node not in self.cpts:
                raise ValueError(f"missing CPT for {node}")
            table = np.array(self.cpts[node], dtype=float)
            shape = (self.graph.cards[node],) + tuple(self.graph.cards[p] for p in self.graph.parents(node))
            if table.shape != shape:
                raise ValueError(f"CPT for {node} has shape {table.shape}, expected {shape}")
            if np.any(table < 0) or not np.allclose(table.sum(axis=0), 1.0, atol=1e-9):
                raise ValueError(f"CPT for {node} is not a conditional distribution")
            table.setflags(write=False)
            cpts[node] = table
        object.__setattr__(self, "cpts", cpts)

    @property
    def latents(self) -> tuple:
        return self.graph.latents

    @property
    def observed(self) -> tuple:
        return self.graph.observed

    def measurement(self) -> dict:
        """Latent label -> its observed children (in node order)."""
        return {
            lat: tuple(c for c in self.graph.children(lat) if c not in self.graph.latent)
            for lat in self.latents
        }

    def structure(self) -> Dag:
        """The latent-only subgraph."""
        return self.graph.subgraph(self.latents)

    def violations(self) -> list:
        """Human-readable list of broken discrete-LSM assumptions."""
        g = self.graph
        out = []
        for a, b in g.edges:
            if a not in g.latent and b not in g.latent:
                out.append(f"impure edge {a}->{b} between observed variables")
        for lat in self.latents:
            pure = [c for c in g.children(lat) if c not in g.latent and g.parents(c) == (lat,)]
            if len(pure) < 3:
                out.append(f"{lat} has {len(pure)} pure children, needs 3")
        if self.latents and self.observed:
            max_r = max(g.cards[v] for v in self.latents)
            min_d = min(g.cards[v] for v in self.observed)
            if min_d <= max_r:
                out.append(f"observed support {min_d} not larger than latent support {max_r}")
        for node, table in self.cpts.items():
            mat = table.reshape(table.shape[0], -1)
            if mat.shape[1] > 1:
                sv = np.linalg.svd(mat, compute_uv=False)
                if sv[-1] < MIN_SINGULAR:
                    out.append(f"CPT of {node} is rank deficient")
        return out

    def to_dict(self) -> dict:
        g = self.graph
        return {
            "nodes": [
                {"name": n, "latent": n in g.latent, "card": g.cards[n]} for n in g.nodes
            ],
            "edges": [list(e) for e in sorted(g.edges, key=lambda e: (g.nodes.index(e[0]), g.nodes.index(e[1])))],
            "cpts": {
                n: {
                    "parents": list(g.parents(n)),
                    "shape": list(self.cpts[n].shape),
                    "values": self.cpts[n].reshape(-1).tolist(),
                }
                for n in g.nodes
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "LsmSpec":
        graph = Dag(
            nodes=tuple(n["name"] for n in d["nodes"]),
            edges=frozenset(tuple(e) for e in d["edges"]),
            cards={n["name"]: n["card"] for n in d["nodes"]},
            latent=frozenset(n["name"] for n in d["nodes"] if n["latent"]),
        )
        cpts = {}
        for name, entry in d["cpts"].items():
            if list(entry["parents"]) != list(graph.parents(name)):
                raise ValueError(f"CPT parents of {name} do not match the graph")
            cpts[name] = np.asarray(entry["values"], dtype=float).reshape(entry["shape"])
        return cls(graph=graph, cpts=cpts)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "LsmSpec":
        return cls.from_dict(json.loads(text))


def _draw_cpt(rng: np.random.Generator, card: int, parent_cards: Sequence[int]) -> np.ndarray:
    n_cols = int(np.prod(parent_cards)) if parent_cards else 1
    while True:
        raw = rng.uniform(CPT_LOW, CPT_HIGH, size=(card, n_cols))
        table = raw / raw.sum(axis=0)
        if n_cols == 1 or np.linalg.svd(table, compute_uv=False)[-1] >= MIN_SINGULAR:
            return table.reshape((card,) + tuple(parent_cards))


def random_cpts(graph: Dag, seed) -> dict:
    """Draw every CPT entry from U[0.1, 0.8], normalise each column, and
    redraw tables whose smallest singular value falls below 1e-6."""
    rng = np.random.default_rng(seed)
    return {
        node: _draw_cpt(rng, graph.cards[node], [graph.cards[p] for p in graph.parents(node)])
        for node in graph.topological_order()
    }


def _as_list(value, n: int, what: str) -> list:
    if np.ndim(value) == 0:
        return [int(value)] * n
    value = [int(v) for v in value]
    if len(value) != n:
        raise ValueError(f"{what} has {len(value)} entries for {n} variables")
    return value


def make_spec(latent_edges: Sequence, n_latents: int, children, r, d, seed,
              strict: bool = True) -> LsmSpec:
    """Spec with latents ``L1..Lk`` and observed ``X1..Xm`` numbered
    consecutively per latent (``L1``'s children first).

    ``children`` is a per-latent count or one count for all; ``r`` is one
    latent support or a per-latent list, ``d`` one observed support or a
    per-observed list. With ``strict`` the discrete-LSM assumptions are
    enforced (three pure children, observed support above every latent's).
    """
    latents = [f"L{i + 1}" for i in range(n_latents)]
    children = _as_list(children, n_latents, "children")
    rs = _as_list(r, n_latents, "r")
    n_obs = sum(children)
    ds = _as_list(d, n_obs, "d")
    if any(x < 2 for x in rs + ds):
        raise SupportViolation("every support must be at least 2")
    if strict:
        if min(ds) <= max(rs):
            raise SupportViolation(f"observed support {min(ds)} must exceed latent support {max(rs)}")
        if min(children) < 3:
            raise SupportViolation("each latent needs at least three pure children")
    cards = dict(zip(latents, rs))
    edges = [tuple(e) for e in latent_edges]
    k = 0
    for lat, count in zip(latents, children):
        for _ in range(count):
            name = f"X{k + 1}"
            cards[name] = ds[k]
            edges.append((lat, name))
            k += 1
    graph = Dag(nodes=tuple(cards), edges=frozenset(edges), cards=cards, latent=frozenset(latents))
    return LsmSpec(graph=graph, cpts=random_cpts(graph, seed))


def build_spec(sm: str, mm: str = "MM1", r=3, d=4, seed=0) -> LsmSpec:
    """Spec from a named structure (SM1, SM2, SM3, Collider, Star) and
    measurement template (MM1: three children per latent, MM2: four)."""
    if sm not in STRUCTURES:
        raise ValueError(f"unknown structure {sm!r}; choose from {sorted(STRUCTURES)}")
    if mm not in MEASUREMENTS:
        raise ValueError(f"unknown measurement model {mm!r}; choose from {sorted(MEASUREMENTS)}")
    return make_spec(STRUCTURES[sm], N_LATENTS[sm], MEASUREMENTS[mm], r, d, seed)


def random_spec(n_latents: int, r=2, d=3, seed=0, edge_prob: float = 0.5,
                children: int = 3) -> LsmSpec:
    """Random latent DAG (edges follow a random order, each kept with
    ``edge_prob``) with ``children`` pure observed children per latent."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_latents)
    edges = []
    for a in range(n_latents):
        for b in range(a + 1, n_latents):
            if rng.random() < edge_prob:
                edges.append((f"L{order[a] + 1}", f"L{order[b] + 1}"))
    return make_spec(edges, n_latents, children, r, d, seed=int(rng.integers(2**31)))


def sample(spec: LsmSpec, n: int, seed) -> CategoricalDataset:
    """Ancestral sampling; only observed columns are returned."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    rng = np.random.default_rng(seed)
    g = spec.graph
    values = {}
    for node in g.topological_order():
        table = spec.cpts[node]
        parents = g.parents(node)
        if parents:
            cols = np.ravel_multi_index(tuple(values[p] for p in parents), table.shape[1:])
        else:
            cols = np.zeros(n, dtype=np.int64)
        cum = np.cumsum(table.reshape(table.shape[0], -1), axis=0)[:, cols]
        u = rng.random(n)
        codes = (u[None, :] >= cum).sum(axis=0)
        values[node] = np.minimum(codes, table.shape[0] - 1)
    observed = spec.observed
    return CategoricalDataset(
        names=observed,
        cards=tuple(g.cards[v] for v in observed),
        rows=np.column_stack([values[v] for v in observed]),
    )


def oracle_joint(spec: LsmSpec, vars: Sequence) -> ContingencyTensor:
    """Exact joint distribution of ``vars`` (labels, or indices into
    ``spec.observed``), summing the full factorisation over every other node."""
    if len(vars) == 0:
        raise ValueError("no variables selected")
    names = [spec.observed[v] if isinstance(v, (int, np.integer)) else str(v) for v in vars]
    if len(set(names)) != len(names):
        raise ValueError(f"repeated variable in {names}")
    g = spec.graph
    index = {node: i for i, node in enumerate(g.nodes)}
    for name in names:
        if name not in index:
            raise KeyError(f"unknown variable {name!r}")
    # drop nodes that are neither selected nor ancestors of a selected node
    relevant = g.ancestors(names)
    operands = []
    for node in g.nodes:
        if node in relevant:
            operands.append(spec.cpts[node])
            operands.append([index[node]] + [index[p] for p in g.parents(node)])
    out = np.einsum(*operands, [index[n] for n in names], optimize="greedy")
    return ContingencyTensor(values=np.clip(out, 0.0, None), n_samples=0, axis_vars=tuple(names))


def seeded_specs(n_specs: int, max_latents: int = 4, r=2, d=3, seed=0) -> list:
    """Reproducible batch of random specs with 1..max_latents latents."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_specs):
        k = int(rng.integers(1, max_latents + 1))
        out.append(random_spec(k, r=r, d=d, seed=int(rng.integers(2**31))))
    return out


__all__ = [
    "LsmSpec",
    "STRUCTURES",
    "MEASUREMENTS",
    "build_spec",
    "make_spec",
    "random_spec",
    "random_cpts",
    "sample",
    "oracle_joint",
    "seeded_specs",
]
