"""Learning the measurement model and the latent structure from data.

Pipeline: estimate the latent support from pairwise matrix ranks, search
observed triples for causal clusters with 3-way and 4-way tensor-rank tests,
merge overlapping clusters into latents, then run a PC search over the
latents whose conditional independence queries are tensor-rank tests on
children of the latents involved.
"""
from __future__ import annotations

import itertools
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .cpd import CpConfig
from .exceptions import DegenerateModel, Untestable
from .graph import Dag, PartialDag, d_separated, meek_closure, node_key, orient_v_structures, sort_nodes
from .rank_tests import (
    RankTestResult,
    cr_matrix_rank_test,
    estimate_matrix_rank,
    tensor_rank_gof_test,
)
from .tensor import CategoricalDataset, estimate_contingency

logger = logging.getLogger(__name__)

ALPHA_MATRIX = 0.005
ALPHA_TENSOR = 0.05


@dataclass(frozen=True)
class MeasurementModel:
    """Latent label -> observed column indices of its pure children.

    Attributes
    ----------
    clusters : tuple of (str, tuple of int)
        Disjoint clusters in label order.
    latent_support : dict
        Estimated support size per latent label.
    names : tuple of str
        Observed column labels, used only for reporting.
    """

    clusters: tuple
    latent_support: Mapping = field(default_factory=dict)
    names: tuple = ()

    def __post_init__(self):
        clusters = tuple(
            (str(label), tuple(sorted(int(i) for i in members))) for label, members in self.clusters
        )
        seen = set()
        for label, members in clusters:
            if seen & set(members):
                raise ValueError(f"cluster {label} overlaps another cluster")
            seen |= set(members)
        object.__setattr__(self, "clusters", clusters)
        object.__setattr__(self, "latent_support", {str(k): int(v) for k, v in self.latent_support.items()})
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def latents(self) -> tuple:
        return tuple(label for label, _ in self.clusters)

    def children(self, label: str) -> tuple:
        for lab, members in self.clusters:
            if lab == label:
                return members
        raise KeyError(label)

    def support(self, label: str) -> int:
        return self.latent_support[label]

    def assignment(self) -> dict:
        """Observed index -> latent label."""
        return {i: label for label, members in self.clusters for i in members}

    def member_names(self, label: str) -> tuple:
        idx = self.children(label)
        return tuple(self.names[i] for i in idx) if self.names else tuple(str(i) for i in idx)

    def to_dict(self) -> dict:
        return {
            "clusters": [
                {"latent": label, "children": list(members), "names": list(self.member_names(label)),
                 "support": self.latent_support.get(label)}
                for label, members in self.clusters
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping, names: Sequence[str] = ()) -> "MeasurementModel":
        clusters = tuple((c["latent"], tuple(c["children"])) for c in d["clusters"])
        support = {c["latent"]: c["support"] for c in d["clusters"] if c.get("support") is not None}
        return cls(clusters=clusters, latent_support=support, names=tuple(names))

    @classmethod
    def from_spec(cls, spec) -> "MeasurementModel":
        """Ground-truth measurement model of an :class:`~latentrank.simulate.LsmSpec`."""
        observed = spec.observed
        index = {name: i for i, name in enumerate(observed)}
        clusters = tuple((lat, tuple(index[c] for c in kids)) for lat, kids in spec.measurement().items())
        support = {lat: spec.graph.cards[lat] for lat in spec.latents}
        return cls(clusters=clusters, latent_support=support, names=observed)


@dataclass(frozen=True)
class CiQuery:
    """``li _||_ lj | lp`` decided on the tensor over ``(xi, xj, *xp1, *xp2)``.

    ``xp1`` and ``xp2`` hold one child of every conditioning latent each, in
    the order of ``lp``; ``rank`` is the product of the conditioning supports.
    """

    li: str
    lj: str
    lp: tuple
    xi: int
    xj: int
    xp1: tuple = ()
    xp2: tuple = ()
    rank: int = 1

    def __post_init__(self):
        if set(self.xp1) & set(self.xp2):
            raise ValueError("the two conditioning child sets must be disjoint")
        if len(self.xp1) != len(self.lp) or len(self.xp2) != len(self.lp):
            raise ValueError("need one child per conditioning latent on each side")
        used = [self.xi, self.xj, *self.xp1, *self.xp2]
        if len(set(used)) != len(used):
            raise ValueError(f"observed variables repeat in query {used}")

    @property
    def variables(self) -> tuple:
        return (self.xi, self.xj) + tuple(self.xp1) + tuple(self.xp2)


def make_ci_query(mm: MeasurementModel, li: str, lj: str, lp: Sequence[str] = (),
                  selection: int = 0) -> CiQuery:
    """Child choice for a latent CI query.

    ``selection = 0`` takes the lowest-index children: the first child of
    ``li`` and ``lj``, and the first and second child of each conditioning
    latent. Larger values rotate through the children of every latent so
    that several disjoint-ish selections can vote.
    """
    lp = tuple(sort_nodes(lp))

    def pick(label, k):
        kids = mm.children(label)
        return kids[(selection + k) % len(kids)]

    xp1, xp2 = [], []
    for lab in lp:
        kids = mm.children(lab)
        if len(kids) < 2:
            raise Untestable(f"{lab} has fewer than two children")
        xp1.append(pick(lab, 0))
        xp2.append(pick(lab, 1))
    rank = int(np.prod([mm.support(lab) for lab in lp])) if lp else 1
    return CiQuery(li=li, lj=lj, lp=lp, xi=pick(li, 0), xj=pick(lj, 0),
                   xp1=tuple(xp1), xp2=tuple(xp2), rank=rank)


@dataclass
class RankTester:
    """Cached rank tests on one dataset, with a record of every decision."""

    data: CategoricalDataset
    cfg: CpConfig = field(default_factory=CpConfig)
    alpha_matrix: float = ALPHA_MATRIX
    alpha_tensor: float = ALPHA_TENSOR
    dof_rule: str = "parameters"
    records: list = field(default_factory=list)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_vars(self) -> int:
        return self.data.n_vars

    @property
    def cards(self) -> tuple:
        return self.data.cards

    @property
    def names(self) -> tuple:
        return self.data.names

    def tensor(self, vars: Sequence[int], r: int) -> RankTestResult:
        """GOF test of rank ``r`` on the joint of ``vars``."""
        key = ("tensor", tuple(vars), r)
        if key not in self._cache:
            self._record(key, self._tensor_test(tuple(vars), r))
        return self._cache[key]

    def matrix(self, vars: Sequence[int], r: int) -> RankTestResult:
        """CR test of rank ``r`` on the pair ``vars``."""
        key = ("matrix", tuple(vars), r)
        if key not in self._cache:
            self._record(key, self._matrix_test(tuple(vars), r))
        return self._cache[key]

    def matrix_rank(self, i: int, j: int) -> int:
        a, b = sorted((i, j))
        key = ("rank", (a, b), None)
        if key not in self._cache:
            self._cache[key] = self._matrix_rank(a, b)
        return self._cache[key]

    def _tensor_test(self, vars, r):
        t = estimate_contingency(self.data, vars)
        return tensor_rank_gof_test(t, r, self.cfg, self.alpha_tensor, dof_rule=self.dof_rule)

    def _matrix_test(self, vars, r):
        return cr_matrix_rank_test(estimate_contingency(self.data, vars), r, self.alpha_matrix)

    def _matrix_rank(self, a, b):
        return estimate_matrix_rank(estimate_contingency(self.data, (a, b)), self.alpha_matrix)

    def _record(self, key, res: RankTestResult) -> None:
        self._cache[key] = res
        entry = {"kind": key[0], "vars": [self.names[v] for v in key[1]]}
        entry.update(res.to_dict())
        self.records.append(entry)


class OracleRankTester(RankTester):
    """Rank decisions on the exact joint distributions of a model.

    A tensor has rank ``r`` when the best rank-``r`` CP fit reproduces it
    (error below ``exact_tol``) and the best rank ``r - 1`` fit does not
    (error above ``gap_tol``); matrix ranks count singular values above
    ``sv_tol``. Results carry the fit error as the statistic and a p-value
    of 1 (accept) or 0 (reject).
    """

    def __init__(self, spec, cfg: CpConfig | None = None, exact_tol: float = 1e-6,
                 gap_tol: float = 1e-3, sv_tol: float = 1e-9):
        names = spec.observed
        stub = CategoricalDataset(names, tuple(spec.graph.cards[v] for v in names),
                                  np.zeros((0, len(names)), dtype=np.int64))
        super().__init__(stub, cfg or CpConfig())
        self.spec = spec
        self.exact_tol, self.gap_tol, self.sv_tol = exact_tol, gap_tol, sv_tol

    def _joint(self, vars):
        from .simulate import oracle_joint

        return oracle_joint(self.spec, [self.names[v] for v in vars])

    def _decision(self, statistic: float, ok: bool, r: int) -> RankTestResult:
        return RankTestResult(statistic=float(statistic), p_value=1.0 if ok else 0.0,
                              hypothesized_rank=r, alpha=0.5)

    def _tensor_test(self, vars, r):
        from .cpd import nncp

        t = self._joint(vars)
        _, err = nncp(t, r, self.cfg)
        ok = err < self.exact_tol
        if ok and r > 1:
            _, below = nncp(t, r - 1, self.cfg)
            ok = below > self.gap_tol
        return self._decision(err, ok, r)

    def _matrix_test(self, vars, r):
        sv = np.linalg.svd(self._joint(vars).values, compute_uv=False)
        return self._decision(float(np.sum(sv[r:] ** 2)), int(np.sum(sv > self.sv_tol)) == r, r)

    def _matrix_rank(self, a, b):
        sv = np.linalg.svd(self._joint((a, b)).values, compute_uv=False)
        return int(np.sum(sv > self.sv_tol))


def _tester(data, cfg=None, alpha_tensor=ALPHA_TENSOR, alpha_matrix=ALPHA_MATRIX,
            tester: RankTester | None = None) -> RankTester:
    if tester is not None:
        return tester
    if data is None:
        raise ValueError("either data or a tester is required")
    return RankTester(data, cfg or CpConfig(), alpha_matrix=alpha_matrix, alpha_tensor=alpha_tensor)


def estimate_latent_support(data: CategoricalDataset | None, alpha: float = ALPHA_MATRIX,
                            n_pairs: int | None = 5, seed=0, *,
                            tester: RankTester | None = None) -> int:
    """Modal estimated matrix rank over ``n_pairs`` random observed pairs
    (all pairs when ``n_pairs`` is None); ties go to the larger rank.

    Raises
    ------
    DegenerateModel
        The modal rank is 1, so the variables look mutually independent.
    """
    tester = _tester(data, alpha_matrix=alpha, tester=tester)
    if tester.n_vars < 2:
        raise ValueError("need at least two observed variables")
    all_pairs = list(itertools.combinations(range(tester.n_vars), 2))
    if n_pairs is None or n_pairs >= len(all_pairs):
        chosen = range(len(all_pairs))
    else:
        rng = np.random.default_rng(seed)
        chosen = sorted(rng.choice(len(all_pairs), size=n_pairs, replace=False).tolist())
    counts = Counter(tester.matrix_rank(*all_pairs[k]) for k in chosen)
    top = max(counts.values())
    r = max(k for k, v in counts.items() if v == top)
    if r == 1:
        raise DegenerateModel("estimated latent support is 1; no latent structure detected")
    return r


def _is_cluster(tester: RankTester, triple: tuple, r: int, others: Sequence[int]) -> bool:
    if not tester.tensor(triple, r).accepted:
        return False
    # stop at the first X_s that breaks the rank
    return all(tester.tensor(triple + (s,), r).accepted for s in others)


def _rule2_witnesses(n: int, triple: tuple, max_checks: int | None, rng) -> list:
    others = [s for s in range(n) if s not in triple]
    if max_checks is None or max_checks >= len(others):
        return others
    k = max(min(8, len(others)), max_checks)
    return sorted(rng.choice(others, size=min(k, len(others)), replace=False).tolist())


def find_clusters(data: CategoricalDataset, r: int, alpha: float = ALPHA_TENSOR,
                  cfg: CpConfig | None = None, *, max_checks: int | None = None,
                  seed=0, tester: RankTester | None = None) -> list:
    """Triples of observed indices that pass both cluster rules at rank ``r``.

    A triple is skipped when its 3-way tensor rejects rank ``r``; it is kept
    when the 4-way tensor with every other variable accepts rank ``r``.
    Triples are visited in lexicographic order. ``max_checks`` subsamples the
    extra variables (never fewer than ``min(8, m - 3)``); the default checks
    all of them.
    """
    if r < 2:
        raise ValueError("latent support must be at least 2")
    tester = _tester(data, cfg, alpha_tensor=alpha, tester=tester)
    rng = np.random.default_rng(seed)
    out = []
    for triple in itertools.combinations(range(tester.n_vars), 3):
        others = _rule2_witnesses(tester.n_vars, triple, max_checks, rng)
        if _is_cluster(tester, triple, r, others):
            out.append(triple)
    return out


def merge_clusters(triples: Sequence, supports: Mapping | None = None,
                   names: Sequence[str] = ()) -> MeasurementModel:
    """Union overlapping sets; one latent ``L1, L2, ...`` per component.

    Components are labelled in order of their smallest member. ``supports``
    maps a frozenset of members, or a single member index, to a support
    estimate; the latent gets the most common estimate among its inputs.
    """
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t in triples:
        t = [int(x) for x in t]
        for x in t:
            parent.setdefault(x, x)
        for x in t[1:]:
            a, b = find(t[0]), find(x)
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups = {}
    for x in parent:
        groups.setdefault(find(x), []).append(x)
    comps = sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])
    clusters, latent_support = [], {}
    for n, members in enumerate(comps):
        label = f"L{n + 1}"
        clusters.append((label, tuple(members)))
        if supports:
            votes = [v for k, v in supports.items()
                     if (set(k) if isinstance(k, (frozenset, set, tuple)) else {k}) <= set(members)]
            if votes:
                counts = Counter(votes)
                top = max(counts.values())
                latent_support[label] = min(k for k, v in counts.items() if v == top)
    merged = sum(len(t) for t in triples) - sum(len(c) for c in comps)
    if len(comps) < len(triples) and merged > 0:
        logger.debug("merged %d triples into %d clusters", len(triples), len(comps))
    return MeasurementModel(clusters=tuple(clusters), latent_support=latent_support, names=tuple(names))


def find_measurement_model(data: CategoricalDataset, r: int | None = None,
                           alpha_tensor: float = ALPHA_TENSOR, alpha_matrix: float = ALPHA_MATRIX,
                           cfg: CpConfig | None = None, *, max_checks: int | None = None,
                           seed=0, tester: RankTester | None = None) -> MeasurementModel:
    """Homogeneous-support pipeline: support estimate, cluster search, merge."""
    tester = _tester(data, cfg, alpha_tensor, alpha_matrix, tester)
    if r is None:
        r = estimate_latent_support(data, alpha_matrix, seed=seed, tester=tester)
    triples = find_clusters(data, r, alpha_tensor, cfg, max_checks=max_checks, seed=seed, tester=tester)
    mm = merge_clusters(triples, names=tester.names)
    return MeasurementModel(mm.clusters, {lab: r for lab in mm.latents}, tester.names)


def find_clusters_hetero(data: CategoricalDataset, alpha: float = ALPHA_TENSOR,
                         cfg: CpConfig | None = None, *, alpha_matrix: float = ALPHA_MATRIX,
                         max_checks: int | None = None, seed=0,
                         tester: RankTester | None = None) -> MeasurementModel:
    """Cluster search when latents may differ in support size.

    Each triple is tested at the smallest of its three estimated pairwise
    ranks. A merged cluster's support is the most common pairwise rank among
    its members (ties to the smaller value).
    """
    tester = _tester(data, cfg, alpha, alpha_matrix, tester)
    if tester.n_vars < 3:
        raise ValueError("need at least three observed variables")
    rng = np.random.default_rng(seed)
    triples = []
    for triple in itertools.combinations(range(tester.n_vars), 3):
        r = min(tester.matrix_rank(a, b) for a, b in itertools.combinations(triple, 2))
        if r < 2:
            continue
        others = _rule2_witnesses(tester.n_vars, triple, max_checks, rng)
        if _is_cluster(tester, triple, r, others):
            triples.append(triple)
    mm = merge_clusters(triples, names=tester.names)
    support = {}
    for label, members in mm.clusters:
        ranks = Counter(tester.matrix_rank(a, b) for a, b in itertools.combinations(members, 2))
        top = max(ranks.values())
        support[label] = min(k for k, v in ranks.items() if v == top)
    return MeasurementModel(mm.clusters, support, tester.names)


def check_testable(q: CiQuery, cards: Sequence[int]) -> None:
    """Raise :class:`Untestable` unless ``rank < prod(d) - max(d)`` over the
    query's observed variables."""
    dims = [cards[v] for v in q.variables]
    bound = int(np.prod(dims)) - max(dims)
    if q.rank >= bound:
        raise Untestable(
            f"rank {q.rank} is not below prod(d) - max(d) = {bound} for {q.li} vs {q.lj} given {list(q.lp)}"
        )


def ci_test_latent(q: CiQuery, data: CategoricalDataset, alpha: float = ALPHA_TENSOR,
                   cfg: CpConfig | None = None, *, alpha_matrix: float = ALPHA_MATRIX,
                   tester: RankTester | None = None) -> bool:
    """Decide ``q.li _||_ q.lj | q.lp`` from data.

    With an empty conditioning set this is a rank-one test on the pair of
    children; otherwise the tensor over all chosen children is tested at
    ``q.rank``.

    Raises
    ------
    Untestable
        The hypothesised rank is too large for the chosen tensor.
    """
    tester = _tester(data, cfg, alpha, alpha_matrix, tester)
    if not q.lp:
        return tester.matrix((q.xi, q.xj), 1).accepted
    check_testable(q, tester.cards)
    return tester.tensor(q.variables, q.rank).accepted


CiOracle = Callable[[str, str, tuple], bool]


def dsep_oracle(graph: Dag) -> CiOracle:
    """CI answers read off a ground-truth DAG by d-separation."""

    def oracle(li, lj, lp):
        return d_separated(graph, {li}, {lj}, set(lp))

    return oracle


@dataclass
class PcResult:
    """Output of :func:`pc_tensor_rank` with the evidence behind it."""

    pattern: PartialDag
    skeleton: PartialDag
    sepsets: dict
    ci_log: list

    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern.to_dict(),
            "sepsets": [
                {"pair": sort_nodes(k), "given": sort_nodes(v)}
                for k, v in sorted(self.sepsets.items(), key=lambda kv: [node_key(x) for x in sort_nodes(kv[0])])
            ],
            "ci_tests": self.ci_log,
        }


def pc_search(latents: Sequence[str], ci: CiOracle, max_cond: int = 2) -> PcResult:
    """PC skeleton search plus orientation over ``latents`` given a CI oracle.

    Conditioning sets of size ``0..max_cond`` are drawn from the current
    neighbours of either endpoint. Within one level all pairs see the graph
    as it was at the start of the level, and removals are applied together
    at the end, so the result does not depend on visiting order.
    """
    nodes = sort_nodes(latents)
    adj = {v: set(nodes) - {v} for v in nodes}
    sepsets, log = {}, []
    for level in range(0, max_cond + 1):
        frozen = {v: set(n) for v, n in adj.items()}
        if not any(len((frozen[a] | frozen[b]) - {a, b}) >= level for a in nodes for b in frozen[a]):
            break
        removals = []
        for a, b in itertools.combinations(nodes, 2):
            if b not in frozen[a]:
                continue
            pool = sort_nodes((frozen[a] | frozen[b]) - {a, b})
            if len(pool) < level:
                continue
            for lp in itertools.combinations(pool, level):
                try:
                    indep = bool(ci(a, b, tuple(lp)))
                except Untestable as exc:
                    logger.info("treating untestable query as dependent: %s", exc)
                    log.append({"li": a, "lj": b, "given": list(lp), "independent": None, "note": str(exc)})
                    continue
                log.append({"li": a, "lj": b, "given": list(lp), "independent": indep})
                if indep:
                    removals.append((a, b))
                    sepsets[frozenset((a, b))] = set(lp)
                    break
        for a, b in removals:
            adj[a].discard(b)
            adj[b].discard(a)
    skeleton = PartialDag(
        tuple(nodes), undirected=frozenset((a, b) for a in nodes for b in adj[a] if node_key(a) < node_key(b))
    )
    pattern = meek_closure(orient_v_structures(skeleton, sepsets))
    return PcResult(pattern=pattern, skeleton=skeleton, sepsets=sepsets, ci_log=log)


def pc_tensor_rank(data: CategoricalDataset | None, mm: MeasurementModel,
                   alpha: float = ALPHA_TENSOR, max_cond: int = 2, cfg: CpConfig | None = None, *,
                   alpha_matrix: float = ALPHA_MATRIX, ci_oracle: CiOracle | None = None,
                   votes: int = 1, tester: RankTester | None = None) -> PcResult:
    """PC over the latents of ``mm`` with tensor-rank CI tests.

    ``max_cond`` bounds the number of conditioning latents. ``ci_oracle``
    replaces the statistical tests (for instance :func:`dsep_oracle`).
    ``votes > 1`` decides each query by majority over that many rotated
    child selections (ties count as dependent).
    """
    if ci_oracle is None:
        tester = _tester(data, cfg, alpha, alpha_matrix, tester)

        def ci_oracle(li, lj, lp):
            answers = []
            for sel in range(votes):
                q = make_ci_query(mm, li, lj, lp, selection=sel)
                answers.append(ci_test_latent(q, None, alpha, cfg, alpha_matrix=alpha_matrix, tester=tester))
            return sum(answers) * 2 > len(answers)

    return pc_search(mm.latents, ci_oracle, max_cond)


@dataclass
class DiscoveryResult:
    """Everything learned from one dataset."""

    latent_support: int | None
    measurement: MeasurementModel
    structure: PcResult | None
    tests: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "latent_support": self.latent_support,
            "observed": list(self.measurement.names),
            "measurement_model": self.measurement.to_dict(),
            "structure": self.structure.to_dict() if self.structure else None,
            "rank_tests": self.tests,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, default=_jsonable)

    @staticmethod
    def read_model(d: Mapping) -> tuple:
        """``(MeasurementModel, PartialDag or None)`` from a report dict."""
        mm = MeasurementModel.from_dict(d["measurement_model"], d.get("observed", ()))
        structure = d.get("structure")
        pattern = PartialDag.from_dict(structure["pattern"]) if structure else None
        return mm, pattern


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def discover(data: CategoricalDataset, *, alpha_matrix: float = ALPHA_MATRIX,
             alpha_tensor: float = ALPHA_TENSOR, cfg: CpConfig | None = None,
             max_cond: int = 2, hetero: bool = False, r: int | None = None,
             max_checks: int | None = None, votes: int = 1, seed=0) -> DiscoveryResult:
    """Full pipeline: measurement model, then PC over the found latents."""
    cfg = cfg or CpConfig()
    tester = RankTester(data, cfg, alpha_matrix=alpha_matrix, alpha_tensor=alpha_tensor)
    if hetero:
        mm = find_clusters_hetero(data, alpha_tensor, cfg, alpha_matrix=alpha_matrix,
                                  max_checks=max_checks, seed=seed, tester=tester)
        support = None
    else:
        support = r if r is not None else estimate_latent_support(data, alpha_matrix, seed=seed, tester=tester)
        mm = find_measurement_model(data, support, alpha_tensor, alpha_matrix, cfg,
                                    max_checks=max_checks, seed=seed, tester=tester)
    structure = None
    if len(mm.latents) >= 1:
        structure = pc_tensor_rank(data, mm, alpha_tensor, max_cond, cfg, alpha_matrix=alpha_matrix,
                                   votes=votes, tester=tester)
    config = {
        "alpha_matrix": alpha_matrix, "alpha_tensor": alpha_tensor, "max_cond": max_cond,
        "hetero": hetero, "max_checks": max_checks, "votes": votes, "seed": seed,
        "cp": {"restarts": cfg.restarts, "max_iter": cfg.max_iter, "tol": cfg.tol, "seed": cfg.seed},
    }
    return DiscoveryResult(support, mm, structure, tester.records, config)


__all__ = [
    "MeasurementModel",
    "CiQuery",
    "RankTester",
    "OracleRankTester",
    "make_ci_query",
    "estimate_latent_support",
    "find_clusters",
    "merge_clusters",
    "find_measurement_model",
    "find_clusters_hetero",
    "check_testable",
    "ci_test_latent",
    "dsep_oracle",
    "pc_search",
    "pc_tensor_rank",
    "PcResult",
    "DiscoveryResult",
    "discover",
]
