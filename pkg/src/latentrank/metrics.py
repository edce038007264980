"""Scores comparing a learned model with the ground truth.

Measurement scores (relative to the number of true latents, or of true
observed variables):

* latent omission: true latents with no learned counterpart;
* latent commission: learned latents that match no true latent;
* mismeasurement: observed variables attached to a wrong latent.

Structure scores, on the latent graph after renaming learned latents to
their matched true latents:

* edge omission (EO): true adjacencies missing, over true adjacencies;
* edge commission (EC): extra adjacencies, over true non-adjacent pairs;
* orientation omission (OO): arrowheads of the true pattern missing, over
  arrowheads of the true pattern.

A ratio whose denominator is zero is ``None`` (not applicable).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .discovery import MeasurementModel
from .exceptions import NodeMismatch
from .graph import PartialDag, cpdag, node_key, pair, sort_nodes

MEASUREMENT_FIELDS = ("latent_omission", "latent_commission", "mismeasurement")
STRUCTURE_FIELDS = ("edge_omission", "edge_commission", "orientation_omission")


@dataclass
class EvalReport:
    """Ratios in [0, 1] (or ``None``) together with their raw counts."""

    latent_omission: float | None = None
    latent_commission: float | None = None
    mismeasurement: float | None = None
    edge_omission: float | None = None
    edge_commission: float | None = None
    orientation_omission: float | None = None
    counts: dict | None = None
    matching: dict | None = None

    def merge(self, other: "EvalReport") -> "EvalReport":
        out = EvalReport(**{k: v for k, v in asdict(self).items()})
        for name in MEASUREMENT_FIELDS + STRUCTURE_FIELDS:
            if getattr(other, name) is not None:
                setattr(out, name, getattr(other, name))
        out.counts = {**(self.counts or {}), **(other.counts or {})}
        out.matching = self.matching or other.matching
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def match_latents(truth: Mapping[str, set], learned: Mapping[str, set],
                  exhaustive: bool = False) -> dict:
    """Pair learned latents with true latents by shared observed children.

    Greedy: repeatedly take the pair with the largest overlap, ties broken
    by true label then learned label. ``exhaustive`` instead maximises the
    total overlap over all one-to-one assignments. Only pairs with a
    positive overlap are matched. Returns ``learned -> true``.
    """
    t_labels = sort_nodes(truth)
    l_labels = sort_nodes(learned)
    overlap = {(t, l): len(set(truth[t]) & set(learned[l])) for t in t_labels for l in l_labels}
    if exhaustive:
        cost = -np.array([[overlap[(t, l)] for l in l_labels] for t in t_labels], dtype=float)
        rows, cols = linear_sum_assignment(cost) if cost.size else ([], [])
        return {l_labels[c]: t_labels[r] for r, c in zip(rows, cols) if cost[r, c] < 0}
    out, used_t = {}, set()
    ranked = sorted(overlap.items(), key=lambda kv: (-kv[1], node_key(kv[0][0]), node_key(kv[0][1])))
    for (t, l), size in ranked:
        if size == 0:
            break
        if t in used_t or l in out:
            continue
        out[l] = t
        used_t.add(t)
    return out


def _true_clusters(truth) -> dict:
    return {lat: set(kids) for lat, kids in truth.measurement().items()}


def _learned_clusters(learned: MeasurementModel, observed: Sequence[str]) -> dict:
    names = learned.names or tuple(observed)
    return {label: {names[i] for i in members} for label, members in learned.clusters}


def score_measurement(truth, learned: MeasurementModel, exhaustive: bool = False) -> EvalReport:
    """Latent omission, commission and mismeasurement of ``learned``
    against the :class:`~latentrank.simulate.LsmSpec` ``truth``.

    An observed variable counts as mismeasured when its learned latent is
    unmatched or matched to a latent that is not its true parent.
    """
    true_cl = _true_clusters(truth)
    learned_cl = _learned_clusters(learned, truth.observed)
    unknown = set().union(*learned_cl.values()) - set(truth.observed) if learned_cl else set()
    if unknown:
        raise NodeMismatch(f"learned clusters use unknown observed variables {sorted(unknown)}")
    matching = match_latents(true_cl, learned_cl, exhaustive)
    n_true = len(true_cl)
    omitted = n_true - len(set(matching.values()))
    committed = len(learned_cl) - len(matching)
    wrong = 0
    for label, members in learned_cl.items():
        target = matching.get(label)
        wrong += sum(1 for x in members if target is None or x not in true_cl[target])
    n_obs = len(truth.observed)
    return EvalReport(
        latent_omission=_ratio(omitted, n_true),
        latent_commission=_ratio(committed, n_true),
        mismeasurement=_ratio(wrong, n_obs),
        counts={"true_latents": n_true, "learned_latents": len(learned_cl), "omitted": omitted,
                "committed": committed, "mismeasured": wrong, "observed": n_obs},
        matching=dict(sorted(matching.items(), key=lambda kv: node_key(kv[0]))),
    )


def align_pattern(learned: PartialDag, matching: Mapping[str, str], true_nodes: Sequence[str]) -> PartialDag:
    """Rename matched learned latents to their true labels, drop unmatched
    ones, and add unmatched true latents as isolated nodes."""
    keep = {l: t for l, t in matching.items() if l in learned.nodes}
    directed = {(keep[a], keep[b]) for a, b in learned.directed if a in keep and b in keep}
    undirected = {pair(keep[a], keep[b]) for a, b in learned.undirected if a in keep and b in keep}
    return PartialDag(tuple(true_nodes), frozenset(directed), frozenset(undirected))


def score_structure(truth_cpdag: PartialDag, learned: PartialDag) -> EvalReport:
    """EO, EC and OO of ``learned`` against the true pattern.

    Raises
    ------
    NodeMismatch
        The two graphs are not over the same latent labels.
    """
    if set(truth_cpdag.nodes) != set(learned.nodes):
        raise NodeMismatch(
            f"true nodes {list(truth_cpdag.nodes)} differ from learned nodes {list(learned.nodes)}"
        )
    true_adj = truth_cpdag.skeleton()
    learned_adj = learned.skeleton()
    n = len(truth_cpdag.nodes)
    n_pairs = n * (n - 1) // 2
    missing = len(true_adj - learned_adj)
    extra = len(learned_adj - true_adj)
    arrows = truth_cpdag.directed
    lost = len([e for e in arrows if e not in learned.directed])
    return EvalReport(
        edge_omission=_ratio(missing, len(true_adj)),
        edge_commission=_ratio(extra, n_pairs - len(true_adj)),
        orientation_omission=_ratio(lost, len(arrows)),
        counts={"true_edges": len(true_adj), "learned_edges": len(learned_adj), "omitted_edges": missing,
                "committed_edges": extra, "true_arrows": len(arrows), "omitted_arrows": lost},
    )


def evaluate(truth, learned: MeasurementModel, pattern: PartialDag | None,
             exhaustive: bool = False) -> EvalReport:
    """All six scores for one run; structure scores use the latent matching."""
    report = score_measurement(truth, learned, exhaustive)
    true_pattern = cpdag(truth.structure())
    if pattern is None:
        pattern = PartialDag(tuple(learned.latents))
    aligned = align_pattern(pattern, report.matching, true_pattern.nodes)
    return report.merge(score_structure(true_pattern, aligned))


def format_cell(values: Sequence[float | None]) -> str:
    """Mean over applicable trials and the number of trials with a nonzero
    score, as ``"0.15(3)"``; ``"n/a"`` when no trial applies."""
    vals = [v for v in values if v is not None]
    if not vals:
        return "n/a"
    return f"{float(np.mean(vals)):.2f}({sum(1 for v in vals if v > 0)})"


def summarize(reports: Sequence[EvalReport], fields: Sequence[str] = MEASUREMENT_FIELDS + STRUCTURE_FIELDS) -> dict:
    """Field name -> formatted cell over trial reports."""
    return {f: format_cell([getattr(r, f) for r in reports]) for f in fields}


__all__ = [
    "EvalReport",
    "match_latents",
    "score_measurement",
    "align_pattern",
    "score_structure",
    "evaluate",
    "format_cell",
    "summarize",
]
