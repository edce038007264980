"""Brute-force reference implementations used as test oracles.

Each one follows a textbook definition directly, with no shared code paths
with the package algorithms it checks.
"""
import itertools

import numpy as np


def _adjacency(nodes, edges):
    nbrs = {n: set() for n in nodes}
    for a, b in edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    return nbrs


def _descendants(node, edges):
    out, stack = set(), [node]
    while stack:
        v = stack.pop()
        for a, b in edges:
            if a == v and b not in out:
                out.add(b)
                stack.append(b)
    return out


def path_d_separated(nodes, edges, a, b, z):
    """d-separation of single nodes ``a`` and ``b`` by enumerating every
    simple undirected path and checking whether any is active given ``z``."""
    z = set(z)
    if a in z or b in z:
        return True
    edges = set(edges)
    nbrs = _adjacency(nodes, edges)

    def active(path):
        for prev, mid, nxt in zip(path, path[1:], path[2:]):
            collider = (prev, mid) in edges and (nxt, mid) in edges
            if collider:
                if mid not in z and not (_descendants(mid, edges) & z):
                    return False
            elif mid in z:
                return False
        return True

    stack = [(a, [a])]
    while stack:
        v, path = stack.pop()
        if v == b:
            if active(path):
                return False
            continue
        for w in nbrs[v]:
            if w not in path:
                stack.append((w, path + [w]))
    return True


def _is_acyclic(nodes, edges):
    indeg = {n: 0 for n in nodes}
    for _, b in edges:
        indeg[b] += 1
    ready = [n for n in nodes if indeg[n] == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for a, b in edges:
            if a == v:
                indeg[b] -= 1
                if indeg[b] == 0:
                    ready.append(b)
    return seen == len(nodes)


def _v_structures(edges):
    edges = set(edges)
    skel = {frozenset(e) for e in edges}
    out = set()
    for (a, k), (b, k2) in itertools.permutations(edges, 2):
        if k == k2 and a != b and frozenset((a, b)) not in skel:
            out.add((frozenset((a, b)), k))
    return out


def markov_equivalence_pattern(nodes, edges):
    """CPDAG by enumeration: orient the skeleton every way, keep acyclic
    orientations with the same v-structures, and direct an edge only when
    every member agrees. Returns ``(directed, undirected)`` as sets."""
    edges = sorted(set(edges))
    target = _v_structures(edges)
    members = []
    for flips in itertools.product((False, True), repeat=len(edges)):
        cand = [(b, a) if f else (a, b) for (a, b), f in zip(edges, flips)]
        if _is_acyclic(nodes, cand) and _v_structures(cand) == target:
            members.append(set(cand))
    directed, undirected = set(), set()
    for a, b in edges:
        if all((a, b) in m for m in members):
            directed.add((a, b))
        elif all((b, a) in m for m in members):
            directed.add((b, a))
        else:
            undirected.add(frozenset((a, b)))
    return directed, undirected


def brute_minimal_support(nodes, edges, cards, X):
    """Smallest product of cards over any subset of the other nodes that
    d-separates every pair of ``X`` (no size bound)."""
    others = [n for n in nodes if n not in set(X)]
    best = None
    for size in range(len(others) + 1):
        for combo in itertools.combinations(others, size):
            support = int(np.prod([cards[n] for n in combo])) if combo else 1
            if best is not None and support >= best:
                continue
            if all(path_d_separated(nodes, edges, a, b, combo) for a, b in itertools.combinations(X, 2)):
                best = support
    return best


def matching_scores(truth, learned, matching, n_obs):
    """Measurement scores straight from their definitions for a given
    ``learned -> true`` matching."""
    n_true = len(truth)
    omitted = n_true - len(set(matching.values()))
    committed = len(learned) - len(matching)
    wrong = sum(
        1 for lab, members in learned.items() for x in members
        if lab not in matching or x not in truth[matching[lab]]
    )
    return omitted / n_true, committed / n_true, wrong / n_obs


def best_total_overlap(truth, learned):
    """Largest summed overlap over all one-to-one pairings."""
    t = list(truth)
    l = list(learned)
    best = 0
    k = min(len(t), len(l))
    for ts in itertools.permutations(t, k):
        for ls in itertools.combinations(l, k):
            best = max(best, sum(len(set(truth[a]) & set(learned[b])) for a, b in zip(ts, ls)))
    return best


def numeric_rank(m, tol=1e-9):
    return int(np.sum(np.linalg.svd(np.asarray(m), compute_uv=False) > tol))
