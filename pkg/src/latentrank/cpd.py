"""Non-negative CP (PARAFAC) decomposition with multiple random restarts.

Each restart starts with a short burn-in of hierarchical alternating least
squares (HALS), which updates one factor column at a time in closed form and
clips at zero, then refines all factors jointly with projected
Levenberg-Marquardt steps. HALS alone stalls in the swamps typical of
collinear positive factors; the joint refinement reaches machine precision on
exactly low-rank tensors. The best restart by Frobenius error wins.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .exceptions import NonNegativityViolation, ShapeMismatch
from .tensor import ContingencyTensor


@dataclass(frozen=True)
class CpConfig:
    """Knobs for :func:`nncp`.

    ``target_error`` stops launching further restarts once the best error is
    at or below it; the default 0 runs every restart.
    """

    restarts: int = 10
    max_iter: int = 1000
    tol: float = 1e-10
    seed: int = 0
    target_error: float = 0.0
    burn_in: int = 30

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.tol < 0 or self.target_error < 0:
            raise ValueError("tolerances must be non-negative")


@dataclass(frozen=True)
class CpDecomposition:
    """Weighted sum of ``rank`` non-negative rank-one tensors.

    ``factors[k]`` has shape ``(dims[k], rank)``; column ``i`` of every mode
    together with ``weights[i]`` forms component ``i``.
    """

    factors: tuple
    weights: np.ndarray

    def __post_init__(self):
        factors = tuple(np.array(f, dtype=float) for f in self.factors)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if not factors:
            raise ShapeMismatch("a decomposition needs at least one mode")
        for f in factors:
            if f.ndim != 2 or f.shape[1] != weights.size:
                raise ShapeMismatch(
                    f"factor of shape {f.shape} does not have {weights.size} columns"
                )
            if np.any(f < 0):
                raise NonNegativityViolation("factor entries must be non-negative")
        if np.any(weights < 0):
            raise NonNegativityViolation("weights must be non-negative")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "weights", weights)

    @property
    def rank(self) -> int:
        return self.weights.size

    @property
    def dims(self) -> tuple:
        return tuple(f.shape[0] for f in self.factors)

    def padded(self, rank: int) -> "CpDecomposition":
        """Same tensor with zero components appended up to ``rank``."""
        extra = rank - self.rank
        if extra < 0:
            raise ValueError("cannot pad to a smaller rank")
        return CpDecomposition(
            factors=tuple(np.hstack([f, np.zeros((f.shape[0], extra))]) for f in self.factors),
            weights=np.concatenate([self.weights, np.zeros(extra)]),
        )


def reconstruct(d: CpDecomposition, dims: Sequence[int] | None = None) -> np.ndarray:
    """Dense tensor ``sum_i weights[i] * outer(factors[0][:, i], ...)``."""
    if dims is not None and tuple(int(x) for x in dims) != d.dims:
        raise ShapeMismatch(f"decomposition has dims {d.dims}, expected {tuple(dims)}")
    out = np.zeros(d.dims)
    for i in range(d.rank):
        comp = np.asarray(d.weights[i])
        for f in d.factors:
            comp = np.multiply.outer(comp, f[:, i])
        out += comp
    return out


@numba.njit(cache=True)
def _mttkrp(t, idx, offsets, F, n, k, dk, r):
    m = np.zeros((dk, r))
    ncell = t.shape[0]
    for c in range(ncell):
        v = t[c]
        if v == 0.0:
            continue
        for i in range(r):
            p = v
            for j in range(n):
                if j != k:
                    p *= F[offsets[j] + idx[c, j], i]
            m[idx[c, k], i] += p
    return m


@numba.njit(cache=True)
def _gram(F, offsets, dims, j, r):
    g = np.zeros((r, r))
    for a in range(dims[j]):
        row = offsets[j] + a
        for i in range(r):
            fi = F[row, i]
            for l in range(r):
                g[i, l] += fi * F[row, l]
    return g


@numba.njit(cache=True)
def _hals(t, idx, dims, offsets, F, max_iter, tol, norm_sq):
    """Run HALS sweeps in place on the stacked factor matrix ``F``."""
    n = dims.shape[0]
    r = F.shape[1]
    grams = np.zeros((n, r, r))
    for j in range(n):
        grams[j] = _gram(F, offsets, dims, j, r)
    prev = np.inf
    err = np.inf
    it = 0
    floor = 1e-30 * max(norm_sq, 1e-300)
    for it in range(1, max_iter + 1):
        for k in range(n):
            dk = dims[k]
            g = np.ones((r, r))
            for j in range(n):
                if j != k:
                    g *= grams[j]
            m = _mttkrp(t, idx, offsets, F, n, k, dk, r)
            base = offsets[k]
            for i in range(r):
                gii = g[i, i]
                if gii <= 0.0:
                    continue
                for a in range(dk):
                    s = 0.0
                    for l in range(r):
                        s += F[base + a, l] * g[l, i]
                    val = F[base + a, i] + (m[a, i] - s) / gii
                    F[base + a, i] = val if val > 0.0 else 0.0
            grams[k] = _gram(F, offsets, dims, k, r)
        _balance(F, offsets, dims, r)
        for j in range(n):
            grams[j] = _gram(F, offsets, dims, j, r)
        # ||T - R||^2 = ||T||^2 - 2<T, R> + ||R||^2
        rec = np.ones((r, r))
        for j in range(n):
            rec *= grams[j]
        err_sq = norm_sq - 2.0 * _inner(t, idx, offsets, F, n, r) + rec.sum()
        err = np.sqrt(err_sq) if err_sq > 0.0 else 0.0
        if err_sq <= floor:
            break
        if prev < np.inf and abs(prev - err) <= tol * prev:
            break
        prev = err
    return err, it


@numba.njit(cache=True)
def _inner(t, idx, offsets, F, n, r):
    total = 0.0
    for c in range(t.shape[0]):
        v = t[c]
        if v == 0.0:
            continue
        s = 0.0
        for i in range(r):
            p = 1.0
            for j in range(n):
                p *= F[offsets[j] + idx[c, j], i]
            s += p
        total += v * s
    return total


@numba.njit(cache=True)
def _residual_sq(t, w, idx, offsets, F, n, r):
    total = 0.0
    for c in range(t.shape[0]):
        s = 0.0
        for i in range(r):
            p = 1.0
            for j in range(n):
                p *= F[offsets[j] + idx[c, j], i]
            s += p
        d = t[c] - s
        total += w[c] * d * d
    return total


@numba.njit(cache=True)
def _normal_equations(t, w, idx, offsets, F, n, r):
    """Weighted Gauss-Newton system ``(J^T W J, J^T W res)`` for the
    flattened factors."""
    npar = F.shape[0] * r
    jtj = np.zeros((npar, npar))
    jtr = np.zeros(npar)
    cols = np.zeros(n * r, dtype=np.int64)
    vals = np.zeros(n * r)
    for c in range(t.shape[0]):
        model = 0.0
        for i in range(r):
            p = 1.0
            for j in range(n):
                p *= F[offsets[j] + idx[c, j], i]
            model += p
        wc = w[c]
        res = t[c] - model
        q = 0
        for k in range(n):
            row = offsets[k] + idx[c, k]
            for i in range(r):
                p = 1.0
                for j in range(n):
                    if j != k:
                        p *= F[offsets[j] + idx[c, j], i]
                cols[q] = row * r + i
                vals[q] = p
                q += 1
        for a in range(q):
            ca = cols[a]
            va = vals[a] * wc
            jtr[ca] += va * res
            for b in range(q):
                jtj[ca, cols[b]] += va * vals[b]
    return jtj, jtr


@numba.njit(cache=True)
def _balance(F, offsets, dims, r):
    n = dims.shape[0]
    for i in range(r):
        logsum = 0.0
        zero = False
        for j in range(n):
            s = 0.0
            for a in range(dims[j]):
                s += F[offsets[j] + a, i] ** 2
            if s == 0.0:
                zero = True
                break
            logsum += 0.5 * np.log(s)
        if zero:
            continue
        target = np.exp(logsum / n)
        for j in range(n):
            s = 0.0
            for a in range(dims[j]):
                s += F[offsets[j] + a, i] ** 2
            scale = target / np.sqrt(s)
            for a in range(dims[j]):
                F[offsets[j] + a, i] *= scale


@numba.njit(cache=True)
def _levenberg_marquardt(t, w, idx, dims, offsets, F, max_iter, tol, norm_sq):
    """Projected Levenberg-Marquardt refinement in place; returns (error, steps)."""
    n = dims.shape[0]
    r = F.shape[1]
    npar = F.shape[0] * r
    floor = 1e-30 * max(norm_sq, 1e-300)
    err_sq = _residual_sq(t, w, idx, offsets, F, n, r)
    lam = 1e-3
    steps = 0
    need_system = True
    jtj = np.zeros((npar, npar))
    jtr = np.zeros(npar)
    while steps < max_iter and err_sq > floor:
        if need_system:
            jtj, jtr = _normal_equations(t, w, idx, offsets, F, n, r)
            need_system = False
        steps += 1
        a = jtj.copy()
        scale = 0.0
        for p in range(npar):
            scale = max(scale, jtj[p, p])
        for p in range(npar):
            a[p, p] += lam * (jtj[p, p] + 1e-12 * scale + 1e-300)
        delta = np.linalg.solve(a, jtr)
        trial = F.copy()
        for p in range(npar):
            row = p // r
            col = p % r
            v = trial[row, col] + delta[p]
            trial[row, col] = v if v > 0.0 else 0.0
        new_sq = _residual_sq(t, w, idx, offsets, trial, n, r)
        if new_sq < err_sq:
            improvement = (np.sqrt(err_sq) - np.sqrt(new_sq)) / np.sqrt(err_sq)
            F[:, :] = trial
            _balance(F, offsets, dims, r)
            err_sq = new_sq
            need_system = True
            lam = max(lam / 3.0, 1e-12)
            if improvement <= tol:
                break
        else:
            lam *= 4.0
            if lam > 1e12:
                break
    return np.sqrt(err_sq), steps


def _as_array(t) -> np.ndarray:
    if isinstance(t, ContingencyTensor):
        return t.values
    return np.asarray(t, dtype=float)


def _stack(factors) -> np.ndarray:
    return np.ascontiguousarray(np.vstack(factors), dtype=float)


def _unstack(F: np.ndarray, dims) -> CpDecomposition:
    factors, weights = [], np.ones(F.shape[1])
    start = 0
    for d in dims:
        block = F[start:start + d].copy()
        start += d
        sums = block.sum(axis=0)
        nz = sums > 0
        block[:, nz] /= sums[nz]
        block[:, ~nz] = 0.0
        weights = weights * np.where(nz, sums, 0.0)
        factors.append(block)
    return CpDecomposition(factors=tuple(factors), weights=weights)


def _initial_factors(dims, r, seed, norm) -> list:
    rng = np.random.Generator(np.random.Philox(seed))
    # uniform on (0.01, 1]
    factors = [1.0 - 0.99 * rng.random((d, r)) for d in dims]
    approx = np.linalg.norm(reconstruct(CpDecomposition(tuple(factors), np.ones(r))))
    scale = (norm / approx) ** (1.0 / len(dims)) if norm > 0 else 1.0
    return [f * scale for f in factors]


def nncp(t, r: int, cfg: CpConfig | None = None,
         init: CpDecomposition | None = None,
         weights: np.ndarray | None = None) -> tuple[CpDecomposition, float]:
    """Best-of-restarts non-negative rank-``r`` CP fit of a dense tensor.

    Restart ``i`` is initialised from a Philox stream keyed by
    ``cfg.seed + i``. An optional ``init`` decomposition (for instance a
    rank ``r - 1`` solution padded with a zero component) is run as one more
    candidate after the random restarts. Ties go to the earliest candidate.

    With ``weights`` (non-negative, same shape as ``t``) the refinement and
    the choice between restarts minimise ``sum(weights * (t - fit)**2)``
    instead of the plain squared error; the HALS burn-in stays unweighted.

    Returns
    -------
    decomposition : CpDecomposition
        Columns normalised to sum to one, scale carried by the weights.
    recon_error : float
        Frobenius norm of ``t - reconstruct(decomposition)``.
    """
    cfg = cfg or CpConfig()
    values = _as_array(t)
    if r < 1:
        raise ValueError(f"rank must be >= 1, got {r}")
    if np.any(values < 0):
        raise NonNegativityViolation("tensor has negative entries")
    dims = values.shape
    if not np.any(values):
        return CpDecomposition(tuple(np.zeros((d, r)) for d in dims), np.zeros(r)), 0.0
    if values.ndim == 1:
        # a vector is its own rank-one decomposition
        f = np.zeros((dims[0], r))
        w = np.zeros(r)
        total = values.sum()
        f[:, 0] = values / total
        w[0] = total
        return CpDecomposition((f,), w), 0.0

    problem = _Problem(values, weights)
    starts = [_initial_factors(dims, r, cfg.seed + i, problem.norm) for i in range(cfg.restarts)]
    if init is not None:
        _check_init(init, dims, r)
        starts.append([f * w for f, w in zip(init.factors, _split_weights(init))])

    best, best_obj, best_err = None, np.inf, np.inf
    for start in starts:
        cand, obj, err = problem.run(_stack(start), cfg, cfg.burn_in)
        if obj < best_obj:
            best, best_obj, best_err = cand, obj, err
        if best_obj <= cfg.target_error:
            break
    return best, best_err


def refine(t, init: CpDecomposition, weights: np.ndarray | None = None,
           cfg: CpConfig | None = None) -> tuple[CpDecomposition, float]:
    """Levenberg-Marquardt refinement of one starting decomposition.

    No random restarts and no burn-in; returns the refined decomposition and
    its (unweighted) Frobenius error.
    """
    cfg = cfg or CpConfig()
    values = _as_array(t)
    if np.any(values < 0):
        raise NonNegativityViolation("tensor has negative entries")
    _check_init(init, values.shape, init.rank)
    if not np.any(values) or values.ndim == 1:
        return nncp(values, init.rank, cfg)
    problem = _Problem(values, weights)
    start = _stack([f * w for f, w in zip(init.factors, _split_weights(init))])
    cand, _, err = problem.run(start, cfg, 0)
    return cand, err


def _check_init(init: CpDecomposition, dims, r: int) -> None:
    if init.dims != tuple(dims) or init.rank != r:
        raise ShapeMismatch(
            f"initial decomposition is rank {init.rank} over {init.dims}, need rank {r} over {tuple(dims)}"
        )


class _Problem:
    """Flattened tensor plus the index tables the kernels need."""

    def __init__(self, values: np.ndarray, weights):
        self.values = values
        self.dims = values.shape
        self.flat = np.ascontiguousarray(values.reshape(-1))
        self.idx = np.ascontiguousarray(np.array(np.unravel_index(np.arange(self.flat.size), self.dims)).T)
        self.dims_arr = np.asarray(self.dims, dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.dims_arr)[:-1]]).astype(np.int64)
        self.norm = float(np.linalg.norm(self.flat))
        self.weighted = weights is not None
        if weights is None:
            self.w = np.ones_like(self.flat)
        else:
            w = np.broadcast_to(np.asarray(weights, dtype=float), self.dims).reshape(-1)
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite and non-negative")
            self.w = np.ascontiguousarray(w)

    def run(self, F: np.ndarray, cfg: CpConfig, burn_in: int):
        used = 0
        if burn_in:
            _, used = _hals(self.flat, self.idx, self.dims_arr, self.offsets, F,
                            min(burn_in, cfg.max_iter), cfg.tol, self.norm ** 2)
        if used < cfg.max_iter:
            _levenberg_marquardt(self.flat, self.w, self.idx, self.dims_arr, self.offsets, F,
                                 cfg.max_iter - used, cfg.tol, float(np.sum(self.w * self.flat ** 2)))
        cand = _unstack(F, self.dims)
        resid = self.values - reconstruct(cand)
        err = float(np.linalg.norm(resid))
        obj = float(np.sqrt(np.sum(self.w * resid.reshape(-1) ** 2))) if self.weighted else err
        return cand, obj, err


def _split_weights(d: CpDecomposition) -> list:
    """Per-mode column scalings whose product is the weight vector."""
    share = d.weights ** (1.0 / len(d.factors))
    return [share] * len(d.factors)


def nncp_path(t, max_rank: int, cfg: CpConfig | None = None) -> list:
    """Fits at ranks ``1..max_rank``, each warm-started from the previous one.

    The padded previous solution is one of the candidates at every rank, so
    the returned errors are non-increasing in rank.
    """
    out, prev = [], None
    for r in range(1, max_rank + 1):
        d, err = nncp(t, r, cfg, init=prev.padded(r) if prev is not None else None)
        out.append((d, err))
        prev = d
    return out
