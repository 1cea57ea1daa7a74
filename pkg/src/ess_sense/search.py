"""MAP structure search for decomposable scores.

Three engines share one local-score machinery:

* :func:`brute_force_map` enumerates every labeled DAG (tiny n only) and is
  the oracle the others are validated against;
* :func:`exact_dp_map` finds the globally optimal DAG by dynamic
  programming over node subsets (best parent set within each subset, then
  best sink per subset, then order reconstruction);
* :func:`hill_climb` applies the single best improving edge move until no
  move improves.

Local scores are cached per (child, parent-set bitmask).  Contingency
statistics are stored in compressed form (multisets of the observed cell
and parent-state counts plus the quantities derived from them), which makes
rescoring the same dataset under a new equivalent sample size cheap; the
coordinate-ascent driver leans on this.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .dataset import DEFAULT_CELL_CAP, Dataset, joint_parent_index
from .errors import DomainError, SizeError
from .scores import Dag

__all__ = [
    "Criterion",
    "bdeu_criterion",
    "BIC",
    "AIC",
    "ParentSetCache",
    "SearchMethod",
    "SearchResult",
    "FamilyStatsCache",
    "build_cache",
    "brute_force_map",
    "exact_dp_map",
    "hill_climb",
    "bic_init",
    "default_max_indegree",
    "map_search",
    "ess_sweep",
]

#: Score improvements at or below this are treated as noise, not progress.
MOVE_EPSILON = 1e-12


@dataclass(frozen=True)
class Criterion:
    """A decomposable scoring criterion: BDeu at a fixed ESS, BIC, or AIC."""

    kind: str
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in ("bdeu", "bic", "aic"):
            raise ValueError(f"unknown criterion {self.kind!r}")
        if self.kind == "bdeu":
            if self.alpha is None or not self.alpha > 0:
                raise DomainError("BDeu criterion needs a positive ESS")
        elif self.alpha is not None:
            raise ValueError(f"{self.kind} takes no ESS value")

    def label(self) -> str:
        return f"bdeu(alpha={self.alpha})" if self.kind == "bdeu" else self.kind


def bdeu_criterion(alpha: float) -> Criterion:
    return Criterion("bdeu", float(alpha))


BIC = Criterion("bic")
AIC = Criterion("aic")


@dataclass(frozen=True)
class _FamilyStats:
    """Compressed sufficient statistics of one (child, parent set) family."""

    cell_values: np.ndarray      # distinct positive cell counts
    cell_mults: np.ndarray       # multiplicity of each distinct cell count
    parent_values: np.ndarray    # distinct positive parent-state counts
    parent_mults: np.ndarray
    child_arity: int
    parent_state_count: int
    max_loglik: float
    effective_params: int

    def bdeu(self, alpha: float) -> float:
        a_cell = alpha / (self.child_arity * self.parent_state_count)
        a_par = alpha / self.parent_state_count
        cell = np.sum(self.cell_mults * (gammaln(self.cell_values + a_cell) - gammaln(a_cell)))
        par = np.sum(self.parent_mults * (gammaln(self.parent_values + a_par) - gammaln(a_par)))
        return float(cell - par)

    def raw_params(self) -> int:
        return (self.child_arity - 1) * self.parent_state_count

    def score(self, criterion: Criterion, log_n: float) -> float:
        if criterion.kind == "bdeu":
            return self.bdeu(criterion.alpha)
        if criterion.kind == "bic":
            return self.max_loglik - 0.5 * self.raw_params() * log_n
        return self.max_loglik - self.raw_params()


class FamilyStatsCache:
    """Lazy per-(child, parent mask) statistics for one dataset.

    Statistics are independent of the scoring criterion, so one cache
    serves BDeu at any ESS as well as BIC and AIC.
    """

    def __init__(self, d: Dataset, cell_cap: int = DEFAULT_CELL_CAP):
        self.dataset = d
        self.cell_cap = cell_cap
        self.log_n = float(np.log(d.n_records)) if d.n_records else 0.0
        self._stats: dict[tuple[int, int], _FamilyStats] = {}

    def mask_to_parents(self, mask: int) -> tuple[int, ...]:
        return tuple(j for j in range(self.dataset.n_vars) if mask >> j & 1)

    def table_cells(self, child: int, mask: int) -> int:
        size = self.dataset.arities[child]
        for p in self.mask_to_parents(mask):
            size *= self.dataset.arities[p]
        return size

    def stats(self, child: int, mask: int) -> _FamilyStats:
        key = (child, mask)
        cached = self._stats.get(key)
        if cached is not None:
            return cached
        d = self.dataset
        parents = self.mask_to_parents(mask)
        pidx, state_count = joint_parent_index(d.records, d.arities, parents)
        child_arity = d.arities[child]
        # Observed cells only: zero cells contribute nothing to any score here.
        flat = pidx * child_arity + d.records[:, child]
        cells_obs, cell_counts = np.unique(flat, return_counts=True)
        par_obs, par_counts = np.unique(pidx, return_counts=True)
        par_of_cell = np.searchsorted(par_obs, cells_obs // child_arity)
        ll = float(np.sum(cell_counts * np.log(cell_counts / par_counts[par_of_cell]))) if len(cells_obs) else 0.0
        eff = int(len(cells_obs) - len(par_obs))
        cv, cm = np.unique(cell_counts, return_counts=True)
        pv, pm = np.unique(par_counts, return_counts=True)
        st = _FamilyStats(
            cell_values=cv.astype(float),
            cell_mults=cm.astype(float),
            parent_values=pv.astype(float),
            parent_mults=pm.astype(float),
            child_arity=child_arity,
            parent_state_count=state_count,
            max_loglik=ll,
            effective_params=eff,
        )
        self._stats[key] = st
        return st

    def score(self, child: int, mask: int, criterion: Criterion) -> float:
        return self.stats(child, mask).score(criterion, self.log_n)


@dataclass
class CacheStats:
    families_scored: int = 0
    families_omitted: int = 0


@dataclass(frozen=True)
class ParentSetCache:
    """Local scores of every admissible parent set, per child.

    ``scores[i]`` maps a parent-set bitmask over node indices to the local
    score of child ``i`` with those parents.  Subsets whose dense table
    would exceed the cell cap are omitted and counted in ``stats``.
    """

    n: int
    criterion: Criterion
    max_indegree: int
    scores: tuple[dict[int, float], ...]
    stats: CacheStats = field(default_factory=CacheStats)

    def score_of(self, g: Dag) -> float:
        total = 0.0
        for i, ps in enumerate(g.parent_sets):
            mask = 0
            for p in ps:
                mask |= 1 << p
            total += self.scores[i][mask]
        return total


def build_cache(
    d: Dataset,
    criterion: Criterion,
    max_indegree: int | None = None,
    cell_cap: int = DEFAULT_CELL_CAP,
    stats_cache: FamilyStatsCache | None = None,
) -> ParentSetCache:
    """Score all (child, parent subset) pairs up to the in-degree bound."""
    n = d.n_vars
    if max_indegree is None:
        max_indegree = n - 1
    if max_indegree < 0:
        raise ValueError("max_indegree must be non-negative")
    sc = stats_cache if stats_cache is not None else FamilyStatsCache(d, cell_cap)
    stats = CacheStats()
    per_child: list[dict[int, float]] = []
    for child in range(n):
        others = [j for j in range(n) if j != child]
        table: dict[int, float] = {}
        for k in range(min(max_indegree, n - 1) + 1):
            for sub in combinations(others, k):
                mask = 0
                for j in sub:
                    mask |= 1 << j
                if sc.table_cells(child, mask) > sc.cell_cap:
                    stats.families_omitted += 1
                    continue
                table[mask] = sc.score(child, mask, criterion)
                stats.families_scored += 1
        per_child.append(table)
    return ParentSetCache(
        n=n,
        criterion=criterion,
        max_indegree=max_indegree,
        scores=tuple(per_child),
        stats=stats,
    )


class SearchMethod(enum.Enum):
    BRUTE_FORCE = "brute-force"
    EXACT_DP = "exact-dp"
    HILL_CLIMB = "hill-climb"


@dataclass(frozen=True)
class SearchResult:
    dag: Dag
    score: float
    method: SearchMethod
    candidates: int
    runtime_s: float
    score_trace: tuple[float, ...] = ()


# ---------------------------------------------------------------------------
# brute force


_DAG_CATALOG: dict[int, list[tuple[int, ...]]] = {}


def _all_dag_mask_vectors(n: int) -> list[tuple[int, ...]]:
    """Every labeled DAG on n nodes as a vector of parent bitmasks.

    Enumerated once per n (all 2^(n(n-1)) edge subsets, acyclicity-checked)
    and cached; usable only for very small n.
    """
    cached = _DAG_CATALOG.get(n)
    if cached is not None:
        return cached
    edges = [(u, v) for u in range(n) for v in range(n) if u != v]
    out = []
    for bits in range(1 << len(edges)):
        masks = [0] * n
        for e, (u, v) in enumerate(edges):
            if bits >> e & 1:
                masks[v] |= 1 << u
        if _masks_acyclic(masks, n):
            out.append(tuple(masks))
    out.sort(key=lambda ms: (sum(m.bit_count() for m in ms), ms))
    _DAG_CATALOG[n] = out
    return out


def _masks_acyclic(masks: Sequence[int], n: int) -> bool:
    indeg = [masks[i].bit_count() for i in range(n)]
    ready = [i for i in range(n) if indeg[i] == 0]
    removed = 0
    while ready:
        v = ready.pop()
        removed += 1
        for c in range(n):
            if masks[c] >> v & 1:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
    return removed == n


def _dag_from_masks(masks: Sequence[int], n: int) -> Dag:
    return Dag(n, [tuple(j for j in range(n) if masks[i] >> j & 1) for i in range(n)])


def brute_force_map(
    d: Dataset,
    criterion: Criterion,
    n_limit: int = 4,
    cell_cap: int = DEFAULT_CELL_CAP,
) -> SearchResult:
    """Optimal DAG by full enumeration; the oracle for the other engines.

    Ties are broken toward fewer edges, then the lexicographically smallest
    parent-mask vector.
    """
    n = d.n_vars
    if n > n_limit:
        raise SizeError(f"brute force is capped at {n_limit} variables, got {n}")
    t0 = time.perf_counter()
    cache = build_cache(d, criterion, max_indegree=None, cell_cap=cell_cap)
    best = None
    best_key = None
    count = 0
    for masks in _all_dag_mask_vectors(n):
        count += 1
        score = 0.0
        for i in range(n):
            score += cache.scores[i][masks[i]]
        key = (-score, sum(m.bit_count() for m in masks), masks)
        if best_key is None or key < best_key:
            best_key = key
            best = (masks, score)
    masks, score = best
    return SearchResult(
        dag=_dag_from_masks(masks, n),
        score=score,
        method=SearchMethod.BRUTE_FORCE,
        candidates=count,
        runtime_s=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# exact dynamic programming

DP_NODE_LIMIT = 20


def exact_dp_map(cache: ParentSetCache) -> SearchResult:
    """Globally optimal DAG under the cache's criterion and in-degree bound.

    Classic subset dynamic program: for every child and node subset, the
    best admissible parent set inside the subset; then the best sink for
    every subset; finally the optimal order is unwound back to parent sets.
    """
    n = cache.n
    if n > DP_NODE_LIMIT:
        raise SizeError(f"exact search is capped at {DP_NODE_LIMIT} nodes, got {n}")
    t0 = time.perf_counter()
    full = 1 << n
    neg_inf = float("-inf")

    # bps[i][S]: (score, edge count, chosen mask) of the best parent set of
    # i within subset S; masks ascend so S without one bit is always done.
    bp_score = [np.full(full, neg_inf) for _ in range(n)]
    bp_edges = [np.zeros(full, dtype=np.int64) for _ in range(n)]
    bp_mask = [np.zeros(full, dtype=np.int64) for _ in range(n)]
    for i in range(n):
        local = cache.scores[i]
        sc, ed, ms = bp_score[i], bp_edges[i], bp_mask[i]
        for s in range(full):
            if s >> i & 1:
                continue
            own = local.get(s)
            if own is not None:
                best = (own, s.bit_count(), s)
            else:
                best = None
            rem = s
            while rem:
                low = rem & (-rem)
                sub = s ^ low
                cand = (sc[sub], int(ed[sub]), int(ms[sub]))
                if best is None or _better(cand, best):
                    best = cand
                rem ^= low
            if best is None:
                raise SizeError(
                    f"child {i} has no admissible parent set in subset {s:#x}; "
                    "raise the cell cap or lower max_indegree"
                )
            sc[s], ed[s], ms[s] = best

    # Best network over each subset, grown one sink at a time.
    net_score = np.full(full, neg_inf)
    net_edges = np.zeros(full, dtype=np.int64)
    net_sink = np.full(full, -1, dtype=np.int64)
    net_score[0] = 0.0
    for w in range(1, full):
        best = None
        best_sink = -1
        rem = w
        while rem:
            low = rem & (-rem)
            s = low.bit_length() - 1
            prev = w ^ low
            cand = (
                net_score[prev] + bp_score[s][prev],
                int(net_edges[prev] + bp_edges[s][prev]),
                s,
            )
            if best is None or _better(cand, best):
                best = cand
                best_sink = s
            rem ^= low
        net_score[w] = best[0]
        net_edges[w] = best[1]
        net_sink[w] = best_sink

    parent_sets: list[tuple[int, ...]] = [()] * n
    w = full - 1
    while w:
        s = int(net_sink[w])
        w ^= 1 << s
        chosen = int(bp_mask[s][w])
        parent_sets[s] = tuple(j for j in range(n) if chosen >> j & 1)

    dag = Dag(n, parent_sets)
    return SearchResult(
        dag=dag,
        score=float(net_score[full - 1]),
        method=SearchMethod.EXACT_DP,
        candidates=cache.stats.families_scored,
        runtime_s=time.perf_counter() - t0,
    )


def _better(cand: tuple, best: tuple) -> bool:
    """Higher score wins; exact score ties prefer fewer edges, then smaller key."""
    if cand[0] != best[0]:
        return cand[0] > best[0]
    if cand[1] != best[1]:
        return cand[1] < best[1]
    return cand[2] < best[2]


# ---------------------------------------------------------------------------
# hill climbing


def hill_climb(
    d: Dataset,
    criterion: Criterion,
    init: Dag | None = None,
    max_indegree: int | None = None,
    cell_cap: int = DEFAULT_CELL_CAP,
    stats_cache: FamilyStatsCache | None = None,
) -> SearchResult:
    """Greedy local search over additions, deletions and reversals.

    Each iteration applies the single move with the largest score gain;
    gains within MOVE_EPSILON of zero stop the climb.  Ties go to the move
    with the lowest (child, parent) pair, so runs are deterministic.
    """
    n = d.n_vars
    if max_indegree is None:
        max_indegree = n - 1
    sc = stats_cache if stats_cache is not None else FamilyStatsCache(d, cell_cap)
    t0 = time.perf_counter()

    masks = [0] * n
    if init is not None:
        if init.n != n:
            raise ValueError("initial graph size does not match dataset")
        for i, ps in enumerate(init.parent_sets):
            for p in ps:
                masks[i] |= 1 << p

    def local(child: int, mask: int) -> float:
        if sc.table_cells(child, mask) > sc.cell_cap:
            return float("-inf")
        return sc.score(child, mask, criterion)

    score = sum(local(i, masks[i]) for i in range(n))
    trace = [score]
    candidates = 0

    def legal_moves():
        """Yield (tie key, score delta, mask changes) for every legal move.

        Keys are (child, parent, move kind) with the changed edge's child
        first, so ascending key order matches the documented tie-break.
        """
        for child in range(n):
            for parent in range(n):
                if parent == child:
                    continue
                if masks[child] >> parent & 1:
                    without = masks[child] & ~(1 << parent)
                    delta = local(child, without) - local(child, masks[child])
                    yield (child, parent, 1), delta, {child: without}
                    # reversal: parent->child becomes child->parent
                    if masks[parent].bit_count() >= max_indegree:
                        continue
                    trial = list(masks)
                    trial[child] = without
                    if _creates_cycle(trial, child, parent, n):
                        continue
                    delta = (
                        local(child, without)
                        - local(child, masks[child])
                        + local(parent, masks[parent] | 1 << child)
                        - local(parent, masks[parent])
                    )
                    yield (parent, child, 2), delta, {
                        child: without,
                        parent: masks[parent] | 1 << child,
                    }
                else:
                    if masks[child].bit_count() >= max_indegree:
                        continue
                    if _creates_cycle(masks, parent, child, n):
                        continue
                    withp = masks[child] | 1 << parent
                    delta = local(child, withp) - local(child, masks[child])
                    yield (child, parent, 0), delta, {child: withp}

    while True:
        best = None
        for key, delta, changes in legal_moves():
            candidates += 1
            if delta <= MOVE_EPSILON:
                continue
            if best is None or delta > best[1] or (delta == best[1] and key < best[0]):
                best = (key, delta, changes)
        if best is None:
            break
        for node, mask in best[2].items():
            masks[node] = mask
        score += best[1]
        trace.append(score)

    dag = _dag_from_masks(masks, n)
    final = sum(local(i, masks[i]) for i in range(n))
    return SearchResult(
        dag=dag,
        score=final,
        method=SearchMethod.HILL_CLIMB,
        candidates=candidates,
        runtime_s=time.perf_counter() - t0,
        score_trace=tuple(trace),
    )


def _creates_cycle(masks: Sequence[int], new_parent: int, child: int, n: int) -> bool:
    """Would adding new_parent -> child close a directed cycle?

    True iff new_parent is reachable from child along existing edges.
    """
    if new_parent == child:
        return True
    children: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        m = masks[v]
        while m:
            low = m & (-m)
            children[low.bit_length() - 1].append(v)
            m ^= low
    stack = [child]
    seen = 1 << child
    while stack:
        v = stack.pop()
        for c in children[v]:
            if c == new_parent:
                return True
            if not seen >> c & 1:
                seen |= 1 << c
                stack.append(c)
    return False


# ---------------------------------------------------------------------------
# initialization and drivers


def default_max_indegree(n: int) -> int:
    """Unlimited for small n, then capped to keep subset caches in memory."""
    if n <= 10:
        return n - 1
    if n <= 15:
        return 5
    return 3


def bic_init(
    d: Dataset,
    max_indegree: int | None = None,
    cell_cap: int = DEFAULT_CELL_CAP,
    stats_cache: FamilyStatsCache | None = None,
) -> Dag:
    """ESS-free starting graph: the BIC optimum (exact where feasible)."""
    return map_search(
        d, BIC, max_indegree=max_indegree, cell_cap=cell_cap, stats_cache=stats_cache
    ).dag


def map_search(
    d: Dataset,
    criterion: Criterion,
    max_indegree: int | None = None,
    exact: bool | None = None,
    init: Dag | None = None,
    cell_cap: int = DEFAULT_CELL_CAP,
    stats_cache: FamilyStatsCache | None = None,
) -> SearchResult:
    """Structure search with engine selection.

    ``exact=None`` picks exact dynamic programming for up to 15 nodes and
    hill climbing beyond; pass True/False to force an engine.
    """
    n = d.n_vars
    if max_indegree is None:
        max_indegree = default_max_indegree(n)
    if exact is None:
        exact = n <= 15
    if exact:
        cache = build_cache(d, criterion, max_indegree, cell_cap, stats_cache)
        return exact_dp_map(cache)
    return hill_climb(d, criterion, init, max_indegree, cell_cap, stats_cache)


def ess_sweep(
    d: Dataset,
    alphas: Iterable[float],
    max_indegree: int | None = None,
    exact: bool | None = None,
    cell_cap: int = DEFAULT_CELL_CAP,
) -> list[tuple[float, int | None, float | None, str | None]]:
    """MAP edge count and score per ESS value.

    Returns one (alpha, edges, score, error) row per grid point in grid
    order; a failed search yields an error message with None results and
    the sweep continues.
    """
    stats_cache = FamilyStatsCache(d, cell_cap)
    rows = []
    for alpha in alphas:
        try:
            res = map_search(
                d,
                bdeu_criterion(alpha),
                max_indegree=max_indegree,
                exact=exact,
                cell_cap=cell_cap,
                stats_cache=stats_cache,
            )
            rows.append((float(alpha), res.dag.edge_count, res.score, None))
        except SizeError as exc:
            rows.append((float(alpha), None, None, str(exc)))
    return rows
