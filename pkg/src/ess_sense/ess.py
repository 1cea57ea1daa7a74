"""Closed-form optimal equivalent sample size and the joint ascent loop.

For a fixed graph, the predictively optimal ESS is approximated in closed
form by

    alpha* = d_eff / (E_emp[log phat(X|G)] - E_prior[log phat(X|G)]),

where d_eff is the zero-cell-corrected parameter count, the first
expectation weights the log of the fitted factorized distribution by the
empirical distribution, and the second weights it by the uniform per-family
prior.  The denominator decomposes as an entropy gap plus a non-negative
Kullback-Leibler term, which is why it is positive away from degenerate
data.  Zero cells are guarded by lifting each empirical cell count to at
least one and recomputing the conditioning totals from the lifted cells, so
every fitted conditional stays a proper distribution.

The joint optimum over (graph, ESS) is then approached by coordinate
ascent: structure search at the current ESS, closed-form ESS at the current
structure, starting from the ESS-free BIC graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dataset import DEFAULT_CELL_CAP, Dataset, family_counts
from .errors import DegenerateDenominatorError, EmptyDataError, TableTooLargeError
from .scores import BdeuHyper, Dag, bdeu_graph_score
from .search import FamilyStatsCache, bdeu_criterion, bic_init, map_search

__all__ = [
    "EssEstimate",
    "AscentConfig",
    "AscentRound",
    "AscentTrace",
    "expectation_under_empirical",
    "expectation_under_prior",
    "alpha_star",
    "coordinate_ascent",
    "golden_section_alpha",
]

#: Denominators at or below this are treated as exactly degenerate.
DENOM_EPSILON = 1e-9


@dataclass(frozen=True)
class EssEstimate:
    """The closed-form ESS estimate with its ingredients.

    ``alpha_star = numerator / denom`` whenever the denominator is usable;
    ``denom = entropy_gap + kl`` holds identically, with ``kl >= 0``.
    ``no_free_params`` marks the degenerate zero-numerator case, reported
    as an estimate of zero rather than an error.
    """

    alpha_star: float
    numerator: int
    denom: float
    entropy_gap: float
    kl: float
    no_free_params: bool = False


def _family_guarded_tables(d: Dataset, g: Dag, cell_cap: int):
    """Per family: lifted cell counts, lifted totals, arity, state count."""
    for i in range(g.n):
        fc = family_counts(d, i, g.parent_sets[i], cell_cap=cell_cap)
        lifted = np.maximum(fc.cell_counts, 1).astype(float)
        totals = lifted.sum(axis=0)
        yield fc, lifted, totals


def expectation_under_empirical(
    d: Dataset, g: Dag, cell_cap: int = DEFAULT_CELL_CAP
) -> float:
    """Empirical expectation of the fitted factorized log distribution.

    Each family contributes sum over cells of (N+_cell / N) *
    log(N+_cell / N+_parent) with the zero-cell guard applied to both the
    weight and the fitted conditional.
    """
    _require_records(d)
    total = 0.0
    for _fc, lifted, totals in _family_guarded_tables(d, g, cell_cap):
        total += float(np.sum((lifted / d.n_records) * np.log(lifted / totals)))
    return total


def expectation_under_prior(
    d: Dataset,
    g: Dag,
    cell_cap: int = DEFAULT_CELL_CAP,
    joint_enumeration: bool = False,
) -> float:
    """Prior expectation of the fitted factorized log distribution.

    The prior weight of a family cell is the uniform per-family mass
    1 / (child arity * parent states).  With ``joint_enumeration`` the same
    value is instead accumulated by walking every joint configuration of
    all variables under the uniform joint prior; the uniform joint
    marginalizes to exactly the per-family weights, so this is a slow
    cross-check, usable only while the full joint fits the cell cap.
    """
    _require_records(d)
    if joint_enumeration:
        return _expectation_under_joint_uniform(d, g, cell_cap)
    total = 0.0
    for fc, lifted, totals in _family_guarded_tables(d, g, cell_cap):
        q = 1.0 / (fc.child_arity * fc.parent_state_count)
        total += float(q * np.sum(np.log(lifted / totals)))
    return total


def _expectation_under_joint_uniform(d: Dataset, g: Dag, cell_cap: int) -> float:
    joint_states = 1
    for a in d.arities:
        joint_states *= a
        if joint_states > cell_cap:
            raise TableTooLargeError(
                f"full joint enumeration needs more than {cell_cap} states"
            )
    log_tables = []
    for _fc, lifted, totals in _family_guarded_tables(d, g, cell_cap):
        log_tables.append(np.log(lifted / totals))
    grid = np.indices(d.arities).reshape(d.n_vars, -1)
    total = 0.0
    for i in range(g.n):
        parents = g.parent_sets[i]
        pidx = np.zeros(grid.shape[1], dtype=np.int64)
        for p in parents:
            pidx = pidx * d.arities[p] + grid[p]
        total += float(np.sum(log_tables[i][grid[i], pidx]))
    return total / joint_states


def _require_records(d: Dataset):
    if d.n_records == 0:
        raise EmptyDataError("the estimate needs at least one record")


def alpha_star(
    d: Dataset, g: Dag, eps: float = DENOM_EPSILON, cell_cap: int = DEFAULT_CELL_CAP
) -> EssEstimate:
    """Closed-form ESS estimate for a fixed graph.

    Raises :class:`DegenerateDenominatorError` when the denominator is not
    safely positive (the data is indistinguishable from the uniform prior,
    so the estimate diverges).  A graph with zero effective parameters
    yields ``alpha_star == 0`` flagged via ``no_free_params``.
    """
    _require_records(d)
    numerator = 0
    emp = 0.0
    prior = 0.0
    entropy_gap = 0.0
    kl = 0.0
    for fc, lifted, totals in _family_guarded_tables(d, g, cell_cap):
        numerator += int((fc.cell_counts > 0).sum() - (fc.parent_counts > 0).sum())
        log_theta = np.log(lifted / totals)
        a_i = float(np.sum((lifted / d.n_records) * log_theta))
        q = 1.0 / (fc.child_arity * fc.parent_state_count)
        b_i = float(q * np.sum(log_theta))
        emp += a_i
        prior += b_i
        # kl_i is the prior-weighted KL from the uniform conditional to the
        # fitted conditional; gap_i is the matching entropy difference.
        log_arity = float(np.log(fc.child_arity))
        kl += -log_arity - b_i
        entropy_gap += log_arity + a_i
    denom = emp - prior
    if numerator == 0:
        return EssEstimate(
            alpha_star=0.0,
            numerator=0,
            denom=denom,
            entropy_gap=entropy_gap,
            kl=kl,
            no_free_params=True,
        )
    if denom <= eps:
        raise DegenerateDenominatorError(
            f"denominator {denom:.3e} is not safely positive; "
            "the fitted distribution is indistinguishable from the uniform prior"
        )
    return EssEstimate(
        alpha_star=numerator / denom,
        numerator=numerator,
        denom=denom,
        entropy_gap=entropy_gap,
        kl=kl,
    )


@dataclass(frozen=True)
class AscentConfig:
    """Knobs for the coordinate ascent driver."""

    max_rounds: int = 20
    conv_tol: float = 0.1
    max_indegree: int | None = None
    exact: bool | None = None
    exact_step2: bool = False
    cell_cap: int = DEFAULT_CELL_CAP


@dataclass(frozen=True)
class AscentRound:
    """One completed round: the graph in play and the ESS it implies."""

    k: int
    alpha: float
    dag: Dag
    edge_count: int
    score: float
    estimate: EssEstimate
    exact_alpha: float | None = None


@dataclass(frozen=True)
class AscentTrace:
    rounds: tuple[AscentRound, ...]
    converged: bool
    final_alpha: float = field(init=False)
    final_dag: Dag = field(init=False)

    def __post_init__(self):
        if not self.rounds:
            raise ValueError("a trace needs at least one round")
        object.__setattr__(self, "final_alpha", self.rounds[-1].alpha)
        object.__setattr__(self, "final_dag", self.rounds[-1].dag)

    @property
    def final_round(self) -> int:
        return self.rounds[-1].k


def coordinate_ascent(d: Dataset, config: AscentConfig | None = None) -> AscentTrace:
    """Alternate structure search and closed-form ESS until the ESS settles.

    Round zero pairs the ESS-free BIC graph with its closed-form ESS; each
    later round searches for the best structure at the previous round's ESS
    and re-estimates.  The loop stops once consecutive ESS values differ by
    less than ``conv_tol``, or at the round cap.  Runs are deterministic.

    A degenerate denominator aborts the loop; the raised error carries the
    trace completed so far.
    """
    if config is None:
        config = AscentConfig()
    _require_records(d)
    stats_cache = FamilyStatsCache(d, config.cell_cap)

    def one_round(k: int, dag: Dag, done: list[AscentRound]) -> AscentRound:
        try:
            est = alpha_star(d, dag, cell_cap=config.cell_cap)
        except DegenerateDenominatorError as exc:
            exc.trace = AscentTrace(tuple(done), converged=False) if done else None
            raise
        score = bdeu_graph_score(d, dag, BdeuHyper(est.alpha_star)).total if est.alpha_star > 0 else float("nan")
        exact_alpha = (
            golden_section_alpha(d, dag, stats_cache=stats_cache)
            if config.exact_step2
            else None
        )
        return AscentRound(
            k=k,
            alpha=est.alpha_star,
            dag=dag,
            edge_count=dag.edge_count,
            score=score,
            estimate=est,
            exact_alpha=exact_alpha,
        )

    rounds: list[AscentRound] = []
    g0 = bic_init(
        d, max_indegree=config.max_indegree, cell_cap=config.cell_cap, stats_cache=stats_cache
    )
    rounds.append(one_round(0, g0, rounds))
    converged = False
    for k in range(1, config.max_rounds + 1):
        prev_alpha = rounds[-1].alpha
        if prev_alpha <= 0:
            # no free parameters anywhere in the current graph: no ESS to
            # search at, so the ascent cannot proceed
            break
        gk = map_search(
            d,
            bdeu_criterion(prev_alpha),
            max_indegree=config.max_indegree,
            exact=config.exact,
            init=rounds[-1].dag,
            cell_cap=config.cell_cap,
            stats_cache=stats_cache,
        ).dag
        rounds.append(one_round(k, gk, rounds))
        if abs(rounds[-1].alpha - prev_alpha) < config.conv_tol:
            converged = True
            break
    return AscentTrace(tuple(rounds), converged=converged)


def golden_section_alpha(
    d: Dataset,
    g: Dag,
    lo: float = 1e-2,
    hi: float = 1e6,
    tol: float = 1e-6,
    stats_cache: FamilyStatsCache | None = None,
) -> float:
    """ESS maximizing the BDeu score of a fixed graph, by golden section.

    Searches log10(ESS) on [log10(lo), log10(hi)].  The score is unimodal
    in practice; this is a diagnostic for how far the closed form sits from
    the per-graph optimum, not part of the ascent itself.
    """
    sc = stats_cache if stats_cache is not None else FamilyStatsCache(d)
    masks = []
    for i in range(g.n):
        m = 0
        for p in g.parent_sets[i]:
            m |= 1 << p
        masks.append(m)

    def score_at(t: float) -> float:
        alpha = 10.0**t
        return sum(sc.stats(i, masks[i]).bdeu(alpha) for i in range(g.n))

    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = np.log10(lo), np.log10(hi)
    c = b - inv_phi * (b - a)
    e = a + inv_phi * (b - a)
    fc, fe = score_at(c), score_at(e)
    while b - a > tol:
        if fc > fe:
            b, e, fe = e, c, fc
            c = b - inv_phi * (b - a)
            fc = score_at(c)
        else:
            a, c, fc = c, e, fe
            e = a + inv_phi * (b - a)
            fe = score_at(e)
    return float(10.0 ** ((a + b) / 2.0))
