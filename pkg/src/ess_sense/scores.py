"""Decomposable graph scores over complete categorical data.

The central quantity is the BDeu log marginal likelihood: a product over
families of Dirichlet-multinomial terms whose hyperparameters are a single
equivalent sample size ``alpha`` spread uniformly over each family's cells.
Alongside it live the maximum log-likelihood, the zero-cell-corrected
effective parameter count, the BIC/AIC criteria, and posterior-mean
parameter estimates.

All scores are natural-log values; the per-family terms of a graph score
are summed in node order so results are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from .dataset import Dataset, FamilyCounts, family_counts
from .errors import DomainError, EmptyDataError, ParseError

__all__ = [
    "BdeuHyper",
    "Dag",
    "ScoreBreakdown",
    "log_gamma_ratio",
    "bdeu_family_score",
    "bdeu_graph_score",
    "max_loglik",
    "effective_params",
    "bic_score",
    "aic_score",
    "posterior_mean_params",
]


@dataclass(frozen=True)
class BdeuHyper:
    """The equivalent sample size of the uniform Dirichlet prior.

    For a family with child arity ``r`` and ``q`` joint parent states the
    per-cell hyperparameter is ``alpha / (r * q)`` and the per-parent-state
    total is ``alpha / q``.
    """

    alpha: float

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"equivalent sample size must be positive and finite, got {self.alpha}")

    def alpha_cell(self, child_arity: int, parent_state_count: int) -> float:
        return self.alpha / (child_arity * parent_state_count)

    def alpha_parent(self, parent_state_count: int) -> float:
        return self.alpha / parent_state_count


class Dag:
    """A directed acyclic graph held as one parent tuple per node."""

    __slots__ = ("n", "parent_sets")

    def __init__(self, n: int, parent_sets: Sequence[Sequence[int]]):
        if len(parent_sets) != n:
            raise ValueError(f"expected {n} parent sets, got {len(parent_sets)}")
        cleaned = []
        for i, ps in enumerate(parent_sets):
            ps = tuple(sorted(int(p) for p in ps))
            if any(p < 0 or p >= n for p in ps):
                raise ValueError(f"node {i}: parent index out of range")
            if i in ps:
                raise ValueError(f"node {i} lists itself as a parent")
            if len(set(ps)) != len(ps):
                raise ValueError(f"node {i} lists a duplicate parent")
            cleaned.append(ps)
        self.n = n
        self.parent_sets = tuple(cleaned)
        self.topological_order()  # raises on cycles

    def topological_order(self) -> list[int]:
        indeg = [len(ps) for ps in self.parent_sets]
        children: list[list[int]] = [[] for _ in range(self.n)]
        for i, ps in enumerate(self.parent_sets):
            for p in ps:
                children[p].append(i)
        ready = [i for i in range(self.n) if indeg[i] == 0]
        order = []
        while ready:
            v = ready.pop()
            order.append(v)
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != self.n:
            raise ValueError("parent sets contain a directed cycle")
        return order

    @property
    def edge_count(self) -> int:
        return sum(len(ps) for ps in self.parent_sets)

    @classmethod
    def empty(cls, n: int) -> "Dag":
        return cls(n, [()] * n)

    def with_parents(self, node: int, parents: Sequence[int]) -> "Dag":
        sets = list(self.parent_sets)
        sets[node] = tuple(parents)
        return Dag(self.n, sets)

    def __eq__(self, other):
        return isinstance(other, Dag) and self.parent_sets == other.parent_sets

    def __hash__(self):
        return hash(self.parent_sets)

    def __repr__(self):
        return f"Dag(n={self.n}, parent_sets={self.parent_sets})"

    def to_json_obj(self, names: Sequence[str]) -> dict:
        """Wire format: {"nodes": [...], "parents": {name: [names...]}}."""
        if len(names) != self.n:
            raise ValueError("need one name per node")
        return {
            "nodes": list(names),
            "parents": {
                names[i]: [names[p] for p in ps]
                for i, ps in enumerate(self.parent_sets)
            },
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> tuple["Dag", tuple[str, ...]]:
        """Parse the wire format, returning the graph and its node names."""
        if not isinstance(obj, Mapping):
            raise ParseError("graph document must be a JSON object")
        if "nodes" not in obj:
            raise ParseError("graph document lacks required key 'nodes'")
        if "parents" not in obj:
            raise ParseError("graph document lacks required key 'parents'")
        nodes = obj["nodes"]
        if not isinstance(nodes, list) or not all(isinstance(x, str) for x in nodes):
            raise ParseError("key 'nodes' must be a list of names")
        index = {name: i for i, name in enumerate(nodes)}
        if len(index) != len(nodes):
            raise ParseError("key 'nodes' contains a duplicate name")
        parents_obj = obj["parents"]
        if not isinstance(parents_obj, Mapping):
            raise ParseError("key 'parents' must map node names to parent lists")
        parent_sets: list[tuple[int, ...]] = [() for _ in nodes]
        for name, plist in parents_obj.items():
            if name not in index:
                raise ParseError(f"key 'parents' names unknown node {name!r}")
            if not isinstance(plist, list):
                raise ParseError(f"parents of {name!r} must be a list")
            try:
                parent_sets[index[name]] = tuple(index[p] for p in plist)
            except (KeyError, TypeError):
                raise ParseError(f"parents of {name!r} name an unknown node") from None
        try:
            return cls(len(nodes), parent_sets), tuple(nodes)
        except ValueError as exc:
            raise ParseError(str(exc)) from None


@dataclass(frozen=True)
class ScoreBreakdown:
    """A graph score and its per-family terms, summed in node order."""

    total: float
    per_family: tuple[float, ...]


#: Scalar integer counts up to this size are evaluated by the exact finite
#: product, which stays accurate when the base dwarfs the count.
_PRODUCT_FORM_LIMIT = 1024


def log_gamma_ratio(count, a):
    """log Gamma(count + a) - log Gamma(a), elementwise over arrays.

    ``count`` of zero contributes exactly zero.  ``a`` must be positive.
    For scalar integer counts up to 1024 the ratio collapses to the finite
    product of (a + k) factors and is summed with exact rounding; the
    cancellation of two large log-gamma values would otherwise swamp tiny
    results when ``a`` is huge.  Arrays always go through the log-gamma
    routine.
    """
    a_arr = np.asarray(a, dtype=float)
    if np.any(a_arr <= 0) or not np.all(np.isfinite(a_arr)):
        raise DomainError("gamma-ratio base must be positive and finite")
    scalar = np.isscalar(count) or (isinstance(count, np.ndarray) and count.ndim == 0)
    if scalar and a_arr.ndim == 0:
        c = float(count)
        if c.is_integer() and 0 <= c <= _PRODUCT_FORM_LIMIT:
            base = float(a_arr)
            return math.fsum(math.log(base + k) for k in range(int(c)))
        return float(gammaln(c + a_arr) - gammaln(a_arr))
    result = gammaln(np.asarray(count, dtype=float) + a_arr) - gammaln(a_arr)
    return float(result) if scalar else result


def bdeu_family_score(fc: FamilyCounts, h: BdeuHyper) -> float:
    """One family's BDeu log marginal-likelihood term.

    Parent states that were never observed contribute exactly zero, as do
    unobserved cells, so sparse tables cost nothing beyond their size.
    """
    a_cell = h.alpha_cell(fc.child_arity, fc.parent_state_count)
    a_par = h.alpha_parent(fc.parent_state_count)
    cell_term = log_gamma_ratio(fc.cell_counts, a_cell).sum()
    parent_term = log_gamma_ratio(fc.parent_counts, a_par).sum()
    return float(cell_term - parent_term)


def bdeu_graph_score(d: Dataset, g: Dag, h: BdeuHyper) -> ScoreBreakdown:
    """BDeu log marginal likelihood of a graph, decomposed per family."""
    _check_graph(d, g)
    per_family = tuple(
        bdeu_family_score(family_counts(d, i, g.parent_sets[i]), h)
        for i in range(g.n)
    )
    return ScoreBreakdown(total=sum(per_family), per_family=per_family)


def _check_graph(d: Dataset, g: Dag):
    if g.n != d.n_vars:
        raise ValueError(f"graph has {g.n} nodes but dataset has {d.n_vars} variables")


def family_max_loglik(fc: FamilyCounts) -> float:
    """Sum of N_cell * log(N_cell / N_parent) over observed cells."""
    cells = fc.cell_counts
    parents = np.broadcast_to(fc.parent_counts, cells.shape)
    mask = cells > 0
    c = cells[mask].astype(float)
    return float(np.sum(c * np.log(c / parents[mask])))


def family_effective_params(fc: FamilyCounts) -> int:
    """Observed cells minus observed parent states for one family."""
    return int((fc.cell_counts > 0).sum() - (fc.parent_counts > 0).sum())


def family_raw_params(fc: FamilyCounts) -> int:
    """(child arity - 1) * number of joint parent states."""
    return (fc.child_arity - 1) * fc.parent_state_count


def max_loglik(d: Dataset, g: Dag) -> float:
    """Maximum log likelihood of the graph (undivided by sample size)."""
    _require_records(d)
    _check_graph(d, g)
    return sum(
        family_max_loglik(family_counts(d, i, g.parent_sets[i])) for i in range(g.n)
    )


def effective_params(d: Dataset, g: Dag) -> int:
    """Zero-cell-corrected parameter count of the fitted graph.

    Counts observed contingency cells minus observed parent states per
    family; equals sum_i (arity_i - 1) * parent_states_i when every cell
    of every family is positive.
    """
    _check_graph(d, g)
    return sum(
        family_effective_params(family_counts(d, i, g.parent_sets[i]))
        for i in range(g.n)
    )


def _require_records(d: Dataset):
    if d.n_records == 0:
        raise EmptyDataError("operation needs at least one record")


def bic_score(d: Dataset, g: Dag) -> ScoreBreakdown:
    """Log likelihood penalized by (free parameters / 2) * log N per family."""
    _require_records(d)
    _check_graph(d, g)
    log_n = math.log(d.n_records)
    per_family = []
    for i in range(g.n):
        fc = family_counts(d, i, g.parent_sets[i])
        per_family.append(family_max_loglik(fc) - 0.5 * family_raw_params(fc) * log_n)
    per_family = tuple(per_family)
    return ScoreBreakdown(total=sum(per_family), per_family=per_family)


def aic_score(d: Dataset, g: Dag) -> ScoreBreakdown:
    """Log likelihood penalized by one unit per free parameter."""
    _require_records(d)
    _check_graph(d, g)
    per_family = []
    for i in range(g.n):
        fc = family_counts(d, i, g.parent_sets[i])
        per_family.append(family_max_loglik(fc) - family_raw_params(fc))
    per_family = tuple(per_family)
    return ScoreBreakdown(total=sum(per_family), per_family=per_family)


def posterior_mean_params(fc: FamilyCounts, h: BdeuHyper) -> np.ndarray:
    """Posterior-mean conditional probability table, child state by parent state.

    Entry ``[x, p]`` is ``(N_xp + a_cell) / (N_p + a_parent)``; each column
    sums to one.
    """
    a_cell = h.alpha_cell(fc.child_arity, fc.parent_state_count)
    a_par = h.alpha_parent(fc.parent_state_count)
    return (fc.cell_counts + a_cell) / (fc.parent_counts + a_par)
