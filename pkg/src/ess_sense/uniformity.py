"""A uniformity measure for conditional bivariate distributions.

For a joint distribution p(a, b, pi) over two variables A, B and a
conditioning set Pi, the measure is the state-count-weighted combination

    U = |A,B,Pi| * sum p(a,b,pi)^2  -  |A,Pi| * sum p(a,pi)^2
        - |B,Pi| * sum p(b,pi)^2  +  |Pi| * sum p(pi)^2,

where |.| counts joint states.  U is symmetric in A and B, non-negative,
and zero exactly when A and B are conditionally independent with, for each
conditioning state of positive mass, at least one uniform conditional
marginal.  Independent but doubly skewed distributions therefore score
strictly positive.

Three algebraically equivalent forms are implemented: the squared-moment
form above (numerically the most stable, used for the headline value), a
per-conditioning-state conditional form (used for the report breakdown),
and the expectation-of-deviations form (kept as a cross-check).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import PairCounts
from .errors import EmptyDataError, NormalizationError

#: How far a table's total mass may drift from one before we refuse it.
CONSTRUCTION_TOL = 1e-9

#: Default detection threshold for witness search on count-derived tables.
DEFAULT_WITNESS_TOL = 1e-9


@dataclass(frozen=True)
class CondJointDist:
    """Joint distribution over (A, B, conditioning state), normalized once.

    ``probs[a, b, p]`` holds the joint mass; the stored table is rescaled
    exactly to unit total on construction, and construction fails if the
    input total is farther than ``CONSTRUCTION_TOL`` from one.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim == 2:
            probs = probs[:, :, None]
        if probs.ndim != 3:
            raise ValueError("probability table must have shape (|A|, |B|, |Pi|)")
        if np.any(probs < 0):
            raise NormalizationError("probabilities must be non-negative")
        # fsum is exactly rounded, so the total (and hence the normalized
        # table) does not depend on element order; axis swaps stay bit-exact
        total = math.fsum(probs.ravel().tolist())
        if abs(total - 1.0) > CONSTRUCTION_TOL:
            raise NormalizationError(f"probability table sums to {total}, not 1")
        probs = probs / total
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "CondJointDist":
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        if total <= 0:
            raise EmptyDataError("cannot normalize an all-zero count table")
        return cls(counts / total)

    @classmethod
    def _already_normalized(cls, probs: np.ndarray) -> "CondJointDist":
        # bypasses renormalization so rearrangements keep entries bit-exact
        inst = object.__new__(cls)
        object.__setattr__(inst, "probs", probs)
        return inst

    @property
    def a_arity(self) -> int:
        return self.probs.shape[0]

    @property
    def b_arity(self) -> int:
        return self.probs.shape[1]

    @property
    def cond_state_count(self) -> int:
        return self.probs.shape[2]

    def swapped(self) -> "CondJointDist":
        return CondJointDist._already_normalized(np.swapaxes(self.probs, 0, 1))


@dataclass(frozen=True)
class UniformityReport:
    """The measure value plus one contribution per conditioning state."""

    u: float
    per_pi: tuple[float, ...]


def squared_moment_form(dist: CondJointDist) -> float:
    """State-count-weighted sums of squared joint and marginal masses.

    Aggregates use exactly rounded summation and a commutative combination,
    so the value is bit-identical under swapping the two variables.
    """
    p = dist.probs
    na, nb, npi = p.shape
    p_api = p.sum(axis=1)
    p_bpi = p.sum(axis=0)
    s_joint = math.fsum((p * p).ravel().tolist())
    s_a = math.fsum((p_api * p_api).ravel().tolist())
    s_b = math.fsum((p_bpi * p_bpi).ravel().tolist())
    s_pi = math.fsum(
        math.fsum(p[:, :, k].ravel().tolist()) ** 2 for k in range(npi)
    )
    return na * nb * npi * s_joint - (na * npi * s_a + nb * npi * s_b) + npi * s_pi


def per_state_contributions(dist: CondJointDist) -> np.ndarray:
    """Per-conditioning-state terms of the conditional-probability form.

    Entry ``pi`` is ``|Pi| * p(pi)^2`` times the conditional deviation sum;
    the entries add up to the measure.  States of zero mass contribute zero.
    """
    p = dist.probs
    na, nb, npi = p.shape
    p_pi = p.sum(axis=(0, 1))
    out = np.zeros(npi)
    for k in range(npi):
        mass = p_pi[k]
        if mass <= 0:
            continue
        joint = p[:, :, k] / mass
        ma = joint.sum(axis=1)
        mb = joint.sum(axis=0)
        inner = np.sum(
            joint * (na * nb * joint - na * ma[:, None] - nb * mb[None, :] + 1.0)
        )
        out[k] = npi * mass**2 * inner
    return out


def deviation_expectation_form(dist: CondJointDist) -> float:
    """Expectation, under the joint, of the weighted deviation terms."""
    p = dist.probs
    na, nb, npi = p.shape
    p_api = p.sum(axis=1)
    p_bpi = p.sum(axis=0)
    p_pi = p_api.sum(axis=0)
    dev = (
        na * nb * npi * p
        - na * npi * p_api[:, None, :]
        - nb * npi * p_bpi[None, :, :]
        + npi * p_pi[None, None, :]
    )
    return float(np.sum(p * dev))


def uniformity(dist: CondJointDist) -> UniformityReport:
    """The uniformity measure with its per-conditioning-state breakdown."""
    per_pi = per_state_contributions(dist)
    return UniformityReport(u=squared_moment_form(dist), per_pi=tuple(per_pi))


def uniformity_from_counts(pc: PairCounts) -> UniformityReport:
    """Uniformity of the empirical distribution implied by a count table."""
    if pc.n_records == 0:
        raise EmptyDataError("uniformity needs at least one record")
    return uniformity(CondJointDist.from_counts(pc.counts))


def minimality_witness(dist: CondJointDist, tol: float = DEFAULT_WITNESS_TOL):
    """A conditioning state demonstrating why the measure is positive.

    Returns the index of a state with mass above ``tol`` whose conditional
    is either dependent (joint differs from the product of its marginals by
    more than ``tol``) or has both marginals non-uniform beyond ``tol``.
    Returns ``None`` when no such state exists, which is exactly the
    measure's zero set up to ``tol`` effects.
    """
    p = dist.probs
    na, nb, npi = p.shape
    p_pi = p.sum(axis=(0, 1))
    for k in range(npi):
        mass = p_pi[k]
        if mass <= tol:
            continue
        joint = p[:, :, k] / mass
        ma = joint.sum(axis=1)
        mb = joint.sum(axis=0)
        if np.max(np.abs(joint - np.outer(ma, mb))) > tol:
            return k
        dev_a = np.max(np.abs(ma - 1.0 / na))
        dev_b = np.max(np.abs(mb - 1.0 / nb))
        if dev_a > tol and dev_b > tol:
            return k
    return None
