"""Complete categorical data and its sufficient statistics.

A :class:`Dataset` is an immutable table of state indices plus per-variable
arities.  Every scoring operation in the package consumes one of the two
contingency-table views built here: :func:`family_counts` (one child against
one parent set) or :func:`pair_counts` (two variables against a conditioning
set).  :func:`synth_skewed_independent` constructs the deterministic
skewed-but-independent datasets used throughout the analysis examples.

Joint parent states use mixed-radix encoding over the parents in listed
order, with the last-listed parent varying fastest.  All modules share this
convention.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateVariableError,
    DomainError,
    EmptyDataError,
    MissingDataError,
    NonRepresentableError,
    ParseError,
    TableTooLargeError,
)

MISSING_MARKER = "?"

#: Largest dense contingency table (in cells) built without complaint.
DEFAULT_CELL_CAP = 10_000_000


@dataclass(frozen=True)
class Dataset:
    """Complete categorical records with named, fixed-arity variables.

    ``records`` is an ``(N, n)`` integer array; entry ``(r, i)`` is the state
    index of variable ``i`` in record ``r`` and lies in ``[0, arities[i])``.
    Instances are immutable after construction.
    """

    names: tuple[str, ...]
    arities: tuple[int, ...]
    records: np.ndarray

    def __post_init__(self):
        records = np.asarray(self.records, dtype=np.int64)
        if records.ndim != 2:
            records = records.reshape(-1, len(self.names))
        if len(self.names) != len(self.arities):
            raise ValueError("names and arities must have equal length")
        if records.shape[1] != len(self.names):
            raise ValueError(
                f"records have {records.shape[1]} columns, expected {len(self.names)}"
            )
        if any(a < 2 for a in self.arities):
            raise DegenerateVariableError("every variable needs arity >= 2")
        if records.size:
            if records.min() < 0:
                raise ValueError("negative state index")
            if (records.max(axis=0) >= np.asarray(self.arities)).any():
                raise ValueError("state index out of range for declared arity")
        records.setflags(write=False)
        object.__setattr__(self, "records", records)

    @classmethod
    def from_records(
        cls,
        records: Sequence[Sequence[int]] | np.ndarray,
        arities: Sequence[int],
        names: Sequence[str] | None = None,
    ) -> "Dataset":
        """Build a dataset from raw index rows, naming variables X0.. by default."""
        arities = tuple(int(a) for a in arities)
        if names is None:
            names = tuple(f"X{i}" for i in range(len(arities)))
        records = np.asarray(records, dtype=np.int64).reshape(-1, len(arities))
        return cls(tuple(names), arities, records)

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_records(self) -> int:
        return int(self.records.shape[0])

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no variable named {name!r}") from None


@dataclass(frozen=True)
class FamilyCounts:
    """Contingency table for one child variable given one parent set.

    ``cell_counts[x, p]`` is the number of records with child state ``x``
    and joint parent state ``p``; ``parent_counts`` is its column sum.
    """

    child: int
    parents: tuple[int, ...]
    cell_counts: np.ndarray
    parent_counts: np.ndarray = field(repr=False)
    child_arity: int = 0
    parent_state_count: int = 1

    def __post_init__(self):
        self.cell_counts.setflags(write=False)
        self.parent_counts.setflags(write=False)

    @property
    def n_records(self) -> int:
        return int(self.cell_counts.sum())


@dataclass(frozen=True)
class PairCounts:
    """Joint counts for a variable pair given a conditioning set.

    ``counts[a, b, p]`` is the number of records with ``a_var`` in state
    ``a``, ``b_var`` in state ``b`` and the conditioning variables in joint
    state ``p``.  The three marginal tables are consistent sums.
    """

    a_var: int
    b_var: int
    cond_set: tuple[int, ...]
    counts: np.ndarray
    a_marginal: np.ndarray = field(repr=False)
    b_marginal: np.ndarray = field(repr=False)
    cond_marginal: np.ndarray = field(repr=False)
    a_arity: int = 0
    b_arity: int = 0
    cond_state_count: int = 1

    def __post_init__(self):
        for table in (self.counts, self.a_marginal, self.b_marginal, self.cond_marginal):
            table.setflags(write=False)

    @property
    def n_records(self) -> int:
        return int(self.counts.sum())


def load_csv(source: str | Path | IO[bytes] | IO[str] | bytes) -> Dataset:
    """Read a comma-separated file of categorical tokens into a dataset.

    The first row names the variables.  Distinct tokens in each column are
    mapped to state indices in order of first appearance, so the mapping is
    a deterministic function of the file bytes.  No quoting is interpreted;
    tokens are taken verbatim.

    Raises :class:`ParseError` on ragged rows, :class:`MissingDataError` on
    empty tokens or the ``?`` marker, and :class:`DegenerateVariableError`
    when a column holds fewer than two distinct tokens.
    """
    text = _read_text(source)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty input: no header row")
    header = [tok.strip("\r") for tok in lines[0].split(",")]
    n = len(header)
    if len(set(header)) != n:
        raise ParseError("duplicate column name in header")

    token_maps: list[dict[str, int]] = [{} for _ in range(n)]
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.rstrip("\r").split(",")
        if len(tokens) != n:
            raise ParseError(f"row {lineno}: expected {n} fields, got {len(tokens)}")
        row = np.empty(n, dtype=np.int64)
        for i, tok in enumerate(tokens):
            if tok == "" or tok == MISSING_MARKER:
                raise MissingDataError(
                    f"row {lineno}, column {header[i]!r}: missing value"
                )
            row[i] = token_maps[i].setdefault(tok, len(token_maps[i]))
        rows.append(row)

    arities = tuple(len(m) for m in token_maps)
    for name, arity in zip(header, arities):
        if arity < 2:
            raise DegenerateVariableError(
                f"column {name!r} has {arity} distinct value(s); need at least 2"
            )
    records = np.vstack(rows) if rows else np.empty((0, n), dtype=np.int64)
    return Dataset(tuple(header), arities, records)


def _read_text(source) -> str:
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes().decode("utf-8")
    if isinstance(source, bytes):
        return source.decode("utf-8")
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def joint_parent_index(
    records: np.ndarray, arities: Sequence[int], parents: Sequence[int]
) -> tuple[np.ndarray, int]:
    """Mixed-radix joint state of ``parents`` per record, last parent fastest.

    Returns the per-record joint index and the number of joint states
    (1 for an empty parent set).
    """
    n_rec = records.shape[0]
    idx = np.zeros(n_rec, dtype=np.int64)
    state_count = 1
    for p in parents:
        idx = idx * arities[p] + records[:, p]
        state_count *= int(arities[p])
    return idx, state_count


def _check_parent_indices(d: Dataset, child_like: Iterable[int], parents: Sequence[int]):
    seen = set()
    for p in parents:
        if p < 0 or p >= d.n_vars:
            raise IndexError(f"variable index {p} out of range")
        if p in seen:
            raise ValueError(f"duplicate variable {p} in parent/conditioning set")
        seen.add(p)
    for c in child_like:
        if c < 0 or c >= d.n_vars:
            raise IndexError(f"variable index {c} out of range")
        if c in seen:
            raise ValueError(f"variable {c} may not appear in its own parent/conditioning set")


def family_counts(
    d: Dataset,
    child: int,
    parents: Sequence[int],
    cell_cap: int = DEFAULT_CELL_CAP,
) -> FamilyCounts:
    """Dense contingency table of one child against a joint parent state.

    Cells never observed are zero.  Raises :class:`TableTooLargeError` when
    ``child_arity * prod(parent arities)`` exceeds ``cell_cap``.
    """
    parents = tuple(parents)
    _check_parent_indices(d, (child,), parents)
    child_arity = d.arities[child]
    state_count = 1
    for p in parents:
        state_count *= d.arities[p]
    if child_arity * state_count > cell_cap:
        raise TableTooLargeError(
            f"family table needs {child_arity * state_count} cells (cap {cell_cap})"
        )
    pidx, _ = joint_parent_index(d.records, d.arities, parents)
    flat = pidx * child_arity + d.records[:, child]
    cells = np.bincount(flat, minlength=child_arity * state_count)
    table = cells.reshape(state_count, child_arity).T.copy()
    return FamilyCounts(
        child=child,
        parents=parents,
        cell_counts=table,
        parent_counts=table.sum(axis=0),
        child_arity=child_arity,
        parent_state_count=state_count,
    )


def pair_counts(
    d: Dataset,
    a: int,
    b: int,
    cond: Sequence[int] = (),
    cell_cap: int = DEFAULT_CELL_CAP,
) -> PairCounts:
    """Joint counts of variables ``a`` and ``b`` given a conditioning set.

    Swapping ``a`` and ``b`` transposes the count table; all marginals are
    sums of the full table.
    """
    cond = tuple(cond)
    if a == b:
        raise ValueError("paired variables must differ")
    _check_parent_indices(d, (a, b), cond)
    a_ar, b_ar = d.arities[a], d.arities[b]
    cidx, cond_states = joint_parent_index(d.records, d.arities, cond)
    if a_ar * b_ar * cond_states > cell_cap:
        raise TableTooLargeError(
            f"pair table needs {a_ar * b_ar * cond_states} cells (cap {cell_cap})"
        )
    flat = (d.records[:, a] * b_ar + d.records[:, b]) * cond_states + cidx
    counts = np.bincount(flat, minlength=a_ar * b_ar * cond_states)
    counts = counts.reshape(a_ar, b_ar, cond_states)
    return PairCounts(
        a_var=a,
        b_var=b,
        cond_set=cond,
        counts=counts,
        a_marginal=counts.sum(axis=1),
        b_marginal=counts.sum(axis=0),
        cond_marginal=counts.sum(axis=(0, 1)),
        a_arity=a_ar,
        b_arity=b_ar,
        cond_state_count=cond_states,
    )


def as_fraction(z) -> Fraction:
    """Canonical exact rational for a skew parameter.

    Floats are interpreted through their shortest decimal representation,
    so ``0.1`` means exactly one tenth.
    """
    if isinstance(z, Fraction):
        return z
    if isinstance(z, int):
        return Fraction(z)
    if isinstance(z, float):
        return Fraction(str(z))
    return Fraction(z)


def skewed_cell_targets(z, per_var_n: int, n_vars: int) -> dict[tuple[int, ...], Fraction]:
    """Exact cell targets ``N * z^ones * (1-z)^zeros`` for the product joint."""
    zf = as_fraction(z)
    if not 0 <= zf <= Fraction(1, 2):
        raise DomainError("skew parameter must lie in [0, 1/2]")
    if n_vars < 2:
        raise DomainError("need at least two variables")
    if per_var_n < 1:
        raise EmptyDataError("need a positive sample count")
    targets = {}
    for states in product((0, 1), repeat=n_vars):
        ones = sum(states)
        targets[states] = per_var_n * zf**ones * (1 - zf) ** (n_vars - ones)
    return targets


def synth_skewed_independent(z, per_var_n: int, n_vars: int = 2) -> Dataset:
    """Deterministic binary dataset with an exactly factorizing joint.

    Every variable has empirical P(state 1) equal to ``z`` and the empirical
    joint is the exact product of the marginals.  Rows are emitted in sorted
    order; there is no randomness.  Raises :class:`NonRepresentableError`
    when some cell target ``per_var_n * z^k * (1-z)^(n_vars-k)`` is not an
    integer.
    """
    targets = skewed_cell_targets(z, per_var_n, n_vars)
    rows = []
    for states in sorted(targets):
        count = targets[states]
        if count.denominator != 1:
            raise NonRepresentableError(
                f"cell {states} would need {count} records; "
                f"pick a sample size that makes every cell integral"
            )
        rows.extend([states] * int(count))
    records = np.asarray(rows, dtype=np.int64).reshape(-1, n_vars)
    names = tuple(f"X{i}" for i in range(n_vars))
    return Dataset(names, (2,) * n_vars, records)


def write_csv(d: Dataset, stream: IO[str], state_names: Sequence[Sequence[str]] | None = None):
    """Write a dataset back out in the load_csv format."""
    stream.write(",".join(d.names) + "\n")
    for row in d.records:
        if state_names is None:
            stream.write(",".join(str(int(v)) for v in row) + "\n")
        else:
            stream.write(",".join(state_names[i][v] for i, v in enumerate(row)) + "\n")


def to_csv_text(d: Dataset) -> str:
    buf = io.StringIO()
    write_csv(d, buf)
    return buf.getvalue()
