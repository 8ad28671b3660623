"""Sufficient statistics and the supervised marginal likelihood kernel.

A diagnostic class model conditions the class on a subset of predictors.
Its fit to labeled data is the probability of the observed label sequence
given the predictor rows, with the per-configuration class distributions
integrated out under a Dirichlet prior. That quantity has a closed form in
gamma functions over the (configuration x class) count table; everything
here works in natural-log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .data import Dataset
from .errors import ConfigError

UNIFORM_CELL = "uniform_cell"
EQUIVALENT_SAMPLE_SIZE = "equivalent_sample_size"

# prior cell mass below this log is handled through the small-argument
# limit of the gamma ratios instead of raw floats
_LOG_FLOAT_SAFE = 600.0
_TINY = np.finfo(float).tiny


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if x <= 0:
        raise ValueError("log_gamma requires x > 0")
    return math.lgamma(x)


@dataclass(frozen=True)
class PriorSpec:
    """Dirichlet hyperparameter rule for count-table cells.

    ``uniform_cell`` puts ``strength`` on every (configuration, class) cell.
    ``equivalent_sample_size`` spreads a total mass of ``strength`` evenly
    over the configuration space, giving ``strength / (q * r)`` per cell; the
    total prior mass then stays comparable across models of different size.
    """

    kind: str
    strength: float

    def __post_init__(self) -> None:
        if self.kind not in (UNIFORM_CELL, EQUIVALENT_SAMPLE_SIZE):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if not self.strength > 0:
            raise ValueError("prior strength must be > 0")

    @classmethod
    def uniform_cell(cls, alpha: float = 1.0) -> "PriorSpec":
        return cls(UNIFORM_CELL, float(alpha))

    @classmethod
    def equivalent_sample_size(cls, s: float) -> "PriorSpec":
        return cls(EQUIVALENT_SAMPLE_SIZE, float(s))

    def cell_prior(self, q: int, log_q: float, class_arity: int) -> tuple[float, float]:
        """Per-cell pseudo-count for a table with q configurations: (value, log value).

        The float value underflows to 0.0 for astronomically large q; the log
        form stays finite and callers fall back to it.
        """
        if self.kind == UNIFORM_CELL:
            return self.strength, math.log(self.strength)
        log_a = math.log(self.strength) - log_q - math.log(class_arity)
        if log_q < _LOG_FLOAT_SAFE:
            return self.strength / (float(q) * class_arity), log_a
        return math.exp(log_a), log_a

    def class_cell_prior(self, class_arity: int) -> float:
        """Pseudo-count on each class cell of a marginal class table (q = 1)."""
        if self.kind == UNIFORM_CELL:
            return self.strength
        return self.strength / class_arity

    def attribute_smoothing(
        self, q: int, log_q: float, class_arity: int
    ) -> tuple[float, float, float, float]:
        """Smoothing for one conditional table: (cell, log cell, mass, log mass).

        ``mass`` is the per-class prior total q * cell; it is float('inf') when
        that product leaves float range, in which case ``log mass`` is the
        usable form.
        """
        cell, log_cell = self.cell_prior(q, log_q, class_arity)
        if self.kind == UNIFORM_CELL:
            log_mass = log_cell + log_q
            mass = self.strength * float(q) if log_mass < _LOG_FLOAT_SAFE else math.inf
        else:
            mass = self.strength / class_arity
            log_mass = math.log(mass)
        return cell, log_cell, mass, log_mass

    def describe(self) -> str:
        tag = "uniform" if self.kind == UNIFORM_CELL else "bdeu"
        return f"{tag}:{self.strength:g}"

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "strength": self.strength}

    @classmethod
    def from_json_dict(cls, d: dict) -> "PriorSpec":
        return cls(d["kind"], float(d["strength"]))


def check_subset(subset: Sequence[int], n_predictors: int) -> tuple[int, ...]:
    """Validate a relevant-predictor subset: sorted, distinct, in range."""
    out = tuple(int(i) for i in subset)
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError("subset indices must be sorted and distinct")
    if out and (out[0] < 0 or out[-1] >= n_predictors):
        raise ValueError(f"subset index outside 0..{n_predictors - 1}")
    return out


@dataclass(eq=False)
class CountTable:
    """Sparse (configuration x class) counts over one predictor subset.

    Only configurations that occur in the data are stored; ``q`` is the exact
    size of the full configuration space (a Python int, so it never wraps)
    and ``log_q`` its log for use when q dwarfs float range. The empty subset
    has the single configuration () and q = 1.
    """

    subset: tuple[int, ...]
    configs: tuple[tuple[int, ...], ...]
    counts: np.ndarray  # (len(configs), class_arity) int64
    n_rows: int
    class_arity: int
    q: int
    log_q: float
    _index: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        counts = np.ascontiguousarray(np.asarray(self.counts, dtype=np.int64))
        counts = counts.reshape(len(self.configs), self.class_arity)
        if counts.size and counts.min() < 0:
            raise ValueError("counts must be nonnegative")
        if int(counts.sum()) != self.n_rows:
            raise ValueError("counts must sum to the number of rows")
        if counts.size and not (counts.sum(axis=1) > 0).all():
            raise ValueError("stored configurations must have positive count")
        counts.flags.writeable = False
        self.counts = counts
        self._index = {c: i for i, c in enumerate(self.configs)}

    def config_counts(self, config: tuple[int, ...]) -> np.ndarray | None:
        """Count vector for one configuration, or None if never observed."""
        i = self._index.get(config)
        return None if i is None else self.counts[i]

    def to_json_dict(self) -> dict:
        return {
            "subset": list(self.subset),
            "configs": [list(c) for c in self.configs],
            "counts": self.counts.tolist(),
            "n_rows": self.n_rows,
            "class_arity": self.class_arity,
            "q": self.q,
            "log_q": self.log_q,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "CountTable":
        configs = tuple(tuple(int(v) for v in c) for c in d["configs"])
        return cls(
            tuple(int(i) for i in d["subset"]),
            configs,
            np.array(d["counts"], dtype=np.int64).reshape(len(configs), -1),
            int(d["n_rows"]),
            int(d["class_arity"]),
            int(d["q"]),
            float(d["log_q"]),
        )


def build_count_table(data: Dataset, subset: Sequence[int]) -> CountTable:
    """Tally (configuration, class) counts for `subset` in one pass over `data`."""
    sub = check_subset(subset, data.schema.n_predictors)
    arities = [data.schema.predictor_arities[i] for i in sub]
    q = 1
    for a in arities:
        q *= a
    log_q = float(sum(math.log(a) for a in arities))
    r = data.schema.class_arity

    acc: dict[tuple[int, ...], list[int]] = {}
    labels = data.labels.tolist()
    if sub:
        keys = [tuple(row) for row in data.rows[:, sub].tolist()]
    else:
        keys = [()] * data.n_rows
    for key, y in zip(keys, labels):
        vec = acc.get(key)
        if vec is None:
            vec = acc[key] = [0] * r
        vec[y] += 1

    configs = tuple(sorted(acc))  # canonical order keeps scores reproducible
    counts = np.array([acc[c] for c in configs], dtype=np.int64).reshape(len(configs), r)
    return CountTable(sub, configs, counts, data.n_rows, r, q, log_q)


def log_sml(table: CountTable, prior: PriorSpec) -> float:
    """Log probability of the label sequence given the predictor rows.

    Closed form: for each stored configuration j with class counts N_jk,

        lgamma(A_j) - lgamma(A_j + N_j) + sum_k [lgamma(a + N_jk) - lgamma(a)]

    where a is the prior cell mass and A_j = r * a. Configurations with zero
    rows contribute exactly 0, so only stored configurations are visited; the
    empty table gives 0 (an empty product).
    """
    if table.n_rows == 0:
        return 0.0
    r = table.class_arity
    a_cell, log_a_cell = prior.cell_prior(table.q, table.log_q, r)
    counts = table.counts
    n_j = counts.sum(axis=1)
    if a_cell > 0.0:
        a_row = a_cell * r
        row_part = gammaln(a_row) - gammaln(a_row + n_j)
        cell_part = gammaln(counts + a_cell) - gammaln(a_cell)
        return float(row_part.sum() + cell_part.sum())
    # prior mass underflowed float range: gamma(a)/gamma(a + N) -> -log a - lgamma(N)
    log_a_row = log_a_cell + math.log(r)
    row_part = -log_a_row - gammaln(n_j)
    pos = counts > 0
    cell_part = np.where(pos, gammaln(np.maximum(counts, 1)) + log_a_cell, 0.0)
    return float(row_part.sum() + cell_part.sum())


@dataclass(frozen=True)
class FamilyScore:
    """Joint score of a model family: log of the mean member likelihood."""

    log_value: float
    member_log_scores: tuple[float, ...]

    def to_json_dict(self) -> dict:
        # decimal strings keep full precision independent of the JSON reader
        return {
            "log_value": format(self.log_value, ".17g"),
            "member_log_scores": [format(s, ".17g") for s in self.member_log_scores],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FamilyScore":
        return cls(
            float(d["log_value"]),
            tuple(float(s) for s in d["member_log_scores"]),
        )


def log_family_score(member_log_scores: Sequence[float]) -> FamilyScore:
    """Average the member likelihoods in probability space, staying in logs.

    Max-shifted log-sum-exp, so members anywhere down to -1e6 and beyond
    neither overflow nor collapse to -inf.
    """
    members = tuple(float(s) for s in member_log_scores)
    if not members:
        raise ValueError("family must have at least one member score")
    value = float(logsumexp(np.asarray(members)) - math.log(len(members)))
    return FamilyScore(value, members)
