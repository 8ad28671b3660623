"""Classifiers over encoded discrete data.

Four kinds share a common ``predict(x) -> ClassDistribution`` surface:

- ``DiagnosticClassifier``: class given one predictor subset, posterior
  predictive of its count table.
- ``MixtureClassifier``: likelihood-weighted average of diagnostic models,
  either all subsets of a fixed size or the blocks of a partition.
- ``NBClassifier``: naive Bayes with per-predictor conditional tables.
- ``ANBClassifier``: naive Bayes whose attributes are partition blocks, each
  treated as one joint variable.

Distributions are plain numpy vectors, strictly positive and summing to 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .data import Dataset, Schema
from .errors import ConfigError, DataError
from .scoring import (
    CountTable,
    PriorSpec,
    build_count_table,
    log_sml,
)
from .search import Partition, validate_partition

ClassDistribution = np.ndarray

# floor for prior cell mass that underflowed float range; keeps predictions
# strictly positive at the cost of (immeasurably) distorting that edge case
_CELL_FLOOR = np.finfo(float).tiny


@dataclass(eq=False)
class DiagnosticClassifier:
    """Posterior-predictive class distribution given one predictor subset."""

    table: CountTable
    prior: PriorSpec

    def predict(self, x: Sequence[int]) -> ClassDistribution:
        return diag_predict(self, x)


def diag_predict(model: DiagnosticClassifier, x: Sequence[int]) -> ClassDistribution:
    """(count + prior cell) / (config total + prior row mass) at x's configuration.

    A configuration never seen in training falls back to the prior
    predictive, which is uniform for these symmetric priors.
    """
    table = model.table
    r = table.class_arity
    a_cell, _ = model.prior.cell_prior(table.q, table.log_q, r)
    a_cell = max(a_cell, _CELL_FLOOR)
    config = tuple(int(x[i]) for i in table.subset)
    counts = table.config_counts(config)
    if counts is None:
        numer = np.full(r, a_cell)
    else:
        numer = counts + a_cell
    return numer / numer.sum()


@dataclass(eq=False)
class MixtureClassifier:
    """Weighted family of diagnostic models; weights live in log space."""

    components: tuple[DiagnosticClassifier, ...]
    log_weights: np.ndarray

    def __post_init__(self) -> None:
        lw = np.asarray(self.log_weights, dtype=float)
        if lw.shape != (len(self.components),):
            raise ValueError("one log weight per component required")
        if not len(self.components):
            raise ValueError("mixture needs at least one component")
        if abs(float(logsumexp(lw))) > 1e-9:
            raise ValueError("log weights must normalize to 1")
        self.log_weights = lw

    def predict(self, x: Sequence[int]) -> ClassDistribution:
        return mixture_predict(self, x)


def mixture_predict(model: MixtureClassifier, x: Sequence[int]) -> ClassDistribution:
    """Average the component predictions in probability space."""
    preds = np.stack([diag_predict(c, x) for c in model.components])
    out = np.exp(model.log_weights) @ preds
    return out / out.sum()


def _mixture_from_tables(tables: list[CountTable], prior: PriorSpec) -> MixtureClassifier:
    scores = np.array([log_sml(t, prior) for t in tables])
    log_weights = scores - logsumexp(scores)
    components = tuple(DiagnosticClassifier(t, prior) for t in tables)
    return MixtureClassifier(components, log_weights)


def build_omi(
    train: Dataset,
    subset_size: int,
    prior: PriorSpec,
    enumeration_cap: int = 200_000,
) -> MixtureClassifier:
    """Mixture over every predictor subset of exactly `subset_size`.

    Component weights are the member label likelihoods, normalized by
    log-sum-exp. Refuses to enumerate more than `enumeration_cap` subsets.
    """
    n = train.schema.n_predictors
    if not 1 <= subset_size <= n:
        raise ConfigError(f"subset size {subset_size} outside 1..{n}")
    n_subsets = math.comb(n, subset_size)
    if n_subsets > enumeration_cap:
        raise ConfigError(
            f"{n_subsets} subsets of size {subset_size} exceed the cap of {enumeration_cap}"
        )
    tables = [
        build_count_table(train, subset)
        for subset in itertools.combinations(range(n), subset_size)
    ]
    return _mixture_from_tables(tables, prior)


def build_pm_mixture(
    partition: Sequence[Sequence[int]], train: Dataset, prior: PriorSpec
) -> MixtureClassifier:
    """Mixture with one diagnostic component per partition block."""
    part = validate_partition(partition, train.schema.n_predictors)
    tables = [build_count_table(train, block) for block in part]
    return _mixture_from_tables(tables, prior)


def _class_log_prior(class_counts: np.ndarray, prior: PriorSpec) -> np.ndarray:
    """Smoothed log class marginal."""
    r = len(class_counts)
    a = prior.class_cell_prior(r)
    return np.log(class_counts + a) - math.log(float(class_counts.sum()) + r * a)


def _cond_log_column(
    value_counts: np.ndarray,
    class_counts: np.ndarray,
    cell: float,
    mass: float,
    log_mass: float,
) -> np.ndarray:
    """Per-class log of (count + cell) / (class count + prior mass).

    ``mass`` is inf when the per-class prior total left float range; the
    denominator is then assembled in log space instead.
    """
    numer = np.log(value_counts + max(cell, _CELL_FLOOR))
    if math.isfinite(mass):
        return numer - np.log(class_counts + mass)
    with np.errstate(divide="ignore"):
        return numer - np.logaddexp(np.log(class_counts), log_mass)


def _softmax(log_scores: np.ndarray) -> ClassDistribution:
    p = np.exp(log_scores - log_scores.max())
    return p / p.sum()


@dataclass(eq=False)
class NBClassifier:
    """Naive Bayes: class marginal counts plus one (value x class) table per predictor."""

    schema: Schema
    class_counts: np.ndarray
    tables: tuple[np.ndarray, ...]
    prior: PriorSpec

    def predict(self, x: Sequence[int]) -> ClassDistribution:
        return nb_predict(self, x)


def build_nb(train: Dataset, prior: PriorSpec) -> NBClassifier:
    """Tally marginal and conditional counts; smoothing happens at predict time."""
    if train.n_rows == 0:
        raise DataError("cannot train on an empty dataset")
    r = train.schema.class_arity
    class_counts = np.bincount(train.labels, minlength=r).astype(np.int64)
    tables = []
    for i, arity in enumerate(train.schema.predictor_arities):
        table = np.zeros((arity, r), dtype=np.int64)
        np.add.at(table, (train.rows[:, i], train.labels), 1)
        tables.append(table)
    return NBClassifier(train.schema, class_counts, tuple(tables), prior)


def nb_predict(model: NBClassifier, x: Sequence[int]) -> ClassDistribution:
    """Bayes rule in log space with posterior-predictive factor estimates.

    A value index outside a table (an unseen categorical level) contributes
    its zero-count smoothed factor.
    """
    r = model.schema.class_arity
    log_scores = _class_log_prior(model.class_counts, model.prior)
    for i, table in enumerate(model.tables):
        arity = table.shape[0]
        cell, _, mass, log_mass = model.prior.attribute_smoothing(
            arity, math.log(arity), r
        )
        v = int(x[i])
        value_counts = table[v] if 0 <= v < arity else np.zeros(r, dtype=np.int64)
        log_scores = log_scores + _cond_log_column(
            value_counts, model.class_counts, cell, mass, log_mass
        )
    return _softmax(log_scores)


@dataclass(eq=False)
class ANBClassifier:
    """Naive Bayes whose attributes are partition blocks (joint meta-variables)."""

    schema: Schema
    partition: Partition
    class_counts: np.ndarray
    block_tables: tuple[CountTable, ...]
    prior: PriorSpec

    def predict(self, x: Sequence[int]) -> ClassDistribution:
        return anb_predict(self, x)


def build_anb(
    partition: Sequence[Sequence[int]], train: Dataset, prior: PriorSpec
) -> ANBClassifier:
    if train.n_rows == 0:
        raise DataError("cannot train on an empty dataset")
    part = validate_partition(partition, train.schema.n_predictors)
    r = train.schema.class_arity
    class_counts = np.bincount(train.labels, minlength=r).astype(np.int64)
    block_tables = tuple(build_count_table(train, block) for block in part)
    return ANBClassifier(train.schema, part, class_counts, block_tables, prior)


def anb_predict(model: ANBClassifier, x: Sequence[int]) -> ClassDistribution:
    """Like naive Bayes, with each block's joint configuration as one attribute.

    A block configuration absent from training contributes that block's
    prior-predictive factor through its zero count vector.
    """
    r = model.schema.class_arity
    log_scores = _class_log_prior(model.class_counts, model.prior)
    for table in model.block_tables:
        cell, _, mass, log_mass = model.prior.attribute_smoothing(
            table.q, table.log_q, r
        )
        config = tuple(int(x[i]) for i in table.subset)
        counts = table.config_counts(config)
        if counts is None:
            counts = np.zeros(r, dtype=np.int64)
        log_scores = log_scores + _cond_log_column(
            counts, model.class_counts, cell, mass, log_mass
        )
    return _softmax(log_scores)
