"""Stochastic greedy search over predictor partitions.

A partition groups the predictors into disjoint blocks; its score is the
probability-space average of the per-block label likelihoods. The search is
a plain restarted hill climb over three move kinds, deterministic for a
given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset, derive_seed
from .errors import ConfigError
from .scoring import (
    CountTable,
    FamilyScore,
    PriorSpec,
    build_count_table,
    check_subset,
    log_family_score,
    log_sml,
)

Block = tuple[int, ...]
Partition = tuple[Block, ...]

_RESTART_STREAM = 0x5EA2C4B7


def canonical_partition(blocks: Sequence[Sequence[int]]) -> Partition:
    """Sort members within blocks and blocks by first member."""
    return tuple(sorted((tuple(sorted(int(i) for i in b)) for b in blocks)))


def validate_partition(partition: Sequence[Sequence[int]], n_predictors: int) -> Partition:
    """Check disjoint nonempty blocks covering 0..n-1; return canonical form."""
    part = canonical_partition(partition)
    seen: list[int] = []
    for block in part:
        if not block:
            raise ValueError("partition blocks must be nonempty")
        check_subset(block, n_predictors)
        seen.extend(block)
    if sorted(seen) != list(range(n_predictors)):
        raise ValueError("partition blocks must cover every predictor exactly once")
    return part


def singleton_partition(n_predictors: int) -> Partition:
    return tuple((i,) for i in range(n_predictors))


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 10
    patience: int = 200
    max_block_size: int | None = None
    seed: int = 0
    init_mode: str = "singletons"

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.max_block_size is not None and self.max_block_size < 1:
            raise ConfigError("max_block_size must be >= 1")
        if self.init_mode not in ("singletons", "random"):
            raise ConfigError(f"unknown init_mode {self.init_mode!r}")

    def to_json_dict(self) -> dict:
        return {
            "restarts": self.restarts,
            "patience": self.patience,
            "max_block_size": self.max_block_size,
            "seed": self.seed,
            "init_mode": self.init_mode,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SearchConfig":
        return cls(
            int(d["restarts"]),
            int(d["patience"]),
            None if d.get("max_block_size") is None else int(d["max_block_size"]),
            int(d["seed"]),
            d.get("init_mode", "singletons"),
        )


@dataclass(frozen=True)
class RestartTrace:
    restart_index: int
    initial_score: float
    final_score: float
    proposals: int

    def to_json_dict(self) -> dict:
        return {
            "restart_index": self.restart_index,
            "initial_score": format(self.initial_score, ".17g"),
            "final_score": format(self.final_score, ".17g"),
            "proposals": self.proposals,
        }


@dataclass(eq=False)
class SearchResult:
    best_partition: Partition
    best_score: FamilyScore
    proposals_evaluated: int
    restarts: tuple[RestartTrace, ...]

    def to_json_dict(self) -> dict:
        return {
            "best_partition": [list(b) for b in self.best_partition],
            "best_score": self.best_score.to_json_dict(),
            "proposals_evaluated": self.proposals_evaluated,
            "restarts": [t.to_json_dict() for t in self.restarts],
        }


class PartitionScorer:
    """Scores partitions against one training set, memoizing per-block scores.

    Block scores depend only on block contents, so the cache stays valid for
    the scorer's lifetime and is shared freely across candidate partitions.
    """

    def __init__(self, train: Dataset, prior: PriorSpec):
        self.train = train
        self.prior = prior
        self._cache: dict[Block, float] = {}

    def block_score(self, block: Block) -> float:
        score = self._cache.get(block)
        if score is None:
            table = build_count_table(self.train, block)
            score = self._cache[block] = log_sml(table, self.prior)
        return score

    def score(self, partition: Partition) -> FamilyScore:
        return log_family_score([self.block_score(b) for b in partition])


def score_partition(partition: Sequence[Sequence[int]], train: Dataset, prior: PriorSpec) -> FamilyScore:
    """Probability-space average of per-block label likelihoods."""
    part = validate_partition(partition, train.schema.n_predictors)
    return PartitionScorer(train, prior).score(part)


def propose_move(
    partition: Partition,
    rng: np.random.Generator,
    max_block_size: int | None = None,
) -> Partition:
    """Draw one neighboring partition: relocate, split off, or merge.

    The move kind is chosen uniformly among the kinds applicable to the
    current partition, then its operands uniformly among the valid choices,
    so the result is always a valid partition different from the input.
    """
    n = sum(len(b) for b in partition)
    if n < 2:
        raise ValueError("no moves exist for fewer than 2 predictors")
    cap = n if max_block_size is None else max_block_size
    blocks = [list(b) for b in partition]

    relocations = [
        (bi, v, ti)
        for bi, b in enumerate(blocks)
        for v in b
        for ti, t in enumerate(blocks)
        if ti != bi and len(t) < cap
    ]
    detachables = [(bi, v) for bi, b in enumerate(blocks) if len(b) >= 2 for v in b]
    merges = [
        (i, j)
        for i in range(len(blocks))
        for j in range(i + 1, len(blocks))
        if len(blocks[i]) + len(blocks[j]) <= cap
    ]

    kinds = []
    if relocations:
        kinds.append("relocate")
    if detachables:
        kinds.append("detach")
    if merges:
        kinds.append("merge")
    if not kinds:
        raise ValueError("no applicable moves under the block-size cap")

    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "relocate":
        bi, v, ti = relocations[int(rng.integers(len(relocations)))]
        blocks[bi].remove(v)
        blocks[ti].append(v)
    elif kind == "detach":
        bi, v = detachables[int(rng.integers(len(detachables)))]
        blocks[bi].remove(v)
        blocks.append([v])
    else:
        i, j = merges[int(rng.integers(len(merges)))]
        blocks[i].extend(blocks[j])
        del blocks[j]
    return canonical_partition(b for b in blocks if b)


def _initial_partition(n: int, mode: str, rng: np.random.Generator) -> Partition:
    if mode == "singletons":
        return singleton_partition(n)
    groups = rng.integers(n, size=n)
    blocks: dict[int, list[int]] = {}
    for var, g in enumerate(groups.tolist()):
        blocks.setdefault(g, []).append(var)
    return canonical_partition(blocks.values())


def pm_search(train: Dataset, prior: PriorSpec, config: SearchConfig) -> SearchResult:
    """Restarted greedy hill climb; accepts strict improvements only.

    Each restart runs until `patience` consecutive proposals fail to improve.
    Ties across restarts resolve to the earliest restart. Deterministic for a
    given config seed.
    """
    n = train.schema.n_predictors
    if n < 1:
        raise ValueError("search needs at least one predictor")
    scorer = PartitionScorer(train, prior)
    movable = n >= 2 and (config.max_block_size is None or config.max_block_size >= 2)

    best: tuple[Partition, FamilyScore] | None = None
    traces: list[RestartTrace] = []
    total_proposals = 0
    for ridx in range(config.restarts):
        rng = np.random.default_rng(derive_seed(config.seed, _RESTART_STREAM, ridx))
        part = _initial_partition(n, config.init_mode, rng)
        score = scorer.score(part)
        initial = score.log_value
        rejections = 0
        proposals = 0
        while movable and rejections < config.patience:
            candidate = propose_move(part, rng, config.max_block_size)
            cand_score = scorer.score(candidate)
            proposals += 1
            if cand_score.log_value > score.log_value:
                part, score = candidate, cand_score
                rejections = 0
            else:
                rejections += 1
        traces.append(RestartTrace(ridx, initial, score.log_value, proposals))
        total_proposals += proposals
        if best is None or score.log_value > best[1].log_value:
            best = (part, score)
    assert best is not None
    return SearchResult(best[0], best[1], total_proposals, tuple(traces))
