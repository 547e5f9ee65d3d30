"""Operator-chain synthesis: a Markov proposer suggests structurally
plausible next operators, a schema validator binds or discards them.

Each accepted operator is executed immediately so later bindings can
draw literals (filter values, top-k bounds) from live data; the result
is a chain that is executable end to end by construction.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Callable, Optional

import numpy as np

from .dsl import ALL_KINDS, OperatorKind, PipelineProgram
from .interpreter import ExecContext, execute_op
from .propagation import SchemaState, get_schema, propagate, validate_and_bind
from .tables import Table, TableSet

N_KINDS = len(ALL_KINDS)
_KIND_INDEX = {kind: i for i, kind in enumerate(ALL_KINDS)}

DEFAULT_ALPHA = 0.5
DEFAULT_MEAN_CHAIN_LENGTH = 4.24


class SynthesisError(Exception):
    """No operator could be bound; the input tables are unusable."""


# -- transition model --------------------------------------------------------


@dataclass
class TransitionMatrix:
    """Empirical next-operator model with Laplace smoothing."""

    counts: np.ndarray
    alpha: float = DEFAULT_ALPHA
    kinds: tuple[OperatorKind, ...] = ALL_KINDS
    probs: np.ndarray = field(init=False)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.shape != (N_KINDS, N_KINDS):
            raise ValueError(f"counts must be {N_KINDS}x{N_KINDS}, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("transition counts must be non-negative")
        if self.alpha <= 0:
            raise ValueError("smoothing constant must be positive")
        self.counts = counts
        totals = counts.sum(axis=1, keepdims=True)
        self.probs = (counts + self.alpha) / (totals + N_KINDS * self.alpha)

    def row(self, prev: OperatorKind) -> np.ndarray:
        return self.probs[_KIND_INDEX[prev]]

    def prob(self, prev: OperatorKind, nxt: OperatorKind) -> float:
        return float(self.probs[_KIND_INDEX[prev], _KIND_INDEX[nxt]])

    def sample_next(self, prev: OperatorKind, rng: random.Random) -> OperatorKind:
        row = self.row(prev)
        u = rng.random()
        acc = 0.0
        for j, p in enumerate(row):
            acc += p
            if u < acc:
                return ALL_KINDS[j]
        return ALL_KINDS[-1]

    def kind_mass(self, kinds) -> float:
        """Mean probability mass the model assigns to ``kinds``."""
        idx = [_KIND_INDEX[k] for k in kinds]
        return float(self.probs[:, idx].sum(axis=1).mean())

    def to_json_obj(self) -> dict:
        return {
            "alpha": self.alpha,
            "kinds": [k.value for k in self.kinds],
            "counts": self.counts.astype(int).tolist(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TransitionMatrix":
        kinds = [OperatorKind.from_string(s) for s in obj["kinds"]]
        if tuple(kinds) != ALL_KINDS:
            # reorder rows/columns into canonical kind order
            perm = [kinds.index(k) for k in ALL_KINDS]
            counts = np.asarray(obj["counts"], dtype=float)[np.ix_(perm, perm)]
        else:
            counts = np.asarray(obj["counts"], dtype=float)
        return cls(counts, alpha=float(obj.get("alpha", DEFAULT_ALPHA)))

    @classmethod
    def load(cls, path: str) -> "TransitionMatrix":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_obj(json.load(fh))

    @classmethod
    def default(cls) -> "TransitionMatrix":
        """Stationary proxy built from observed operator frequencies."""
        text = resources.files("pipebench").joinpath("data/default_transitions.json").read_text()
        return cls.from_json_obj(json.loads(text))


def build_transition_matrix(
    pair_counts: list[tuple[OperatorKind, OperatorKind, int]],
    alpha: float = DEFAULT_ALPHA,
) -> TransitionMatrix:
    """Accumulate (from, to, count) observations into a smoothed model."""
    counts = np.zeros((N_KINDS, N_KINDS))
    for src, dst, count in pair_counts:
        if count < 0:
            raise ValueError(f"negative count for {src.value} -> {dst.value}")
        counts[_KIND_INDEX[src], _KIND_INDEX[dst]] += count
    return TransitionMatrix(counts, alpha=alpha)


# -- chain length -------------------------------------------------------------


@dataclass(frozen=True)
class LengthDistribution:
    """Geometric distribution truncated and renormalized over [lo, hi]."""

    p: float
    lo: int = 1
    hi: int = 8

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("success probability must lie in (0, 1)")
        if self.lo < 1 or self.hi < self.lo:
            raise ValueError("bad support bounds")

    def pmf(self) -> np.ndarray:
        q = 1.0 - self.p
        weights = np.array([q ** (k - self.lo) for k in self.support()])
        return weights / weights.sum()

    def support(self) -> range:
        return range(self.lo, self.hi + 1)

    def mean(self) -> float:
        return float(np.dot(self.pmf(), np.arange(self.lo, self.hi + 1)))

    def sample(self, rng: random.Random) -> int:
        u = rng.random()
        acc = 0.0
        for k, w in zip(self.support(), self.pmf()):
            acc += w
            if u < acc:
                return k
        return self.hi

    @classmethod
    def fit_mean(cls, target_mean: float = DEFAULT_MEAN_CHAIN_LENGTH, lo: int = 1, hi: int = 8) -> "LengthDistribution":
        """Choose p so the truncated mean hits ``target_mean`` (bisection)."""
        flat_mean = (lo + hi) / 2
        if not lo < target_mean < flat_mean:
            raise ValueError(f"target mean must lie in ({lo}, {flat_mean})")
        lo_p, hi_p = 1e-9, 1.0 - 1e-9  # mean decreases as p grows
        for _ in range(200):
            mid = (lo_p + hi_p) / 2
            if cls(mid, lo, hi).mean() > target_mean:
                lo_p = mid
            else:
                hi_p = mid
        return cls((lo_p + hi_p) / 2, lo, hi)


def sample_length(d: LengthDistribution, rng: random.Random) -> int:
    return d.sample(rng)


# -- difficulty ---------------------------------------------------------------


class Difficulty(Enum):
    EASY = "Easy"
    MEDIUM = "Medium"
    HARD = "Hard"


def classify_difficulty(p: PipelineProgram | int) -> Difficulty:
    k = p if isinstance(p, int) else len(p)
    if k <= 3:
        return Difficulty.EASY
    if k <= 6:
        return Difficulty.MEDIUM
    return Difficulty.HARD


# -- chain construction -------------------------------------------------------

Observer = Callable[[str, tuple], None]

FIRST_OP_REDRAW_LIMIT = 64


@dataclass
class SynthesisResult:
    program: PipelineProgram
    output: Table
    context: ExecContext
    schemas: list[SchemaState]  # predicted state after each accepted op


def synthesize_chain(
    data: TableSet,
    matrix: TransitionMatrix,
    lengths: LengthDistribution,
    rng: random.Random,
    observer: Optional[Observer] = None,
) -> SynthesisResult:
    """Build one executable chain over ``data``.

    The first operator is drawn uniformly (redrawn while unbindable, up
    to a fixed limit); each later candidate comes from the transition
    row of the last accepted operator and is silently discarded when it
    cannot be bound, which shortens the chain.
    """

    def emit(event: str, *payload):
        if observer is not None:
            observer(event, payload)

    k = lengths.sample(rng)
    state = get_schema(data)
    ctx = ExecContext.from_tables(data)

    first = None
    for _ in range(FIRST_OP_REDRAW_LIMIT):
        kind = ALL_KINDS[rng.randrange(N_KINDS)]
        emit("first_proposal", kind)
        outcome = validate_and_bind(kind, state, rng, ctx.live())
        if outcome.is_valid:
            first = outcome.call
            break
    if first is None:
        raise SynthesisError(
            f"no operator bindable after {FIRST_OP_REDRAW_LIMIT} draws; "
            f"tables {data.names()} are unusable"
        )

    state = propagate(first, state)
    ctx = execute_op(ctx, first, op_index=0)
    ops = [first]
    schemas = [state]
    prev = first.kind

    for _ in range(2, k + 1):
        kind = matrix.sample_next(prev, rng)
        emit("proposal", prev, kind)
        outcome = validate_and_bind(kind, state, rng, ctx.live())
        if not outcome.is_valid:
            emit("discarded", kind, outcome.reason)
            continue
        call = outcome.call
        state = propagate(call, state)
        ctx = execute_op(ctx, call, op_index=len(ops))
        ops.append(call)
        schemas.append(state)
        prev = kind
        emit("accepted", kind)

    program = PipelineProgram(tuple(ops), tuple(data.names()))
    return SynthesisResult(program, ctx.current_table(), ctx, schemas)


# -- corpus sampling ----------------------------------------------------------


def key_compatible(a: Table, b: Table) -> bool:
    """Tables that can plausibly join (shared same-typed column name) or
    union (identical schemas)."""
    if a.schema() == b.schema():
        return True
    types = {name: ctype for name, ctype in a.schema()}
    return any(types.get(name) is ctype for name, ctype in b.schema())


def choose_task_tables(
    corpus: list[Table],
    matrix: TransitionMatrix,
    rng: random.Random,
) -> list[Table]:
    """Pick 1 or 2 source tables; the two-table rate follows the mass the
    transition model puts on join and union."""
    multi_mass = matrix.kind_mass([OperatorKind.JOIN, OperatorKind.UNION])
    if len(corpus) >= 2 and rng.random() < multi_mass:
        pairs = [
            (i, j)
            for i in range(len(corpus))
            for j in range(len(corpus))
            if i != j and key_compatible(corpus[i], corpus[j])
        ]
        if pairs:
            i, j = pairs[rng.randrange(len(pairs))]
            return [corpus[i], corpus[j]]
    return [corpus[rng.randrange(len(corpus))]]
