"""Seeded randomness, geometric skip sampling, discounted walks,
and the median-of-means aggregator.

Randomness contract: every stream is a Philox4x64 counter-based
generator keyed by ``(seed, stream_id)``, so distinct stream ids are
independent by construction and identical ``(seed, stream_id)`` pairs
replay bit-identical sequences on any platform.  Substreams derive a
fresh stream id through a splitmix64 mix of the parent id and the child
index; this rule is part of the compatibility contract.  Every uniform
variate consumed is counted in ``RngStream.draws``.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import ContractViolationError, ValidationError
from .graph import Graph

__all__ = [
    "RngStream",
    "GeometricSampleCursor",
    "geometric_skip_sample",
    "alpha_walk",
    "alpha_walk_batch",
    "median_of_means",
]

_M64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


class RngStream:
    """Single-owner random stream with an exact draw counter.

    One stream per query or repetition; never share a stream between
    concurrent workers.
    """

    __slots__ = ("seed", "stream_id", "draws", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _M64
        self.stream_id = int(stream_id) & _M64
        self.draws = 0
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def random(self) -> float:
        """One uniform draw in [0, 1)."""
        self.draws += 1
        return float(self._gen.random())

    def uniforms(self, size: int) -> np.ndarray:
        """Vector of uniform draws in [0, 1); counts ``size`` draws."""
        self.draws += int(size)
        return self._gen.random(size)

    def substream(self, index: int) -> "RngStream":
        """Independent child stream; derivation rule is fixed:
        stream_id' = splitmix64(stream_id * 2^32 + index + 1)."""
        child = _splitmix64(((self.stream_id << 32) + index + 1) & _M64)
        return RngStream(self.seed, child)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, draws={self.draws})"


def geometric_variate(p: float, rng: RngStream) -> int:
    """Geometric on {1, 2, ...} by inversion: 1 + floor(ln U / ln(1-p)).

    O(1) per draw.  p == 1 short-circuits to 1 without consuming a draw.
    """
    if p >= 1.0:
        return 1
    u = 1.0 - rng.random()  # (0, 1]
    g = 1.0 + math.floor(math.log(u) / math.log1p(-p))
    return int(min(g, 2**62))


class GeometricSampleCursor:
    """Iterator of Bernoulli-included positions over 1..limit.

    Jumps ahead by Geometric(success_prob) gaps, so each position is
    included independently with probability exactly ``success_prob``
    while the work stays proportional to the number of inclusions plus
    one.  ``position`` is 1-based and strictly increasing.
    """

    __slots__ = ("success_prob", "position", "limit", "_rng")

    def __init__(self, limit: int, success_prob: float, rng: RngStream):
        if limit < 1:
            raise ValidationError(f"limit must be >= 1, got {limit}")
        if success_prob <= 0.0:
            raise ContractViolationError(
                "geometric sampling with success_prob <= 0; caller must skip the push"
            )
        if success_prob > 1.0:
            raise ContractViolationError(
                f"success_prob {success_prob} > 1; deterministic branch expected"
            )
        self.success_prob = success_prob
        self.position = 0
        self.limit = limit
        self._rng = rng

    def __iter__(self):
        return self

    def __next__(self) -> int:
        self.position += geometric_variate(self.success_prob, self._rng)
        if self.position > self.limit:
            raise StopIteration
        return self.position


def geometric_skip_sample(d: int, p_star: float, rng: RngStream) -> list[int]:
    """Emit each index in 1..d independently with probability p_star, in
    increasing order, in expected time proportional to the emitted count
    plus one.  See ``GeometricSampleCursor`` for the jump mechanics."""
    return list(GeometricSampleCursor(d, p_star, rng))


def alpha_walk(g: Graph, start: int, alpha: float, rng: RngStream) -> tuple[int, int]:
    """One discounted walk: stop with probability alpha at each step,
    otherwise move to a uniform random neighbor.

    Returns (terminal node, number of moves); expected moves are
    1/alpha - 1.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0,1), got {alpha}")
    u = start
    moves = 0
    offsets, neighbors, degrees = g.offsets, g.neighbors, g.degrees
    while rng.random() >= alpha:
        d = degrees[u]
        j = int(rng.random() * d)
        if j == d:  # fp edge guard
            j = d - 1
        u = int(neighbors[offsets[u] + j])
        moves += 1
    return u, moves


def alpha_walk_batch(
    g: Graph, starts: np.ndarray, alpha: float, rng: RngStream
) -> tuple[np.ndarray, int]:
    """Vectorized batch of independent discounted walks.

    Distributionally identical to repeated ``alpha_walk`` calls (the
    draw interleaving differs); returns (terminals aligned with starts,
    total moves).
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0,1), got {alpha}")
    offsets, neighbors, degrees = g.offsets, g.neighbors, g.degrees
    cur = np.asarray(starts, dtype=np.int64).copy()
    terminals = np.empty_like(cur)
    alive = np.arange(cur.shape[0], dtype=np.int64)
    moves = 0
    while alive.size:
        k = alive.size
        stop = rng.uniforms(k) < alpha
        stopped = alive[stop]
        terminals[stopped] = cur[stopped]
        movers = alive[~stop]
        if movers.size:
            d = degrees[cur[movers]]
            j = np.minimum((rng.uniforms(movers.size) * d).astype(np.int64), d - 1)
            cur[movers] = neighbors[offsets[cur[movers]] + j]
            moves += movers.size
        alive = movers
    return terminals, moves


def median_of_means(estimates: Sequence[float] | np.ndarray, groups: int) -> float:
    """Median of contiguous-chunk means; groups == 1 is the plain mean.

    Chunks follow the array_split convention (first chunks one longer
    when the length is not divisible).  Even group counts take the lower
    median so the output is always one of the chunk means.
    """
    values = np.asarray(estimates, dtype=np.float64)
    if values.size == 0:
        raise ValidationError("estimates must be nonempty")
    if not 1 <= groups <= values.size:
        raise ValidationError(f"groups must be in [1, {values.size}], got {groups}")
    means = np.array([chunk.mean() for chunk in np.array_split(values, groups)])
    means.sort()
    return float(means[(groups - 1) // 2])
