"""Single-node PageRank estimators with exact cost accounting.

Four methods, one contract: given a target node and an error
configuration, return an ``Estimate`` holding the value plus counters
(residue increments, walk moves, RNG draws) that make cost claims
testable without wall clocks.

* ``setpush`` propagates hop-indexed residues backward from the target,
  pushing deterministically while the per-neighbor share is large and
  switching to geometric-skip Bernoulli sampling of neighbors once the
  share drops below the push threshold times the degree.
* ``reverse_mc`` tallies discounted walks started at the target and
  reweights terminals by the degree ratio (valid on undirected graphs,
  where PPR mass is reversible).
* ``forward_mc`` is the classic estimator: walks from uniform sources,
  fraction terminating at the target.
* ``local_push`` is the deterministic backward push driven by a
  max-residue priority queue.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, ContractViolationError, ValidationError
from .graph import Graph
from .oracle import truncation_levels
from .sampling import RngStream, alpha_walk_batch, median_of_means

__all__ = [
    "EstimatorConfig",
    "Estimate",
    "ResidueLevel",
    "LocalPushState",
    "WalkTally",
    "compute_threshold",
    "setpush",
    "reverse_mc",
    "forward_mc",
    "local_push",
    "amplified",
    "ESTIMATORS",
]


@dataclass
class EstimatorConfig:
    """Shared knobs: teleport probability, relative error target,
    failure probability, and overrides for the derived quantities.

    ``cost_constant`` scales the derived push threshold downward; the
    default 4 follows the Chebyshev derivation that carries an explicit
    failure-probability factor.  The coarser published constant is
    reachable with cost_constant=12 and failure_prob=1.
    """

    alpha: float = 0.2
    c: float = 0.1
    failure_prob: float = 0.1
    threshold_override: float | None = None
    levels_override: int | None = None
    cost_constant: float = 4.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0,1), got {self.alpha}")
        if self.c <= 0.0:
            raise ConfigError(f"relative error c must be > 0, got {self.c}")
        if not 0.0 < self.failure_prob < 1.0:
            raise ConfigError(f"failure_prob must be in (0,1), got {self.failure_prob}")
        if self.cost_constant <= 0.0:
            raise ConfigError(f"cost_constant must be > 0, got {self.cost_constant}")
        if self.threshold_override is not None and self.threshold_override <= 0.0:
            raise ConfigError("threshold_override must be > 0")
        if self.levels_override is not None and self.levels_override < 1:
            raise ConfigError("levels_override must be >= 1")

    def levels(self, n: int) -> int:
        """Hop cutoff for the truncated score this config targets."""
        if self.levels_override is not None:
            return self.levels_override
        return truncation_levels(n, self.alpha, self.c)


@dataclass
class Estimate:
    """Scalar estimate plus machine-independent cost counters."""

    value: float
    pushes: int = 0
    walk_steps: int = 0
    rng_draws: int = 0
    wall_nanos: int = 0


@dataclass
class ResidueLevel:
    """Sparse view of one hop level's residue mass (absent == zero)."""

    level: int
    entries: dict[int, float]


@dataclass
class LocalPushState:
    """Live state handed to the local_push step callback.

    ``residue`` holds mass still to be pushed, ``reserve`` mass already
    settled; both are dense arrays the callback must treat as read-only.
    """

    residue: np.ndarray
    reserve: np.ndarray
    epsilon: float

    def residue_entries(self) -> dict[int, float]:
        nz = np.flatnonzero(self.residue)
        return {int(u): float(self.residue[u]) for u in nz}

    def reserve_entries(self) -> dict[int, float]:
        nz = np.flatnonzero(self.reserve)
        return {int(u): float(self.reserve[u]) for u in nz}


@dataclass
class WalkTally:
    """Termination counts of a walk batch; values sum to ``walks``."""

    counts: dict[int, int]
    walks: int

    @classmethod
    def from_terminals(cls, terminals: np.ndarray, walks: int) -> "WalkTally":
        nodes, reps = np.unique(terminals, return_counts=True)
        return cls(dict(zip(nodes.tolist(), reps.tolist())), walks)


def compute_threshold(g: Graph, t: int, cfg: EstimatorConfig) -> float:
    """Default push threshold for ``setpush``.

    (alpha * c^2 * failure_prob / (cost_constant * levels)) scaled by
    max{1/d_t, sqrt(2(1-alpha)/m)}: the first branch caps expected work
    near the target's degree, the second near sqrt(m).  Larger c or
    failure probability relax the threshold and cut pushes.
    """
    levels = cfg.levels(g.node_count)
    d_t = g.degree(t)
    m = g.edge_count
    scale = cfg.alpha * cfg.c**2 * cfg.failure_prob / (cfg.cost_constant * levels)
    return scale * max(1.0 / d_t, math.sqrt(2.0 * (1.0 - cfg.alpha) / m))


def _concat_slices(starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Concatenate arange(start, start+length) runs without Python loops."""
    total = int(lengths.sum())
    out = np.ones(total, dtype=np.int64)
    out[0] = starts[0]
    ends = np.cumsum(lengths)
    out[ends[:-1]] = starts[1:] - (starts[:-1] + lengths[:-1]) + 1
    return np.cumsum(out)


def setpush(
    g: Graph,
    t: int,
    cfg: EstimatorConfig,
    rng: RngStream,
    level_sink: Callable[[ResidueLevel], None] | None = None,
) -> Estimate:
    """Randomized backward set-push estimate of node t's PageRank.

    Starts with unit residue at the target and, for each hop level, either
    pushes a node's discounted residue share to every neighbor (when the
    share clears threshold * degree) or Bernoulli-samples neighbors via
    geometric skips and credits them a full threshold each.  The settled
    mass, degree-reweighted, estimates the truncated PageRank, which is
    within c/2 relative error of the true score by construction of the
    hop cutoff.

    ``pushes`` counts every residue increment.  Iteration over nonzero
    residues is in ascending node order so runs are bit-reproducible for
    a fixed stream.
    """
    g._check_node(t)
    n = g.node_count
    offsets, neighbors, degrees = g.offsets, g.neighbors, g.degrees
    levels = cfg.levels(n)
    threshold = (
        cfg.threshold_override
        if cfg.threshold_override is not None
        else compute_threshold(g, t, cfg)
    )
    if threshold <= 0.0:
        raise ConfigError(f"push threshold must be > 0, got {threshold}")

    alpha = cfg.alpha
    start_draws = rng.draws
    t0 = time.perf_counter_ns()

    residue = np.zeros(n)
    residue[t] = 1.0
    settled = np.zeros(n)
    settled[t] = alpha
    pushes = 0
    if level_sink is not None:
        level_sink(ResidueLevel(0, {t: 1.0}))

    for level in range(levels):
        nz = np.flatnonzero(residue > 0.0)
        if nz.size == 0:
            break
        share = (1.0 - alpha) * residue[nz]
        deg_nz = degrees[nz]
        # single fp criterion for both branches: deterministic iff the
        # per-neighbor probability would reach 1
        prob = share / (threshold * deg_nz)
        det = prob >= 1.0
        nxt = np.zeros(n)

        det_nodes = nz[det]
        if det_nodes.size:
            lens = deg_nz[det]
            inc = share[det] / lens
            flat = _concat_slices(offsets[det_nodes], lens)
            nxt += np.bincount(
                neighbors[flat], weights=np.repeat(inc, lens), minlength=n
            )
            pushes += int(lens.sum())

        samp_nodes = nz[~det]
        if samp_nodes.size:
            p = prob[~det]
            log_q = np.log1p(-p)
            deg_s = deg_nz[~det]
            offs_s = offsets[samp_nodes]
            pos = np.zeros(samp_nodes.size, dtype=np.int64)
            active = np.arange(samp_nodes.size)
            while active.size:
                u = 1.0 - rng.uniforms(active.size)  # (0, 1]
                gap_f = np.floor(np.log(u) / log_q[active]) + 1.0
                remaining = deg_s[active] - pos[active]
                gap = np.where(gap_f > remaining, remaining + 1, gap_f).astype(np.int64)
                pos[active] += gap
                active = active[pos[active] <= deg_s[active]]
                if active.size:
                    hit = neighbors[offs_s[active] + pos[active] - 1]
                    if active.size > 128:
                        nxt += threshold * np.bincount(hit, minlength=n)
                    else:
                        np.add.at(nxt, hit, threshold)
                    pushes += active.size

        residue = nxt
        settled += alpha * residue
        if level_sink is not None:
            sup = np.flatnonzero(residue)
            level_sink(
                ResidueLevel(level + 1, {int(u): float(residue[u]) for u in sup})
            )

    value = float(degrees[t]) / n * float(np.sum(settled / degrees))
    return Estimate(
        value=value,
        pushes=pushes,
        walk_steps=0,
        rng_draws=rng.draws - start_draws,
        wall_nanos=time.perf_counter_ns() - t0,
    )


def reverse_mc(
    g: Graph,
    t: int,
    cfg: EstimatorConfig,
    rng: RngStream,
    walks: int | None = None,
) -> Estimate:
    """Monte-Carlo estimate from walks started at the target.

    Each walk's terminal s contributes d_t / (n * d_s); averaging over
    walks gives an unbiased estimate of the true score with variance at
    most d_t * pi(t) / (n * walks).  The default walk count
    ceil(3 d_t / (c^2 alpha)) makes a single run a constant-probability
    relative-error estimate.
    """
    g._check_node(t)
    d_t = g.degree(t)
    if walks is None:
        walks = math.ceil(3.0 * d_t / (cfg.c**2 * cfg.alpha))
    if walks < 1:
        raise ValidationError(f"walks must be >= 1, got {walks}")
    n = g.node_count
    start_draws = rng.draws
    t0 = time.perf_counter_ns()
    terminals, moves = alpha_walk_batch(
        g, np.full(walks, t, dtype=np.int64), cfg.alpha, rng
    )
    tally = WalkTally.from_terminals(terminals, walks)
    acc = 0.0
    for s, count in tally.counts.items():
        acc += count / g.degrees[s]
    value = d_t / (n * walks) * acc
    return Estimate(
        value=float(value),
        pushes=0,
        walk_steps=moves,
        rng_draws=rng.draws - start_draws,
        wall_nanos=time.perf_counter_ns() - t0,
    )


def forward_mc(
    g: Graph,
    t: int,
    cfg: EstimatorConfig,
    rng: RngStream,
    walks: int | None = None,
) -> Estimate:
    """Classic forward estimate: fraction of uniformly-sourced walks
    terminating at the target.

    The default walk count substitutes the universal lower bound
    alpha/n for the unknown true score, which is why it grows with n.
    """
    g._check_node(t)
    n = g.node_count
    if walks is None:
        walks = math.ceil(
            (2.0 * cfg.c / 3.0 + 2.0)
            * n
            / (cfg.c**2 * cfg.alpha)
            * math.log(1.0 / cfg.failure_prob)
        )
    if walks < 1:
        raise ValidationError(f"walks must be >= 1, got {walks}")
    start_draws = rng.draws
    t0 = time.perf_counter_ns()
    sources = np.minimum((rng.uniforms(walks) * n).astype(np.int64), n - 1)
    terminals, moves = alpha_walk_batch(g, sources, cfg.alpha, rng)
    value = float(np.count_nonzero(terminals == t)) / walks
    return Estimate(
        value=value,
        pushes=0,
        walk_steps=moves,
        rng_draws=rng.draws - start_draws,
        wall_nanos=time.perf_counter_ns() - t0,
    )


def local_push(
    g: Graph,
    t: int,
    cfg: EstimatorConfig,
    rng: RngStream | None = None,
    epsilon: float | None = None,
    step_callback: Callable[[LocalPushState], None] | None = None,
) -> Estimate:
    """Deterministic backward push; ``rng`` is accepted for interface
    uniformity and never used.

    Pops the largest residue from a lazy max-heap, settles an alpha
    fraction into the reserve, and spreads the rest to neighbors scaled
    by the receiver's degree.  Stops when every residue is below
    epsilon (default c * alpha / n), at which point the reserve average
    underestimates the true score by at most a factor c of it.
    """
    g._check_node(t)
    n = g.node_count
    eps = epsilon if epsilon is not None else cfg.c * cfg.alpha / n
    if eps <= 0.0:
        raise ConfigError(f"epsilon must be > 0, got {eps}")
    offsets, neighbors, degrees = g.offsets, g.neighbors, g.degrees
    alpha = cfg.alpha
    t0 = time.perf_counter_ns()

    residue = np.zeros(n)
    reserve = np.zeros(n)
    residue[t] = 1.0
    heap: list[tuple[float, int]] = []
    if residue[t] >= eps:
        heap.append((-1.0, t))
    state = LocalPushState(residue, reserve, eps) if step_callback else None
    pushes = 0

    while heap:
        neg, u = heapq.heappop(heap)
        if residue[u] != -neg or residue[u] < eps:
            continue  # stale entry
        mass = residue[u]
        residue[u] = 0.0
        reserve[u] += alpha * mass
        nbrs = neighbors[offsets[u] : offsets[u + 1]]
        residue[nbrs] += (1.0 - alpha) * mass / degrees[nbrs]
        pushes += nbrs.shape[0]
        hot = nbrs[residue[nbrs] >= eps]
        for w, val in zip(hot.tolist(), residue[hot].tolist()):
            heapq.heappush(heap, (-val, w))
        if state is not None:
            step_callback(state)

    return Estimate(
        value=float(reserve.sum() / n),
        pushes=pushes,
        walk_steps=0,
        rng_draws=0,
        wall_nanos=time.perf_counter_ns() - t0,
    )


def amplified(
    inner: Callable[..., Estimate],
    g: Graph,
    t: int,
    cfg: EstimatorConfig,
    rng: RngStream,
    repetitions: int,
    groups: int,
    **kwargs,
) -> Estimate:
    """Median-of-means wrapper: repeat ``inner`` on independent
    substreams and aggregate, trading a log factor of repetitions for a
    driven-down failure probability.  Counters are summed.
    """
    if not 1 <= groups <= repetitions:
        raise ValidationError(
            f"need repetitions >= groups >= 1, got {repetitions}, {groups}"
        )
    t0 = time.perf_counter_ns()
    values = []
    pushes = walk_steps = draws = 0
    for i in range(repetitions):
        est = inner(g, t, cfg, rng=rng.substream(i), **kwargs)
        values.append(est.value)
        pushes += est.pushes
        walk_steps += est.walk_steps
        draws += est.rng_draws
    return Estimate(
        value=median_of_means(values, groups),
        pushes=pushes,
        walk_steps=walk_steps,
        rng_draws=draws,
        wall_nanos=time.perf_counter_ns() - t0,
    )


ESTIMATORS: dict[str, Callable[..., Estimate]] = {
    "setpush": setpush,
    "reverse-mc": reverse_mc,
    "forward-mc": forward_mc,
    "local-push": local_push,
}


def default_groups(failure_prob: float, repetitions: int) -> int:
    """Conventional group count for median-of-means amplification,
    ceil(8 ln(1/failure_prob)), capped at the repetition count."""
    return max(1, min(repetitions, math.ceil(8.0 * math.log(1.0 / failure_prob))))
