"""Mixture-driven training-stream sampler with without-replacement pools.

Each draw is two-stage: pick a domain with probability equal to its mixture
weight (inverse CDF over the cumulative weights, one uniform variate per
draw), then pop the next unseen item from that domain's pre-shuffled pool.
The stream ends the first time the drawn domain's pool is empty; optionally
the sampler can instead drop exhausted domains and renormalize, but the
default follows the stop-on-exhaustion rule.

All randomness comes from numpy's seeded PCG64 generator: pool permutations
are drawn once at init (domain 0 first), then one uniform per domain draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, Exhausted
from .mixtures import DomainCatalog, MixtureWeights


@dataclass
class SamplerState:
    """Single-owner mutable stream state; not safe for concurrent mutation."""

    catalog: DomainCatalog
    weights: MixtureWeights
    queues: list[np.ndarray]
    positions: list[int]
    rng: np.random.Generator
    cumulative: np.ndarray
    renormalize: bool = False
    steps_emitted: int = 0
    finished: bool = False
    _active: np.ndarray = field(default=None, repr=False)

    def remaining(self, domain: int) -> int:
        return len(self.queues[domain]) - self.positions[domain]


def init(
    catalog: DomainCatalog,
    weights: MixtureWeights,
    seed: int,
    renormalize: bool = False,
) -> SamplerState:
    if weights.m != catalog.m:
        raise DimensionMismatch(
            f"weights have {weights.m} entries but catalog has {catalog.m} domains"
        )
    rng = np.random.default_rng(seed)
    queues = [rng.permutation(size) for size in catalog.pool_sizes]
    return SamplerState(
        catalog=catalog,
        weights=weights,
        queues=queues,
        positions=[0] * catalog.m,
        rng=rng,
        cumulative=np.cumsum(weights.to_array()),
        renormalize=renormalize,
        _active=weights.to_array().copy(),
    )


def _draw_domain(cumulative: np.ndarray, weights: np.ndarray, u: float) -> int:
    index = int(np.searchsorted(cumulative, u, side="right"))
    if index >= len(cumulative):
        # u landed beyond the accumulated sum (rounding); take the last
        # positively weighted domain rather than a zero-weight one
        positive = np.flatnonzero(weights > 0.0)
        index = int(positive[-1])
    return index


def next_sample(state: SamplerState) -> tuple[int, int] | None:
    """Next (domain index, item index), or None once the stream has stopped."""
    if state.finished:
        return None
    while True:
        u = state.rng.random()
        domain = _draw_domain(state.cumulative, state._active, u)
        if state.remaining(domain) > 0:
            item = int(state.queues[domain][state.positions[domain]])
            state.positions[domain] += 1
            state.steps_emitted += 1
            return domain, item
        if not state.renormalize:
            state.finished = True
            return None
        # drop every exhausted domain and rescale the rest
        active = state._active.copy()
        for d in range(state.catalog.m):
            if state.remaining(d) == 0:
                active[d] = 0.0
        total = active.sum()
        if total <= 0.0:
            state.finished = True
            return None
        state._active = active / total
        state.cumulative = np.cumsum(state._active)


def stream(state: SamplerState, max_steps: int | None = None):
    """Yield samples until the stream stops or ``max_steps`` is reached."""
    count = 0
    while max_steps is None or count < max_steps:
        sample = next_sample(state)
        if sample is None:
            return
        yield sample
        count += 1


def empirical_frequencies(
    weights: MixtureWeights,
    n: int,
    seed: int,
    pool_sizes: list[int] | None = None,
) -> np.ndarray:
    """Fraction of domain draws per domain over ``n`` two-stage steps.

    With the default pools (n items per domain) exhaustion cannot occur; pass
    explicit ``pool_sizes`` to surface Exhausted when a pool would run dry.
    The domain-draw stage is simulated vectorized with the same inverse-CDF
    rule as :func:`next_sample`.
    """
    m = weights.m
    sizes = pool_sizes if pool_sizes is not None else [n] * m
    if len(sizes) != m:
        raise DimensionMismatch(f"{len(sizes)} pool sizes for {m} domains")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    cumulative = np.cumsum(weights.to_array())
    draws = np.searchsorted(cumulative, u, side="right")
    positive = np.flatnonzero(weights.to_array() > 0.0)
    draws = np.minimum(draws, positive[-1])
    counts = np.bincount(draws, minlength=m)
    over = [d for d in range(m) if counts[d] > sizes[d]]
    if over:
        raise Exhausted(f"domains {over} would run out of items within {n} draws")
    return counts / n
