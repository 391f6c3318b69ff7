"""Flat-enumeration reference engine and distribution comparison helpers.

The oracle keeps every global hypothesis explicitly, with no trees, no
clusters, no constraints, and no sharing. It exists to check the clustered
engine: after identical generation sequences, the cross product of the
engine's cluster leaves must describe the same probability distribution
over (events, facts) content as the oracle's flat list.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

from .errors import EmptyGenerationError, SizeGuardError, ZeroMassError
from .hypgen import GeneratedHypothesis, ProvidedEvent, ProvidedFact
from .world import World, default_payload_key

OracleEvent = tuple[int, Any, Optional[int]]  # (generation serial, payload, timestamp)


@dataclass(frozen=True)
class OracleHypothesis:
    events: tuple[OracleEvent, ...]
    facts: tuple[Any, ...]
    probability: float


# selector: hypothesis -> (indices into .events, indices into .facts)
OracleSelector = Callable[
    [OracleHypothesis], tuple[Sequence[int], Sequence[int]]
]


class FlatOracle:
    """Reference implementation that enumerates global hypotheses."""

    def __init__(self, payload_key: Callable[[Any], Any] = default_payload_key,
                 size_limit: int = 100_000) -> None:
        self.hypotheses: list[OracleHypothesis] = [OracleHypothesis((), (), 1.0)]
        self.payload_key = payload_key
        self.size_limit = size_limit
        self.serial = 0

    def generate(self, select: OracleSelector, generator) -> None:
        """Branch every hypothesis by the generator's interpretations.

        ``select`` picks, per hypothesis, which of its events and facts are
        provided to the generator; provided facts are consumed, all other
        facts carry over.
        """
        serial = self.serial
        self.serial += 1
        new: list[OracleHypothesis] = []
        for h in self.hypotheses:
            ev_idx, fact_idx = select(h)
            ev_idx = sorted(set(ev_idx))
            fact_idx = sorted(set(fact_idx))
            ev_views = tuple(
                ProvidedEvent(id=None, payload=h.events[i][1],
                              timestamp=h.events[i][2], serial=h.events[i][0])
                for i in ev_idx
            )
            fact_views = tuple(
                ProvidedFact(id=None, payload=h.facts[i]) for i in fact_idx
            )
            hyps = list(generator(ev_views, fact_views))
            if not hyps:
                raise EmptyGenerationError("generator returned no hypotheses")
            consumed = set(fact_idx)
            kept = tuple(f for i, f in enumerate(h.facts) if i not in consumed)
            for g in hyps:
                if g.probability < 0:
                    raise ValueError("negative hypothesis probability")
                new.append(OracleHypothesis(
                    events=h.events + tuple(
                        (serial, ne.payload, ne.timestamp) for ne in g.events
                    ),
                    facts=kept + tuple(g.facts),
                    probability=h.probability * g.probability,
                ))
                if len(new) > self.size_limit:
                    raise SizeGuardError(
                        f"flat enumeration exceeded {self.size_limit} hypotheses"
                    )
        total = math.fsum(h.probability for h in new)
        if total <= 0.0:
            raise ZeroMassError("all enumerated hypotheses have zero probability")
        self.hypotheses = [
            OracleHypothesis(h.events, h.facts, h.probability / total)
            for h in new
        ]

    def distribution(self) -> dict[Any, float]:
        return merge_by_content(
            ((h.events, h.facts, h.probability) for h in self.hypotheses),
            self.payload_key,
        )


def content_key(events: Sequence[OracleEvent], facts: Sequence[Any],
                payload_key: Callable[[Any], Any]) -> tuple:
    """Order-free canonical identity of a hypothesis' content."""
    ev_keys = sorted(
        ((serial, payload_key(payload)) for serial, payload, _ts in events),
        key=lambda t: (t[0], repr(t[1])),
    )
    fact_keys = sorted((payload_key(f) for f in facts), key=repr)
    return (tuple(ev_keys), tuple(fact_keys))


def merge_by_content(rows, payload_key) -> dict[Any, float]:
    dist: dict[Any, float] = {}
    for events, facts, prob in rows:
        key = content_key(events, facts, payload_key)
        dist[key] = dist.get(key, 0.0) + prob
    return dist


def cross_product(world: World, size_limit: int = 100_000) -> list[OracleHypothesis]:
    """Global hypotheses implied by the world: one leaf per cluster.

    An empty world yields the single empty hypothesis with probability 1.
    """
    per_cluster: list[list[OracleHypothesis]] = []
    for cid in sorted(world.clusters):
        cluster = world.clusters[cid]
        rows: list[OracleHypothesis] = []
        for lid in cluster.leaf_ids_sorted():
            leaf = cluster.leaves[lid]
            events: list[OracleEvent] = []
            for gid in reversed(cluster.path_to_root(leaf.event_group)):
                for eid in cluster.groups[gid].events:
                    ev = cluster.events[eid]
                    events.append((ev.serial, ev.payload, ev.timestamp))
            facts = tuple(
                cluster.facts[fid].payload for fid in sorted(leaf.facts)
            )
            rows.append(OracleHypothesis(tuple(events), facts, leaf.probability))
        per_cluster.append(rows)

    count = 1
    for rows in per_cluster:
        count *= len(rows)
        if count > size_limit:
            raise SizeGuardError(
                f"cross product exceeds {size_limit} hypotheses"
            )
    out: list[OracleHypothesis] = []
    for combo in itertools.product(*per_cluster):
        events: tuple[OracleEvent, ...] = ()
        facts: tuple[Any, ...] = ()
        prob = 1.0
        for part in combo:
            events += part.events
            facts += part.facts
            prob *= part.probability
        out.append(OracleHypothesis(events, facts, prob))
    return out


def engine_distribution(world: World,
                        certain_events: Sequence[OracleEvent] = (),
                        size_limit: int = 100_000) -> dict[Any, float]:
    """Cross-product distribution with already-certain events folded in."""
    rows = cross_product(world, size_limit)
    certain = tuple(certain_events)
    return merge_by_content(
        ((certain + h.events, h.facts, h.probability) for h in rows),
        world.payload_key,
    )


def distribution_diffs(a: dict[Any, float], b: dict[Any, float],
                       tolerance: float = 1e-9) -> list[str]:
    """Human-readable mismatches between two content distributions."""
    problems: list[str] = []
    for key in sorted(set(a) | set(b), key=repr):
        pa = a.get(key)
        pb = b.get(key)
        if pa is None:
            problems.append(f"only in second side (p={pb:.12g}): {key!r:.200}")
        elif pb is None:
            problems.append(f"only in first side (p={pa:.12g}): {key!r:.200}")
        elif abs(pa - pb) > tolerance:
            problems.append(
                f"probability mismatch {pa:.12g} vs {pb:.12g}: {key!r:.200}"
            )
    return problems
