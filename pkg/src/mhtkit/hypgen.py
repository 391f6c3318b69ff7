"""Per-leaf hypothesis generation.

The application supplies a generator callback; for every leaf of the
target cluster it receives the requested information that leaf actually
contains and returns the alternative interpretations. Each interpretation
becomes a new event group under the leaf with a new leaf beneath it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

from .errors import EmptyGenerationError, ZeroMassError
from .model import (
    Cluster,
    Constraint,
    ConstraintId,
    Event,
    EventGroup,
    EventGroupId,
    EventId,
    Fact,
    FactId,
    Leaf,
    LeafId,
    RULE1,
    RULE2,
)


@dataclass(frozen=True)
class NewEvent:
    """Event content proposed by a generated hypothesis."""

    payload: Any
    timestamp: Optional[int] = None


@dataclass(frozen=True)
class GeneratedHypothesis:
    """One interpretation returned by a generator callback.

    ``facts`` are the payloads this interpretation derives; facts the leaf
    held but that were not provided to the call are carried over
    automatically, while provided facts are consumed and must be restated
    to survive.
    """

    events: tuple[NewEvent, ...] = ()
    facts: tuple[Any, ...] = ()
    probability: float = 1.0


def hyp(probability: float, events: Sequence[Any] = (),
        facts: Sequence[Any] = ()) -> GeneratedHypothesis:
    """Convenience constructor; bare event payloads are wrapped."""
    evs = tuple(e if isinstance(e, NewEvent) else NewEvent(e) for e in events)
    return GeneratedHypothesis(events=evs, facts=tuple(facts),
                               probability=probability)


@dataclass(frozen=True)
class ProvidedEvent:
    id: Optional[EventId]
    payload: Any
    timestamp: Optional[int] = None
    serial: Optional[int] = None


@dataclass(frozen=True)
class ProvidedFact:
    id: Optional[FactId]
    payload: Any


HypothesisGenerator = Callable[
    [tuple[ProvidedEvent, ...], tuple[ProvidedFact, ...]],
    Sequence[GeneratedHypothesis],
]


@dataclass
class GenerationRecord:
    """Audit row describing what one leaf was expanded with."""

    serial: int
    cluster_id: int
    leaf_id: LeafId
    provided_events: tuple[EventId, ...]
    provided_facts: tuple[FactId, ...]
    new_groups: tuple[EventGroupId, ...]
    raw_probabilities: tuple[float, ...]


def hyp_gen(world, cluster: Cluster, req_events: set[EventId],
            req_facts: set[FactId], generator: HypothesisGenerator,
            changes, serial: int) -> list[GenerationRecord]:
    """Expand every leaf of ``cluster`` with the generator's hypotheses.

    Adds one dependency constraint per source leaf (provided groups plus
    that leaf's new groups) and one generation constraint spanning all new
    groups, then deletes the provided facts and renormalizes.
    """
    # pruning during the join may have dropped requested information; a
    # requested id must be here or dead, never live in another cluster
    for eid in req_events:
        assert eid in cluster.events or eid not in world.event_index, \
            f"event {eid} not joined into cluster"
    for fid in req_facts:
        assert fid in cluster.facts or fid not in world.fact_index, \
            f"fact {fid} not joined into cluster"

    records: list[GenerationRecord] = []
    all_new_groups: list[EventGroupId] = []
    provided_fact_ids: set[FactId] = set()

    for lid in cluster.leaf_ids_sorted():
        leaf = cluster.leaves[lid]
        path_events = [
            eid
            for gid in reversed(cluster.path_to_root(leaf.event_group))
            for eid in cluster.groups[gid].events
        ]
        prov_events = [eid for eid in path_events if eid in req_events]
        prov_facts = sorted(leaf.facts & req_facts)
        provided_fact_ids.update(prov_facts)

        ev_views = tuple(
            ProvidedEvent(
                id=eid,
                payload=cluster.events[eid].payload,
                timestamp=cluster.events[eid].timestamp,
                serial=cluster.events[eid].serial,
            )
            for eid in prov_events
        )
        fact_views = tuple(
            ProvidedFact(id=fid, payload=cluster.facts[fid].payload)
            for fid in prov_facts
        )
        hyps = list(generator(ev_views, fact_views))
        if not hyps:
            raise EmptyGenerationError(
                f"generator returned no hypotheses for leaf {lid}"
            )
        raw = [h.probability for h in hyps]
        if any(p < 0 for p in raw):
            raise ValueError(f"negative hypothesis probability in {raw}")
        if max(raw) <= 0.0:
            raise ZeroMassError(
                f"all hypotheses for leaf {lid} have zero probability"
            )

        dep_groups: set[EventGroupId] = set()
        for eid in prov_events:
            dep_groups.add(cluster.events[eid].group)
        for fid in prov_facts:
            dep_groups.add(cluster.facts[fid].depends_on)
        dep_groups.discard(cluster.root)

        carried = sorted(leaf.facts - req_facts)

        new_groups: list[EventGroupId] = []
        for h in hyps:
            g = EventGroup(
                id=EventGroupId(world.alloc.next_id()),
                parent=leaf.event_group,
                serial=serial,
            )
            cluster.groups[g.id] = g
            cluster.groups[leaf.event_group].children.append(g.id)
            for ne in h.events:
                ev = Event(
                    id=EventId(world.alloc.next_id()),
                    payload=ne.payload,
                    timestamp=ne.timestamp,
                    serial=serial,
                    group=g.id,
                )
                g.events.append(ev.id)
                cluster.events[ev.id] = ev
                world.event_index[ev.id] = cluster.id
                changes.event_added(ev, cluster.id)

            nl = Leaf(
                id=LeafId(world.alloc.next_id()),
                event_group=g.id,
                probability=h.probability * leaf.probability,
            )
            cluster.attach_leaf(nl)
            for payload in h.facts:
                nf = Fact(
                    id=FactId(world.alloc.next_id()),
                    payload=payload,
                    depends_on=g.id,
                )
                cluster.facts[nf.id] = nf
                world.fact_index[nf.id] = cluster.id
                changes.fact_added(nf, cluster.id)
                cluster.add_fact_ref(nl, nf.id)
            for fid in carried:
                cluster.add_fact_ref(nl, fid)

            new_groups.append(g.id)
            dep_groups.add(g.id)
            all_new_groups.append(g.id)

        cluster.detach_leaf(lid)
        con = Constraint(
            id=ConstraintId(world.alloc.next_id()),
            event_groups=dep_groups,
            kind=RULE2,
            serial=serial,
        )
        cluster.constraints[con.id] = con
        records.append(GenerationRecord(
            serial=serial,
            cluster_id=cluster.id,
            leaf_id=lid,
            provided_events=tuple(prov_events),
            provided_facts=tuple(prov_facts),
            new_groups=tuple(new_groups),
            raw_probabilities=tuple(raw),
        ))

    for fid in sorted(provided_fact_ids):
        fact = cluster.facts.pop(fid)
        assert fact.leaf_refs == 0, f"provided fact {fid} still referenced"
        world.fact_index.pop(fid, None)
        changes.fact_removed(fact, cluster.id)

    gen_con = Constraint(
        id=ConstraintId(world.alloc.next_id()),
        event_groups=set(all_new_groups),
        kind=RULE1,
        serial=serial,
    )
    cluster.constraints[gen_con.id] = gen_con
    cluster.normalize()
    return records
