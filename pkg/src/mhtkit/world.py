"""World facade: owns the clusters and runs the generate pipeline.

Every mutation goes through :meth:`World.generate`, which joins the
clusters holding the requested information, expands each leaf via the
application's generator, prunes, flushes certainties, splits independent
constraint sets apart, and finally collapses clusters the application no
longer finds relevant. Notification sinks observe the surviving changes
after each stage commits.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional, Sequence

from .errors import MhtError, UnknownIdError
from .hypgen import (
    GenerationRecord,
    HypothesisGenerator,
    ProvidedEvent,
    ProvidedFact,
    hyp_gen,
)
from .model import (
    Cluster,
    ClusterId,
    Event,
    EventGroup,
    EventGroupId,
    EventId,
    FactId,
    IdAllocator,
    Leaf,
    LeafId,
    validate_cluster,
)
from .ops import join_clusters, split
from .pruning import FlushOutcome, PruneStrategy, prune, relevance_collapse

EVENT_ADDED = "event_added"
EVENT_REMOVED = "event_removed"
EVENT_CERTAIN = "event_certain"
FACT_ADDED = "fact_added"
FACT_REMOVED = "fact_removed"


@dataclass(frozen=True)
class Notification:
    kind: str
    entity_id: int
    payload: Any
    cluster_id: ClusterId
    timestamp: Optional[int] = None
    serial: Optional[int] = None


NotificationSink = Callable[[tuple[Notification, ...]], None]
CertainSink = Callable[[ProvidedEvent, ClusterId], None]
RelevancePredicate = Callable[
    [tuple[ProvidedEvent, ...], tuple[ProvidedFact, ...]], bool
]


class Changes:
    """Per-stage notification buffer.

    Additions cancelled by a removal within the same stage are dropped on
    both sides: information that never outlived the stage was never
    observable. A certainty promotion likewise swallows a same-stage add,
    but the certain notification itself is always delivered.
    """

    __slots__ = ("adds", "removes", "certains", "enabled")

    def __init__(self, enabled: bool = True) -> None:
        self.adds: list[Notification] = []
        self.removes: list[Notification] = []
        self.certains: list[Notification] = []
        self.enabled = enabled

    def event_added(self, ev, cluster_id: ClusterId) -> None:
        if self.enabled:
            self.adds.append(Notification(
                EVENT_ADDED, ev.id, ev.payload, cluster_id, ev.timestamp, ev.serial
            ))

    def event_removed(self, ev, cluster_id: ClusterId) -> None:
        if self.enabled:
            self.removes.append(Notification(
                EVENT_REMOVED, ev.id, ev.payload, cluster_id, ev.timestamp, ev.serial
            ))

    def event_certain(self, ev, cluster_id: ClusterId) -> None:
        if self.enabled:
            self.certains.append(Notification(
                EVENT_CERTAIN, ev.id, ev.payload, cluster_id, ev.timestamp, ev.serial
            ))

    def fact_added(self, fact, cluster_id: ClusterId) -> None:
        if self.enabled:
            self.adds.append(Notification(
                FACT_ADDED, fact.id, fact.payload, cluster_id
            ))

    def fact_removed(self, fact, cluster_id: ClusterId) -> None:
        if self.enabled:
            self.removes.append(Notification(
                FACT_REMOVED, fact.id, fact.payload, cluster_id
            ))

    def drain(self) -> tuple[Notification, ...]:
        add_ids = {n.entity_id for n in self.adds}
        gone_ids = {n.entity_id for n in self.removes}
        gone_ids |= {n.entity_id for n in self.certains}
        out = [n for n in self.removes if n.entity_id not in add_ids]
        out.extend(self.certains)
        out.extend(n for n in self.adds if n.entity_id not in gone_ids)
        return tuple(out)


def default_payload_key(payload: Any) -> Any:
    """Canonical content key for a payload.

    Hashable payloads stand for themselves; anything else falls back to
    its pickle serialization, which is stable for the plain dataclasses
    and primitive containers applications are expected to use.
    """
    try:
        hash(payload)
        return payload
    except TypeError:
        return pickle.dumps(payload, protocol=4)


@dataclass(frozen=True)
class GenerateReport:
    """What one generate call did to the world."""

    serial: int
    clusters: tuple[ClusterId, ...]
    certain_events: tuple[tuple[ClusterId, ProvidedEvent], ...]
    fact_clusters: tuple[ClusterId, ...]


class World:
    """Container for all clusters plus the shared configuration."""

    def __init__(
        self,
        strategies: Sequence[PruneStrategy] = (),
        relevance: Optional[RelevancePredicate] = None,
        payload_key: Callable[[Any], Any] = default_payload_key,
    ) -> None:
        self.alloc = IdAllocator()
        self.clusters: dict[ClusterId, Cluster] = {}
        self.event_index: dict[EventId, ClusterId] = {}
        self.fact_index: dict[FactId, ClusterId] = {}
        self.strategies: list[PruneStrategy] = list(strategies)
        self.relevance = relevance
        self.payload_key = payload_key
        self.generation_log: list[GenerationRecord] = []
        self._sinks: list[NotificationSink] = []
        self._certain_sinks: list[CertainSink] = []
        self._serial = 0
        self._busy = False

    # -- wiring -------------------------------------------------------------

    def subscribe(self, sink: NotificationSink) -> None:
        self._sinks.append(sink)

    def subscribe_certain(self, sink: CertainSink) -> None:
        self._certain_sinks.append(sink)

    def emit_certain(self, ev, cluster_id: ClusterId) -> None:
        view = ProvidedEvent(id=ev.id, payload=ev.payload,
                             timestamp=ev.timestamp, serial=ev.serial)
        for sink in self._certain_sinks:
            sink(view, cluster_id)

    # -- cluster bookkeeping ------------------------------------------------

    def new_cluster(self, with_leaf: bool = True) -> Cluster:
        root = EventGroup(id=EventGroupId(self.alloc.next_id()), parent=None)
        cluster = Cluster(ClusterId(self.alloc.next_id()), root)
        if with_leaf:
            cluster.attach_leaf(Leaf(
                id=LeafId(self.alloc.next_id()),
                event_group=root.id,
                probability=1.0,
            ))
        self.clusters[cluster.id] = cluster
        return cluster

    def drop_cluster_record(self, cluster_id: ClusterId) -> None:
        del self.clusters[cluster_id]

    def event_cluster(self, eid: EventId) -> ClusterId:
        try:
            return self.event_index[eid]
        except KeyError:
            raise UnknownIdError(f"event {eid} is not live") from None

    def fact_cluster(self, fid: FactId) -> ClusterId:
        try:
            return self.fact_index[fid]
        except KeyError:
            raise UnknownIdError(f"fact {fid} is not live") from None

    def cluster_views(
        self, cluster: Cluster
    ) -> tuple[tuple[ProvidedEvent, ...], tuple[ProvidedFact, ...]]:
        events = tuple(
            ProvidedEvent(id=eid, payload=ev.payload,
                          timestamp=ev.timestamp, serial=ev.serial)
            for eid, ev in sorted(cluster.events.items())
        )
        facts = tuple(
            ProvidedFact(id=fid, payload=fact.payload)
            for fid, fact in sorted(cluster.facts.items())
        )
        return events, facts

    def snapshot(
        self,
    ) -> tuple[tuple[ProvidedEvent, ...], tuple[ProvidedFact, ...]]:
        """Point-in-time view of every live event and fact, by id."""
        events: list[ProvidedEvent] = []
        facts: list[ProvidedFact] = []
        for cid in sorted(self.clusters):
            evs, fs = self.cluster_views(self.clusters[cid])
            events.extend(evs)
            facts.extend(fs)
        events.sort(key=lambda v: v.id)
        facts.sort(key=lambda v: v.id)
        return tuple(events), tuple(facts)

    # -- the pipeline -------------------------------------------------------

    def generate(
        self,
        req_events: Iterable[EventId],
        req_facts: Iterable[FactId],
        generator: HypothesisGenerator,
    ) -> GenerateReport:
        """Run one full generation cycle for the requested information."""
        if self._busy:
            raise MhtError("generate() re-entered from a sink or generator")
        self._busy = True
        try:
            return self._generate(set(req_events), set(req_facts), generator)
        finally:
            self._busy = False

    def _generate(self, req_events: set[EventId], req_facts: set[FactId],
                  generator: HypothesisGenerator) -> GenerateReport:
        serial = self._serial
        self._serial += 1
        flushes: list[FlushOutcome] = []

        changes = self._changes()
        cid = join_clusters(
            self, req_events, req_facts, changes,
            prune_fn=lambda c: prune(self, c, changes, flush=False),
        )
        self._commit(changes)
        cluster = self.clusters[cid]

        changes = self._changes()
        records = hyp_gen(self, cluster, req_events, req_facts, generator,
                          changes, serial)
        self.generation_log.extend(records)
        self._commit(changes)

        changes = self._changes()
        flushes.append(prune(self, cluster, changes))
        self._commit(changes)

        changes = self._changes()
        if cid in self.clusters:
            result_ids = split(self, cluster, changes)
        else:
            result_ids = []
        self._commit(changes)

        changes = self._changes()
        flushes.append(relevance_collapse(self, self.relevance, changes))
        self._commit(changes)

        for hid in [c for c in sorted(self.clusters)
                    if self.clusters[c].content_empty()]:
            self.drop_cluster_record(hid)

        certain: list[tuple[ClusterId, ProvidedEvent]] = []
        fact_clusters: list[ClusterId] = []
        for out in flushes:
            for ccid, ev in out.certain:
                certain.append((ccid, ProvidedEvent(
                    id=ev.id, payload=ev.payload,
                    timestamp=ev.timestamp, serial=ev.serial,
                )))
            fact_clusters.extend(out.fact_clusters)

        touched = [c for c in result_ids if c in self.clusters]
        touched += [c for c in fact_clusters if c in self.clusters and c not in touched]
        return GenerateReport(
            serial=serial,
            clusters=tuple(touched),
            certain_events=tuple(certain),
            fact_clusters=tuple(c for c in fact_clusters if c in self.clusters),
        )

    def _changes(self) -> Changes:
        return Changes(enabled=bool(self._sinks))

    def _commit(self, changes: Changes) -> None:
        if not self._sinks:
            return
        batch = changes.drain()
        if not batch:
            return
        for sink in self._sinks:
            sink(batch)

    # -- diagnostics --------------------------------------------------------

    def total_leaves(self) -> int:
        return sum(len(c.leaves) for c in self.clusters.values())

    def max_cluster_leaves(self) -> int:
        return max((len(c.leaves) for c in self.clusters.values()), default=0)

    def validate(self) -> list[str]:
        """Structural problems across all clusters and the id indices."""
        problems: list[str] = []
        for cid in sorted(self.clusters):
            cluster = self.clusters[cid]
            problems.extend(
                f"cluster {cid}: {msg}" for msg in validate_cluster(cluster)
            )
        live_events = {
            eid: cid
            for cid, c in self.clusters.items()
            for eid in c.events
        }
        live_facts = {
            fid: cid
            for cid, c in self.clusters.items()
            for fid in c.facts
        }
        if live_events != self.event_index:
            problems.append("event index out of sync with cluster contents")
        if live_facts != self.fact_index:
            problems.append("fact index out of sync with cluster contents")
        return problems
