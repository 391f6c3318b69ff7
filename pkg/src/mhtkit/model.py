"""Identifier-based data model for hypothesis trees.

A cluster is one hypothesis tree: event groups form the tree, events live
inside groups, leaves hang off the bottom groups and carry facts plus a
probability, and constraints tie sets of groups together for splitting.
All cross references are by id; every entity id is unique for the life of
a world instance and never reused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, NewType, Optional

EventId = NewType("EventId", int)
FactId = NewType("FactId", int)
EventGroupId = NewType("EventGroupId", int)
ConstraintId = NewType("ConstraintId", int)
ClusterId = NewType("ClusterId", int)
LeafId = NewType("LeafId", int)

PROB_TOLERANCE = 1e-9

RULE1 = "rule1"
RULE2 = "rule2"


class IdAllocator:
    """Monotonic id source shared by every entity kind of one world."""

    def __init__(self) -> None:
        self._next = 0

    def next_id(self) -> int:
        value = self._next
        self._next += 1
        return value


@dataclass
class Event:
    """Immutable piece of world history.

    ``serial`` identifies the hypothesis generation that produced the
    event; clones keep the serial of their source.
    """

    id: EventId
    payload: Any
    timestamp: Optional[int]
    serial: int
    group: EventGroupId


@dataclass
class Fact:
    """Current-state assertion. Lives in leaves, depends on one event group."""

    id: FactId
    payload: Any
    depends_on: EventGroupId
    leaf_refs: int = 0


@dataclass
class EventGroup:
    """Tree node aggregating the events of one generated hypothesis."""

    id: EventGroupId
    parent: Optional[EventGroupId]
    children: list[EventGroupId] = field(default_factory=list)
    events: list[EventId] = field(default_factory=list)
    serial: Optional[int] = None


@dataclass
class Constraint:
    """Set of event groups that must stay in one cluster.

    ``kind`` records whether the constraint came from the same-generation
    rule or the premise-dependency rule; unified copies keep the kind and
    serial of their source.
    """

    id: ConstraintId
    event_groups: set[EventGroupId]
    kind: str
    serial: int


@dataclass
class Leaf:
    """Bottom-of-tree record holding facts and a branch probability."""

    id: LeafId
    event_group: EventGroupId
    facts: set[FactId] = field(default_factory=set)
    probability: float = 1.0


class Cluster:
    """One hypothesis tree plus its id indices."""

    def __init__(self, cluster_id: ClusterId, root: EventGroup) -> None:
        self.id = cluster_id
        self.root = root.id
        self.groups: dict[EventGroupId, EventGroup] = {root.id: root}
        self.leaves: dict[LeafId, Leaf] = {}
        self.constraints: dict[ConstraintId, Constraint] = {}
        self.events: dict[EventId, Event] = {}
        self.facts: dict[FactId, Fact] = {}

    # -- structural helpers -------------------------------------------------

    def group(self, gid: EventGroupId) -> EventGroup:
        return self.groups[gid]

    def path_to_root(self, gid: EventGroupId) -> list[EventGroupId]:
        """Groups from ``gid`` up to and including the root."""
        path = []
        cur: Optional[EventGroupId] = gid
        while cur is not None:
            path.append(cur)
            cur = self.groups[cur].parent
        return path

    def depth(self) -> int:
        """Tree depth in edges from the root to the deepest bottom group."""
        best = 0
        for leaf in self.leaves.values():
            best = max(best, len(self.path_to_root(leaf.event_group)) - 1)
        return best

    def leaf_ids_sorted(self) -> list[LeafId]:
        return sorted(self.leaves)

    def events_of_path(self, gid: EventGroupId) -> list[EventId]:
        out: list[EventId] = []
        for g in self.path_to_root(gid):
            out.extend(self.groups[g].events)
        return out

    def attach_leaf(self, leaf: Leaf) -> None:
        self.leaves[leaf.id] = leaf

    def detach_leaf(self, leaf_id: LeafId) -> Leaf:
        leaf = self.leaves.pop(leaf_id)
        for fid in leaf.facts:
            self.facts[fid].leaf_refs -= 1
        return leaf

    def leaves_on(self, gid: EventGroupId) -> list[LeafId]:
        """Leaves sitting directly on ``gid``, id order.

        Several leaves may share one bottom group: splitting keeps one
        projected leaf per original branch, so duplicates land together.
        """
        return sorted(
            lid for lid, leaf in self.leaves.items() if leaf.event_group == gid
        )

    def add_fact_ref(self, leaf: Leaf, fact_id: FactId) -> None:
        if fact_id not in leaf.facts:
            leaf.facts.add(fact_id)
            self.facts[fact_id].leaf_refs += 1

    def normalize(self) -> None:
        total = math.fsum(l.probability for l in self.leaves.values())
        if total <= 0.0:
            from .errors import ZeroMassError

            raise ZeroMassError(
                f"cluster {self.id}: surviving leaves have zero total probability"
            )
        for leaf in self.leaves.values():
            leaf.probability /= total

    def content_empty(self) -> bool:
        return not self.events and not self.facts


def validate_cluster(cluster: Cluster) -> list[str]:
    """Return a list of invariant violations; empty when the cluster is sound.

    Diagnostic only: never mutates, never raises on bad structure.
    """
    bad: list[str] = []
    groups = cluster.groups

    root = groups.get(cluster.root)
    if root is None:
        return [f"root group {cluster.root} missing"]
    if root.parent is not None:
        bad.append("root has a parent")

    # parent/children links consistent, single tree, no cycles
    seen: set[EventGroupId] = set()
    stack = [cluster.root]
    while stack:
        gid = stack.pop()
        if gid in seen:
            bad.append(f"group {gid} reached twice (cycle or shared child)")
            continue
        seen.add(gid)
        g = groups.get(gid)
        if g is None:
            bad.append(f"child link to unknown group {gid}")
            continue
        for child in g.children:
            cg = groups.get(child)
            if cg is None:
                bad.append(f"group {gid} lists unknown child {child}")
            elif cg.parent != gid:
                bad.append(f"group {child} parent link disagrees with {gid}")
            stack.append(child)
    unreachable = set(groups) - seen
    if unreachable:
        bad.append(f"groups unreachable from root: {sorted(unreachable)}")

    # leaves: every childless group holds at least one, interior groups none
    by_group: dict[EventGroupId, int] = {}
    for lid, leaf in cluster.leaves.items():
        g = groups.get(leaf.event_group)
        if g is None:
            bad.append(f"leaf {lid} sits on unknown group {leaf.event_group}")
            continue
        by_group[leaf.event_group] = by_group.get(leaf.event_group, 0) + 1
        if g.children:
            bad.append(f"leaf {lid} sits on interior group {leaf.event_group}")
    for gid, g in groups.items():
        if not g.children and by_group.get(gid, 0) == 0:
            bad.append(f"bottom group {gid} has no leaf")

    # probabilities
    total = math.fsum(l.probability for l in cluster.leaves.values())
    if cluster.leaves and abs(total - 1.0) > PROB_TOLERANCE:
        bad.append(f"leaf probabilities sum to {total!r}, not 1")
    for lid, leaf in cluster.leaves.items():
        if not (0.0 <= leaf.probability <= 1.0 + PROB_TOLERANCE):
            bad.append(f"leaf {lid} probability {leaf.probability!r} outside [0,1]")

    # events: each belongs to exactly one group and the links agree
    owned: dict[EventId, EventGroupId] = {}
    for gid, g in groups.items():
        for eid in g.events:
            if eid in owned:
                bad.append(f"event {eid} in groups {owned[eid]} and {gid}")
            owned[eid] = gid
            ev = cluster.events.get(eid)
            if ev is None:
                bad.append(f"group {gid} lists unknown event {eid}")
            elif ev.group != gid:
                bad.append(f"event {eid} back-reference disagrees with group {gid}")
    for eid in cluster.events:
        if eid not in owned:
            bad.append(f"event {eid} indexed but in no group")
    if root.events:
        bad.append("root group holds events (certainty residue must be flushed)")

    # facts: association group live, and present in exactly the leaves below it
    below: dict[EventGroupId, set[LeafId]] = {}
    for lid, leaf in cluster.leaves.items():
        if leaf.event_group not in groups:
            continue
        for gid in cluster.path_to_root(leaf.event_group):
            below.setdefault(gid, set()).add(lid)
    for fid, fact in cluster.facts.items():
        if fact.depends_on not in groups:
            bad.append(f"fact {fid} depends on unknown group {fact.depends_on}")
            continue
        holders = {lid for lid, l in cluster.leaves.items() if fid in l.facts}
        expected = below.get(fact.depends_on, set())
        if holders != expected:
            bad.append(
                f"fact {fid} held by leaves {sorted(holders)} but its group "
                f"covers leaves {sorted(expected)}"
            )
        if fact.leaf_refs != len(holders):
            bad.append(f"fact {fid} leaf_refs {fact.leaf_refs} != {len(holders)}")
    for lid, leaf in cluster.leaves.items():
        for fid in leaf.facts:
            if fid not in cluster.facts:
                bad.append(f"leaf {lid} holds unknown fact {fid}")

    # constraints: non-empty, members live
    for cid, con in cluster.constraints.items():
        if not con.event_groups:
            bad.append(f"constraint {cid} is empty")
        for gid in con.event_groups:
            if gid not in groups:
                bad.append(f"constraint {cid} references unknown group {gid}")

    # every group carrying information sits in at least one constraint; the
    # root and empty structural nodes are exempt
    constrained: set[EventGroupId] = set()
    for con in cluster.constraints.values():
        constrained |= con.event_groups
    fact_groups = {f.depends_on for f in cluster.facts.values()}
    for gid, g in groups.items():
        if gid == cluster.root:
            continue
        if (g.events or gid in fact_groups) and gid not in constrained:
            bad.append(f"group {gid} carries information but is in no constraint")

    return bad


@dataclass
class CloneResult:
    """Outcome of copying one cluster's tree into another."""

    root: EventGroupId
    group_map: dict[EventGroupId, EventGroupId]
    event_map: dict[EventId, EventId]
    fact_map: dict[FactId, FactId]
    leaves: list[Leaf]
    constraints: list[tuple[str, int, set[EventGroupId]]]


def clone_subtree(dst: Cluster, src: Cluster, alloc: IdAllocator) -> CloneResult:
    """Deep-copy ``src``'s tree into ``dst`` with fresh ids.

    Payload objects are shared; everything else is new. Constraints are
    returned as (kind, serial, mapped group set) rows and deliberately not
    installed in ``dst``: the caller decides how to unify them.
    """
    group_map: dict[EventGroupId, EventGroupId] = {}
    event_map: dict[EventId, EventId] = {}
    fact_map: dict[FactId, FactId] = {}
    new_leaves: list[Leaf] = []

    order: list[EventGroupId] = []
    stack = [src.root]
    while stack:
        gid = stack.pop()
        order.append(gid)
        stack.extend(reversed(src.groups[gid].children))

    for gid in order:
        g = src.groups[gid]
        ng = EventGroup(
            id=EventGroupId(alloc.next_id()),
            parent=group_map[g.parent] if g.parent is not None else None,
            serial=g.serial,
        )
        group_map[gid] = ng.id
        dst.groups[ng.id] = ng
        if g.parent is not None:
            dst.groups[ng.parent].children.append(ng.id)
        for eid in g.events:
            ev = src.events[eid]
            ne = Event(
                id=EventId(alloc.next_id()),
                payload=ev.payload,
                timestamp=ev.timestamp,
                serial=ev.serial,
                group=ng.id,
            )
            event_map[eid] = ne.id
            dst.events[ne.id] = ne
            ng.events.append(ne.id)

    for fid, fact in src.facts.items():
        nf = Fact(
            id=FactId(alloc.next_id()),
            payload=fact.payload,
            depends_on=group_map[fact.depends_on],
        )
        fact_map[fid] = nf.id
        dst.facts[nf.id] = nf

    for lid in src.leaf_ids_sorted():
        leaf = src.leaves[lid]
        nl = Leaf(
            id=LeafId(alloc.next_id()),
            event_group=group_map[leaf.event_group],
            probability=leaf.probability,
        )
        dst.leaves[nl.id] = nl
        new_leaves.append(nl)
        for fid in sorted(leaf.facts):
            nl.facts.add(fact_map[fid])
            dst.facts[fact_map[fid]].leaf_refs += 1

    constraints = [
        (c.kind, c.serial, {group_map[g] for g in c.event_groups})
        for c in src.constraints.values()
    ]
    return CloneResult(
        root=group_map[src.root],
        group_map=group_map,
        event_map=event_map,
        fact_map=fact_map,
        leaves=new_leaves,
        constraints=constraints,
    )


def cluster_to_dot(cluster: Cluster, label: Callable[[Any], str] = repr) -> str:
    """Render a cluster as DOT text for debugging; not a stability contract.

    Event groups are solid nodes, leaves are boxes, constraints are dashed
    boxes linked to their member groups by dashed edges.
    """
    lines = [f'digraph cluster_{cluster.id} {{', "  rankdir=TB;"]
    for gid in sorted(cluster.groups):
        g = cluster.groups[gid]
        evs = ", ".join(str(e) for e in g.events)
        tag = "root " if gid == cluster.root else ""
        lines.append(f'  g{gid} [label="{tag}EG{gid}\\n[{evs}]"];')
        for child in g.children:
            lines.append(f"  g{gid} -> g{child};")
    for lid in sorted(cluster.leaves):
        leaf = cluster.leaves[lid]
        facts = ", ".join(str(f) for f in sorted(leaf.facts))
        lines.append(
            f'  l{lid} [shape=box, label="L{lid} p={leaf.probability:.4g}\\n'
            f'facts[{facts}]"];'
        )
        lines.append(f"  g{leaf.event_group} -> l{lid} [style=dotted];")
    for cid in sorted(cluster.constraints):
        con = cluster.constraints[cid]
        lines.append(
            f'  c{cid} [shape=box, style=dashed, label="C{cid} {con.kind}"];'
        )
        for gid in sorted(con.event_groups):
            lines.append(f"  c{cid} -> g{gid} [style=dashed, dir=none];")
    lines.append("}")
    return "\n".join(lines)
