"""Leaf pruning strategies, certainty flushing, and relevance collapse."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

from .model import Cluster, ClusterId, EventGroupId, FactId, Leaf, LeafId
from .ops import remove_leaf


@dataclass(frozen=True)
class BestK:
    """Keep the k most probable leaves; ties keep the smaller (older) id."""

    k: int

    def survivors(self, cluster: Cluster) -> set[LeafId]:
        if self.k < 1:
            raise ValueError("BestK requires k >= 1")
        ranked = sorted(
            cluster.leaves.values(),
            key=lambda l: (-l.probability, l.id),
        )
        return {l.id for l in ranked[: self.k]}


@dataclass(frozen=True)
class RatioThreshold:
    """Keep leaves whose probability is at least ratio * max probability."""

    ratio: float

    def survivors(self, cluster: Cluster) -> set[LeafId]:
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError("RatioThreshold requires 0 < ratio <= 1")
        cutoff = self.ratio * max(l.probability for l in cluster.leaves.values())
        keep = {l.id for l in cluster.leaves.values() if l.probability >= cutoff}
        if not keep:
            # max-probability leaf always qualifies; guard against NaN abuse
            keep = BestK(1).survivors(cluster)
        return keep


@dataclass(frozen=True)
class DepthLimit:
    """Remove lowest-probability leaves until tree depth fits the limit.

    Ties remove the larger (younger) id first. Removal of a leaf only
    reduces depth when the deep branch dies with it, hence the loop.
    """

    depth: int

    def apply(self, world, cluster: Cluster, changes) -> bool:
        if self.depth < 1:
            raise ValueError("DepthLimit requires depth >= 1")
        removed = False
        while cluster.depth() > self.depth and len(cluster.leaves) > 1:
            victim = max(
                cluster.leaves.values(),
                key=lambda l: (-l.probability, l.id),
            )
            remove_leaf(world, cluster, victim.id, changes, normalize=False)
            removed = True
        return removed


PruneStrategy = Union[BestK, RatioThreshold, DepthLimit]


@dataclass
class FlushOutcome:
    """Certain events emitted and fact clusters spun off by one flush."""

    certain: list[tuple[ClusterId, Any]] = field(default_factory=list)
    fact_clusters: list[ClusterId] = field(default_factory=list)


def prune(world, cluster: Cluster, changes,
          strategies: Optional[Sequence[PruneStrategy]] = None,
          flush: bool = True) -> FlushOutcome:
    """Apply the strategies in order, renormalize, then flush certainties.

    The size-control prunes inside a join pass ``flush=False``: flushing
    there could exile a requested fact into a fresh cluster mid-join, and
    joining it back rebuilds the exact tree shape the flush strips, so the
    two would chase each other forever. One flush after generation settles
    everything instead.
    """
    if strategies is None:
        strategies = world.strategies
    touched = False
    for strat in strategies:
        if isinstance(strat, DepthLimit):
            touched |= strat.apply(world, cluster, changes)
            continue
        keep = strat.survivors(cluster)
        victims = [lid for lid in cluster.leaf_ids_sorted() if lid not in keep]
        for lid in victims:
            remove_leaf(world, cluster, lid, changes, normalize=False)
            touched = True
    if touched:
        cluster.normalize()
    if not flush:
        return FlushOutcome()
    return flush_certainties(world, cluster, changes)


def flush_certainties(world, cluster: Cluster, changes) -> FlushOutcome:
    """Promote the root's only child for as long as it has exactly one.

    The promoted group's events leave the engine as certain history; each
    fact depending on it moves, id intact, into its own fresh single-leaf
    cluster so unrelated information stops sharing a tree. Grandchildren
    re-parent to the root. Idempotent once the root has several children.
    """
    out = FlushOutcome()
    root = cluster.groups[cluster.root]
    while len(root.children) == 1:
        child = cluster.groups[root.children[0]]
        for eid in list(child.events):
            ev = cluster.events.pop(eid)
            world.event_index.pop(eid, None)
            changes.event_certain(ev, cluster.id)
            world.emit_certain(ev, cluster.id)
            out.certain.append((cluster.id, ev))
        dependents = sorted(
            fid for fid, fact in cluster.facts.items()
            if fact.depends_on == child.id
        )
        for fid in dependents:
            fact = cluster.facts.pop(fid)
            for leaf in cluster.leaves.values():
                leaf.facts.discard(fid)
            nc = world.new_cluster()
            fact.depends_on = nc.root
            fact.leaf_refs = 1
            nc.facts[fid] = fact
            nc.leaves[nc.leaf_ids_sorted()[0]].facts.add(fid)
            world.fact_index[fid] = nc.id
            out.fact_clusters.append(nc.id)
        for con_id in [cid for cid, con in cluster.constraints.items()
                       if child.id in con.event_groups]:
            con = cluster.constraints[con_id]
            con.event_groups.discard(child.id)
            if not con.event_groups:
                del cluster.constraints[con_id]
        root.children = list(child.children)
        for gid in root.children:
            cluster.groups[gid].parent = root.id
        for lid in cluster.leaves_on(child.id):
            cluster.leaves[lid].event_group = root.id
        del cluster.groups[child.id]
    return out


def relevance_collapse(world, predicate, changes) -> FlushOutcome:
    """Collapse clusters the application no longer cares about.

    Clusters failing the predicate are cut to their best leaf and flushed;
    a cluster left with no content at all is deleted outright.
    """
    out = FlushOutcome()
    if predicate is None:
        return out
    for cid in sorted(world.clusters):
        cluster = world.clusters.get(cid)
        if cluster is None:
            continue
        events_view, facts_view = world.cluster_views(cluster)
        if predicate(events_view, facts_view):
            continue
        sub = prune(world, cluster, changes, strategies=[BestK(1)])
        out.certain.extend(sub.certain)
        out.fact_clusters.extend(sub.fact_clusters)
        if cluster.content_empty():
            world.drop_cluster_record(cid)
    return out
