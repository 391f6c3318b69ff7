"""Structural cluster operations: joining, constraint unification, leaf
removal, and splitting into independent clusters.

All functions mutate one world and are externally serialized by it. The
``changes`` argument is the world's per-stage notification buffer; the
``world`` argument is duck-typed to avoid a circular import (it provides
``alloc``, ``clusters``, ``event_index``, ``fact_index`` and the cluster
factory helpers).
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional

from .errors import LastLeafError, MismatchedClonesError, UnknownIdError
from .model import (
    Cluster,
    CloneResult,
    Constraint,
    ConstraintId,
    ClusterId,
    Event,
    EventGroup,
    EventGroupId,
    EventId,
    Fact,
    FactId,
    Leaf,
    LeafId,
    clone_subtree,
)
from .unionfind import UnionFind


def resolve_clusters(world, req_events: Iterable[EventId],
                     req_facts: Iterable[FactId],
                     strict: bool = True) -> list[ClusterId]:
    """Clusters containing the requested ids, in deterministic order.

    With ``strict`` every id must be live; otherwise dead ids are skipped,
    which is what the join loop needs after its own pruning.
    """
    found: set[ClusterId] = set()
    for eid in req_events:
        cid = world.event_index.get(eid)
        if cid is None:
            if strict:
                raise UnknownIdError(f"event {eid} is not live")
            continue
        found.add(cid)
    for fid in req_facts:
        cid = world.fact_index.get(fid)
        if cid is None:
            if strict:
                raise UnknownIdError(f"fact {fid} is not live")
            continue
        found.add(cid)
    return sorted(found)


def join_clusters(world, req_events: set[EventId], req_facts: set[FactId],
                  changes, prune_fn: Callable[[Cluster], None]) -> ClusterId:
    """Merge every cluster holding a requested id into one cluster.

    With an empty request a fresh cluster is created. The target is the
    member with the most leaves (cloning cost per source is one clone per
    target leaf); remaining sources are absorbed in ascending leaf count,
    pruning after each pairwise merge.

    Absorbing a source replaces its contents with per-leaf copies, so the
    request sets are rewritten in place: a requested id from a source
    stands for all of its surviving copies afterwards. The loop runs to a
    fixpoint because pruning between pairwise merges can flush a requested
    fact out into a fresh cluster, which then needs merging too.
    """
    if not req_events and not req_facts:
        return world.new_cluster().id

    members = resolve_clusters(world, req_events, req_facts)

    def leaf_count(cid: ClusterId) -> int:
        return len(world.clusters[cid].leaves)

    while True:
        if len(members) == 1:
            return members[0]
        target = max(members, key=lambda cid: (leaf_count(cid), -cid))
        sources = sorted((cid for cid in members if cid != target),
                         key=lambda cid: (leaf_count(cid), cid))
        c1 = world.clusters[target]
        for cid in sources:
            clones = _pairwise_join(world, c1, world.clusters[cid], changes)
            _remap_request(req_events, [c.event_map for c in clones])
            _remap_request(req_facts, [c.fact_map for c in clones])
            prune_fn(c1)
        members = resolve_clusters(world, req_events, req_facts, strict=False)
        if not members:
            return c1.id


def _remap_request(req: set, maps: list[dict]) -> None:
    replaced: dict = {}
    for m in maps:
        for orig in req:
            if orig in m:
                replaced.setdefault(orig, []).append(m[orig])
    for orig, copies in replaced.items():
        req.discard(orig)
        req.update(copies)


def _pairwise_join(world, c1: Cluster, c2: Cluster,
                   changes) -> list[CloneResult]:
    old_leaf_ids = c1.leaf_ids_sorted()
    clones: list[CloneResult] = []

    for lid in old_leaf_ids:
        leaf = c1.leaves[lid]
        clone = clone_subtree(c1, c2, world.alloc)
        clones.append(clone)
        # graft the clone under this leaf's bottom group
        root = c1.groups[clone.root]
        root.parent = leaf.event_group
        c1.groups[leaf.event_group].children.append(clone.root)
        for cleaf in clone.leaves:
            cleaf.probability *= leaf.probability
            for fid in sorted(leaf.facts):
                c1.add_fact_ref(cleaf, fid)

    for lid in old_leaf_ids:
        c1.detach_leaf(lid)

    # notifications and world indices: originals out, copies in
    for eid, ev in c2.events.items():
        changes.event_removed(ev, c2.id)
        del world.event_index[eid]
    for fid, fact in c2.facts.items():
        changes.fact_removed(fact, c2.id)
        del world.fact_index[fid]
    for clone in clones:
        for eid in clone.event_map.values():
            changes.event_added(c1.events[eid], c1.id)
            world.event_index[eid] = c1.id
        for fid in clone.fact_map.values():
            changes.fact_added(c1.facts[fid], c1.id)
            world.fact_index[fid] = c1.id

    world.drop_cluster_record(c2.id)
    unify_constraints(world, c1, clones)
    return clones


def unify_constraints(world, c1: Cluster, clones: list[CloneResult]) -> None:
    """Merge the parallel constraint lists of the clones into ``c1``.

    The i-th constraint of every clone descends from the same source
    constraint, so their union becomes one new constraint whose size is
    the source size times the number of clones.
    """
    if not clones:
        return
    counts = {len(c.constraints) for c in clones}
    if len(counts) != 1:
        raise MismatchedClonesError(
            f"clones disagree on constraint count: {sorted(counts)}"
        )
    for i in range(len(clones[0].constraints)):
        kind, serial, _ = clones[0].constraints[i]
        merged: set[EventGroupId] = set()
        for clone in clones:
            ckind, cserial, groups = clone.constraints[i]
            if (ckind, cserial) != (kind, serial):
                raise MismatchedClonesError(
                    f"clone constraint {i} identity mismatch"
                )
            merged |= groups
        con = Constraint(
            id=ConstraintId(world.alloc.next_id()),
            event_groups=merged,
            kind=kind,
            serial=serial,
        )
        c1.constraints[con.id] = con


def remove_leaf(world, cluster: Cluster, leaf_id: LeafId, changes,
                normalize: bool = True) -> None:
    """Remove one leaf and the branch structure it alone supported."""
    if leaf_id not in cluster.leaves:
        raise UnknownIdError(f"leaf {leaf_id} not in cluster {cluster.id}")
    if len(cluster.leaves) == 1:
        raise LastLeafError(
            f"cluster {cluster.id} would lose its only leaf; delete the "
            "cluster instead"
        )
    leaf = cluster.detach_leaf(leaf_id)
    for fid in sorted(leaf.facts):
        fact = cluster.facts[fid]
        if fact.leaf_refs == 0:
            del cluster.facts[fid]
            world.fact_index.pop(fid, None)
            changes.fact_removed(fact, cluster.id)

    occupied = {l.event_group for l in cluster.leaves.values()}
    group = cluster.groups[leaf.event_group]
    while not group.children and group.id not in occupied:
        for eid in group.events:
            ev = cluster.events.pop(eid)
            world.event_index.pop(eid, None)
            changes.event_removed(ev, cluster.id)
        for con in cluster.constraints.values():
            con.event_groups.discard(group.id)
        del cluster.groups[group.id]
        if group.parent is None:
            break
        parent = cluster.groups[group.parent]
        parent.children.remove(group.id)
        group = parent

    empty = [cid for cid, c in cluster.constraints.items() if not c.event_groups]
    for cid in empty:
        del cluster.constraints[cid]
    if normalize:
        cluster.normalize()


def constraint_components(cluster: Cluster) -> list[list[ConstraintId]]:
    """Partition constraints by transitive event-group overlap.

    Components are sorted by their smallest constraint id, members sorted
    within each component.
    """
    uf = UnionFind(cluster.constraints.keys())
    by_group: dict[EventGroupId, ConstraintId] = {}
    for cid in sorted(cluster.constraints):
        for gid in cluster.constraints[cid].event_groups:
            if gid in by_group:
                uf.union(by_group[gid], cid)
            else:
                by_group[gid] = cid
    comps = sorted(uf.groups().values(), key=lambda ms: ms[0])
    return comps


def split(world, cluster: Cluster, changes) -> list[ClusterId]:
    """Break a cluster into one cluster per independent constraint set.

    Each component cluster is a fresh-id copy keeping only the component's
    constraints, the events of their groups, and the facts associated with
    those groups. Group nodes emptied of events survive only while they
    sit on a path to a retained group. Leaves whose retained content became
    indistinguishable are merged by summing their probabilities, which is
    what lets independently joined sub-problems separate cleanly again.
    """
    comps = constraint_components(cluster)
    if len(comps) <= 1:
        return [cluster.id]

    new_ids: list[ClusterId] = []
    for comp in comps:
        new_ids.append(_build_component(world, cluster, comp, changes).id)

    for eid, ev in cluster.events.items():
        changes.event_removed(ev, cluster.id)
        del world.event_index[eid]
    for fid, fact in cluster.facts.items():
        changes.fact_removed(fact, cluster.id)
        del world.fact_index[fid]
    world.drop_cluster_record(cluster.id)
    return new_ids


def _build_component(world, cluster: Cluster, comp: list[ConstraintId],
                     changes) -> Cluster:
    retained: set[EventGroupId] = set()
    for cid in comp:
        retained |= cluster.constraints[cid].event_groups
    retained.discard(cluster.root)

    group_key = {gid: _group_content_key(world, cluster, gid) for gid in retained}

    # pool the original leaves by their projected content: branches that
    # become indistinguishable once the other components' information is
    # dropped collapse to one leaf carrying the summed probability
    classes: dict[tuple, list[LeafId]] = {}
    class_probs: dict[tuple, float] = {}
    for lid in cluster.leaf_ids_sorted():
        leaf = cluster.leaves[lid]
        path = list(reversed(cluster.path_to_root(leaf.event_group)))
        ret_path = tuple(group_key[g] for g in path if g in retained)
        fact_keys = tuple(sorted(
            (world.payload_key(cluster.facts[f].payload)
             for f in leaf.facts
             if cluster.facts[f].depends_on in retained),
            key=repr,
        ))
        sig = (ret_path, fact_keys)
        classes.setdefault(sig, []).append(lid)
        class_probs[sig] = class_probs.get(sig, 0.0) + leaf.probability

    reps = {sig: members[0] for sig, members in classes.items()}

    # nodes kept in the copy: on a surviving branch, retained or an
    # ancestor of a surviving retained group
    surviving_retained: set[EventGroupId] = set()
    rep_paths: dict[LeafId, list[EventGroupId]] = {}
    for rep in reps.values():
        path = list(reversed(cluster.path_to_root(cluster.leaves[rep].event_group)))
        rep_paths[rep] = path
        surviving_retained |= {g for g in path if g in retained}
    kept: set[EventGroupId] = set()
    for path in rep_paths.values():
        last = -1
        for i, gid in enumerate(path):
            if gid in surviving_retained:
                last = i
        kept |= set(path[: last + 1]) - {cluster.root}

    nc = world.new_cluster(with_leaf=False)
    image: dict[EventGroupId, EventGroupId] = {cluster.root: nc.root}
    for rep in sorted(rep_paths):
        parent_img = nc.root
        for gid in rep_paths[rep]:
            if gid not in kept:
                continue
            if gid in image:
                parent_img = image[gid]
                continue
            ng = EventGroup(
                id=EventGroupId(world.alloc.next_id()),
                parent=parent_img,
                serial=cluster.groups[gid].serial,
            )
            nc.groups[ng.id] = ng
            nc.groups[parent_img].children.append(ng.id)
            image[gid] = ng.id
            parent_img = ng.id
            if gid in surviving_retained:
                for eid in cluster.groups[gid].events:
                    ev = cluster.events[eid]
                    ne = Event(
                        id=EventId(world.alloc.next_id()),
                        payload=ev.payload,
                        timestamp=ev.timestamp,
                        serial=ev.serial,
                        group=ng.id,
                    )
                    ng.events.append(ne.id)
                    nc.events[ne.id] = ne
                    world.event_index[ne.id] = nc.id
                    changes.event_added(ne, nc.id)

    fact_map: dict[FactId, FactId] = {}
    for rep in sorted(rep_paths):
        rep_leaf = cluster.leaves[rep]
        bottom = nc.root
        for gid in rep_paths[rep]:
            if gid in image:
                bottom = image[gid]
        nl = Leaf(
            id=LeafId(world.alloc.next_id()),
            event_group=bottom,
            probability=rep_leaf.probability,
        )
        nc.attach_leaf(nl)
        for fid in sorted(rep_leaf.facts):
            fact = cluster.facts[fid]
            if fact.depends_on not in surviving_retained:
                continue
            if fid not in fact_map:
                nf = Fact(
                    id=FactId(world.alloc.next_id()),
                    payload=fact.payload,
                    depends_on=image[fact.depends_on],
                )
                nc.facts[nf.id] = nf
                fact_map[fid] = nf.id
                world.fact_index[nf.id] = nc.id
                changes.fact_added(nf, nc.id)
            nc.add_fact_ref(nl, fact_map[fid])

    for cid in comp:
        con = cluster.constraints[cid]
        mapped = {image[g] for g in con.event_groups if g in image}
        if mapped:
            ncon = Constraint(
                id=ConstraintId(world.alloc.next_id()),
                event_groups=mapped,
                kind=con.kind,
                serial=con.serial,
            )
            nc.constraints[ncon.id] = ncon

    nc.normalize()
    return nc
