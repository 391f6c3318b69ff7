"""Radar tracker: turns scans into engine generations.

Per scan: predict every live track estimate forward, gate measurements
against them, group measurements that compete for the same tracks into
batches, and run one generation per batch enumerating the clutter / new
target / known target interpretations of each measurement. Tracks unseen
past the timeout get a termination-versus-missed branching in a separate
sweep. The engine does the rest: joining, constraint bookkeeping,
pruning, promoting settled history, splitting independent targets apart.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from ..hypgen import GeneratedHypothesis, NewEvent, ProvidedEvent, ProvidedFact
from ..model import FactId
from ..oracle import FlatOracle
from ..pruning import BestK, DepthLimit, PruneStrategy, RatioThreshold
from ..unionfind import UnionFind
from ..world import FACT_ADDED, FACT_REMOVED, World, default_payload_key
from . import kinematics as kin
from .payloads import (
    FalseAlarm,
    TargetId,
    TargetMoved,
    TargetPositionFact,
    TrackInitiated,
    TrackTerminated,
    to_mat44,
    to_vec4,
)
from .scenario import ScenarioConfig
from .sim import Scan

Measurement = tuple[float, float]
BatchRow = tuple[int, Measurement]  # (measurement index within the scan, z)


def _fact_sort_key(view: ProvidedFact):
    p = view.payload
    return (p.target, p.last_seen, p.mean)


class StepCache:
    """Shared per-scan kinematics results.

    Every branch that updates the same prior state with the same
    measurement must carry the exact same posterior payload, so all
    predictions and updates for one scan are computed once and reused.
    """

    def __init__(self, config: ScenarioConfig, tick: int) -> None:
        self.config = config
        self.tick = tick
        self._pred: dict[TargetPositionFact, tuple[np.ndarray, np.ndarray]] = {}
        self._scored: dict[tuple[TargetPositionFact, int], Optional[tuple]] = {}
        self._new: dict[int, TargetPositionFact] = {}

    def predict(self, p: TargetPositionFact) -> tuple[np.ndarray, np.ndarray]:
        got = self._pred.get(p)
        if got is None:
            dt = (self.tick - p.last_seen) * self.config.scan_period
            got = kin.cv_predict(p.mean_array(), p.cov_array(), dt,
                                 self.config.accel_noise_std)
            self._pred[p] = got
        return got

    def score(self, p: TargetPositionFact, j: int,
              z: Measurement) -> Optional[tuple[float, float, TargetPositionFact]]:
        """(distance^2, likelihood, posterior payload), or None if ungated."""
        key = (p, j)
        if key not in self._scored:
            mean, cov = self.predict(p)
            d2, lik = kin.innovation_stats(mean, cov, z,
                                           self.config.meas_noise_std)
            if d2 <= self.config.gate:
                um, uc = kin.cv_update(mean, cov, z, self.config.meas_noise_std)
                upd = TargetPositionFact(
                    target=p.target, mean=to_vec4(um), cov=to_mat44(uc),
                    last_seen=self.tick,
                )
                self._scored[key] = (d2, lik, upd)
            else:
                self._scored[key] = None
        return self._scored[key]

    def new_target(self, j: int, z: Measurement) -> TargetPositionFact:
        got = self._new.get(j)
        if got is None:
            cfg = self.config
            r2 = cfg.meas_noise_std ** 2
            v2 = cfg.init_vel_std ** 2
            got = TargetPositionFact(
                target=(self.tick, j),
                mean=(z[0], z[1], 0.0, 0.0),
                cov=((r2, 0.0, 0.0, 0.0), (0.0, r2, 0.0, 0.0),
                     (0.0, 0.0, v2, 0.0), (0.0, 0.0, 0.0, v2)),
                last_seen=self.tick,
            )
            self._new[j] = got
        return got

    def associations(self) -> dict[TargetPositionFact, tuple[TargetId, int]]:
        """Posterior payload -> (track, measurement index) reverse map."""
        out: dict[TargetPositionFact, tuple[TargetId, int]] = {}
        for (p, j), scored in self._scored.items():
            if scored is not None:
                out[scored[2]] = (p.target, j)
        for j, p in self._new.items():
            out[p] = (p.target, j)
        return out


def batch_generator(config: ScenarioConfig, tick: int,
                    batch: Sequence[BatchRow], cache: StepCache,
                    events_enabled: bool = True):
    """Generator enumerating interpretations of one measurement batch.

    Each measurement is clutter, a new target, or an update of a provided
    track not claimed by an earlier measurement of the batch. Provided
    tracks left unclaimed are carried as missed, with a terminated branch
    added once they are past the timeout.
    """
    fa_w = config.clutter_rate / config.area()
    nt_w = config.new_target_rate / config.area()
    pd = config.detection_prob
    beta = config.termination_prob
    timeout = config.termination_timeout

    def gen(prov_events: tuple[ProvidedEvent, ...],
            prov_facts: tuple[ProvidedFact, ...]):
        del prov_events
        facts = sorted(prov_facts, key=_fact_sort_key)
        hyps: list[GeneratedHypothesis] = []

        def finish(events, fact_payloads, weight, used):
            rows = [(events, fact_payloads, weight)]
            for i, fv in enumerate(facts):
                if i in used:
                    continue
                p = fv.payload
                expanded = []
                if tick - p.last_seen >= timeout:
                    for evs, fps, w in rows:
                        tevs = evs
                        if events_enabled:
                            tevs = evs + (TrackTerminated(p.target, tick),)
                        expanded.append((tevs, fps, w * beta))
                        expanded.append(
                            (evs, fps + (p,), w * (1.0 - beta) * (1.0 - pd))
                        )
                else:
                    for evs, fps, w in rows:
                        expanded.append((evs, fps + (p,), w * (1.0 - pd)))
                rows = expanded
            for evs, fps, w in rows:
                hyps.append(GeneratedHypothesis(
                    events=tuple(NewEvent(e, tick) for e in evs),
                    facts=fps,
                    probability=w,
                ))

        def recurse(bi, used, events, fact_payloads, weight):
            if bi == len(batch):
                finish(events, fact_payloads, weight, used)
                return
            j, z = batch[bi]
            evs = events
            if events_enabled:
                evs = events + (FalseAlarm(z[0], z[1], tick),)
            recurse(bi + 1, used, evs, fact_payloads, weight * fa_w)

            fresh = cache.new_target(j, z)
            evs = events
            if events_enabled:
                evs = events + (TrackInitiated(fresh.target, z[0], z[1], tick),)
            recurse(bi + 1, used, evs, fact_payloads + (fresh,), weight * nt_w)

            for i, fv in enumerate(facts):
                if i in used:
                    continue
                p = fv.payload
                scored = cache.score(p, j, z)
                if scored is None:
                    continue
                _d2, lik, upd = scored
                w = pd * lik
                if tick - p.last_seen >= timeout:
                    w *= 1.0 - beta
                evs = events
                if events_enabled:
                    evs = events + (TargetMoved(
                        p.target, p.mean[0], p.mean[1],
                        upd.mean[0], upd.mean[1], tick,
                    ),)
                recurse(bi + 1, used | {i}, evs, fact_payloads + (upd,),
                        weight * w)

        recurse(0, frozenset(), (), (), 1.0)
        return hyps

    return gen


def sweep_generator(config: ScenarioConfig, tick: int,
                    events_enabled: bool = True):
    """Terminated-versus-missed branching for overdue unseen tracks."""
    pd = config.detection_prob
    beta = config.termination_prob

    def gen(prov_events: tuple[ProvidedEvent, ...],
            prov_facts: tuple[ProvidedFact, ...]):
        del prov_events
        facts = sorted(prov_facts, key=_fact_sort_key)
        rows = [((), (), 1.0)]
        for fv in facts:
            p = fv.payload
            expanded = []
            for evs, fps, w in rows:
                tevs = evs
                if events_enabled:
                    tevs = evs + (TrackTerminated(p.target, tick),)
                expanded.append((tevs, fps, w * beta))
                expanded.append((evs, fps + (p,), w * (1.0 - beta) * (1.0 - pd)))
            rows = expanded
        return [
            GeneratedHypothesis(
                events=tuple(NewEvent(e, tick) for e in evs),
                facts=fps,
                probability=w,
            )
            for evs, fps, w in rows
        ]

    return gen


@dataclass
class StepMetrics:
    tick: int
    wall_us: float
    cluster_count: int
    fact_cluster_count: int
    total_leaves: int
    max_cluster_leaves: int
    certain_events: int
    associations: dict[int, TargetId]
    best_tracks: list[TargetPositionFact]


class RadarTracker:
    """Drives one engine world from a stream of scans."""

    def __init__(self, config: ScenarioConfig,
                 strategies: Optional[Sequence[PruneStrategy]] = None,
                 relevance="facts", record_calls: bool = False) -> None:
        self.config = config
        if strategies is None:
            strategies = [BestK(config.prune_k),
                          RatioThreshold(config.prune_ratio)]
            if config.prune_depth > 0:
                strategies = [*strategies, DepthLimit(config.prune_depth)]
        if relevance == "facts":
            relevance = lambda evs, facts: bool(facts)  # noqa: E731
        self.world = World(strategies=strategies, relevance=relevance)
        self.facts: dict[FactId, TargetPositionFact] = {}
        self.history: list[ProvidedEvent] = []
        self.record_calls = record_calls
        self.call_log: list[tuple] = []
        self._step_added: Optional[set[FactId]] = None
        self.world.subscribe(self._on_batch)
        self.world.subscribe_certain(
            lambda ev, cid: self.history.append(ev)
        )

    def _on_batch(self, batch) -> None:
        for n in batch:
            if n.kind == FACT_ADDED:
                self.facts[n.entity_id] = n.payload
                if self._step_added is not None:
                    self._step_added.add(n.entity_id)
            elif n.kind == FACT_REMOVED:
                self.facts.pop(n.entity_id, None)

    def step(self, scan: Scan) -> StepMetrics:
        t0 = time.perf_counter()
        cfg = self.config
        tick = scan.tick
        zs = scan.measurements
        cache = StepCache(cfg, tick)
        history_before = len(self.history)
        self._step_added = set()

        # gate every distinct track state against every measurement
        payloads: list[TargetPositionFact] = []
        seen: set[TargetPositionFact] = set()
        for _fid, p in sorted(self.facts.items()):
            if p not in seen:
                seen.add(p)
                payloads.append(p)
        gated: dict[TargetPositionFact, list[int]] = {}
        if payloads and zs:
            preds = [cache.predict(p) for p in payloads]
            d2 = kin.gate_matrix(
                np.stack([m for m, _c in preds]),
                np.stack([c for _m, c in preds]),
                np.asarray(zs, dtype=np.float64),
                cfg.meas_noise_std,
            )
            for pi, p in enumerate(payloads):
                js = [j for j in range(len(zs)) if d2[pi, j] <= cfg.gate]
                if js:
                    gated[p] = js

        # batch measurements that compete for the same tracks
        uf = UnionFind(("z", j) for j in range(len(zs)))
        for p, js in gated.items():
            uf.add(("p", p))
            for j in js:
                uf.union(("p", p), ("z", j))
        comps: dict = {}
        for j in range(len(zs)):
            comps.setdefault(uf.find(("z", j)), ([], set()))[0].append(j)
        for p, _js in gated.items():
            root = uf.find(("p", p))
            if root in comps:
                comps[root][1].add(p)
        batches = sorted(
            (tuple(js), pset) for js, pset in comps.values()
        )

        for js, pset in batches:
            requested = [
                fid for fid, p in sorted(self.facts.items()) if p in pset
            ]
            rows: tuple[BatchRow, ...] = tuple((j, zs[j]) for j in js)
            gen = batch_generator(cfg, tick, rows, cache,
                                  events_enabled=cfg.events_enabled)
            if self.record_calls:
                self.call_log.append(("batch", tick, rows, frozenset(pset)))
            self.world.generate((), requested, gen)

        # termination sweep for overdue tracks no measurement touched
        overdue = [
            fid for fid, p in sorted(self.facts.items())
            if fid not in self._step_added
            and tick - p.last_seen >= cfg.termination_timeout
        ]
        by_cluster: dict[int, list[FactId]] = {}
        for fid in overdue:
            by_cluster.setdefault(self.world.fact_cluster(fid), []).append(fid)
        for cid in sorted(by_cluster):
            gen = sweep_generator(cfg, tick, events_enabled=cfg.events_enabled)
            if self.record_calls:
                self.call_log.append(("sweep", tick, (), frozenset(
                    self.facts[fid] for fid in by_cluster[cid]
                )))
            self.world.generate((), by_cluster[cid], gen)

        self._step_added = None
        metrics = self._collect_metrics(tick, cache, t0, history_before)
        return metrics

    def _collect_metrics(self, tick: int, cache: StepCache, t0: float,
                         history_before: int) -> StepMetrics:
        best_tracks: list[TargetPositionFact] = []
        fact_clusters = 0
        for cid in sorted(self.world.clusters):
            cluster = self.world.clusters[cid]
            if not cluster.facts:
                continue
            fact_clusters += 1
            best = max(
                cluster.leaves.values(),
                key=lambda l: (l.probability, -l.id),
            )
            for fid in sorted(best.facts):
                best_tracks.append(cluster.facts[fid].payload)
        best_tracks.sort(key=lambda p: p.target)

        reverse = cache.associations()
        associations: dict[int, TargetId] = {}
        for p in best_tracks:
            if p.last_seen == tick and p in reverse:
                target, j = reverse[p]
                associations[j] = target

        wall_us = (time.perf_counter() - t0) * 1e6
        return StepMetrics(
            tick=tick,
            wall_us=wall_us,
            cluster_count=len(self.world.clusters),
            fact_cluster_count=fact_clusters,
            total_leaves=self.world.total_leaves(),
            max_cluster_leaves=self.world.max_cluster_leaves(),
            certain_events=len(self.history) - history_before,
            associations=associations,
            best_tracks=best_tracks,
        )


class AssociationScorer:
    """Scores scans: did the best hypothesis associate every detected
    true target to the track it established for it earlier?"""

    def __init__(self) -> None:
        self.track_of: dict[int, TargetId] = {}

    def score(self, scan: Scan, metrics: StepMetrics) -> bool:
        ok = True
        for j, origin in enumerate(scan.origins):
            if origin is None:
                continue
            tid = metrics.associations.get(j)
            if tid is None:
                ok = False
                continue
            known = self.track_of.get(origin)
            if known is None:
                self.track_of[origin] = tid
            elif known != tid:
                ok = False
                if tid[0] == scan.tick:
                    # the tracker restarted this target on a new track;
                    # follow the new name from here on
                    self.track_of[origin] = tid
        return ok


def replay_calls(call_log: Iterable[tuple], config: ScenarioConfig,
                 size_limit: int = 100_000) -> FlatOracle:
    """Re-run a tracker's generation script on the flat reference engine."""
    oracle = FlatOracle(payload_key=default_payload_key, size_limit=size_limit)
    for kind, tick, rows, req_payloads in call_log:
        cache = StepCache(config, tick)
        if kind == "batch":
            gen = batch_generator(config, tick, rows, cache,
                                  events_enabled=config.events_enabled)
        else:
            gen = sweep_generator(config, tick,
                                  events_enabled=config.events_enabled)

        def select(h, req=req_payloads):
            return (), tuple(
                i for i, f in enumerate(h.facts) if f in req
            )

        oracle.generate(select, gen)
    return oracle
