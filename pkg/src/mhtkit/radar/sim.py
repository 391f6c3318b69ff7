"""Ground-truth motion and measurement simulation.

Scripted targets follow their waypoints exactly; unscripted targets do a
smooth random walk in heading and speed, reflecting off the coverage
boundary. Measurements are position + Gaussian noise for each detected
target plus Poisson clutter uniform over the disc, in randomized order.
All randomness comes from one seeded generator, so a (config, seed) pair
fully determines the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .scenario import ScenarioConfig


@dataclass
class Scan:
    tick: int
    measurements: list[tuple[float, float]]
    origins: list[Optional[int]]  # truth target index, None for clutter


@dataclass
class TruthState:
    x: float
    y: float
    vx: float
    vy: float


class GroundTruth:
    """True target states, advanced one scan at a time."""

    def __init__(self, config: ScenarioConfig, rng: np.random.Generator) -> None:
        self.config = config
        self.states: list[TruthState] = []
        self._heading: list[float] = []
        self._speed: list[float] = []
        for i in range(config.target_count):
            if i in config.waypoints:
                x, y, vx, vy = _scripted_state(config.waypoints[i], 0,
                                               config.scan_period)
                self.states.append(TruthState(x, y, vx, vy))
                self._heading.append(0.0)
                self._speed.append(0.0)
            else:
                r = config.radius * 0.7 * math.sqrt(rng.random())
                phi = 2.0 * math.pi * rng.random()
                heading = 2.0 * math.pi * rng.random()
                speed = rng.uniform(config.speed_min, config.speed_max)
                self.states.append(TruthState(
                    r * math.cos(phi), r * math.sin(phi),
                    speed * math.cos(heading), speed * math.sin(heading),
                ))
                self._heading.append(heading)
                self._speed.append(speed)

    def advance(self, tick: int, rng: np.random.Generator) -> None:
        """Move every target to its state at ``tick`` (tick >= 1)."""
        cfg = self.config
        for i, st in enumerate(self.states):
            if i in cfg.waypoints:
                st.x, st.y, st.vx, st.vy = _scripted_state(
                    cfg.waypoints[i], tick, cfg.scan_period
                )
                continue
            self._heading[i] += rng.normal(0.0, cfg.heading_noise_std)
            self._speed[i] = max(
                0.0, self._speed[i] + rng.normal(0.0, cfg.speed_noise_std)
            )
            st.vx = self._speed[i] * math.cos(self._heading[i])
            st.vy = self._speed[i] * math.sin(self._heading[i])
            st.x += st.vx * cfg.scan_period
            st.y += st.vy * cfg.scan_period
            rr = math.hypot(st.x, st.y)
            if rr > cfg.radius:
                # reflect the velocity off the boundary and clamp inside
                nx, ny = st.x / rr, st.y / rr
                dot = st.vx * nx + st.vy * ny
                st.vx -= 2.0 * dot * nx
                st.vy -= 2.0 * dot * ny
                st.x, st.y = nx * cfg.radius, ny * cfg.radius
                self._heading[i] = math.atan2(st.vy, st.vx)


def _scripted_state(points, tick: int, scan_period: float):
    """Piecewise-linear position and segment velocity at ``tick``."""
    if tick <= points[0][0]:
        seg = (points[0], points[1])
    elif tick >= points[-1][0]:
        seg = (points[-2], points[-1])
    else:
        seg = None
        for a, b in zip(points, points[1:]):
            if a[0] <= tick <= b[0]:
                seg = (a, b)
                break
        assert seg is not None
    (t0, x0, y0), (t1, x1, y1) = seg
    span = max(t1 - t0, 1)
    u = (tick - t0) / span
    x = x0 + u * (x1 - x0)
    y = y0 + u * (y1 - y0)
    vx = (x1 - x0) / (span * scan_period)
    vy = (y1 - y0) / (span * scan_period)
    return x, y, vx, vy


def simulate(config: ScenarioConfig) -> tuple[list[Scan], list[list[TruthState]]]:
    """Run the full scenario; returns scans and per-tick truth snapshots."""
    rng = np.random.default_rng(config.seed)
    truth = GroundTruth(config, rng)
    scans: list[Scan] = []
    history: list[list[TruthState]] = []
    for tick in range(config.scan_count):
        if tick > 0:
            truth.advance(tick, rng)
        history.append([TruthState(s.x, s.y, s.vx, s.vy) for s in truth.states])

        zs: list[tuple[float, float]] = []
        origins: list[Optional[int]] = []
        for i, st in enumerate(truth.states):
            if math.hypot(st.x, st.y) > config.radius:
                continue
            if rng.random() >= config.detection_prob:
                continue
            zs.append((
                st.x + rng.normal(0.0, config.meas_noise_std),
                st.y + rng.normal(0.0, config.meas_noise_std),
            ))
            origins.append(i)
        for _ in range(rng.poisson(config.clutter_rate)):
            r = config.radius * math.sqrt(rng.random())
            phi = 2.0 * math.pi * rng.random()
            zs.append((r * math.cos(phi), r * math.sin(phi)))
            origins.append(None)

        order = rng.permutation(len(zs))
        scans.append(Scan(
            tick=tick,
            measurements=[zs[k] for k in order],
            origins=[origins[k] for k in order],
        ))
    return scans, history
