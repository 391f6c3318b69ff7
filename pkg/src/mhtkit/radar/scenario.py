"""Scenario configuration: built-in scenarios and a small file format.

Scenario files are line-oriented ``key = value`` pairs with ``#``
comments. Repeated ``waypoint = <target> <tick> <x> <y>`` lines script a
target's trajectory as piecewise-linear interpolation; unscripted targets
move randomly. Unknown keys and malformed values are reported by name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union


class ScenarioError(ValueError):
    """A scenario file or parameter set failed validation."""


@dataclass
class ScenarioConfig:
    name: str = "random"
    target_count: int = 5
    scan_count: int = 100
    seed: int = 1
    radius: float = 20000.0          # m, radar coverage disc
    scan_period: float = 5.0         # s between scans
    detection_prob: float = 0.95
    clutter_rate: float = 1.0        # mean false alarms per scan
    new_target_rate: float = 0.05    # prior rate for track initiation
    meas_noise_std: float = 50.0     # m, per axis
    accel_noise_std: float = 0.5     # m/s^2, process noise
    gate: float = 9.21               # squared-Mahalanobis gate threshold
    termination_timeout: int = 4     # scans unseen before termination branches
    termination_prob: float = 0.4
    speed_min: float = 30.0          # m/s, random target initial speed
    speed_max: float = 120.0
    heading_noise_std: float = 0.03  # rad per scan, random targets
    speed_noise_std: float = 0.3     # m/s per scan, random targets
    init_vel_std: float = 120.0      # m/s, tracker prior on unseen velocity
    prune_k: int = 25
    prune_ratio: float = 0.001
    prune_depth: int = 0             # 0 disables the depth limit
    events_enabled: bool = True
    # target index -> ((tick, x, y), ...) sorted by tick
    waypoints: dict[int, tuple[tuple[int, float, float], ...]] = field(
        default_factory=dict
    )

    def area(self) -> float:
        return math.pi * self.radius * self.radius

    def validate(self) -> None:
        checks = [
            ("target_count", self.target_count >= 0),
            ("scan_count", self.scan_count >= 1),
            ("radius", self.radius > 0),
            ("scan_period", self.scan_period > 0),
            ("detection_prob", 0.0 < self.detection_prob <= 1.0),
            ("clutter_rate", self.clutter_rate >= 0),
            ("new_target_rate", self.new_target_rate > 0),
            ("meas_noise_std", self.meas_noise_std > 0),
            ("accel_noise_std", self.accel_noise_std >= 0),
            ("gate", self.gate > 0),
            ("termination_timeout", self.termination_timeout >= 1),
            ("termination_prob", 0.0 < self.termination_prob < 1.0),
            ("speed_min", self.speed_min >= 0),
            ("speed_max", self.speed_max >= self.speed_min),
            ("init_vel_std", self.init_vel_std > 0),
            ("prune_k", self.prune_k >= 1),
            ("prune_ratio", 0.0 < self.prune_ratio <= 1.0),
            ("prune_depth", self.prune_depth >= 0),
        ]
        for name, ok in checks:
            if not ok:
                raise ScenarioError(
                    f"{name}: value {getattr(self, name)!r} is out of range"
                )
        for tid, points in self.waypoints.items():
            if not 0 <= tid < self.target_count:
                raise ScenarioError(
                    f"waypoint: target {tid} does not exist "
                    f"(target_count={self.target_count})"
                )
            if len(points) < 2:
                raise ScenarioError(
                    f"waypoint: target {tid} needs at least two waypoints"
                )
            ticks = [p[0] for p in points]
            if ticks != sorted(set(ticks)):
                raise ScenarioError(
                    f"waypoint: target {tid} has unordered or duplicate ticks"
                )


_BOOL_WORDS = {"on": True, "true": True, "1": True, "yes": True,
               "off": False, "false": False, "0": False, "no": False}


def parse_scenario(text: str, name: str = "custom") -> ScenarioConfig:
    cfg = ScenarioConfig(name=name)
    by_name = {f.name: f for f in fields(ScenarioConfig)}
    waypoints: dict[int, list[tuple[int, float, float]]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()

        if key == "waypoint":
            parts = value.split()
            if len(parts) != 4:
                raise ScenarioError(
                    f"line {lineno}: waypoint: expected '<target> <tick> <x> <y>'"
                )
            try:
                tid, tick = int(parts[0]), int(parts[1])
                x, y = float(parts[2]), float(parts[3])
            except ValueError:
                raise ScenarioError(
                    f"line {lineno}: waypoint: non-numeric component in {value!r}"
                ) from None
            waypoints.setdefault(tid, []).append((tick, x, y))
            continue
        if key == "name":
            cfg.name = value
            continue
        if key not in by_name or key == "waypoints":
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")

        ftype = by_name[key].type
        try:
            if ftype == "bool" or key == "events_enabled":
                parsed: Union[bool, int, float] = _parse_bool(value)
            elif ftype == "int":
                parsed = int(value)
            else:
                parsed = float(value)
        except ValueError:
            raise ScenarioError(
                f"line {lineno}: {key}: cannot parse {value!r}"
            ) from None
        setattr(cfg, key, parsed)

    cfg.waypoints = {
        tid: tuple(sorted(points)) for tid, points in sorted(waypoints.items())
    }
    cfg.validate()
    return cfg


def _parse_bool(value: str) -> bool:
    try:
        return _BOOL_WORDS[value.lower()]
    except KeyError:
        raise ValueError(value) from None


def _separated() -> ScenarioConfig:
    """Five targets on parallel lanes, far apart for the whole run."""
    lanes = [-8000.0, -4000.0, 0.0, 4000.0, 8000.0]
    cfg = ScenarioConfig(
        name="separated",
        target_count=5,
        scan_count=100,
        seed=7,
        radius=20000.0,
        waypoints={
            i: ((0, -15000.0, y), (99, 15000.0, y)) for i, y in enumerate(lanes)
        },
    )
    return cfg


def _crossing() -> ScenarioConfig:
    """Two targets whose straight paths cross at the origin mid-run."""
    cfg = ScenarioConfig(
        name="crossing",
        target_count=2,
        scan_count=100,
        seed=11,
        radius=12000.0,
        clutter_rate=0.5,
        # A symmetric crossing leaves a near-even swap ambiguity that ratio
        # pruning alone never settles; the depth bound forces a commit a few
        # scans after separation so the joint cluster can split again.
        prune_depth=8,
        waypoints={
            0: ((0, -6000.0, -6000.0), (99, 6000.0, 6000.0)),
            1: ((0, 6000.0, -6000.0), (99, -6000.0, 6000.0)),
        },
    )
    return cfg


BUILTIN_SCENARIOS = {
    "random": lambda: ScenarioConfig(name="random"),
    "separated": _separated,
    "crossing": _crossing,
}


def load_scenario(name_or_path: str) -> ScenarioConfig:
    """Resolve a built-in scenario name or parse a scenario file."""
    if name_or_path in BUILTIN_SCENARIOS:
        cfg = BUILTIN_SCENARIOS[name_or_path]()
        cfg.validate()
        return cfg
    path = Path(name_or_path)
    if path.is_file():
        return parse_scenario(path.read_text(), name=path.stem)
    raise ScenarioError(
        f"scenario: {name_or_path!r} is neither a built-in name "
        f"({', '.join(sorted(BUILTIN_SCENARIOS))}) nor a file"
    )


def scaled_for_targets(base: ScenarioConfig, n: int) -> ScenarioConfig:
    """Scale coverage with target count so spatial density stays constant.

    Radius grows with sqrt(n), clutter with area; targets are unscripted.
    """
    ref = max(base.target_count, 1)
    factor = math.sqrt(n / ref)
    cfg = replace(
        base,
        name=f"{base.name}-n{n}",
        target_count=n,
        radius=base.radius * factor,
        clutter_rate=base.clutter_rate * factor * factor,
        waypoints={},
    )
    cfg.validate()
    return cfg
