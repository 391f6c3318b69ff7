"""Radar multi-target tracking built on the hypothesis engine."""

from .payloads import (
    FalseAlarm,
    TargetId,
    TargetPositionFact,
    TargetMoved,
    TrackInitiated,
    TrackTerminated,
)
from .scenario import ScenarioConfig, ScenarioError, load_scenario, parse_scenario
from .sim import GroundTruth, Scan, simulate
from .tracker import RadarTracker, StepMetrics

__all__ = [
    "FalseAlarm",
    "GroundTruth",
    "RadarTracker",
    "Scan",
    "ScenarioConfig",
    "ScenarioError",
    "StepMetrics",
    "TargetId",
    "TargetMoved",
    "TargetPositionFact",
    "TrackInitiated",
    "TrackTerminated",
    "load_scenario",
    "parse_scenario",
    "simulate",
]
