"""File formats, per-video orchestration, synthetic scenarios and ablations."""

from .ablate import ablate, strategy_grid
from .bundle import Bundle
from .run import VideoRun, run_video, run_videos
from .synth import ScenarioSpec, simulate, synth_generate

__all__ = [
    "Bundle",
    "ScenarioSpec",
    "VideoRun",
    "ablate",
    "run_video",
    "run_videos",
    "simulate",
    "strategy_grid",
    "synth_generate",
]
