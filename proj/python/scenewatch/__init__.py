"""Semantic anomaly detection pipeline for driving scenes."""

import os
from pathlib import Path

_packaged = Path(__file__).resolve().parent / "data"
if "SCENEWATCH_DATA_DIR" not in os.environ and _packaged.is_dir():
    os.environ["SCENEWATCH_DATA_DIR"] = str(_packaged)

from ._scenewatch import (  # noqa: E402
    ScenewatchError,
    data_dir,
    describe_scene,
    emit_report,
    filter_detections,
    load_vocabulary,
    parse_verdict,
    render_overlay,
    render_prompt,
    replay,
    summarize,
    to_pixel_box,
    validate_fixtures,
)

__all__ = [
    "ScenewatchError",
    "data_dir",
    "describe_scene",
    "emit_report",
    "filter_detections",
    "load_vocabulary",
    "parse_verdict",
    "render_overlay",
    "render_prompt",
    "replay",
    "summarize",
    "to_pixel_box",
    "validate_fixtures",
]
