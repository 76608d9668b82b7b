"""Anchor-free instance-level human parsing on synthetic scenes.

The compiled core (scene generation, edge labels, scoring helpers, dataset
loading, plots) lives in ``_aiparse``; training and inference go through the
``aiparse`` command line tool, wrapped by :func:`cli`.
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
from pathlib import Path
from typing import Any

from ._aiparse import (
    compute_map_miou,
    default_config,
    extract_edge_labels,
    fuse_instance_score,
    generate_scene,
    load_dataset,
    normalize_config,
    plot,
    refinement_loss,
)

__all__ = [
    "cli",
    "compute_map_miou",
    "config",
    "default_config",
    "extract_edge_labels",
    "fuse_instance_score",
    "generate_scene",
    "load_dataset",
    "normalize_config",
    "plot",
    "read_report",
    "refinement_loss",
]


def config(**overrides: Any) -> dict:
    """Default config with ``overrides`` applied and validated."""
    cfg = json.loads(default_config())
    cfg.update(overrides)
    return json.loads(normalize_config(json.dumps(cfg)))


def read_report(path: str | os.PathLike) -> dict:
    """Metric report written by ``aiparse evaluate``; null metrics become NaN."""
    def fix(value: Any) -> Any:
        if value is None:
            return float("nan")
        if isinstance(value, list):
            return [fix(v) for v in value]
        return value

    return {key: fix(value) for key, value in json.loads(Path(path).read_text()).items()}


def _cli_path() -> str:
    exe = os.environ.get("AIPARSE_CLI") or shutil.which("aiparse")
    if not exe:
        raise FileNotFoundError("aiparse executable not found; set AIPARSE_CLI")
    return exe


def cli(*args: str, check: bool = True) -> subprocess.CompletedProcess:
    """Runs the aiparse command line tool, e.g. ``cli("generate", "--out", d)``."""
    return subprocess.run([_cli_path(), *map(str, args)], check=check, capture_output=True, text=True)
