"""Run metadata: reproducible timestamps, config hashes, sidecar files.

Timestamps honor ``SOURCE_DATE_EPOCH`` (the reproducible-build
convention) so identical runs can produce byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

__version__ = "0.1.0"

SOURCE_DATE_ENV = "SOURCE_DATE_EPOCH"


def timestamp() -> str:
    epoch = os.environ.get(SOURCE_DATE_ENV)
    if epoch is not None:
        dt = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        dt = datetime.now(tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_sidecar(out_path: str | Path, command: str, config: dict, seeds: dict) -> Path:
    """Write ``<out>.run.json`` next to a command's primary output."""
    sidecar = Path(str(out_path) + ".run.json")
    payload = {
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seeds": seeds,
        "timestamp": timestamp(),
        "versions": {"rewritedetect": __version__, "python": sys.version.split()[0]},
    }
    sidecar.write_text(json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n")
    return sidecar
