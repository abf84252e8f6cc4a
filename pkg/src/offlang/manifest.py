"""Run manifests: the single source of truth for reproducing a run.

Every training or evaluation command writes exactly one ``manifest.json``
capturing the resolved command, the full config snapshot (defaults
included), the seed, sha256 digests of every input file, the code
version, timestamps, output paths, and a metric summary.  Re-running a
command with the config and seed from a manifest reproduces the outputs;
the timestamp block is the only part expected to differ.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone

from . import __version__
from .errors import IoFailure


def file_digest(path) -> str:
    sha = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b""):
                sha.update(chunk)
    except OSError as exc:
        raise IoFailure(f"cannot digest {path}: {exc}") from exc
    return sha.hexdigest()


class RunManifest:
    def __init__(self, command: str, config: dict, seed: int | None):
        self.data = {
            "command": command,
            "config": config,
            "seed": seed,
            "code_version": __version__,
            "inputs": {},
            "outputs": [],
            "metrics": {},
            "timestamps": {"started": datetime.now(timezone.utc).isoformat()},
            "status": "running",
        }

    def add_input(self, path) -> None:
        self.data["inputs"][str(path)] = file_digest(path)

    def add_output(self, path) -> None:
        self.data["outputs"].append(str(path))

    def set_metrics(self, **metrics) -> None:
        self.data["metrics"].update(metrics)

    def finish(self, status: str = "ok") -> None:
        self.data["status"] = status
        self.data["timestamps"]["finished"] = datetime.now(timezone.utc).isoformat()

    def write(self, path) -> None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(self.data, fh, indent=2, sort_keys=True, ensure_ascii=False)
                fh.write("\n")
        except OSError as exc:
            raise IoFailure(f"cannot write manifest {path}: {exc}") from exc


def replay_core(manifest_path) -> dict:
    """The deterministic part of a manifest: everything except timestamps.

    Two runs of the same command on the same inputs with the same seed
    must agree on this projection bit-for-bit.
    """
    with open(manifest_path, encoding="utf-8") as fh:
        data = json.load(fh)
    data.pop("timestamps", None)
    return data
