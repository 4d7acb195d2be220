"""Run manifests: a JSON sidecar written next to every artifact a command
produces, recording the exact recipe (command, config, seeds) and sha256
fingerprints of inputs and outputs, so any run can be audited or repeated.
"""

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

MANIFEST_SUFFIX = ".manifest.json"


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""

    def __post_init__(self):
        if not self.started_at:
            self.started_at = _now()

    def record_input(self, name: str, path) -> None:
        self.inputs[name] = {"path": str(path), "sha256": file_sha256(path)}

    def record_output(self, name: str, path) -> None:
        self.outputs[name] = {"path": str(path), "sha256": file_sha256(path)}

    def write(self, primary_output) -> Path:
        """Finalize and save as `<primary_output>.manifest.json`."""
        self.finished_at = _now()
        path = manifest_path_for(primary_output)
        payload = {
            "command": self.command,
            "config": self.config,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def manifest_path_for(output) -> Path:
    output = Path(output)
    return output.with_name(output.name + MANIFEST_SUFFIX)


def load_manifest(path) -> dict:
    data = json.loads(Path(path).read_text())
    missing = {"command", "config", "seeds", "inputs", "outputs"} - set(data)
    if missing:
        raise ValueError(f"manifest missing fields: {sorted(missing)}")
    return data


def verify_outputs(manifest: dict) -> list[str]:
    """Names of recorded outputs whose on-disk bytes no longer match."""
    stale = []
    for name, entry in manifest["outputs"].items():
        path = Path(entry["path"])
        if not path.exists() or file_sha256(path) != entry["sha256"]:
            stale.append(name)
    return stale


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")
