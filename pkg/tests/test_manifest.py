import hashlib

import pytest

from autoeq.manifest import (
    RunManifest,
    file_sha256,
    load_manifest,
    manifest_path_for,
    verify_outputs,
)


def test_file_sha256_matches_hashlib(tmp_path):
    blob = tmp_path / "x.bin"
    blob.write_bytes(b"abc" * 1000)
    assert file_sha256(blob) == hashlib.sha256(b"abc" * 1000).hexdigest()


def test_write_and_load_round_trip(tmp_path):
    artifact = tmp_path / "thing.bin"
    artifact.write_bytes(b"payload")
    m = RunManifest("demo", config={"n": 3}, seeds={"seed": 7})
    m.record_input("src", artifact)
    m.record_output("artifact", artifact)
    sidecar = m.write(artifact)
    assert sidecar == manifest_path_for(artifact)
    assert sidecar.name == "thing.bin.manifest.json"

    loaded = load_manifest(sidecar)
    assert loaded["command"] == "demo"
    assert loaded["seeds"] == {"seed": 7}
    assert loaded["outputs"]["artifact"]["sha256"] == file_sha256(artifact)
    assert loaded["started_at"] and loaded["finished_at"]


def test_verify_outputs_flags_tampering(tmp_path):
    artifact = tmp_path / "a.txt"
    artifact.write_text("original")
    m = RunManifest("demo")
    m.record_output("a", artifact)
    sidecar = m.write(artifact)

    loaded = load_manifest(sidecar)
    assert verify_outputs(loaded) == []
    artifact.write_text("changed")
    assert verify_outputs(loaded) == ["a"]
    artifact.unlink()
    assert verify_outputs(loaded) == ["a"]


def test_load_rejects_incomplete(tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text('{"command": "x"}')
    with pytest.raises(ValueError, match="missing fields"):
        load_manifest(bad)
