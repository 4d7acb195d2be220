"""Deterministic binary container for datasets, target banks and checkpoints.

Layout (all integers little-endian):

    bytes 0..7    magic "AEQC0001"
    bytes 8..15   u64 header length H
    bytes 16..16+H  UTF-8 JSON header: {"meta": {...}, "arrays": [
                      {"name": str, "dtype": "<f8", "shape": [...]}, ...]}
                    with sorted keys and no whitespace
    remainder     raw C-order array bytes, in the header's array order

Arrays are stored name-sorted and restricted to little-endian float64/int64,
so identical content always produces identical bytes (no timestamps, no
compression, no pickle).
"""

import json
from pathlib import Path

import numpy as np

MAGIC = b"AEQC0001"
_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


def save_blob(path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    entries = []
    chunks = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype.kind == "f":
            arr = arr.astype("<f8", copy=False)
        elif arr.dtype.kind in "iu":
            arr = arr.astype("<i8", copy=False)
        else:
            raise ValueError(f"unsupported dtype {arr.dtype} for array {name!r}")
        entries.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)})
        chunks.append(arr.tobytes())
    header = json.dumps({"meta": meta, "arrays": entries},
                        sort_keys=True, separators=(",", ":")).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for chunk in chunks:
            fh.write(chunk)


def load_blob(path) -> tuple[dict, dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ValueError(f"not a container file (bad magic): {path}")
    hlen = int.from_bytes(raw[8:16], "little")
    header = json.loads(raw[16 : 16 + hlen].decode())
    offset = 16 + hlen
    arrays = {}
    for entry in header["arrays"]:
        dtype = _DTYPES[entry["dtype"]]
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        nbytes = count * dtype.itemsize
        if offset + nbytes > len(raw):
            raise ValueError(f"truncated container: {path}")
        arr = np.frombuffer(raw[offset : offset + nbytes], dtype=dtype).reshape(entry["shape"])
        arrays[entry["name"]] = arr.copy()  # writable, detached from the buffer
        offset += nbytes
    if offset != len(raw):
        raise ValueError(f"trailing bytes in container: {path}")
    return header["meta"], arrays
