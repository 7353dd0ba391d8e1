"""Checkpoint files.

Layout: a UTF-8 text header starting with the magic line ``SAMCKPT v1``,
followed by ``hyper <key> <value>`` lines, one ``param <name> <shape> <offset>``
line per parameter (offset in bytes into the data section), a terminating
``data <total_bytes>`` line, then raw little-endian IEEE-754 float32 values,
row-major, in manifest order. Files are written to a temp path and renamed,
so a crash mid-write never leaves a corrupt checkpoint behind.
"""

from __future__ import annotations

import hashlib
import os
import tempfile

import numpy as np

MAGIC = "SAMCKPT v1"
_F32 = np.dtype("<f4")


class CheckpointError(RuntimeError):
    pass


def _shape_str(shape) -> str:
    return "x".join(str(int(e)) for e in shape) if shape else "1"


def _parse_shape(s: str):
    return tuple(int(e) for e in s.split("x"))


def save_checkpoint(path, arrays: dict[str, np.ndarray], hypers: dict[str, str]) -> None:
    """Write parameters and hyperparameter key-values atomically."""
    lines = [MAGIC]
    for key in hypers:
        value = str(hypers[key])
        if "\n" in key or "\n" in value or " " in key:
            raise ValueError(f"invalid hyper entry {key!r}")
        lines.append(f"hyper {key} {value}")
    offset = 0
    blobs = []
    for name, a in arrays.items():
        if " " in name:
            raise ValueError(f"invalid parameter name {name!r}")
        blob = np.ascontiguousarray(a, dtype=_F32).tobytes()
        lines.append(f"param {name} {_shape_str(a.shape)} {offset}")
        offset += len(blob)
        blobs.append(blob)
    lines.append(f"data {offset}")
    header = ("\n".join(lines) + "\n").encode("utf-8")

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            for blob in blobs:
                fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path):
    """Read a checkpoint; returns (arrays, hypers, manifest_text)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n")
    if nl < 0 or raw[:nl].decode("utf-8", "replace") != MAGIC:
        raise CheckpointError(f"{path}: not a {MAGIC} file")
    hypers: dict[str, str] = {}
    entries = []
    pos = nl + 1
    data_start = None
    data_bytes = None
    while True:
        nl = raw.find(b"\n", pos)
        if nl < 0:
            raise CheckpointError(f"{path}: truncated header")
        line = raw[pos:nl].decode("utf-8")
        pos = nl + 1
        if line.startswith("hyper "):
            _, key, value = line.split(" ", 2)
            hypers[key] = value
        elif line.startswith("param "):
            _, name, shape_s, off_s = line.split(" ")
            entries.append((name, _parse_shape(shape_s), int(off_s)))
        elif line.startswith("data "):
            data_bytes = int(line.split(" ")[1])
            data_start = pos
            break
        else:
            raise CheckpointError(f"{path}: bad manifest line {line!r}")
    if len(raw) - data_start != data_bytes:
        raise CheckpointError(
            f"{path}: data section is {len(raw) - data_start} bytes, "
            f"manifest says {data_bytes}"
        )
    arrays: dict[str, np.ndarray] = {}
    for name, shape, off in entries:
        count = int(np.prod(shape)) if shape else 1
        start = data_start + off
        a = np.frombuffer(raw, dtype=_F32, count=count, offset=start)
        arrays[name] = a.reshape(shape).copy()
    manifest_text = raw[:data_start].decode("utf-8")
    return arrays, hypers, manifest_text


def manifest_hash(path) -> str:
    """SHA-256 over the architecture manifest: model hypers and parameter
    names/shapes. Run-specific keys (cfg.* lines) are excluded so the hash
    identifies the model, not the output directory it was trained in."""
    _, _, manifest = load_checkpoint(path)
    lines = [
        line for line in manifest.splitlines()
        if not line.startswith("hyper cfg.")
    ]
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
