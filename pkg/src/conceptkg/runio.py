"""Atomic file writes, input checksums, and run manifests.

Every pipeline stage writes outputs to a temp name in the destination
directory and renames on success, so a crashed run never leaves a
partial file under the final name. Manifests capture the resolved
configuration and input checksums but no timestamps: two runs with the
same inputs and config produce byte-identical manifests and outputs.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from contextlib import contextmanager


@contextmanager
def atomic_writer(path, encoding: str = "utf-8"):
    """Yield a text handle writing to ``path`` atomically."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(prefix=os.path.basename(path) + ".", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding=encoding, newline="\n") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text: str, encoding: str = "utf-8") -> None:
    with atomic_writer(path, encoding=encoding) as fh:
        fh.write(text)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def write_manifest(path, tool: str, version: str, subcommand: str, config: dict,
                   inputs: list, outputs: list) -> None:
    """Write a run manifest; inputs are checksummed, outputs listed by name."""
    manifest = {
        "tool": tool,
        "version": version,
        "subcommand": subcommand,
        "config": config,
        "inputs": {os.fspath(p): sha256_file(p) for p in inputs},
        "outputs": [os.fspath(p) for p in outputs],
    }
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
