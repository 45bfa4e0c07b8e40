"""Flat key=value run configuration: file parsing, snapshots, hashing.

Every command writes a snapshot capturing the full effective
configuration; rerunning from the same snapshot and inputs reproduces
the outputs byte for byte. Precedence is defaults < config file < CLI
flags.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, is_dataclass


def parse_config_file(path: str) -> dict[str, str]:
    """Read `key = value` lines; blank lines and # comments are ignored."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _stringify(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_stringify(v) for v in value)
    return str(value)


def snapshot_text(mapping: dict) -> str:
    """Canonical snapshot body: sorted `key = value` lines."""
    if is_dataclass(mapping):
        mapping = asdict(mapping)
    lines = [f"{key} = {_stringify(value)}" for key, value in sorted(mapping.items())]
    return "\n".join(lines) + "\n"


def write_snapshot(path: str, mapping: dict) -> str:
    """Write the snapshot and return its content hash."""
    text = snapshot_text(mapping)
    with open(path, "w") as fh:
        fh.write(text)
    return config_hash(mapping)


def config_hash(mapping: dict) -> str:
    return hashlib.sha256(snapshot_text(mapping).encode()).hexdigest()
