"""Key-value sidecar manifests used for stimulus, sequence, and run provenance."""

from __future__ import annotations

from pathlib import Path


def write_manifest(path, entries: dict) -> None:
    lines = []
    for key, value in entries.items():
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed manifest line: {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def parse_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]
