"""Serialization of run artifacts to CSV and JSON files."""

import json
import os

from .errors import DomainError


def to_json_text(obj):
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""
    if hasattr(obj, "to_json"):
        obj = obj.to_json()
    return json.dumps(obj, sort_keys=True, indent=1, separators=(",", ": ")) + "\n"


def canonical(text):
    """Re-emit JSON text canonically; emitting twice gives the same bytes."""
    return to_json_text(json.loads(text))


def emit_report(artifact, fmt, path):
    """Write an artifact as ``csv`` (via its to_csv) or ``json``; returns the path."""
    if fmt == "json":
        text = to_json_text(artifact)
    elif fmt == "csv":
        if isinstance(artifact, str):
            text = artifact
        elif hasattr(artifact, "to_csv"):
            text = artifact.to_csv()
        else:
            raise DomainError(f"{type(artifact).__name__} has no CSV form")
    else:
        raise DomainError(f"unknown format {fmt!r}")
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path
