"""Study results and their deterministic payload."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def plain(obj):
    """Convert numpy scalars and arrays (recursively) into JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def median_mad(values) -> dict:
    x = np.asarray(values, dtype=float)
    med = float(np.median(x))
    return {"median": med, "mad": float(np.median(np.abs(x - med))), "count": int(x.size)}


@dataclass
class StudyResult:
    kind: str
    config: dict
    records: list
    summary: dict
    warnings: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.config = plain(self.config)
        self.records = plain(self.records)
        self.summary = plain(self.summary)
        self.warnings = [str(w) for w in self.warnings]
        self.metadata = plain(self.metadata)

    def payload(self) -> dict:
        """Everything that must be reproducible: no wall time, no thread count."""
        meta = {k: v for k, v in self.metadata.items() if k not in ("wall_time", "threads")}
        return {
            "kind": self.kind,
            "config": self.config,
            "records": self.records,
            "summary": self.summary,
            "warnings": self.warnings,
            "metadata": meta,
        }

    def payload_bytes(self) -> bytes:
        return json.dumps(self.payload(), sort_keys=True, separators=(",", ":")).encode("utf-8")

    def to_dict(self) -> dict:
        d = self.payload()
        d["metadata"] = dict(self.metadata)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StudyResult":
        return cls(d["kind"], d["config"], d["records"], d["summary"], d.get("warnings", []), d.get("metadata", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "StudyResult":
        return cls.from_dict(json.loads(text))
