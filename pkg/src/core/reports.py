"""
Analysis reports

Every CLI command produces one AnalysisReport. Serialization is
deterministic: sorted keys, fixed indentation, numpy scalars and arrays
converted to plain Python, non-finite floats written as strings.
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from ..domains.domain import DomainSpec
from ..domains.shapes import Shape
from ..utils.constants import REPORT_SCHEMA, __version__
from .convexity import ConvexityVerdict
from .order import OrderVerdict


def plain(value: Any) -> Any:
    """Recursively convert a report value to JSON-safe Python objects."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, np.generic):
        return plain(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, Enum):
        return value.value
    return value


def point_record(verdict: ConvexityVerdict, order: Optional[OrderVerdict] = None,
                 normal: Optional[np.ndarray] = None) -> Dict[str, Any]:
    record = {
        "location": verdict.location,
        "class": verdict.convexity_class.value,
        "min_tangential_eigenvalue": float(verdict.min_tangential_eigenvalue),
        "order": None if order is None else order.label,
    }
    if normal is not None:
        record["normal"] = normal
    if verdict.witness is not None:
        record["witness"] = verdict.witness
    return record


@dataclass
class AnalysisReport:
    """One command's results: domain identity, per-point and global records, parameters."""

    command: str
    domain: Dict[str, Any]
    parameters: Dict[str, Any] = field(default_factory=dict)
    points: List[Dict[str, Any]] = field(default_factory=list)
    results: Dict[str, Any] = field(default_factory=dict)
    error: Optional[Dict[str, Any]] = None

    @classmethod
    def for_shape(cls, command: str, shape: Shape, **parameters: Any) -> "AnalysisReport":
        identity: Dict[str, Any] = {"name": shape.name, "dim": shape.dim, "type": type(shape).__name__}
        if isinstance(shape, DomainSpec):
            identity["spec_hash"] = shape.spec_hash
        return cls(command, identity, dict(parameters))

    def add_point(self, record: Dict[str, Any]) -> None:
        self.points.append(record)

    def set(self, key: str, value: Any) -> None:
        self.results[key] = value

    def fail(self, error: Dict[str, Any]) -> None:
        self.error = error

    @property
    def passed(self) -> bool:
        return self.error is None

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "schema": REPORT_SCHEMA,
            "version": __version__,
            "command": self.command,
            "domain": self.domain,
            "parameters": self.parameters,
            "results": self.results,
        }
        if self.points:
            out["points"] = self.points
        if self.error is not None:
            out["error"] = self.error
        return plain(out)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
