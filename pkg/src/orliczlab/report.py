"""Structured experiment records with deterministic JSON and CSV serialisation."""

import csv
import io
import json
import math
from dataclasses import dataclass, field


def _plain(value):
    """Convert numpy scalars/arrays to JSON-friendly builtins."""
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _fmt(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


@dataclass
class ExperimentReport:
    """Inputs, per-row diagnostics, summary statistics and refinement history of a run."""

    name: str
    config: dict = field(default_factory=dict)
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    refinement: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add_row(self, **values):
        missing = set(self.columns) - set(values)
        if missing:
            raise KeyError(f"row is missing columns {sorted(missing)}")
        self.rows.append({c: _plain(values[c]) for c in self.columns})

    def column(self, name):
        return [row[name] for row in self.rows]

    def to_dict(self):
        return {
            "name": self.name,
            "config": _plain(self.config),
            "columns": list(self.columns),
            "rows": _plain(self.rows),
            "summary": _plain(self.summary),
            "refinement": _plain(self.refinement),
            "notes": list(self.notes),
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True, allow_nan=True) + "\n"

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(**data)

    def csv_body(self):
        """Header line plus one line per row, no metadata."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_csv(self, header_lines=()):
        """``#``-prefixed metadata (config echo, summary), then the CSV body."""
        meta = [f"# report: {self.name}"]
        meta.extend(f"# {line}" for line in header_lines)
        meta.extend(f"# config.{k} = {_fmt(_plain(v))}" for k, v in sorted(self.config.items()))
        meta.extend(f"# summary.{k} = {_fmt(_plain(v))}" for k, v in sorted(self.summary.items()))
        return "\n".join(meta) + "\n" + self.csv_body()
