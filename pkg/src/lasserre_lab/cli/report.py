"""Run reports and CSV records.

Machine-readable output is deterministic: floats are written with 17
significant digits, keys are sorted, and nothing depends on the clock.

CSV schemas (one header line, LF endings):

    probe      w1..wn, set_min, relax_min, gap, moment_status, membership
    pain       u1..un, x1..xn, max_eig
    qc         x1..xn, max_eig
    member     d, status
    arch       N, d, status
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

DEFINITIVE = "definitive"
INCONCLUSIVE = "inconclusive"
ERROR = "error"
EXIT_CODES = {DEFINITIVE: 0, INCONCLUSIVE: 2, ERROR: 1}


def fmt_float(v) -> str:
    return format(float(v), ".17g")


def plain(value):
    """JSON-ready copy: Fractions become "p/q" strings, arrays become lists."""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return float(fmt_float(v))
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if dataclasses.is_dataclass(value):
        return plain(dataclasses.asdict(value))
    return str(value)


def canonical_json(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(data) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunReport:
    subcommand: str
    status: str
    input_digest: str | None = None
    config: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)
    message: str = ""

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    @property
    def config_digest(self) -> str:
        return digest(canonical_json(self.config))

    def to_json(self) -> str:
        return canonical_json({
            "subcommand": self.subcommand,
            "status": self.status,
            "input_digest": self.input_digest,
            "config_digest": self.config_digest,
            "config": self.config,
            "metrics": self.metrics,
            "artifacts": self.artifacts,
            "message": self.message,
        })

    def append_to(self, path) -> None:
        with open(path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json() + "\n")

    def text(self) -> str:
        lines = [f"{self.subcommand}: {self.status}" + (f" ({self.message})" if self.message else "")]
        lines += [f"  {s}" for s in self.summary]
        return "\n".join(lines)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows))
