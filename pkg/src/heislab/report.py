"""Convergence reports: ladder tables, fitted rates, CSV/JSON output and comparison."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

SCHEMA_VERSION = 1


def fmt(x) -> str:
    """17 significant digits for floats; everything else through ``str``."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "" if x is None else str(x)


@dataclass(frozen=True)
class RateFit:
    rate: float
    stderr: float
    intercept: float
    points: int

    def as_dict(self) -> dict:
        return {"rate": self.rate, "stderr": self.stderr, "intercept": self.intercept, "points": self.points}


def fit_rate(params: Sequence[float], values: Sequence[float], min_points: int = 4) -> RateFit:
    """Least-squares slope of ``log(value)`` against ``log(param)``."""
    x = np.asarray(params, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size != y.size:
        raise ValueError("parameter and value sequences differ in length")
    if x.size < min_points:
        raise ValueError(f"rate fit needs at least {min_points} points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("rate fit needs positive parameters and values")
    res = stats.linregress(np.log(x), np.log(y))
    stderr = float(res.stderr) if np.isfinite(res.stderr) else 0.0
    return RateFit(float(res.slope), stderr, float(res.intercept), int(x.size))


def strictly_monotone(values: Sequence[float], direction: str = "decreasing") -> bool:
    d = np.diff(np.asarray(values, dtype=float))
    return bool(np.all(d < 0)) if direction == "decreasing" else bool(np.all(d > 0))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in sorted(x.items())}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return _Float17(float(x))
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


class _Float17(float):
    def __repr__(self) -> str:
        if math.isnan(self) or math.isinf(self):
            return json.dumps(float(self))
        return format(float(self), ".17g")


def _iterencode(o, level, indent):
    pad = " " * (indent * (level + 1)) if indent else ""
    end = " " * (indent * level) if indent else ""
    nl = "\n" if indent else ""
    if isinstance(o, dict):
        if not o:
            yield "{}"
            return
        yield "{" + nl
        items = list(o.items())
        for i, (k, v) in enumerate(items):
            yield pad + json.dumps(k) + ": "
            yield from _iterencode(v, level + 1, indent)
            yield ("," if i < len(items) - 1 else "") + nl
        yield end + "}"
    elif isinstance(o, list):
        if not o:
            yield "[]"
            return
        yield "[" + nl
        for i, v in enumerate(o):
            yield pad
            yield from _iterencode(v, level + 1, indent)
            yield ("," if i < len(o) - 1 else "") + nl
        yield end + "]"
    elif isinstance(o, float):
        yield repr(_Float17(o)) if math.isfinite(o) else ("null" if math.isnan(o) else ("1e999" if o > 0 else "-1e999"))
    else:
        yield json.dumps(o)


def dumps(obj) -> str:
    return "".join(_iterencode(_jsonable(obj), 0, 2)) + "\n"


@dataclass
class ConvergenceReport:
    """Rows of a parameter ladder with fitted rates and assertion flags.

    ``checks`` holds named boolean assertions; each is recomputable from the
    rows, the rates and ``tolerances`` by the code that produced it.
    """

    kind: str
    parameter: str
    columns: list
    rows: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    noise_floor: float | None = None
    verdict: str | None = None
    meta: dict = field(default_factory=dict)

    def add_row(self, **values):
        missing = set(self.columns) - set(values)
        if missing:
            raise ValueError(f"row is missing columns {sorted(missing)}")
        self.rows.append({c: values[c] for c in self.columns})

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def fit(self, name: str, column: str, min_points: int = 4) -> RateFit:
        r = fit_rate(self.column(self.parameter), self.column(column), min_points)
        self.rates[name] = r.as_dict()
        return r

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    def failures(self) -> list:
        return sorted(k for k, v in self.checks.items() if not v)

    # -- output ---------------------------------------------------------------------------
    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([fmt(r[c]) for c in self.columns])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def as_dict(self) -> dict:
        return {
            "schema": "heislab-report",
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "parameter": self.parameter,
            "columns": list(self.columns),
            "rows": self.rows,
            "rates": self.rates,
            "checks": self.checks,
            "tolerances": self.tolerances,
            "noise_floor": self.noise_floor,
            "verdict": self.verdict,
            "passed": self.passed,
            "meta": self.meta,
        }

    def to_json(self, path=None) -> str:
        text = dumps(self.as_dict())
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceReport":
        if d.get("schema") != "heislab-report":
            raise ValueError("not a heislab report")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema version {d.get('schema_version')}")
        return cls(d["kind"], d["parameter"], list(d["columns"]), list(d["rows"]), dict(d["rates"]),
                   dict(d["checks"]), dict(d["tolerances"]), d.get("noise_floor"), d.get("verdict"),
                   dict(d.get("meta", {})))

    @classmethod
    def load(cls, path) -> "ConvergenceReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


class SchemaMismatch(ValueError):
    pass


@dataclass
class Comparison:
    equal: bool
    lines: list

    def __str__(self) -> str:
        return "\n".join(self.lines)


def compare(a: ConvergenceReport, b: ConvergenceReport, rtol: float = 1e-12, atol: float = 0.0,
            confidence: float = 2.0) -> Comparison:
    """Tolerance-aware diff of two reports with the same schema.

    Numeric cells match when ``|x - y| <= atol + rtol * max(|x|, |y|)``;
    fitted rates match when they differ by at most ``confidence`` combined
    standard errors (plus ``atol``).
    """
    if a.kind != b.kind or a.parameter != b.parameter or list(a.columns) != list(b.columns):
        raise SchemaMismatch(
            f"reports differ in schema: ({a.kind}, {a.parameter}, {a.columns}) vs ({b.kind}, {b.parameter}, {b.columns})"
        )
    if set(a.rates) != set(b.rates):
        raise SchemaMismatch(f"rate sets differ: {sorted(a.rates)} vs {sorted(b.rates)}")
    lines = []
    if len(a.rows) != len(b.rows):
        lines.append(f"row count: {len(a.rows)} != {len(b.rows)}")
    for i, (ra, rb) in enumerate(zip(a.rows, b.rows)):
        for c in a.columns:
            x, y = ra[c], rb[c]
            if _is_num(x) and _is_num(y):
                if not _close(float(x), float(y), rtol, atol):
                    lines.append(f"row {i} {c}: {fmt(float(x))} != {fmt(float(y))}")
            elif x != y:
                lines.append(f"row {i} {c}: {x!r} != {y!r}")
    rate_lines = []
    for name in sorted(a.rates):
        ra, rb = a.rates[name], b.rates[name]
        tol = confidence * math.hypot(ra.get("stderr", 0.0), rb.get("stderr", 0.0)) + atol
        if abs(ra["rate"] - rb["rate"]) > tol and not _close(ra["rate"], rb["rate"], rtol, 0.0):
            rate_lines.append(f"rate {name}: {fmt(ra['rate'])} != {fmt(rb['rate'])} (tolerance {fmt(tol)})")
    if a.verdict != b.verdict:
        lines.append(f"verdict: {a.verdict} != {b.verdict}")
    lines.extend(rate_lines)
    equal = not lines
    return Comparison(equal, lines or ["reports agree"])


def rates_agree(a: ConvergenceReport, b: ConvergenceReport, confidence: float = 2.0, atol: float = 0.0) -> bool:
    return not any(line.startswith("rate ") for line in compare(a, b, rtol=0.0, atol=atol, confidence=confidence).lines)


def _is_num(x) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool)


def _close(x: float, y: float, rtol: float, atol: float) -> bool:
    if math.isnan(x) or math.isnan(y):
        return math.isnan(x) and math.isnan(y)
    return abs(x - y) <= atol + rtol * max(abs(x), abs(y))
