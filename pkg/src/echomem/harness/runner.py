"""Run scenarios, write manifests and compare reports to reference metrics."""
from __future__ import annotations

import hashlib
import json
import math
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

from .config import ScenarioConfig
from .scenarios import SCENARIOS, write_json

REPORT_NAME = "report.json"
MANIFEST_NAME = "manifest.json"


@dataclass
class RunReport:
    scenario: str
    config_hash: str
    seed: int
    metrics: dict
    manifest: dict
    wall_time_s: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable) + "\n")

    @classmethod
    def load(cls, path) -> "RunReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _jsonable(x):
    if hasattr(x, "tolist"):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x).__name__}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_scenario(cfg: ScenarioConfig, out_dir=None) -> RunReport:
    """Execute ``cfg.scenario`` and write its files, a manifest and a report into ``out_dir``."""
    out = Path(out_dir or cfg.output_dir or tempfile.mkdtemp(prefix=f"{cfg.scenario}-"))
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    metrics = SCENARIOS[cfg.scenario](cfg, out)
    wall = time.perf_counter() - start
    metrics = json.loads(json.dumps(metrics, default=_jsonable))
    write_json(out / "metrics.json", metrics)
    write_json(out / "config.json", cfg.canonical())
    manifest = {p.name: _sha256(p) for p in sorted(out.iterdir())
                if p.is_file() and p.name not in (REPORT_NAME, MANIFEST_NAME)}
    write_json(out / MANIFEST_NAME, {"scenario": cfg.scenario, "seed": cfg.seed,
                                     "config_hash": cfg.config_hash(), "files": manifest})
    report = RunReport(cfg.scenario, cfg.config_hash(), cfg.seed, metrics, manifest, wall, cfg.canonical())
    report.save(out / REPORT_NAME)
    return report


@dataclass
class Comparison:
    passed: bool
    deltas: dict
    failures: list
    ignored: list

    def summary(self) -> str:
        lines = [f"{'PASS' if self.passed else 'FAIL'}"]
        for name, d in sorted(self.deltas.items()):
            lines.append(f"  {name}: delta={d}")
        for f in self.failures:
            lines.append(f"  failed: {f}")
        if self.ignored:
            lines.append("  not in reference (ignored): " + ", ".join(sorted(self.ignored)))
        return "\n".join(lines)


def _delta(actual: Any, expected: Any):
    if isinstance(expected, list):
        if not isinstance(actual, list) or len(actual) != len(expected):
            return None
        return [_delta(a, e) for a, e in zip(actual, expected)]
    if isinstance(expected, bool) or isinstance(actual, bool):
        return 0.0 if actual == expected else None
    if actual is None or expected is None:
        return 0.0 if actual is expected else None
    return float(actual) - float(expected)


def _within(delta, expected, abs_tol: float, rel_tol: float) -> bool:
    if delta is None:
        return False
    if isinstance(delta, list):
        return all(_within(d, e, abs_tol, rel_tol) for d, e in zip(delta, expected))
    if isinstance(expected, bool):
        return delta == 0.0
    tol = abs_tol + rel_tol * abs(float(expected))
    return math.isfinite(delta) and abs(delta) <= tol


def compare_to_reference(report: RunReport, reference: dict) -> Comparison:
    """Check report metrics against ``{"metrics": {name: {"value", "abs_tol", "rel_tol"}}}``.

    A bare value in place of the mapping means exact agreement.
    """
    ref = reference.get("metrics", reference)
    deltas, failures = {}, []
    for name, spec in ref.items():
        if not isinstance(spec, dict):
            spec = {"value": spec}
        if name not in report.metrics:
            failures.append(f"{name}: missing from report")
            continue
        expected = spec["value"]
        d = _delta(report.metrics[name], expected)
        deltas[name] = d
        if not _within(d, expected, spec.get("abs_tol", 0.0), spec.get("rel_tol", 0.0)):
            failures.append(f"{name}: got {report.metrics[name]!r}, expected {expected!r}")
    ignored = [k for k in report.metrics if k not in ref]
    return Comparison(not failures, deltas, failures, ignored)
