"""Cycle accounting for network designs.

Designs run on the deterministic logical-time engine. The report gathers

* ``total_cycles``: logical time at which the last process finished.
* ``pipeline_fill_latency``: arrival time of the first output block.
* ``cycles_per_block``: steady-state spacing of output blocks,
  ``(t_last - t_first) / (blocks - 1)`` (``t_first`` for a single block,
  ``total_cycles`` for a key schedule).
* ``process_count`` / ``channel_count``: size of the built graph.
* ``max_concurrent_active``: most compute (``Work``) intervals that overlap
  in one cycle.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

from .kernel import CostModel, SimEngine
from .networks import (ciphertexts, encryption_design, flatten_schedule,
                       parse_design)

__all__ = [
    "CostModel", "MetricsReport", "DesignMismatchError", "run_with_metrics",
    "compare_designs", "max_overlap", "fold_stage_overlap", "format_table",
]


class DesignMismatchError(AssertionError):
    """Two designs produced different outputs for the same inputs."""


@dataclass(frozen=True)
class MetricsReport:
    total_cycles: int
    cycles_per_block: float
    pipeline_fill_latency: int
    process_count: int
    channel_count: int
    max_concurrent_active: int

    def to_dict(self):
        return asdict(self)

    def to_text(self):
        return "".join(f"{k}={v}\n" for k, v in self.to_dict().items())

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, d):
        return cls(**{f.name: d[f.name] for f in fields(cls)})


def max_overlap(intervals):
    """Largest number of half-open ``(start, end)`` intervals sharing a cycle."""
    events = []
    for start, end in intervals:
        if end > start:
            events.append((start, 1))
            events.append((end, -1))
    # ends sort before starts at the same instant
    events.sort(key=lambda e: (e[0], e[1]))
    best = cur = 0
    for _, d in events:
        cur += d
        best = max(best, cur)
    return best


def fold_stage_overlap(kernel, prefix="fold["):
    """Most distinct pipeline stages (``prefix*``) doing work in the same cycle."""
    events = []
    for start, end, _tid, stage in kernel.activity:
        if stage is not None and stage.startswith(prefix) and end > start:
            events.append((start, 1, stage))
            events.append((end, -1, stage))
    events.sort(key=lambda e: (e[0], e[1]))
    active = {}
    best = 0
    for _, d, stage in events:
        active[stage] = active.get(stage, 0) + d
        if d > 0:
            best = max(best, sum(1 for v in active.values() if v > 0))
    return best


def report_for(result, blocks=None):
    k = result.kernel
    inst = result.instance
    times = getattr(inst.graph, "timing", None)
    times = times.times if times is not None else None
    total = k.max_clock
    if times:
        first = times[0]
        cpb = (times[-1] - first) / (len(times) - 1) if len(times) > 1 else float(first)
    else:
        first = total
        cpb = float(total)
    return MetricsReport(
        total_cycles=total,
        cycles_per_block=cpb,
        pipeline_fill_latency=first,
        process_count=inst.process_count,
        channel_count=inst.channel_count,
        max_concurrent_active=max_overlap((a[0], a[1]) for a in k.activity),
    )


def run_with_metrics(design, model=None, seed=None):
    """Run a :class:`~serpent_csp.networks.NetworkDesign` on the logical-time engine.

    Returns ``(outputs, report)``; outputs are ciphertext blocks for
    encryption designs and the 33 subkey groups for key-schedule designs.
    """
    result = design.run(engine="sim", seed=seed, costs=model or CostModel())
    assert isinstance(result.kernel, SimEngine)
    if "ciphertext" in result.outputs:
        outputs = ciphertexts(result)
    else:
        outputs = flatten_schedule(result.outputs["ks"])
    return outputs, report_for(result)


def _competition_rank(values):
    order = sorted(values)
    return [order.index(v) + 1 for v in values]


def compare_designs(key, blocks, designs, model=None, ks_design="KS1", capacity=1,
                    lanes=1, seed=None):
    """Run each design on the same inputs; one row per design.

    ``designs`` holds ids such as ``"ENC1"`` or ``"ENC3(2)"``. Rows are dicts
    with ``design``, the report fields and ``rank`` (1 = fewest cycles per
    block, ties share a rank). Diverging ciphertexts raise
    :class:`DesignMismatchError`.
    """
    if not designs:
        raise ValueError("compare_designs needs at least one design")
    rows = []
    reference = None
    for text in designs:
        d_id, n = parse_design(text) if isinstance(text, str) else text
        d = encryption_design(key, blocks, d_id, n, ks_design, lanes, capacity)
        out, rep = run_with_metrics(d, model, seed)
        if reference is None:
            reference = (d.label, out)
        elif out != reference[1]:
            raise DesignMismatchError(f"{d.label} output differs from {reference[0]}")
        rows.append({"design": d.label, **rep.to_dict()})
    for row, r in zip(rows, _competition_rank([r["cycles_per_block"] for r in rows])):
        row["rank"] = r
    return rows


def format_table(rows, fmt="text"):
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    lines = []
    for row in rows:
        lines.append(" ".join(f"{k}={v}" for k, v in row.items()))
    return "\n".join(lines) + "\n"
