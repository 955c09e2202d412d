"""Shared test helpers: random corpora, oracles, golden-bundle normalization."""

from __future__ import annotations

import json
import random
import zipfile
from pathlib import Path
from typing import Any, Sequence

from tracelens.model import Trace, TraceCorpus, TraceStep

# fields whose values vary run-to-run (wall clock, machine paths)
VOLATILE_KEYS = {"created_at", "started_at", "duration_seconds", "path", "output_path", "cache_dir"}


def random_corpus(rng: random.Random, n_traces: int = 50, nodes: Sequence[str] = ("A", "B", "C", "D", "E", "F"),
                  with_ground_truth: bool = False) -> TraceCorpus:
    traces = []
    for index in range(n_traces):
        n_steps = rng.randint(1, 8)
        steps = tuple(
            TraceStep(
                step_index=k,
                node_id=rng.choice(nodes),
                input_text=f"input {index}-{k}",
                output_text=f"output {index}-{k}",
            )
            for k in range(n_steps)
        )
        traces.append(
            Trace(
                trace_id=f"r{index:03d}",
                task_text=f"random task {index}",
                steps=steps,
                ground_truth=float(rng.random() < 0.5) if with_ground_truth else None,
            )
        )
    return TraceCorpus(corpus_id="random", traces=tuple(traces))


def pairwise_auc_oracle(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Exhaustive Mann–Whitney: every (positive, negative) pair, ties worth 0.5."""
    positives = [s for s, y in zip(scores, labels) if y == 1]
    negatives = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in positives:
        for n in negatives:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(positives) * len(negatives))


def scrub(obj: Any) -> Any:
    """Replace volatile values so two bundles can be compared byte-for-byte."""
    if isinstance(obj, dict):
        return {
            key: ("<scrubbed>" if key in VOLATILE_KEYS and value is not None else scrub(value))
            for key, value in obj.items()
        }
    if isinstance(obj, list):
        return [scrub(item) for item in obj]
    return obj


def normalized_members(bundle_path: Path) -> dict[str, bytes]:
    """Member name -> canonical scrubbed JSON bytes for a bundle archive."""
    out: dict[str, bytes] = {}
    with zipfile.ZipFile(bundle_path) as zf:
        for name in zf.namelist():
            payload = scrub(json.loads(zf.read(name)))
            out[name] = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False).encode()
    return out
