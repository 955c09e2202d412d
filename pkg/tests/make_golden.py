"""Regenerate the committed golden bundle: python3 -m tests.make_golden.

The golden run is the full mock-path pipeline over the fixture corpus with
a fixed clock; comparisons against it normalize the volatile fields listed
in tests.util.VOLATILE_KEYS, so regeneration is only needed when intended
behavior changes.
"""

from __future__ import annotations

import shutil
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from tracelens.config import InputConfig, PipelineConfig, ServeConfig
from tracelens.insights import AggregatorConfig
from tracelens.judging import JudgeConfig, ModeFlags
from tracelens.pipeline import run_pipeline

from .fixture_corpus import write_langfuse_corpus

GOLDEN_PATH = Path(__file__).parent / "golden" / "results.zip"
GOLDEN_CLOCK = lambda: datetime(2026, 2, 1, tzinfo=timezone.utc)  # noqa: E731


def golden_config(workdir: Path) -> PipelineConfig:
    corpus_dir = write_langfuse_corpus(workdir)
    return PipelineConfig(
        input=InputConfig(path=str(corpus_dir), adapter="langfuse"),
        judge=JudgeConfig(model_name="mock-judge", backend="mock", max_parallel=2),
        modes=ModeFlags(),
        aggregator=AggregatorConfig(backend="mock"),
        output_path=str(workdir / "out"),
        serve=ServeConfig(),
    )


def build_golden(destination: Path) -> Path:
    with tempfile.TemporaryDirectory() as tmp:
        bundle_path = run_pipeline(golden_config(Path(tmp)), clock=GOLDEN_CLOCK)
        destination.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(bundle_path, destination)
    return destination


if __name__ == "__main__":
    print(f"golden bundle written to {build_golden(GOLDEN_PATH)}")
