"""Default judge prompt templates and the placeholder renderer."""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Optional

MODES = ("step", "trace", "rubric_gen", "rubric_verify")


def default_templates() -> dict[str, str]:
    pkg = resources.files(__package__)
    return {mode: (pkg / f"{mode}.txt").read_text(encoding="utf-8") for mode in MODES}


def load_templates(prompt_dir: Optional[str | Path] = None) -> dict[str, str]:
    """Defaults, overridden per mode by ``<prompt_dir>/<mode>.txt`` when present."""
    templates = default_templates()
    if prompt_dir is not None:
        directory = Path(prompt_dir)
        for mode in MODES:
            override = directory / f"{mode}.txt"
            if override.is_file():
                templates[mode] = override.read_text(encoding="utf-8")
    return templates


def render(template: str, values: dict[str, str]) -> str:
    # plain replacement, not str.format: judge inputs routinely contain braces
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out
