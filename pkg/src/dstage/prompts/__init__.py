"""Prompt templates as versioned text assets.

Templates live in ``dstage/prompts/`` with ``{{name}}`` placeholders.
Rendering is strict: every placeholder must be supplied, and unknown
keys are rejected, so prompt drift shows up as an error rather than as
silently malformed model input.
"""

from __future__ import annotations

import re
from importlib import resources

PLACEHOLDER = re.compile(r"\{\{([a-z_]+)\}\}")


def template_version() -> str:
    return _read("VERSION").strip()


def _read(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text(encoding="utf-8")


def load_template(name: str) -> str:
    return _read(f"{name}.txt")


def render(template: str, /, **values: str) -> str:
    text = load_template(template)
    needed = set(PLACEHOLDER.findall(text))
    given = set(values)
    if needed - given:
        raise KeyError(f"template {template!r} missing values for {sorted(needed - given)}")
    if given - needed:
        raise KeyError(f"template {template!r} got unknown values {sorted(given - needed)}")

    def _sub(match: re.Match) -> str:
        return values[match.group(1)]

    return PLACEHOLDER.sub(_sub, text)
