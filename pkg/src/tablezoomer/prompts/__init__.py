"""Versioned prompt templates.

Each template file starts with `# version:` (and optional further `#` header
lines) which are stripped at load time; the remainder is sent verbatim with
`{placeholder}` slots substituted. Placeholders are replaced literally, never
via str.format, because the templates themselves contain JSON braces.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

TEMPLATES = (
    "table_describer",
    "query_router",
    "pot",
    "tcot",
    "react",
    "answer_formatter",
    "repair",
)


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    if name not in TEMPLATES:
        raise KeyError(f"unknown prompt template: {name}")
    raw = resources.files(__package__).joinpath(f"{name}.txt").read_text(encoding="utf-8")
    lines = raw.split("\n")
    body_start = 0
    while body_start < len(lines) and lines[body_start].startswith("#"):
        body_start += 1
    return "\n".join(lines[body_start:]).strip("\n")


@lru_cache(maxsize=None)
def template_version(name: str) -> str:
    raw = resources.files(__package__).joinpath(f"{name}.txt").read_text(encoding="utf-8")
    first = raw.split("\n", 1)[0]
    return first.removeprefix("# version:").strip() if first.startswith("# version:") else "0"


def render(name: str, **slots: str) -> str:
    """Fill a template's {key} slots by literal replacement."""
    text = load_template(name)
    for key, value in slots.items():
        token = "{" + key + "}"
        if token not in text:
            raise KeyError(f"template {name!r} has no slot {token}")
        text = text.replace(token, str(value))
    return text
