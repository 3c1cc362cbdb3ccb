"""Small shared helpers for parsing model responses."""

from __future__ import annotations

import json
import re

_FENCE_RE = re.compile(r"^```[a-zA-Z0-9_-]*\s*\n(.*?)\n?```\s*$", re.DOTALL)

REASK_NOTE = (
    "Your previous response could not be parsed as the required JSON. "
    "Respond again with only the valid JSON, no extra text, no code fences."
)


def extract_json(text: str, expect: type | None = None):
    """Pull the first JSON value out of a model response.

    Tolerates code fences and prefix/suffix chatter; returns the parsed value
    or raises ValueError. `expect` narrows the accepted top-level type.
    """
    candidate = text.strip()
    fenced = _FENCE_RE.match(candidate)
    if fenced:
        candidate = fenced.group(1).strip()
    try:
        value = json.loads(candidate)
    except json.JSONDecodeError:
        value = _scan_for_json(candidate)
        if value is None:
            raise ValueError("no parseable JSON value in response")
    if expect is not None and not isinstance(value, expect):
        raise ValueError(f"expected top-level {expect.__name__}, got {type(value).__name__}")
    return value


def _scan_for_json(text: str):
    decoder = json.JSONDecoder()
    for opener in ("{", "["):
        start = text.find(opener)
        while start != -1:
            try:
                value, _ = decoder.raw_decode(text[start:])
                return value
            except json.JSONDecodeError:
                start = text.find(opener, start + 1)
    return None
