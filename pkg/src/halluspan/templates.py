"""Prompt template loading and placeholder substitution.

Templates are plain UTF-8 text files with ``{name}`` placeholders.  They are
substituted by literal replacement (not ``str.format``), so JSON braces in
the template body are safe.  Each loaded template carries a content digest
that is recorded into run provenance, making prompt drift visible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

DEFAULT_TEMPLATES = {
    "splitter": "splitter.txt",
    "verifier": "verifier.txt",
    "keywords": "keywords.txt",
    "context": "context.txt",
}


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str
    version: str

    def render(self, **values: str) -> str:
        rendered = self.text
        for key, value in values.items():
            rendered = rendered.replace("{" + key + "}", value)
        return rendered


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def load_template(
    name: str,
    path: Optional[Union[str, Path]] = None,
    version_tag: str = "v1",
) -> PromptTemplate:
    """Load a template by role; ``path`` overrides the packaged default."""
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
    else:
        filename = DEFAULT_TEMPLATES[name]
        text = (
            resources.files("halluspan")
            .joinpath("prompts")
            .joinpath(filename)
            .read_text(encoding="utf-8")
        )
    return PromptTemplate(name=name, text=text, version=f"{version_tag}:{_digest(text)}")
