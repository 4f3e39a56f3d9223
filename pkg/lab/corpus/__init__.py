"""Shipped lint manifests: a safe and an unsafe encoding of each leakage scenario."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Literal

Branch = Literal["safe", "unsafe"]


@dataclass(frozen=True)
class CorpusEntry:
    """One manifest of the corpus.

    Attributes:
        name: Scenario name, e.g. ``preprocessing``.
        branch: ``safe`` or ``unsafe``.
        rule: Rule the unsafe branch must trigger.
        category: Taxonomy category of that finding.
        description: One-line summary of the scenario pair.
        text: The manifest document.
    """

    name: str
    branch: Branch
    rule: str
    category: str
    description: str
    text: str

    @property
    def label(self) -> str:
        return f"{self.name}_{self.branch}"


def _read(filename: str) -> str:
    return resources.files(__name__).joinpath(filename).read_text(encoding="utf-8")


def load_corpus() -> list[CorpusEntry]:
    """Every corpus manifest, unsafe branch before safe, in index order."""
    index = json.loads(_read("index.json"))
    entries = []
    for pair in index["pairs"]:
        for branch in ("unsafe", "safe"):
            entries.append(
                CorpusEntry(
                    name=pair["name"],
                    branch=branch,
                    rule=pair["rule"],
                    category=pair["category"],
                    description=pair["description"],
                    text=_read(f"{pair['name']}_{branch}.json"),
                )
            )
    return entries


def corpus_entry(label: str) -> CorpusEntry:
    """Look up an entry by ``<name>_<branch>``.

    Raises:
        KeyError: No such entry.
    """
    for entry in load_corpus():
        if entry.label == label:
            return entry
    raise KeyError(label)
