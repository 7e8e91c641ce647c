"""The six checkpoint choices (keys A..F) with their published names and
expected embedding dimensions.

Revisions can be pinned via a JSON config ({"A": {"revision": "<sha>"},
...}) so that regenerated corpora stay comparable across checkpoint
updates.
"""

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class ModelSpec:
    key: str
    model_name: str
    expected_dim: int
    revision: str | None = None

    def __post_init__(self):
        if self.expected_dim not in (384, 768):
            raise ValueError(f"unexpected embedding dimension {self.expected_dim}")


MODELS = {
    "A": ModelSpec("A", "distilbert-base-uncased", 768),
    "B": ModelSpec("B", "nreimers/MiniLM-L6-H384-uncased", 384),
    "C": ModelSpec("C", "sentence-transformers/all-MiniLM-L6-v2", 384),
    "D": ModelSpec("D", "sentence-transformers/multi-qa-distilbert-cos-v1", 768),
    "E": ModelSpec("E", "sentence-transformers/paraphrase-MiniLM-L3-v2", 384),
    "F": ModelSpec("F", "bert-base-uncased", 768),
}


def resolve_model(key, revisions_path=None):
    if key not in MODELS:
        raise KeyError(f"unknown model key {key!r}; expected one of {sorted(MODELS)}")
    spec = MODELS[key]
    if revisions_path:
        with open(revisions_path, "r", encoding="utf-8") as handle:
            pins = json.load(handle)
        revision = pins.get(key, {}).get("revision")
        if revision:
            spec = ModelSpec(spec.key, spec.model_name, spec.expected_dim, revision)
    return spec
