"""Occupation embedding corpora: JSONL loading, unit normalization, ground
truth derived from SOC codes, and the distance matrix used everywhere else.

Interchange format is JSON Lines, one record per line with keys
``soc_code``, ``title``, ``major_group``, ``text``, ``embedding``.
"""

import json
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import ContractError, LoadError, ValidationError
from .linalg import pairwise_distances

SOC_PATTERN = re.compile(r"^\d{2}-\d{4}\.\d{2}$")


@dataclass(frozen=True, eq=False)
class OccupationRecord:
    soc_code: str
    title: str
    major_group: str
    text: str
    embedding: np.ndarray


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """Immutable ordered collection of occupation records sharing one dimension."""

    records: tuple
    normalized: bool = False

    @property
    def n(self):
        return len(self.records)

    @property
    def m(self):
        return int(self.records[0].embedding.shape[0])

    @cached_property
    def matrix(self):
        """(n, m) float64 matrix, one embedding per row."""
        return np.vstack([r.embedding for r in self.records])

    @property
    def soc_codes(self):
        return [r.soc_code for r in self.records]


@dataclass(frozen=True)
class GroundTruth:
    """Per-record class index derived from the SOC major group."""

    labels: np.ndarray = field(repr=False)
    class_names: tuple

    @property
    def n_classes(self):
        return len(self.class_names)


def _parse_record(obj, lineno, expected_m):
    if not isinstance(obj, dict):
        raise LoadError(f"line {lineno}: expected a JSON object")
    missing = {"soc_code", "title", "major_group", "text", "embedding"} - set(obj)
    if missing:
        raise LoadError(f"line {lineno}: missing keys {sorted(missing)}")
    soc = obj["soc_code"]
    if not isinstance(soc, str) or not SOC_PATTERN.match(soc):
        raise LoadError(f"line {lineno}: bad SOC code {soc!r} (expected NN-NNNN.NN)")
    group = obj["major_group"]
    if group != soc[:2]:
        raise LoadError(
            f"line {lineno}: major_group {group!r} does not match SOC prefix {soc[:2]!r}"
        )
    text = obj["text"]
    if not isinstance(text, str) or not text.strip():
        raise LoadError(f"line {lineno}: empty description text for {soc}")
    try:
        emb = np.asarray(obj["embedding"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise LoadError(f"line {lineno}: embedding is not a numeric vector: {exc}") from exc
    if emb.ndim != 1 or emb.size == 0:
        raise LoadError(f"line {lineno}: embedding must be a nonempty flat vector")
    if expected_m is not None and emb.size != expected_m:
        raise LoadError(
            f"line {lineno}: embedding length {emb.size} differs from corpus dimension {expected_m}"
        )
    if not np.all(np.isfinite(emb)):
        raise LoadError(f"line {lineno}: embedding contains non-finite values")
    emb.setflags(write=False)
    return OccupationRecord(
        soc_code=soc,
        title=str(obj["title"]),
        major_group=group,
        text=text,
        embedding=emb,
    )


def load_corpus(path):
    """Load and validate a JSONL corpus; errors name the offending line."""
    records = []
    expected_m = None
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot open corpus {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LoadError(f"line {lineno}: malformed JSON: {exc}") from exc
            rec = _parse_record(obj, lineno, expected_m)
            if expected_m is None:
                expected_m = rec.embedding.size
            records.append(rec)
    if not records:
        raise LoadError(f"corpus {path} contains no records")
    return EmbeddingSet(records=tuple(records), normalized=False)


def write_corpus(embedding_set, path):
    """Serialize an EmbeddingSet back to the JSONL interchange format.

    json emits floats with their shortest exact representation, so a
    write/load round trip preserves every coordinate bit-for-bit.
    """
    with open(path, "w", encoding="utf-8") as handle:
        for rec in embedding_set.records:
            obj = {
                "soc_code": rec.soc_code,
                "title": rec.title,
                "major_group": rec.major_group,
                "text": rec.text,
                "embedding": [float(v) for v in rec.embedding],
            }
            handle.write(json.dumps(obj) + "\n")
    return path


def normalize_rows(embedding_set):
    """Scale every embedding to unit Euclidean norm."""
    normalized = []
    for i, rec in enumerate(embedding_set.records):
        norm = float(np.linalg.norm(rec.embedding))
        if norm == 0.0:
            raise ValidationError(f"record {i} ({rec.soc_code}) has a zero embedding")
        emb = rec.embedding / norm
        emb.setflags(write=False)
        normalized.append(
            OccupationRecord(
                soc_code=rec.soc_code,
                title=rec.title,
                major_group=rec.major_group,
                text=rec.text,
                embedding=emb,
            )
        )
    return EmbeddingSet(records=tuple(normalized), normalized=True)


def distance_matrix(embedding_set):
    """Pairwise Euclidean distances between embeddings.

    Normalization is a separate, explicit stage; calling this on an
    unnormalized set is a contract violation rather than a silent fix.
    """
    if not embedding_set.normalized:
        raise ContractError("distance_matrix requires a normalized EmbeddingSet")
    return pairwise_distances(embedding_set.matrix)


def major_group_labels(embedding_set):
    """Ground truth classes from the two-digit SOC prefix of each record."""
    prefixes = [r.soc_code[:2] for r in embedding_set.records]
    class_names = tuple(sorted(set(prefixes)))
    index = {name: i for i, name in enumerate(class_names)}
    labels = np.array([index[p] for p in prefixes], dtype=np.intp)
    labels.setflags(write=False)
    return GroundTruth(labels=labels, class_names=class_names)


def write_distance_csv(D, path):
    """Dump a distance matrix as header-less CSV rows."""
    with open(path, "w", encoding="utf-8") as handle:
        for row in np.asarray(D):
            handle.write(",".join(repr(float(v)) for v in row) + "\n")
    return path
