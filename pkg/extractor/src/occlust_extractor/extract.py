"""Corpus extraction: read raw occupations, encode them in batches, mean
pool, normalize, and emit the JSONL interchange format.

Encoders are pluggable.  TransformersEncoder runs the published
checkpoints (final-layer hidden states feed the pooling for every model,
including the non-sentence-tuned ones, so all outputs share one recipe).
HashedTokenEncoder is a deterministic offline stand-in with the same
interface, used by the tests and for dry runs without model weights.
"""

import csv
import hashlib
import json
import re

import numpy as np

from .models import ModelSpec
from .pooling import mean_pool

SOC_PATTERN = re.compile(r"^\d{2}-\d{4}\.\d{2}$")


class RawOccupation:
    def __init__(self, soc_code, title, description):
        if not SOC_PATTERN.match(soc_code):
            raise ValueError(f"bad SOC code {soc_code!r} (expected NN-NNNN.NN)")
        if not description or not description.strip():
            raise ValueError(f"occupation {soc_code} has an empty description")
        self.soc_code = soc_code
        self.title = title
        self.description = description

    def text(self, with_title=False):
        if with_title and self.title.strip():
            return f"{self.title.strip()}. {self.description}"
        return self.description


def read_raw_csv(path):
    """Read occupations from a CSV with columns soc_code,title,description."""
    occupations = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        required = {"soc_code", "title", "description"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"{path}: header must contain {sorted(required)}")
        for rownum, row in enumerate(reader, start=2):
            try:
                occupations.append(
                    RawOccupation(row["soc_code"], row["title"], row["description"])
                )
            except ValueError as exc:
                raise ValueError(f"{path} row {rownum}: {exc}") from exc
    if not occupations:
        raise ValueError(f"{path}: no occupations found")
    return occupations


class TransformersEncoder:
    """Final-layer hidden states from a pretrained checkpoint.

    Model-provided pooling heads are bypassed; every checkpoint goes
    through the same mean pooling for uniform outputs.
    """

    def __init__(self, spec: ModelSpec, max_length=512):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(
            spec.model_name, revision=spec.revision
        )
        self.model = AutoModel.from_pretrained(spec.model_name, revision=spec.revision)
        self.model.eval()
        self.max_length = max_length

    def encode_batch(self, texts):
        torch = self._torch
        inputs = self.tokenizer(
            list(texts), padding=True, truncation=True,
            max_length=self.max_length, return_tensors="pt",
        )
        with torch.no_grad():
            hidden = self.model(**inputs).last_hidden_state.cpu().numpy()
        masks = inputs["attention_mask"].cpu().numpy().astype(bool)
        return [(hidden[i], masks[i]) for i in range(len(texts))]


class HashedTokenEncoder:
    """Deterministic fake encoder: each token maps to a fixed pseudo-random
    vector derived from its hash.  Same interface and output shapes as the
    real encoder; no weights required."""

    def __init__(self, dim):
        self.dim = dim

    def _token_vector(self, token):
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "big"))
        return rng.standard_normal(self.dim)

    def encode_batch(self, texts):
        out = []
        for text in texts:
            tokens = text.lower().split() or ["[empty]"]
            vectors = np.vstack([self._token_vector(t) for t in tokens])
            out.append((vectors, np.ones(len(tokens), dtype=bool)))
        return out


def extract_corpus(raw_path, model, out_path, encoder=None, batch_size=32,
                   with_title=False):
    """Embed every occupation and write one JSONL record per input row.

    Embeddings are mean-pooled final-layer states normalized to unit
    Euclidean norm; a dimension mismatch against the model's expected_dim
    aborts with the model key in the report.  Returns the record count.
    """
    occupations = read_raw_csv(raw_path)
    if encoder is None:
        encoder = TransformersEncoder(model)
    count = 0
    with open(out_path, "w", encoding="utf-8") as handle:
        for start in range(0, len(occupations), batch_size):
            batch = occupations[start : start + batch_size]
            encoded = encoder.encode_batch([o.text(with_title) for o in batch])
            for occ, (vectors, mask) in zip(batch, encoded):
                pooled = mean_pool(vectors, mask)
                if pooled.shape[0] != model.expected_dim:
                    raise RuntimeError(
                        f"model {model.key} ({model.model_name}) produced "
                        f"{pooled.shape[0]}-dim vectors, expected {model.expected_dim}"
                    )
                norm = float(np.linalg.norm(pooled))
                if norm == 0.0:
                    raise RuntimeError(f"zero embedding for {occ.soc_code}")
                unit = pooled / norm
                record = {
                    "soc_code": occ.soc_code,
                    "title": occ.title,
                    "major_group": occ.soc_code[:2],
                    "text": occ.text(with_title),
                    "embedding": [float(v) for v in unit],
                }
                handle.write(json.dumps(record) + "\n")
                count += 1
    return count
