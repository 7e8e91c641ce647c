"""Embedding extraction for occupation corpora: runs pretrained
transformer checkpoints over occupation descriptions, mean-pools the final
hidden states, normalizes to unit norm, and writes the JSONL interchange
format the clustering engine loads."""

from .models import MODELS, ModelSpec
from .pooling import mean_pool
from .extract import RawOccupation, extract_corpus, read_raw_csv

__version__ = "0.1.0"
