"""Command line: occlust-extract --model-key D --input onet.csv --out d.jsonl"""

import argparse
import sys

from .extract import HashedTokenEncoder, TransformersEncoder, extract_corpus
from .models import MODELS, resolve_model


def build_parser():
    parser = argparse.ArgumentParser(
        prog="occlust-extract",
        description="Embed occupation descriptions with a pretrained "
        "checkpoint (mean pooling, unit normalization) into JSONL.",
    )
    parser.add_argument("--model-key", required=True, choices=sorted(MODELS))
    parser.add_argument("--input", required=True, help="CSV with soc_code,title,description")
    parser.add_argument("--out", required=True, help="output JSONL path")
    parser.add_argument("--with-title", action="store_true",
                        help="embed 'title. description' instead of the description alone")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--revisions", default=None,
                        help="JSON file pinning checkpoint revisions per model key")
    parser.add_argument("--backend", choices=("transformers", "hash"),
                        default="transformers",
                        help="'hash' is a deterministic offline stand-in for dry runs")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        model = resolve_model(args.model_key, args.revisions)
        if args.backend == "hash":
            encoder = HashedTokenEncoder(model.expected_dim)
        else:
            encoder = TransformersEncoder(model)
        count = extract_corpus(
            args.input, model, args.out,
            encoder=encoder, batch_size=args.batch_size, with_title=args.with_title,
        )
    except Exception as exc:  # noqa: BLE001 - single-purpose tool
        sys.stderr.write(f"error: {exc}\n")
        return 1
    print(f"wrote {count} records ({model.key}: {model.model_name}, "
          f"m={model.expected_dim}) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
