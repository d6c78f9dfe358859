"""Vocabulary and corpus sampling commands."""

import logging

from embench.corpus import build_vocab, mix_corpora, read_documents, write_documents, write_vocab
from embench.errors import UsageError

from .common import flag_parser, parse_flags

logger = logging.getLogger(__name__)


def handle_build_vocab(arg: str) -> None:
    """build-vocab --corpus PATH [--cap N] [--min-count M] --out PATH"""
    parser = flag_parser("build-vocab", "Build a vocabulary file from a corpus.")
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--cap", type=int, default=200_000)
    parser.add_argument("--min-count", type=int, default=1)
    parser.add_argument("--out", required=True)
    args = parse_flags(parser, arg)

    vocab = build_vocab(read_documents(args.corpus), cap=args.cap, min_count=args.min_count)
    write_vocab(args.out, vocab)
    print(f"{len(vocab)} words, {vocab.total_tokens} tokens")


def parse_target(text: str, available: int) -> int:
    """Token target as 'N' or 'P%' of `available`."""
    try:
        if text.endswith("%"):
            percent = float(text[:-1])
            if not 0 < percent <= 100:
                raise ValueError(text)
            return round(available * percent / 100)
        target = int(text)
    except ValueError:
        raise UsageError(f"--tokens expects N or P%, got {text!r}") from None
    if target < 1:
        raise UsageError("--tokens must be >= 1")
    return target


def handle_sample(arg: str) -> None:
    """sample --corpus PATH --tokens N|P% [--corpus PATH --tokens N|P% ...] [--seed S] --out PATH"""
    parser = flag_parser("sample", "Sample documents from one or more corpora and shuffle them together.")
    parser.add_argument("--corpus", action="append", required=True)
    parser.add_argument("--tokens", action="append", required=True)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--out", required=True)
    args = parse_flags(parser, arg)

    if len(args.tokens) != len(args.corpus):
        raise UsageError("give one --tokens per --corpus")

    sources = []
    for path, tokens in zip(args.corpus, args.tokens):
        documents = read_documents(path)
        target = parse_target(tokens, sum(len(d) for d in documents))
        logger.info("%s: sampling %i tokens", path, target)
        sources.append((documents, target))

    sample = mix_corpora(sources, args.seed)
    write_documents(args.out, sample)
    print(f"{len(sample)} documents, {sum(len(d) for d in sample)} tokens")
