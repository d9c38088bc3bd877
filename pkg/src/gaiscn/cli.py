"""Command line interface: ``gaiscn run | corpus | report``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from collections import Counter
from pathlib import Path

from .experiment import (
    build_corpus,
    emit_report,
    load_config,
    read_events,
    report_from_events,
    run_experiment,
)
from .huffman import huffman_decode
from .scene import read_corpus, serialize_scene, write_corpus
from .traditional import build_codebooks, encode_text

log = logging.getLogger("gaiscn")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", help="YAML experiment config")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _setup_logging(verbosity: int) -> None:
    level = logging.WARNING - 10 * min(verbosity, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def cmd_run(args) -> int:
    cfg = load_config(
        args.config,
        output_dir=args.out,
        master_seed=args.seed,
        schemes=tuple(args.schemes.split(",")) if args.schemes else None,
        workers=args.workers,
    )
    report, events = run_experiment(cfg)
    print(report.table_csv(), end="")
    log.info("wrote %d events to %s", len(events), Path(cfg.output_dir) / "events.jsonl")
    return 0


def cmd_corpus(args) -> int:
    cfg = load_config(args.config)
    if args.action == "generate":
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, master_seed=args.seed)
        if args.size is not None:
            cfg = dataclasses.replace(cfg, corpus_size=args.size)
        scenes = build_corpus(cfg)
        write_corpus(args.path, scenes, cfg.vocabulary)
        print(f"wrote {len(scenes)} scenes to {args.path}")
        return 0

    vocab = cfg.vocabulary
    scenes = read_corpus(args.path, vocab)
    from .knowledge import build_knowledge_base

    kb = build_knowledge_base(vocab, cfg.network.canvas)
    books = build_codebooks(scenes, kb, [], cfg.network.resolution)
    counts = Counter(len(s.objects) for s in scenes)
    classes = Counter(vocab.class_labels[o.class_id] for s in scenes for o in s.objects)
    text_bits = 0
    for s in scenes:
        text = serialize_scene(s, vocab)
        frame = encode_text(text, books.text)
        if "".join(huffman_decode(frame, books.text)) != text:
            print("round-trip failure", file=sys.stderr)
            return 1
        text_bits += len(frame)
    print(f"scenes: {len(scenes)}")
    print("objects per scene: " + ", ".join(f"{n}:{c}" for n, c in sorted(counts.items())))
    print("class counts: " + ", ".join(f"{k}:{v}" for k, v in sorted(classes.items())))
    print(f"huffman text bits: {text_bits} (round-trip ok)")
    return 0


def cmd_report(args) -> int:
    cfg = load_config(args.config)
    report = report_from_events(read_events(args.events), cfg.bins)
    if args.out:
        emit_report(report, args.out)
    print(report.table_csv(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaiscn", description="GAI-integrated semantic communication simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment")
    _common(p)
    p.add_argument("-o", "--out", help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--schemes", help="comma-separated scheme filter, e.g. A,C")
    p.add_argument("--workers", type=int, help="parallel session workers")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("corpus", help="generate or inspect a scene corpus")
    _common(p)
    p.add_argument("action", choices=("generate", "inspect"))
    p.add_argument("path")
    p.add_argument("--seed", type=int)
    p.add_argument("--size", type=int)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("report", help="re-aggregate a saved event log")
    _common(p)
    p.add_argument("events", help="events.jsonl from a previous run")
    p.add_argument("-o", "--out", help="write report.csv and curves.jsonl here")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
