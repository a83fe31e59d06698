"""Command-line entry points wiring the full pipeline.

One JSON config file (flat key/value, documented in the README) drives
every command; flags override individual keys. All artifacts land under
the run's output directory together with a manifest; timestamps live only
in the sidecar run.log so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

from . import corpus as corpus_mod
from . import kernels
from .embedders import Embedder, HashedTrigramEmbedder, PrecomputedEmbedder
from .errors import ConfigurationError, KgqaError
from .harness import (
    ContextPipeline,
    EchoReader,
    GraphWalkReader,
    Reader,
    RemoteReader,
    evaluate,
    generate_qa,
    load_qa,
    write_qa_file,
    write_report,
)
from .index import TripleIndex, build_index, load_index, save_index
from .kg import KnowledgeGraph, load_kg, parse_triples, save_kg
from .multihop import retrieve_context, trace_to_dict, write_traces_jsonl


@dataclass
class RunConfig:
    kg_path: str | None = None
    kg_format: str = "pipe"
    qa_path: str | None = None
    n_hops: int = 1
    k_per_hop: list[int] | None = None
    embedder: str = "trigram"
    embedder_dim: int = 64
    embeddings_path: str | None = None
    index_path: str | None = None
    reader: str = "graph-walk"
    reader_url: str | None = None
    eval_mode: str = "strict"
    entity_set_mode: str = "replace"
    expand: bool = False
    seed: int = 0
    output_dir: str = "run"
    jobs: int = 1
    corpus_text_path: str | None = None
    span_annotations_path: str | None = None
    templates_path: str | None = None
    export_traces: bool = False

    @classmethod
    def load(cls, config_path: str | None, overrides: dict) -> "RunConfig":
        values: dict = {}
        if config_path:
            try:
                raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
            except (OSError, ValueError) as exc:
                raise ConfigurationError(f"cannot read config {config_path}: {exc}") from exc
            known = {f.name for f in fields(cls)}
            unknown = set(raw) - known
            if unknown:
                raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
            values.update(raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        config = cls(**values)
        if config.n_hops < 1:
            raise ConfigurationError("n_hops must be >= 1")
        if config.eval_mode not in ("strict", "containment"):
            raise ConfigurationError(f"bad eval_mode: {config.eval_mode!r}")
        if config.entity_set_mode not in ("replace", "accumulate"):
            raise ConfigurationError(f"bad entity_set_mode: {config.entity_set_mode!r}")
        if config.reader == "remote" and not config.reader_url:
            raise ConfigurationError("remote reader requires reader_url")
        return config

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def require_paths(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if not value:
                raise ConfigurationError(f"config key {name} is required for this command")
            if not Path(value).exists():
                raise ConfigurationError(f"{name}: no such path: {value}")


class _Run:
    """Output directory plus manifest/log bookkeeping for one command."""

    def __init__(self, config: RunConfig, command: str):
        self.config = config
        self.command = command
        self.directory = Path(config.output_dir)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.artifacts: dict[str, str] = {}
        self._started = time.time()

    def path(self, name: str, filename: str) -> Path:
        self.artifacts[name] = filename
        return self.directory / filename

    def finish(self) -> None:
        manifest = {
            "command": self.command,
            "config": self.config.to_dict(),
            "artifacts": self.artifacts,
            "kernel_backend": kernels.backend_name(),
        }
        (self.directory / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        elapsed = time.time() - self._started
        with open(self.directory / "run.log", "a", encoding="utf-8") as fh:
            fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {self.command} finished in {elapsed:.2f}s\n")


def _load_graph(config: RunConfig) -> KnowledgeGraph:
    config.require_paths("kg_path")
    path = Path(config.kg_path)
    if path.is_dir():
        return load_kg(path)
    with open(path, encoding="utf-8") as fh:
        return parse_triples(fh, format=config.kg_format)


def _make_embedder(config: RunConfig) -> Embedder:
    if config.embedder == "trigram":
        return HashedTrigramEmbedder(config.embedder_dim)
    if config.embedder == "precomputed":
        config.require_paths("embeddings_path")
        return PrecomputedEmbedder.from_jsonl(config.embeddings_path)
    raise ConfigurationError(f"unknown embedder: {config.embedder!r}")


def _load_or_build_index(config: RunConfig, kg: KnowledgeGraph, emb: Embedder) -> TripleIndex:
    if config.index_path and Path(config.index_path).exists():
        return load_index(config.index_path)
    return build_index(kg, emb)


def _make_reader(config: RunConfig, kg: KnowledgeGraph) -> Reader:
    if config.reader == "graph-walk":
        return GraphWalkReader(kg)
    if config.reader == "echo":
        return EchoReader()
    if config.reader == "remote":
        return RemoteReader(config.reader_url)
    raise ConfigurationError(f"unknown reader: {config.reader!r}")


def cmd_ingest(config: RunConfig) -> int:
    kg = _load_graph(config)
    run = _Run(config, "ingest")
    out = run.path("kg", "kg")
    save_kg(kg, out)
    run.finish()
    print(f"triples: {len(kg.triples)}")
    print(f"entities: {len(kg.entities)}")
    print(f"saved: {out}")
    return 0


def cmd_index(config: RunConfig) -> int:
    kg = _load_graph(config)
    emb = _make_embedder(config)
    index = build_index(kg, emb)
    run = _Run(config, "index")
    out = run.path("index", "index.bin")
    save_index(index, out)
    run.finish()
    print(f"entries: {len(index)} (embedder {index.embedder_name}, d={index.dimension})")
    print(f"saved: {out}")
    return 0


def cmd_retrieve(config: RunConfig, question: str, as_json: bool = False) -> int:
    kg = _load_graph(config)
    emb = _make_embedder(config)
    index = _load_or_build_index(config, kg, emb)
    trace = retrieve_context(
        question, config.n_hops, index, emb, kg,
        entity_set_mode=config.entity_set_mode, k_per_hop=config.k_per_hop,
    )
    run = _Run(config, "retrieve")
    write_traces_jsonl([trace], run.path("trace", "trace.jsonl"))
    run.finish()
    if as_json:
        print(json.dumps(trace_to_dict(trace), ensure_ascii=False, sort_keys=True))
        return 0
    for hop in trace.hops:
        print(f"hop {hop.hop_index} (k={hop.k_used}):")
        for st in hop.retrieved:
            kept = "kept" if st.triple_id in hop.filtered else "dropped"
            t = kg.triples[st.triple_id]
            print(f"  [{st.score:10.4f}] {kept:7s} {t.head} | {t.relation} | {t.tail}")
        print(f"  entities after: {sorted(hop.entity_set_after)}")
    print(f"augmented question: {trace.augmented_question}")
    return 0


def cmd_evaluate(config: RunConfig) -> int:
    config.require_paths("qa_path")
    kg = _load_graph(config)
    emb = _make_embedder(config)
    index = _load_or_build_index(config, kg, emb)
    with open(config.qa_path, encoding="utf-8") as fh:
        pairs = load_qa(fh, config.n_hops, expand=config.expand)
    if not pairs:
        raise KgqaError(f"empty QA dataset: {config.qa_path}")
    pipeline = ContextPipeline(kg, index, emb, config.entity_set_mode, config.k_per_hop)
    reader = _make_reader(config, kg)
    traces = [] if config.export_traces else None
    report = evaluate(pairs, pipeline, reader, mode=config.eval_mode,
                      jobs=config.jobs, collect_traces=traces)
    run = _Run(config, "evaluate")
    write_report(report, run.path("report", "report.json"), run.path("summary", "report.txt"))
    if traces is not None:
        write_traces_jsonl(traces, run.path("traces", "traces.jsonl"))
    run.finish()
    print(report.summary_line())
    return 0


def cmd_build_corpus(config: RunConfig) -> int:
    config.require_paths("corpus_text_path")
    kg = _load_graph(config)
    annotations = None
    if config.span_annotations_path:
        config.require_paths("span_annotations_path")
        annotations = corpus_mod.load_span_annotations(config.span_annotations_path)
    with open(config.corpus_text_path, encoding="utf-8") as fh:
        examples, stats = corpus_mod.mix_corpus(kg, fh, config.seed, annotations=annotations)
    run = _Run(config, "build-corpus")
    corpus_mod.write_corpus(
        examples, stats,
        run.path("corpus", "corpus.jsonl"),
        run.path("stats", "corpus_stats.json"),
    )
    run.finish()
    print(f"examples: {stats.triple_examples} triple + {stats.text_examples} text"
          f" (skipped {stats.text_lines_skipped} unmaskable lines)")
    return 0


def cmd_generate_qa(config: RunConfig) -> int:
    config.require_paths("templates_path")
    kg = _load_graph(config)
    raw = json.loads(Path(config.templates_path).read_text(encoding="utf-8"))
    if config.n_hops == 1:
        templates = [(row["relation"], row["template"]) for row in raw.get("one_hop", [])]
    elif config.n_hops == 2:
        templates = [(tuple(row["relations"]), row["template"]) for row in raw.get("two_hop", [])]
    else:
        raise ConfigurationError("generate-qa supports n_hops of 1 or 2")
    if not templates:
        raise ConfigurationError(f"no templates for {config.n_hops}-hop in {config.templates_path}")
    pairs = generate_qa(kg, templates, config.n_hops)
    run = _Run(config, "generate-qa")
    write_qa_file(pairs, run.path("qa", "qa.tsv"))
    run.finish()
    print(f"pairs: {len(pairs)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgqa",
        description="Knowledge-graph multi-hop retrieval QA pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file (flags override its keys)")
        p.add_argument("--kg-path", dest="kg_path")
        p.add_argument("--kg-format", dest="kg_format", choices=["pipe", "tab"])
        p.add_argument("--qa-path", dest="qa_path")
        p.add_argument("--n-hops", dest="n_hops", type=int)
        p.add_argument("--k-per-hop", dest="k_per_hop",
                       type=lambda s: [int(x) for x in s.split(",")],
                       help="comma-separated per-hop k override, e.g. 3,9")
        p.add_argument("--embedder", choices=["trigram", "precomputed"])
        p.add_argument("--embedder-dim", dest="embedder_dim", type=int)
        p.add_argument("--embeddings-path", dest="embeddings_path")
        p.add_argument("--index-path", dest="index_path")
        p.add_argument("--reader", choices=["graph-walk", "echo", "remote"])
        p.add_argument("--reader-url", dest="reader_url")
        p.add_argument("--eval-mode", dest="eval_mode", choices=["strict", "containment"])
        p.add_argument("--entity-set-mode", dest="entity_set_mode", choices=["replace", "accumulate"])
        p.add_argument("--expand", action="store_const", const=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--jobs", type=int)
        p.add_argument("--corpus-text-path", dest="corpus_text_path")
        p.add_argument("--span-annotations-path", dest="span_annotations_path")
        p.add_argument("--templates-path", dest="templates_path")
        p.add_argument("--export-traces", dest="export_traces", action="store_const", const=True)

    for name in ("ingest", "index", "evaluate", "build-corpus", "generate-qa"):
        add_common(sub.add_parser(name))
    retrieve = sub.add_parser("retrieve")
    add_common(retrieve)
    retrieve.add_argument("question")
    retrieve.add_argument("--json", action="store_true", help="print the trace as JSON")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        k: v for k, v in vars(args).items()
        if k not in ("command", "config", "question", "json")
    }
    try:
        config = RunConfig.load(args.config, overrides)
        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "index":
            return cmd_index(config)
        if args.command == "retrieve":
            return cmd_retrieve(config, args.question, as_json=args.json)
        if args.command == "evaluate":
            return cmd_evaluate(config)
        if args.command == "build-corpus":
            return cmd_build_corpus(config)
        if args.command == "generate-qa":
            return cmd_generate_qa(config)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except KgqaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
