"""QA datasets, reader inputs, readers, and exact-match evaluation.

Datasets are `question<TAB>a1|a2|...` lines with bracketed question
entities. The reader is pluggable: a built-in graph-walk baseline, an echo
stub, or a remote HTTP service speaking the /answer wire protocol.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .embedders import Embedder
from .entities import question_entities
from .errors import QAFileError, TemplateError
from .index import TripleIndex
from .kg import KnowledgeGraph, canonical_entity, verbalize
from .multihop import RetrievalTrace, retrieve_context

READER_SEPARATOR = "</s>"
HEAD_PLACEHOLDER = "[HEAD]"

#: Env var holding the bearer token sent to a remote reader.
READER_TOKEN_ENV = "KGQA_READER_TOKEN"


@dataclass(frozen=True)
class QAPair:
    question: str
    gold_answers: tuple[str, ...]
    n_hops: int
    source_line: int

    def __post_init__(self):
        if not self.gold_answers:
            raise ValueError("QAPair requires at least one gold answer")
        for g in self.gold_answers:
            if "|" in g:
                raise ValueError(f"gold answer contains '|' separator: {g!r}")


@dataclass(frozen=True)
class ReaderInput:
    text: str


def load_qa(source: Iterable[str], n_hops: int, expand: bool) -> list[QAPair]:
    """Parse QA lines; expand=True yields one pair per answer (same
    question), expand=False one pair per line with the full gold list."""
    pairs: list[QAPair] = []
    for line_number, raw in enumerate(source, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise QAFileError(
                f"expected 'question<TAB>answers', got {len(parts)} field(s)", line_number
            )
        question, answer_field = parts[0].strip(), parts[1]
        answers = [a.strip() for a in answer_field.split("|")]
        if not question or not answers or not all(answers):
            raise QAFileError("empty question or answer field", line_number)
        if expand:
            pairs.extend(
                QAPair(question, (answer,), n_hops, line_number) for answer in answers
            )
        else:
            pairs.append(QAPair(question, tuple(answers), n_hops, line_number))
    return pairs


def context_text(trace: RetrievalTrace, kg: KnowledgeGraph) -> str:
    """All hops' filtered verbalizations, hop order then rank order, ". "-joined."""
    ids = [i for hop in trace.hops for i in hop.filtered]
    return ". ".join(verbalize(kg.triples[i]).text for i in ids)


def format_input(q0: str, trace: RetrievalTrace, kg: KnowledgeGraph) -> ReaderInput:
    """The literal reader input: question, separator token, retrieved context."""
    if trace.question != q0:
        raise ValueError("trace does not belong to this question")
    return ReaderInput(f"question: {q0}{READER_SEPARATOR}context: {context_text(trace, kg)}")


def exact_match(prediction: str, golds: Sequence[str], mode: str = "strict") -> int:
    """1 iff the prediction matches (strict) or contains (containment) any
    gold answer, after lowercasing and trimming both sides."""
    if not golds:
        raise ValueError("golds must be non-empty")
    pred = prediction.strip().lower()
    normalized = [g.strip().lower() for g in golds]
    if mode == "strict":
        return int(any(pred == g for g in normalized))
    if mode == "containment":
        return int(any(g in pred for g in normalized))
    raise ValueError(f"unknown exact-match mode: {mode!r}")


def graph_walk_answer(inp: ReaderInput, trace: RetrievalTrace, kg: KnowledgeGraph) -> str:
    """Baseline reader: the newly reached endpoints of the final hop.

    Entities of the final hop's filtered triples that were not already in
    that hop's pre-update entity set, "|"-joined in rank order (first
    occurrence wins); empty filtered set yields the empty string.
    """
    if not trace.hops:
        return ""
    final = trace.hops[-1]
    if len(trace.hops) >= 2:
        before = trace.hops[-2].entity_set_after
    else:
        before = question_entities(trace.question, kg)
    seen: set[str] = set()
    endpoints: list[str] = []
    for i in final.filtered:
        t = kg.triples[i]
        for entity in (t.head, t.tail):
            key = canonical_entity(entity)
            if key in before or key in seen:
                continue
            seen.add(key)
            endpoints.append(entity)
    return "|".join(endpoints)


class Reader:
    """Answer source for evaluation. Built-ins are deterministic."""

    name: str
    #: whether answer() tolerates concurrent calls
    supports_concurrency: bool = True

    def answer(self, inp: ReaderInput, trace: RetrievalTrace | None = None) -> str:
        raise NotImplementedError


class GraphWalkReader(Reader):
    """Wraps graph_walk_answer so the pipeline runs with no external model."""

    def __init__(self, kg: KnowledgeGraph):
        self.name = "graph-walk"
        self._kg = kg

    def answer(self, inp: ReaderInput, trace: RetrievalTrace | None = None) -> str:
        if trace is None:
            raise ValueError("graph-walk reader needs the retrieval trace")
        return graph_walk_answer(inp, trace, self._kg)


class EchoReader(Reader):
    """Returns the input text unchanged (wiring tests)."""

    name = "echo"

    def answer(self, inp: ReaderInput, trace: RetrievalTrace | None = None) -> str:
        return inp.text


class RemoteReaderError(Exception):
    """Remote reader call failed (network, HTTP status, or bad payload)."""


class RemoteReader(Reader):
    """HTTP client for the reader wire protocol.

    POST /answer with {"input": text} expecting {"answer": text}; batch via
    POST /answers with {"inputs": [...]}. A bearer token is taken from the
    KGQA_READER_TOKEN env var when set.
    """

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.name = f"remote:{base_url}"
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _post(self, path: str, payload: dict) -> dict:
        request = urllib.request.Request(
            f"{self.base_url}{path}",
            data=json.dumps(payload).encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        token = os.environ.get(READER_TOKEN_ENV)
        if token:
            request.add_header("Authorization", f"Bearer {token}")
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                body = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise RemoteReaderError(f"POST {path} failed: {exc}") from exc
        return body

    def answer(self, inp: ReaderInput, trace: RetrievalTrace | None = None) -> str:
        body = self._post("/answer", {"input": inp.text})
        if "answer" not in body:
            raise RemoteReaderError(f"malformed response: {body!r}")
        return str(body["answer"])

    def answer_batch(self, inputs: Sequence[ReaderInput]) -> list[str]:
        """Order-preserving batch call; item-level errors raise."""
        body = self._post("/answers", {"inputs": [inp.text for inp in inputs]})
        items = body.get("answers")
        if not isinstance(items, list) or len(items) != len(inputs):
            raise RemoteReaderError(f"malformed batch response: {body!r}")
        answers = []
        for item in items:
            if "answer" not in item:
                raise RemoteReaderError(f"batch item failed: {item!r}")
            answers.append(str(item["answer"]))
        return answers


@dataclass
class ContextPipeline:
    """Bundles the retrieval components plus knobs, so evaluation runs can
    be configured once and reused across questions."""

    kg: KnowledgeGraph
    index: TripleIndex
    embedder: Embedder
    entity_set_mode: str = "replace"
    k_per_hop: Sequence[int] | None = None

    def run(self, question: str, n_hops: int) -> RetrievalTrace:
        return retrieve_context(
            question,
            n_hops,
            self.index,
            self.embedder,
            self.kg,
            entity_set_mode=self.entity_set_mode,
            k_per_hop=self.k_per_hop,
        )


@dataclass(frozen=True)
class EvalItem:
    question: str
    prediction: str
    golds: tuple[str, ...]
    score: int
    flagged: bool = False


@dataclass(frozen=True)
class EvalReport:
    n_items: int
    n_correct: int
    em: float
    per_item: tuple[EvalItem, ...]
    mode: str
    n_flagged: int

    def summary_line(self) -> str:
        return f"EM: {self.em:.4f} ({self.n_correct}/{self.n_items})"

    def to_dict(self) -> dict:
        return {
            "summary": {
                "n_items": self.n_items,
                "n_correct": self.n_correct,
                "em": self.em,
                "mode": self.mode,
                "n_flagged": self.n_flagged,
            },
            "per_item": [
                {
                    "question": item.question,
                    "prediction": item.prediction,
                    "golds": list(item.golds),
                    "score": item.score,
                    "flagged": item.flagged,
                }
                for item in self.per_item
            ],
        }


def evaluate(
    pairs: Sequence[QAPair],
    pipeline: ContextPipeline,
    reader: Reader,
    mode: str = "strict",
    jobs: int = 1,
    collect_traces: list[RetrievalTrace] | None = None,
) -> EvalReport:
    """Run retrieval, formatting, reading, and scoring over every pair.

    A failing item (reader error or pipeline error) scores 0 and is flagged;
    the run continues. The report preserves input order regardless of jobs.
    """
    if not pairs:
        raise ValueError("evaluate requires at least one QA pair")

    def run_item(pair: QAPair) -> tuple[EvalItem, RetrievalTrace | None]:
        try:
            trace = pipeline.run(pair.question, pair.n_hops)
            inp = format_input(pair.question, trace, pipeline.kg)
            prediction = reader.answer(inp, trace)
            score = exact_match(prediction, pair.gold_answers, mode)
            return EvalItem(pair.question, prediction, pair.gold_answers, score), trace
        except Exception as exc:
            return (
                EvalItem(pair.question, f"<error: {exc}>", pair.gold_answers, 0, flagged=True),
                None,
            )

    if jobs > 1 and reader.supports_concurrency:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_item, pairs))
    else:
        results = [run_item(pair) for pair in pairs]

    items = tuple(item for item, _ in results)
    if collect_traces is not None:
        collect_traces.extend(trace for _, trace in results if trace is not None)
    n_correct = sum(item.score for item in items)
    return EvalReport(
        n_items=len(items),
        n_correct=n_correct,
        em=n_correct / len(items),
        per_item=items,
        mode=mode,
        n_flagged=sum(1 for item in items if item.flagged),
    )


def generate_qa(
    kg: KnowledgeGraph,
    templates: Sequence[tuple],
    n_hops: int,
) -> list[QAPair]:
    """Template-expand a KG into QA pairs.

    1-hop templates are (relation, template) and yield, per distinct
    (head, relation), the question with [HEAD] replaced by "[head]" and all
    tails as golds. 2-hop templates are ((relation1, relation2), template)
    and the golds are every endpoint reachable via relation1 then relation2.
    """
    if n_hops not in (1, 2):
        raise ValueError("generate_qa supports n_hops of 1 or 2")
    pairs: list[QAPair] = []
    emitted = 0
    for template_relations, template in templates:
        if HEAD_PLACEHOLDER not in template:
            raise TemplateError(f"template missing {HEAD_PLACEHOLDER}: {template!r}")
        if n_hops == 1:
            relation = template_relations if isinstance(template_relations, str) else template_relations[0]
            # entity identity is canonical-lowercase; display keeps first-seen surface
            golds_by_head: dict[str, list[str]] = {}
            surface: dict[str, str] = {}
            for t in kg.triples:
                if t.relation != relation:
                    continue
                key = canonical_entity(t.head)
                golds = golds_by_head.setdefault(key, [])
                surface.setdefault(key, t.head)
                if t.tail not in golds:
                    golds.append(t.tail)
            for key, golds in golds_by_head.items():
                emitted += 1
                question = template.replace(HEAD_PLACEHOLDER, f"[{surface[key]}]")
                pairs.append(QAPair(question, tuple(golds), 1, emitted))
        else:
            r1, r2 = template_relations
            hop2_tails: dict[str, list[str]] = {}
            for u in kg.triples:
                if u.relation == r2:
                    hop2_tails.setdefault(canonical_entity(u.head), []).append(u.tail)
            golds_by_head = {}
            surface = {}
            for t in kg.triples:
                if t.relation != r1:
                    continue
                key = canonical_entity(t.head)
                golds = golds_by_head.setdefault(key, [])
                surface.setdefault(key, t.head)
                for endpoint in hop2_tails.get(canonical_entity(t.tail), ()):
                    if endpoint not in golds:
                        golds.append(endpoint)
            for key, golds in golds_by_head.items():
                if not golds:
                    continue  # chain never completes for this head
                emitted += 1
                question = template.replace(HEAD_PLACEHOLDER, f"[{surface[key]}]")
                pairs.append(QAPair(question, tuple(golds), 2, emitted))
    return pairs


def write_qa_file(pairs: Sequence[QAPair], path) -> None:
    """The standard dataset format: question<TAB>a1|a2|... one per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(f"{pair.question}\t{'|'.join(pair.gold_answers)}\n")


def write_report(report: EvalReport, json_path, text_path) -> None:
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(report.summary_line() + "\n")
