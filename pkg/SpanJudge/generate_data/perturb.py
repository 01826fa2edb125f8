"""Synthetic prediction corpora with a known mismatch ledger.

Each gold entity independently receives at most one operation:

    extend_span  -> Type 5 (k tokens added on one side)
    shrink_span  -> Type 5 (k tokens removed from one side)
    split_entity -> two Type 5 on the same gold
    relabel      -> Type 3
    drop_entity  -> Type 2
    (untouched)  -> ExactMatch

and every free token run (outside all gold and predicted spans) may receive
a spurious prediction, a Type 1. An operation that would leave its sentence,
enter another gold span or another prediction, or has too few tokens or
labels to work with is skipped and the entity is copied unchanged.
"""

import json
import logging
from enum import Enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence, Optional, Any, TypeVar

import numpy as np

from SpanJudge.util.parallel import loop_rv
from SpanJudge.common.config import Config, default_config, deep_update
from SpanJudge.common.corpus import Corpus, Document, EntityMention, Source, make_mention
from SpanJudge.evaluate.span_matcher import MismatchType

logger = logging.getLogger(__name__)

class PlanError(RuntimeError):
    pass

class Operation(Enum):
    KEEP = "keep"
    EXTEND_SPAN = "extend_span"
    SHRINK_SPAN = "shrink_span"
    SPLIT_ENTITY = "split_entity"
    RELABEL = "relabel"
    DROP_ENTITY = "drop_entity"
    INSERT_SPURIOUS = "insert_spurious"

ENTITY_OPERATIONS = [Operation.EXTEND_SPAN, Operation.SHRINK_SPAN, Operation.SPLIT_ENTITY,
    Operation.RELABEL, Operation.DROP_ENTITY]

_Self = TypeVar('_Self', bound='PerturbationPlan')

@dataclass(frozen=True)
class PerturbationPlan:
    seed: int = 13
    extend_span: float = 0.
    shrink_span: float = 0.
    split_entity: float = 0.
    relabel: float = 0.
    drop_entity: float = 0.
    insert_spurious: float = 0.
    max_extend: int = 2
    max_shrink: int = 2

    def __post_init__(self) -> None:
        for op in ENTITY_OPERATIONS + [Operation.INSERT_SPURIOUS]:
            rate = getattr(self, op.value)
            if not 0. <= rate <= 1.:
                raise PlanError("rate for {} must be in [0, 1], not {}".format(op.value, rate))
        if sum(getattr(self, op.value) for op in ENTITY_OPERATIONS) > 1. + 1e-12:
            raise PlanError("per-entity rates sum to more than 1")
        if self.max_extend < 1 or self.max_shrink < 1:
            raise PlanError("max_extend and max_shrink must be at least 1")

    @classmethod
    def from_config(cls: type[_Self], config: Config = default_config, overrides: Optional[dict] = None) -> _Self:
        """Plan from the perturb section, optionally updated by a plan file's contents"""
        section = config.section("perturb")
        if overrides is not None:
            section = deep_update(section, overrides)
        rates = section.get("rates", {})
        unknown = set(rates) - {op.value for op in ENTITY_OPERATIONS + [Operation.INSERT_SPURIOUS]}
        if len(unknown) > 0:
            raise PlanError("unknown perturbation(s): {}".format(", ".join(sorted(unknown))))
        try:
            return cls(seed=int(section["seed"]),
                max_extend=int(section.get("max_extend", 2)),
                max_shrink=int(section.get("max_shrink", 2)),
                **{name: float(rate) for name, rate in rates.items()})
        except (TypeError, ValueError) as e:
            raise PlanError("invalid perturbation plan: {}".format(e))

    def entity_thresholds(self) -> list[tuple[float, Operation]]:
        thresholds, total = [], 0.
        for op in ENTITY_OPERATIONS:
            total += getattr(self, op.value)
            thresholds.append((total, op))
        return thresholds

@dataclass(frozen=True)
class ExpectedRecord:
    doc_id: str
    operation: Operation
    kind: MismatchType
    pred: Optional[EntityMention]
    gold: Optional[EntityMention]

@dataclass
class ExpectedLedger:
    records: list[ExpectedRecord] = field(default_factory=list)
    skipped: Counter = field(default_factory=Counter)

    @property
    def counts(self) -> Counter:
        counts = Counter({kind: 0 for kind in MismatchType})
        counts.update(r.kind for r in self.records)
        return counts

    @property
    def operations(self) -> Counter:
        """Applied operations, one per affected entity or inserted prediction"""
        ops = Counter()
        seen = set()
        for r in self.records:
            key = (r.doc_id, r.gold.token_span if r.gold is not None else ("spurious", r.pred.token_span))
            if key not in seen:
                seen.add(key)
                ops[r.operation] += 1
        return ops

class _DocumentPerturber(object):
    def __init__(self, doc: Document, plan: PerturbationPlan, labels: Sequence[str], rng: np.random.Generator) -> None:
        self.doc = doc
        self.plan = plan
        self.labels = list(labels)
        self.rng = rng
        n = len(doc.tokens)
        self.gold_owner = np.full(n, -1)
        for i, g in enumerate(doc.gold_entities):
            self.gold_owner[g.start:g.end] = i
        self.taken = np.zeros(n, dtype=bool)
        self.sent = np.array([t.sent_index for t in doc.tokens])
        self.spans = []
        self.expected = []
        self.skipped = Counter()

    def _free(self, start: int, end: int, owner: int) -> bool:
        """Tokens [start, end) may join a prediction for gold `owner`"""
        if start < 0 or end > len(self.doc.tokens):
            return False
        block = slice(start, end)
        return bool(np.all((self.gold_owner[block] == -1) | (self.gold_owner[block] == owner)) and \
            not np.any(self.taken[block]))

    def _place(self, start: int, end: int, label: str, op: Operation, kind: MismatchType,
               gold: Optional[EntityMention]) -> None:
        self.taken[start:end] = True
        self.spans.append((start, end, label))
        pred = make_mention(self.doc.doc_id, self.doc.tokens, start, end, label, Source.PREDICTED)
        self.expected.append(ExpectedRecord(self.doc.doc_id, op, kind, pred, gold))

    def _keep(self, g: EntityMention) -> None:
        self._place(g.start, g.end, g.label, Operation.KEEP, MismatchType.EXACT_MATCH, g)

    def _extend(self, i: int, g: EntityMention) -> bool:
        k = int(self.rng.integers(1, self.plan.max_extend+1))
        if self.rng.random() < 0.5:
            start, end, edge = g.start-k, g.end, g.start
        else:
            start, end, edge = g.start, g.end+k, g.end-1
        if not self._free(start, end, i) or np.any(self.sent[start:end] != self.sent[edge]):
            return False
        self._place(start, end, g.label, Operation.EXTEND_SPAN, MismatchType.TYPE5, g)
        return True

    def _shrink(self, g: EntityMention) -> bool:
        k = int(self.rng.integers(1, self.plan.max_shrink+1))
        left = self.rng.random() < 0.5
        if len(g) - k < 1:
            return False
        start, end = (g.start+k, g.end) if left else (g.start, g.end-k)
        self._place(start, end, g.label, Operation.SHRINK_SPAN, MismatchType.TYPE5, g)
        return True

    def _split(self, g: EntityMention) -> bool:
        if len(g) < 2:
            return False
        cut = int(self.rng.integers(g.start+1, g.end))
        self._place(g.start, cut, g.label, Operation.SPLIT_ENTITY, MismatchType.TYPE5, g)
        self._place(cut, g.end, g.label, Operation.SPLIT_ENTITY, MismatchType.TYPE5, g)
        return True

    def _relabel(self, g: EntityMention) -> bool:
        others = [l for l in self.labels if l != g.label]
        if len(others) == 0:
            return False
        label = others[int(self.rng.integers(len(others)))]
        self._place(g.start, g.end, label, Operation.RELABEL, MismatchType.TYPE3, g)
        return True

    def _drop(self, g: EntityMention) -> bool:
        self.expected.append(ExpectedRecord(self.doc.doc_id, Operation.DROP_ENTITY, MismatchType.TYPE2, None, g))
        return True

    def _choose(self) -> Operation:
        u = self.rng.random()
        for threshold, op in self.plan.entity_thresholds():
            if u < threshold:
                return op
        return Operation.KEEP

    def _free_runs(self) -> list[tuple[int, int]]:
        runs, start = [], None
        for i in range(len(self.doc.tokens)):
            free = self.gold_owner[i] == -1 and not self.taken[i]
            if start is not None and (not free or self.sent[i] != self.sent[start]):
                runs.append((start, i))
                start = None
            if start is None and free:
                start = i
        if start is not None:
            runs.append((start, len(self.doc.tokens)))
        return runs

    def run(self) -> tuple[Document, list[ExpectedRecord], Counter]:
        for i, g in enumerate(self.doc.gold_entities):
            op = self._choose()
            applied = {
                Operation.KEEP: lambda: False,
                Operation.EXTEND_SPAN: lambda: self._extend(i, g),
                Operation.SHRINK_SPAN: lambda: self._shrink(g),
                Operation.SPLIT_ENTITY: lambda: self._split(g),
                Operation.RELABEL: lambda: self._relabel(g),
                Operation.DROP_ENTITY: lambda: self._drop(g),
            }[op]()
            if not applied:
                if op != Operation.KEEP:
                    self.skipped[op] += 1
                    logger.debug("Skipped {} for [{}, {}) in {}".format(op.value, g.start, g.end, self.doc.doc_id))
                self._keep(g)

        if self.plan.insert_spurious > 0 and len(self.labels) > 0:
            for start, end in self._free_runs():
                if self.rng.random() >= self.plan.insert_spurious:
                    continue
                length = int(self.rng.integers(1, min(3, end-start)+1))
                offset = start + int(self.rng.integers(0, end-start-length+1))
                label = self.labels[int(self.rng.integers(len(self.labels)))]
                self._place(offset, offset+length, label, Operation.INSERT_SPURIOUS, MismatchType.TYPE1, None)

        pred_doc = Document.build(self.doc.doc_id, self.doc.token_texts, self.doc.sent_starts, pred_spans=self.spans)
        return pred_doc, self.expected, self.skipped

def _perturb_document(item: tuple[int, Document], plan: PerturbationPlan, labels: Sequence[str]):
    index, doc = item
    rng = np.random.default_rng([plan.seed, index])
    return _DocumentPerturber(doc, plan, labels, rng).run()

def perturb(gold: Corpus, plan: PerturbationPlan, n_jobs: int = 1) -> tuple[Corpus, ExpectedLedger]:
    """Derive a prediction corpus from the gold mentions of `gold`.

    Documents are visited in doc_id order and document i draws from a
    generator seeded with (plan.seed, i), so the output only depends on the
    corpus and the plan.

    Returns
    -------
    pred : Corpus
        Same documents and tokens, carrying only predicted mentions
    expected : ExpectedLedger
        What the matcher must report for (gold, pred)
    """
    documents = sorted(gold.documents, key=lambda d: d.doc_id)
    results = loop_rv(_perturb_document, list(enumerate(documents)), plan, gold.label_set, n_jobs=n_jobs)

    expected = ExpectedLedger()
    pred_docs = []
    for pred_doc, records, skipped in results:
        pred_docs.append(pred_doc)
        expected.records.extend(records)
        expected.skipped.update(skipped)

    pred = Corpus.from_documents(pred_docs)
    logger.info("Perturbed {} documents: {}; skipped {}".format(len(pred_docs),
        ", ".join("{}={}".format(op.value, n) for op, n in sorted(expected.operations.items(), key=lambda x: x[0].value)),
        sum(expected.skipped.values())))
    return pred, expected

def _mention_record(m: Optional[EntityMention]) -> Optional[dict[str, Any]]:
    if m is None:
        return None
    return {"span": [m.start, m.end], "label": m.label, "text": m.text}

def write_expected_ledger(expected: ExpectedLedger, path: str) -> None:
    """One line per expected record, in the layout of the mismatch ledger plus the operation"""
    with open(path, "w", encoding="utf-8") as fh:
        for r in expected.records:
            print(json.dumps({
                "doc_id": r.doc_id,
                "kind": r.kind.value,
                "operation": r.operation.value,
                "pred": _mention_record(r.pred),
                "gold": _mention_record(r.gold),
                "overlap_tokens": r.pred.overlap(r.gold) if r.pred is not None and r.gold is not None else 0
            }, ensure_ascii=False), file=fh)
