"""Classify every gold/prediction relation of a document into an exact match or
one of five mismatch types.

The pairing is staged and deterministic:

1. identical span and label -> ExactMatch (both sides consumed)
2. identical span, different label -> Type 3 (both sides consumed)
3. a remaining prediction overlapping a gold of the same label -> Type 5
4. a remaining prediction overlapping only golds of other labels -> Type 4
5. leftover predictions -> Type 1; golds never consumed or covered -> Type 2

In stages 3 and 4 the prediction is anchored to the overlapping gold with the
most shared tokens, then the leftmost start, then the longest span. The anchor
is marked covered but stays available, so one gold can anchor several
predictions (a phrase split in two by the tagger gives two Type 5 records).
"""

import json
import logging
from bisect import bisect_right
from enum import Enum
from dataclasses import dataclass
from collections import Counter
from typing import Union, Sequence, Iterator, Any

import pandas as pd

from SpanJudge.util import read_bytes, decode_utf8, pct
from SpanJudge.util.parallel import loop_rv
from SpanJudge.common.corpus import Corpus, Document, EntityMention, Source, ParseError

logger = logging.getLogger(__name__)

class MatchContractError(RuntimeError):
    pass

class MismatchType(Enum):
    EXACT_MATCH = "ExactMatch"
    TYPE1 = "Type1_CompleteFalsePositive"
    TYPE2 = "Type2_CompleteFalseNegative"
    TYPE3 = "Type3_WrongLabelRightSpan"
    TYPE4 = "Type4_WrongLabelOverlapSpan"
    TYPE5 = "Type5_RightLabelOverlapSpan"

    @property
    def is_error(self) -> bool:
        return self != MismatchType.EXACT_MATCH

    @property
    def short_name(self) -> str:
        return "Exact" if self == MismatchType.EXACT_MATCH else self.value.split("_")[0]

ERROR_TYPES = [k for k in MismatchType if k.is_error]

class GoldStatus(Enum):
    EXACT = "exact"
    TYPE3 = "type3"
    COVERED = "covered"
    TYPE2 = "type2"

@dataclass(frozen=True)
class MatchRecord:
    record_id: str
    kind: MismatchType
    pred: Union[EntityMention, None]
    gold: Union[EntityMention, None]
    overlap_tokens: int

    def __post_init__(self) -> None:
        if self.kind == MismatchType.TYPE1:
            ok = self.pred is not None and self.gold is None
        elif self.kind == MismatchType.TYPE2:
            ok = self.gold is not None and self.pred is None
        else:
            ok = self.gold is not None and self.pred is not None
        if not ok:
            raise MatchContractError("record {} of kind {} has the wrong sides".format(self.record_id, self.kind.value))

        overlap = self.pred.overlap(self.gold) if self.pred is not None and self.gold is not None else 0
        if overlap != self.overlap_tokens:
            raise MatchContractError("record {} reports {} overlapping tokens, not {}".format(
                self.record_id, self.overlap_tokens, overlap))

    @property
    def doc_id(self) -> str:
        return self.pred.doc_id if self.pred is not None else self.gold.doc_id

    @property
    def label(self) -> str:
        """Prediction label, or the gold label for Type 2 records"""
        return self.pred.label if self.pred is not None else self.gold.label

def _anchor_key(pred: EntityMention):
    def key(gold: EntityMention):
        return (pred.overlap(gold), -gold.start, len(gold))
    return key

def _record_order(item: tuple[MismatchType, Union[EntityMention, None], Union[EntityMention, None]]):
    kind, pred, gold = item
    position = pred.start if pred is not None else gold.start
    return (position, 0 if pred is not None else 1, gold.start if gold is not None else -1)

def classify_document(gold: Sequence[EntityMention], pred: Sequence[EntityMention],
                      doc_id: Union[str, None] = None) -> list[MatchRecord]:
    """Classify the relations between the gold and predicted mentions of one document.

    Parameters
    ----------
    gold : list of EntityMention
        Flat (non-overlapping) gold mentions
    pred : list of EntityMention
        Flat predicted mentions of the same document
    doc_id : str or None
        Used for record ids; taken from the mentions when not given

    Returns
    -------
    Records ordered by prediction start (gold start for Type 2), with ids
    '<doc_id>:<ordinal>'

    Raises
    ------
    MatchContractError
        Overlapping mentions within one list
    """
    golds = sorted(gold, key=lambda m: (m.start, m.end))
    preds = sorted(pred, key=lambda m: (m.start, m.end))
    for name, mentions in (("gold", golds), ("predicted", preds)):
        for a, b in zip(mentions, mentions[1:]):
            if b.start < a.end:
                raise MatchContractError("overlapping {} mentions [{}, {}) and [{}, {}) in {}".format(
                    name, a.start, a.end, b.start, b.end, a.doc_id))

    if doc_id is None:
        if len(golds) + len(preds) == 0:
            return []
        doc_id = golds[0].doc_id if golds else preds[0].doc_id

    gold_by_span = {g.token_span: g for g in golds}
    gold_ends = [g.end for g in golds]
    found = []
    consumed = set()
    covered = set()

    #Stages 1-2: spans are unique within a flat list, so a prediction can have
    #at most one span-identical gold and the two stages never compete
    remaining = []
    for p in preds:
        g = gold_by_span.get(p.token_span)
        if g is None:
            remaining.append(p)
        elif g.label == p.label:
            found.append((MismatchType.EXACT_MATCH, p, g))
            consumed.add(g.token_span)
        else:
            found.append((MismatchType.TYPE3, p, g))
            consumed.add(g.token_span)

    #Stages 3-5: golds are sorted by start and flat, so also sorted by end
    for p in remaining:
        overlapping = []
        for j in range(bisect_right(gold_ends, p.start), len(golds)):
            if golds[j].start >= p.end:
                break
            overlapping.append(golds[j])

        same_label = [g for g in overlapping if g.label == p.label]
        if len(same_label) > 0:
            anchor = max(same_label, key=_anchor_key(p))
            found.append((MismatchType.TYPE5, p, anchor))
            covered.add(anchor.token_span)
        elif len(overlapping) > 0:
            anchor = max(overlapping, key=_anchor_key(p))
            found.append((MismatchType.TYPE4, p, anchor))
            covered.add(anchor.token_span)
        else:
            found.append((MismatchType.TYPE1, p, None))

    for g in golds:
        if g.token_span not in consumed and g.token_span not in covered:
            found.append((MismatchType.TYPE2, None, g))

    found.sort(key=_record_order)
    return [MatchRecord("{}:{}".format(doc_id, i), kind, p, g, p.overlap(g) if p is not None and g is not None else 0) \
        for i, (kind, p, g) in enumerate(found)]

def _classify(document: Document) -> list[MatchRecord]:
    return classify_document(document.gold_entities, document.pred_entities, doc_id=document.doc_id)

class MatchReport(object):
    """The ledger of every classified relation in a corpus plus its aggregates

    Parameters
    ----------
    records : list of MatchRecord
        Records sorted by doc_id, then position
    """
    def __init__(self, records: Sequence[MatchRecord]) -> None:
        self.records = tuple(records)
        self.counts = Counter({kind: 0 for kind in MismatchType})
        self.counts.update(r.kind for r in self.records)

        self.gold_status = {}
        for r in self.records:
            if r.gold is None:
                continue
            status = {
                MismatchType.EXACT_MATCH: GoldStatus.EXACT,
                MismatchType.TYPE3: GoldStatus.TYPE3,
                MismatchType.TYPE2: GoldStatus.TYPE2,
            }.get(r.kind, GoldStatus.COVERED)
            prev = self.gold_status.get(r.gold)
            if prev is None or _STATUS_RANK[status] < _STATUS_RANK[prev]:
                self.gold_status[r.gold] = status

        self.n_pred = sum(1 for r in self.records if r.pred is not None)
        self.n_gold = len(self.gold_status)
        self._by_id = {r.record_id: r for r in self.records}

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[MatchRecord]:
        return iter(self.records)

    def __getitem__(self, record_id: str) -> MatchRecord:
        return self._by_id[record_id]

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._by_id

    def of_kind(self, kind: MismatchType) -> list[MatchRecord]:
        return [r for r in self.records if r.kind == kind]

    @property
    def type5_records(self) -> list[MatchRecord]:
        return self.of_kind(MismatchType.TYPE5)

    @property
    def golds(self) -> list[EntityMention]:
        return list(self.gold_status.keys())

    @property
    def predictions(self) -> list[EntityMention]:
        return [r.pred for r in self.records if r.pred is not None]

    @property
    def n_errors(self) -> int:
        return sum(self.counts[k] for k in ERROR_TYPES)

    @property
    def labels(self) -> list[str]:
        return sorted({r.label for r in self.records} | {g.label for g in self.golds})

    def status_counts(self) -> Counter:
        counts = Counter({s: 0 for s in GoldStatus})
        counts.update(self.gold_status.values())
        return counts

    def to_frame(self) -> pd.DataFrame:
        """One row per record"""
        return pd.DataFrame([{
            "record_id": r.record_id,
            "doc_id": r.doc_id,
            "kind": r.kind.value,
            "label": r.label,
            "pred_start": r.pred.start if r.pred is not None else None,
            "pred_end": r.pred.end if r.pred is not None else None,
            "pred_label": r.pred.label if r.pred is not None else None,
            "pred_text": r.pred.text if r.pred is not None else None,
            "gold_start": r.gold.start if r.gold is not None else None,
            "gold_end": r.gold.end if r.gold is not None else None,
            "gold_label": r.gold.label if r.gold is not None else None,
            "gold_text": r.gold.text if r.gold is not None else None,
            "overlap_tokens": r.overlap_tokens
        } for r in self.records], columns=["record_id", "doc_id", "kind", "label", "pred_start", "pred_end",
            "pred_label", "pred_text", "gold_start", "gold_end", "gold_label", "gold_text", "overlap_tokens"])

    def label_counts(self) -> pd.DataFrame:
        """Record counts per label (rows) and kind (columns)"""
        df = pd.DataFrame([(r.label, r.kind.value) for r in self.records], columns=["label", "kind"])
        table = pd.crosstab(df["label"], df["kind"]) if len(df) > 0 else pd.DataFrame()
        table = table.reindex(index=self.labels, columns=[k.value for k in MismatchType], fill_value=0)
        table.index.name = "label"
        table.columns.name = None
        return table

    def label_totals(self) -> pd.DataFrame:
        """|gold| and |pred| per label"""
        gold = Counter(g.label for g in self.golds)
        pred = Counter(p.label for p in self.predictions)
        table = pd.DataFrame({
            "gold": [gold.get(l, 0) for l in self.labels],
            "pred": [pred.get(l, 0) for l in self.labels]},
            index=pd.Index(self.labels, name="label"), dtype=int)
        return table

    def summary(self) -> dict[str, Any]:
        return {
            "gold": self.n_gold,
            "pred": self.n_pred,
            "errors": self.n_errors,
            "counts": {k.value: self.counts[k] for k in MismatchType}
        }

_STATUS_RANK = {GoldStatus.EXACT: 0, GoldStatus.TYPE3: 1, GoldStatus.COVERED: 2, GoldStatus.TYPE2: 3}

def classify_corpus(corpus: Corpus, n_jobs: int = 1) -> MatchReport:
    """Classify every document of a paired corpus; records are ordered by doc_id
    then position whatever the number of workers"""
    documents = sorted(corpus.documents, key=lambda d: d.doc_id)
    results = loop_rv(_classify, documents, n_jobs=n_jobs)
    report = MatchReport([r for records in results for r in records])
    logger.info("Classified {} records over {} documents: {}".format(len(report), len(documents),
        ", ".join("{}={}".format(k.short_name, report.counts[k]) for k in MismatchType)))
    return report

def error_distribution(report: MatchReport, by_label: bool = False) -> pd.DataFrame:
    """Count and percentage share of each mismatch type among all errors.

    With by_label, one row per label with a count and a share column per type
    (shares are relative to that label's errors).
    """
    names = [k.value for k in ERROR_TYPES]
    if not by_label:
        counts = [report.counts[k] for k in ERROR_TYPES]
        return pd.DataFrame({"count": counts, "share": [pct(c, report.n_errors) for c in counts]},
            index=pd.Index(names, name="kind"))

    table = report.label_counts()[names]
    totals = table.sum(axis=1)
    shares = table.div(totals.where(totals > 0), axis=0).mul(100.).round(2).fillna(0.)
    shares.columns = ["{} share".format(c) for c in shares.columns]
    return pd.concat([table, shares], axis=1)

def _mention_record(m: Union[EntityMention, None]) -> Union[dict, None]:
    if m is None:
        return None
    return {"span": [m.start, m.end], "label": m.label, "text": m.text}

def ledger_lines(report: MatchReport) -> Iterator[str]:
    for r in report.records:
        yield json.dumps({
            "record_id": r.record_id,
            "doc_id": r.doc_id,
            "kind": r.kind.value,
            "pred": _mention_record(r.pred),
            "gold": _mention_record(r.gold),
            "overlap_tokens": r.overlap_tokens
        }, ensure_ascii=False)

def write_ledger(report: MatchReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in ledger_lines(report):
            print(line, file=fh)

def _mention(record: Any, doc_id: str, source: Source, line_no: int) -> Union[EntityMention, None]:
    if record is None:
        return None
    try:
        start, end = record["span"]
        return EntityMention(doc_id, int(start), int(end), record["label"], record["text"], source)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError("invalid {} mention: {}".format(source.value, e), line=line_no)

def parse_ledger(content: Union[bytes, str]) -> MatchReport:
    text, bad_line = decode_utf8(content)
    if text is None:
        raise ParseError("ledger is not valid UTF-8", line=bad_line)
    records = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        if line.strip() == "":
            continue
        try:
            obj = json.loads(line)
            doc_id = obj["doc_id"]
            kind = MismatchType(obj["kind"])
            records.append(MatchRecord(obj["record_id"], kind,
                _mention(obj.get("pred"), doc_id, Source.PREDICTED, line_no),
                _mention(obj.get("gold"), doc_id, Source.GOLD, line_no),
                int(obj["overlap_tokens"])))
        except json.JSONDecodeError as e:
            raise ParseError("invalid JSON: {}".format(e.msg), line=line_no)
        except (KeyError, ValueError, TypeError, MatchContractError) as e:
            raise ParseError("invalid ledger record: {}".format(e), line=line_no)
    return MatchReport(records)

def read_ledger(path: str) -> MatchReport:
    return parse_ledger(read_bytes(path))
