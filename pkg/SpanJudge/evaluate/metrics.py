"""Entity-level precision, recall and F1 under several counting conventions.

Prediction-side and gold-side true positives are counted separately: a gold
covered by two credited predictions gives precision credit 2 and recall
credit 1. Every convention satisfies tp_pred + fp = |pred| and
tp_gold + fn = |gold|, and 0/0 is taken as 0.
"""

import logging
from enum import Enum
from collections import Counter
from dataclasses import dataclass
from typing import Union, Mapping, Any, Optional

import pandas as pd

from SpanJudge.util import pct
from SpanJudge.evaluate.span_matcher import MatchReport, MismatchType, GoldStatus
from SpanJudge.evaluate.decisions import UncoveredRecordsError

logger = logging.getLogger(__name__)

class Convention(Enum):
    EXACT = "Exact"
    RELAXED = "Relaxed"
    SEMEVAL_STRICT = "SemEvalStrict"
    SEMEVAL_EXACT_BOUNDARY = "SemEvalExactBoundary"
    SEMEVAL_PARTIAL_BOUNDARY = "SemEvalPartialBoundary"
    SEMEVAL_TYPE = "SemEvalType"
    LEARNING_BASED = "LearningBased"
    HUMAN_STRICT = "HumanStrict"
    HUMAN_FORGIVING = "HumanForgiving"

    @property
    def label_blind(self) -> bool:
        return self in (Convention.SEMEVAL_EXACT_BOUNDARY, Convention.SEMEVAL_PARTIAL_BOUNDARY)

@dataclass(frozen=True)
class PRF:
    tp_pred: int
    tp_gold: int
    fp: int
    fn: int
    convention: Convention
    label: Union[str, None] = None

    @property
    def precision(self) -> float:
        denom = self.tp_pred + self.fp
        return self.tp_pred / denom if denom > 0 else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp_gold + self.fn
        return self.tp_gold / denom if denom > 0 else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def relabel(self, convention: Convention) -> "PRF":
        return PRF(self.tp_pred, self.tp_gold, self.fp, self.fn, convention, self.label)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tp_pred": self.tp_pred,
            "tp_gold": self.tp_gold,
            "fp": self.fp,
            "fn": self.fn,
            "precision": pct(self.tp_pred, self.tp_pred + self.fp),
            "recall": pct(self.tp_gold, self.tp_gold + self.fn),
            "f1": round(100. * self.f1, 2)
        }

@dataclass(frozen=True)
class _Tally:
    n_pred: Counter
    n_gold: Counter
    tp_pred: Counter
    tp_gold: Counter

    def prf(self, convention: Convention, label: Union[str, None] = None) -> PRF:
        if label is None:
            n_pred, n_gold = sum(self.n_pred.values()), sum(self.n_gold.values())
            tp_pred, tp_gold = sum(self.tp_pred.values()), sum(self.tp_gold.values())
        else:
            n_pred, n_gold = self.n_pred[label], self.n_gold[label]
            tp_pred, tp_gold = self.tp_pred[label], self.tp_gold[label]
        return PRF(tp_pred, tp_gold, n_pred-tp_pred, n_gold-tp_gold, convention, label)

def _tally(report: MatchReport, accepted: Union[set, None]) -> _Tally:
    """Per-label counts crediting exact matches plus the Type 5 records in
    `accepted` (all of them when None)"""
    n_pred, tp_pred = Counter(), Counter()
    credited = set()
    for r in report.records:
        if r.pred is None:
            continue
        n_pred[r.pred.label] += 1
        if r.kind == MismatchType.EXACT_MATCH or \
          (r.kind == MismatchType.TYPE5 and (accepted is None or r.record_id in accepted)):
            tp_pred[r.pred.label] += 1
            credited.add(r.gold)
    n_gold = Counter(g.label for g in report.golds)
    tp_gold = Counter(g.label for g in credited)
    return _Tally(n_pred, n_gold, tp_pred, tp_gold)

def _credited(report: MatchReport, accepted: Union[set, None], convention: Convention,
              label: Union[str, None] = None) -> PRF:
    return _tally(report, accepted).prf(convention, label)

def exact_f(report: MatchReport, label: Union[str, None] = None) -> PRF:
    """Credit a prediction only when span and label both match a gold mention"""
    return _credited(report, set(), Convention.EXACT, label)

def relaxed_f(report: MatchReport, label: Union[str, None] = None) -> PRF:
    """Also credit every same-label overlapping (Type 5) prediction and its anchor gold"""
    return _credited(report, None, Convention.RELAXED, label)

def accepted_ids(report: MatchReport, decisions: Mapping[str, Any], what: str = "decision") -> set:
    """Ids of the accepted Type 5 records. Decisions need an `accepted` attribute

    Raises
    ------
    UncoveredRecordsError
        A Type 5 record without a decision
    """
    type5 = [r.record_id for r in report.type5_records]
    missing = [rid for rid in type5 if rid not in decisions]
    if len(missing) > 0:
        raise UncoveredRecordsError(missing, what=what)
    return {rid for rid in type5 if decisions[rid].accepted}

def learning_based_f(report: MatchReport, decisions: Mapping[str, Any], label: Union[str, None] = None,
                     convention: Convention = Convention.LEARNING_BASED, what: str = "decision") -> PRF:
    """Reward exact matches and accepted Type 5 mismatches, penalize everything else

    Parameters
    ----------
    report : MatchReport
    decisions : dict record_id -> Decision
        Must cover every Type 5 record of the report
    """
    return _credited(report, accepted_ids(report, decisions, what=what), convention, label)

def _boundary(report: MatchReport, kinds: set, statuses: set, convention: Convention) -> PRF:
    tp_pred = sum(report.counts[k] for k in kinds)
    tp_gold = sum(1 for s in report.gold_status.values() if s in statuses)
    return PRF(tp_pred, tp_gold, report.n_pred-tp_pred, report.n_gold-tp_gold, convention)

def semeval_modes(report: MatchReport) -> dict[Convention, PRF]:
    """The four SemEval-2013 matching modes.

    Strict is the exact convention and type match is the relaxed one. Exact
    boundary credits span-identical pairs whatever their labels; partial
    boundary credits every overlapping pair whatever their labels.
    """
    return {
        Convention.SEMEVAL_STRICT: exact_f(report).relabel(Convention.SEMEVAL_STRICT),
        Convention.SEMEVAL_EXACT_BOUNDARY: _boundary(report,
            {MismatchType.EXACT_MATCH, MismatchType.TYPE3},
            {GoldStatus.EXACT, GoldStatus.TYPE3},
            Convention.SEMEVAL_EXACT_BOUNDARY),
        Convention.SEMEVAL_PARTIAL_BOUNDARY: _boundary(report,
            {MismatchType.EXACT_MATCH, MismatchType.TYPE3, MismatchType.TYPE4, MismatchType.TYPE5},
            {GoldStatus.EXACT, GoldStatus.TYPE3, GoldStatus.COVERED},
            Convention.SEMEVAL_PARTIAL_BOUNDARY),
        Convention.SEMEVAL_TYPE: relaxed_f(report).relabel(Convention.SEMEVAL_TYPE),
    }

class MetricSuite(object):
    """Overall (micro-averaged) scores per convention plus per-label breakdowns
    for the label-aware conventions"""
    def __init__(self, overall: Mapping[Convention, PRF], per_label: Mapping[Convention, Mapping[str, PRF]]) -> None:
        self.overall = dict(overall)
        self.per_label = {c: dict(v) for c, v in per_label.items()}

    def __getitem__(self, convention: Convention) -> PRF:
        return self.overall[convention]

    def __contains__(self, convention: Convention) -> bool:
        return convention in self.overall

    def macro(self, convention: Convention) -> dict[str, float]:
        """Unweighted mean of per-label P, R and F1 (informational)"""
        scores = list(self.per_label.get(convention, {}).values())
        if len(scores) == 0:
            return {"precision": 0.0, "recall": 0.0, "f1": 0.0}
        return {
            "precision": round(100. * sum(s.precision for s in scores) / len(scores), 2),
            "recall": round(100. * sum(s.recall for s in scores) / len(scores), 2),
            "f1": round(100. * sum(s.f1 for s in scores) / len(scores), 2)
        }

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for convention, prf in self.overall.items():
            rows.append({"convention": convention.value, "label": "ALL", **prf.to_dict()})
            for label, label_prf in self.per_label.get(convention, {}).items():
                rows.append({"convention": convention.value, "label": label, **label_prf.to_dict()})
        return pd.DataFrame(rows, columns=["convention", "label", "tp_pred", "tp_gold", "fp", "fn",
            "precision", "recall", "f1"])

    def to_dict(self) -> dict[str, Any]:
        return {c.value: {
            "overall": prf.to_dict(),
            "macro": self.macro(c) if not c.label_blind else None,
            "per_label": {l: p.to_dict() for l, p in self.per_label.get(c, {}).items()}
        } for c, prf in self.overall.items()}

def compute_suite(report: MatchReport, decisions: Optional[Mapping[str, Any]] = None,
                  human: Optional[Mapping[Convention, Mapping[str, Any]]] = None) -> MetricSuite:
    """Every convention that the inputs allow.

    Parameters
    ----------
    report : MatchReport
    decisions : dict record_id -> Decision, optional
        Classifier decisions; adds the learning-based convention
    human : dict Convention -> (dict record_id -> decision-like), optional
        Accept maps derived from expert judgements (HumanStrict / HumanForgiving)
    """
    accept_sets = {Convention.EXACT: set(), Convention.RELAXED: None}
    if decisions is not None:
        accept_sets[Convention.LEARNING_BASED] = accepted_ids(report, decisions)
    for convention, judged in (human or {}).items():
        accept_sets[convention] = accepted_ids(report, judged, what="judgement")

    labels = report.labels
    overall, per_label = {}, {}
    for convention, accepted in accept_sets.items():
        tally = _tally(report, accepted)
        overall[convention] = tally.prf(convention)
        per_label[convention] = {l: tally.prf(convention, l) for l in labels}

    for convention, prf in semeval_modes(report).items():
        overall[convention] = prf
        if not convention.label_blind:
            source = Convention.EXACT if convention == Convention.SEMEVAL_STRICT else Convention.RELAXED
            per_label[convention] = {l: p.relabel(convention) for l, p in per_label[source].items()}

    order = list(Convention)
    overall = {c: overall[c] for c in order if c in overall}
    return MetricSuite(overall, per_label)
