"""Expert judgements of Type 5 mismatches.

Scores:
    1  the predicted entity is wrong and rejected
    2  correct but missing an important piece of information (partially accepted)
    3  correct but could be more complete (accepted)
    4  equally correct (accepted)
    5  more complete than the annotation (accepted)

A strict user accepts scores >= 3, a forgiving user scores >= 2.
"""

import io
import json
import logging
from enum import Enum
from dataclasses import dataclass, field
from typing import Union, Mapping, Sequence, Any, Optional

import numpy as np
import pandas as pd

from SpanJudge.util import read_bytes, decode_utf8, pct, ratio
from SpanJudge.evaluate.span_matcher import MatchReport
from SpanJudge.evaluate.metrics import PRF, Convention, learning_based_f
from SpanJudge.evaluate.decisions import Decision

logger = logging.getLogger(__name__)

SCORES = (1, 2, 3, 4, 5)

class JudgementError(RuntimeError):
    pass

@dataclass(frozen=True)
class JudgementRecord:
    record_id: str
    score: int

    def __post_init__(self) -> None:
        if isinstance(self.score, bool) or not isinstance(self.score, (int, np.integer)) or self.score not in SCORES:
            raise JudgementError("score for {} must be an integer in 1-5, not {}".format(self.record_id, self.score))

class UserProfile(Enum):
    STRICT = "StrictUser"
    FORGIVING = "ForgivingUser"

    @property
    def threshold(self) -> int:
        return 3 if self == UserProfile.STRICT else 2

    @property
    def convention(self) -> Convention:
        return Convention.HUMAN_STRICT if self == UserProfile.STRICT else Convention.HUMAN_FORGIVING

    def accepts(self, score: int) -> bool:
        return score >= self.threshold

class ExpertOutcome(Enum):
    ACCEPTED = "accepted"
    PARTIAL = "partially accepted"
    REJECTED = "rejected"

    @classmethod
    def of(cls, score: int) -> "ExpertOutcome":
        if score >= 3:
            return cls.ACCEPTED
        return cls.PARTIAL if score == 2 else cls.REJECTED

@dataclass(frozen=True)
class ProfileDecision:
    """An expert score seen through a user profile; usable wherever a Decision is"""
    record_id: str
    score: int
    profile: UserProfile

    @property
    def accepted(self) -> bool:
        return self.profile.accepts(self.score)

def _read_jsonl(text: str) -> list[tuple[int, Any, Any]]:
    rows = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        if line.strip() == "":
            continue
        try:
            obj = json.loads(line)
            rows.append((line_no, obj["record_id"], obj["score"]))
        except json.JSONDecodeError as e:
            raise JudgementError("line {}: invalid JSON: {}".format(line_no, e.msg))
        except (KeyError, TypeError) as e:
            raise JudgementError("line {}: missing field {}".format(line_no, e))
    return rows

def _read_tsv(text: str) -> list[tuple[int, Any, Any]]:
    try:
        df = pd.read_csv(io.StringIO(text), sep="\t", header=None, names=["record_id", "score"],
            dtype=str, skip_blank_lines=True, keep_default_na=False)
    except (pd.errors.ParserError, ValueError) as e:
        raise JudgementError("invalid judgement TSV: {}".format(e))
    if len(df) > 0 and df.iloc[0]["record_id"] == "record_id":
        df = df.iloc[1:]
    rows = []
    for i, (record_id, score) in enumerate(zip(df["record_id"], df["score"]), start=1):
        try:
            score = int(score)
        except (TypeError, ValueError):
            raise JudgementError("row {}: score '{}' is not an integer".format(i, score))
        rows.append((i, record_id.strip(), score))
    return rows

def parse_judgements(content: Union[bytes, str], report: MatchReport) -> list[JudgementRecord]:
    """Validate judgements against the Type 5 records of a report.

    Accepts line-delimited objects `{"record_id": str, "score": int}` or a
    two-column TSV `record_id<TAB>score`.

    Raises
    ------
    JudgementError
        Unknown record id (or one that is not a Type 5 record), score outside
        1-5, or a duplicate id
    """
    text, bad_line = decode_utf8(content)
    if text is None:
        raise JudgementError("line {}: judgement file is not valid UTF-8".format(bad_line))

    first = next((line for line in text.split("\n") if line.strip() != ""), "")
    rows = _read_jsonl(text) if first.lstrip().startswith("{") else _read_tsv(text)

    type5 = {r.record_id for r in report.type5_records}
    records = {}
    for where, record_id, score in rows:
        if record_id not in report:
            raise JudgementError("{}: unknown record id {}".format(where, record_id))
        if record_id not in type5:
            raise JudgementError("{}: record {} is a {} record, not Type 5".format(
                where, record_id, report[record_id].kind.value))
        if record_id in records:
            raise JudgementError("{}: duplicate judgement for {}".format(where, record_id))
        records[record_id] = JudgementRecord(record_id, score)

    coverage = judgement_coverage(list(records.values()), report)
    logger.info("Loaded {} judgements covering {:.2f}% of Type 5 records".format(len(records), 100*coverage))
    if coverage < 1.:
        logger.warning("{} Type 5 records are unjudged".format(len(type5)-len(records)))
    return list(records.values())

def load_judgements(path: str, report: MatchReport) -> list[JudgementRecord]:
    return parse_judgements(read_bytes(path), report)

def judgement_coverage(records: Sequence[JudgementRecord], report: MatchReport) -> float:
    """Fraction of the report's Type 5 records that carry a judgement"""
    type5 = {r.record_id for r in report.type5_records}
    return ratio(len(type5 & {j.record_id for j in records}), len(type5))

@dataclass(frozen=True)
class ScoreDistribution:
    counts: dict[int, int]
    percent: dict[int, float]
    share_at_least: dict[int, float]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "counts": {str(s): c for s, c in self.counts.items()},
            "percent": {str(s): p for s, p in self.percent.items()},
            "share_at_least": {str(s): p for s, p in self.share_at_least.items()}
        }

def score_distribution(records: Sequence[JudgementRecord]) -> ScoreDistribution:
    """Histogram of scores with percentages and cumulative shares for >= 2 and >= 3"""
    if len(records) == 0:
        raise JudgementError("no judgements to summarize")
    scores = pd.Series([j.score for j in records])
    counts = scores.value_counts().reindex(list(SCORES), fill_value=0)
    n = len(scores)
    return ScoreDistribution(
        counts={int(s): int(c) for s, c in counts.items()},
        percent={int(s): pct(c, n) for s, c in counts.items()},
        share_at_least={t: pct(int((scores >= t).sum()), n) for t in (2, 3)})

def profile_decisions(records: Sequence[JudgementRecord], profile: UserProfile) -> dict[str, ProfileDecision]:
    return {j.record_id: ProfileDecision(j.record_id, j.score, profile) for j in records}

def human_f(report: MatchReport, records: Sequence[JudgementRecord], profile: UserProfile) -> PRF:
    """Learning-based scoring where the expert, seen through a user profile, is the judge

    Raises
    ------
    UncoveredRecordsError
        Some Type 5 record has no judgement
    """
    return learning_based_f(report, profile_decisions(records, profile), convention=profile.convention,
        what="judgement")

def metric_error(metric: PRF, human: PRF) -> float:
    """Signed F1 difference in absolute percentage points (metric minus human)"""
    return 100. * (metric.f1 - human.f1)

@dataclass(frozen=True)
class AgreementStats:
    n: int
    expert_given_classifier: float
    classifier_given_expert: float
    disagreement_rate: float
    low_confidence_share: float
    confidence_by_outcome: dict[str, dict[str, float]]
    disagreements_by_label: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "expert_given_classifier": round(100. * self.expert_given_classifier, 2),
            "classifier_given_expert": round(100. * self.classifier_given_expert, 2),
            "disagreement_rate": round(100. * self.disagreement_rate, 2),
            "low_confidence_share": round(100. * self.low_confidence_share, 2),
            "confidence_by_outcome": self.confidence_by_outcome,
            "disagreements_by_label": self.disagreements_by_label
        }

def _agreement_frame(decisions: Mapping[str, Decision], records: Sequence[JudgementRecord],
                     predictions: Optional[Mapping[str, Any]] = None,
                     report: Optional[MatchReport] = None) -> pd.DataFrame:
    scores = {j.record_id: j.score for j in records}
    ids = sorted(set(decisions) & set(scores))
    if len(ids) == 0:
        raise JudgementError("no record carries both a decision and a judgement")

    def confidence(rid):
        if predictions is not None and rid in predictions:
            return float(predictions[rid].confidence)
        return float(decisions[rid].confidence)

    df = pd.DataFrame({
        "record_id": ids,
        "score": [scores[rid] for rid in ids],
        "accepted": [decisions[rid].accepted for rid in ids],
        "confidence": [confidence(rid) for rid in ids],
        "label": [report[rid].label if report is not None and rid in report else decisions[rid].predicted_label \
            for rid in ids]
    })
    df["expert_accepts"] = df["score"] >= 2
    df["outcome"] = [ExpertOutcome.of(s).value for s in df["score"]]
    df["verdict"] = ["accept" if a else "reject" for a in df["accepted"]]
    return df

def agreement(decisions: Mapping[str, Decision], records: Sequence[JudgementRecord],
              predictions: Optional[Mapping[str, Any]] = None, report: Optional[MatchReport] = None,
              low_confidence: float = 0.5) -> AgreementStats:
    """Compare classifier verdicts with expert scores on their shared records.

    The expert counts as accepting for scores >= 2 (accepted or partially
    accepted). Confidence comes from `predictions` when given, else from the
    decisions; group statistics use the population standard deviation and
    only non-empty groups are reported.
    """
    df = _agreement_frame(decisions, records, predictions, report)
    both = int((df["accepted"] & df["expert_accepts"]).sum())
    disagree = df["accepted"] != df["expert_accepts"]

    by_outcome = {}
    for outcome in ExpertOutcome:
        group = df.loc[df["outcome"] == outcome.value, "confidence"]
        if len(group) > 0:
            by_outcome[outcome.value] = {
                "mean": round(float(group.mean()), 4),
                "std": round(float(group.std(ddof=0)), 4),
                "n": int(len(group))
            }

    by_label = df.loc[disagree].groupby("label").size()

    return AgreementStats(
        n=len(df),
        expert_given_classifier=ratio(both, int(df["accepted"].sum())),
        classifier_given_expert=ratio(both, int(df["expert_accepts"].sum())),
        disagreement_rate=ratio(int(disagree.sum()), len(df)),
        low_confidence_share=ratio(int((disagree & (df["confidence"] < low_confidence)).sum()), int(disagree.sum())),
        confidence_by_outcome=by_outcome,
        disagreements_by_label={str(l): int(c) for l, c in by_label.sort_index().items()})

def decision_crosstab(decisions: Mapping[str, Decision], records: Sequence[JudgementRecord]) -> pd.DataFrame:
    """Expert outcome (rows) against classifier verdict (columns)"""
    df = _agreement_frame(decisions, records)
    table = pd.crosstab(df["outcome"], df["verdict"])
    table = table.reindex(index=[o.value for o in ExpertOutcome], columns=["accept", "reject"], fill_value=0)
    table.index.name = "expert"
    table.columns.name = "classifier"
    return table
