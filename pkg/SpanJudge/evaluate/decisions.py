import json
from enum import Enum
from dataclasses import dataclass
from typing import Union, Mapping, Iterable

from SpanJudge.util import read_bytes, decode_utf8
from SpanJudge.common.corpus import ParseError

class UncoveredRecordsError(RuntimeError):
    """Type 5 records without a decision or judgement"""
    def __init__(self, record_ids: Iterable[str], what: str = "decision") -> None:
        self.record_ids = sorted(record_ids)
        shown = ", ".join(self.record_ids[:20])
        more = "" if len(self.record_ids) <= 20 else " (+{} more)".format(len(self.record_ids)-20)
        super().__init__("{} Type 5 record(s) without a {}: {}{}".format(len(self.record_ids), what, shown, more))

class Verdict(Enum):
    ACCEPT = "accept"
    REJECT = "reject"

@dataclass(frozen=True)
class Decision:
    record_id: str
    verdict: Verdict
    predicted_label: str
    confidence: float

    @property
    def accepted(self) -> bool:
        return self.verdict == Verdict.ACCEPT

def decide(record_id: str, record_label: str, predicted_label: str, confidence: float) -> Decision:
    """Accept iff the predicted label is the record's label; confidence never matters"""
    verdict = Verdict.ACCEPT if predicted_label == record_label else Verdict.REJECT
    return Decision(record_id, verdict, predicted_label, float(confidence))

def write_decisions(decisions: Mapping[str, Decision], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record_id in sorted(decisions):
            d = decisions[record_id]
            print(json.dumps({"record_id": d.record_id, "verdict": d.verdict.value,
                "predicted_label": d.predicted_label, "confidence": d.confidence}, ensure_ascii=False), file=fh)

def parse_decisions(content: Union[bytes, str]) -> dict[str, Decision]:
    text, bad_line = decode_utf8(content)
    if text is None:
        raise ParseError("decisions file is not valid UTF-8", line=bad_line)
    decisions = {}
    for line_no, line in enumerate(text.split("\n"), start=1):
        if line.strip() == "":
            continue
        try:
            obj = json.loads(line)
            d = Decision(obj["record_id"], Verdict(obj["verdict"]), obj["predicted_label"], float(obj["confidence"]))
        except json.JSONDecodeError as e:
            raise ParseError("invalid JSON: {}".format(e.msg), line=line_no)
        except (KeyError, ValueError, TypeError) as e:
            raise ParseError("invalid decision: {}".format(e), line=line_no)
        if d.record_id in decisions:
            raise ParseError("duplicate decision for {}".format(d.record_id), line=line_no)
        decisions[d.record_id] = d
    return decisions

def read_decisions(path: str) -> dict[str, Decision]:
    return parse_decisions(read_bytes(path))
