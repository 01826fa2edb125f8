import json

import pytest
from hypothesis import given, strategies as st

from SpanJudge.common.corpus import Source, ParseError
from SpanJudge.parsers.iob import parse_iob
from SpanJudge.parsers.standoff import parse_standoff, serialize_standoff

from test_iob import SIMPLE
from strategies import iob_texts

def _line(**record):
    return json.dumps(record) + "\n"

def test_gold_and_predicted_entities():
    content = _line(doc_id="d1", tokens=["chest", "pain", "today"], entities=[
        {"start": 0, "end": 2, "label": "problem", "source": "gold"},
        {"start": 1, "end": 2, "label": "problem", "source": "predicted"},
        {"start": 2, "end": 3, "label": "time"}])
    doc = parse_standoff(content)["d1"]
    assert [(m.start, m.end, m.label) for m in doc.gold_entities] == [(0, 2, "problem"), (2, 3, "time")]
    assert [(m.start, m.end, m.source) for m in doc.pred_entities] == [(1, 2, Source.PREDICTED)]
    assert doc.n_sentences == 1

@pytest.mark.parametrize("entities, message", [
    ([{"start": 1, "end": 5, "label": "A"}], "outside document bounds"),
    ([{"start": 2, "end": 2, "label": "A"}], "empty or inverted span"),
    ([{"start": 0, "end": 1, "label": "O"}], "invalid entity label"),
    ([{"start": 0, "end": 1, "label": "A", "source": "silver"}], "unknown entity source"),
])
def test_invalid_entities(entities, message):
    content = "\n" + _line(doc_id="d1", tokens=["a", "b", "c"], entities=entities)
    with pytest.raises(ParseError, match=message) as err:
        parse_standoff(content)
    assert err.value.line == 2

def test_overlapping_gold_names_both_spans():
    content = _line(doc_id="d1", tokens=["a", "b", "c"], entities=[
        {"start": 0, "end": 2, "label": "A"}, {"start": 1, "end": 3, "label": "B"}])
    with pytest.raises(ParseError) as err:
        parse_standoff(content)
    assert "[0, 2)" in str(err.value) and "[1, 3)" in str(err.value)

def test_duplicate_doc_id_and_bad_json():
    record = _line(doc_id="d1", tokens=["a"], entities=[])
    with pytest.raises(ParseError, match="duplicate doc_id") as err:
        parse_standoff(record + record)
    assert err.value.line == 2
    with pytest.raises(ParseError, match="invalid JSON") as err:
        parse_standoff(record + "{not json\n")
    assert err.value.line == 2

def test_serialize_matches_iob_parse():
    from_iob = parse_iob(SIMPLE)
    text = serialize_standoff(from_iob)
    assert json.loads(text.splitlines()[0])["sent_starts"] == [0, 5]
    assert parse_standoff(text) == from_iob

@given(iob_texts(), st.sampled_from(["iob1", "iob2"]))
def test_standoff_keeps_any_iob_parse(content, scheme):
    from_iob = parse_iob(content, scheme=scheme)
    assert len(from_iob) > 0
    assert parse_standoff(serialize_standoff(from_iob)) == from_iob
