import time
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings

from SpanJudge.common.corpus import Corpus, Document, EntityMention, Source
from SpanJudge.evaluate.span_matcher import (MismatchType, GoldStatus, MatchContractError, classify_document,
    classify_corpus, error_distribution, ledger_lines, parse_ledger)

from strategies import documents, random_document

def oracle(gold, pred):
    """Classify each prediction by scanning every gold under the stage priorities"""
    out = []
    anchored = set()
    for p in pred:
        same_span = [g for g in gold if (g.start, g.end) == (p.start, p.end)]
        overlapping = [g for g in gold if min(g.end, p.end) > max(g.start, p.start)]
        if any(g.label == p.label for g in same_span):
            kind, anchor = MismatchType.EXACT_MATCH, same_span[0]
        elif len(same_span) > 0:
            kind, anchor = MismatchType.TYPE3, same_span[0]
        else:
            same_label = [g for g in overlapping if g.label == p.label]
            candidates = same_label if same_label else overlapping
            kind = MismatchType.TYPE5 if same_label else MismatchType.TYPE4
            if len(candidates) == 0:
                kind, anchor = MismatchType.TYPE1, None
            else:
                anchor = sorted(candidates, key=lambda g: (-p.overlap(g), g.start, -(g.end - g.start)))[0]
        if anchor is not None:
            anchored.add((anchor.start, anchor.end))
        out.append((kind, (p.start, p.end, p.label), None if anchor is None else (anchor.start, anchor.end)))
    for g in gold:
        if (g.start, g.end) not in anchored:
            out.append((MismatchType.TYPE2, None, (g.start, g.end)))
    return Counter(out)

def as_oracle(records):
    return Counter((r.kind, None if r.pred is None else (r.pred.start, r.pred.end, r.pred.label),
        None if r.gold is None else (r.gold.start, r.gold.end)) for r in records)

def test_liver_phrase_gives_two_type5(liver_report):
    assert liver_report.counts[MismatchType.TYPE5] == 2
    assert liver_report.n_errors == 2
    anchors = {r.gold.token_span for r in liver_report.type5_records}
    assert anchors == {(0, 9)}
    assert [r.overlap_tokens for r in liver_report.type5_records] == [6, 1]
    assert [r.record_id for r in liver_report] == ["fig1:0", "fig1:1"]

def test_mixed_corpus(mixed_corpus):
    report = classify_corpus(mixed_corpus)
    assert [(r.record_id, r.kind) for r in report] == [
        ("a:0", MismatchType.TYPE5),
        ("a:1", MismatchType.TYPE3),
        ("b:0", MismatchType.TYPE1),
        ("b:1", MismatchType.EXACT_MATCH),
        ("b:2", MismatchType.TYPE4),
        ("b:3", MismatchType.TYPE2)]
    assert report.status_counts() == Counter({GoldStatus.EXACT: 1, GoldStatus.TYPE3: 1,
        GoldStatus.COVERED: 2, GoldStatus.TYPE2: 1})
    assert report["b:2"].gold.label == "problem"

@pytest.mark.parametrize("gold, pred, expected", [
    ([(2, 7, "test")], [(4, 7, "test")], {MismatchType.TYPE5: 1}),
    ([(0, 2, "A")], [(0, 2, "B")], {MismatchType.TYPE3: 1}),
    ([(0, 2, "A")], [(5, 7, "A")], {MismatchType.TYPE1: 1, MismatchType.TYPE2: 1}),
    ([(0, 2, "A"), (3, 5, "B")], [(0, 2, "A"), (3, 5, "B")], {MismatchType.EXACT_MATCH: 2}),
    ([(0, 2, "A"), (3, 5, "B")], [(1, 4, "B")], {MismatchType.TYPE5: 1, MismatchType.TYPE2: 1}),
    ([(0, 3, "A")], [(0, 1, "A"), (2, 3, "B")], {MismatchType.TYPE5: 1, MismatchType.TYPE4: 1}),
])
def test_small_cases(gold, pred, expected):
    doc = Document.build("d", ["w{}".format(i) for i in range(8)], gold_spans=gold, pred_spans=pred)
    counts = Counter({k: v for k, v in classify_corpus(Corpus.from_documents([doc])).counts.items() if v > 0})
    assert counts == Counter(expected)

def test_anchor_ties_go_to_leftmost_gold():
    doc = Document.build("d", ["w{}".format(i) for i in range(6)],
        gold_spans=[(0, 2, "A"), (3, 5, "A")], pred_spans=[(1, 4, "A")])
    records = classify_document(doc.gold_entities, doc.pred_entities)
    type5 = [r for r in records if r.kind == MismatchType.TYPE5]
    assert [r.gold.token_span for r in type5] == [(0, 2)]
    assert [r.gold.token_span for r in records if r.kind == MismatchType.TYPE2] == [(3, 5)]

def test_overlapping_inputs_violate_contract():
    a = EntityMention("d", 0, 2, "A", "x y", Source.PREDICTED)
    b = EntityMention("d", 1, 3, "A", "y z", Source.PREDICTED)
    with pytest.raises(MatchContractError):
        classify_document([], [a, b])

def test_empty_corpus():
    report = classify_corpus(Corpus())
    assert len(report) == 0
    assert all(v == 0 for v in report.counts.values())

def test_staged_matches_oracle_on_seeded_documents():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    for i in range(500):
        doc = random_document(rng, "r{}".format(i))
        records = classify_document(doc.gold_entities, doc.pred_entities, doc_id=doc.doc_id)
        assert as_oracle(records) == oracle(doc.gold_entities, doc.pred_entities), doc
    assert time.perf_counter() - start < 5.

@settings(max_examples=300)
@given(documents())
def test_conservation(doc):
    report = classify_corpus(Corpus.from_documents([doc]))
    c = report.counts
    assert len(doc.pred_entities) == c[MismatchType.EXACT_MATCH] + c[MismatchType.TYPE1] + \
        c[MismatchType.TYPE3] + c[MismatchType.TYPE4] + c[MismatchType.TYPE5]
    statuses = report.status_counts()
    assert sum(statuses.values()) == len(doc.gold_entities)
    assert statuses[GoldStatus.TYPE2] == c[MismatchType.TYPE2]
    assert statuses[GoldStatus.EXACT] == c[MismatchType.EXACT_MATCH]
    assert statuses[GoldStatus.TYPE3] == c[MismatchType.TYPE3]
    for r in report:
        if r.kind in (MismatchType.TYPE4, MismatchType.TYPE5):
            assert r.overlap_tokens >= 1 and r.pred.token_span != r.gold.token_span
            assert (r.pred.label == r.gold.label) == (r.kind == MismatchType.TYPE5)

def _swap(doc):
    return Document(doc.doc_id, doc.tokens,
        tuple(m.with_source(Source.GOLD) for m in doc.pred_entities),
        tuple(m.with_source(Source.PREDICTED) for m in doc.gold_entities))

def _no_shadowed_golds(doc):
    """Every gold overlapped by a prediction is that prediction's anchor, on both sides"""
    for gold, pred in ((doc.gold_entities, doc.pred_entities), (doc.pred_entities, doc.gold_entities)):
        for p in pred:
            if sum(1 for g in gold if p.overlap(g) > 0) > 1:
                return False
    return True

@settings(max_examples=300)
@given(documents())
def test_swap_symmetry(doc):
    original = classify_corpus(Corpus.from_documents([doc])).counts
    swapped = classify_corpus(Corpus.from_documents([_swap(doc)])).counts
    assert original[MismatchType.EXACT_MATCH] == swapped[MismatchType.EXACT_MATCH]
    assert original[MismatchType.TYPE3] == swapped[MismatchType.TYPE3]
    assert original[MismatchType.TYPE2] >= swapped[MismatchType.TYPE1]
    if _no_shadowed_golds(doc):
        assert original[MismatchType.TYPE1] == swapped[MismatchType.TYPE2]
        assert original[MismatchType.TYPE2] == swapped[MismatchType.TYPE1]

def test_parallel_classification_is_identical():
    rng = np.random.default_rng(7)
    corpus = Corpus.from_documents([random_document(rng, "p{:03d}".format(i)) for i in range(150)])
    serial = classify_corpus(corpus, n_jobs=1)
    parallel = classify_corpus(corpus, n_jobs=2)
    assert serial.records == parallel.records

def test_ledger_round_trip(mixed_corpus):
    report = classify_corpus(mixed_corpus)
    again = parse_ledger("\n".join(ledger_lines(report)) + "\n")
    assert again.records == report.records
    assert again.counts == report.counts

def test_error_distribution(mixed_corpus):
    table = error_distribution(classify_corpus(mixed_corpus))
    assert table["count"].sum() == 5
    assert table.loc[MismatchType.TYPE5.value, "share"] == 20.0
    by_label = error_distribution(classify_corpus(mixed_corpus), by_label=True)
    assert by_label.loc["test", MismatchType.TYPE5.value] == 1
