import pytest

from SpanJudge.common.config import Config, deep_update
from SpanJudge.common.corpus import (Corpus, Document, Source, CorpusError, AlignmentError,
    pair_corpora, describe_corpus)
from SpanJudge.parsers.iob import parse_iob

GOLD = "-DOCSTART- d1\nCT\tB-test\nof\tO\nliver\tB-organ\n\n-DOCSTART- d2\nno\tO\npain\tB-problem\n"
PRED = "-DOCSTART- d2\nno\tO\npain\tO\n\n-DOCSTART- d1\nCT\tB-test\nof\tI-test\nliver\tI-test\n"

def test_pair_uses_predicted_side_and_gold_order():
    paired = pair_corpora(parse_iob(GOLD), parse_iob(PRED))
    assert paired.doc_ids == ["d1", "d2"]
    d1 = paired["d1"]
    assert [(m.start, m.end, m.label) for m in d1.gold_entities] == [(0, 1, "test"), (2, 3, "organ")]
    assert [(m.start, m.end, m.label, m.source) for m in d1.pred_entities] == [(0, 3, "test", Source.PREDICTED)]
    assert paired["d2"].pred_entities == ()
    assert paired.label_set == ("organ", "problem", "test")

def test_missing_documents():
    with pytest.raises(AlignmentError) as err:
        pair_corpora(parse_iob(GOLD), parse_iob("-DOCSTART- d1\nCT\tO\nof\tO\nliver\tO\n-DOCSTART- d3\nx\tO\n"))
    assert err.value.missing == ["d2", "d3"]

def test_token_comparison_is_case_sensitive():
    with pytest.raises(AlignmentError) as err:
        pair_corpora(parse_iob("a\tO\nliver\tO\n"), parse_iob("a\tO\nLiver\tO\n"))
    assert err.value.doc_id == "doc0"
    assert err.value.index == 1

def test_token_count_mismatch():
    with pytest.raises(AlignmentError) as err:
        pair_corpora(parse_iob("a\tO\nb\tO\n"), parse_iob("a\tO\n"))
    assert err.value.index == 1

def test_document_rejects_overlapping_mentions():
    with pytest.raises(CorpusError, match="overlapping gold spans"):
        Document.build("d", ["a", "b", "c"], gold_spans=[(0, 2, "A"), (1, 3, "A")])
    with pytest.raises(CorpusError):
        Document.build("d", ["a"], pred_spans=[(0, 2, "A")])

def test_corpus_rejects_duplicate_ids():
    doc = Document.build("d", ["a"])
    with pytest.raises(CorpusError, match="duplicate"):
        Corpus.from_documents([doc, doc])

def test_describe_corpus(mixed_corpus):
    stats = describe_corpus(mixed_corpus)
    assert stats["documents"] == 2
    assert stats["tokens"] == 19
    assert stats["gold_entities"] == 5
    assert stats["predicted_entities"] == 5
    assert stats["per_label"].loc["test"].to_dict() == {"gold": 2, "predicted": 2}

def test_config_merge_and_seed(tmp_path):
    custom = tmp_path / "custom.yaml"
    custom.write_text("seed: 99\nbuilder:\n  max_chunk_tokens: 3\n")
    config = Config(custom)
    assert config.seed == 99
    assert config.section("builder")["max_chunk_tokens"] == 3
    assert config.section("builder")["split_on_stopwords"] is True
    assert config.section("classifier")["seed"] == 99
    assert Config(custom, seed=5).seed == 5
    with pytest.raises(ValueError):
        Config(seed=-1)

def test_deep_update_leaves_base_untouched():
    base = {"a": {"b": 1, "c": 2}}
    merged = deep_update(base, {"a": {"b": 3}})
    assert merged == {"a": {"b": 3, "c": 2}}
    assert base == {"a": {"b": 1, "c": 2}}
