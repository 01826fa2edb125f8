import pytest
from hypothesis import given, settings

from SpanJudge.common.corpus import Corpus, Document, Source, ParseError
from SpanJudge.ml.cls_data_builder import (OTHER, Origin, LabeledText, BuilderConfig, BuilderError, extract_pairs,
    harvest_chunks, other_cap, sample_other, build_training_set, parse_external_chunks, write_pairs, read_pairs)

from strategies import corpora

@pytest.fixture
def config() -> BuilderConfig:
    return BuilderConfig.from_config()

def test_chunks_skip_stopwords_and_punctuation(config):
    doc = Document.build("d", "the patient was stable .".split())
    chunks = harvest_chunks(Corpus.from_documents([doc]), config)
    assert [c.text for c in chunks] == ["patient", "stable"]
    assert [(c.start, c.end) for c in chunks] == [(1, 2), (3, 4)]

def test_chunks_stop_at_gold_and_sentences(config):
    doc = Document.build("d", "chest pain after MRI scan 12 . liver lobe".split(),
        gold_spans=[(0, 2, "problem")], sent_starts=[0, 7])
    chunks = harvest_chunks(Corpus.from_documents([doc]), config)
    assert [c.text for c in chunks] == ["MRI scan", "liver lobe"]

def test_without_stopword_splitting_runs_are_only_trimmed():
    config = BuilderConfig(stopwords=frozenset(["the", "of"]), split_on_stopwords=False)
    doc = Document.build("d", "the lobe of the liver".split())
    assert [c.text for c in harvest_chunks(Corpus.from_documents([doc]), config)] == ["lobe of the liver"]

def test_long_runs_are_dropped():
    config = BuilderConfig(max_chunk_tokens=2)
    doc = Document.build("d", "mild diffuse hepatic steatosis".split())
    assert harvest_chunks(Corpus.from_documents([doc]), config) == []

def test_pairs_keep_duplicates(mixed_corpus):
    pairs = extract_pairs(mixed_corpus)
    assert len(pairs) == 5
    assert pairs[0] == LabeledText("an adenosine - thallium stress test", "test", Origin.GOLD_ENTITY)

def test_other_cap_with_no_tags():
    assert other_cap([]) == 0

@settings(max_examples=150)
@given(corpora())
def test_other_class_is_capped_and_outside_gold(corpus):
    config = BuilderConfig.from_config()
    pairs = extract_pairs(corpus)
    chunks = harvest_chunks(corpus, config)
    for c in chunks:
        doc = corpus[c.doc_id]
        assert all(m.end <= c.start or c.end <= m.start for m in doc.gold_entities)
        assert 1 <= c.end - c.start <= config.max_chunk_tokens
    other = sample_other(chunks, pairs, config)
    assert len(other) == min(other_cap(pairs), len(chunks))
    assert all(p.label == OTHER and p.origin == Origin.SAMPLED_CHUNK for p in other)

@settings(max_examples=50)
@given(corpora())
def test_sampling_is_deterministic(corpus):
    if not corpus.has_mentions(Source.GOLD):
        return
    config = BuilderConfig.from_config()
    assert build_training_set(corpus, config) == build_training_set(corpus, config)

def test_seed_changes_the_sample(config):
    tokens = []
    for i in range(40):
        tokens.extend(["chunk{}".format(i), "."])
    gold = [(i, i+1, "A") for i in range(0, 80, 8)] + [(i, i+1, "B") for i in range(4, 80, 8)]
    corpus = Corpus.from_documents([Document.build("d", tokens, gold_spans=gold)])
    first = build_training_set(corpus, BuilderConfig(seed=1))
    second = build_training_set(corpus, BuilderConfig(seed=2))
    assert sum(p.label == OTHER for p in first) == 10
    assert [p.text for p in first if p.label == OTHER] != [p.text for p in second if p.label == OTHER]

def test_external_chunks_replace_harvesting(liver_corpus, tmp_path):
    path = tmp_path / "chunks.txt"
    path.write_text("right lobe\n\nthe scan\n", encoding="utf-8")
    chunks = parse_external_chunks(path.read_bytes())
    assert chunks == ["right lobe", "the scan"]
    pairs = build_training_set(liver_corpus, BuilderConfig(), external_chunks=chunks)
    assert pairs[-1].origin == Origin.EXTERNAL_CHUNK
    assert len(pairs) == 2

def test_corpus_without_gold_is_rejected():
    with pytest.raises(BuilderError):
        build_training_set(Corpus.from_documents([Document.build("d", ["a"])]))

def test_pairs_file_round_trip(mixed_corpus, tmp_path):
    pairs = build_training_set(mixed_corpus)
    path = tmp_path / "pairs.jsonl"
    write_pairs(pairs, str(path))
    assert read_pairs(str(path)) == pairs

def test_pairs_file_errors():
    with pytest.raises(ParseError) as err:
        read_pairs(b'{"text": "a", "label": "A"}\n{"text": "", "label": "A"}\n')
    assert err.value.line == 2
