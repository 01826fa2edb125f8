"""Random documents for property tests, both as hypothesis strategies and as
seeded numpy generators for fixed-size sweeps."""

from typing import Sequence

import numpy as np
from hypothesis import strategies as st

from SpanJudge.common.corpus import Corpus, Document

LABELS = ["A", "B", "C"]
WORDS = ["the", "cyst", "in", "right", "lobe", "of", "liver", "pain", "mri", "was", "stable", "dose", "."]

def flat_spans(raw: Sequence[tuple[int, int, str]], n_tokens: int) -> list[tuple[int, int, str]]:
    """Keep the (start, length, label) triples that do not overlap an earlier kept one"""
    spans, last_end = [], 0
    for start, length, label in sorted(raw):
        end = min(start + length, n_tokens)
        if start >= last_end and end > start:
            spans.append((start, end, label))
            last_end = end
    return spans

@st.composite
def span_lists(draw, n_tokens: int, labels: Sequence[str], max_entities: int = 8):
    raw = draw(st.lists(st.tuples(st.integers(0, n_tokens-1), st.integers(1, 4), st.sampled_from(list(labels))),
        max_size=max_entities))
    return flat_spans(raw, n_tokens)

@st.composite
def documents(draw, doc_id: str = "d0", max_tokens: int = 20, max_entities: int = 8, max_labels: int = 3):
    n = draw(st.integers(1, max_tokens))
    labels = LABELS[:draw(st.integers(1, max_labels))]
    texts = [draw(st.sampled_from(WORDS)) for _ in range(n)]
    gold = draw(span_lists(n, labels, max_entities))
    pred = draw(span_lists(n, labels, max_entities))
    return Document.build(doc_id, texts, (0,), gold_spans=gold, pred_spans=pred)

@st.composite
def corpora(draw, max_docs: int = 4, **kwds):
    n = draw(st.integers(1, max_docs))
    return Corpus.from_documents([draw(documents("d{}".format(i), **kwds)) for i in range(n)])

def random_spans(rng: np.random.Generator, n_tokens: int, labels: Sequence[str], max_entities: int = 8):
    k = int(rng.integers(0, max_entities+1))
    raw = [(int(rng.integers(0, n_tokens)), int(rng.integers(1, 5)), labels[int(rng.integers(len(labels)))]) \
        for _ in range(k)]
    return flat_spans(raw, n_tokens)

def random_document(rng: np.random.Generator, doc_id: str = "d0", max_tokens: int = 20, max_entities: int = 8,
                    max_labels: int = 3, n_sentences: int = 1, with_pred: bool = True) -> Document:
    n = int(rng.integers(1, max_tokens+1))
    labels = LABELS[:int(rng.integers(1, max_labels+1))]
    texts = [WORDS[int(i)] for i in rng.integers(0, len(WORDS), size=n)]
    sent_starts = sorted({0} | {int(s) for s in rng.integers(0, n, size=n_sentences-1)})
    gold = random_spans(rng, n, labels, max_entities)
    pred = random_spans(rng, n, labels, max_entities) if with_pred else []
    return Document.build(doc_id, texts, sent_starts, gold_spans=gold, pred_spans=pred)

def random_corpus(seed: int, n_docs: int = 10, **kwds) -> Corpus:
    rng = np.random.default_rng(seed)
    return Corpus.from_documents([random_document(rng, "d{:03d}".format(i), **kwds) for i in range(n_docs)])

IOB_TAGS = ["O", "B-A", "I-A", "B-B", "I-B"]

@st.composite
def iob_texts(draw, max_docs: int = 3, max_sentences: int = 3, max_tokens: int = 6):
    """Well-formed IOB file content: optional -DOCSTART- headers (bare or with
    an id), sentences separated by one or more blank lines"""
    out = []
    for d in range(draw(st.integers(1, max_docs))):
        header = draw(st.sampled_from(["none", "bare", "id"])) if d == 0 else draw(st.sampled_from(["bare", "id"]))
        if header == "bare":
            out.append("-DOCSTART-")
        elif header == "id":
            out.append("-DOCSTART- r{}".format(d))
        out.extend([""] * draw(st.integers(0, 1)))
        for s in range(draw(st.integers(1, max_sentences))):
            if s > 0:
                out.extend([""] * draw(st.integers(1, 2)))
            sep = draw(st.sampled_from(["\t", " "]))
            for _ in range(draw(st.integers(1, max_tokens))):
                out.append(draw(st.sampled_from(WORDS)) + sep + draw(st.sampled_from(IOB_TAGS)))
        out.extend([""] * draw(st.integers(0, 2)))
    return "\n".join(out) + "\n"
