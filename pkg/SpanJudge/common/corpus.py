import logging
from enum import Enum
from dataclasses import dataclass, replace
from typing import Union, Any, Iterator, Sequence, TypeVar

import pandas as pd

from SpanJudge.util import izip_missing

logger = logging.getLogger(__name__)

class CorpusError(RuntimeError):
    pass

class ParseError(CorpusError):
    """Input file could not be turned into a Corpus. `line` is 1-based when known"""
    def __init__(self, message: str, line: Union[int, None] = None) -> None:
        self.line = line
        if line is not None:
            message = "line {}: {}".format(line, message)
        super().__init__(message)

class AlignmentError(CorpusError):
    def __init__(self, message: str, doc_id: Union[str, None] = None, index: Union[int, None] = None,
                 missing: Sequence[str] = ()) -> None:
        self.doc_id = doc_id
        self.index = index
        self.missing = list(missing)
        super().__init__(message)

class Source(Enum):
    GOLD = "gold"
    PREDICTED = "predicted"

@dataclass(frozen=True)
class Token:
    text: str
    doc_id: str
    sent_index: int
    token_index: int
    char_start: int
    char_end: int

@dataclass(frozen=True)
class EntityMention:
    """A labeled half-open token span [start, end) of one document"""
    doc_id: str
    start: int
    end: int
    label: str
    text: str
    source: Source = Source.GOLD

    @property
    def token_span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def __len__(self) -> int:
        return self.end - self.start

    def overlap(self, other: "EntityMention") -> int:
        """Number of shared tokens"""
        return max(0, min(self.end, other.end) - max(self.start, other.start))

    def with_source(self, source: Source) -> "EntityMention":
        return replace(self, source=source)

def make_mention(doc_id: str, tokens: Sequence[Token], start: int, end: int, label: str,
                 source: Source = Source.GOLD) -> EntityMention:
    """Build a mention whose text is the single-space join of its tokens"""
    if not 0 <= start < end <= len(tokens):
        raise CorpusError("span [{}, {}) outside document {} with {} tokens".format(
            start, end, doc_id, len(tokens)))
    text = " ".join(t.text for t in tokens[start:end])
    return EntityMention(doc_id, start, end, label.strip(), text, source)

def synthesize_tokens(doc_id: str, texts: Sequence[str], sent_starts: Sequence[int] = (0,)) -> tuple[Token, ...]:
    """Tokens with character offsets from joining every token with a single space"""
    starts = set(sent_starts)
    tokens = []
    offset = 0
    sent_index = -1
    for i, text in enumerate(texts):
        if i in starts or sent_index < 0:
            sent_index += 1
        tokens.append(Token(text, doc_id, sent_index, i, offset, offset+len(text)))
        offset += len(text) + 1
    return tuple(tokens)

def _check_flat(doc_id: str, mentions: Sequence[EntityMention], source: Source) -> None:
    ordered = sorted(mentions, key=lambda m: (m.start, m.end))
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start < prev.end:
            raise CorpusError("overlapping {} spans [{}, {}) '{}' and [{}, {}) '{}' in document {}".format(
                source.value, prev.start, prev.end, prev.label, cur.start, cur.end, cur.label, doc_id))

@dataclass(frozen=True)
class Document:
    doc_id: str
    tokens: tuple[Token, ...]
    gold_entities: tuple[EntityMention, ...] = ()
    pred_entities: tuple[EntityMention, ...] = ()

    def __post_init__(self) -> None:
        for i, token in enumerate(self.tokens):
            if token.token_index != i:
                raise CorpusError("token {} of {} has index {}".format(i, self.doc_id, token.token_index))
            if not token.char_start < token.char_end:
                raise CorpusError("empty token at index {} of {}".format(i, self.doc_id))

        for source, mentions in ((Source.GOLD, self.gold_entities), (Source.PREDICTED, self.pred_entities)):
            for m in mentions:
                if m.doc_id != self.doc_id or m.source != source:
                    raise CorpusError("mention {} does not belong to {} side of {}".format(m, source.value, self.doc_id))
                if not 0 <= m.start < m.end <= len(self.tokens):
                    raise CorpusError("span [{}, {}) outside document {} with {} tokens".format(
                        m.start, m.end, self.doc_id, len(self.tokens)))
                if m.label in ("", "O"):
                    raise CorpusError("invalid label '{}' in document {}".format(m.label, self.doc_id))
                if m.text != " ".join(t.text for t in self.tokens[m.start:m.end]):
                    raise CorpusError("text '{}' does not match tokens [{}, {}) of {}".format(
                        m.text, m.start, m.end, self.doc_id))
            _check_flat(self.doc_id, mentions, source)

    @property
    def token_texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    @property
    def sent_starts(self) -> list[int]:
        return [t.token_index for i, t in enumerate(self.tokens) \
            if i == 0 or t.sent_index != self.tokens[i-1].sent_index]

    @property
    def n_sentences(self) -> int:
        return self.tokens[-1].sent_index + 1 if self.tokens else 0

    def mentions(self, source: Source) -> tuple[EntityMention, ...]:
        return self.gold_entities if source == Source.GOLD else self.pred_entities

    @classmethod
    def build(cls, doc_id: str, texts: Sequence[str], sent_starts: Sequence[int] = (0,),
              gold_spans: Sequence[tuple[int, int, str]] = (),
              pred_spans: Sequence[tuple[int, int, str]] = ()) -> "Document":
        """Create a document from token strings and (start, end, label) spans"""
        tokens = synthesize_tokens(doc_id, texts, sent_starts)
        gold = tuple(sorted((make_mention(doc_id, tokens, s, e, l, Source.GOLD) for s, e, l in gold_spans),
            key=lambda m: m.start))
        pred = tuple(sorted((make_mention(doc_id, tokens, s, e, l, Source.PREDICTED) for s, e, l in pred_spans),
            key=lambda m: m.start))
        return cls(doc_id, tokens, gold, pred)

_Self = TypeVar('_Self', bound='Corpus')

@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...] = ()
    label_set: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        labels = set(self.label_set)
        for doc in self.documents:
            if doc.doc_id in seen:
                raise CorpusError("duplicate doc_id {}".format(doc.doc_id))
            seen.add(doc.doc_id)
            for m in doc.gold_entities + doc.pred_entities:
                if m.label not in labels:
                    raise CorpusError("label {} of {} not in label set".format(m.label, doc.doc_id))

    @classmethod
    def from_documents(cls: type[_Self], documents: Sequence[Document]) -> _Self:
        """Corpus whose label set is the sorted set of labels used by its mentions"""
        labels = sorted({m.label for doc in documents for m in doc.gold_entities + doc.pred_entities})
        return cls(tuple(documents), tuple(labels))

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __getitem__(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)

    @property
    def doc_ids(self) -> list[str]:
        return [doc.doc_id for doc in self.documents]

    def mentions(self, source: Source) -> Iterator[EntityMention]:
        for doc in self.documents:
            yield from doc.mentions(source)

    def has_mentions(self, source: Source) -> bool:
        return any(len(doc.mentions(source)) > 0 for doc in self.documents)

def pair_corpora(gold: Corpus, pred: Corpus) -> Corpus:
    """Merge an independently parsed gold corpus and prediction corpus.

    Documents are matched by doc_id and must have identical token texts
    (case-sensitive) position by position. The prediction side contributes
    its predicted mentions, or its gold mentions re-sourced as predictions
    when the file was parsed without a source (e.g. a plain IOB file).

    Raises
    ------
    AlignmentError
        A doc_id present on one side only, or a token mismatch
    """
    missing = [a if a is not None else b for a, b in izip_missing(
        iter(sorted(gold.doc_ids)), iter(sorted(pred.doc_ids)), fillvalue=None) \
        if a is None or b is None]
    if len(missing) > 0:
        raise AlignmentError("documents present on one side only: {}".format(", ".join(missing)),
            missing=missing)

    pred_source = Source.PREDICTED if pred.has_mentions(Source.PREDICTED) else Source.GOLD
    pred_docs = {doc.doc_id: doc for doc in pred.documents}

    documents = []
    for gold_doc in gold.documents:
        pred_doc = pred_docs[gold_doc.doc_id]
        for i, (g, p) in enumerate(zip(gold_doc.token_texts, pred_doc.token_texts)):
            if g != p:
                raise AlignmentError("token mismatch in {} at index {}: '{}' != '{}'".format(
                    gold_doc.doc_id, i, g, p), doc_id=gold_doc.doc_id, index=i)
        if len(gold_doc.tokens) != len(pred_doc.tokens):
            index = min(len(gold_doc.tokens), len(pred_doc.tokens))
            raise AlignmentError("token count mismatch in {} at index {}: {} gold vs {} predicted tokens".format(
                gold_doc.doc_id, index, len(gold_doc.tokens), len(pred_doc.tokens)),
                doc_id=gold_doc.doc_id, index=index)

        predictions = tuple(m.with_source(Source.PREDICTED) for m in pred_doc.mentions(pred_source))
        documents.append(Document(gold_doc.doc_id, gold_doc.tokens, gold_doc.gold_entities, predictions))

    paired = Corpus.from_documents(documents)
    logger.info("Paired {} documents ({} gold, {} predicted mentions)".format(len(paired),
        sum(len(d.gold_entities) for d in paired), sum(len(d.pred_entities) for d in paired)))
    return paired

def describe_corpus(corpus: Corpus) -> dict[str, Any]:
    """Dataset statistics: document/sentence/token totals and entity counts per label

    Returns
    -------
    A dict with integer totals and 'per_label', a DataFrame indexed by label
    with 'gold' and 'predicted' columns
    """
    rows = [(m.label, m.source.value) for doc in corpus for m in doc.gold_entities + doc.pred_entities]
    df = pd.DataFrame(rows, columns=["label", "source"])
    per_label = pd.crosstab(df["label"], df["source"]) if len(df) > 0 else pd.DataFrame()
    per_label = per_label.reindex(index=list(corpus.label_set), columns=["gold", "predicted"], fill_value=0)
    per_label.index.name = "label"
    per_label.columns.name = None

    return {
        "documents": len(corpus),
        "sentences": sum(doc.n_sentences for doc in corpus),
        "tokens": sum(len(doc.tokens) for doc in corpus),
        "gold_entities": int(per_label["gold"].sum()),
        "predicted_entities": int(per_label["predicted"].sum()),
        "per_label": per_label
    }
