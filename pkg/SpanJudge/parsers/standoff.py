"""Line-delimited standoff files. One object per document:

    {"doc_id": str, "tokens": [str], "sent_starts": [int] (optional),
     "entities": [{"start": int, "end": int, "label": str, "source": "gold"|"predicted"}]}

Spans are half-open token intervals.
"""

import json
import logging
from typing import Union, Any

from SpanJudge.util import decode_utf8, read_bytes
from SpanJudge.common.corpus import Corpus, Document, Source, ParseError, CorpusError

logger = logging.getLogger(__name__)

def _entity(record: Any, n_tokens: int, line_no: int) -> tuple[Source, tuple[int, int, str]]:
    if not isinstance(record, dict):
        raise ParseError("entity must be an object", line=line_no)
    try:
        start, end, label = record["start"], record["end"], record["label"]
        source = Source(record.get("source", "gold"))
    except KeyError as e:
        raise ParseError("entity missing field {}".format(e), line=line_no)
    except ValueError:
        raise ParseError("unknown entity source '{}'".format(record.get("source")), line=line_no)

    if not isinstance(start, int) or not isinstance(end, int) or isinstance(start, bool) or isinstance(end, bool):
        raise ParseError("entity span must be integers, got [{}, {})".format(start, end), line=line_no)
    if not isinstance(label, str) or label.strip() in ("", "O"):
        raise ParseError("invalid entity label '{}'".format(label), line=line_no)
    if end <= start:
        raise ParseError("empty or inverted span [{}, {})".format(start, end), line=line_no)
    if start < 0 or end > n_tokens:
        raise ParseError("span [{}, {}) outside document bounds [0, {})".format(start, end, n_tokens), line=line_no)
    return source, (start, end, label.strip())

def _document(record: Any, line_no: int) -> Document:
    if not isinstance(record, dict):
        raise ParseError("expected one object per line", line=line_no)
    doc_id = record.get("doc_id")
    tokens = record.get("tokens")
    if not isinstance(doc_id, str) or doc_id == "":
        raise ParseError("missing or invalid doc_id", line=line_no)
    if not isinstance(tokens, list) or not all(isinstance(t, str) and t != "" for t in tokens):
        raise ParseError("tokens must be a list of non-empty strings", line=line_no)

    sent_starts = record.get("sent_starts", [0])
    if not isinstance(sent_starts, list) or not all(isinstance(s, int) and 0 <= s < max(len(tokens), 1) for s in sent_starts):
        raise ParseError("invalid sent_starts", line=line_no)

    spans = {Source.GOLD: [], Source.PREDICTED: []}
    for entity in record.get("entities", []):
        source, span = _entity(entity, len(tokens), line_no)
        spans[source].append(span)

    try:
        return Document.build(doc_id, tokens, sorted(set(sent_starts) | {0}),
            gold_spans=spans[Source.GOLD], pred_spans=spans[Source.PREDICTED])
    except CorpusError as e:
        raise ParseError(str(e), line=line_no)

def parse_standoff(content: Union[bytes, str]) -> Corpus:
    """Parse a line-delimited standoff file into a Corpus.

    Raises
    ------
    ParseError
        Invalid UTF-8 or JSON, a span outside the document, an empty span,
        overlapping spans of one source (both spans are named), or a
        duplicate doc_id
    """
    text, bad_line = decode_utf8(content)
    if text is None:
        raise ParseError("content is not valid UTF-8", line=bad_line)

    documents = []
    seen = set()
    for line_no, line in enumerate(text.split("\n"), start=1):
        if line.strip() == "":
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError("invalid JSON: {}".format(e.msg), line=line_no)
        document = _document(record, line_no)
        if document.doc_id in seen:
            raise ParseError("duplicate doc_id {}".format(document.doc_id), line=line_no)
        seen.add(document.doc_id)
        documents.append(document)

    corpus = Corpus.from_documents(documents)
    logger.info("Parsed {} documents from standoff content".format(len(corpus)))
    return corpus

def read_standoff(path: str) -> Corpus:
    return parse_standoff(read_bytes(path))

def serialize_standoff(corpus: Corpus) -> str:
    """Write a corpus as line-delimited standoff records, gold mentions first"""
    lines = []
    for doc in corpus:
        record = {"doc_id": doc.doc_id, "tokens": doc.token_texts}
        if doc.n_sentences > 1:
            record["sent_starts"] = doc.sent_starts
        record["entities"] = [{"start": m.start, "end": m.end, "label": m.label, "source": m.source.value} \
            for m in doc.gold_entities + doc.pred_entities]
        lines.append(json.dumps(record, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)

def write_standoff(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_standoff(corpus))
