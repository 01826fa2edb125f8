"""Token-per-line IOB files: `token<TAB>tag` (or `token tag`), blank line between
sentences, `-DOCSTART- <doc_id>` between documents.
"""

import re
import logging
from enum import Enum
from typing import Union, Sequence, Iterator

from SpanJudge.util import decode_utf8, read_bytes
from SpanJudge.util.parallel import loop_rv
from SpanJudge.common.corpus import Corpus, Document, Source, ParseError, CorpusError

logger = logging.getLogger(__name__)

TAG_RE = re.compile(r"^(O|([BI])-(.+))$")
DOCSTART = "-DOCSTART-"

class Scheme(Enum):
    IOB2 = "iob2"
    IOB1 = "iob1"

def _scheme(scheme: Union[str, Scheme]) -> Scheme:
    if isinstance(scheme, Scheme):
        return scheme
    try:
        return Scheme(scheme.lower())
    except ValueError:
        raise ValueError("Invalid IOB scheme {} (iob2, iob1)".format(scheme))

def parse_tag(tag: str) -> tuple[Union[str, None], Union[str, None]]:
    """Split a tag into (prefix, label); (None, None) for O

    >>> parse_tag("B-problem")
    ('B', 'problem')
    >>> parse_tag("O")
    (None, None)
    """
    match = TAG_RE.match(tag.strip())
    if match is None:
        raise ValueError("invalid tag '{}'".format(tag))
    if match.group(1) == "O":
        return None, None
    label = match.group(3).strip()
    if label == "" or label == "O":
        raise ValueError("invalid tag '{}'".format(tag))
    return match.group(2), label

def decode_tags(tags: Sequence[str], scheme: Union[str, Scheme] = Scheme.IOB2,
                sent_starts: Sequence[int] = ()) -> tuple[list[tuple[int, int, str]], list[int]]:
    """Decode a tag sequence into flat (start, end, label) spans.

    Entities never cross a sentence start. Under IOB2 an I- tag that does not
    continue an entity of the same label is repaired to B-; under IOB1 that is
    the normal way to open an entity.

    Returns
    -------
    spans : list of (start, end, label)
    repaired : indices of orphan I- tags that were repaired (IOB2 only)

    >>> decode_tags(["B-problem", "I-problem", "O"])
    ([(0, 2, 'problem')], [])
    >>> decode_tags(["I-problem", "O"])
    ([(0, 1, 'problem')], [0])
    """
    scheme = _scheme(scheme)
    starts = set(sent_starts)
    spans = []
    repaired = []
    cur_start, cur_label = None, None

    for i, tag in enumerate(tags):
        prefix, label = parse_tag(tag)
        if i in starts and cur_label is not None:
            spans.append((cur_start, i, cur_label))
            cur_start, cur_label = None, None

        if prefix is None:
            if cur_label is not None:
                spans.append((cur_start, i, cur_label))
            cur_start, cur_label = None, None
        elif prefix == "I" and cur_label == label:
            continue
        else:
            if cur_label is not None:
                spans.append((cur_start, i, cur_label))
            if prefix == "I" and scheme == Scheme.IOB2:
                repaired.append(i)
            cur_start, cur_label = i, label

    if cur_label is not None:
        spans.append((cur_start, len(tags), cur_label))

    return spans, repaired

def encode_tags(spans: Sequence[tuple[int, int, str]], n_tokens: int, scheme: Union[str, Scheme] = Scheme.IOB2,
                sent_starts: Sequence[int] = ()) -> list[str]:
    """Inverse of decode_tags for flat spans that stay inside one sentence

    >>> encode_tags([(0, 2, "problem")], 3)
    ['B-problem', 'I-problem', 'O']
    >>> encode_tags([(0, 1, "A"), (1, 2, "A")], 2, scheme="iob1")
    ['I-A', 'B-A']
    """
    scheme = _scheme(scheme)
    starts = set(sent_starts)
    tags = ["O"] * n_tokens
    prev_end, prev_label = None, None
    for start, end, label in sorted(spans):
        if scheme == Scheme.IOB2:
            first = "B"
        elif prev_end == start and prev_label == label and start not in starts:
            first = "B"
        else:
            first = "I"
        tags[start] = "{}-{}".format(first, label)
        for i in range(start+1, end):
            tags[i] = "I-{}".format(label)
        prev_end, prev_label = end, label
    return tags

def _split_documents(text: str) -> Iterator[tuple[Union[str, None], int, list[tuple[int, str]]]]:
    """Yield (doc_id or None, DOCSTART line number, [(line number, line)])"""
    doc_id, doc_line, lines = None, 0, []
    explicit = False
    for line_no, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if line.startswith(DOCSTART):
            if explicit or any(l.strip() for _, l in lines):
                yield doc_id, doc_line, lines
            fields = line.split()
            doc_id = fields[1] if len(fields) > 1 else None
            doc_line, lines, explicit = line_no, [], True
        else:
            lines.append((line_no, line))
    if explicit or any(l.strip() for _, l in lines):
        yield doc_id, doc_line, lines

def _parse_document(block: tuple[str, list[tuple[int, str]]], scheme: Scheme, source: Source) -> tuple[Document, list[int]]:
    doc_id, lines = block
    texts, tags, tag_lines, sent_starts = [], [], [], [0]
    for line_no, line in lines:
        if line.strip() == "":
            if len(texts) > 0 and sent_starts[-1] != len(texts):
                sent_starts.append(len(texts))
            continue
        cols = line.split("\t") if "\t" in line else line.split()
        if len(cols) != 2 or cols[0].strip() == "":
            raise ParseError("expected 2 columns (token, tag), found {}".format(len(cols)), line=line_no)
        try:
            parse_tag(cols[1])
        except ValueError as e:
            raise ParseError(str(e), line=line_no)
        texts.append(cols[0].strip())
        tags.append(cols[1].strip())
        tag_lines.append(line_no)

    if sent_starts[-1] == len(texts) and len(sent_starts) > 1:
        sent_starts.pop()

    spans, repaired = decode_tags(tags, scheme, sent_starts)
    gold, pred = (spans, ()) if source == Source.GOLD else ((), spans)
    try:
        document = Document.build(doc_id, texts, sent_starts, gold_spans=gold, pred_spans=pred)
    except CorpusError as e:
        raise ParseError(str(e), line=tag_lines[0] if tag_lines else None)
    return document, [tag_lines[i] for i in repaired]

def parse_iob(content: Union[bytes, str], scheme: Union[str, Scheme] = Scheme.IOB2,
              source: Source = Source.GOLD, n_jobs: int = 1) -> Corpus:
    """Parse an IOB file into a Corpus.

    Parameters
    ----------
    content : bytes or str
        UTF-8 file content
    scheme : 'iob2' or 'iob1'
        Tagging scheme. Under IOB2 orphan I- tags are repaired to B- with a warning
    source : Source
        Which side of the corpus the decoded entities belong to
    n_jobs : int
        joblib workers; documents are parsed independently

    Raises
    ------
    ParseError
        Invalid UTF-8, wrong column count, malformed tag or duplicate doc_id,
        always with the offending line number
    """
    scheme = _scheme(scheme)
    text, bad_line = decode_utf8(content)
    if text is None:
        raise ParseError("content is not valid UTF-8", line=bad_line)

    blocks = []
    seen = set()
    for ordinal, (doc_id, doc_line, lines) in enumerate(_split_documents(text)):
        doc_id = doc_id if doc_id is not None else "doc{}".format(ordinal)
        if doc_id in seen:
            raise ParseError("duplicate doc_id {}".format(doc_id), line=doc_line)
        seen.add(doc_id)
        blocks.append((doc_id, lines))

    results = loop_rv(_parse_document, blocks, scheme, source, n_jobs=n_jobs)
    for document, repaired in results:
        for line_no in repaired:
            logger.warning("line {}: orphan I- tag in {} repaired to B-".format(line_no, document.doc_id))

    corpus = Corpus.from_documents([doc for doc, _ in results])
    logger.info("Parsed {} documents from IOB content".format(len(corpus)))
    return corpus

def read_iob(path: str, scheme: Union[str, Scheme] = Scheme.IOB2, source: Source = Source.GOLD, n_jobs: int = 1) -> Corpus:
    return parse_iob(read_bytes(path), scheme=scheme, source=source, n_jobs=n_jobs)

def write_iob(corpus: Corpus, source: Source = Source.GOLD, scheme: Union[str, Scheme] = Scheme.IOB2) -> str:
    """Serialize one side of a corpus in the IOB file format"""
    out = []
    for doc in corpus:
        out.append("{} {}".format(DOCSTART, doc.doc_id))
        spans = [(m.start, m.end, m.label) for m in doc.mentions(source)]
        sent_starts = doc.sent_starts
        tags = encode_tags(spans, len(doc.tokens), scheme, sent_starts)
        starts = set(sent_starts)
        for i, (token, tag) in enumerate(zip(doc.tokens, tags)):
            if i in starts and i > 0:
                out.append("")
            out.append("{}\t{}".format(token.text, tag))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")
