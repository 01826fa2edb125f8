"""Training data for the entity classifier: one (text, tag) pair per gold
mention plus an "other" class sampled from token runs that lie outside every
gold entity.
"""

import re
import json
import math
import logging
from enum import Enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Union, Sequence, Optional, Iterator, TypeVar

import numpy as np

from SpanJudge.util import read_bytes, decode_utf8
from SpanJudge.common.config import Config, default_config
from SpanJudge.common.corpus import Corpus, Document, ParseError

logger = logging.getLogger(__name__)

OTHER = "other"
PUNCT_RE = re.compile(r"^[^\w\s]+$")
DIGITS_RE = re.compile(r"^\d+([.,]\d+)*$")

class BuilderError(RuntimeError):
    pass

class Origin(Enum):
    GOLD_ENTITY = "GoldEntity"
    SAMPLED_CHUNK = "SampledChunk"
    EXTERNAL_CHUNK = "ExternalChunk"

@dataclass(frozen=True)
class LabeledText:
    text: str
    label: str
    origin: Origin = Origin.GOLD_ENTITY

    def __post_init__(self) -> None:
        if self.text.strip() == "":
            raise BuilderError("labeled text must not be empty (label {})".format(self.label))
        if self.label.strip() == "":
            raise BuilderError("empty label for '{}'".format(self.text))

@dataclass(frozen=True)
class Chunk:
    """A candidate for the other class; `start`/`end` are None for external chunks"""
    text: str
    doc_id: Optional[str] = None
    start: Optional[int] = None
    end: Optional[int] = None

_Self = TypeVar('_Self', bound='BuilderConfig')

@dataclass(frozen=True)
class BuilderConfig:
    seed: int = 13
    max_chunk_tokens: int = 6
    split_on_stopwords: bool = True
    stopwords: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.max_chunk_tokens < 1:
            raise BuilderError("max_chunk_tokens must be at least 1, not {}".format(self.max_chunk_tokens))

    @classmethod
    def from_config(cls: type[_Self], config: Config = default_config) -> _Self:
        section = config.section("builder")
        return cls(
            seed=section["seed"],
            max_chunk_tokens=int(section.get("max_chunk_tokens", 6)),
            split_on_stopwords=bool(section.get("split_on_stopwords", True)),
            stopwords=frozenset(w.lower() for w in section.get("stopwords", [])))

    def is_stopword(self, token: str) -> bool:
        return token.lower() in self.stopwords

def extract_pairs(corpus: Corpus) -> list[LabeledText]:
    """One pair per gold mention, duplicates kept, in corpus order"""
    return [LabeledText(m.text, m.label, Origin.GOLD_ENTITY) for doc in corpus for m in doc.gold_entities]

def _runs(doc: Document, config: BuilderConfig) -> Iterator[tuple[int, int]]:
    """Maximal runs of tokens outside gold spans, broken at sentence starts and separators"""
    inside = np.zeros(len(doc.tokens), dtype=bool)
    for m in doc.gold_entities:
        inside[m.start:m.end] = True
    sent_starts = set(doc.sent_starts)

    start = None
    for i, token in enumerate(doc.tokens):
        separator = PUNCT_RE.match(token.text) is not None or \
            (config.split_on_stopwords and config.is_stopword(token.text))
        if start is not None and (inside[i] or separator or i in sent_starts):
            yield start, i
            start = None
        if start is None and not inside[i] and not separator:
            start = i
    if start is not None:
        yield start, len(doc.tokens)

def _trim(doc: Document, start: int, end: int, config: BuilderConfig) -> tuple[int, int]:
    def droppable(i):
        text = doc.tokens[i].text
        return config.is_stopword(text) or DIGITS_RE.match(text) is not None or PUNCT_RE.match(text) is not None
    while start < end and droppable(start):
        start += 1
    while end > start and droppable(end-1):
        end -= 1
    return start, end

def harvest_chunks(corpus: Corpus, config: BuilderConfig) -> list[Chunk]:
    """Heuristic noun-like chunks outside every gold entity, ordered by (document, start)

    Runs of non-entity tokens are split at sentence boundaries and
    punctuation-only tokens (and at stopwords when `split_on_stopwords`),
    trimmed of stopwords and digit-only tokens at both edges, and kept when
    1 to `max_chunk_tokens` tokens remain.
    """
    chunks = []
    for doc in sorted(corpus, key=lambda d: d.doc_id):
        for run_start, run_end in _runs(doc, config):
            start, end = _trim(doc, run_start, run_end, config)
            if 1 <= end - start <= config.max_chunk_tokens:
                text = " ".join(doc.token_texts[start:end])
                chunks.append(Chunk(text, doc.doc_id, start, end))
    logger.info("Harvested {} candidate chunks".format(len(chunks)))
    return chunks

def other_cap(pairs: Sequence[LabeledText]) -> int:
    """Floor of the mean number of pairs per tag

    >>> other_cap([LabeledText("a", "A")]*10 + [LabeledText("b", "B")]*20)
    15
    """
    counts = Counter(p.label for p in pairs if p.label != OTHER)
    if len(counts) == 0:
        return 0
    return math.floor(sum(counts.values()) / len(counts))

def sample_other(candidates: Sequence[Union[Chunk, str]], pairs: Sequence[LabeledText],
                 config: BuilderConfig, origin: Origin = Origin.SAMPLED_CHUNK) -> list[LabeledText]:
    """Uniformly sample min(cap, |candidates|) candidates without replacement
    and label them "other". Sampled items keep their candidate order."""
    cap = other_cap(pairs)
    n = min(cap, len(candidates))
    if len(candidates) < cap:
        logger.warning("Only {} candidate chunks for an other class capped at {}".format(len(candidates), cap))
    if n == 0:
        return []
    rng = np.random.default_rng(config.seed)
    chosen = np.sort(rng.choice(len(candidates), size=n, replace=False))
    texts = [candidates[i].text if isinstance(candidates[i], Chunk) else candidates[i] for i in chosen]
    return [LabeledText(t, OTHER, origin) for t in texts]

def parse_external_chunks(content: Union[bytes, str]) -> list[str]:
    text, bad_line = decode_utf8(content)
    if text is None:
        raise ParseError("chunk file is not valid UTF-8", line=bad_line)
    return [line.strip() for line in text.split("\n") if line.strip() != ""]

def ingest_external_chunks(path: str) -> list[str]:
    """Chunks computed by an outside noun chunker, one per line, blank lines skipped"""
    return parse_external_chunks(read_bytes(path))

def build_training_set(corpus: Corpus, config: Optional[BuilderConfig] = None,
                       external_chunks: Optional[Sequence[str]] = None) -> list[LabeledText]:
    """Gold pairs followed by the sampled other class

    Raises
    ------
    BuilderError
        The corpus has no gold entities
    """
    if config is None:
        config = BuilderConfig.from_config()
    pairs = extract_pairs(corpus)
    if len(pairs) == 0:
        raise BuilderError("corpus has no gold entities to build classifier data from")

    if external_chunks is None:
        other = sample_other(harvest_chunks(corpus, config), pairs, config)
    else:
        other = sample_other(list(external_chunks), pairs, config, origin=Origin.EXTERNAL_CHUNK)

    logger.info("Built {} entity pairs over {} tags and {} other examples".format(
        len(pairs), len({p.label for p in pairs}), len(other)))
    return pairs + other

def write_pairs(pairs: Sequence[LabeledText], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            print(json.dumps({"text": p.text, "label": p.label, "origin": p.origin.value}, ensure_ascii=False), file=fh)

def parse_pairs(content: Union[bytes, str]) -> list[LabeledText]:
    text, bad_line = decode_utf8(content)
    if text is None:
        raise ParseError("pairs file is not valid UTF-8", line=bad_line)
    pairs = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        if line.strip() == "":
            continue
        try:
            obj = json.loads(line)
            pairs.append(LabeledText(obj["text"], obj["label"], Origin(obj.get("origin", Origin.GOLD_ENTITY.value))))
        except json.JSONDecodeError as e:
            raise ParseError("invalid JSON: {}".format(e.msg), line=line_no)
        except (KeyError, ValueError, TypeError, AttributeError, BuilderError) as e:
            raise ParseError("invalid pair: {}".format(e), line=line_no)
    return pairs

def read_pairs(path: str) -> list[LabeledText]:
    return parse_pairs(read_bytes(path))
