import pytest

from SpanJudge.common.corpus import Corpus, Document
from SpanJudge.evaluate.span_matcher import classify_corpus

LIVER_TOKENS = "1cm cyst in the right lobe of the liver".split()

def pytest_configure(config):
    config.addinivalue_line("markers", "slow: corpus-scale runtime checks")

@pytest.fixture
def liver_corpus() -> Corpus:
    """One gold problem over the whole phrase, predicted as two separate problems"""
    doc = Document.build("fig1", LIVER_TOKENS,
        gold_spans=[(0, 9, "problem")],
        pred_spans=[(0, 6, "problem"), (8, 9, "problem")])
    return Corpus.from_documents([doc])

@pytest.fixture
def liver_report(liver_corpus):
    return classify_corpus(liver_corpus)

@pytest.fixture
def mixed_corpus() -> Corpus:
    """Every mismatch type at least once over two documents"""
    doc1 = Document.build("a", "an adenosine - thallium stress test showed no ischemia today".split(),
        gold_spans=[(0, 6, "test"), (8, 9, "problem")],
        pred_spans=[(3, 6, "test"), (8, 9, "treatment")])
    doc2 = Document.build("b", "patient given aspirin for chest pain after the scan".split(),
        gold_spans=[(2, 3, "treatment"), (4, 6, "problem"), (8, 9, "test")],
        pred_spans=[(0, 1, "problem"), (2, 3, "treatment"), (5, 7, "test")])
    return Corpus.from_documents([doc1, doc2])
