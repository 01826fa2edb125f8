"""A hashed n-gram linear classifier over entity texts, used to accept or
reject Type 5 mismatches, plus a file protocol for classifiers that run
outside this package.

Features are character n-grams (within word boundaries) and word unigrams of
the lowercased text, hashed into a fixed number of buckets, summed and L2
normalized. The model is a multinomial logistic regression trained by seeded
stochastic gradient descent, so equal inputs give byte-identical models.
"""

import json
import shlex
import logging
import subprocess
from dataclasses import dataclass, asdict
from typing import Union, Sequence, Optional, Any, TypeVar

import numpy as np
import pandas as pd
import joblib
from scipy.special import softmax
from sklearn.feature_extraction.text import HashingVectorizer
from sklearn.preprocessing import normalize
from sklearn.metrics import classification_report, accuracy_score

from SpanJudge.util import read_bytes, decode_utf8
from SpanJudge.common.config import Config, default_config
from SpanJudge.evaluate.span_matcher import MatchReport
from SpanJudge.evaluate.decisions import Decision, UncoveredRecordsError, decide
from SpanJudge.ml.cls_data_builder import LabeledText, OTHER

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

class ClassifierError(RuntimeError):
    pass

class ExternalResponseError(ClassifierError):
    pass

_Self = TypeVar('_Self', bound='ClassifierConfig')

@dataclass(frozen=True)
class ClassifierConfig:
    seed: int = 13
    epochs: int = 5
    learning_rate: float = 0.5
    buckets: int = 2**20
    char_ngram_range: tuple[int, int] = (3, 5)
    low_confidence: float = 0.5

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.buckets < 1 or self.learning_rate <= 0:
            raise ClassifierError("epochs, buckets and learning_rate must be positive")
        lo, hi = self.char_ngram_range
        if not 1 <= lo <= hi:
            raise ClassifierError("invalid char_ngram_range {}".format(self.char_ngram_range))

    @classmethod
    def from_config(cls: type[_Self], config: Config = default_config) -> _Self:
        section = config.section("classifier")
        defaults = cls()
        return cls(
            seed=section["seed"],
            epochs=int(section.get("epochs", defaults.epochs)),
            learning_rate=float(section.get("learning_rate", defaults.learning_rate)),
            buckets=int(section.get("buckets", defaults.buckets)),
            char_ngram_range=tuple(section.get("char_ngram_range", defaults.char_ngram_range)),
            low_confidence=float(section.get("low_confidence", defaults.low_confidence)))

@dataclass(frozen=True)
class Prediction:
    label: str
    confidence: float
    distribution: dict[str, float]

class Featurizer(object):
    """Stateless hashed feature extraction shared by training and prediction"""
    def __init__(self, buckets: int, char_ngram_range: tuple[int, int] = (3, 5)) -> None:
        self.buckets = buckets
        self.chars = HashingVectorizer(analyzer="char_wb", ngram_range=tuple(char_ngram_range),
            lowercase=True, n_features=buckets, alternate_sign=False, norm=None)
        self.words = HashingVectorizer(analyzer="word", token_pattern=r"(?u)\b\w+\b",
            lowercase=True, n_features=buckets, alternate_sign=False, norm=None)

    def transform(self, texts: Sequence[str]):
        X = self.chars.transform(texts) + self.words.transform(texts)
        X = normalize(X.tocsr(), norm="l2")
        X.sort_indices()
        return X

class ClassifierModel(object):
    """Per-label weight vectors over the hashed feature table

    Parameters
    ----------
    labels : sequence of str
        Sorted label set; argmax ties go to the earliest label
    weights : np.ndarray
        buckets x |labels|
    bias : np.ndarray
        |labels|
    config : ClassifierConfig
    """
    def __init__(self, labels: Sequence[str], weights: np.ndarray, bias: np.ndarray, config: ClassifierConfig) -> None:
        self.labels = tuple(labels)
        self.weights = weights
        self.bias = bias
        self.config = config
        if self.weights.shape != (config.buckets, len(self.labels)) or self.bias.shape != (len(self.labels),):
            raise ClassifierError("weight table has shape {}, expected {}".format(
                self.weights.shape, (config.buckets, len(self.labels))))
        self.featurizer = Featurizer(config.buckets, config.char_ngram_range)

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        X = self.featurizer.transform(texts)
        return softmax(np.asarray(X @ self.weights) + self.bias, axis=1)

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, ClassifierModel) and self.labels == other.labels and \
            self.config == other.config and np.array_equal(self.weights, other.weights) and \
            np.array_equal(self.bias, other.bias)

def train(pairs: Sequence[LabeledText], config: Optional[ClassifierConfig] = None) -> ClassifierModel:
    """Fit the model by SGD on the softmax loss, one shuffled pass per epoch.

    Raises
    ------
    ClassifierError
        No pairs, an empty text or fewer than two labels
    """
    if config is None:
        config = ClassifierConfig.from_config()
    if len(pairs) == 0:
        raise ClassifierError("no training pairs")
    if any(p.text.strip() == "" for p in pairs):
        raise ClassifierError("training pairs must have non-empty text")
    labels = sorted({p.label for p in pairs})
    if len(labels) < 2:
        raise ClassifierError("need at least two labels to train, got {}".format(labels))

    index = {l: i for i, l in enumerate(labels)}
    y = np.array([index[p.label] for p in pairs])
    featurizer = Featurizer(config.buckets, config.char_ngram_range)
    X = featurizer.transform([p.text for p in pairs])

    W = np.zeros((config.buckets, len(labels)))
    b = np.zeros(len(labels))
    rng = np.random.default_rng(config.seed)
    lr = config.learning_rate

    for epoch in range(config.epochs):
        loss = 0.
        for i in rng.permutation(len(pairs)):
            cols = X.indices[X.indptr[i]:X.indptr[i+1]]
            values = X.data[X.indptr[i]:X.indptr[i+1]]
            p = softmax(values @ W[cols] + b)
            loss -= np.log(max(p[y[i]], 1e-300))
            p[y[i]] -= 1.
            W[cols] -= lr * np.outer(values, p)
            b -= lr * p
        logger.info("Epoch {}/{}: mean loss {:.4f}".format(epoch+1, config.epochs, loss/len(pairs)))

    return ClassifierModel(labels, W, b, config)

def predict_many(model: ClassifierModel, texts: Sequence[str]) -> list[Prediction]:
    if any(t.strip() == "" for t in texts):
        raise ClassifierError("cannot classify empty text")
    if len(texts) == 0:
        return []
    probs = model.predict_proba(list(texts))
    predictions = []
    for row in probs:
        best = int(np.argmax(row))
        predictions.append(Prediction(model.labels[best], float(row[best]),
            {l: float(p) for l, p in zip(model.labels, row)}))
    return predictions

def predict(model: ClassifierModel, text: str) -> Prediction:
    return predict_many(model, [text])[0]

def decide_type5(model: ClassifierModel, report: MatchReport) -> dict[str, Decision]:
    """Classify the predicted text of every Type 5 record; accept when the
    classifier agrees with the record's label"""
    records = report.type5_records
    predictions = predict_many(model, [r.pred.text for r in records])
    decisions = {r.record_id: decide(r.record_id, r.label, p.label, p.confidence) \
        for r, p in zip(records, predictions)}
    logger.info("Accepted {} of {} Type 5 records".format(sum(d.accepted for d in decisions.values()), len(decisions)))
    return decisions

def evaluate_classifier(model: ClassifierModel, pairs: Sequence[LabeledText]) -> pd.DataFrame:
    """Per-label precision, recall, F1 and support on held-out pairs, plus
    accuracy and macro/weighted averages"""
    if len(pairs) == 0:
        raise ClassifierError("no pairs to evaluate on")
    y_true = [p.label for p in pairs]
    y_pred = [p.label for p in predict_many(model, [p.text for p in pairs])]
    labels = sorted(set(model.labels) | set(y_true))
    scores = classification_report(y_true, y_pred, labels=labels, output_dict=True, zero_division=0)
    rows = {k: v for k, v in scores.items() if isinstance(v, dict)}
    table = pd.DataFrame.from_dict(rows, orient="index", columns=["precision", "recall", "f1-score", "support"])
    table.loc["accuracy"] = [np.nan, np.nan, accuracy_score(y_true, y_pred), len(y_true)]
    return table

def save_model(model: ClassifierModel, path: str) -> None:
    joblib.dump({
        "format_version": MODEL_FORMAT_VERSION,
        "labels": list(model.labels),
        "config": asdict(model.config),
        "weights": model.weights,
        "bias": model.bias
    }, path, compress=3)

def load_model(path: str) -> ClassifierModel:
    try:
        state = joblib.load(path)
    except Exception as e:
        raise ClassifierError("cannot read model file {}: {}".format(path, e))
    if not isinstance(state, dict) or state.get("format_version") != MODEL_FORMAT_VERSION:
        raise ClassifierError("{} is not a version {} model file".format(path, MODEL_FORMAT_VERSION))
    config = dict(state["config"])
    config["char_ngram_range"] = tuple(config["char_ngram_range"])
    return ClassifierModel(state["labels"], state["weights"], state["bias"], ClassifierConfig(**config))

def write_classifier_requests(report: MatchReport, path: str) -> int:
    """Write one `{"id", "text"}` line per Type 5 record and return how many"""
    records = report.type5_records
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            print(json.dumps({"id": r.record_id, "text": r.pred.text}, ensure_ascii=False), file=fh)
    return len(records)

def parse_classifier_responses(content: Union[bytes, str], report: MatchReport,
                               labels: Optional[Sequence[str]] = None) -> dict[str, Decision]:
    """Validate external `{"id", "label", "confidence"}` lines and turn them into decisions

    Raises
    ------
    ExternalResponseError
        Duplicate or unknown ids, labels outside the label set plus "other",
        or confidences outside [0, 1]
    UncoveredRecordsError
        Type 5 records the responses leave without a label
    """
    text, bad_line = decode_utf8(content)
    if text is None:
        raise ExternalResponseError("line {}: response file is not valid UTF-8".format(bad_line))
    allowed = set(report.labels if labels is None else labels) | {OTHER}
    type5 = {r.record_id: r for r in report.type5_records}

    decisions = {}
    for line_no, line in enumerate(text.split("\n"), start=1):
        if line.strip() == "":
            continue
        try:
            obj = json.loads(line)
            record_id, label, confidence = obj["id"], obj["label"], float(obj["confidence"])
        except json.JSONDecodeError as e:
            raise ExternalResponseError("line {}: invalid JSON: {}".format(line_no, e.msg))
        except (KeyError, TypeError, ValueError) as e:
            raise ExternalResponseError("line {}: invalid response: {}".format(line_no, e))
        if record_id not in type5:
            raise ExternalResponseError("line {}: {} is not a Type 5 record".format(line_no, record_id))
        if record_id in decisions:
            raise ExternalResponseError("line {}: duplicate response for {}".format(line_no, record_id))
        if label not in allowed:
            raise ExternalResponseError("line {}: unknown label '{}' for {}".format(line_no, label, record_id))
        if not 0. <= confidence <= 1.:
            raise ExternalResponseError("line {}: confidence {} outside [0, 1]".format(line_no, confidence))
        decisions[record_id] = decide(record_id, type5[record_id].label, label, confidence)

    missing = sorted(set(type5) - set(decisions))
    if len(missing) > 0:
        raise UncoveredRecordsError(missing, what="classifier response")
    return decisions

def run_external_classifier(report: MatchReport, request_file: str, response_file: str,
                            labels: Optional[Sequence[str]] = None, command: Optional[str] = None) -> dict[str, Decision]:
    """Hand Type 5 texts to an outside classifier and read its labels back.

    Parameters
    ----------
    command : str, optional
        Shell-style command run after the request is written; `{request}` and
        `{response}` are replaced by the file paths. Without a command the
        response file must already exist.
    """
    n = write_classifier_requests(report, request_file)
    logger.info("Wrote {} classifier requests to {}".format(n, request_file))
    if command is not None:
        args = [a.format(request=request_file, response=response_file) for a in shlex.split(command)]
        logger.info("Running external classifier: {}".format(" ".join(args)))
        try:
            subprocess.run(args, check=True)
        except (OSError, subprocess.CalledProcessError) as e:
            raise ClassifierError("external classifier failed: {}".format(e))
    try:
        content = read_bytes(response_file)
    except OSError as e:
        raise ExternalResponseError("cannot read response file {}: {}".format(response_file, e))
    return parse_classifier_responses(content, report, labels)
