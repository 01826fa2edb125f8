import json
import itertools

import numpy as np
import pytest

from SpanJudge.evaluate.decisions import Verdict, UncoveredRecordsError
from SpanJudge.ml.cls_data_builder import LabeledText, OTHER
from SpanJudge.ml.entity_classifier import (ClassifierConfig, ClassifierError, ExternalResponseError, train,
    predict, predict_many, decide_type5, evaluate_classifier, save_model, load_model, write_classifier_requests,
    parse_classifier_responses, run_external_classifier)

SMALL = ClassifierConfig(seed=3, buckets=2**16)

DRUGS = ["aspirin", "heparin", "warfarin", "insulin", "morphine", "lasix", "tylenol", "digoxin", "coumadin", "zosyn"]
DOSES = ["10mg", "20mg", "5 units", "daily", "iv", "po", "bid", "tid", "prn", "qhs"]
ORGANS = ["chest", "abdominal", "back", "leg", "neck", "head", "flank", "joint", "pelvic", "shoulder"]
SYMPTOMS = ["pain", "swelling", "tenderness", "edema", "bleeding", "rash", "mass", "cramps", "injury", "bruising"]

def separable_pairs():
    drugs = [LabeledText("{} {}".format(d, s), "treatment") for d, s in itertools.product(DRUGS, DOSES)]
    problems = [LabeledText("{} {}".format(o, s), "problem") for o, s in itertools.product(ORGANS, SYMPTOMS)]
    return drugs + problems

@pytest.fixture(scope="module")
def model():
    return train(separable_pairs(), SMALL)

def test_separable_pairs_are_learned(model):
    pairs = separable_pairs()
    assert len(pairs) == 200
    predicted = [p.label for p in predict_many(model, [p.text for p in pairs])]
    accuracy = np.mean([a == p.label for a, p in zip(predicted, pairs)])
    assert accuracy >= 0.95
    assert predict(model, "aspirin").label == "treatment"
    assert predict(model, "knee pain").label == "problem"

def test_distribution_is_normalized(model):
    prediction = predict(model, "heparin drip")
    assert set(prediction.distribution) == {"problem", "treatment"}
    assert sum(prediction.distribution.values()) == pytest.approx(1.)
    assert prediction.confidence == max(prediction.distribution.values())

def test_repeated_text_is_confident():
    pairs = [LabeledText("aspirin", "treatment")]*50 + [LabeledText("chest pain", "problem")]*50
    model = train(pairs, SMALL)
    prediction = predict(model, "aspirin")
    assert prediction.label == "treatment"
    assert prediction.confidence > 0.9

@pytest.mark.parametrize("pairs", [[], [LabeledText("aspirin", "treatment")]*3])
def test_training_needs_two_labels(pairs):
    with pytest.raises(ClassifierError):
        train(pairs, SMALL)

def test_empty_text_is_rejected(model):
    with pytest.raises(ClassifierError):
        predict(model, "  ")

def test_training_is_reproducible(tmp_path):
    first, second = tmp_path / "a.joblib", tmp_path / "b.joblib"
    save_model(train(separable_pairs(), SMALL), str(first))
    save_model(train(separable_pairs(), SMALL), str(second))
    assert first.read_bytes() == second.read_bytes()
    assert load_model(str(first)) == load_model(str(second))

def test_load_rejects_foreign_files(tmp_path):
    path = tmp_path / "model.joblib"
    path.write_text("not a model")
    with pytest.raises(ClassifierError):
        load_model(str(path))

def test_evaluate_classifier(model):
    table = evaluate_classifier(model, [LabeledText("aspirin po", "treatment"), LabeledText("chest swelling", "problem")])
    assert table.loc["accuracy", "f1-score"] == 1.
    assert table.loc["treatment", "support"] == 1

def test_decisions_follow_the_predicted_label(liver_report):
    pairs = [LabeledText("cyst in the right lobe", "problem")]*20 + [LabeledText("liver", OTHER)]*20
    decisions = decide_type5(train(pairs, SMALL), liver_report)
    assert decisions["fig1:0"].verdict == Verdict.ACCEPT
    assert decisions["fig1:1"].verdict == Verdict.REJECT
    assert decisions["fig1:1"].predicted_label == OTHER

def _response(**obj):
    return json.dumps(obj) + "\n"

def test_external_responses(liver_report, tmp_path):
    requests = tmp_path / "requests.jsonl"
    assert write_classifier_requests(liver_report, str(requests)) == 2
    assert [json.loads(l)["text"] for l in requests.read_text().splitlines()] == ["1cm cyst in the right lobe", "liver"]

    content = _response(id="fig1:0", label="problem", confidence=0.8) + \
        _response(id="fig1:1", label="other", confidence=0.3)
    decisions = parse_classifier_responses(content, liver_report)
    assert decisions["fig1:0"].accepted and not decisions["fig1:1"].accepted

@pytest.mark.parametrize("content, message", [
    (_response(id="fig1:0", label="organ", confidence=0.8), "unknown label"),
    (_response(id="fig1:0", label="problem", confidence=1.5), "outside"),
    (_response(id="fig1:7", label="problem", confidence=0.5), "not a Type 5"),
    (_response(id="fig1:0", label="problem", confidence=0.5)*2, "duplicate"),
    ("{id: 1}\n", "invalid JSON"),
])
def test_invalid_external_responses(liver_report, content, message):
    with pytest.raises(ExternalResponseError, match=message):
        parse_classifier_responses(content, liver_report)

def test_partial_external_responses_leave_records_uncovered(liver_report):
    content = _response(id="fig1:0", label="problem", confidence=0.8)
    with pytest.raises(UncoveredRecordsError) as err:
        parse_classifier_responses(content, liver_report)
    assert err.value.record_ids == ["fig1:1"]

def test_external_command(liver_report, tmp_path):
    canned = tmp_path / "canned.jsonl"
    canned.write_text(_response(id="fig1:1", label="problem", confidence=0.6) +
        _response(id="fig1:0", label="other", confidence=0.9))
    decisions = run_external_classifier(liver_report, str(tmp_path / "req.jsonl"), str(tmp_path / "resp.jsonl"),
        command="cp {} {{response}}".format(canned))
    assert [d.accepted for _, d in sorted(decisions.items())] == [False, True]

def test_external_command_failure(liver_report, tmp_path):
    with pytest.raises(ClassifierError):
        run_external_classifier(liver_report, str(tmp_path / "req.jsonl"), str(tmp_path / "resp.jsonl"),
            command="false")
