"""Structured run reports and the Markdown rendered from them.

A report is a plain dict serialized as one JSON document. It only holds what
follows from the inputs, the configuration and the seed (no timestamps or
absolute paths), so equal runs produce byte-identical files. Every
percentage sits next to the raw counts it was computed from.
"""

import os
import json
import logging
from typing import Sequence, Mapping, Optional, Any

import pandas as pd

from SpanJudge import __version__
from SpanJudge.util import file_digest, pct
from SpanJudge.common.corpus import Corpus, describe_corpus
from SpanJudge.evaluate.span_matcher import MatchReport, MismatchType, ERROR_TYPES, error_distribution
from SpanJudge.evaluate.metrics import MetricSuite, Convention
from SpanJudge.evaluate.decisions import Decision
from SpanJudge.evaluate import judgement as judge

logger = logging.getLogger(__name__)

HEADLINE = [Convention.EXACT, Convention.RELAXED, Convention.LEARNING_BASED,
    Convention.HUMAN_STRICT, Convention.HUMAN_FORGIVING]

def input_entry(path: str) -> dict[str, str]:
    return {"file": os.path.basename(path), "sha256": file_digest(path)}

def corpus_section(corpus: Corpus) -> dict[str, Any]:
    stats = describe_corpus(corpus)
    return {
        "documents": stats["documents"],
        "sentences": stats["sentences"],
        "tokens": stats["tokens"],
        "gold_entities": stats["gold_entities"],
        "predicted_entities": stats["predicted_entities"],
        "label_set": list(corpus.label_set),
        "per_label": {l: {c: int(v) for c, v in row.items()} for l, row in stats["per_label"].iterrows()}
    }

def match_section(report: MatchReport) -> dict[str, Any]:
    """Counts per type overall and per label, plus the share of each error type"""
    distribution = error_distribution(report)
    per_label = report.label_counts()
    return {
        **report.summary(),
        "per_label": {l: {k: int(v) for k, v in row.items()} for l, row in per_label.iterrows()},
        "error_distribution": {k: {"count": int(row["count"]), "share": float(row["share"])} \
            for k, row in distribution.iterrows()},
        "type5_share_of_errors": pct(report.counts[MismatchType.TYPE5], report.n_errors)
    }

def decision_section(report: MatchReport, decisions: Mapping[str, Decision]) -> dict[str, Any]:
    """Accepted and rejected Type 5 counts and their shares of all errors"""
    type5 = [r.record_id for r in report.type5_records]
    accepted = sum(1 for rid in type5 if decisions[rid].accepted)
    rejected = len(type5) - accepted
    return {
        "type5": len(type5),
        "accepted": accepted,
        "rejected": rejected,
        "errors": report.n_errors,
        "accepted_share_of_type5": pct(accepted, len(type5)),
        "accepted_share_of_errors": pct(accepted, report.n_errors),
        "rejected_share_of_errors": pct(rejected, report.n_errors)
    }

def judgement_section(report: MatchReport, records: Sequence[judge.JudgementRecord], suite: MetricSuite,
                      decisions: Optional[Mapping[str, Decision]] = None, low_confidence: float = 0.5) -> dict[str, Any]:
    """Score distribution, human F for both profiles, signed metric errors and
    (with decisions) classifier/expert agreement"""
    human = {p: judge.human_f(report, records, p) for p in judge.UserProfile}
    errors = {}
    for convention in (Convention.EXACT, Convention.RELAXED, Convention.LEARNING_BASED):
        if convention in suite:
            errors[convention.value] = {p.value: round(judge.metric_error(suite[convention], human[p]), 2) \
                for p in judge.UserProfile}

    section = {
        "judged": len(records),
        "coverage": round(100. * judge.judgement_coverage(records, report), 2),
        "distribution": judge.score_distribution(records).to_dict(),
        "human": {p.value: human[p].to_dict() for p in judge.UserProfile},
        "metric_error": errors
    }
    if decisions is not None:
        stats = judge.agreement(decisions, records, report=report, low_confidence=low_confidence)
        crosstab = judge.decision_crosstab(decisions, records)
        section["agreement"] = stats.to_dict()
        section["crosstab"] = {o: {v: int(n) for v, n in row.items()} for o, row in crosstab.iterrows()}
    return section

def build_run_report(inputs: Mapping[str, str], seed: int, corpus: Corpus, report: MatchReport, suite: MetricSuite,
                     ledger: Optional[str] = None, decisions: Optional[Mapping[str, Decision]] = None,
                     judgement: Optional[dict[str, Any]] = None) -> dict[str, Any]:
    """Assemble the report document

    Parameters
    ----------
    inputs : dict name -> path
        Files whose names and digests are recorded
    ledger : str, optional
        Path of the mismatch ledger written alongside the report
    """
    run = {
        "tool": {"name": "SpanJudge", "version": __version__},
        "seed": seed,
        "inputs": {name: input_entry(path) for name, path in inputs.items()},
        "corpus": corpus_section(corpus),
        "match": match_section(report),
        "metrics": suite.to_dict()
    }
    if ledger is not None:
        run["ledger"] = input_entry(ledger)
    if decisions is not None:
        run["decisions"] = decision_section(report, decisions)
    if judgement is not None:
        run["judgement"] = judgement
    return run

def dumps_report(run: Mapping[str, Any]) -> str:
    return json.dumps(run, indent=2, ensure_ascii=False, allow_nan=False) + "\n"

def write_report(run: Mapping[str, Any], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_report(run))

def read_report(path: str) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)

def ledger_path(report_path: str) -> str:
    """`<dir>/<stem>.ledger.jsonl` for a report at `<dir>/<stem>.<ext>`"""
    stem, _ = os.path.splitext(report_path)
    return stem + ".ledger.jsonl"

def headline(run: Mapping[str, Any]) -> list[tuple[str, float, float, float]]:
    """(convention, P, R, F1) for the conventions present, in display order"""
    metrics = run["metrics"]
    rows = []
    for convention in HEADLINE:
        if convention.value in metrics:
            o = metrics[convention.value]["overall"]
            rows.append((convention.value, o["precision"], o["recall"], o["f1"]))
    return rows

def _table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return lines

def render_markdown(run: Mapping[str, Any]) -> str:
    """Human-readable summary derived only from the report document"""
    lines = ["# SpanJudge run report", "",
        "Version {}, seed {}.".format(run["tool"]["version"], run["seed"]), ""]

    lines += ["## Inputs", ""]
    lines += _table(["input", "file", "sha256"], [(k, v["file"], v["sha256"]) for k, v in run["inputs"].items()])

    c = run["corpus"]
    lines += ["", "## Corpus", "",
        "{} documents, {} sentences, {} tokens, {} gold and {} predicted entities.".format(
            c["documents"], c["sentences"], c["tokens"], c["gold_entities"], c["predicted_entities"]), ""]

    m = run["match"]
    lines += ["## Mismatches", ""]
    lines += _table(["kind", "count", "share of errors (%)"],
        [(MismatchType.EXACT_MATCH.value, m["counts"][MismatchType.EXACT_MATCH.value], "")] + \
        [(k, v["count"], v["share"]) for k, v in m["error_distribution"].items()])
    lines += ["", "Type 5 share of errors: {}%".format(m["type5_share_of_errors"]), ""]

    lines += ["## Scores", ""]
    lines += _table(["convention", "P", "R", "F1"], headline(run))
    semeval = [(k, v["overall"]["precision"], v["overall"]["recall"], v["overall"]["f1"]) \
        for k, v in run["metrics"].items() if k.startswith("SemEval")]
    lines += [""] + _table(["SemEval mode", "P", "R", "F1"], semeval)

    if "decisions" in run:
        d = run["decisions"]
        lines += ["", "## Classifier decisions", "",
            "{} of {} Type 5 mismatches accepted ({}%), {}% of all {} errors.".format(
                d["accepted"], d["type5"], d["accepted_share_of_type5"], d["accepted_share_of_errors"], d["errors"])]

    if "judgement" in run:
        j = run["judgement"]
        dist = j["distribution"]
        lines += ["", "## Expert judgement", ""]
        lines += _table(["score", "count", "%"], [(s, dist["counts"][s], dist["percent"][s]) for s in dist["counts"]])
        lines += [""] + _table(["profile", "P", "R", "F1"],
            [(p, v["precision"], v["recall"], v["f1"]) for p, v in j["human"].items()])
        lines += [""] + _table(["metric"] + [p for p in j["human"]],
            [[k] + [v[p] for p in j["human"]] for k, v in j["metric_error"].items()])
        if "agreement" in j:
            a = j["agreement"]
            lines += ["", "Expert agrees with {}% of classifier accepts; classifier accepts {}% of expert accepts; "
                "{}% disagreement, {}% of it below the confidence threshold.".format(
                a["expert_given_classifier"], a["classifier_given_expert"], a["disagreement_rate"],
                a["low_confidence_share"])]
    return "\n".join(lines) + "\n"

def compare_reports(runs: Mapping[str, Mapping[str, Any]]) -> pd.DataFrame:
    """One row per run: error type shares, headline F-scores and the Type 5 share of errors"""
    rows = []
    for name, run in runs.items():
        row = {"run": name, "errors": run["match"]["errors"]}
        for kind in ERROR_TYPES:
            row[kind.short_name] = run["match"]["error_distribution"][kind.value]["share"]
        row["type5_share"] = run["match"]["type5_share_of_errors"]
        for convention, _, _, f1 in headline(run):
            row[convention] = f1
        if "decisions" in run:
            row["accepted_share_of_errors"] = run["decisions"]["accepted_share_of_errors"]
        rows.append(row)
    return pd.DataFrame(rows).set_index("run")
