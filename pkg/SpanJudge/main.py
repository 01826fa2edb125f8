import os
import sys
import logging
import argparse
from typing import Union, Sequence, Optional

import yaml

from SpanJudge import __version__
from SpanJudge.util import read_bytes
from SpanJudge.common.config import Config
from SpanJudge.common.corpus import Corpus, CorpusError, ParseError, AlignmentError, pair_corpora
from SpanJudge.parsers import read_corpus
from SpanJudge.parsers.standoff import write_standoff
from SpanJudge.evaluate.span_matcher import MatchContractError, classify_corpus, write_ledger, read_ledger
from SpanJudge.evaluate.metrics import compute_suite
from SpanJudge.evaluate.decisions import UncoveredRecordsError, write_decisions, read_decisions
from SpanJudge.evaluate import judgement as judge
from SpanJudge.ml.cls_data_builder import (BuilderError, BuilderConfig, build_training_set,
    ingest_external_chunks, write_pairs, read_pairs)
from SpanJudge.ml.entity_classifier import (ClassifierError, ClassifierConfig, train, save_model, load_model,
    decide_type5, evaluate_classifier, parse_classifier_responses, run_external_classifier)
from SpanJudge.generate_data.perturb import PlanError, PerturbationPlan, perturb, write_expected_ledger
from SpanJudge.report import run_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_ALIGNMENT = 3
EXIT_UNCOVERED = 4

class UsageError(RuntimeError):
    pass

class _Parser(argparse.ArgumentParser):
    """Report argument errors with the usage exit code"""
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "{}: error: {}\n".format(self.prog, message))

def sibling(path: str, suffix: str) -> str:
    """`<dir>/<stem><suffix>` for `<dir>/<stem>.<ext>`"""
    return os.path.splitext(path)[0] + suffix

def _config(args: argparse.Namespace) -> Config:
    return Config(args.config, seed=args.seed)

def _n_jobs(args: argparse.Namespace, config: Config) -> int:
    return args.n_jobs if args.n_jobs is not None else config.n_jobs

def _read(path: str, args: argparse.Namespace, n_jobs: int) -> Corpus:
    if not os.path.isfile(path):
        raise UsageError("no such file: {}".format(path))
    return read_corpus(path, format=args.format, scheme=args.scheme, n_jobs=n_jobs)

def _require(path: Optional[str]) -> None:
    if path is not None and not os.path.isfile(path):
        raise UsageError("no such file: {}".format(path))

def _load_run(report_path: str):
    """The report document and the ledger recorded next to it"""
    _require(report_path)
    run = run_report.read_report(report_path)
    ledger = run_report.ledger_path(report_path)
    _require(ledger)
    if "ledger" in run and run_report.input_entry(ledger)["sha256"] != run["ledger"]["sha256"]:
        raise ParseError("ledger {} does not match the digest recorded in {}".format(ledger, report_path))
    return run, read_ledger(ledger)

def _print_headline(run: dict) -> None:
    for convention, p, r, f1 in run_report.headline(run):
        print("{:<16} P={:6.2f} R={:6.2f} F1={:6.2f}".format(convention, p, r, f1))

def _write_outputs(run: dict, out: str, render: str) -> None:
    run_report.write_report(run, out)
    if render == "markdown":
        with open(sibling(out, ".md"), "w", encoding="utf-8") as fh:
            fh.write(run_report.render_markdown(run))
    _print_headline(run)

def cmd_eval(args: argparse.Namespace) -> int:
    """Match predictions against gold annotations and write the run report and ledger"""
    config = _config(args)
    n_jobs = _n_jobs(args, config)
    _require(args.external_decisions)

    gold = _read(args.gold, args, n_jobs)
    inputs = {"gold": args.gold}
    if args.pred is not None:
        pred = _read(args.pred, args, n_jobs)
        inputs["pred"] = args.pred
        corpus = pair_corpora(gold, pred)
    else:
        corpus = gold

    report = classify_corpus(corpus, n_jobs=n_jobs)
    decisions = None
    if args.external_decisions is not None:
        decisions = parse_classifier_responses(read_bytes(args.external_decisions), report, corpus.label_set)
        inputs["external_decisions"] = args.external_decisions
        write_decisions(decisions, sibling(args.out, ".decisions.jsonl"))
    suite = compute_suite(report, decisions)

    ledger = run_report.ledger_path(args.out)
    write_ledger(report, ledger)
    run = run_report.build_run_report(inputs, config.seed, corpus, report, suite, ledger=ledger, decisions=decisions)
    _write_outputs(run, args.out, args.render)
    return EXIT_OK

def cmd_build_clsdata(args: argparse.Namespace) -> int:
    """Write (entity, tag) pairs plus the sampled other class"""
    config = _config(args)
    corpus = _read(args.train, args, _n_jobs(args, config))
    chunks = None
    if args.chunks is not None:
        _require(args.chunks)
        chunks = ingest_external_chunks(args.chunks)
    pairs = build_training_set(corpus, BuilderConfig.from_config(config), external_chunks=chunks)
    write_pairs(pairs, args.out)
    print("{} pairs written to {}".format(len(pairs), args.out))
    return EXIT_OK

def cmd_train_cls(args: argparse.Namespace) -> int:
    config = _config(args)
    _require(args.pairs)
    model = train(read_pairs(args.pairs), ClassifierConfig.from_config(config))
    save_model(model, args.out)
    print("Model over {} labels written to {}".format(len(model.labels), args.out))
    return EXIT_OK

def cmd_eval_cls(args: argparse.Namespace) -> int:
    """Held-out accuracy and per-label scores of a trained classifier"""
    _require(args.pairs)
    _require(args.model)
    table = evaluate_classifier(load_model(args.model), read_pairs(args.pairs))
    print(table.round(4).to_string())
    if args.out is not None:
        table.to_csv(args.out, sep="\t")
    return EXIT_OK

def cmd_refine(args: argparse.Namespace) -> int:
    """Accept or reject every Type 5 record and add the learning-based scores"""
    if (args.model is None) == (args.external_decisions is None):
        raise UsageError("refine needs exactly one of --model or --external-decisions")
    run, report = _load_run(args.report)
    labels = run["corpus"]["label_set"]

    if args.model is not None:
        _require(args.model)
        decisions = decide_type5(load_model(args.model), report)
        run["inputs"]["model"] = run_report.input_entry(args.model)
    elif args.external_command is not None:
        decisions = run_external_classifier(report, sibling(args.out, ".requests.jsonl"), args.external_decisions,
            labels=labels, command=args.external_command)
        run["inputs"]["external_decisions"] = run_report.input_entry(args.external_decisions)
    else:
        _require(args.external_decisions)
        decisions = parse_classifier_responses(read_bytes(args.external_decisions), report, labels)
        run["inputs"]["external_decisions"] = run_report.input_entry(args.external_decisions)

    write_decisions(decisions, sibling(args.out, ".decisions.jsonl"))
    run["metrics"] = compute_suite(report, decisions).to_dict()
    run["decisions"] = run_report.decision_section(report, decisions)
    run.pop("judgement", None)
    _copy_ledger(args.report, args.out, run)
    _write_outputs(run, args.out, args.render)
    return EXIT_OK

def _copy_ledger(report_path: str, out: str, run: dict) -> None:
    """Keep the ledger beside the report when the report is written elsewhere"""
    src, dst = run_report.ledger_path(report_path), run_report.ledger_path(out)
    if os.path.abspath(src) != os.path.abspath(dst):
        with open(src, "rb") as fin, open(dst, "wb") as fout:
            fout.write(fin.read())

def cmd_judge(args: argparse.Namespace) -> int:
    """Add expert-judgement scores, human F-scores and metric errors to a report"""
    config = _config(args)
    run, report = _load_run(args.report)
    _require(args.judgements)
    records = judge.load_judgements(args.judgements, report)

    decisions_file = args.decisions
    if decisions_file is None and "decisions" in run:
        decisions_file = sibling(args.report, ".decisions.jsonl")
    decisions = None
    if decisions_file is not None:
        _require(decisions_file)
        decisions = read_decisions(decisions_file)

    human = {p.convention: judge.profile_decisions(records, p) for p in judge.UserProfile}
    suite = compute_suite(report, decisions, human=human)
    run["inputs"]["judgements"] = run_report.input_entry(args.judgements)
    run["metrics"] = suite.to_dict()
    run["judgement"] = run_report.judgement_section(report, records, suite, decisions,
        low_confidence=float(config.section("classifier").get("low_confidence", 0.5)))
    _copy_ledger(args.report, args.out, run)
    _write_outputs(run, args.out, args.render)

    profile = judge.UserProfile.STRICT if args.profile == "strict" else judge.UserProfile.FORGIVING
    for convention, errors in run["judgement"]["metric_error"].items():
        print("{} error vs {}: {:+.2f}".format(convention, profile.value, errors[profile.value]))
    return EXIT_OK

def cmd_perturb(args: argparse.Namespace) -> int:
    """Write a perturbed prediction corpus and its expected ledger"""
    config = _config(args)
    gold = _read(args.gold, args, _n_jobs(args, config))
    overrides = None
    if args.plan is not None:
        _require(args.plan)
        with open(args.plan) as fh:
            try:
                overrides = yaml.safe_load(fh) or {}
            except yaml.YAMLError as e:
                raise PlanError("{} is not a valid plan file: {}".format(args.plan, e))
        if not isinstance(overrides, dict):
            raise PlanError("{} must contain a mapping".format(args.plan))
    plan = PerturbationPlan.from_config(config, overrides)
    pred, expected = perturb(gold, plan, n_jobs=_n_jobs(args, config))
    write_standoff(pred, args.out + ".pred.jsonl")
    write_expected_ledger(expected, args.out + ".expected.jsonl")
    print(", ".join("{}={}".format(k.short_name, n) for k, n in expected.counts.items()))
    return EXIT_OK

def cmd_compare(args: argparse.Namespace) -> int:
    """Error distributions and headline scores of several runs side by side"""
    for path in args.reports:
        _require(path)
    runs = {os.path.splitext(os.path.basename(p))[0]: run_report.read_report(p) for p in args.reports}
    if len(runs) != len(args.reports):
        raise UsageError("report file names must be distinct")
    table = run_report.compare_reports(runs)
    print(table.to_string())
    if args.out is not None:
        table.to_csv(args.out, sep="\t")
    return EXIT_OK

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="YAML file merged over the shipped defaults")
    common.add_argument("--seed", type=int, default=None, help="Override the configured seed")
    common.add_argument("--log-level", default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--n-jobs", type=int, default=None, help="joblib workers for per-document steps")

    corpus_opts = argparse.ArgumentParser(add_help=False)
    corpus_opts.add_argument("--format", default="iob", choices=["iob", "standoff"])
    corpus_opts.add_argument("--scheme", default="iob2", choices=["iob2", "iob1"])

    render_opts = argparse.ArgumentParser(add_help=False)
    render_opts.add_argument("--render", default="none", choices=["none", "markdown"],
        help="Also write <out stem>.md")

    parser = _Parser(prog="spanjudge", description="Entity-level NER evaluation with mismatch types")
    parser.add_argument("--version", action="version", version="%(prog)s {}".format(__version__))
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("eval", parents=[common, corpus_opts, render_opts], help=cmd_eval.__doc__)
    p.add_argument("gold")
    p.add_argument("pred", nargs="?", default=None,
        help="Predictions; omit when the gold standoff file also holds predicted entities")
    p.add_argument("--out", required=True)
    p.add_argument("--external-decisions", default=None, help="External classifier response file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("build-clsdata", parents=[common, corpus_opts], help=cmd_build_clsdata.__doc__)
    p.add_argument("train")
    p.add_argument("--out", required=True)
    p.add_argument("--chunks", default=None, help="Externally computed chunks, one per line")
    p.set_defaults(func=cmd_build_clsdata)

    p = sub.add_parser("train-cls", parents=[common], help="Train the entity classifier")
    p.add_argument("pairs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_cls)

    p = sub.add_parser("eval-cls", parents=[common], help=cmd_eval_cls.__doc__)
    p.add_argument("pairs")
    p.add_argument("model")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval_cls)

    p = sub.add_parser("refine", parents=[common, render_opts], help=cmd_refine.__doc__)
    p.add_argument("report")
    p.add_argument("--model", default=None)
    p.add_argument("--external-decisions", default=None, help="External classifier response file")
    p.add_argument("--external-command", default=None,
        help="Command producing the response file; {request} and {response} are substituted")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("judge", parents=[common, render_opts], help=cmd_judge.__doc__)
    p.add_argument("report")
    p.add_argument("judgements")
    p.add_argument("--decisions", default=None)
    p.add_argument("--profile", default="strict", choices=["strict", "forgiving"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("perturb", parents=[common, corpus_opts], help=cmd_perturb.__doc__)
    p.add_argument("gold")
    p.add_argument("--plan", default=None, help="YAML with perturb settings (rates, max_extend, max_shrink)")
    p.add_argument("--out", required=True, help="Output prefix")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("compare", parents=[common], help=cmd_compare.__doc__)
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)
    return parser

def main(argv: Union[Sequence[str], None] = None) -> int:
    args = build_parser().parse_args(argv)

    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger('joblib').setLevel(logging.WARNING)
    logging.getLogger('numexpr').setLevel(logging.WARNING)

    try:
        return args.func(args)
    except ParseError as e:
        print("parse error: {}".format(e), file=sys.stderr)
        return EXIT_PARSE
    except AlignmentError as e:
        print("alignment error: {}".format(e), file=sys.stderr)
        return EXIT_ALIGNMENT
    except UncoveredRecordsError as e:
        print("error: {}".format(e), file=sys.stderr)
        return EXIT_UNCOVERED
    except (UsageError, CorpusError, MatchContractError, BuilderError, ClassifierError, PlanError,
            judge.JudgementError, ValueError, OSError) as e:
        print("error: {}".format(e), file=sys.stderr)
        return EXIT_USAGE

if __name__ == "__main__":
    sys.exit(main())
