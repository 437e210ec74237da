"""Span-level precision/recall/F1 over exact (label, start, end) matches.

A predicted span counts as a true positive only when a gold span agrees on
all three of label, start and end; boundary misses earn nothing.  Metrics
are computed on spans directly, which is equivalent to converting to IOB2
first and scoring chunks: both sides reduce to the same span sets.
"""

import logging
from dataclasses import dataclass
from typing import Optional

from .corpus import (
    Sentence,
    TaggedCorpus,
    TagScheme,
    Token,
    convert_tags,
    extract_spans,
)
from .errors import StructureMismatchError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabelScores:
    precision: float
    recall: float
    f1: float
    gold_count: int
    pred_count: int


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    per_label: dict[str, LabelScores]

    def to_dict(self) -> dict:
        return {
            "micro": {"precision": self.precision, "recall": self.recall,
                      "f1": self.f1, "tp": self.tp, "fp": self.fp, "fn": self.fn},
            "labels": {
                label: {"precision": s.precision, "recall": s.recall,
                        "f1": s.f1, "gold": s.gold_count, "pred": s.pred_count}
                for label, s in sorted(self.per_label.items())
            },
        }


def _prf(tp: int, pred_total: int, gold_total: int) -> tuple[float, float, float]:
    precision = tp / pred_total if pred_total else 0.0
    recall = tp / gold_total if gold_total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _prediction_tags(sentence: Sentence) -> list[str]:
    """Tag sequence of the prediction side.

    Uses predicted tags when the sentence carries them on every token
    (output of a tagger run); otherwise falls back to gold tags, which is
    how predictions loaded from plain tag files arrive.
    """
    predicted = [tok.predicted_tag for tok in sentence]
    if all(t is not None for t in predicted):
        return predicted
    return sentence.gold_tags()


def _check_alignment(gold: TaggedCorpus, pred: TaggedCorpus) -> None:
    if len(gold) != len(pred):
        raise StructureMismatchError(
            f"gold has {len(gold)} sentences, predictions have {len(pred)}")
    for i, (gs, ps) in enumerate(zip(gold, pred)):
        if gs.texts() != ps.texts():
            raise StructureMismatchError(
                f"sentence {i} differs between gold and predictions",
                sentence_index=i)


def _span_set(corpus: TaggedCorpus, tags_of) -> set[tuple[int, str, int, int]]:
    spans = set()
    for i, sentence in enumerate(corpus):
        for span in extract_spans(tags_of(sentence), corpus.scheme):
            spans.add((i, span.label, span.start, span.end))
    return spans


def evaluate(gold: TaggedCorpus, pred: TaggedCorpus) -> EvalReport:
    """Score predictions against gold annotations span by span."""
    _check_alignment(gold, pred)
    gold_spans = _span_set(gold, lambda s: s.gold_tags())
    pred_spans = _span_set(pred, _prediction_tags)

    tp_spans = gold_spans & pred_spans
    tp, fp, fn = len(tp_spans), len(pred_spans - gold_spans), len(gold_spans - pred_spans)
    if not gold_spans and not pred_spans:
        logger.info("evaluate: no gold or predicted spans; all metrics are 0")
    precision, recall, f1 = _prf(tp, len(pred_spans), len(gold_spans))

    labels = sorted({s[1] for s in gold_spans} | {s[1] for s in pred_spans})
    per_label = {}
    for label in labels:
        g = {s for s in gold_spans if s[1] == label}
        p = {s for s in pred_spans if s[1] == label}
        lp, lr, lf = _prf(len(g & p), len(p), len(g))
        per_label[label] = LabelScores(lp, lr, lf, len(g), len(p))
    return EvalReport(precision, recall, f1, tp, fp, fn, per_label)


@dataclass(frozen=True)
class RunSummary:
    mean_f1: float
    per_run_f1: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"mean_f1": self.mean_f1, "runs": list(self.per_run_f1)}


def average_runs(reports: list[EvalReport]) -> RunSummary:
    """Mean micro F1 over repeated runs, individual values retained."""
    if not reports:
        raise ValueError("need at least one report to average")
    values = tuple(r.f1 for r in reports)
    return RunSummary(mean_f1=sum(values) / len(values), per_run_f1=values)


def write_conll_predictions(gold: TaggedCorpus, pred: TaggedCorpus, path) -> None:
    """Write "token gold pred" lines in IOB2, one blank line per sentence.

    This is the column layout the official CoNLL-2003 scorer consumes.
    """
    _check_alignment(gold, pred)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for gs, ps in zip(gold, pred):
            gold_tags = convert_tags(gs.gold_tags(), gold.scheme, TagScheme.IOB2)
            pred_tags = convert_tags(_prediction_tags(ps), pred.scheme, TagScheme.IOB2)
            for token, g, p in zip(gs, gold_tags, pred_tags):
                fh.write(f"{token.text} {g} {p}\n")
            fh.write("\n")


def read_conll_predictions(path, scheme: TagScheme = TagScheme.IOB2
                           ) -> tuple[TaggedCorpus, TaggedCorpus]:
    """Read a "token gold pred" file back into aligned (gold, pred) corpora.

    The prediction corpus carries the third column as predicted tags.
    """
    from .corpus import read_conll

    gold = read_conll(path, 0, 1, scheme)
    pred_tags = read_conll(path, 0, 2, scheme)
    sentences = []
    for gs, ps in zip(gold, pred_tags):
        tokens = tuple(
            Token(g.text, gold_tag=g.gold_tag, predicted_tag=p.gold_tag)
            for g, p in zip(gs, ps))
        sentences.append(Sentence(tokens))
    pred = TaggedCorpus(tuple(sentences), scheme=scheme, split=gold.split)
    return gold, pred


def format_report(report: EvalReport) -> str:
    """Aligned text table: micro row first, then per-label rows."""
    lines = [
        f"{'':10s} {'precision':>9s} {'recall':>9s} {'f1':>9s} {'gold':>6s} {'pred':>6s}",
        f"{'micro':10s} {report.precision:9.4f} {report.recall:9.4f} "
        f"{report.f1:9.4f} {report.tp + report.fn:6d} {report.tp + report.fp:6d}",
    ]
    for label, s in sorted(report.per_label.items()):
        lines.append(
            f"{label:10s} {s.precision:9.4f} {s.recall:9.4f} {s.f1:9.4f} "
            f"{s.gold_count:6d} {s.pred_count:6d}")
    return "\n".join(lines) + "\n"
