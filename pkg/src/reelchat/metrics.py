"""Placeholder-prediction metrics and a corpus scoring harness.

score_example compares one predicted placeholder tracking against gold;
score_corpus replays an annotated corpus through a predictor and
micro-aggregates the tallies into a MetricReport.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .delex import _KIND_TO_WORD, Placeholder, PlaceholderEntry, PlaceholderMap, _delex_turn_text
from .engine import Turn
from .extract import GenrePatternSet, extract_mentions
from .kb import Kind, MovieKB
from .predictor import PredictedTracking, PredictorInput, SystemAttributePredictor, predict
from .tracking import Label, Side

__all__ = [
    "ExampleTally",
    "MetricReport",
    "CorpusScore",
    "score_example",
    "score_corpus",
    "iter_examples",
    "OraclePredictor",
    "EmptyPredictor",
    "report_to_json",
    "report_to_table",
]


@dataclass(frozen=True)
class ExampleTally:
    exact: bool
    true_positives: int
    false_positives: int
    false_negatives: int
    tokens_correct: int
    tokens_total: int


@dataclass(frozen=True)
class MetricReport:
    """Micro-averaged scores, each in [0, 1].

    Zero-denominator conventions: an empty corpus scores 1.0 on the
    accuracies; precision and recall are 1.0 only when nothing was predicted
    AND nothing was expected, and 0.0 when one side is empty; f1 is 0.0
    when precision + recall is 0.
    """

    token_accuracy: float
    set_accuracy: float
    precision: float
    recall: float
    f1: float
    examples: int
    tokens: int

    def as_payload(self) -> dict:
        return {
            "token_accuracy": self.token_accuracy,
            "set_accuracy": self.set_accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "counts": {"examples": self.examples, "tokens": self.tokens},
        }


@dataclass(frozen=True)
class CorpusScore:
    report: MetricReport
    scored_dialogs: int
    skipped_dialogs: int


def _token_sequence(tracking: PredictedTracking) -> list[str]:
    # canonical order: kind groups, indexed placeholders by index, NEW last
    entries = sorted(
        tracking.entries,
        key=lambda e: (
            _KIND_TO_WORD[e.placeholder.kind],
            e.placeholder.is_new,
            e.placeholder.index if e.placeholder.index is not None else -1,
            e.label.value,
        ),
    )
    return [e.placeholder.render() for e in entries]


def score_example(predicted: PredictedTracking, gold: PredictedTracking) -> ExampleTally:
    """Entry-level and token-level tallies for one example.

    Entry tallies treat trackings as sets of (placeholder, label) pairs.
    Token tallies compare the canonically sorted placeholder renderings
    position by position, with the gold length as denominator.
    """
    tp = len(predicted.entries & gold.entries)
    fp = len(predicted.entries - gold.entries)
    fn = len(gold.entries - predicted.entries)
    predicted_tokens = _token_sequence(predicted)
    gold_tokens = _token_sequence(gold)
    correct = sum(
        1 for p, g in zip(predicted_tokens, gold_tokens) if p == g
    )
    return ExampleTally(
        exact=predicted.entries == gold.entries,
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
        tokens_correct=correct,
        tokens_total=len(gold_tokens),
    )


def aggregate(tallies: Iterable[ExampleTally]) -> MetricReport:
    examples = exact = tp = fp = fn = correct = total = 0
    for tally in tallies:
        examples += 1
        exact += 1 if tally.exact else 0
        tp += tally.true_positives
        fp += tally.false_positives
        fn += tally.false_negatives
        correct += tally.tokens_correct
        total += tally.tokens_total
    if tp + fp == 0 and tp + fn == 0:
        precision = recall = 1.0
    else:
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return MetricReport(
        token_accuracy=correct / total if total else 1.0,
        set_accuracy=exact / examples if examples else 1.0,
        precision=precision,
        recall=recall,
        f1=f1,
        examples=examples,
        tokens=total,
    )


# ------------------------------------------------------------ corpus scoring


def iter_examples(
    dialogs: Iterable,
    kb: MovieKB,
    patterns: Optional[GenrePatternSet] = None,
) -> Iterator[tuple[str, int, PredictorInput, PredictedTracking]]:
    """Yield (dialog id, turn, predictor input, gold next-system tracking).

    One example per turn whose successor is a system turn, for every dialog
    carrying gold annotations. The context is the delexicalized prefix up to
    and including that turn; attributes first mentioned in the successor turn
    appear in gold as NEW placeholders of their kind.
    """
    for dialog in dialogs:
        if dialog.gold is None:
            continue
        gold_by_turn = {row["turn"]: row for row in dialog.gold}
        pmap = PlaceholderMap()
        lines: list[str] = []
        turn_mentions = [extract_mentions(t.text, kb, patterns) for t in dialog.turns]
        for position, turn in enumerate(dialog.turns):
            turn_index = position + 1
            shim = Turn(
                speaker=turn.speaker, text=turn.text, mentions=tuple(turn_mentions[position])
            )
            lines.append(f"{turn.speaker.value}: {_delex_turn_text(shim, pmap)}")
            successor = (
                dialog.turns[position + 1] if position + 1 < len(dialog.turns) else None
            )
            if successor is None or successor.speaker is not Side.SYSTEM:
                continue
            current = gold_by_turn.get(turn_index)
            gold_next = gold_by_turn.get(turn_index + 1)
            if current is None or gold_next is None:
                continue
            by_key = {attr.key: placeholder for placeholder, attr in pmap.items()}
            positives = []
            for side in ("user", "system"):
                for entry in current[side]["entries"]:
                    if entry["label"] != Label.POS.value:
                        continue
                    placeholder = by_key.get((Kind(entry["kind"]), entry["id"]))
                    if placeholder is not None:
                        positives.append(placeholder)
            positives.sort(key=lambda p: p.render())
            gold_entries = set()
            for entry in gold_next["system"]["entries"]:
                placeholder = by_key.get((Kind(entry["kind"]), entry["id"]))
                if placeholder is None:
                    placeholder = Placeholder(kind=Kind(entry["kind"]), is_new=True)
                gold_entries.add(
                    PlaceholderEntry(placeholder=placeholder, label=Label(entry["label"]))
                )
            yield (
                dialog.id,
                turn_index,
                PredictorInput(
                    context="\n".join(lines),
                    positive_placeholders=tuple(positives),
                    state=None,
                ),
                PredictedTracking(turn_index=turn_index + 1, entries=frozenset(gold_entries)),
            )


def score_corpus(
    predictor: SystemAttributePredictor,
    dialogs: Iterable,
    kb: MovieKB,
    patterns: Optional[GenrePatternSet] = None,
) -> CorpusScore:
    dialogs = list(dialogs)
    skipped = sum(1 for d in dialogs if d.gold is None)
    tallies = []
    scored_ids = set()
    for dialog_id, _, example, gold in iter_examples(dialogs, kb, patterns):
        predicted = predict(example, predictor)
        tallies.append(score_example(predicted, gold))
        scored_ids.add(dialog_id)
    return CorpusScore(
        report=aggregate(tallies),
        scored_dialogs=len(scored_ids),
        skipped_dialogs=skipped,
    )


class OraclePredictor:
    """Echoes the gold tracking for contexts seen at construction time."""

    def __init__(self, dialogs, kb: MovieKB, patterns: Optional[GenrePatternSet] = None):
        self._by_context = {
            example.context: gold
            for _, _, example, gold in iter_examples(dialogs, kb, patterns)
        }

    def predict(self, input: PredictorInput) -> PredictedTracking:
        gold = self._by_context.get(input.context)
        if gold is None:
            return PredictedTracking(turn_index=0, entries=frozenset())
        return gold


class EmptyPredictor:
    """Predicts the empty tracking for every input."""

    def predict(self, input: PredictorInput) -> PredictedTracking:
        return PredictedTracking(turn_index=0, entries=frozenset())


# ------------------------------------------------------------------ reports


def report_to_json(score: CorpusScore) -> str:
    payload = score.report.as_payload()
    payload["counts"]["scored_dialogs"] = score.scored_dialogs
    payload["counts"]["skipped_dialogs"] = score.skipped_dialogs
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2)


def report_to_table(score: CorpusScore) -> str:
    report = score.report
    rows = [
        ("token_accuracy", f"{report.token_accuracy:.4f}"),
        ("set_accuracy", f"{report.set_accuracy:.4f}"),
        ("precision", f"{report.precision:.4f}"),
        ("recall", f"{report.recall:.4f}"),
        ("f1", f"{report.f1:.4f}"),
        ("examples", str(report.examples)),
        ("tokens", str(report.tokens)),
        ("scored_dialogs", str(score.scored_dialogs)),
        ("skipped_dialogs", str(score.skipped_dialogs)),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)
