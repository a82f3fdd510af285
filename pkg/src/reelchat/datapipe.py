"""Corpus tooling: weak-supervision annotation and relation-preserving
augmentation over line-delimited dialog files.

A corpus dialog is a plain transcript plus recommendation event markers.
Annotation derives per-turn pos/neg trackings from those markers; augmentation
rewrites a dialog by mapping its attribute graph onto a structurally matching
set of KB attributes.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Callable, Iterable, Iterator, Optional, Sequence, Union

from .extract import GenrePatternSet, extract_mentions
from .kb import Attribute, Kind, MovieKB, Predicate, Relation, make_attribute
from .tracking import AttributeTracking, Label, Side, TrackingEntry

logger = logging.getLogger(__name__)

__all__ = [
    "CorpusTurn",
    "RecommendationMark",
    "CorpusDialog",
    "RelationGraph",
    "CorpusError",
    "AnnotationError",
    "load_corpus",
    "dump_corpus",
    "annotate",
    "annotate_corpus",
    "build_relation_graph",
    "augment",
    "validate_augmentation",
]


class CorpusError(Exception):
    """A corpus file or dialog record is malformed."""


class AnnotationError(CorpusError):
    """The dialog cannot be annotated (no recommendation events)."""


@dataclass(frozen=True)
class CorpusTurn:
    speaker: Side
    text: str


@dataclass(frozen=True)
class RecommendationMark:
    """A recommendation event: at turn `turn` (1-based), `title` was offered."""

    turn: int
    title: str


@dataclass
class CorpusDialog:
    id: str
    turns: list[CorpusTurn]
    recommendations: list[RecommendationMark] = field(default_factory=list)
    gold: Optional[list[dict]] = None

    def validate(self) -> None:
        if not self.id:
            raise CorpusError("dialog id must be non-empty")
        for mark in self.recommendations:
            if not 1 <= mark.turn <= len(self.turns):
                raise CorpusError(
                    f"dialog {self.id}: recommendation turn {mark.turn} out of range"
                )
        turns = [m.turn for m in self.recommendations]
        if turns != sorted(turns):
            raise CorpusError(f"dialog {self.id}: recommendation events out of order")

    def as_payload(self) -> dict:
        payload: dict = {
            "id": self.id,
            "turns": [{"speaker": t.speaker.value, "text": t.text} for t in self.turns],
            "recommendations": [
                {"turn": m.turn, "title": m.title} for m in self.recommendations
            ],
        }
        if self.gold is not None:
            payload["gold"] = self.gold
        return payload

    @classmethod
    def from_payload(cls, payload: dict) -> "CorpusDialog":
        try:
            turns = [
                CorpusTurn(speaker=Side(t["speaker"]), text=t["text"])
                for t in payload["turns"]
            ]
            marks = [
                RecommendationMark(turn=int(m["turn"]), title=m["title"])
                for m in payload.get("recommendations", [])
            ]
            dialog = cls(
                id=payload["id"],
                turns=turns,
                recommendations=marks,
                gold=payload.get("gold"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"malformed dialog record: {exc}") from exc
        dialog.validate()
        return dialog


Source = Union[str, Path, IO[str], Iterable[str]]


def _iter_lines(source: Source) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as handle:
            yield from handle
    else:
        yield from source


def load_corpus(source: Source) -> list[CorpusDialog]:
    dialogs = []
    for line_no, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {line_no}: invalid JSON: {exc}") from exc
        try:
            dialogs.append(CorpusDialog.from_payload(payload))
        except CorpusError as exc:
            raise CorpusError(f"line {line_no}: {exc}") from exc
    return dialogs


def dump_corpus(dialogs: Iterable[CorpusDialog], target: Union[str, Path, IO[str]]) -> None:
    lines = [
        json.dumps(d.as_payload(), ensure_ascii=False, sort_keys=True, separators=(",", ":"))
        for d in dialogs
    ]
    text = "\n".join(lines) + ("\n" if lines else "")
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="utf-8")
    else:
        target.write(text)


# ------------------------------------------------------------------ annotate


def _dialog_mentions(
    dialog: CorpusDialog, kb: MovieKB, patterns: Optional[GenrePatternSet]
) -> list[list]:
    return [extract_mentions(t.text, kb, patterns) for t in dialog.turns]


def annotate(
    dialog: CorpusDialog, kb: MovieKB, patterns: Optional[GenrePatternSet] = None
) -> CorpusDialog:
    """Label every attribute in each turn's history prefix for or against the
    turn's upcoming recommendation.

    At turn i the reference is the first event at or after i (turns past the
    last event keep that last event as reference). An attribute is pos iff it
    is the referenced title itself or the KB relates the two; otherwise neg.
    Raises AnnotationError when the dialog has no recommendation events.
    """
    dialog.validate()
    if not dialog.recommendations:
        raise AnnotationError(f"dialog {dialog.id}: no recommendation events")
    mentions = _dialog_mentions(dialog, kb, patterns)
    references = [
        make_attribute(Kind.TITLE, mark.title) for mark in dialog.recommendations
    ]
    event_turns = [mark.turn for mark in dialog.recommendations]

    def reference_for(turn_index: int) -> Attribute:
        for turn, ref in zip(event_turns, references):
            if turn >= turn_index:
                return ref
        return references[-1]

    gold: list[dict] = []
    seen: dict[Side, set[Attribute]] = {Side.USER: set(), Side.SYSTEM: set()}
    for position, turn in enumerate(dialog.turns):
        turn_index = position + 1
        seen[turn.speaker].update(m.attribute for m in mentions[position])
        ref = reference_for(turn_index)

        def label_of(attr: Attribute) -> Label:
            if attr == ref or kb.related(attr, ref):
                return Label.POS
            return Label.NEG

        row = {"turn": turn_index}
        for side in (Side.USER, Side.SYSTEM):
            tracking = AttributeTracking(
                side=side,
                turn_index=turn_index,
                entries=frozenset(
                    TrackingEntry(attribute=a, label=label_of(a)) for a in seen[side]
                ),
            )
            row[side.value] = tracking.as_payload()
        gold.append(row)
    return replace(dialog, gold=gold)


def annotate_corpus(
    dialogs: Iterable[CorpusDialog],
    kb: MovieKB,
    patterns: Optional[GenrePatternSet] = None,
) -> tuple[list[CorpusDialog], list[str]]:
    """Annotate what can be annotated; return (dialogs, skipped ids).

    Dialogs without recommendation events pass through unchanged.
    """
    out = []
    skipped = []
    for dialog in dialogs:
        try:
            out.append(annotate(dialog, kb, patterns))
        except AnnotationError:
            logger.info("skipping dialog %s: no recommendation events", dialog.id)
            skipped.append(dialog.id)
            out.append(dialog)
    return out, skipped


# -------------------------------------------------------------- augmentation


@dataclass(frozen=True)
class RelationGraph:
    nodes: frozenset[Attribute]
    edges: frozenset[Relation]

    def degree(self, attr: Attribute) -> int:
        return sum(1 for e in self.edges if attr in (e.subject, e.object))


def build_relation_graph(
    dialog: CorpusDialog, kb: MovieKB, patterns: Optional[GenrePatternSet] = None
) -> RelationGraph:
    """All KB relations among the dialog's extracted attributes."""
    nodes = set()
    for turn_mentions in _dialog_mentions(dialog, kb, patterns):
        nodes.update(m.attribute for m in turn_mentions)
    ordered = sorted(nodes, key=lambda a: (a.kind.value, a.id))
    edges = set()
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            edges.update(kb.relations_between(a, b))
    return RelationGraph(nodes=frozenset(nodes), edges=frozenset(edges))


Mapping = dict[Attribute, Attribute]


def _enumerate_monomorphisms(
    graph: RelationGraph,
    candidates_of: Callable[[Attribute], Sequence[Attribute]],
    edge_ok: Callable[[Predicate, Attribute, Attribute], bool],
    include_identity: bool = False,
) -> list[Mapping]:
    """Backtracking search for injective type-preserving edge-preserving maps.

    Nodes are assigned in decreasing-degree order so edge checks prune early.
    The enumeration order is deterministic.
    """
    nodes = sorted(graph.nodes, key=lambda a: (-graph.degree(a), a.kind.value, a.id))
    incident: dict[Attribute, list[Relation]] = {n: [] for n in nodes}
    for edge in graph.edges:
        incident[edge.subject].append(edge)
        incident[edge.object].append(edge)

    found: list[Mapping] = []
    assignment: Mapping = {}
    used: set[tuple] = set()

    def consistent(node: Attribute, image: Attribute) -> bool:
        for edge in incident[node]:
            other = edge.object if edge.subject == node else edge.subject
            if other not in assignment:
                continue
            if edge.subject == node:
                sub, obj = image, assignment[other]
            else:
                sub, obj = assignment[other], image
            if not edge_ok(edge.predicate, sub, obj):
                return False
        return True

    def search(position: int) -> None:
        if position == len(nodes):
            if include_identity or any(n != assignment[n] for n in nodes):
                found.append(dict(assignment))
            return
        node = nodes[position]
        for image in candidates_of(node):
            if image.key in used:
                continue
            if not consistent(node, image):
                continue
            assignment[node] = image
            used.add(image.key)
            search(position + 1)
            used.discard(image.key)
            del assignment[node]

    search(0)
    return found


def _kb_edge_checker(kb: MovieKB) -> Callable[[Predicate, Attribute, Attribute], bool]:
    cache: dict[tuple, frozenset] = {}

    def ok(predicate: Predicate, subject: Attribute, obj: Attribute) -> bool:
        key = (subject.key, predicate)
        if key not in cache:
            cache[key] = frozenset(a.key for a in kb.neighbors(subject, predicate))
        return obj.key in cache[key]

    return ok


def _rewrite_dialog(
    dialog: CorpusDialog,
    mapping: Mapping,
    mentions: list[list],
    suffix: str,
) -> CorpusDialog:
    turns = []
    for position, turn in enumerate(dialog.turns):
        text = turn.text
        for mention in sorted(mentions[position], key=lambda m: -m.start):
            image = mapping.get(mention.attribute)
            if image is None:
                continue
            text = text[: mention.start] + image.display + text[mention.end :]
        turns.append(CorpusTurn(speaker=turn.speaker, text=text))
    marks = []
    for mark in dialog.recommendations:
        title_attr = make_attribute(Kind.TITLE, mark.title)
        image = mapping.get(title_attr)
        marks.append(
            RecommendationMark(turn=mark.turn, title=image.display if image else mark.title)
        )
    return CorpusDialog(id=f"{dialog.id}-{suffix}", turns=turns, recommendations=marks)


def augment(
    dialog: CorpusDialog,
    kb: MovieKB,
    k: int,
    seed: int = 0,
    patterns: Optional[GenrePatternSet] = None,
) -> list[CorpusDialog]:
    """Up to k rewrites of the dialog under distinct non-identity attribute
    mappings that preserve kinds and KB relations.

    Deterministic for a fixed seed: the full mapping enumeration is shuffled
    with a per-dialog generator and the first k are materialized. Emits fewer
    than k (with a diagnostic) when the KB does not support more.
    """
    dialog.validate()
    if k <= 0:
        return []
    graph = build_relation_graph(dialog, kb, patterns)
    if not graph.nodes:
        logger.info("dialog %s has no attributes; nothing to augment", dialog.id)
        return []
    mentions = _dialog_mentions(dialog, kb, patterns)
    mappings = _enumerate_monomorphisms(
        graph,
        candidates_of=lambda node: kb.attributes(node.kind),
        edge_ok=_kb_edge_checker(kb),
    )
    rng = random.Random(f"{seed}:{dialog.id}")
    rng.shuffle(mappings)
    if len(mappings) < k:
        logger.info(
            "dialog %s: only %d of %d requested mappings exist", dialog.id, len(mappings), k
        )
    return [
        _rewrite_dialog(dialog, mapping, mentions, f"aug{i + 1}")
        for i, mapping in enumerate(mappings[:k])
    ]


def validate_augmentation(
    original: CorpusDialog,
    substituted: CorpusDialog,
    kb: MovieKB,
    patterns: Optional[GenrePatternSet] = None,
) -> bool:
    """True iff some injective, type-preserving, non-identity mapping carries
    the original's relation graph onto the substituted dialog's: node images
    cover the substituted node set and every original edge maps to a
    substituted edge. A textually unchanged dialog never validates.
    """
    if [t.text for t in substituted.turns] == [t.text for t in original.turns]:
        return False
    orig = build_relation_graph(original, kb, patterns)
    sub = build_relation_graph(substituted, kb, patterns)
    if len(orig.nodes) != len(sub.nodes):
        return False
    sub_nodes_by_kind: dict[Kind, list[Attribute]] = {}
    for node in sorted(sub.nodes, key=lambda a: (a.kind.value, a.id)):
        sub_nodes_by_kind.setdefault(node.kind, []).append(node)
    sub_edges = {(e.subject.key, e.predicate, e.object.key) for e in sub.edges}

    def edge_ok(predicate: Predicate, subject: Attribute, obj: Attribute) -> bool:
        return (
            (subject.key, predicate, obj.key) in sub_edges
            or (obj.key, predicate, subject.key) in sub_edges
        )

    mappings = _enumerate_monomorphisms(
        orig,
        candidates_of=lambda node: sub_nodes_by_kind.get(node.kind, []),
        edge_ok=edge_ok,
    )
    return bool(mappings)
