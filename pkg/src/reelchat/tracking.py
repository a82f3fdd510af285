"""Per-turn, per-side attribute tracking.

A tracking assigns each mentioned attribute a pos or neg label for one side
of the conversation at one turn. Labels come from a pluggable labeler; the
reference labeler is rule based (preference and aversion cues in the
mentioning clause, rejection cues against recommended titles, pos default).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Callable, Iterable, Optional

from .kb import Attribute, Kind, MovieKB, canonicalize

if TYPE_CHECKING:  # pragma: no cover
    from .engine import DialogSession

__all__ = [
    "Side",
    "Label",
    "Rationale",
    "TrackingEntry",
    "AttributeTracking",
    "LabelerDecision",
    "AttributeLabeler",
    "RuleBasedLabeler",
    "TrackingError",
    "track",
    "label_flip_on_rejection",
    "REJECTION_CUES",
    "ACCEPTANCE_CUES",
    "FAREWELL_CUES",
]

logger = logging.getLogger(__name__)


class Side(str, Enum):
    USER = "user"
    SYSTEM = "system"


class Label(str, Enum):
    POS = "pos"
    NEG = "neg"


class Rationale(str, Enum):
    """Why the labeler chose a label."""

    PREFERENCE_CUE = "preference_cue"
    AVERSION_CUE = "aversion_cue"
    REJECTION = "rejection"
    DEFAULT_POS = "default_pos"


@dataclass(frozen=True)
class TrackingEntry:
    attribute: Attribute
    label: Label

    def as_payload(self) -> dict:
        return {
            "kind": self.attribute.kind.value,
            "id": self.attribute.id,
            "label": self.label.value,
        }


@dataclass(frozen=True)
class AttributeTracking:
    """The (attribute, label) set for one side at one turn."""

    side: Side
    turn_index: int
    entries: frozenset[TrackingEntry]

    def __post_init__(self) -> None:
        keys = [e.attribute.key for e in self.entries]
        if len(keys) != len(set(keys)):
            raise ValueError("tracking holds conflicting labels for one attribute")

    def attributes(self) -> set[Attribute]:
        return {e.attribute for e in self.entries}

    def label_of(self, attribute: Attribute) -> Optional[Label]:
        for entry in self.entries:
            if entry.attribute.key == attribute.key:
                return entry.label
        return None

    def positives(self) -> set[Attribute]:
        return {e.attribute for e in self.entries if e.label is Label.POS}

    def negatives(self) -> set[Attribute]:
        return {e.attribute for e in self.entries if e.label is Label.NEG}

    def with_label(self, attribute: Attribute, label: Label) -> "AttributeTracking":
        kept = {e for e in self.entries if e.attribute.key != attribute.key}
        kept.add(TrackingEntry(attribute=attribute, label=label))
        return replace(self, entries=frozenset(kept))

    def as_payload(self) -> dict:
        entries = sorted(
            self.entries, key=lambda e: (e.attribute.kind.value, e.attribute.id)
        )
        return {
            "side": self.side.value,
            "turn": self.turn_index,
            "entries": [e.as_payload() for e in entries],
        }


@dataclass(frozen=True)
class LabelerDecision:
    attribute: Attribute
    label: Label
    rationale: Rationale


AttributeLabeler = Callable[["DialogSession", Attribute], LabelerDecision]


class TrackingError(Exception):
    """A labeler failed; carries the attribute that could not be labeled."""

    def __init__(self, attribute: Attribute, message: str):
        self.attribute = attribute
        super().__init__(f"{attribute.kind.value} {attribute.id!r}: {message}")


# cue vocabularies; matched as case-folded substrings
AVERSION_CUES = ("don't like", "do not like", "dont like", "hate", "not a fan", "not into", "dislike")
PREFERENCE_CUES = ("like", "love", "enjoy", "favorite", "favourite", "fan of", "into", "prefer")
REJECTION_CUES = ("seen it", "seen that", "no thanks", "something else", "another movie", "another one")
ACCEPTANCE_CUES = ("sounds good", "i'll watch", "i will watch", "that's perfect", "that is perfect", "sounds great")
FAREWELL_CUES = ("bye", "goodbye", "see you", "good night")

_CLAUSE_SPLIT_RE = re.compile(r"[,.;!?]|\bbut\b", re.IGNORECASE)


def _clauses(text: str) -> list[tuple[int, int, str]]:
    """Clause segments as (start, end, text) triples covering the utterance."""
    out = []
    last = 0
    for match in _CLAUSE_SPLIT_RE.finditer(text):
        if match.start() > last:
            out.append((last, match.start(), text[last : match.start()]))
        last = match.end()
    if last < len(text):
        out.append((last, len(text), text[last:]))
    return out


def _contains_cue(text: str, cues: Iterable[str]) -> bool:
    folded = canonicalize(text)
    padded = f" {folded} "
    return any(f" {canonicalize(cue)} " in padded for cue in cues)


class RuleBasedLabeler:
    """Reference labeler: cue words decide, most recent cue wins, pos default.

    Rules, in order:
      1. a title recorded as rejected in the session log labels neg;
      2. the most recent user turn whose mentioning clause carries an aversion
         or preference cue decides neg or pos;
      3. anything else defaults to pos.
    """

    def __init__(self, context_limit: Optional[int] = None):
        # whole-turn suffix budget in whitespace tokens for cue scanning
        self.context_limit = context_limit

    def __call__(self, context: "DialogSession", attribute: Attribute) -> LabelerDecision:
        if attribute.kind is Kind.TITLE:
            for event in context.recommendations:
                if event.title.key == attribute.key and event.status.value == "rejected":
                    return LabelerDecision(attribute, Label.NEG, Rationale.REJECTION)
        turns = context.turns
        if self.context_limit is not None:
            from .engine import truncate_context

            turns = truncate_context(turns, self.context_limit)
        for turn in reversed(turns):
            if turn.speaker is not Side.USER:
                continue
            spans = [m.span for m in turn.mentions if m.attribute.key == attribute.key]
            if not spans:
                continue
            for start, end, clause in _clauses(turn.text):
                if not any(s >= start and e <= end for s, e in spans):
                    continue
                if _contains_cue(clause, AVERSION_CUES):
                    return LabelerDecision(attribute, Label.NEG, Rationale.AVERSION_CUE)
                if _contains_cue(clause, PREFERENCE_CUES):
                    return LabelerDecision(attribute, Label.POS, Rationale.PREFERENCE_CUE)
        return LabelerDecision(attribute, Label.POS, Rationale.DEFAULT_POS)


def track(
    context: "DialogSession",
    user_attributes: Iterable[Attribute],
    system_attributes: Iterable[Attribute],
    labeler: AttributeLabeler,
) -> tuple[AttributeTracking, AttributeTracking]:
    """Label both sides' attribute sets for the session's current turn.

    Total over its inputs: every attribute receives exactly one entry, or the
    whole call fails (no partial trackings).
    """
    turn = len(context.turns)

    def build(side: Side, attrs: Iterable[Attribute]) -> AttributeTracking:
        entries = set()
        for attr in sorted(set(attrs), key=lambda a: (a.kind.value, a.id)):
            try:
                decision = labeler(context, attr)
            except Exception as exc:
                raise TrackingError(attr, str(exc)) from exc
            entries.add(TrackingEntry(attribute=attr, label=decision.label))
        return AttributeTracking(side=side, turn_index=turn, entries=frozenset(entries))

    return build(Side.USER, user_attributes), build(Side.SYSTEM, system_attributes)


def label_flip_on_rejection(
    session: "DialogSession", rejected: Attribute
) -> tuple[Optional[AttributeTracking], Optional[AttributeTracking]]:
    """Mark a recommended title rejected and flip its tracked label to neg.

    Related attributes keep their labels. If the title was never recommended
    or never tracked this is a no-op with a warning.
    """
    from .engine import RecommendationStatus

    offered = [e for e in session.recommendations if e.title.key == rejected.key]
    if not offered:
        logger.warning("rejected title %r was never recommended", rejected.display)
        return session.latest_trackings()
    for event in offered:
        event.status = RecommendationStatus.REJECTED
    current = session.latest_trackings()
    if current == (None, None):
        logger.warning("rejected title %r has no trackings yet", rejected.display)
        return current
    user_tracking, system_tracking = current
    tracked = False
    if user_tracking is not None and user_tracking.label_of(rejected) is not None:
        user_tracking = user_tracking.with_label(rejected, Label.NEG)
        tracked = True
    if system_tracking is not None and system_tracking.label_of(rejected) is not None:
        system_tracking = system_tracking.with_label(rejected, Label.NEG)
        tracked = True
    if not tracked:
        logger.warning("rejected title %r was never tracked", rejected.display)
        return current
    session.store_trackings(user_tracking, system_tracking)
    return (user_tracking, system_tracking)
