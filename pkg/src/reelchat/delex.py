"""Placeholders and the session-stable attribute <-> placeholder bijection.

Placeholder grammar (bit-exact):
    indexed  [MOVIE_k] [GENRE_k] [PERSON_k]      k counts from 0 per kind
    novel    [NEW_MOVIE] [NEW_GENRE] [NEW_PERSON]

Indices are assigned in first-mention order, user and system interleaved
chronologically, and never change for the lifetime of a session.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

from .kb import Attribute, Kind
from .tracking import AttributeTracking, Label, Side, TrackingEntry

if TYPE_CHECKING:  # pragma: no cover
    from .engine import DialogSession, Turn
    from .recommender import Recommender

__all__ = [
    "Placeholder",
    "PlaceholderEntry",
    "PlaceholderMap",
    "DelexError",
    "NoCandidateError",
    "parse_placeholder",
    "find_placeholders",
    "delexicalize",
    "relexicalize",
]

_KIND_TO_WORD = {Kind.TITLE: "MOVIE", Kind.GENRE: "GENRE", Kind.PERSON: "PERSON"}
_WORD_TO_KIND = {w: k for k, w in _KIND_TO_WORD.items()}

INDEXED_RE = re.compile(r"\[(MOVIE|GENRE|PERSON)_(\d+)\]")
NEW_RE = re.compile(r"\[NEW_(MOVIE|GENRE|PERSON)\]")
ANY_RE = re.compile(r"\[(?:(MOVIE|GENRE|PERSON)_(\d+)|NEW_(MOVIE|GENRE|PERSON))\]")


@dataclass(frozen=True)
class Placeholder:
    kind: Kind
    index: Optional[int] = None
    is_new: bool = False

    def __post_init__(self) -> None:
        if self.is_new != (self.index is None):
            raise DelexError("a placeholder is either indexed or new, never both")

    def render(self) -> str:
        word = _KIND_TO_WORD[self.kind]
        if self.is_new:
            return f"[NEW_{word}]"
        return f"[{word}_{self.index}]"


@dataclass(frozen=True)
class PlaceholderEntry:
    """A (placeholder, label) pair inside a delexicalized tracking."""

    placeholder: Placeholder
    label: Label

    def as_payload(self) -> dict:
        return {"placeholder": self.placeholder.render(), "label": self.label.value}


class DelexError(Exception):
    """Internal consistency failure while (de|re)lexicalizing."""


class NoCandidateError(DelexError):
    """The recommender produced nothing for a NEW placeholder."""

    def __init__(self, kind: Kind):
        self.kind = kind
        super().__init__(f"no candidate available for [NEW_{_KIND_TO_WORD[kind]}]")


def parse_placeholder(text: str) -> Placeholder:
    match = INDEXED_RE.fullmatch(text)
    if match:
        return Placeholder(kind=_WORD_TO_KIND[match.group(1)], index=int(match.group(2)))
    match = NEW_RE.fullmatch(text)
    if match:
        return Placeholder(kind=_WORD_TO_KIND[match.group(1)], is_new=True)
    raise DelexError(f"not a placeholder: {text!r}")


def find_placeholders(text: str) -> list[Placeholder]:
    """All placeholders occurring in text, in order of appearance."""
    out = []
    for match in ANY_RE.finditer(text):
        if match.group(1) is not None:
            out.append(Placeholder(kind=_WORD_TO_KIND[match.group(1)], index=int(match.group(2))))
        else:
            out.append(Placeholder(kind=_WORD_TO_KIND[match.group(3)], is_new=True))
    return out


class PlaceholderMap:
    """Ordered bijection between session attributes and indexed placeholders."""

    def __init__(self) -> None:
        self._by_attr: dict[tuple[Kind, str], Placeholder] = {}
        self._by_placeholder: dict[Placeholder, Attribute] = {}
        self._next_index: dict[Kind, int] = {k: 0 for k in Kind}

    def __len__(self) -> int:
        return len(self._by_placeholder)

    def __contains__(self, attribute: Attribute) -> bool:
        return attribute.key in self._by_attr

    def assign(self, attribute: Attribute) -> Placeholder:
        """Return the attribute's placeholder, allocating the next index once."""
        existing = self._by_attr.get(attribute.key)
        if existing is not None:
            return existing
        placeholder = Placeholder(kind=attribute.kind, index=self._next_index[attribute.kind])
        self._next_index[attribute.kind] += 1
        self._by_attr[attribute.key] = placeholder
        self._by_placeholder[placeholder] = attribute
        return placeholder

    def placeholder_of(self, attribute: Attribute) -> Optional[Placeholder]:
        return self._by_attr.get(attribute.key)

    def attribute_of(self, placeholder: Placeholder) -> Attribute:
        if placeholder.is_new:
            raise DelexError("NEW placeholders carry no assignment")
        try:
            return self._by_placeholder[placeholder]
        except KeyError:
            raise DelexError(f"unassigned placeholder {placeholder.render()}") from None

    def items(self) -> list[tuple[Placeholder, Attribute]]:
        """Assignments in allocation order (kind-interleaved, index ascending)."""
        return sorted(
            self._by_placeholder.items(),
            key=lambda kv: (_KIND_TO_WORD[kv[0].kind], kv[0].index),
        )

    def attributes(self, kind: Optional[Kind] = None) -> set[Attribute]:
        return {
            a for a in self._by_placeholder.values() if kind is None or a.kind is kind
        }

    def as_payload(self) -> list[dict]:
        return [
            {
                "placeholder": ph.render(),
                "kind": attr.kind.value,
                "id": attr.id,
                "display": attr.display,
            }
            for ph, attr in self.items()
        ]

    @classmethod
    def from_payload(cls, payload: Iterable[dict]) -> "PlaceholderMap":
        pmap = cls()
        for row in payload:
            ph = parse_placeholder(row["placeholder"])
            attr = Attribute(kind=Kind(row["kind"]), id=row["id"], display=row["display"])
            pmap._by_attr[attr.key] = ph
            pmap._by_placeholder[ph] = attr
            if ph.index is not None and ph.index >= pmap._next_index[ph.kind]:
                pmap._next_index[ph.kind] = ph.index + 1
        return pmap


def _delex_turn_text(turn: "Turn", pmap: PlaceholderMap) -> str:
    pieces = []
    cursor = 0
    for mention in sorted(turn.mentions, key=lambda m: m.start):
        if mention.start < cursor or mention.end > len(turn.text):
            raise DelexError(
                f"mention span {mention.span} is inconsistent with its turn text"
            )
        pieces.append(turn.text[cursor : mention.start])
        pieces.append(pmap.assign(mention.attribute).render())
        cursor = mention.end
    pieces.append(turn.text[cursor:])
    return "".join(pieces)


def delexicalize(
    session: "DialogSession",
    trackings: tuple[AttributeTracking, AttributeTracking],
    pmap: PlaceholderMap,
    turns: Optional[Sequence["Turn"]] = None,
) -> tuple[str, frozenset[PlaceholderEntry], frozenset[PlaceholderEntry]]:
    """Replace mention spans with placeholders and delexicalize both trackings.

    Extends pmap with first-seen attributes only; non-attribute text is
    untouched. Returns the rendered context (one "speaker: text" line per
    turn) and the two placeholder-entry sets.
    """
    window = session.turns if turns is None else turns
    lines = []
    for turn in window:
        lines.append(f"{turn.speaker.value}: {_delex_turn_text(turn, pmap)}")

    def convert(tracking: AttributeTracking) -> frozenset[PlaceholderEntry]:
        entries = set()
        for entry in sorted(
            tracking.entries, key=lambda e: (e.attribute.kind.value, e.attribute.id)
        ):
            entries.add(
                PlaceholderEntry(
                    placeholder=pmap.assign(entry.attribute), label=entry.label
                )
            )
        return frozenset(entries)

    user_tracking, system_tracking = trackings
    return "\n".join(lines), convert(user_tracking), convert(system_tracking)


def relexicalize(
    predicted: Iterable[PlaceholderEntry],
    pmap: PlaceholderMap,
    recommender: "Recommender",
    trackings: tuple[AttributeTracking, AttributeTracking],
) -> AttributeTracking:
    """Resolve a predicted placeholder tracking back to concrete attributes.

    Indexed placeholders resolve through the map. NEW placeholders are filled
    by the recommender, conditioned on the current positive and negative
    attributes and excluding everything already known to the session (so a
    NEW fill is genuinely novel). Raises NoCandidateError when the
    recommender comes back empty for some NEW placeholder.
    """
    from .recommender import RecommendationQuery

    user_tracking, system_tracking = trackings
    positives = user_tracking.positives() | system_tracking.positives()
    negatives = user_tracking.negatives() | system_tracking.negatives()
    entries: dict[tuple[Kind, str], TrackingEntry] = {}

    def put(attribute: Attribute, label: Label) -> None:
        entries.setdefault(attribute.key, TrackingEntry(attribute=attribute, label=label))

    ordered = sorted(
        predicted,
        key=lambda e: (
            e.placeholder.is_new,
            _KIND_TO_WORD[e.placeholder.kind],
            e.placeholder.index if e.placeholder.index is not None else -1,
            e.label.value,
        ),
    )
    for entry in ordered:
        if not entry.placeholder.is_new:
            put(pmap.attribute_of(entry.placeholder), entry.label)
    for entry in ordered:
        if not entry.placeholder.is_new:
            continue
        kind = entry.placeholder.kind
        exclude = pmap.attributes(kind) | {
            a for a in (e.attribute for e in entries.values()) if a.kind is kind
        }
        query = RecommendationQuery(
            positives=frozenset(positives),
            negatives=frozenset(negatives),
            target_kind=kind,
            exclude=frozenset(exclude),
        )
        candidates = recommender.recommend(query, k=1)
        if not candidates:
            raise NoCandidateError(kind)
        put(candidates[0].attribute, entry.label)
    return AttributeTracking(
        side=Side.SYSTEM,
        turn_index=system_tracking.turn_index + 1,
        entries=frozenset(entries.values()),
    )
