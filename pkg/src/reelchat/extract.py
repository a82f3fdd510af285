"""Attribute mention extraction over a KB gazetteer plus genre alias patterns.

Matching is longest-match-first and non-overlapping, with ties broken by
earlier span start and then kind priority (title > person > genre). Matching
is case-insensitive and alias-aware; there is no coreference resolution.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Optional, Union

from .kb import Attribute, Kind, MovieKB, canonicalize, make_attribute

if TYPE_CHECKING:  # pragma: no cover
    from .engine import DialogSession
    from .tracking import Side

__all__ = [
    "GenrePatternSet",
    "AttributeMention",
    "default_patterns",
    "extract_mentions",
    "collect_side_attributes",
]

_ARTICLE_TOKENS = ("the", "a", "an")
_TOKEN_RE = re.compile(r"\w+", re.UNICODE)
_KIND_PRIORITY = {Kind.TITLE: 0, Kind.PERSON: 1, Kind.GENRE: 2}


@dataclass(frozen=True)
class GenrePatternSet:
    """Alias -> canonical genre id table, keys and values canonicalized."""

    aliases: Mapping[str, str]

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "GenrePatternSet":
        table = {
            canonicalize(alias): canonicalize(target)
            for alias, target in mapping.items()
        }
        return cls(aliases=table)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GenrePatternSet":
        with open(path, "r", encoding="utf-8") as handle:
            mapping = json.load(handle)
        if not isinstance(mapping, dict):
            raise ValueError("genre pattern file must be a JSON object")
        return cls.from_mapping(mapping)

    def aliases_of(self, genre_id: str) -> frozenset[str]:
        """All alias strings (including the id itself) for one genre id."""
        found = {alias for alias, target in self.aliases.items() if target == genre_id}
        found.add(genre_id)
        return frozenset(found)


def default_patterns() -> GenrePatternSet:
    """The genre alias table shipped with the package."""
    data = resources.files("reelchat.data").joinpath("genre_aliases.json")
    return GenrePatternSet.from_mapping(json.loads(data.read_text(encoding="utf-8")))


@dataclass(frozen=True)
class AttributeMention:
    """One attribute occurrence in an utterance, with its character span."""

    attribute: Attribute
    start: int
    end: int
    side: Optional["Side"] = None

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def with_side(self, side: "Side") -> "AttributeMention":
        return replace(self, side=side)


def _build_lexicon(
    kb: MovieKB, patterns: GenrePatternSet
) -> dict[tuple[str, ...], Attribute]:
    """Token-tuple lookup table over gazetteer entries and genre aliases."""
    lexicon: dict[tuple[str, ...], Attribute] = {}

    def put(tokens: tuple[str, ...], attr: Attribute) -> None:
        if not tokens:
            return
        current = lexicon.get(tokens)
        if current is None or _KIND_PRIORITY[attr.kind] < _KIND_PRIORITY[current.kind]:
            lexicon[tokens] = attr

    for attr in kb.attributes():
        tokens = tuple(attr.id.split())
        put(tokens, attr)
        if attr.kind is Kind.TITLE:
            # titles may be spoken with a leading article even though the
            # canonical id strips it
            for article in _ARTICLE_TOKENS:
                put((article, *tokens), attr)
    for alias, genre_id in patterns.aliases.items():
        known = kb.lookup(Kind.GENRE, genre_id)
        attr = known if known is not None else make_attribute(Kind.GENRE, genre_id)
        put(tuple(alias.split()), attr)
    return lexicon


def extract_mentions(
    text: str,
    kb: MovieKB,
    patterns: Optional[GenrePatternSet] = None,
) -> list[AttributeMention]:
    """Find all attribute mentions in text, sorted by span start.

    Candidates are scored longest span first; overlapping shorter or
    lower-priority candidates are dropped.
    """
    if patterns is None:
        patterns = default_patterns()
    lexicon = _build_lexicon(kb, patterns)
    if not lexicon:
        return []
    max_len = max(len(k) for k in lexicon)
    tokens = [
        (canonicalize(m.group()), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)
    ]
    tokens = [t for t in tokens if t[0]]
    candidates: list[tuple[int, int, int, Attribute]] = []
    for i in range(len(tokens)):
        for length in range(1, min(max_len, len(tokens) - i) + 1):
            window = tokens[i : i + length]
            attr = lexicon.get(tuple(t[0] for t in window))
            if attr is not None:
                candidates.append((window[0][1], window[-1][2], length, attr))
    candidates.sort(
        key=lambda c: (-(c[1] - c[0]), c[0], _KIND_PRIORITY[c[3].kind], c[3].id)
    )
    chosen: list[tuple[int, int, int, Attribute]] = []
    for cand in candidates:
        if all(cand[1] <= kept[0] or cand[0] >= kept[1] for kept in chosen):
            chosen.append(cand)
    chosen.sort(key=lambda c: c[0])
    return [
        AttributeMention(attribute=attr, start=start, end=end)
        for start, end, _, attr in chosen
    ]


def collect_side_attributes(session: "DialogSession", side: "Side") -> set[Attribute]:
    """Union of attributes mentioned by one side over the whole session."""
    out: set[Attribute] = set()
    for turn in session.turns:
        if turn.speaker is side:
            out.update(m.attribute for m in turn.mentions)
    return out
