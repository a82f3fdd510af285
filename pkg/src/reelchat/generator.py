"""Response generation conditioned on the attribute delta.

The reference backend is template based: a small inventory keyed by
(phase, delta kind signature) with at least two surface variants per key and
a session-seeded deterministic rotation. Every positive delta attribute must
surface in the produced text; verify_realization is the independent guard the
engine also runs against remote backends.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable, Iterable, Mapping, Optional

import httpx

from .delex import PlaceholderMap, find_placeholders
from .extract import GenrePatternSet, default_patterns
from .kb import Attribute, Kind, MovieKB, Predicate, canonicalize
from .predictor import AttributeDelta
from .tracking import AttributeTracking, Label

if TYPE_CHECKING:  # pragma: no cover
    pass

__all__ = [
    "Phase",
    "GenerationInput",
    "Response",
    "ResponseGenerator",
    "TemplateGenerator",
    "RemoteGenerator",
    "GeneratorError",
    "GeneratorBackendError",
    "generate",
    "verify_realization",
]

logger = logging.getLogger(__name__)


class Phase(str, Enum):
    ELICIT = "elicit"
    RECOMMEND = "recommend"
    REENGAGE = "reengage"
    SOCIAL = "social"
    CLOSING = "closing"


@dataclass(frozen=True)
class GenerationInput:
    """Everything a backend may condition on for one response."""

    context: str
    delta: AttributeDelta
    phase: Phase
    current_system: Optional[AttributeTracking] = None
    rotation: Mapping[str, int] = field(default_factory=dict)
    delex_context: str = ""
    pmap: Optional[PlaceholderMap] = None


@dataclass(frozen=True)
class Response:
    text: str
    realized: frozenset[Attribute] = frozenset()
    template_key: Optional[str] = None


class GeneratorError(Exception):
    """No backend could produce a realizable response."""


class GeneratorBackendError(GeneratorError):
    """A remote generator backend failed or timed out."""


class ResponseGenerator:
    """Interface for pluggable response backends."""

    def generate(self, input: GenerationInput) -> Response:  # pragma: no cover
        raise NotImplementedError


def _surface_forms(attribute: Attribute, patterns: Optional[GenrePatternSet]) -> set[str]:
    forms = {attribute.id, canonicalize(attribute.display)}
    if attribute.kind is Kind.GENRE and patterns is not None:
        forms.update(patterns.aliases_of(attribute.id))
    return forms


def _surfaces(text: str, attribute: Attribute, patterns: Optional[GenrePatternSet]) -> bool:
    padded = f" {canonicalize(text)} "
    return any(f" {form} " in padded for form in _surface_forms(attribute, patterns))


def realized_attributes(
    text: str,
    universe: Iterable[Attribute],
    patterns: Optional[GenrePatternSet] = None,
) -> frozenset[Attribute]:
    """Attributes from the universe whose surface form appears in text."""
    return frozenset(a for a in set(universe) if _surfaces(text, a, patterns))


def verify_realization(
    response: Response,
    delta: AttributeDelta,
    patterns: Optional[GenrePatternSet] = None,
) -> bool:
    """True iff every pos delta attribute surfaces (alias-aware) in the text."""
    return all(_surfaces(response.text, a, patterns) for a in delta.positives())


def _join(displays: list[str]) -> str:
    if not displays:
        return ""
    if len(displays) == 1:
        return displays[0]
    return ", ".join(displays[:-1]) + " and " + displays[-1]


@dataclass
class _Slots:
    genres: list[Attribute]
    persons: list[Attribute]
    titles: list[Attribute]
    cast: list[Attribute]

    @property
    def items(self) -> str:
        ordered = self.genres + self.persons + self.titles
        return _join([a.display for a in ordered])


_Builder = Callable[[_Slots], str]


def _fmt(template: str) -> _Builder:
    def build(slots: _Slots) -> str:
        mapping = {"items": slots.items}
        if slots.genres:
            mapping["genre"] = slots.genres[0].display
            mapping["g1"] = slots.genres[0].display
        if len(slots.genres) > 1:
            mapping["g2"] = slots.genres[1].display
        if slots.persons:
            mapping["person"] = slots.persons[0].display
            mapping["p1"] = slots.persons[0].display
        if len(slots.persons) > 1:
            mapping["p2"] = slots.persons[1].display
        if slots.titles:
            mapping["title"] = slots.titles[0].display
        return template.format(**mapping)

    return build


def _recommend_generic(lead: str, fallback: str) -> _Builder:
    def build(slots: _Slots) -> str:
        titles = _join([a.display for a in slots.titles])
        rest = _join([a.display for a in slots.genres + slots.persons])
        if titles and rest:
            return lead.format(rest=rest, titles=titles)
        if titles:
            return f"I recommend the movie {titles}."
        return fallback.format(items=slots.items)

    return build


def _cast_link(question: bool) -> _Builder:
    def build(slots: _Slots) -> str:
        title = slots.titles[0].display
        if len(slots.cast) >= 2:
            p1, p2 = slots.cast[0].display, slots.cast[1].display
            if question:
                return f"Did you know {p1} and {p2} were cast together for {title}?"
            return f"{p1} and {p2} were cast together for {title}."
        if len(slots.cast) == 1:
            p1 = slots.cast[0].display
            if question:
                return f"Have you seen {p1} in {title}?"
            return f"{p1} stars in {title}."
        if question:
            return f"Have you seen {title}? I really liked it."
        return f"{title} is well worth a watch."

    return build


_TEMPLATES: dict[Phase, dict[tuple[str, ...], list[_Builder]]] = {
    Phase.ELICIT: {
        (): [
            _fmt("What kind of movies do you enjoy watching?"),
            _fmt("What type of movies do you like?"),
        ],
    },
    Phase.RECOMMEND: {
        ("title",): [
            _fmt("I recommend the movie {title}."),
            _fmt("I would like to recommend {title}."),
            _fmt("I am recommending: {title}."),
        ],
        ("genre", "title"): [
            _fmt("Since you like {genre} movies, I recommend the movie {title}."),
            _fmt("How about {title}? It is a great {genre} movie."),
        ],
        ("genre", "genre", "title"): [
            _fmt("You mentioned {g1} and {g2}, so I recommend the movie {title}."),
            _fmt("For something that mixes {g1} and {g2}, try {title}."),
        ],
        ("person", "title"): [
            _fmt("If you like {person}, I recommend {title}."),
            _fmt("{title} stars {person}, so I think you would enjoy it."),
        ],
    },
    Phase.REENGAGE: {
        ("genre",): [
            _fmt("That is a great choice. Have you watched any of the other {genre} movies yet?"),
            _fmt("Are there other {genre} movies you have been meaning to see?"),
        ],
        ("person",): [
            _fmt("Have you heard about {person}?"),
            _fmt("Do you know {person}?"),
        ],
        ("genre", "genre"): [
            _fmt("Would you rather watch something {g1} or {g2} tonight?"),
            _fmt("Any other {g1} or {g2} favorites I should know about?"),
        ],
        (): [
            _fmt("What else do you look for in a movie?"),
            _fmt("Tell me more about what you are in the mood for."),
        ],
    },
    Phase.SOCIAL: {
        ("title",): [_cast_link(question=False), _cast_link(question=True)],
        ("person",): [
            _fmt("{person} has been in some great movies."),
            _fmt("I really like {person} too."),
        ],
        (): [
            _fmt("Got it. Tell me what else you are in the mood for."),
            _fmt("Happy to keep chatting movies whenever you are ready."),
        ],
    },
    Phase.CLOSING: {
        (): [
            _fmt("Enjoy the movie! Bye!"),
            _fmt("Glad I could help. Enjoy!"),
        ],
    },
}

_GENERIC: dict[Phase, list[_Builder]] = {
    Phase.ELICIT: [
        _fmt("Noted: {items}. What else do you enjoy watching?"),
        _fmt("Good to know about {items}. What kind of movies do you like most?"),
    ],
    Phase.RECOMMEND: [
        _recommend_generic(
            "Since you mentioned {rest}, I recommend the movie {titles}.",
            "Noted: {items}. Let me line up a recommendation.",
        ),
        _recommend_generic(
            "Given {rest}, my pick is {titles}.",
            "Thanks for the pointers on {items}. One recommendation coming up.",
        ),
    ],
    Phase.REENGAGE: [
        _fmt("Tell me more about {items}."),
        _fmt("How do you feel about {items} these days?"),
    ],
    Phase.SOCIAL: [
        _fmt("Speaking of {items}, great taste."),
        _fmt("Nice choices: {items}."),
    ],
    Phase.CLOSING: [
        _fmt("Enjoy {items}! Bye!"),
        _fmt("Hope {items} treats you well. Bye!"),
    ],
}


class TemplateGenerator(ResponseGenerator):
    """Reference template backend. Total over (delta, phase) pairs."""

    def __init__(
        self,
        kb: MovieKB,
        patterns: Optional[GenrePatternSet] = None,
        seed: int = 0,
    ):
        self.kb = kb
        self.patterns = patterns if patterns is not None else default_patterns()
        self.seed = seed

    def _slots(self, input: GenerationInput) -> _Slots:
        pos = sorted(input.delta.positives(), key=lambda a: a.id)
        genres = [a for a in pos if a.kind is Kind.GENRE]
        persons = [a for a in pos if a.kind is Kind.PERSON]
        titles = [a for a in pos if a.kind is Kind.TITLE]
        cast: list[Attribute] = []
        if titles:
            known = set(persons)
            if input.current_system is not None:
                known.update(
                    a
                    for a in input.current_system.positives()
                    if a.kind is Kind.PERSON
                )
            in_cast = {a.key for a in self.kb.neighbors(titles[0], Predicate.ACTED_IN)}
            cast = sorted((a for a in known if a.key in in_cast), key=lambda a: a.id)
        return _Slots(genres=genres, persons=persons, titles=titles, cast=cast)

    def generate(self, input: GenerationInput) -> Response:
        slots = self._slots(input)
        sig = tuple(input.delta.pos_kinds())
        variants = _TEMPLATES.get(input.phase, {}).get(sig)
        if variants is None:
            variants = _GENERIC[input.phase]
            key = f"{input.phase.value}|*"
        else:
            key = f"{input.phase.value}|{','.join(sig)}"
        index = (self.seed + input.rotation.get(key, 0)) % len(variants)
        text = variants[index](slots)
        universe = set(input.delta.positives()) | {
            e.attribute for e in input.delta.entries
        }
        universe.update(slots.cast)
        if input.current_system is not None:
            universe.update(input.current_system.attributes())
        realized = realized_attributes(text, universe, self.patterns)
        return Response(text=text, realized=realized, template_key=key)


class RemoteGenerator(ResponseGenerator):
    """HTTP generator client. Sends the delexicalized context and delta
    placeholders; the echoed placeholders are relexicalized before display."""

    def __init__(
        self,
        url: str,
        kb: MovieKB,
        patterns: Optional[GenrePatternSet] = None,
        timeout: float = 5.0,
        client: Optional[httpx.Client] = None,
    ):
        self.url = url
        self.kb = kb
        self.patterns = patterns if patterns is not None else default_patterns()
        self.timeout = timeout
        self._client = client if client is not None else httpx.Client()

    def generate(self, input: GenerationInput) -> Response:
        if input.pmap is None:
            raise GeneratorBackendError("remote generation requires a placeholder map")
        ordered = sorted(
            input.delta.entries,
            key=lambda e: (e.attribute.kind.value, e.attribute.id, e.label.value),
        )
        body = {
            "context": input.delex_context,
            "delta": [
                {
                    "placeholder": input.pmap.assign(e.attribute).render(),
                    "label": e.label.value,
                }
                for e in ordered
            ],
            "phase": input.phase.value,
        }
        try:
            response = self._client.post(self.url, json=body, timeout=self.timeout)
            response.raise_for_status()
            payload = response.json()
            text = payload["text"]
        except httpx.HTTPError as exc:
            raise GeneratorBackendError(str(exc)) from exc
        except (KeyError, TypeError) as exc:
            raise GeneratorBackendError(f"malformed response: {exc}") from exc
        if not isinstance(text, str):
            raise GeneratorBackendError("malformed response: text must be a string")
        for placeholder in find_placeholders(text):
            if placeholder.is_new:
                continue
            try:
                attr = input.pmap.attribute_of(placeholder)
            except Exception:
                continue  # left in place; realization check will reject
            text = text.replace(placeholder.render(), attr.display)
        universe = {e.attribute for e in input.delta.entries}
        if input.current_system is not None:
            universe.update(input.current_system.attributes())
        realized = realized_attributes(text, universe, self.patterns)
        return Response(text=text, realized=realized)


def generate(
    input: GenerationInput,
    backend: ResponseGenerator,
    reference: Optional[TemplateGenerator] = None,
    patterns: Optional[GenrePatternSet] = None,
) -> Response:
    """Generate with realization guarantees.

    A backend response failing verify_realization is rejected and regenerated
    once; a second failure, or any backend error, falls back to the reference
    templates. If even the reference output fails the check, that is a bug
    and an error is raised.
    """
    if patterns is None:
        patterns = getattr(backend, "patterns", None) or default_patterns()
    attempts = 2 if not isinstance(backend, TemplateGenerator) else 1
    response: Optional[Response] = None
    for _ in range(attempts):
        try:
            candidate = backend.generate(input)
        except GeneratorBackendError as exc:
            logger.warning("generator backend failed: %s", exc)
            break
        if verify_realization(candidate, input.delta, patterns):
            return candidate
        logger.warning("generator output failed realization; regenerating")
        response = candidate
    if isinstance(backend, TemplateGenerator):
        raise GeneratorError("reference templates failed realization")
    fallback = reference
    if fallback is None:
        raise GeneratorError("no reference backend available for fallback")
    candidate = fallback.generate(input)
    if not verify_realization(candidate, input.delta, patterns):
        raise GeneratorError("reference templates failed realization")
    return candidate
