"""Movie knowledge base: attributes, relations, and line-delimited JSON storage.

The KB is the ground truth every other module queries. Attributes come in
three kinds (movie titles, genres, persons) and are identified by a canonical
id so that surface variation ("The Matrix", "the matrix", "Mission Impossible"
vs "Mission: Impossible") collapses to one identity.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Union

__all__ = [
    "Kind",
    "Predicate",
    "Attribute",
    "Relation",
    "Movie",
    "MovieKB",
    "KBError",
    "KBParseError",
    "KBValidationError",
    "canonicalize",
    "make_attribute",
    "load_kb",
    "dump_kb",
]


class Kind(str, Enum):
    """Attribute kinds recognized by the engine."""

    TITLE = "title"
    GENRE = "genre"
    PERSON = "person"


class Predicate(str, Enum):
    """Relation predicates. cast_with is derived from shared casts, never stored."""

    HAS_GENRE = "has_genre"
    ACTED_IN = "acted_in"
    DIRECTED = "directed"
    CAST_WITH = "cast_with"


_ARTICLES = ("the", "a", "an")
_PUNCT_RE = re.compile(r"[^\w\s]+", re.UNICODE)
_WS_RE = re.compile(r"\s+")


def canonicalize(text: str, kind: Optional[Kind] = None) -> str:
    """Reduce a surface form to its canonical id.

    Case-folds, strips punctuation, collapses internal whitespace, and for
    titles drops a single leading article so "The Matrix" and "matrix" agree.
    """
    folded = unicodedata.normalize("NFKC", text).casefold()
    collapsed = _WS_RE.sub(" ", _PUNCT_RE.sub(" ", folded)).strip()
    if kind is Kind.TITLE:
        head, _, rest = collapsed.partition(" ")
        if head in _ARTICLES and rest:
            collapsed = rest
    return collapsed


@dataclass(frozen=True)
class Attribute:
    """A single conversational attribute. Equality and hashing use (kind, id)."""

    kind: Kind
    id: str
    display: str = field(compare=False)

    def __post_init__(self) -> None:
        if canonicalize(self.display, self.kind) != self.id:
            raise KBValidationError(
                f"attribute id {self.id!r} does not match display {self.display!r}"
            )

    @property
    def key(self) -> tuple[Kind, str]:
        return (self.kind, self.id)


def make_attribute(kind: Kind, display: str) -> Attribute:
    """Build an attribute, deriving the canonical id from the display form."""
    return Attribute(kind=kind, id=canonicalize(display, kind), display=display)


@dataclass(frozen=True)
class Relation:
    """A typed edge between two attributes, in canonical orientation."""

    subject: Attribute
    predicate: Predicate
    object: Attribute


@dataclass(frozen=True)
class Movie:
    """One movie record."""

    title: Attribute
    genres: frozenset[Attribute]
    actors: frozenset[Attribute]
    directors: frozenset[Attribute]
    year: Optional[int] = None
    popularity: float = 0

    def attributes(self) -> frozenset[Attribute]:
        return frozenset({self.title}) | self.genres | self.actors | self.directors


class KBError(Exception):
    """Base class for knowledge base failures."""


class KBParseError(KBError):
    """A record could not be parsed; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class KBValidationError(KBError):
    """A record parsed but violates a KB constraint."""


# kind priority used when a single canonical id is claimed by several kinds
_KIND_PRIORITY = {Kind.TITLE: 0, Kind.PERSON: 1, Kind.GENRE: 2}

_AttrKey = tuple[Kind, str]


class MovieKB:
    """In-memory movie knowledge base with relation queries.

    Adjacency is precomputed at construction, including the derived symmetric
    cast_with edges between actors who share a movie.
    """

    def __init__(self, movies: Iterable[Movie]):
        self.movies: tuple[Movie, ...] = tuple(movies)
        self._attrs: dict[_AttrKey, Attribute] = {}
        self._edges: dict[_AttrKey, dict[Predicate, set[_AttrKey]]] = {}
        self._movies_by_title: dict[str, list[Movie]] = {}
        seen_keys: set[tuple[str, Optional[int]]] = set()
        for movie in self.movies:
            movie_key = (movie.title.id, movie.year)
            if movie_key in seen_keys:
                raise KBValidationError(
                    f"duplicate movie {movie.title.display!r} ({movie.year})"
                )
            seen_keys.add(movie_key)
            self._movies_by_title.setdefault(movie.title.id, []).append(movie)
            self._register(movie.title)
            for genre in movie.genres:
                self._register(genre)
                self._link(movie.title, Predicate.HAS_GENRE, genre)
            for actor in movie.actors:
                self._register(actor)
                self._link(actor, Predicate.ACTED_IN, movie.title)
            for director in movie.directors:
                self._register(director)
                self._link(director, Predicate.DIRECTED, movie.title)
            cast = sorted(movie.actors, key=lambda a: a.id)
            for i, left in enumerate(cast):
                for right in cast[i + 1 :]:
                    self._link(left, Predicate.CAST_WITH, right)
        self.gazetteer: dict[str, Attribute] = {}
        for attr in sorted(
            self._attrs.values(), key=lambda a: (_KIND_PRIORITY[a.kind], a.id)
        ):
            self.gazetteer.setdefault(attr.id, attr)

    def _register(self, attr: Attribute) -> None:
        self._attrs.setdefault(attr.key, attr)

    def _link(self, a: Attribute, predicate: Predicate, b: Attribute) -> None:
        # adjacency is stored in both directions; orientation is recovered
        # from the kind signature when canonical Relations are needed
        self._edges.setdefault(a.key, {}).setdefault(predicate, set()).add(b.key)
        self._edges.setdefault(b.key, {}).setdefault(predicate, set()).add(a.key)

    def __len__(self) -> int:
        return len(self.movies)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MovieKB):
            return NotImplemented
        return sorted(self.movies, key=_movie_sort_key) == sorted(
            other.movies, key=_movie_sort_key
        )

    def attributes(self, kind: Optional[Kind] = None) -> list[Attribute]:
        """All distinct attributes, optionally restricted to one kind."""
        attrs = [a for a in self._attrs.values() if kind is None or a.kind is kind]
        return sorted(attrs, key=lambda a: (a.id, _KIND_PRIORITY[a.kind]))

    def lookup(self, kind: Kind, canonical_id: str) -> Optional[Attribute]:
        return self._attrs.get((kind, canonical_id))

    def movies_for_title(self, title: Attribute) -> list[Movie]:
        return list(self._movies_by_title.get(title.id, []))

    def popularity(self, attr: Attribute) -> float:
        """Popularity for ranking: a title's movie popularity, 0 otherwise."""
        if attr.kind is not Kind.TITLE:
            return 0
        movies = self._movies_by_title.get(attr.id, [])
        return max((m.popularity for m in movies), default=0)

    def neighbors(
        self, attr: Attribute, predicate: Optional[Predicate] = None
    ) -> list[Attribute]:
        """Attributes linked to attr, in deterministic canonical-id order."""
        buckets = self._edges.get(attr.key, {})
        keys: set[_AttrKey] = set()
        for pred, targets in buckets.items():
            if predicate is None or pred is predicate:
                keys.update(targets)
        keys.discard(attr.key)
        found = [self._attrs[k] for k in keys]
        return sorted(found, key=lambda a: (a.id, _KIND_PRIORITY[a.kind]))

    def related(self, a: Attribute, b: Attribute) -> bool:
        """True when any relation (including derived cast_with) links a and b."""
        if a.key == b.key:
            return False
        buckets = self._edges.get(a.key, {})
        return any(b.key in targets for targets in buckets.values())

    def relations_between(
        self, a: Attribute, b: Attribute, include_derived: bool = False
    ) -> list[Relation]:
        """Typed relations linking a and b, oriented canonically.

        has_genre runs title -> genre, acted_in and directed run
        person -> title. Derived cast_with edges are included only on request.
        """
        if a.key == b.key:
            return []
        out: list[Relation] = []
        buckets = self._edges.get(a.key, {})
        for pred in Predicate:
            if pred is Predicate.CAST_WITH and not include_derived:
                continue
            if b.key not in buckets.get(pred, set()):
                continue
            subject, obj = _orient(pred, a, b)
            out.append(Relation(subject=subject, predicate=pred, object=obj))
        return out


def _orient(pred: Predicate, a: Attribute, b: Attribute) -> tuple[Attribute, Attribute]:
    if pred is Predicate.HAS_GENRE:
        return (a, b) if a.kind is Kind.TITLE else (b, a)
    if pred in (Predicate.ACTED_IN, Predicate.DIRECTED):
        return (a, b) if a.kind is Kind.PERSON else (b, a)
    # cast_with is symmetric; order by id for determinism
    return (a, b) if a.id <= b.id else (b, a)


def _movie_sort_key(movie: Movie) -> tuple:
    return (movie.title.id, movie.year if movie.year is not None else -1)


_REQUIRED_FIELDS = ("title", "year", "genres", "actors", "directors", "popularity")


def _parse_record(record: dict, line_no: int) -> Movie:
    for name in _REQUIRED_FIELDS:
        if name not in record:
            raise KBParseError(line_no, f"missing field {name!r}")
    title = record["title"]
    if not isinstance(title, str) or not title.strip():
        raise KBParseError(line_no, "title must be a non-empty string")
    year = record["year"]
    if year is not None and not isinstance(year, int):
        raise KBParseError(line_no, "year must be an integer or null")
    popularity = record["popularity"]
    if isinstance(popularity, bool) or not isinstance(popularity, (int, float)):
        raise KBParseError(line_no, "popularity must be a number")
    if popularity < 0:
        raise KBValidationError(f"line {line_no}: popularity must be non-negative")

    def attr_list(name: str, kind: Kind) -> frozenset[Attribute]:
        values = record[name]
        if not isinstance(values, list) or not all(
            isinstance(v, str) and v.strip() for v in values
        ):
            raise KBParseError(line_no, f"{name} must be a list of non-empty strings")
        out: dict[str, Attribute] = {}
        for value in values:
            attr = make_attribute(kind, value)
            out.setdefault(attr.id, attr)
        return frozenset(out.values())

    return Movie(
        title=make_attribute(Kind.TITLE, title),
        genres=attr_list("genres", Kind.GENRE),
        actors=attr_list("actors", Kind.PERSON),
        directors=attr_list("directors", Kind.PERSON),
        year=year,
        popularity=popularity,
    )


Source = Union[str, Path, IO[str], Iterable[str]]


def _iter_lines(source: Source) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as handle:
            yield from handle
        return
    yield from source


def load_kb(source: Source) -> MovieKB:
    """Load a KB from line-delimited JSON (path, stream, or iterable of lines)."""
    movies: list[Movie] = []
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise KBParseError(line_no, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise KBParseError(line_no, "record must be a JSON object")
        movies.append(_parse_record(record, line_no))
    return MovieKB(movies)


def movie_to_record(movie: Movie) -> dict:
    """Canonical JSON-ready form of one movie (stable field and list order)."""
    return {
        "title": movie.title.display,
        "year": movie.year,
        "genres": [a.display for a in sorted(movie.genres, key=lambda a: a.id)],
        "actors": [a.display for a in sorted(movie.actors, key=lambda a: a.id)],
        "directors": [a.display for a in sorted(movie.directors, key=lambda a: a.id)],
        "popularity": movie.popularity,
    }


def dump_kb(kb: MovieKB, target: Union[str, Path, IO[str]]) -> None:
    """Write a KB as line-delimited JSON; loading the output round-trips."""
    lines = [
        json.dumps(movie_to_record(m), ensure_ascii=False)
        for m in sorted(kb.movies, key=_movie_sort_key)
    ]
    text = "\n".join(lines) + ("\n" if lines else "")
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        target.write(text)
