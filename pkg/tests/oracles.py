"""Independent reference computations used to cross-check the package.

Everything in this module is deliberately written against the raw movie
records and plain data structures, not against the package's adjacency or
search machinery, so a bug in one route cannot hide in the other.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterable, Optional

from reelchat.delex import Placeholder, PlaceholderEntry
from reelchat.kb import Attribute, Kind, MovieKB, Predicate
from reelchat.predictor import PredictedTracking
from reelchat.tracking import AttributeTracking, Label, Side, TrackingEntry

# --------------------------------------------------------------- recommender


def _record_ids(movie):
    return (
        movie.title.id,
        {g.id for g in movie.genres},
        {a.id for a in movie.actors},
        {d.id for d in movie.directors},
    )


def _related_raw(movies, q: Attribute, c: Attribute) -> bool:
    """Any KB relation between q and c, including derived shared-cast edges,
    recomputed straight from the records."""
    if q.key == c.key:
        return False
    for movie in movies:
        title_id, genres, actors, directors = _record_ids(movie)
        kinds = {q.kind, c.kind}
        if kinds == {Kind.TITLE, Kind.GENRE}:
            title, genre = (q, c) if q.kind is Kind.TITLE else (c, q)
            if title.id == title_id and genre.id in genres:
                return True
        elif kinds == {Kind.TITLE, Kind.PERSON}:
            title, person = (q, c) if q.kind is Kind.TITLE else (c, q)
            if title.id == title_id and (person.id in actors or person.id in directors):
                return True
        elif q.kind is Kind.PERSON and c.kind is Kind.PERSON:
            if q.id in actors and c.id in actors:
                return True
    return False


def _person_match_raw(movies, q: Attribute, c: Attribute) -> bool:
    """Match rule for person candidates: shared cast or acted-in only, so a
    director matches a person candidate only through an acting credit."""
    if q.key == c.key:
        return False
    for movie in movies:
        title_id, _, actors, _ = _record_ids(movie)
        if q.kind is Kind.TITLE and q.id == title_id and c.id in actors:
            return True
        if q.kind is Kind.PERSON and q.id in actors and c.id in actors:
            return True
    return False


def raw_attributes(kb: MovieKB, kind: Kind) -> list[Attribute]:
    """Distinct attributes of one kind, rebuilt from the records."""
    seen: dict[str, Attribute] = {}
    for movie in kb.movies:
        pool: Iterable[Attribute]
        if kind is Kind.TITLE:
            pool = (movie.title,)
        elif kind is Kind.GENRE:
            pool = movie.genres
        else:
            pool = movie.actors | movie.directors
        for attr in pool:
            seen.setdefault(attr.id, attr)
    return sorted(seen.values(), key=lambda a: a.id)


def raw_popularity(kb: MovieKB, attr: Attribute) -> float:
    if attr.kind is not Kind.TITLE:
        return 0
    pops = [m.popularity for m in kb.movies if m.title.id == attr.id]
    return max(pops, default=0)


def brute_force_recommend(
    kb: MovieKB,
    positives: Iterable[Attribute],
    negatives: Iterable[Attribute] = (),
    target_kind: Kind = Kind.TITLE,
    k: int = 5,
    exclude: Iterable[Attribute] = (),
) -> list[tuple[str, int]]:
    """Enumerate-score-sort recommendation oracle. Returns (id, score) pairs."""
    if k <= 0:
        return []
    positives = set(positives)
    negatives = set(negatives)
    excluded_ids = {a.id for a in exclude if a.kind is target_kind}
    if target_kind is Kind.TITLE:
        excluded_ids.update(a.id for a in negatives if a.kind is Kind.TITLE)
    match = _person_match_raw if target_kind is Kind.PERSON else _related_raw
    rows = []
    for candidate in raw_attributes(kb, target_kind):
        if candidate.id in excluded_ids:
            continue
        matched = {a for a in positives | negatives if match(kb.movies, a, candidate)}
        score = len(matched & positives) - len(matched & negatives)
        rows.append((candidate.id, score, raw_popularity(kb, candidate)))
    rows.sort(key=lambda r: (-r[1], -r[2], r[0]))
    return [(cid, score) for cid, score, _ in rows[:k]]


# ---------------------------------------------------------------- prediction


def _entry_key(entry: TrackingEntry):
    return (entry.attribute.kind.value, entry.attribute.id, entry.label.value)


def delta_by_pair_scan(
    predicted: AttributeTracking, current: AttributeTracking
) -> frozenset[TrackingEntry]:
    """Pair-set-difference oracle: keep predicted (attribute, label) pairs
    whose structural key is absent from the current tracking, compared field
    by field rather than by the dataclass's own equality."""
    current_keys = {_entry_key(e) for e in current.entries}
    kept = set()
    for entry in predicted.entries:
        if _entry_key(entry) not in current_keys:
            kept.add(entry)
    return frozenset(kept)


# -------------------------------------------------------------- augmentation


def raw_edge_triples(kb: MovieKB) -> set[tuple]:
    """Stored relation triples (no derived shared-cast edges), both
    orientations, straight from the records."""
    triples: set[tuple] = set()

    def add(a: Attribute, predicate: Predicate, b: Attribute) -> None:
        triples.add((a.key, predicate, b.key))
        triples.add((b.key, predicate, a.key))

    for movie in kb.movies:
        for genre in movie.genres:
            add(movie.title, Predicate.HAS_GENRE, genre)
        for actor in movie.actors:
            add(actor, Predicate.ACTED_IN, movie.title)
        for director in movie.directors:
            add(director, Predicate.DIRECTED, movie.title)
    return triples


def brute_force_monomorphisms(graph, kb: MovieKB) -> set[frozenset]:
    """All injective kind-preserving non-identity maps of the graph's nodes
    into the KB's attributes under which every graph edge lands on a stored
    KB edge with the same predicate. Enumerated naively via permutations.

    Returns each mapping as a frozenset of (node key, image key) pairs.
    """
    triples = raw_edge_triples(kb)
    nodes_by_kind: dict[Kind, list[Attribute]] = {}
    for node in sorted(graph.nodes, key=lambda a: (a.kind.value, a.id)):
        nodes_by_kind.setdefault(node.kind, []).append(node)
    kinds = sorted(nodes_by_kind, key=lambda k: k.value)
    pools = [
        [
            list(zip(nodes_by_kind[kind], images))
            for images in itertools.permutations(
                raw_attributes(kb, kind), len(nodes_by_kind[kind])
            )
        ]
        for kind in kinds
    ]
    out: set[frozenset] = set()
    for combo in itertools.product(*pools):
        mapping: dict[Attribute, Attribute] = {}
        for pairs in combo:
            mapping.update(pairs)
        if all(image == node for node, image in mapping.items()):
            continue
        ok = True
        for edge in graph.edges:
            subject = mapping[edge.subject]
            obj = mapping[edge.object]
            if (subject.key, edge.predicate, obj.key) not in triples:
                ok = False
                break
        if ok:
            out.add(frozenset((n.key, i.key) for n, i in mapping.items()))
    return out


# ------------------------------------------------------- random data helpers


def random_placeholder(rng: random.Random) -> Placeholder:
    kind = rng.choice(list(Kind))
    if rng.random() < 0.3:
        return Placeholder(kind=kind, is_new=True)
    return Placeholder(kind=kind, index=rng.randrange(6))


def random_placeholder_entries(
    rng: random.Random, max_size: int = 6
) -> frozenset[PlaceholderEntry]:
    entries = {
        PlaceholderEntry(
            placeholder=random_placeholder(rng),
            label=rng.choice((Label.POS, Label.NEG)),
        )
        for _ in range(rng.randrange(max_size + 1))
    }
    return frozenset(entries)


def random_predicted_tracking(rng: random.Random, turn: int = 1) -> PredictedTracking:
    return PredictedTracking(turn_index=turn, entries=random_placeholder_entries(rng))


def random_tracking(
    rng: random.Random, kb: MovieKB, side: Side, turn_index: int, max_size: int = 5
) -> AttributeTracking:
    attrs = rng.sample(kb.attributes(), min(rng.randrange(max_size + 1), len(kb.attributes())))
    entries = frozenset(
        TrackingEntry(attribute=a, label=rng.choice((Label.POS, Label.NEG)))
        for a in attrs
    )
    return AttributeTracking(side=side, turn_index=turn_index, entries=entries)


_USER_LINE_MAKERS = (
    lambda rng, kb: "I like {} movies.".format(rng.choice(raw_attributes(kb, Kind.GENRE)).display),
    lambda rng, kb: "I love {}.".format(rng.choice(raw_attributes(kb, Kind.PERSON)).display),
    lambda rng, kb: "I hate {} films.".format(rng.choice(raw_attributes(kb, Kind.GENRE)).display),
    lambda rng, kb: "Is {} any good?".format(rng.choice(raw_attributes(kb, Kind.TITLE)).display),
    lambda rng, kb: "Something with {} would be nice.".format(
        rng.choice(raw_attributes(kb, Kind.PERSON)).display
    ),
    lambda rng, kb: "I enjoy {} but I am not into {}.".format(
        rng.choice(raw_attributes(kb, Kind.GENRE)).display,
        rng.choice(raw_attributes(kb, Kind.GENRE)).display,
    ),
    lambda rng, kb: "Seen it. Something else please.",
    lambda rng, kb: "Hello there!",
)


def random_user_script(rng: random.Random, kb: MovieKB, max_turns: int = 5) -> list[str]:
    """A plausible sequence of user utterances mentioning real KB attributes."""
    length = rng.randrange(1, max_turns + 1)
    script = [_USER_LINE_MAKERS[rng.randrange(len(_USER_LINE_MAKERS))](rng, kb) for _ in range(length)]
    if rng.random() < 0.25:
        script.append(rng.choice(("Sounds good, I will watch it!", "Goodbye!")))
    return script
