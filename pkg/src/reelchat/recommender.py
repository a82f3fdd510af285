"""Relation-overlap recommendation over the movie KB.

Scoring is integer overlap: matched positives count +1, matched negatives -1.
The ranking order is total and deterministic: score descending, popularity
descending, canonical id ascending. Negative movie titles are hard-excluded
from title recommendations so a rejected movie is never offered again.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol

import httpx

from .kb import Attribute, Kind, MovieKB, Predicate

__all__ = [
    "RecommendationQuery",
    "ScoredCandidate",
    "Recommender",
    "KBRecommender",
    "RemoteRecommender",
    "RecommenderBackendError",
    "recommend",
    "person_recommend",
]


@dataclass(frozen=True)
class RecommendationQuery:
    positives: frozenset[Attribute]
    negatives: frozenset[Attribute] = frozenset()
    target_kind: Kind = Kind.TITLE
    exclude: frozenset[Attribute] = field(default_factory=frozenset)


@dataclass(frozen=True)
class ScoredCandidate:
    attribute: Attribute
    score: int
    matched: frozenset[Attribute]


class Recommender(Protocol):
    def recommend(self, query: RecommendationQuery, k: int) -> list[ScoredCandidate]:
        ...  # pragma: no cover


class RecommenderBackendError(Exception):
    """A remote recommender backend failed or timed out."""


def _matches(kb: MovieKB, query_attr: Attribute, candidate: Attribute, target_kind: Kind) -> bool:
    if target_kind is Kind.PERSON:
        # person candidates are scored over cast_with and acted_in edges only
        relations = kb.relations_between(query_attr, candidate, include_derived=True)
        return any(
            r.predicate in (Predicate.CAST_WITH, Predicate.ACTED_IN) for r in relations
        )
    return kb.related(query_attr, candidate)


def recommend(query: RecommendationQuery, kb: MovieKB, k: int) -> list[ScoredCandidate]:
    """Top-k candidates of the query's target kind, totally ordered."""
    if k <= 0:
        return []
    excluded = {a.key for a in query.exclude}
    if query.target_kind is Kind.TITLE:
        excluded.update(a.key for a in query.negatives if a.kind is Kind.TITLE)
    scored = []
    for candidate in kb.attributes(query.target_kind):
        if candidate.key in excluded:
            continue
        matched = frozenset(
            a
            for a in (query.positives | query.negatives)
            if _matches(kb, a, candidate, query.target_kind)
        )
        score = len(matched & query.positives) - len(matched & query.negatives)
        scored.append(ScoredCandidate(attribute=candidate, score=score, matched=matched))
    scored.sort(
        key=lambda c: (-c.score, -kb.popularity(c.attribute), c.attribute.id)
    )
    return scored[:k]


def person_recommend(query: RecommendationQuery, kb: MovieKB, k: int) -> list[ScoredCandidate]:
    """Persons ranked by shared-cast overlap with the query's positives."""
    return recommend(
        RecommendationQuery(
            positives=query.positives,
            negatives=query.negatives,
            target_kind=Kind.PERSON,
            exclude=query.exclude,
        ),
        kb,
        k,
    )


class KBRecommender:
    """Reference recommender bound to one KB."""

    def __init__(self, kb: MovieKB):
        self.kb = kb

    def recommend(self, query: RecommendationQuery, k: int) -> list[ScoredCandidate]:
        return recommend(query, self.kb, k)


def _attr_payload(attr: Attribute) -> dict:
    return {"kind": attr.kind.value, "id": attr.id, "display": attr.display}


def _attr_from_payload(payload: dict) -> Attribute:
    return Attribute(
        kind=Kind(payload["kind"]), id=payload["id"], display=payload["display"]
    )


class RemoteRecommender:
    """HTTP recommender client speaking the documented JSON wire contract."""

    def __init__(
        self,
        url: str,
        timeout: float = 5.0,
        client: Optional[httpx.Client] = None,
    ):
        self.url = url
        self.timeout = timeout
        self._client = client if client is not None else httpx.Client()

    def recommend(self, query: RecommendationQuery, k: int) -> list[ScoredCandidate]:
        body = {
            "positives": [_attr_payload(a) for a in sorted(query.positives, key=lambda a: a.id)],
            "negatives": [_attr_payload(a) for a in sorted(query.negatives, key=lambda a: a.id)],
            "target_kind": query.target_kind.value,
            "exclude": [_attr_payload(a) for a in sorted(query.exclude, key=lambda a: a.id)],
            "k": k,
        }
        try:
            response = self._client.post(self.url, json=body, timeout=self.timeout)
            response.raise_for_status()
            payload = response.json()
        except httpx.HTTPError as exc:
            raise RecommenderBackendError(str(exc)) from exc
        try:
            out = [
                ScoredCandidate(
                    attribute=_attr_from_payload(row["attribute"]),
                    score=int(row["score"]),
                    matched=frozenset(),
                )
                for row in payload["candidates"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise RecommenderBackendError(f"malformed response: {exc}") from exc
        return out[:k]
