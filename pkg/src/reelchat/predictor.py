"""Next-turn system attribute prediction over placeholders.

A predictor consumes the delexicalized context plus the session's positive
placeholders and proposes the system's next attribute tracking, still in
placeholder space. Attributes the system should introduce for the first time
come back as NEW placeholders and are filled later by the recommender.

The reference implementation is a deterministic policy cascade over a small
state summary; trained models or remote services plug in behind the same
interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol

import httpx

from .delex import Placeholder, PlaceholderEntry, find_placeholders, parse_placeholder
from .kb import Kind
from .tracking import AttributeTracking, Label

__all__ = [
    "PolicyState",
    "PredictorInput",
    "PredictedTracking",
    "AttributeDelta",
    "SystemAttributePredictor",
    "ReferencePolicy",
    "RemotePredictor",
    "PredictorError",
    "PredictorBackendError",
    "predict",
    "compute_delta",
]


@dataclass(frozen=True)
class PolicyState:
    """Session summary the reference policy decides on."""

    n_pos_genres: int = 0
    n_pos_persons: int = 0
    n_pos_titles: int = 0
    latest_pos_genre: Optional[Placeholder] = None
    offer_pending: bool = False
    last_rejected: bool = False
    accepted: bool = False
    farewell: bool = False
    reengaged: bool = False


@dataclass(frozen=True)
class PredictorInput:
    """Delexicalized context plus the indexed positive placeholders.

    positive_placeholders is ordered by first mention. state carries the
    policy summary when the caller has one; remote predictors never see it.
    """

    context: str
    positive_placeholders: tuple[Placeholder, ...] = ()
    state: Optional[PolicyState] = None


@dataclass(frozen=True)
class PredictedTracking:
    """The predicted next system tracking, in placeholder space."""

    turn_index: int
    entries: frozenset[PlaceholderEntry] = field(default_factory=frozenset)

    def positives(self) -> set[Placeholder]:
        return {e.placeholder for e in self.entries if e.label is Label.POS}

    def as_payload(self) -> dict:
        ordered = sorted(self.entries, key=lambda e: (e.placeholder.render(), e.label.value))
        return {"turn": self.turn_index, "entries": [e.as_payload() for e in ordered]}


@dataclass(frozen=True)
class AttributeDelta:
    """Pair-level difference between predicted-next and current trackings."""

    entries: frozenset

    def positives(self):
        return {e.attribute for e in self.entries if e.label is Label.POS}

    def pos_kinds(self) -> tuple[str, ...]:
        return tuple(sorted(e.attribute.kind.value for e in self.entries if e.label is Label.POS))

    def is_empty(self) -> bool:
        return not self.entries

    def as_payload(self) -> list[dict]:
        ordered = sorted(
            self.entries,
            key=lambda e: (e.attribute.kind.value, e.attribute.id, e.label.value),
        )
        return [
            {
                "kind": e.attribute.kind.value,
                "id": e.attribute.id,
                "display": e.attribute.display,
                "label": e.label.value,
            }
            for e in ordered
        ]


class SystemAttributePredictor(Protocol):
    def predict(self, input: PredictorInput) -> PredictedTracking:
        ...  # pragma: no cover


class PredictorError(Exception):
    """The predictor failed; the engine degrades to an empty prediction."""


class PredictorBackendError(PredictorError):
    """A remote predictor backend failed or timed out."""


def _next_turn(input: PredictorInput) -> int:
    # context lines are "speaker: text"; the next turn follows them
    return input.context.count("\n") + 2 if input.context else 1


class ReferencePolicy:
    """Deterministic policy cascade.

    With a state summary:
      1. farewell or an accepted recommendation ends attribute pushing;
      2. no positives: elicit (empty prediction);
      3. rejection not yet re-engaged: carry the most recent positive genre;
      4. rejection already re-engaged: carry survivors plus [NEW_MOVIE];
      5. live offer: social move keyed on tracked persons, [NEW_PERSON]
         until two persons are in play, then [NEW_MOVIE] (the cast link);
      6. otherwise recommend: carry positives plus [NEW_MOVIE].

    Without a state summary only rules 2 and 6 apply.
    """

    def predict(self, input: PredictorInput) -> PredictedTracking:
        turn = _next_turn(input)
        state = input.state
        positives = tuple(dict.fromkeys(input.positive_placeholders))

        def result(*placeholders: Placeholder) -> PredictedTracking:
            entries = frozenset(
                PlaceholderEntry(placeholder=p, label=Label.POS) for p in placeholders
            )
            return PredictedTracking(turn_index=turn, entries=entries)

        if state is not None and (state.farewell or state.accepted):
            return result()
        if not positives:
            return result()
        if state is not None:
            if state.last_rejected and not state.reengaged:
                focus = state.latest_pos_genre
                if focus is None:
                    return result(*positives)
                return result(focus)
            if state.last_rejected and state.reengaged:
                return result(*positives, Placeholder(kind=Kind.TITLE, is_new=True))
            if state.offer_pending:
                if state.n_pos_persons < 2:
                    return result(*positives, Placeholder(kind=Kind.PERSON, is_new=True))
                return result(*positives, Placeholder(kind=Kind.TITLE, is_new=True))
        return result(*positives, Placeholder(kind=Kind.TITLE, is_new=True))


def predict(input: PredictorInput, policy: SystemAttributePredictor) -> PredictedTracking:
    """Run a predictor and normalize its output to the closed world.

    Indexed placeholders that never occurred in the input context or its
    positive placeholder list are demoted to NEW placeholders of the same
    kind; the output therefore never references an unassigned index.
    """
    try:
        raw = policy.predict(input)
    except PredictorError:
        raise
    except Exception as exc:
        raise PredictorError(str(exc)) from exc
    seen = set(find_placeholders(input.context)) | set(input.positive_placeholders)
    normalized: set[PlaceholderEntry] = set()
    for entry in raw.entries:
        ph = entry.placeholder
        if not ph.is_new and ph not in seen:
            ph = Placeholder(kind=ph.kind, is_new=True)
        normalized.add(PlaceholderEntry(placeholder=ph, label=entry.label))
    return PredictedTracking(turn_index=raw.turn_index, entries=frozenset(normalized))


def compute_delta(
    predicted: AttributeTracking, current: AttributeTracking
) -> AttributeDelta:
    """Entries of the predicted tracking absent, as pairs, from the current one.

    A label flip therefore shows up in the delta: (title, neg) is a new pair
    even when (title, pos) was tracked before.
    """
    return AttributeDelta(entries=frozenset(predicted.entries - current.entries))


class RemotePredictor:
    """HTTP predictor client speaking the documented JSON wire contract."""

    def __init__(
        self,
        url: str,
        timeout: float = 5.0,
        client: Optional[httpx.Client] = None,
    ):
        self.url = url
        self.timeout = timeout
        self._client = client if client is not None else httpx.Client()

    def predict(self, input: PredictorInput) -> PredictedTracking:
        body = {
            "context": input.context,
            "positive_placeholders": [p.render() for p in input.positive_placeholders],
        }
        try:
            response = self._client.post(self.url, json=body, timeout=self.timeout)
            response.raise_for_status()
            payload = response.json()
        except httpx.HTTPError as exc:
            raise PredictorBackendError(str(exc)) from exc
        try:
            entries = frozenset(
                PlaceholderEntry(
                    placeholder=parse_placeholder(row["placeholder"]),
                    label=Label(row["label"]),
                )
                for row in payload["entries"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PredictorBackendError(f"malformed response: {exc}") from exc
        return PredictedTracking(turn_index=_next_turn(input), entries=entries)
