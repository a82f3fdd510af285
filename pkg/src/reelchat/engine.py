"""Dialog engine: the per-turn pipeline and session state.

Each user message runs extract -> track -> delexicalize -> predict ->
relexicalize -> delta -> generate. Every intermediate artifact is recorded on
the session so that state can be inspected, serialized, and replayed
deterministically: the trackings, not raw history scans, drive prediction.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field as dc_field
from enum import Enum
from typing import Iterable, Optional, Sequence

from .delex import (
    NoCandidateError,
    PlaceholderMap,
    delexicalize,
    parse_placeholder,
    relexicalize,
)
from .extract import (
    AttributeMention,
    GenrePatternSet,
    collect_side_attributes,
    default_patterns,
    extract_mentions,
)
from .generator import (
    GenerationInput,
    Phase,
    RemoteGenerator,
    Response,
    ResponseGenerator,
    TemplateGenerator,
    generate,
    realized_attributes,
)
from .kb import Attribute, Kind, MovieKB
from .predictor import (
    AttributeDelta,
    PolicyState,
    PredictedTracking,
    PredictorError,
    PredictorInput,
    ReferencePolicy,
    RemotePredictor,
    SystemAttributePredictor,
    compute_delta,
    predict,
)
from .recommender import KBRecommender, Recommender, RemoteRecommender
from .tracking import (
    ACCEPTANCE_CUES,
    FAREWELL_CUES,
    REJECTION_CUES,
    AttributeLabeler,
    AttributeTracking,
    Label,
    LabelerDecision,
    RuleBasedLabeler,
    Side,
    TrackingEntry,
    _contains_cue,
    track,
)

__all__ = [
    "Turn",
    "RecommendationStatus",
    "RecommendationEvent",
    "DialogSession",
    "EngineConfig",
    "DialogEngine",
    "EngineError",
    "EngineInvariantError",
    "truncate_context",
    "session_to_payload",
    "session_from_payload",
    "session_to_json",
    "session_from_json",
]


@dataclass(frozen=True)
class Turn:
    speaker: Side
    text: str
    mentions: tuple[AttributeMention, ...] = ()

    def as_payload(self) -> dict:
        return {
            "speaker": self.speaker.value,
            "text": self.text,
            "mentions": [
                {
                    "kind": m.attribute.kind.value,
                    "id": m.attribute.id,
                    "display": m.attribute.display,
                    "start": m.start,
                    "end": m.end,
                }
                for m in sorted(self.mentions, key=lambda m: m.start)
            ],
        }


class RecommendationStatus(str, Enum):
    OFFERED = "offered"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


@dataclass
class RecommendationEvent:
    turn: int
    title: Attribute
    status: RecommendationStatus = RecommendationStatus.OFFERED


@dataclass
class DialogSession:
    """All mutable state for one conversation."""

    id: str
    turns: list[Turn] = dc_field(default_factory=list)
    trackings: dict[int, tuple[AttributeTracking, AttributeTracking]] = dc_field(
        default_factory=dict
    )
    pmap: PlaceholderMap = dc_field(default_factory=PlaceholderMap)
    predictions: dict[int, PredictedTracking] = dc_field(default_factory=dict)
    predicted_trackings: dict[int, AttributeTracking] = dc_field(default_factory=dict)
    deltas: dict[int, AttributeDelta] = dc_field(default_factory=dict)
    phases: dict[int, Phase] = dc_field(default_factory=dict)
    recommendations: list[RecommendationEvent] = dc_field(default_factory=list)
    rationales: dict[int, list[dict]] = dc_field(default_factory=dict)
    template_usage: dict[str, int] = dc_field(default_factory=dict)
    reengaged: bool = False
    closed: bool = False

    @property
    def current_turn(self) -> int:
        return len(self.turns)

    def latest_trackings(
        self,
    ) -> tuple[Optional[AttributeTracking], Optional[AttributeTracking]]:
        if not self.trackings:
            return (None, None)
        latest = max(self.trackings)
        return self.trackings[latest]

    def store_trackings(
        self, user_tracking: AttributeTracking, system_tracking: AttributeTracking
    ) -> None:
        self.trackings[max(user_tracking.turn_index, system_tracking.turn_index)] = (
            user_tracking,
            system_tracking,
        )

    def pending_offer(self) -> Optional[RecommendationEvent]:
        if self.recommendations and self.recommendations[-1].status is RecommendationStatus.OFFERED:
            return self.recommendations[-1]
        return None

    def rejected_titles(self) -> set[Attribute]:
        return {
            e.title
            for e in self.recommendations
            if e.status is RecommendationStatus.REJECTED
        }


@dataclass(frozen=True)
class EngineConfig:
    """Engine knobs. Token budgets count whitespace-separated words."""

    max_history_tokens: int = 1024
    labeler_context_tokens: int = 512
    template_seed: int = 0
    predictor_url: Optional[str] = None
    recommender_url: Optional[str] = None
    generator_url: Optional[str] = None
    request_timeout: float = 5.0


class EngineError(Exception):
    """A step could not run (closed session, empty message)."""


class EngineInvariantError(EngineError):
    """An end-of-turn consistency check failed; this indicates a bug."""


def truncate_context(turns: Sequence[Turn], limit: int) -> list[Turn]:
    """Whole-turn suffix within the token budget; the latest turn always stays."""
    out: list[Turn] = []
    total = 0
    for turn in reversed(turns):
        cost = len(turn.text.split())
        if out and total + cost > limit:
            break
        out.append(turn)
        total += cost
    out.reverse()
    return out


def _context_text(turns: Iterable[Turn]) -> str:
    return "\n".join(f"{t.speaker.value}: {t.text}" for t in turns)


class DialogEngine:
    """Wires the pipeline together over one KB and configuration.

    Pluggable parts (labeler, predictor, recommender, generator) default to
    the reference implementations; configured remote URLs produce HTTP
    clients that degrade to the references per module contract.
    """

    def __init__(
        self,
        kb: MovieKB,
        patterns: Optional[GenrePatternSet] = None,
        config: Optional[EngineConfig] = None,
        labeler: Optional[AttributeLabeler] = None,
        predictor: Optional[SystemAttributePredictor] = None,
        recommender: Optional[Recommender] = None,
        generator: Optional[ResponseGenerator] = None,
    ):
        self.kb = kb
        self.patterns = patterns if patterns is not None else default_patterns()
        self.config = config if config is not None else EngineConfig()
        self.labeler = labeler or RuleBasedLabeler(
            context_limit=self.config.labeler_context_tokens
        )
        if predictor is not None:
            self.predictor = predictor
        elif self.config.predictor_url:
            self.predictor = RemotePredictor(
                self.config.predictor_url, timeout=self.config.request_timeout
            )
        else:
            self.predictor = ReferencePolicy()
        if recommender is not None:
            self.recommender = recommender
        elif self.config.recommender_url:
            self.recommender = RemoteRecommender(
                self.config.recommender_url, timeout=self.config.request_timeout
            )
        else:
            self.recommender = KBRecommender(kb)
        self.templates = TemplateGenerator(
            kb, patterns=self.patterns, seed=self.config.template_seed
        )
        if generator is not None:
            self.generator = generator
        elif self.config.generator_url:
            self.generator = RemoteGenerator(
                self.config.generator_url,
                kb,
                patterns=self.patterns,
                timeout=self.config.request_timeout,
            )
        else:
            self.generator = self.templates

    def new_session(self, session_id: Optional[str] = None) -> DialogSession:
        return DialogSession(id=session_id or uuid.uuid4().hex[:12])

    # ------------------------------------------------------------------ step

    def step(self, session: DialogSession, user_text: str) -> tuple[Response, DialogSession]:
        if session.closed:
            raise EngineError(f"session {session.id} is closed")
        if not user_text or not user_text.strip():
            raise EngineError("empty user message")

        mentions = tuple(
            m.with_side(Side.USER)
            for m in extract_mentions(user_text, self.kb, self.patterns)
        )
        session.turns.append(Turn(speaker=Side.USER, text=user_text, mentions=mentions))
        turn_index = session.current_turn

        self._detect_verdict(session, user_text)

        user_attrs = collect_side_attributes(session, Side.USER)
        system_attrs = collect_side_attributes(session, Side.SYSTEM)
        user_tracking, system_tracking = track(
            session, user_attrs, system_attrs, self.labeler
        )
        session.store_trackings(user_tracking, system_tracking)
        self._record_rationales(session, turn_index, user_attrs, system_attrs)

        window = truncate_context(session.turns, self.config.max_history_tokens)
        delex_text, delex_user, delex_system = delexicalize(
            session, (user_tracking, system_tracking), session.pmap, turns=window
        )
        state = self._policy_state(session, user_tracking, system_tracking, user_text)
        positives = tuple(
            ph
            for ph, attr in session.pmap.items()
            if user_tracking.label_of(attr) is Label.POS
            or system_tracking.label_of(attr) is Label.POS
        )
        predictor_input = PredictorInput(
            context=delex_text, positive_placeholders=positives, state=state
        )
        try:
            predicted = predict(predictor_input, self.predictor)
        except PredictorError:
            predicted = PredictedTracking(turn_index=turn_index + 1)
        predicted = PredictedTracking(turn_index=turn_index + 1, entries=predicted.entries)
        if state.last_rejected and not session.reengaged:
            session.reengaged = True

        try:
            predicted_tracking = relexicalize(
                predicted.entries,
                session.pmap,
                self.recommender,
                (user_tracking, system_tracking),
            )
        except NoCandidateError:
            kept = frozenset(e for e in predicted.entries if not e.placeholder.is_new)
            predicted_tracking = relexicalize(
                kept, session.pmap, self.recommender, (user_tracking, system_tracking)
            )

        delta = compute_delta(predicted_tracking, system_tracking)
        delta = self._drop_rejected(session, delta)
        phase = self._classify_phase(delta, state)
        if phase is Phase.RECOMMEND:
            for attr in sorted(delta.positives(), key=lambda a: a.id):
                if attr.kind is Kind.TITLE:
                    session.recommendations.append(
                        RecommendationEvent(turn=turn_index, title=attr)
                    )

        generation_input = GenerationInput(
            context=_context_text(window),
            delta=delta,
            phase=phase,
            current_system=system_tracking,
            rotation=dict(session.template_usage),
            delex_context=delex_text,
            pmap=session.pmap,
        )
        response = generate(
            generation_input,
            self.generator,
            reference=self.templates,
            patterns=self.patterns,
        )
        if response.template_key:
            session.template_usage[response.template_key] = (
                session.template_usage.get(response.template_key, 0) + 1
            )

        system_mentions = tuple(
            m.with_side(Side.SYSTEM)
            for m in extract_mentions(response.text, self.kb, self.patterns)
        )
        session.turns.append(
            Turn(speaker=Side.SYSTEM, text=response.text, mentions=system_mentions)
        )
        final_user, final_system = track(
            session,
            collect_side_attributes(session, Side.USER),
            collect_side_attributes(session, Side.SYSTEM),
            self.labeler,
        )
        session.store_trackings(final_user, final_system)
        self._record_rationales(
            session,
            session.current_turn,
            final_user.attributes(),
            final_system.attributes(),
        )

        session.predictions[turn_index] = predicted
        session.predicted_trackings[turn_index] = predicted_tracking
        session.deltas[turn_index] = delta
        session.phases[turn_index] = phase

        self._check_invariants(session, system_tracking, delta, response)
        return response, session

    # ------------------------------------------------------------- internals

    def _detect_verdict(self, session: DialogSession, user_text: str) -> None:
        pending = session.pending_offer()
        if pending is None:
            return
        if _contains_cue(user_text, REJECTION_CUES):
            pending.status = RecommendationStatus.REJECTED
            session.reengaged = False
        elif _contains_cue(user_text, ACCEPTANCE_CUES):
            pending.status = RecommendationStatus.ACCEPTED

    def _record_rationales(
        self,
        session: DialogSession,
        turn_index: int,
        user_attrs: Iterable[Attribute],
        system_attrs: Iterable[Attribute],
    ) -> None:
        rows = []
        for side, attrs in ((Side.USER, user_attrs), (Side.SYSTEM, system_attrs)):
            for attr in sorted(set(attrs), key=lambda a: (a.kind.value, a.id)):
                decision: LabelerDecision = self.labeler(session, attr)
                rows.append(
                    {
                        "side": side.value,
                        "kind": attr.kind.value,
                        "id": attr.id,
                        "label": decision.label.value,
                        "rationale": decision.rationale.value,
                    }
                )
        session.rationales[turn_index] = rows

    def _policy_state(
        self,
        session: DialogSession,
        user_tracking: AttributeTracking,
        system_tracking: AttributeTracking,
        user_text: str,
    ) -> PolicyState:
        positives = user_tracking.positives() | system_tracking.positives()
        latest_genre = None
        for turn in reversed(session.turns):
            if turn.speaker is not Side.USER:
                continue
            genre_mentions = [
                m
                for m in turn.mentions
                if m.attribute.kind is Kind.GENRE and m.attribute in positives
            ]
            if genre_mentions:
                latest = max(genre_mentions, key=lambda m: m.start)
                latest_genre = session.pmap.placeholder_of(latest.attribute)
                break
        last_status = (
            session.recommendations[-1].status if session.recommendations else None
        )
        return PolicyState(
            n_pos_genres=sum(1 for a in positives if a.kind is Kind.GENRE),
            n_pos_persons=sum(1 for a in positives if a.kind is Kind.PERSON),
            n_pos_titles=sum(1 for a in positives if a.kind is Kind.TITLE),
            latest_pos_genre=latest_genre,
            offer_pending=last_status is RecommendationStatus.OFFERED,
            last_rejected=last_status is RecommendationStatus.REJECTED,
            accepted=last_status is RecommendationStatus.ACCEPTED,
            farewell=_contains_cue(user_text, FAREWELL_CUES),
            reengaged=session.reengaged,
        )

    def _drop_rejected(self, session: DialogSession, delta: AttributeDelta) -> AttributeDelta:
        # defense against misbehaving backends: a rejected title never ships
        rejected = {a.key for a in session.rejected_titles()}
        if not rejected:
            return delta
        kept = frozenset(
            e
            for e in delta.entries
            if not (e.label is Label.POS and e.attribute.key in rejected)
        )
        return AttributeDelta(entries=kept)

    def _classify_phase(self, delta: AttributeDelta, state: PolicyState) -> Phase:
        pos_kinds = {k for k in delta.pos_kinds()}
        if not pos_kinds:
            if state.farewell or state.accepted:
                return Phase.CLOSING
            if state.n_pos_genres + state.n_pos_persons + state.n_pos_titles == 0:
                return Phase.ELICIT
            return Phase.SOCIAL
        if Kind.TITLE.value in pos_kinds:
            return Phase.SOCIAL if state.offer_pending else Phase.RECOMMEND
        return Phase.REENGAGE

    def _check_invariants(
        self,
        session: DialogSession,
        pre_system: AttributeTracking,
        delta: AttributeDelta,
        response: Response,
    ) -> None:
        final_user, final_system = session.latest_trackings()
        assert final_user is not None and final_system is not None
        if final_user.attributes() != collect_side_attributes(session, Side.USER):
            raise EngineInvariantError("user tracking is not total over mentions")
        if final_system.attributes() != collect_side_attributes(session, Side.SYSTEM):
            raise EngineInvariantError("system tracking is not total over mentions")
        if delta.entries & pre_system.entries:
            raise EngineInvariantError("delta overlaps the current system tracking")
        missing = delta.positives() - set(response.realized)
        if missing:
            raise EngineInvariantError(
                f"unrealized delta attributes: {sorted(a.id for a in missing)}"
            )
        rejected = session.rejected_titles()
        if rejected and realized_attributes(response.text, rejected, self.patterns):
            raise EngineInvariantError("a rejected title reappeared in a response")

    # ---------------------------------------------------------------- state

    def session_state(self, session: DialogSession) -> dict:
        return session_to_payload(session)


# -------------------------------------------------------------- serialization


def session_to_payload(session: DialogSession) -> dict:
    """JSON-ready snapshot; the schema doubles as the service state payload."""
    return {
        "id": session.id,
        "closed": session.closed,
        "reengaged": session.reengaged,
        "turns": [t.as_payload() for t in session.turns],
        "trackings": [
            {
                "turn": turn,
                "user": pair[0].as_payload(),
                "system": pair[1].as_payload(),
            }
            for turn, pair in sorted(session.trackings.items())
        ],
        "placeholder_map": session.pmap.as_payload(),
        "predictions": [
            {"turn": turn, "entries": p.as_payload()["entries"]}
            for turn, p in sorted(session.predictions.items())
        ],
        "predicted_trackings": [
            {"turn": turn, "tracking": t.as_payload()}
            for turn, t in sorted(session.predicted_trackings.items())
        ],
        "deltas": [
            {"turn": turn, "entries": d.as_payload()}
            for turn, d in sorted(session.deltas.items())
        ],
        "phases": [
            {"turn": turn, "phase": p.value} for turn, p in sorted(session.phases.items())
        ],
        "recommendations": [
            {
                "turn": e.turn,
                "kind": e.title.kind.value,
                "id": e.title.id,
                "display": e.title.display,
                "status": e.status.value,
            }
            for e in session.recommendations
        ],
        "rationales": [
            {"turn": turn, "entries": rows}
            for turn, rows in sorted(session.rationales.items())
        ],
        "template_usage": dict(sorted(session.template_usage.items())),
    }


def _registry_from_payload(payload: dict) -> dict[tuple[Kind, str], Attribute]:
    registry: dict[tuple[Kind, str], Attribute] = {}

    def put(kind: str, canonical_id: str, display: str) -> None:
        attr = Attribute(kind=Kind(kind), id=canonical_id, display=display)
        registry.setdefault(attr.key, attr)

    for row in payload.get("placeholder_map", []):
        put(row["kind"], row["id"], row["display"])
    for turn in payload.get("turns", []):
        for m in turn.get("mentions", []):
            put(m["kind"], m["id"], m["display"])
    for row in payload.get("recommendations", []):
        put(row["kind"], row["id"], row["display"])
    for row in payload.get("deltas", []):
        for e in row.get("entries", []):
            put(e["kind"], e["id"], e["display"])
    return registry


def session_from_payload(payload: dict) -> DialogSession:
    """Rebuild a session from its snapshot. Inverse of session_to_payload."""
    registry = _registry_from_payload(payload)

    def resolve(kind: str, canonical_id: str) -> Attribute:
        attr = registry.get((Kind(kind), canonical_id))
        if attr is None:
            raise ValueError(f"snapshot references unknown attribute {canonical_id!r}")
        return attr

    def tracking_from(payload_row: dict) -> AttributeTracking:
        return AttributeTracking(
            side=Side(payload_row["side"]),
            turn_index=payload_row["turn"],
            entries=frozenset(
                TrackingEntry(
                    attribute=resolve(e["kind"], e["id"]), label=Label(e["label"])
                )
                for e in payload_row["entries"]
            ),
        )

    session = DialogSession(id=payload["id"])
    session.closed = payload.get("closed", False)
    session.reengaged = payload.get("reengaged", False)
    for turn_row in payload.get("turns", []):
        mentions = tuple(
            AttributeMention(
                attribute=resolve(m["kind"], m["id"]),
                start=m["start"],
                end=m["end"],
                side=Side(turn_row["speaker"]),
            )
            for m in turn_row.get("mentions", [])
        )
        session.turns.append(
            Turn(speaker=Side(turn_row["speaker"]), text=turn_row["text"], mentions=mentions)
        )
    for row in payload.get("trackings", []):
        session.trackings[row["turn"]] = (
            tracking_from(row["user"]),
            tracking_from(row["system"]),
        )
    session.pmap = PlaceholderMap.from_payload(payload.get("placeholder_map", []))
    from .delex import PlaceholderEntry

    for row in payload.get("predictions", []):
        session.predictions[row["turn"]] = PredictedTracking(
            turn_index=row["turn"] + 1,
            entries=frozenset(
                PlaceholderEntry(
                    placeholder=parse_placeholder(e["placeholder"]),
                    label=Label(e["label"]),
                )
                for e in row.get("entries", [])
            ),
        )
    for row in payload.get("predicted_trackings", []):
        session.predicted_trackings[row["turn"]] = tracking_from(row["tracking"])
    for row in payload.get("deltas", []):
        session.deltas[row["turn"]] = AttributeDelta(
            entries=frozenset(
                TrackingEntry(
                    attribute=resolve(e["kind"], e["id"]), label=Label(e["label"])
                )
                for e in row.get("entries", [])
            )
        )
    for row in payload.get("phases", []):
        session.phases[row["turn"]] = Phase(row["phase"])
    for row in payload.get("recommendations", []):
        session.recommendations.append(
            RecommendationEvent(
                turn=row["turn"],
                title=resolve(row["kind"], row["id"]),
                status=RecommendationStatus(row["status"]),
            )
        )
    for row in payload.get("rationales", []):
        session.rationales[row["turn"]] = list(row.get("entries", []))
    session.template_usage = dict(payload.get("template_usage", {}))
    return session


def session_to_json(session: DialogSession) -> str:
    """Canonical JSON form; byte-stable for identical session states."""
    return json.dumps(
        session_to_payload(session), ensure_ascii=False, sort_keys=True, separators=(",", ":")
    )


def session_from_json(text: str) -> DialogSession:
    return session_from_payload(json.loads(text))
