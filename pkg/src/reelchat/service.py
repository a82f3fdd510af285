"""HTTP session service: the engine behind three JSON endpoints.

POST /sessions            create (optionally from a snapshot / with overrides)
POST /sessions/{id}/messages   run one dialog step, return inspector payload
GET  /sessions/{id}/state      canonical session snapshot

Configuration comes from an optional JSON file plus REELCHAT_* environment
overrides; unknown keys are rejected by name.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import threading
import uuid
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from fastapi import Body, FastAPI, HTTPException

from .engine import (
    DialogEngine,
    DialogSession,
    EngineConfig,
    EngineError,
    session_from_payload,
    session_to_payload,
)
from .extract import GenrePatternSet, default_patterns
from .kb import KBError, MovieKB, load_kb

logger = logging.getLogger(__name__)

__all__ = [
    "ServiceConfig",
    "ServiceConfigError",
    "load_service_config",
    "create_app",
    "default_kb",
]

SESSION_CONFIG_KEYS = ("template_seed", "max_history_tokens", "labeler_context_tokens")


class ServiceConfigError(Exception):
    """Bad service configuration; the message names the offending keys."""


@dataclass(frozen=True)
class ServiceConfig:
    kb_path: Optional[str] = None
    patterns_path: Optional[str] = None
    predictor_url: Optional[str] = None
    recommender_url: Optional[str] = None
    generator_url: Optional[str] = None
    request_timeout: float = 5.0
    template_seed: int = 0
    max_history_tokens: int = 1024
    labeler_context_tokens: int = 512
    max_sessions: int = 256
    host: str = "127.0.0.1"
    port: int = 8080


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ServiceConfig)}


def _coerce(name: str, value):
    current = getattr(ServiceConfig(), name)
    if isinstance(current, bool):  # not used today, kept for safety
        return value in ("1", "true", "True") if isinstance(value, str) else bool(value)
    if isinstance(current, int) and not isinstance(value, bool):
        return int(value)
    if isinstance(current, float):
        return float(value)
    return value


def load_service_config(
    path: Optional[str] = None, env: Optional[Mapping[str, str]] = None
) -> ServiceConfig:
    """Merge defaults <- JSON file <- REELCHAT_* environment variables."""
    values: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ServiceConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ServiceConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ServiceConfigError(f"config file {path} must hold a JSON object")
        unknown = sorted(set(raw) - set(_FIELD_TYPES))
        if unknown:
            raise ServiceConfigError(f"unknown config keys: {', '.join(unknown)}")
        values.update(raw)
    if env is not None:
        for name in _FIELD_TYPES:
            env_key = f"REELCHAT_{name.upper()}"
            if env_key in env:
                values[name] = env[env_key]
    try:
        coerced = {name: _coerce(name, value) for name, value in values.items()}
        return ServiceConfig(**coerced)
    except (TypeError, ValueError) as exc:
        raise ServiceConfigError(f"bad config value: {exc}") from exc


def default_kb() -> MovieKB:
    """The small built-in movie KB shipped with the package."""
    with resources.files("reelchat.data").joinpath("demo_kb.jsonl").open(
        encoding="utf-8"
    ) as handle:
        return load_kb(handle)


def _load_kb(config: ServiceConfig) -> MovieKB:
    if config.kb_path is None:
        return default_kb()
    try:
        return load_kb(config.kb_path)
    except FileNotFoundError as exc:
        raise ServiceConfigError(f"KB file not found: {config.kb_path}") from exc
    except KBError as exc:
        raise ServiceConfigError(f"KB file {config.kb_path} is invalid: {exc}") from exc


def _load_patterns(config: ServiceConfig) -> GenrePatternSet:
    if config.patterns_path is None:
        return default_patterns()
    try:
        return GenrePatternSet.load(config.patterns_path)
    except FileNotFoundError as exc:
        raise ServiceConfigError(
            f"pattern file not found: {config.patterns_path}"
        ) from exc


def _engine_config(config: ServiceConfig, overrides: Optional[dict] = None) -> EngineConfig:
    base = EngineConfig(
        max_history_tokens=config.max_history_tokens,
        labeler_context_tokens=config.labeler_context_tokens,
        template_seed=config.template_seed,
        predictor_url=config.predictor_url,
        recommender_url=config.recommender_url,
        generator_url=config.generator_url,
        request_timeout=config.request_timeout,
    )
    if overrides:
        base = dataclasses.replace(base, **overrides)
    return base


@dataclass
class _Slot:
    session: DialogSession
    engine: DialogEngine
    lock: threading.Lock


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config if config is not None else ServiceConfig()
    kb = _load_kb(config)
    patterns = _load_patterns(config)
    default_engine = DialogEngine(kb, patterns=patterns, config=_engine_config(config))

    app = FastAPI(title="reelchat", docs_url=None, redoc_url=None)
    store: dict[str, _Slot] = {}
    store_lock = threading.Lock()

    def slot_of(session_id: str) -> _Slot:
        with store_lock:
            slot = store.get(session_id)
        if slot is None:
            raise HTTPException(status_code=404, detail=f"unknown session: {session_id}")
        return slot

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "sessions": len(store)}

    @app.post("/sessions", status_code=201)
    def create_session(payload: Optional[dict] = Body(None)) -> dict:
        payload = payload or {}
        unknown = sorted(set(payload) - {"config", "snapshot"})
        if unknown:
            raise HTTPException(
                status_code=422, detail=f"unknown keys: {', '.join(unknown)}"
            )
        overrides = payload.get("config") or {}
        if not isinstance(overrides, dict):
            raise HTTPException(status_code=422, detail="config must be an object")
        bad = sorted(set(overrides) - set(SESSION_CONFIG_KEYS))
        if bad:
            raise HTTPException(
                status_code=422, detail=f"unknown config keys: {', '.join(bad)}"
            )
        for key, value in overrides.items():
            if not isinstance(value, int) or isinstance(value, bool):
                raise HTTPException(
                    status_code=422, detail=f"config key {key} must be an integer"
                )
        engine = default_engine
        if overrides:
            engine = DialogEngine(
                kb, patterns=patterns, config=_engine_config(config, overrides)
            )
        if "snapshot" in payload:
            try:
                session = session_from_payload(payload["snapshot"])
            except (KeyError, TypeError, ValueError) as exc:
                raise HTTPException(
                    status_code=422, detail=f"bad snapshot: {exc}"
                ) from exc
        else:
            session = engine.new_session(uuid.uuid4().hex[:12])
        with store_lock:
            if len(store) >= config.max_sessions:
                raise HTTPException(
                    status_code=429,
                    detail=f"session capacity ({config.max_sessions}) exceeded",
                )
            if session.id in store:
                raise HTTPException(
                    status_code=409, detail=f"session {session.id} already exists"
                )
            store[session.id] = _Slot(
                session=session, engine=engine, lock=threading.Lock()
            )
        return {"session_id": session.id, "state": session_to_payload(session)}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, payload: dict = Body(...)) -> dict:
        text = payload.get("text")
        if not isinstance(text, str) or not text.strip():
            raise HTTPException(status_code=422, detail="text must be a non-empty string")
        slot = slot_of(session_id)
        with slot.lock:
            if slot.session.closed:
                raise HTTPException(status_code=409, detail="session is closed")
            try:
                response, session = slot.engine.step(slot.session, text)
            except EngineError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            turn = session.current_turn - 1
            user_tracking, system_tracking = session.trackings[session.current_turn]
            return {
                "session_id": session_id,
                "turn": turn,
                "response": {"text": response.text, "template_key": response.template_key},
                "phase": session.phases[turn].value,
                "trackings": {
                    "user": user_tracking.as_payload(),
                    "system": system_tracking.as_payload(),
                },
                "prediction": session.predictions[turn].as_payload()["entries"],
                "predicted_tracking": session.predicted_trackings[turn].as_payload(),
                "delta": session.deltas[turn].as_payload(),
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
                "rationales": session.rationales.get(session.current_turn, []),
                "placeholder_map": session.pmap.as_payload(),
            }

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str) -> dict:
        slot = slot_of(session_id)
        with slot.lock:
            return session_to_payload(slot.session)

    return app
