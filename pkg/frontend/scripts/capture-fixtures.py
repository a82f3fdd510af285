"""Capture wire fixtures for the frontend tests.

Runs scripted dialogs against the real session service (in process) and
records, for every message, the messageResponse payload plus the GET /state
snapshot taken immediately after. Output lands in tests/fixtures/.

Usage: python3 scripts/capture-fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from reelchat.service import create_app

HERE = Path(__file__).resolve().parent
OUT = HERE.parent / "tests" / "fixtures"

SCRIPTS = {
    "fig1": [
        "hello",
        "I like crime movies",
        "I have seen it, can you recommend something else?",
        "sure, go on",
    ],
    "exb": [
        "I like action and horror movies",
        "seen it, something else please",
        "go on",
    ],
    "exd": [
        "I like horror movies",
        "tell me more",
        "go on",
        "and then?",
    ],
}


def capture(client: TestClient, lines) -> dict:
    created = client.post("/sessions")
    created.raise_for_status()
    payload = created.json()
    session_id = payload["session_id"]
    steps = []
    for line in lines:
        message = client.post(f"/sessions/{session_id}/messages", json={"text": line})
        message.raise_for_status()
        state = client.get(f"/sessions/{session_id}/state")
        state.raise_for_status()
        steps.append({"text": line, "message": message.json(), "state": state.json()})
    return {"create": payload, "steps": steps}


def main() -> None:
    app = create_app()
    OUT.mkdir(parents=True, exist_ok=True)
    with TestClient(app) as client:
        for name, lines in SCRIPTS.items():
            fixture = capture(client, lines)
            path = OUT / f"{name}.json"
            path.write_text(json.dumps(fixture, indent=1, sort_keys=True) + "\n", encoding="utf-8")
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
