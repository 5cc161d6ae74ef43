"""Interactive session management.

A session wraps one live optimization loop whose oracle is a human: the
loop's pending request bundle is exposed as open queries, answers arrive
in batches, and the loop resumes only once the whole bundle is answered.
Every mutation is appended to a per-session event log, so a session can
be reconstructed by replaying its events through the (deterministic)
engine.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Optional

from ..engine import (
    ComparisonAnswer,
    LoopConfig,
    ObservationAnswer,
    OracleRequest,
    RunTrace,
    engine_loop,
)


class SessionError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def loop_config_from_payload(payload: dict) -> LoopConfig:
    """Build and validate a LoopConfig from a request payload, mapping
    validation failures to field-level messages."""
    allowed = {
        "dim",
        "bounds",
        "mode",
        "n_properties",
        "property_names",
        "seed",
        "t_init",
        "budget",
        "grid_size",
        "hyperopt_starts",
        "hyperopt_maxfev",
        "true_max",
    }
    unknown = set(payload) - allowed
    if unknown:
        raise SessionError(422, f"unknown config fields: {sorted(unknown)}")
    if "dim" not in payload or "bounds" not in payload:
        raise SessionError(422, "config requires 'dim' and 'bounds'")
    data = dict(payload)
    data["bounds"] = tuple(tuple(float(v) for v in b) for b in data["bounds"])
    if "property_names" in data and data["property_names"] is not None:
        data["property_names"] = tuple(str(p) for p in data["property_names"])
    try:
        config = LoopConfig(**data)
    except (TypeError, ValueError) as exc:
        raise SessionError(422, f"invalid config: {exc}") from exc
    if len(config.bounds) != config.dim:
        raise SessionError(422, "bounds length must equal dim")
    return config


def _query_views(request: OracleRequest, answered: set) -> dict:
    observations = [
        {"id": q.qid, "eval_index": q.eval_index, "x": list(q.x)}
        for q in request.observations
        if q.qid not in answered
    ]
    comparisons = [
        {
            "id": q.qid,
            "property_index": q.property_idx,
            "property_name": q.property_name,
            "left_index": q.left_idx,
            "right_index": q.right_idx,
            "left_x": list(q.left_x),
            "right_x": list(q.right_x),
        }
        for q in request.comparisons
        if q.qid not in answered
    ]
    return {"observations": observations, "comparisons": comparisons}


class Session:
    """One live loop plus its append-only event log."""

    def __init__(self, session_id: str, config: LoopConfig, events_path: Optional[Path]):
        self.session_id = session_id
        self.config = config
        self.events_path = events_path
        self.lock = threading.Lock()
        self.trace = RunTrace()
        self._gen = engine_loop(config, self.trace)
        self._pending: Optional[OracleRequest] = next(self._gen)
        self._answers: dict = {}
        self.finished = False

    # -- event log ---------------------------------------------------

    def log_event(self, event: dict) -> None:
        if self.events_path is None:
            return
        self.events_path.parent.mkdir(parents=True, exist_ok=True)
        with self.events_path.open("a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    # -- state -------------------------------------------------------

    def phase(self) -> str:
        if self.finished:
            return "finished"
        if self._pending is None:
            return "suggesting"
        answered = set(self._answers)
        if any(q.qid not in answered for q in self._pending.observations):
            return "awaiting_observation"
        if any(q.qid not in answered for q in self._pending.comparisons):
            return "awaiting_preferences"
        return "suggesting"

    def state_view(self) -> dict:
        open_queries = {"observations": [], "comparisons": []}
        if self._pending is not None and not self.finished:
            open_queries = _query_views(self._pending, set(self._answers))
        return {
            "session_id": self.session_id,
            "phase": self.phase(),
            "config": {
                "dim": self.config.dim,
                "bounds": [list(b) for b in self.config.bounds],
                "mode": self.config.mode,
                "n_properties": self.config.n_properties,
                "property_names": self.config.property_labels(),
                "seed": self.config.seed,
                "t_init": self.config.resolved_t_init(),
                "budget": self.config.resolved_budget(),
                "true_max": self.config.true_max,
            },
            "open_queries": open_queries,
            "answered_count": len(self._answers),
            "trace": list(self.trace.records),
        }

    # -- mutation ----------------------------------------------------

    def submit(self, payload: dict, log: bool = True) -> dict:
        """Apply one answer batch atomically.

        Unknown, stale, or duplicate query ids reject the whole batch
        with a conflict and leave the session unchanged.
        """
        if self.finished:
            raise SessionError(409, "session is finished")
        if self._pending is None:
            raise SessionError(409, "no open queries")
        obs_ids = {q.qid: q for q in self._pending.observations}
        cmp_ids = {q.qid: q for q in self._pending.comparisons}

        staged: dict = {}
        for entry in payload.get("observations", []):
            qid = entry.get("id")
            if qid not in obs_ids:
                raise SessionError(409, f"unknown or stale observation id {qid!r}")
            if qid in self._answers or qid in staged:
                raise SessionError(409, f"duplicate answer for {qid!r}")
            if "value" not in entry or entry["value"] is None:
                raise SessionError(422, f"observation {qid!r} needs a numeric value")
            true_value = entry.get("true_value")
            staged[qid] = ObservationAnswer(
                value=float(entry["value"]),
                true_value=None if true_value is None else float(true_value),
            )
        for entry in payload.get("comparisons", []):
            qid = entry.get("id")
            if qid not in cmp_ids:
                raise SessionError(409, f"unknown or stale comparison id {qid!r}")
            if qid in self._answers or qid in staged:
                raise SessionError(409, f"duplicate answer for {qid!r}")
            choice = entry.get("choice")
            if choice not in ("left", "right", "skip"):
                raise SessionError(422, f"comparison {qid!r} choice must be left/right/skip")
            staged[qid] = ComparisonAnswer(choice=None if choice == "skip" else choice)
        if not staged:
            raise SessionError(422, "empty answer batch")

        self._answers.update(staged)
        if log:
            self.log_event({"event": "answers", "payload": payload})

        all_ids = set(obs_ids) | set(cmp_ids)
        if set(self._answers) >= all_ids:
            answers, self._answers = self._answers, {}
            try:
                self._pending = self._gen.send(answers)
            except StopIteration:
                self._pending = None
                self.finished = True
        return {"phase": self.phase(), "accepted": len(staged)}


class SessionStore:
    """In-memory session registry backed by per-session event logs."""

    def __init__(self, storage_dir: Optional[str] = None):
        self.storage_dir = Path(storage_dir) if storage_dir else None
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _events_path(self, session_id: str) -> Optional[Path]:
        if self.storage_dir is None:
            return None
        return self.storage_dir / session_id / "events.jsonl"

    def create(self, payload: dict) -> Session:
        config = loop_config_from_payload(payload)
        session_id = uuid.uuid4().hex[:12]
        session = Session(session_id, config, self._events_path(session_id))
        session.log_event({"event": "created", "config": payload})
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            session = self._replay_from_disk(session_id)
            if session is None:
                raise SessionError(404, f"unknown session {session_id!r}")
            with self._lock:
                self._sessions[session_id] = session
        return session

    def list_ids(self) -> list[dict]:
        ids = set(self._sessions)
        if self.storage_dir is not None and self.storage_dir.exists():
            ids.update(p.name for p in self.storage_dir.iterdir() if p.is_dir())
        out = []
        for sid in sorted(ids):
            try:
                session = self.get(sid)
            except SessionError:
                continue
            out.append({"session_id": sid, "phase": session.phase()})
        return out

    def _replay_from_disk(self, session_id: str) -> Optional[Session]:
        path = self._events_path(session_id)
        if path is None or not path.exists():
            return None
        return replay_events(session_id, path)


def replay_events(session_id: str, events_path: Path) -> Session:
    """Rebuild a session from its event log by re-running the engine and
    feeding the recorded answer batches in order."""
    events = [
        json.loads(line)
        for line in Path(events_path).read_text().splitlines()
        if line.strip()
    ]
    if not events or events[0].get("event") != "created":
        raise SessionError(500, f"corrupt event log for session {session_id!r}")
    config = loop_config_from_payload(events[0]["config"])
    session = Session(session_id, config, Path(events_path))
    for event in events[1:]:
        if event.get("event") == "answers":
            session.submit(event["payload"], log=False)
    return session
