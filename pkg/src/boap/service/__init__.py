"""Live preference-session service: HTTP endpoints bridging the
optimization loop to a human expert."""

from .app import create_app
from .sessions import Session, SessionError, SessionStore, replay_events

__all__ = ["create_app", "Session", "SessionError", "SessionStore", "replay_events"]
