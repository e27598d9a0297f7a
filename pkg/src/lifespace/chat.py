"""User-agent chat sessions.

A session is a plain transcript bound to one agent. Every completed
message produces exactly one interaction-track memory event (a fixed
"User said / replied" template) and, when the agent agrees to a concrete
suggestion, an immediate replan request. The agent's autonomous life keeps
running while sessions are open; chats never pause the world.

Speech transcription/synthesis sits outside this boundary: plug adapters
in front of user_message / behind its reply if voice I/O is needed.
"""

from __future__ import annotations

import itertools
import json
from contextlib import nullcontext
from dataclasses import dataclass, field

from .cognition import Provider, respond_to_user
from .errors import ClosedSessionError, PreconditionError, UnknownAgentError
from .memory import draft_event
from .simulation import SimState, inject_user_exchange, request_replan

EXCHANGE_TEMPLATE = "User said: {user}. {name} replied: {reply}."

_session_ids = itertools.count(1)


@dataclass
class ChatSession:
    id: str
    agent_ref: str
    transcript: list[tuple[str, str, int]] = field(default_factory=list)  # (role, text, tick)
    open: bool = True


def open_session(state: SimState, agent_id: str) -> ChatSession:
    if not state.roster.has(agent_id):
        raise UnknownAgentError(f"no agent '{agent_id}' in the roster")
    return ChatSession(id=f"sess-{next(_session_ids):06d}", agent_ref=agent_id)


def user_message(
    session: ChatSession,
    text: str,
    state: SimState,
    provider: Provider,
    lock=None,
) -> tuple[str, bool]:
    """Send one user message; returns (agent reply, acted).

    The provider call runs outside the optional lock so a slow model never
    stalls the tick loop; reads and commits happen under it. On provider
    failure the transcript is untouched and the error propagates for the
    caller to retry.
    """
    guard = lock if lock is not None else nullcontext()
    if not text or not text.strip():
        raise PreconditionError("message text must be non-empty")

    with guard:
        if not session.open:
            raise ClosedSessionError(f"session {session.id} is closed")
        profile = state.roster.profile(session.agent_ref)
        context = state.context_for(session.agent_ref)
        world = state.world

    reply = respond_to_user(provider, profile, context, world, text)

    with guard:
        if not session.open:
            raise ClosedSessionError(f"session {session.id} closed during reply")
        session.transcript.append(("user", text, state.tick))
        session.transcript.append(("agent", reply.text, state.tick))
        exchange_text = EXCHANGE_TEMPLATE.format(user=text, name=profile.name, reply=reply.text)
        inject_user_exchange(
            state,
            session.agent_ref,
            draft_event("user_exchange", exchange_text, (session.agent_ref,), state.tick),
        )
        acted = False
        if reply.accepted_action is not None:
            request_replan(state, session.agent_ref, reply.accepted_action)
            acted = True
    return reply.text, acted


def close_session(session: ChatSession) -> ChatSession:
    """Close the session; the transcript stays exportable."""
    if not session.open:
        raise ClosedSessionError(f"session {session.id} is already closed")
    session.open = False
    return session


def export_transcript(session: ChatSession) -> str:
    """Transcript as JSON Lines: {session, role, text, tick}."""
    lines = [
        json.dumps(
            {"session": session.id, "role": role, "text": text, "tick": tick},
            sort_keys=True,
            ensure_ascii=False,
        )
        for role, text, tick in session.transcript
    ]
    return "\n".join(lines) + ("\n" if lines else "")
