"""Network boundary: state queries, live event stream, chat, mode gate.

The engine wraps a SimState behind a lock with a single writer (the tick
loop) and any number of readers. The Observable/Unobservable switch is a
pure presentation gate: it changes only the `visible` flag on streamed
envelopes, never what the backend generates, so two runs that differ only
in mode produce byte-identical event logs.

HTTP endpoints (JSON):
    GET    /v1/state
    POST   /v1/mode                {"mode": "observable"|"unobservable"}
    POST   /v1/sessions            {"agent": id}
    POST   /v1/sessions/{id}/messages   {"text": ...} -> {"reply", "acted"}
    DELETE /v1/sessions/{id}
    POST   /v1/snapshot            {"path": ...}
    POST   /v1/snapshot/load       {"path": ...}
    WS     /v1/events?since=<seq>  streaming envelopes
"""

from __future__ import annotations

import functools
import json
import logging
import queue
import threading
import time

import anyio
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import chat
from .cognition import Provider
from .errors import (
    ClosedSessionError,
    CorruptSnapshotError,
    LifespaceError,
    PreconditionError,
    ProviderUnavailableError,
    UnknownAgentError,
)
from .persistence import load_snapshot, save_snapshot
from .simulation import SimEvent, SimState, tick

logger = logging.getLogger("lifespace.service")

MODES = ("observable", "unobservable")

# Presentation-only face per agent mode, for the expressions view.
EXPRESSIONS = {"idle": "relaxed", "moving": "hurried", "acting": "focused", "conversing": "chatty"}

SUBSCRIBER_QUEUE_SIZE = 1024


def is_visible(event_type: str, mode: str) -> bool:
    if mode == "observable":
        return True
    return event_type == "user_exchange"


def envelope(event: SimEvent, mode: str) -> dict:
    wire = event.to_wire()
    wire["visible"] = is_visible(event.type, mode)
    return wire


class Subscriber:
    """Bounded per-client delivery queue; overflow marks it dropped."""

    def __init__(self) -> None:
        self.queue: queue.Queue = queue.Queue(maxsize=SUBSCRIBER_QUEUE_SIZE)
        self.dropped = False


class Engine:
    """Single-writer simulation runtime with subscriber fan-out."""

    def __init__(self, state: SimState, provider: Provider) -> None:
        self.lock = threading.RLock()
        self.state = state
        self.provider = provider
        self.log: list[SimEvent] = []
        self.mode = "observable"
        self._subscribers: list[Subscriber] = []
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        if self._thread is not None:
            return
        self._stop.clear()
        self._thread = threading.Thread(target=self._loop, name="lifespace-ticks", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def _loop(self) -> None:
        while not self._stop.is_set():
            started = time.monotonic()
            self.step()
            pace = self.state.config.tick_ms / 1000.0
            elapsed = time.monotonic() - started
            wait = max(0.0, pace - elapsed) if pace > 0 else 0.05
            self._stop.wait(wait)

    def step(self, n_ticks: int = 1) -> list[SimEvent]:
        batch: list[SimEvent] = []
        for _ in range(n_ticks):
            with self.lock:
                _, events = tick(self.state, self.provider)
                self.log.extend(events)
                expressions = self._expressions_frame()
                self._publish(events, expressions)
            batch.extend(events)
        return batch

    # -- streaming ---------------------------------------------------------

    def subscribe(self, since: int) -> tuple[list[SimEvent], Subscriber]:
        """Backlog of events with seq > since, plus a live queue registered
        atomically so nothing is missed or duplicated."""
        if since < 0:
            raise PreconditionError("since must be >= 0")
        subscriber = Subscriber()
        with self.lock:
            backlog = [event for event in self.log if event.seq > since]
            self._subscribers.append(subscriber)
        return backlog, subscriber

    def unsubscribe(self, subscriber: Subscriber) -> None:
        with self.lock:
            if subscriber in self._subscribers:
                self._subscribers.remove(subscriber)

    def _publish(self, events: list[SimEvent], expressions: dict) -> None:
        dead = []
        for subscriber in self._subscribers:
            try:
                for event in events:
                    subscriber.queue.put_nowait(event)
                subscriber.queue.put_nowait(expressions)
            except queue.Full:
                subscriber.dropped = True  # slow consumer; client resubscribes
                dead.append(subscriber)
        for subscriber in dead:
            self._subscribers.remove(subscriber)

    def _broadcast_marker(self, marker: dict) -> None:
        with self.lock:
            for subscriber in self._subscribers:
                try:
                    subscriber.queue.put_nowait(marker)
                except queue.Full:
                    pass

    def _expressions_frame(self) -> dict:
        return {
            "type": "expressions",
            "tick": self.state.tick,
            "agents": {
                agent_id: EXPRESSIONS[self.state.roster.state(agent_id).mode]
                for agent_id in self.state.sorted_ids()
            },
        }

    # -- queries and controls ------------------------------------------------

    def set_mode(self, mode: str) -> str:
        if mode not in MODES:
            raise PreconditionError(f"mode must be one of {MODES}")
        self.mode = mode
        logger.info("view mode set to %s", mode)  # administrative marker, not a SimEvent
        self._broadcast_marker({"type": "mode_changed", "mode": mode})
        return mode

    def snapshot_view(self) -> dict:
        with self.lock:
            state = self.state
            agents = []
            for agent_id in state.sorted_ids():
                profile = state.roster.profile(agent_id)
                live = state.roster.state(agent_id)
                agents.append(
                    {
                        "id": agent_id,
                        "name": profile.name,
                        "occupation": profile.occupation,
                        "primary": agent_id == state.roster.primary_id,
                        "x": live.position.x,
                        "y": live.position.y,
                        "mode": live.mode,
                        "activity": live.current_activity,
                        "expression": EXPRESSIONS[live.mode],
                        "conversation": live.conversation_ref,
                    }
                )
            conversations = [
                {
                    "id": conv.id,
                    "participants": list(conv.participants),
                    "turns": len(conv.turns),
                }
                for conv in state.conversations.values()
            ]
            world = state.world
            return {
                "tick": state.tick,
                "seq": state.next_seq - 1,
                "mode": self.mode,
                "map": {
                    "width": world.width,
                    "height": world.height,
                    "rows": [
                        "".join("." if world.walkable[y][x] else "#" for x in range(world.width))
                        for y in range(world.height)
                    ],
                    "scenes": [
                        {
                            "id": scene.id,
                            "category": scene.category,
                            "label": scene.label,
                            "tiles": [[p.x, p.y] for p in sorted(scene.tiles, key=lambda p: (p.y, p.x))],
                        }
                        for scene in world.scenes
                    ],
                },
                "agents": agents,
                "conversations": conversations,
            }

    def save(self, path: str) -> None:
        with self.lock:
            save_snapshot(self.state, path)

    def load(self, path: str) -> None:
        with self.lock:
            self.state = load_snapshot(path)
            self.log = []  # new epoch: stream cursors restart at the snapshot seq


def create_app(engine: Engine | None, provider: Provider | None = None) -> FastAPI:
    app = FastAPI(title="lifespace")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.engine = engine
    sessions: dict[str, chat.ChatSession] = {}
    app.state.sessions = sessions

    class EngineNotStarted(Exception):
        pass

    def current_engine() -> Engine:
        if app.state.engine is None:
            raise EngineNotStarted()
        return app.state.engine

    @app.exception_handler(EngineNotStarted)
    async def _not_started(request, exc):
        return JSONResponse(status_code=503, content={"error": "engine not started"})

    @app.exception_handler(LifespaceError)
    async def _domain_error(request, exc):
        status = 400
        if isinstance(exc, UnknownAgentError):
            status = 404
        elif isinstance(exc, ClosedSessionError):
            status = 409
        elif isinstance(exc, ProviderUnavailableError):
            status = 503
        elif isinstance(exc, CorruptSnapshotError):
            status = 400
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.get("/v1/state")
    def get_state():
        return current_engine().snapshot_view()

    @app.post("/v1/mode")
    def set_mode(body: dict):
        mode = current_engine().set_mode(body.get("mode", ""))
        return {"mode": mode}

    @app.post("/v1/sessions")
    def open_session(body: dict):
        engine_ = current_engine()
        with engine_.lock:
            session = chat.open_session(engine_.state, body.get("agent", ""))
        sessions[session.id] = session
        return {"session": session.id, "agent": session.agent_ref}

    @app.post("/v1/sessions/{session_id}/messages")
    def send_message(session_id: str, body: dict):
        engine_ = current_engine()
        session = sessions.get(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": f"no session {session_id}"})
        reply, acted = chat.user_message(
            session, body.get("text", ""), engine_.state, engine_.provider, lock=engine_.lock
        )
        return {"reply": reply, "acted": acted}

    @app.delete("/v1/sessions/{session_id}")
    def close_session(session_id: str):
        session = sessions.get(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": f"no session {session_id}"})
        chat.close_session(session)
        return {"session": session_id, "open": False}

    @app.post("/v1/snapshot")
    def save_snapshot_endpoint(body: dict):
        current_engine().save(body["path"])
        return {"saved": body["path"]}

    @app.post("/v1/snapshot/load")
    def load_snapshot_endpoint(body: dict):
        engine_ = current_engine()
        engine_.load(body["path"])
        return {"loaded": body["path"], "tick": engine_.state.tick}

    @app.websocket("/v1/events")
    async def events(ws: WebSocket):
        await ws.accept()
        engine_ = app.state.engine
        if engine_ is None:
            await ws.close(code=1011)
            return
        try:
            since = int(ws.query_params.get("since", "0"))
        except ValueError:
            await ws.close(code=1008)
            return
        backlog, subscriber = engine_.subscribe(since)
        try:
            for event in backlog:
                await ws.send_text(json.dumps(envelope(event, engine_.mode), sort_keys=True))
            while True:
                try:
                    item = await anyio.to_thread.run_sync(
                        functools.partial(subscriber.queue.get, timeout=0.25)
                    )
                except queue.Empty:
                    if subscriber.dropped:
                        break  # backpressure drop; client resubscribes from last seq
                    continue
                if isinstance(item, SimEvent):
                    payload = envelope(item, engine_.mode)
                else:
                    payload = item  # expressions frame or mode marker
                await ws.send_text(json.dumps(payload, sort_keys=True))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            engine_.unsubscribe(subscriber)

    return app
