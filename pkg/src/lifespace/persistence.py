"""Event-log files, snapshots, and replay verification.

Log format (JSON Lines, UTF-8): a header object carrying the full run
recipe (config, map text, roster), one object per SimEvent with fields
{seq, tick, type, agent|agents, data}, and a trailer carrying the final
state digest. A log is therefore self-contained: the header rebuilds the
initial state, folding the events reproduces the final one, and the
trailer proves it.

Snapshots persist a quiescent SimState between ticks so a long-running
deployment can resume across process restarts with seq continuity.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict
from pathlib import Path as FsPath

from .agents import AgentProfile, AgentState, Roster
from .cognition import DialogueTurn, PlanDecision
from .errors import CorruptLogError, CorruptSnapshotError
from .memory import KIND_TO_TRACK, TRACKS, LongTermSummary, MemoryEvent, MemoryStore
from .simulation import (
    Conversation,
    ExchangeCommand,
    ReplanCommand,
    SimConfig,
    SimEvent,
    SimState,
    canonical_state,
    new_state,
    replay_events,
    state_digest,
)
from .world import Path, Position, load_map, serialize_map

FORMAT_VERSION = 1


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def roster_to_json(roster: Roster) -> dict:
    return {
        "primary": roster.primary_id,
        "profiles": [asdict(profile) for profile, _ in roster.agents],
    }


def config_to_json(config: SimConfig) -> dict:
    return asdict(config)


def config_from_json(doc: dict) -> SimConfig:
    return SimConfig(**doc)


# --- event log ---------------------------------------------------------------


def write_event_log(path: str, state: SimState, events: list[SimEvent]) -> None:
    """Write header + events + digest trailer for a finished run."""
    lines = [
        _dump(
            {
                "header": {
                    "version": FORMAT_VERSION,
                    "config": config_to_json(state.config),
                    "map": serialize_map(state.world),
                    "roster": roster_to_json(state.roster),
                }
            }
        )
    ]
    lines.extend(_dump(event.to_wire()) for event in events)
    lines.append(
        _dump(
            {
                "trailer": {
                    "digest": state_digest(state),
                    "final_tick": state.tick,
                    "events": len(events),
                }
            }
        )
    )
    FsPath(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_event_log(path: str) -> tuple[dict, list[SimEvent], dict]:
    """Parse a log file; raises CorruptLogError with the offending line number."""
    try:
        text = FsPath(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CorruptLogError(f"cannot read log: {exc}") from None
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise CorruptLogError("log file is empty")
    parsed = []
    for number, line in enumerate(lines, start=1):
        try:
            parsed.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise CorruptLogError(f"line {number}: invalid JSON ({exc.msg})") from None
    if "header" not in parsed[0]:
        raise CorruptLogError("line 1: missing header object")
    if "trailer" not in parsed[-1]:
        raise CorruptLogError(f"line {len(lines)}: missing trailer object")
    events = []
    for number, obj in enumerate(parsed[1:-1], start=2):
        try:
            events.append(SimEvent.from_wire(obj))
        except (KeyError, TypeError) as exc:
            raise CorruptLogError(f"line {number}: malformed event ({exc})") from None
    return parsed[0]["header"], events, parsed[-1]["trailer"]


def initial_state_from_header(header: dict) -> SimState:
    from .agents import build_roster

    try:
        config = config_from_json(header["config"])
        world = load_map(header["map"])
        profiles = [AgentProfile(**p) for p in header["roster"]["profiles"]]
        roster = build_roster(profiles, world, primary_id=header["roster"]["primary"])
    except (KeyError, TypeError) as exc:
        raise CorruptLogError(f"header is incomplete: {exc}") from None
    return new_state(world, roster, config)


class ReplayReport:
    def __init__(self, ok: bool, message: str, divergent_seq: int | None = None,
                 events: int = 0, final_tick: int = 0) -> None:
        self.ok = ok
        self.message = message
        self.divergent_seq = divergent_seq
        self.events = events
        self.final_tick = final_tick


def verify_log(path: str) -> ReplayReport:
    """Re-derive the final state from the log and compare digests.

    Seq numbers must be contiguous from 1; the first gap is reported as the
    first divergent seq (a deleted or inserted line).
    """
    header, events, trailer = read_event_log(path)
    expected_seq = 1
    for event in events:
        if event.seq != expected_seq:
            return ReplayReport(
                ok=False,
                message=f"seq gap: expected {expected_seq}, found {event.seq}",
                divergent_seq=expected_seq,
                events=len(events),
                final_tick=trailer.get("final_tick", 0),
            )
        expected_seq += 1
    state = initial_state_from_header(header)
    try:
        replay_events(state, events, trailer["final_tick"])
    except Exception as exc:  # noqa: BLE001 - any replay failure means a bad log
        return ReplayReport(
            ok=False,
            message=f"replay failed: {exc}",
            events=len(events),
            final_tick=trailer.get("final_tick", 0),
        )
    derived = state_digest(state)
    if derived != trailer["digest"]:
        return ReplayReport(
            ok=False,
            message=f"digest mismatch: derived {derived[:12]}.. vs recorded {trailer['digest'][:12]}..",
            events=len(events),
            final_tick=trailer["final_tick"],
        )
    return ReplayReport(
        ok=True,
        message="digest match",
        events=len(events),
        final_tick=trailer["final_tick"],
    )


# --- snapshots ---------------------------------------------------------------


def _inbox_to_json(state: SimState) -> list[dict]:
    out = []
    for command in state.inbox:
        if isinstance(command, ExchangeCommand):
            out.append({"kind": "exchange", "agent": command.agent, "text": command.text})
        else:
            out.append(
                {
                    "kind": "replan",
                    "agent": command.agent,
                    "scene": command.decision.destination_scene,
                    "activity": command.decision.activity,
                    "rationale": command.decision.rationale,
                }
            )
    return out


def save_snapshot(state: SimState, path: str) -> None:
    doc = {
        "version": FORMAT_VERSION,
        "config": config_to_json(state.config),
        "map": serialize_map(state.world),
        "roster": roster_to_json(state.roster),
        "state": canonical_state(state),
        "inbox": _inbox_to_json(state),
        "digest": state_digest(state),
    }
    FsPath(path).write_text(_dump(doc) + "\n", encoding="utf-8")


def load_snapshot(path: str) -> SimState:
    """Rebuild a SimState; digest is re-derived and must match the file's."""
    try:
        doc = json.loads(FsPath(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CorruptSnapshotError(f"cannot read snapshot: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CorruptSnapshotError(f"snapshot is not valid JSON ({exc.msg})") from None
    try:
        state = _rebuild(doc)
    except (KeyError, TypeError, ValueError) as exc:
        field = exc.args[0] if isinstance(exc, KeyError) else exc
        raise CorruptSnapshotError(f"snapshot field invalid or missing: {field}") from None
    derived = state_digest(state)
    if derived != doc["digest"]:
        raise CorruptSnapshotError(
            f"snapshot field invalid or missing: digest (recorded {doc['digest'][:12]}.., "
            f"derived {derived[:12]}..)"
        )
    return state


def _rebuild(doc: dict) -> SimState:
    from .agents import build_roster

    config = config_from_json(doc["config"])
    world = load_map(doc["map"])
    profiles = [AgentProfile(**p) for p in doc["roster"]["profiles"]]
    roster = build_roster(profiles, world, primary_id=doc["roster"]["primary"])
    state = new_state(world, roster, config)

    body = doc["state"]
    state.tick = body["tick"]
    state.next_seq = body["next_seq"]
    state.next_conversation = body["next_conversation"]

    for entry in body["agents"]:
        agent: AgentState = state.roster.state(entry["id"])
        agent.position = Position(entry["x"], entry["y"])
        agent.mode = entry["mode"]
        agent.current_activity = entry["activity"]
        agent.activity_remaining = entry["activity_remaining"]
        agent.conversation_cooldown = entry["cooldown"]
        agent.conversation_ref = entry["conversation"]
        steps = tuple(Position(x, y) for x, y in entry["path"])
        agent.current_path = Path(steps) if steps else None
        agent.path_cursor = 0
        if entry["planned_scene"] is not None:
            state.planned_scene[entry["id"]] = entry["planned_scene"]
        if entry["planned_activity"] is not None:
            state.planned_activity[entry["id"]] = entry["planned_activity"]

    for entry in body["conversations"]:
        conversation = Conversation(
            id=entry["id"],
            participants=(entry["participants"][0], entry["participants"][1]),
            turns=[DialogueTurn(speaker=s, text=t, terminate=term)
                   for s, t, term in entry["turns"]],
        )
        state.conversations[conversation.id] = conversation

    for agent_id, stored in body["memories"].items():
        store: MemoryStore = state.memories[agent_id]
        store.next_seq = {track: stored["next_seq"][track] for track in TRACKS}
        for track in TRACKS:
            store.short_term[track] = [
                MemoryEvent(seq=seq, tick=tick, track=KIND_TO_TRACK[kind], kind=kind,
                            text=text, participants=tuple(participants))
                for seq, tick, kind, text, participants in stored["short_term"][track]
            ]
            store.long_term[track] = [
                LongTermSummary(seq_range=(first, last), track=track, text=text)
                for first, last, text in stored["long_term"][track]
            ]

    rng_version, rng_internal, rng_gauss = body["rng"]
    rng = random.Random()
    rng.setstate((rng_version, tuple(rng_internal), rng_gauss))
    state.rng = rng

    for entry in doc["inbox"]:
        if entry["kind"] == "exchange":
            state.inbox.append(ExchangeCommand(agent=entry["agent"], text=entry["text"]))
        else:
            state.inbox.append(
                ReplanCommand(
                    agent=entry["agent"],
                    decision=PlanDecision(entry["scene"], entry["activity"], entry["rationale"]),
                )
            )
    return state
