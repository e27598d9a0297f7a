"""The cyclic life-space pipeline and its replayable event stream.

Each tick runs four stages over agents sorted by id:

1. planning — idle agents choose a destination scene and activity, get a
   path to the scene anchor, and start walking;
2. path execution — moving agents advance one tile; on arrival they enter
   their planned activity for a fixed number of ticks;
3. social trigger — eligible agents (not conversing, cooldown expired)
   within the proximity radius are greedily paired into conversations;
   every open conversation advances one turn per tick and closes on a
   terminating turn, writing one dialogue memory per participant;
4. memory update — queued user exchanges commit, every tick event is
   folded into the owner's memory store, and full buffers compress.

External inputs (user exchanges, replans) land on an inbox drained at the
start of the next tick, so replans take visible effect — planned event and
first step — within that same tick.

Everything observable is emitted as a SimEvent with a global sequence
number. The stream is the rendering feed, the persistence format and the
replay contract: folding the events (plus the per-tick cooldown/activity
decay, which is deterministic) over the initial state reproduces the final
state digest exactly.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
from dataclasses import dataclass, field

from . import memory as mem
from .agents import Roster, advance_one_step, set_activity, start_moving
from .cognition import (
    DEFAULT_MAX_TURNS,
    DialogueTurn,
    PlanDecision,
    Provider,
    next_dialogue_turn,
    plan_next,
    summarize_events,
)
from .errors import (
    InvalidSceneError,
    PreconditionError,
    ProviderUnavailableError,
    TrackMismatchError,
    UnknownAgentError,
)
from .memory import MemoryEvent, MemoryStore, assemble_context, draft_event, record_event
from .world import Position, WorldMap, find_path, scene_anchor

EVENT_TYPES = (
    "planned",
    "moved",
    "arrived",
    "activity_started",
    "conversation_started",
    "dialogue_turn",
    "conversation_ended",
    "memory_compressed",
    "user_exchange",
    "plan_repaired",
)


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    tick_ms: int = 0
    proximity_radius: int = 2
    conversation_cooldown: int = 20
    activity_duration: int = 15
    memory_threshold: int = 10
    max_turns: int = DEFAULT_MAX_TURNS

    def __post_init__(self) -> None:
        if self.proximity_radius < 1:
            raise PreconditionError("proximity_radius must be >= 1")
        if self.conversation_cooldown < 0:
            raise PreconditionError("conversation_cooldown must be >= 0")
        if self.activity_duration < 1:
            raise PreconditionError("activity_duration must be >= 1")
        if self.memory_threshold < 1:
            raise PreconditionError("memory_threshold must be >= 1")
        if self.max_turns < 2:
            raise PreconditionError("max_turns must be >= 2")


@dataclass
class Conversation:
    id: str
    participants: tuple[str, str]  # initiator first; turns alternate from there
    turns: list[DialogueTurn] = field(default_factory=list)
    open: bool = True

    def next_speaker(self) -> str:
        return self.participants[len(self.turns) % 2]

    def partner_of(self, agent_id: str) -> str:
        a, b = self.participants
        return b if agent_id == a else a


@dataclass(frozen=True)
class SimEvent:
    seq: int
    tick: int
    type: str
    agent: str | None = None
    agents: tuple[str, ...] | None = None
    data: dict = field(default_factory=dict)

    def to_wire(self) -> dict:
        wire: dict = {"seq": self.seq, "tick": self.tick, "type": self.type}
        if self.agents is not None:
            wire["agents"] = list(self.agents)
        else:
            wire["agent"] = self.agent
        wire["data"] = self.data
        return wire

    @classmethod
    def from_wire(cls, wire: dict) -> "SimEvent":
        agents = wire.get("agents")
        return cls(
            seq=wire["seq"],
            tick=wire["tick"],
            type=wire["type"],
            agent=wire.get("agent"),
            agents=tuple(agents) if agents is not None else None,
            data=wire.get("data", {}),
        )


@dataclass(frozen=True)
class ExchangeCommand:
    agent: str
    text: str


@dataclass(frozen=True)
class ReplanCommand:
    agent: str
    decision: PlanDecision


@dataclass
class SimState:
    config: SimConfig
    world: WorldMap
    roster: Roster
    memories: dict[str, MemoryStore]
    conversations: dict[str, Conversation] = field(default_factory=dict)
    tick: int = 0
    next_seq: int = 1
    next_conversation: int = 1
    rng: random.Random = field(default_factory=random.Random)
    inbox: list = field(default_factory=list)
    # Destination/activity chosen at plan time, consumed on arrival.
    planned_scene: dict[str, str] = field(default_factory=dict)
    planned_activity: dict[str, str] = field(default_factory=dict)

    def sorted_ids(self) -> list[str]:
        return sorted(self.roster.ids())

    def context_for(self, agent_id: str) -> mem.ContextBundle:
        return assemble_context(self.memories[agent_id])


def new_state(world: WorldMap, roster: Roster, config: SimConfig) -> SimState:
    memories = {
        agent_id: MemoryStore(agent_ref=agent_id, threshold=config.memory_threshold)
        for agent_id in roster.ids()
    }
    rng = random.Random(config.seed)
    return SimState(config=config, world=world, roster=roster, memories=memories, rng=rng)


# --- external inputs --------------------------------------------------------


def inject_user_exchange(state: SimState, agent_id: str, exchange: MemoryEvent) -> SimState:
    """Queue a user-agent exchange; it commits at the next tick's memory stage."""
    if not state.roster.has(agent_id):
        raise UnknownAgentError(f"no agent '{agent_id}' in the roster")
    if exchange.track != mem.INTERACTION or exchange.kind != "user_exchange":
        raise TrackMismatchError(
            f"user exchanges must be interaction-track user_exchange events, "
            f"got {exchange.track}/{exchange.kind}"
        )
    if not exchange.text:
        raise PreconditionError("exchange text must be non-empty")
    state.inbox.append(ExchangeCommand(agent=agent_id, text=exchange.text))
    return state


def request_replan(state: SimState, agent_id: str, decision: PlanDecision) -> SimState:
    """Queue a user-influenced replan; it preempts the agent at the next tick."""
    if not state.roster.has(agent_id):
        raise UnknownAgentError(f"no agent '{agent_id}' in the roster")
    if decision.destination_scene not in state.world.scene_ids():
        raise InvalidSceneError(f"no scene '{decision.destination_scene}' in the map")
    if not decision.activity:
        raise PreconditionError("replan needs a non-empty activity")
    state.inbox.append(ReplanCommand(agent=agent_id, decision=decision))
    return state


# --- the tick pipeline ------------------------------------------------------


class _Emitter:
    def __init__(self, state: SimState) -> None:
        self.state = state
        self.events: list[SimEvent] = []

    def emit(self, type_: str, agent: str | None = None, agents: tuple[str, str] | None = None,
             **data) -> SimEvent:
        event = SimEvent(
            seq=self.state.next_seq,
            tick=self.state.tick,
            type=type_,
            agent=agent,
            agents=agents,
            data=data,
        )
        self.state.next_seq += 1
        self.events.append(event)
        return event


def tick(state: SimState, provider: Provider) -> tuple[SimState, list[SimEvent]]:
    """Run one full pipeline iteration; always completes even on provider failure."""
    state.tick += 1
    out = _Emitter(state)

    # Drain the inbox: replans apply now, exchanges commit at stage 4.
    commands, state.inbox = state.inbox, []
    exchanges: list[ExchangeCommand] = []
    for command in commands:
        if isinstance(command, ExchangeCommand):
            exchanges.append(command)
        else:
            _apply_replan(state, command, out)

    # Stage 1: behavior planning for idle agents.
    for agent_id in state.sorted_ids():
        agent = state.roster.state(agent_id)
        if agent.mode != "idle":
            continue
        profile = state.roster.profile(agent_id)
        repairs: list[tuple[str, str]] = []
        try:
            decision = plan_next(
                provider,
                profile,
                state.context_for(agent_id),
                state.world,
                on_repair=lambda bad, fixed: repairs.append((bad, fixed)),
            )
        except ProviderUnavailableError:
            continue  # idle this tick, retry next
        for bad, fixed in repairs:
            out.emit("plan_repaired", agent=agent_id, from_scene=bad, to_scene=fixed)
        _begin_journey(state, agent_id, decision, user=False, out=out)

    # Stage 2: path execution.
    for agent_id in state.sorted_ids():
        agent = state.roster.state(agent_id)
        if agent.mode != "moving":
            continue
        origin = agent.position
        _, arrived = advance_one_step(agent)
        out.emit(
            "moved",
            agent=agent_id,
            origin=[origin.x, origin.y],
            to=[agent.position.x, agent.position.y],
        )
        if arrived:
            _arrive(state, agent_id, out)

    # Stage 3: social triggers, then one turn for every open conversation.
    for a, b in _eligible_pairs(state):
        _start_conversation(state, a, b, out)
    for conv_id in sorted(state.conversations):
        conversation = state.conversations.get(conv_id)
        if conversation is None or not conversation.open:
            continue
        _advance_conversation(state, conversation, provider, out)

    # Stage 4: memory update — commit exchanges, fold events, compress.
    for command in exchanges:
        out.emit("user_exchange", agent=command.agent, text=command.text)
    for event in out.events:
        for owner, draft in memory_effects(event, state.roster, state.world):
            record_event(state.memories[owner], draft)
    for agent_id in state.sorted_ids():
        store = state.memories[agent_id]
        before = {track: len(store.long_term[track]) for track in mem.TRACKS}
        try:
            mem.maybe_compress(store, lambda batch: summarize_events(provider, batch))
        except ProviderUnavailableError:
            continue  # buffers intact; retried next tick
        for track in mem.TRACKS:
            for summary in store.long_term[track][before[track]:]:
                out.emit(
                    "memory_compressed",
                    agent=agent_id,
                    track=track,
                    count=summary.span(),
                    first_seq=summary.seq_range[0],
                    last_seq=summary.seq_range[1],
                    summary=summary.text,
                )

    decay(state)
    return state, out.events


def run(state: SimState, provider: Provider, n_ticks: int) -> tuple[SimState, list[SimEvent]]:
    """n_ticks sequential ticks; sleeps tick_ms between ticks when configured."""
    if n_ticks < 0:
        raise PreconditionError("n_ticks must be >= 0")
    log: list[SimEvent] = []
    for _ in range(n_ticks):
        _, events = tick(state, provider)
        log.extend(events)
        if state.config.tick_ms > 0:
            time.sleep(state.config.tick_ms / 1000.0)
    return state, log


def decay(state: SimState) -> None:
    """End-of-tick countdowns: activity progress and conversation cooldowns.

    Shared with replay, which cannot observe these transitions as events.
    """
    for agent_id in state.sorted_ids():
        agent = state.roster.state(agent_id)
        if agent.mode == "acting":
            agent.activity_remaining -= 1
            if agent.activity_remaining <= 0:
                agent.mode = "idle"
                agent.current_activity = None
                agent.activity_remaining = 0
        if agent.conversation_cooldown > 0:
            agent.conversation_cooldown -= 1


def _begin_journey(state: SimState, agent_id: str, decision: PlanDecision, user: bool,
                   out: _Emitter) -> None:
    agent = state.roster.state(agent_id)
    anchor = scene_anchor(state.world, decision.destination_scene)
    path = find_path(state.world, agent.position, anchor)
    state.planned_scene[agent_id] = decision.destination_scene
    state.planned_activity[agent_id] = decision.activity
    out.emit(
        "planned",
        agent=agent_id,
        scene=decision.destination_scene,
        activity=decision.activity,
        rationale=decision.rationale,
        user=user,
        steps=len(path),
    )
    if len(path) == 0:
        _arrive(state, agent_id, out)
    else:
        start_moving(agent, path)


def _arrive(state: SimState, agent_id: str, out: _Emitter) -> None:
    agent = state.roster.state(agent_id)
    scene = state.planned_scene.pop(agent_id)
    activity = state.planned_activity.pop(agent_id)
    out.emit("arrived", agent=agent_id, scene=scene, x=agent.position.x, y=agent.position.y)
    set_activity(agent, activity)
    agent.activity_remaining = state.config.activity_duration
    out.emit("activity_started", agent=agent_id, activity=activity, scene=scene)


def _apply_replan(state: SimState, command: ReplanCommand, out: _Emitter) -> None:
    agent = state.roster.state(command.agent)
    if agent.mode == "conversing":
        conversation = state.conversations[agent.conversation_ref]
        _close_conversation(state, conversation, out, force=True)
    if agent.mode == "moving":
        agent.mode = "idle"
        agent.current_path = None
        agent.path_cursor = 0
    elif agent.mode == "acting":
        agent.mode = "idle"
        agent.current_activity = None
        agent.activity_remaining = 0
    state.planned_scene.pop(command.agent, None)
    state.planned_activity.pop(command.agent, None)
    _begin_journey(state, command.agent, command.decision, user=True, out=out)


def _eligible_pairs(state: SimState) -> list[tuple[str, str]]:
    """Greedy proximity matching: candidate pairs sorted by (distance,
    smaller id, larger id); each agent joins at most one conversation per
    tick; the smaller id becomes the initiator."""
    eligible = [
        agent_id
        for agent_id in state.sorted_ids()
        if state.roster.state(agent_id).mode != "conversing"
        and state.roster.state(agent_id).conversation_cooldown == 0
    ]
    candidates: list[tuple[int, str, str]] = []
    for i, a in enumerate(eligible):
        pos_a = state.roster.state(a).position
        for b in eligible[i + 1:]:
            distance = pos_a.manhattan(state.roster.state(b).position)
            if distance <= state.config.proximity_radius:
                candidates.append((distance, a, b))
    candidates.sort()
    matched: set[str] = set()
    pairs: list[tuple[str, str]] = []
    for _, a, b in candidates:
        if a in matched or b in matched:
            continue
        matched.add(a)
        matched.add(b)
        pairs.append((a, b))
    return pairs


def _start_conversation(state: SimState, initiator: str, partner: str, out: _Emitter) -> None:
    conv_id = f"conv-{state.next_conversation:06d}"
    state.next_conversation += 1
    conversation = Conversation(id=conv_id, participants=(initiator, partner))
    state.conversations[conv_id] = conversation
    for agent_id in (initiator, partner):
        agent = state.roster.state(agent_id)
        agent.mode = "conversing"
        agent.conversation_ref = conv_id
        agent.current_path = None
        agent.path_cursor = 0
        agent.current_activity = None
        agent.activity_remaining = 0
        state.planned_scene.pop(agent_id, None)
        state.planned_activity.pop(agent_id, None)
    out.emit(
        "conversation_started",
        agents=(initiator, partner),
        conversation=conv_id,
        initiator=initiator,
    )


def _advance_conversation(state: SimState, conversation: Conversation, provider: Provider,
                          out: _Emitter) -> None:
    speaker_id = conversation.next_speaker()
    partner_id = conversation.partner_of(speaker_id)
    turn = next_dialogue_turn(
        provider,
        conversation.turns,
        state.roster.profile(speaker_id),
        state.roster.profile(partner_id),
        state.context_for(speaker_id),
        state.context_for(partner_id),
        max_turns=state.config.max_turns,
    )
    conversation.turns.append(turn)
    out.emit(
        "dialogue_turn",
        agent=speaker_id,
        conversation=conversation.id,
        text=turn.text,
        terminate=turn.terminate,
    )
    if turn.terminate:
        _close_conversation(state, conversation, out, force=False)


def _close_conversation(state: SimState, conversation: Conversation, out: _Emitter,
                        force: bool) -> None:
    if force:
        speaker_id = conversation.next_speaker()
        turn = DialogueTurn(speaker=speaker_id, text="", terminate=True)
        conversation.turns.append(turn)
        out.emit(
            "dialogue_turn",
            agent=speaker_id,
            conversation=conversation.id,
            text="",
            terminate=True,
        )
    transcript = _transcript(state.roster, conversation)
    conversation.open = False
    del state.conversations[conversation.id]
    for agent_id in conversation.participants:
        agent = state.roster.state(agent_id)
        agent.mode = "idle"
        agent.conversation_ref = None
        agent.conversation_cooldown = state.config.conversation_cooldown
    out.emit(
        "conversation_ended",
        agents=conversation.participants,
        conversation=conversation.id,
        turns=len(conversation.turns),
        dialogue=transcript,
    )


def _transcript(roster: Roster, conversation: Conversation) -> str:
    lines = [
        f"{roster.profile(turn.speaker).name}: {turn.text}"
        for turn in conversation.turns
        if turn.text
    ]
    return " / ".join(lines)


# --- memory derivation (shared between live ticks and replay) ---------------


def memory_effects(event: SimEvent, roster: Roster, world: WorldMap) -> list[tuple[str, MemoryEvent]]:
    """Memory drafts implied by a sim event: (owner agent id, draft) pairs.

    This is the single place event payloads turn into memory text, so a
    replayed log rebuilds byte-identical stores.
    """
    effects: list[tuple[str, MemoryEvent]] = []
    if event.type == "planned" and event.data["steps"] > 0:
        name = roster.profile(event.agent).name
        label = world.scene(event.data["scene"]).label
        effects.append(
            (event.agent, draft_event("movement", f"{name} set off for the {label}.",
                                      (event.agent,), event.tick))
        )
    elif event.type == "arrived":
        name = roster.profile(event.agent).name
        label = world.scene(event.data["scene"]).label
        effects.append(
            (event.agent, draft_event("arrival", f"{name} arrived at the {label}.",
                                      (event.agent,), event.tick))
        )
    elif event.type == "activity_started":
        name = roster.profile(event.agent).name
        label = world.scene(event.data["scene"]).label
        text = f"{name} started {event.data['activity']} at the {label}."
        effects.append((event.agent, draft_event("activity", text, (event.agent,), event.tick)))
    elif event.type == "conversation_ended":
        dialogue = event.data["dialogue"]
        a, b = event.agents
        for me, other in ((a, b), (b, a)):
            text = (
                f"{roster.profile(me).name} had a conversation with "
                f"{roster.profile(other).name}: {dialogue}"
            )
            effects.append((me, draft_event("agent_dialogue", text, (me, other), event.tick)))
    elif event.type == "user_exchange":
        effects.append(
            (event.agent, draft_event("user_exchange", event.data["text"],
                                      (event.agent,), event.tick))
        )
    return effects


# --- replay -----------------------------------------------------------------


def replay_events(state: SimState, events: list[SimEvent], final_tick: int) -> SimState:
    """Fold a recorded event stream over a fresh initial state.

    Events carry every generated text (plans, turns, summaries), so no
    provider is needed; paths are recomputed with the same pure
    pathfinding the live run used.
    """
    by_tick: dict[int, list[SimEvent]] = {}
    for event in events:
        by_tick.setdefault(event.tick, []).append(event)
    for tick_no in range(state.tick + 1, final_tick + 1):
        state.tick = tick_no
        for event in by_tick.get(tick_no, ()):
            _apply_event(state, event)
        decay(state)
    return state


def _apply_event(state: SimState, event: SimEvent) -> None:
    state.next_seq = event.seq + 1
    agent = state.roster.state(event.agent) if event.agent else None

    if event.type == "planned":
        if agent.mode == "conversing":
            raise PreconditionError(f"log shows plan for conversing agent at seq {event.seq}")
        agent.mode = "idle"
        agent.current_path = None
        agent.path_cursor = 0
        agent.current_activity = None
        agent.activity_remaining = 0
        state.planned_scene[event.agent] = event.data["scene"]
        state.planned_activity[event.agent] = event.data["activity"]
        anchor = scene_anchor(state.world, event.data["scene"])
        path = find_path(state.world, agent.position, anchor)
        if len(path) > 0:
            start_moving(agent, path)
    elif event.type == "moved":
        to = event.data["to"]
        agent.position = Position(to[0], to[1])
        if agent.current_path is not None:
            agent.path_cursor += 1
            if agent.path_cursor >= len(agent.current_path):
                agent.mode = "idle"
                agent.current_path = None
                agent.path_cursor = 0
    elif event.type == "arrived":
        state.planned_scene.pop(event.agent, None)
        state.planned_activity.pop(event.agent, None)
        agent.position = Position(event.data["x"], event.data["y"])
    elif event.type == "activity_started":
        set_activity(agent, event.data["activity"])
        agent.activity_remaining = state.config.activity_duration
    elif event.type == "conversation_started":
        conv_id = event.data["conversation"]
        participants = (event.agents[0], event.agents[1])
        state.conversations[conv_id] = Conversation(id=conv_id, participants=participants)
        state.next_conversation = max(state.next_conversation, int(conv_id.split("-")[1]) + 1)
        for agent_id in participants:
            member = state.roster.state(agent_id)
            member.mode = "conversing"
            member.conversation_ref = conv_id
            member.current_path = None
            member.path_cursor = 0
            member.current_activity = None
            member.activity_remaining = 0
            state.planned_scene.pop(agent_id, None)
            state.planned_activity.pop(agent_id, None)
    elif event.type == "dialogue_turn":
        conversation = state.conversations[event.data["conversation"]]
        conversation.turns.append(
            DialogueTurn(speaker=event.agent, text=event.data["text"],
                         terminate=event.data["terminate"])
        )
    elif event.type == "conversation_ended":
        conversation = state.conversations.pop(event.data["conversation"])
        conversation.open = False
        for agent_id in conversation.participants:
            member = state.roster.state(agent_id)
            member.mode = "idle"
            member.conversation_ref = None
            member.conversation_cooldown = state.config.conversation_cooldown
    elif event.type == "memory_compressed":
        store = state.memories[event.agent]
        track = event.data["track"]
        del store.short_term[track][: event.data["count"]]
        store.long_term[track].append(
            mem.LongTermSummary(
                seq_range=(event.data["first_seq"], event.data["last_seq"]),
                track=track,
                text=event.data["summary"],
            )
        )
    elif event.type in ("user_exchange", "plan_repaired"):
        pass  # no direct state effect; user_exchange contributes via memory_effects
    else:
        raise PreconditionError(f"unknown event type '{event.type}' at seq {event.seq}")

    if event.type != "memory_compressed":
        for owner, draft in memory_effects(event, state.roster, state.world):
            record_event(state.memories[owner], draft)


# --- canonical state and digest ---------------------------------------------


def canonical_state(state: SimState) -> dict:
    agents = []
    for agent_id in state.sorted_ids():
        agent = state.roster.state(agent_id)
        remaining = (
            [[p.x, p.y] for p in agent.current_path.steps[agent.path_cursor:]]
            if agent.current_path is not None
            else []
        )
        agents.append(
            {
                "id": agent_id,
                "x": agent.position.x,
                "y": agent.position.y,
                "mode": agent.mode,
                "activity": agent.current_activity,
                "activity_remaining": agent.activity_remaining,
                "cooldown": agent.conversation_cooldown,
                "conversation": agent.conversation_ref,
                "path": remaining,
                "planned_scene": state.planned_scene.get(agent_id),
                "planned_activity": state.planned_activity.get(agent_id),
            }
        )
    conversations = []
    for conv_id in sorted(state.conversations):
        conversation = state.conversations[conv_id]
        conversations.append(
            {
                "id": conv_id,
                "participants": list(conversation.participants),
                "turns": [[t.speaker, t.text, t.terminate] for t in conversation.turns],
            }
        )
    memories = {}
    for agent_id in state.sorted_ids():
        store = state.memories[agent_id]
        memories[agent_id] = {
            "next_seq": dict(store.next_seq),
            "short_term": {
                track: [
                    [e.seq, e.tick, e.kind, e.text, list(e.participants)]
                    for e in store.short_term[track]
                ]
                for track in mem.TRACKS
            },
            "long_term": {
                track: [[s.seq_range[0], s.seq_range[1], s.text] for s in store.long_term[track]]
                for track in mem.TRACKS
            },
        }
    rng_version, rng_internal, rng_gauss = state.rng.getstate()
    return {
        "tick": state.tick,
        "next_seq": state.next_seq,
        "next_conversation": state.next_conversation,
        "agents": agents,
        "conversations": conversations,
        "memories": memories,
        "rng": [rng_version, list(rng_internal), rng_gauss],
    }


def state_digest(state: SimState) -> str:
    canonical = json.dumps(canonical_state(state), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
