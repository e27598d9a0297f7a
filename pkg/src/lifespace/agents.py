"""Agent personas and live state.

A persona is a real-world occupation plus a short personality sketch and a
home scene; the live state tracks position, what the agent is doing, and
the bookkeeping the simulation loop needs (path cursor, activity countdown,
conversation cooldown). The default roster ships five personas led by a
restaurant chef.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import IllegalTransitionError, MissingSceneError, PreconditionError
from .world import Path, Position, WorldMap, scene_anchor

MODES = ("idle", "moving", "acting", "conversing")


@dataclass(frozen=True)
class AgentProfile:
    id: str
    name: str
    occupation: str
    personality: str
    home_scene: str
    bio: str


@dataclass
class AgentState:
    profile_ref: str
    position: Position
    mode: str = "idle"
    current_path: Path | None = None
    path_cursor: int = 0
    current_activity: str | None = None
    conversation_ref: str | None = None
    conversation_cooldown: int = 0
    activity_remaining: int = 0

    def remaining_steps(self) -> int:
        if self.current_path is None:
            return 0
        return len(self.current_path) - self.path_cursor


@dataclass
class Roster:
    """Ordered agents; exactly one is the primary user-facing persona."""

    agents: list[tuple[AgentProfile, AgentState]] = field(default_factory=list)
    primary_id: str = ""

    def ids(self) -> list[str]:
        return [profile.id for profile, _ in self.agents]

    def profile(self, agent_id: str) -> AgentProfile:
        for profile, _ in self.agents:
            if profile.id == agent_id:
                return profile
        raise KeyError(agent_id)

    def state(self, agent_id: str) -> AgentState:
        for profile, state in self.agents:
            if profile.id == agent_id:
                return state
        raise KeyError(agent_id)

    def has(self, agent_id: str) -> bool:
        return any(profile.id == agent_id for profile, _ in self.agents)


DEFAULT_PERSONAS = (
    AgentProfile(
        id="anty",
        name="Anty",
        occupation="chef",
        personality="warm, proud of every dessert that leaves the kitchen",
        home_scene="restaurant",
        bio="Runs the restaurant kitchen and is always testing a new recipe.",
    ),
    AgentProfile(
        id="barr",
        name="Barr",
        occupation="musician",
        personality="easygoing, hums half-written melodies while walking",
        home_scene="plaza",
        bio="Plays whatever instrument is at hand and collects tunes heard around town.",
    ),
    AgentProfile(
        id="ines",
        name="Ines",
        occupation="librarian",
        personality="quiet, remembers where every book and rumour lives",
        home_scene="library",
        bio="Keeps the library open late and recommends books nobody asked for.",
    ),
    AgentProfile(
        id="fern",
        name="Fern",
        occupation="gardener",
        personality="patient, talks to plants more than to people",
        home_scene="garden",
        bio="Tends the garden beds and tracks the seasons by what is blooming.",
    ),
    AgentProfile(
        id="milo",
        name="Milo",
        occupation="barista",
        personality="chatty, knows everyone's usual order",
        home_scene="cafe",
        bio="Pulls espresso at the cafe and trades gossip over the counter.",
    ),
)


def default_roster(world: WorldMap) -> Roster:
    """Five personas with distinct occupations, spawned idle at their home anchors.

    The chef is the primary persona. Raises MissingSceneError if the map
    lacks a required home scene.
    """
    return build_roster(DEFAULT_PERSONAS, world, primary_id="anty")


def build_roster(
    profiles: tuple[AgentProfile, ...] | list[AgentProfile],
    world: WorldMap,
    primary_id: str,
) -> Roster:
    scene_ids = set(world.scene_ids())
    roster = Roster(primary_id=primary_id)
    seen: set[str] = set()
    for profile in profiles:
        if profile.id in seen:
            raise PreconditionError(f"duplicate agent id '{profile.id}'")
        seen.add(profile.id)
        if not profile.occupation:
            raise PreconditionError(f"agent '{profile.id}' has an empty occupation")
        if profile.home_scene not in scene_ids:
            raise MissingSceneError(
                f"agent '{profile.id}' needs scene '{profile.home_scene}' which the map lacks"
            )
        spawn = scene_anchor(world, profile.home_scene)
        roster.agents.append((profile, AgentState(profile_ref=profile.id, position=spawn)))
    if primary_id not in seen:
        raise PreconditionError(f"primary agent '{primary_id}' is not in the roster")
    return roster


def load_roster(text: str, world: WorldMap) -> Roster:
    """Roster from a JSON document: a list of persona objects.

    Each object carries id, name, occupation, personality, home_scene and
    bio; at most one may set "primary": true (defaults to the first entry).
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"roster document is not valid JSON: {exc}") from None
    if not isinstance(raw, list) or not raw:
        raise PreconditionError("roster document must be a non-empty JSON list")
    profiles = []
    primary_id = None
    for entry in raw:
        missing = [k for k in ("id", "name", "occupation", "personality", "home_scene") if k not in entry]
        if missing:
            raise PreconditionError(f"roster entry {entry.get('id', '?')} missing {missing}")
        profiles.append(
            AgentProfile(
                id=entry["id"],
                name=entry["name"],
                occupation=entry["occupation"],
                personality=entry["personality"],
                home_scene=entry["home_scene"],
                bio=entry.get("bio", ""),
            )
        )
        if entry.get("primary"):
            if primary_id is not None:
                raise PreconditionError("roster flags more than one primary agent")
            primary_id = entry["id"]
    return build_roster(profiles, world, primary_id=primary_id or profiles[0].id)


def set_activity(state: AgentState, activity: str) -> AgentState:
    """Enter (or re-enter) an activity. Only legal from idle or acting."""
    if state.mode not in ("idle", "acting"):
        raise IllegalTransitionError(
            f"agent '{state.profile_ref}' cannot start an activity while {state.mode}"
        )
    state.mode = "acting"
    state.current_activity = activity
    return state


def start_moving(state: AgentState, path: Path) -> AgentState:
    """Put the agent on a path. An empty path is rejected; arrival is immediate
    in that case and the caller handles it."""
    if len(path) == 0:
        raise PreconditionError("cannot start moving on an empty path")
    state.mode = "moving"
    state.current_path = path
    state.path_cursor = 0
    state.current_activity = None
    return state


def advance_one_step(state: AgentState) -> tuple[AgentState, bool]:
    """Move one tile along the current path; returns (state, arrived)."""
    if state.mode != "moving" or state.current_path is None:
        raise IllegalTransitionError(f"agent '{state.profile_ref}' is not moving")
    state.position = state.current_path.steps[state.path_cursor]
    state.path_cursor += 1
    if state.path_cursor >= len(state.current_path):
        state.mode = "idle"
        state.current_path = None
        state.path_cursor = 0
        return state, True
    return state, False


def check_invariants(state: AgentState) -> None:
    """Raise AssertionError if mode and fields are incoherent."""
    has_path = state.current_path is not None and state.path_cursor < len(state.current_path)
    assert (state.mode == "moving") == has_path, f"{state.profile_ref}: mode/path mismatch"
    assert (state.mode == "acting") == (state.current_activity is not None), (
        f"{state.profile_ref}: mode/activity mismatch"
    )
    assert (state.mode == "conversing") == (state.conversation_ref is not None), (
        f"{state.profile_ref}: mode/conversation mismatch"
    )
    assert state.conversation_cooldown >= 0
