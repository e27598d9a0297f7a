"""lifespace: a persistent multi-agent life-space engine.

Agents with real-world occupations live in a tiled town, plan their days,
walk between scenes, hold proximity-triggered conversations, and remember
it all in a dual-track memory (their own life vs. their history with the
user). A service layer streams the world live and gates its visibility
without ever changing what happens in it.
"""

from .agents import AgentProfile, AgentState, Roster, default_roster
from .cognition import (
    DialogueTurn,
    PlanDecision,
    Provider,
    ProviderConfig,
    StubProvider,
    UserReply,
    remote_provider,
)
from .memory import ContextBundle, LongTermSummary, MemoryEvent, MemoryStore
from .simulation import SimConfig, SimEvent, SimState, new_state, run, tick
from .world import Path, Position, SceneArea, WorldMap, default_map, find_path, load_map

__all__ = [
    "AgentProfile",
    "AgentState",
    "ContextBundle",
    "DialogueTurn",
    "LongTermSummary",
    "MemoryEvent",
    "MemoryStore",
    "Path",
    "PlanDecision",
    "Position",
    "Provider",
    "ProviderConfig",
    "Roster",
    "SceneArea",
    "SimConfig",
    "SimEvent",
    "SimState",
    "StubProvider",
    "UserReply",
    "WorldMap",
    "default_map",
    "default_roster",
    "find_path",
    "load_map",
    "new_state",
    "remote_provider",
    "run",
    "tick",
]

__version__ = "0.1.0"
