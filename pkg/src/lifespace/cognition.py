"""Language-model capability behind the four generation tasks.

Four tasks drive the engine: planning the next destination/activity,
producing agent-agent dialogue turns, compressing memory events into
summaries, and replying to the user. Two provider implementations ship:

* `StubProvider` — a first-class, rule-based provider. Every output is a
  pure function of its inputs and the configured seed, which is what makes
  whole-engine runs reproducible and testable offline. The rule table is
  documented on the class.
* `RemoteProvider` — an OpenAI-compatible chat-completions client split
  into two roles (planner/summarizer and conversationalist), mirroring a
  deployment where slow deliberate calls and fast conversational calls use
  different models.

The module-level operations (`plan_next`, `next_dialogue_turn`,
`summarize_events`, `respond_to_user`) wrap any provider with validation
and repair so their results always satisfy the engine's invariants no
matter what raw text came back.
"""

from __future__ import annotations

import os
import re
import time
import zlib
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import httpx

from .agents import AgentProfile
from .errors import PreconditionError, ProviderUnavailableError
from .memory import ContextBundle, MemoryEvent, render_context
from .world import WorldMap

DEFAULT_MAX_TURNS = 6

# Default activity when an agent is at its own workplace, keyed by occupation.
OCCUPATION_ACTIVITIES = {
    "chef": "preparing ingredients",
    "musician": "rehearsing a new tune",
    "librarian": "sorting returned books",
    "gardener": "watering the beds",
    "barista": "dialing in the espresso",
}
FALLBACK_OCCUPATION_ACTIVITY = "tidying up the workspace"

# Default activity when visiting a scene, keyed by scene category.
CATEGORY_ACTIVITIES = {
    "dining": "sampling the menu",
    "leisure": "taking a slow walk",
    "culture": "browsing the shelves",
    "social": "people-watching",
}


@dataclass(frozen=True)
class PlanDecision:
    destination_scene: str
    activity: str
    rationale: str = ""


@dataclass(frozen=True)
class DialogueTurn:
    speaker: str
    text: str
    terminate: bool = False


@dataclass(frozen=True)
class UserReply:
    text: str
    accepted_action: PlanDecision | None = None


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str
    model_name: str
    api_key_ref: str = ""
    timeout: float = 30.0
    max_retries: int = 3

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise PreconditionError("provider timeout must be positive")


class Provider(Protocol):
    """Raw generation interface; operations below validate and repair."""

    def plan(self, profile: AgentProfile, context: ContextBundle, world: WorldMap) -> PlanDecision: ...

    def dialogue_turn(
        self,
        turns: Sequence[DialogueTurn],
        speaker: AgentProfile,
        partner: AgentProfile,
        speaker_context: ContextBundle,
        partner_context: ContextBundle,
        must_close: bool,
    ) -> DialogueTurn: ...

    def summarize(self, events: Sequence[MemoryEvent]) -> str: ...

    def reply(
        self, profile: AgentProfile, context: ContextBundle, world: WorldMap, user_text: str
    ) -> UserReply: ...


def _crc(text: str) -> int:
    return zlib.crc32(text.encode("utf-8"))


class StubProvider:
    """Deterministic rule-based provider; no network, no hidden state.

    Rule table (all choices are pure functions of the inputs and `seed`):

    plan:
      1. If the agent has no life-track items at all, go to the home scene;
         the activity comes from the occupation table.
      2. Otherwise rotate through the map's scenes in document order:
         index = (crc32(agent id) + total life items) % scene count, where
         total life items counts recent life events plus all events folded
         into life summaries. The activity comes from the category table.

    dialogue_turn:
      * Turn 0 greets the partner by name.
      * Middle turns pick from three small-talk templates by
        (seed + turn index + crc32(speaker id)) % 3, quoting the speaker's
        most recent life event when one exists.
      * When the turn cap is reached (must_close) the speaker says goodbye
        with terminate set.

    summarize:
      One sentence naming the distinct scenes visited (parsed from arrival
      events) and conversation partners (parsed from dialogue events); for
      interaction-track batches, a one-line count of exchanges.

    reply:
      1. If the user text names any scene (id or label, case-insensitive),
         accept it: the reply agrees to go and carries an accepted action
         with the category-default activity. First match in map order wins.
      2. Else if the text asks about recent doings ("today", "recent",
         "lately", "what did you do", "what have you been"), echo the most
         recent life-track item verbatim.
      3. Otherwise a canned line chosen by (seed + text length) % 3.
    """

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed

    def plan(self, profile: AgentProfile, context: ContextBundle, world: WorldMap) -> PlanDecision:
        scene_ids = world.scene_ids()
        total_life = context.life_items_total()
        if total_life == 0:
            home = profile.home_scene if profile.home_scene in scene_ids else scene_ids[0]
            activity = OCCUPATION_ACTIVITIES.get(profile.occupation, FALLBACK_OCCUPATION_ACTIVITY)
            return PlanDecision(home, activity, "home base first")
        index = (_crc(profile.id) + total_life) % len(scene_ids)
        scene = world.scenes[index]
        activity = CATEGORY_ACTIVITIES.get(scene.category, "looking around")
        return PlanDecision(scene.id, activity, f"rotating through town (visit {total_life})")

    def dialogue_turn(
        self,
        turns: Sequence[DialogueTurn],
        speaker: AgentProfile,
        partner: AgentProfile,
        speaker_context: ContextBundle,
        partner_context: ContextBundle,
        must_close: bool,
    ) -> DialogueTurn:
        index = len(turns)
        if must_close:
            text = f"Good chatting, {partner.name} — see you around!"
            return DialogueTurn(speaker=speaker.id, text=text, terminate=True)
        if index == 0:
            text = f"Hi {partner.name}! How is the {partner.occupation} life treating you?"
            return DialogueTurn(speaker=speaker.id, text=text, terminate=False)
        if speaker_context.recent_life:
            note = speaker_context.recent_life[-1].text
        else:
            note = f"Quiet day for a {speaker.occupation} so far."
        templates = (
            "{note} How about you?",
            "Lately: {note}",
            "{note} You would have liked it.",
        )
        text = templates[(self.seed + index + _crc(speaker.id)) % len(templates)].format(note=note)
        return DialogueTurn(speaker=speaker.id, text=text, terminate=False)

    def summarize(self, events: Sequence[MemoryEvent]) -> str:
        if events and events[0].track == "interaction":
            return f"Caught up with the user over {len(events)} exchanges."
        scenes = set()
        partners = set()
        for event in events:
            if event.kind == "arrival":
                match = re.search(r"arrived at the ([^.]+)\.", event.text)
                if match:
                    scenes.add(match.group(1))
            elif event.kind == "agent_dialogue":
                match = re.search(r"had a conversation with (\S+):", event.text)
                if match:
                    partners.add(match.group(1))
        scenes_part = ", ".join(sorted(scenes)) if scenes else "no new places"
        partners_part = ", ".join(sorted(partners)) if partners else "no one in particular"
        return f"Visited {scenes_part}; talked with {partners_part}."

    def reply(
        self, profile: AgentProfile, context: ContextBundle, world: WorldMap, user_text: str
    ) -> UserReply:
        lowered = user_text.lower()
        for scene in world.scenes:
            if scene.id.lower() in lowered or scene.label.lower() in lowered:
                activity = CATEGORY_ACTIVITIES.get(scene.category, "looking around")
                action = PlanDecision(scene.id, activity, "user suggestion")
                return UserReply(
                    text=f"Sure — I'll head over to the {scene.label} now.",
                    accepted_action=action,
                )
        asks_recent = any(
            phrase in lowered
            for phrase in ("today", "recent", "lately", "what did you do", "what have you been")
        )
        if asks_recent:
            if context.recent_life:
                return UserReply(text=f"Let me think... {context.recent_life[-1].text}")
            if context.long_term_life:
                return UserReply(text=f"Let me think... {context.long_term_life[-1].text}")
            return UserReply(text="Honestly, not much yet — the day is young.")
        canned = ("happy to help.", "ask me anything.", "always glad to chat.")
        line = canned[(self.seed + len(user_text)) % len(canned)]
        return UserReply(text=f"Well, as a {profile.occupation}: {line}")


# --- remote provider -------------------------------------------------------

_BLOCK_RE = re.compile(r"^\s*(?:[-*]\s*)?([A-Za-z_]+)\s*:\s*(.*\S)\s*$")


def parse_kv_block(text: str, keys: Sequence[str]) -> dict[str, str]:
    """Tolerant key/value extraction from model output.

    Accepts `key: value` lines anywhere in the text, ignoring code fences,
    bullets and casing. Returns only the requested keys.
    """
    wanted = {k.lower() for k in keys}
    found: dict[str, str] = {}
    for line in text.splitlines():
        if line.strip().startswith("```"):
            continue
        match = _BLOCK_RE.match(line)
        if match and match.group(1).lower() in wanted:
            found[match.group(1).lower()] = match.group(2).strip()
    return found


class CompletionBackend:
    """Blocking chat-completions call with retry and bearer auth."""

    def __init__(
        self,
        config: ProviderConfig,
        temperature: float = 0.0,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self.config = config
        self.temperature = temperature
        self._transport = transport
        if config.api_key_ref:
            key = os.environ.get(config.api_key_ref)
            if key is None:
                raise PreconditionError(
                    f"environment variable '{config.api_key_ref}' is not set"
                )
            self._api_key: str | None = key
        else:
            self._api_key = None

    def _url(self) -> str:
        base = self.config.endpoint.rstrip("/")
        if base.endswith("/chat/completions"):
            return base
        return base + "/chat/completions"

    def complete(self, system: str, user: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        payload = {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": self.temperature,
        }
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries):
            try:
                with httpx.Client(timeout=self.config.timeout, transport=self._transport) as client:
                    response = client.post(self._url(), headers=headers, json=payload)
                if response.status_code >= 400:
                    raise RuntimeError(f"provider returned {response.status_code}: {response.text[:200]}")
                body = response.json()
                return body["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - every failure is retryable here
                last_error = exc
                if attempt + 1 < self.config.max_retries:
                    time.sleep(min(2.0, 0.2 * 2**attempt))
        raise ProviderUnavailableError(f"provider failed after {self.config.max_retries} attempts: {last_error}")


def _persona_prompt(profile: AgentProfile) -> str:
    return (
        f"You are {profile.name}, a {profile.occupation} living in a small town. "
        f"Personality: {profile.personality}. {profile.bio}"
    )


class RemoteProvider:
    """Two-role remote provider.

    The planner backend (temperature 0 by default) handles planning and
    summarization; the talker backend handles dialogue turns and user
    replies. Providers are asked for a plain `key: value` block; if the
    reply cannot be parsed the request is retried once with a reminder,
    after which the result is repaired to a safe default.
    """

    def __init__(self, planner: CompletionBackend, talker: CompletionBackend) -> None:
        self.planner = planner
        self.talker = talker

    def _completed_block(
        self, backend: CompletionBackend, system: str, user: str, keys: Sequence[str]
    ) -> tuple[dict[str, str], str]:
        text = backend.complete(system, user)
        fields = parse_kv_block(text, keys)
        if not fields:
            reminder = (
                user
                + "\n\nYour previous reply could not be parsed. Answer again using only "
                + "lines of the form `key: value` for these keys: "
                + ", ".join(keys)
            )
            text = backend.complete(system, reminder)
            fields = parse_kv_block(text, keys)
        return fields, text

    def plan(self, profile: AgentProfile, context: ContextBundle, world: WorldMap) -> PlanDecision:
        scene_list = ", ".join(world.scene_ids())
        user = (
            "Decide where to go next and what to do there.\n\n"
            + render_context(context)
            + f"\n\nAvailable scenes: {scene_list}.\n"
            + "Reply with exactly these lines:\n"
            + "destination: <scene id>\nactivity: <short label>\nrationale: <one line>"
        )
        fields, _ = self._completed_block(self.planner, _persona_prompt(profile), user,
                                          ("destination", "activity", "rationale"))
        return PlanDecision(
            destination_scene=fields.get("destination", ""),
            activity=fields.get("activity", ""),
            rationale=fields.get("rationale", ""),
        )

    def dialogue_turn(
        self,
        turns: Sequence[DialogueTurn],
        speaker: AgentProfile,
        partner: AgentProfile,
        speaker_context: ContextBundle,
        partner_context: ContextBundle,
        must_close: bool,
    ) -> DialogueTurn:
        transcript = "\n".join(f"{turn.speaker}: {turn.text}" for turn in turns) or "(no turns yet)"
        closing = "You must wrap up the conversation now.\n" if must_close else ""
        user = (
            f"You bumped into {partner.name} (a {partner.occupation}). Conversation so far:\n"
            + transcript
            + "\n\n"
            + render_context(speaker_context)
            + "\n\n"
            + closing
            + "Reply with exactly these lines:\ntext: <what you say>\nterminate: <yes or no>"
        )
        fields, raw = self._completed_block(self.talker, _persona_prompt(speaker), user,
                                            ("text", "terminate"))
        text = fields.get("text", raw.strip())
        terminate = fields.get("terminate", "no").lower().startswith("y")
        return DialogueTurn(speaker=speaker.id, text=text, terminate=terminate or must_close)

    def summarize(self, events: Sequence[MemoryEvent]) -> str:
        listing = "\n".join(f"- {event.text}" for event in events)
        user = (
            "Compress the following events into one abstract sentence, keeping "
            "names and places:\n" + listing
        )
        return self.planner.complete(
            "You write terse, factual one-sentence summaries.", user
        ).strip()

    def reply(
        self, profile: AgentProfile, context: ContextBundle, world: WorldMap, user_text: str
    ) -> UserReply:
        scene_list = ", ".join(world.scene_ids())
        user = (
            render_context(context)
            + f"\n\nThe user says: {user_text}\n\n"
            + f"Scenes you could move to: {scene_list}.\n"
            + "Reply with exactly these lines (leave action lines empty unless you "
            + "agree to go somewhere or do something concrete):\n"
            + "text: <your reply>\naction_scene: <scene id or empty>\naction_activity: <label or empty>"
        )
        fields, raw = self._completed_block(self.talker, _persona_prompt(profile), user,
                                            ("text", "action_scene", "action_activity"))
        text = fields.get("text", raw.strip())
        action = None
        scene = fields.get("action_scene", "")
        if scene:
            action = PlanDecision(
                destination_scene=scene,
                activity=fields.get("action_activity", "") or "looking around",
                rationale="user suggestion",
            )
        return UserReply(text=text, accepted_action=action)


def remote_provider(planner_config: ProviderConfig, talker_config: ProviderConfig,
                    talker_temperature: float = 0.7) -> RemoteProvider:
    return RemoteProvider(
        planner=CompletionBackend(planner_config, temperature=0.0),
        talker=CompletionBackend(talker_config, temperature=talker_temperature),
    )


# --- validated operations --------------------------------------------------

RepairHook = Callable[[str, str], None]


def plan_next(
    provider: Provider,
    profile: AgentProfile,
    context: ContextBundle,
    world: WorldMap,
    on_repair: RepairHook | None = None,
) -> PlanDecision:
    """A valid next plan. Unknown destinations are repaired to the home scene
    (or the first scene) and reported through on_repair(bad, fixed)."""
    scene_ids = world.scene_ids()
    if not scene_ids:
        raise PreconditionError("cannot plan on a map with no scenes")
    raw = provider.plan(profile, context, world)
    destination = raw.destination_scene
    if destination not in scene_ids:
        fixed = profile.home_scene if profile.home_scene in scene_ids else scene_ids[0]
        if on_repair is not None:
            on_repair(destination, fixed)
        destination = fixed
    activity = raw.activity.strip() if raw.activity else ""
    if not activity:
        activity = OCCUPATION_ACTIVITIES.get(profile.occupation, FALLBACK_OCCUPATION_ACTIVITY)
    return PlanDecision(destination, activity, raw.rationale)


def next_dialogue_turn(
    provider: Provider,
    turns: Sequence[DialogueTurn],
    speaker: AgentProfile,
    partner: AgentProfile,
    speaker_context: ContextBundle,
    partner_context: ContextBundle,
    max_turns: int = DEFAULT_MAX_TURNS,
) -> DialogueTurn:
    """The next turn, attributed to `speaker`. The turn that reaches
    max_turns always terminates; provider failure yields a synthetic
    terminating turn so the conversation still closes cleanly."""
    if len(turns) >= max_turns:
        raise PreconditionError(f"conversation already has {len(turns)} of {max_turns} turns")
    must_close = len(turns) == max_turns - 1
    try:
        raw = provider.dialogue_turn(turns, speaker, partner, speaker_context, partner_context, must_close)
    except ProviderUnavailableError:
        return DialogueTurn(speaker=speaker.id, text="", terminate=True)
    terminate = raw.terminate or must_close
    text = raw.text.strip()
    if not text and not terminate:
        text = "..."
    return DialogueTurn(speaker=speaker.id, text=text, terminate=terminate)


def summarize_events(provider: Provider, events: Sequence[MemoryEvent]) -> str:
    """One abstract summary for a single-track batch of events."""
    if not events:
        raise PreconditionError("cannot summarize zero events")
    tracks = {event.track for event in events}
    if len(tracks) != 1:
        raise PreconditionError(f"events span multiple tracks: {sorted(tracks)}")
    text = provider.summarize(events).strip()
    if not text:
        text = f"{len(events)} events noted."
    concatenated = " ".join(event.text for event in events)
    if len(text) >= len(concatenated):
        text = text[: max(1, len(concatenated) - 1)]
    return text


def respond_to_user(
    provider: Provider,
    profile: AgentProfile,
    context: ContextBundle,
    world: WorldMap,
    user_text: str,
) -> UserReply:
    """Reply to the user; an accepted action survives only if it names a
    real scene. Provider failure propagates so the caller can retry."""
    if not user_text or not user_text.strip():
        raise PreconditionError("user text must be non-empty")
    raw = provider.reply(profile, context, world, user_text)
    text = raw.text.strip() if raw.text else ""
    if not text:
        text = "Sorry, could you say that again?"
    action = raw.accepted_action
    if action is not None:
        if action.destination_scene not in world.scene_ids():
            action = None
        elif not action.activity.strip():
            category = world.scene(action.destination_scene).category
            action = PlanDecision(
                action.destination_scene,
                CATEGORY_ACTIVITIES.get(category, "looking around"),
                action.rationale,
            )
    return UserReply(text=text, accepted_action=action)
