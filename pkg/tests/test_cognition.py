"""Provider operations: stub rules, validation/repair, remote client."""

import json

import httpx
import pytest

from lifespace.agents import AgentProfile
from lifespace.cognition import (
    CompletionBackend,
    DialogueTurn,
    PlanDecision,
    ProviderConfig,
    RemoteProvider,
    UserReply,
    next_dialogue_turn,
    parse_kv_block,
    plan_next,
    respond_to_user,
    summarize_events,
)
from lifespace.errors import PreconditionError, ProviderUnavailableError
from lifespace.memory import MemoryStore, assemble_context, draft_event, record_event
from lifespace.world import WorldMap

CHEF = AgentProfile(id="anty", name="Anty", occupation="chef",
                    personality="warm", home_scene="restaurant", bio="Runs the kitchen.")
MUSICIAN = AgentProfile(id="barr", name="Barr", occupation="musician",
                        personality="easygoing", home_scene="plaza", bio="Collects tunes.")


def empty_context():
    return assemble_context(MemoryStore(agent_ref="anty"))


def context_with_life(*texts):
    store = MemoryStore(agent_ref="anty")
    for text in texts:
        record_event(store, draft_event("arrival", text, ("anty",)))
    return assemble_context(store)


class FixedProvider:
    """Returns whatever it was constructed with; for exercising repair paths."""

    def __init__(self, plan_result=None, turn=None, summary="", reply=None):
        self._plan = plan_result
        self._turn = turn
        self._summary = summary
        self._reply = reply

    def plan(self, profile, context, world):
        return self._plan

    def dialogue_turn(self, turns, speaker, partner, sc, pc, must_close):
        return self._turn

    def summarize(self, events):
        return self._summary

    def reply(self, profile, context, world, user_text):
        return self._reply


class DownProvider:
    def plan(self, *a, **k):
        raise ProviderUnavailableError("no network")

    dialogue_turn = plan
    summarize = plan
    reply = plan


class TestStubPlan:
    def test_chef_with_empty_memory_goes_home(self, town, stub):
        decision = plan_next(stub, CHEF, empty_context(), town)
        assert decision.destination_scene == "restaurant"
        assert decision.activity == "preparing ingredients"

    def test_with_history_rotates_through_valid_scenes(self, town, stub):
        seen = set()
        for n in range(1, 13):
            context = context_with_life(*[f"Anty arrived at the garden." for _ in range(n)])
            decision = plan_next(stub, CHEF, context, town)
            assert decision.destination_scene in town.scene_ids()
            seen.add(decision.destination_scene)
        assert len(seen) > 1  # actually circulates

    def test_deterministic(self, town, stub):
        context = context_with_life("Anty arrived at the garden.")
        a = plan_next(stub, CHEF, context, town)
        b = plan_next(stub, CHEF, context, town)
        assert a == b


class TestPlanRepair:
    def test_unknown_scene_repaired_to_home(self, town):
        provider = FixedProvider(plan_result=PlanDecision("moonbase", "stargazing"))
        repairs = []
        decision = plan_next(provider, CHEF, empty_context(), town,
                             on_repair=lambda bad, fixed: repairs.append((bad, fixed)))
        assert decision.destination_scene == "restaurant"
        assert repairs == [("moonbase", "restaurant")]

    def test_empty_activity_filled_from_occupation(self, town):
        provider = FixedProvider(plan_result=PlanDecision("garden", ""))
        decision = plan_next(provider, CHEF, empty_context(), town)
        assert decision.destination_scene == "garden"
        assert decision.activity == "preparing ingredients"

    def test_provider_down_propagates(self, town):
        with pytest.raises(ProviderUnavailableError):
            plan_next(DownProvider(), CHEF, empty_context(), town)

    def test_map_without_scenes_rejected(self, stub):
        bare = WorldMap.from_rows(["...", "...", "..."])
        with pytest.raises(PreconditionError):
            plan_next(stub, CHEF, empty_context(), bare)


class TestDialogue:
    def test_initiator_greets_first(self, stub):
        turn = next_dialogue_turn(stub, [], CHEF, MUSICIAN, empty_context(), empty_context())
        assert turn.speaker == "anty"
        assert turn.text == "Hi Barr! How is the musician life treating you?"
        assert turn.terminate is False

    def test_turn_at_cap_terminates(self, stub):
        turns = [DialogueTurn(speaker="anty", text=f"t{i}") for i in range(5)]
        turn = next_dialogue_turn(stub, turns, MUSICIAN, CHEF, empty_context(), empty_context(),
                                  max_turns=6)
        assert turn.terminate is True

    def test_over_cap_rejected(self, stub):
        turns = [DialogueTurn(speaker="anty", text=f"t{i}") for i in range(6)]
        with pytest.raises(PreconditionError):
            next_dialogue_turn(stub, turns, CHEF, MUSICIAN, empty_context(), empty_context(),
                               max_turns=6)

    def test_provider_failure_yields_synthetic_close(self):
        turn = next_dialogue_turn(DownProvider(), [], CHEF, MUSICIAN,
                                  empty_context(), empty_context())
        assert turn.terminate is True
        assert turn.speaker == "anty"

    def test_empty_text_repaired_when_not_terminating(self):
        provider = FixedProvider(turn=DialogueTurn(speaker="anty", text="", terminate=False))
        turn = next_dialogue_turn(provider, [], CHEF, MUSICIAN, empty_context(), empty_context())
        assert turn.text == "..."

    def test_middle_turns_quote_recent_life(self, stub):
        context = context_with_life("Anty arrived at the garden.")
        turns = [DialogueTurn(speaker="barr", text="hi")]
        turn = next_dialogue_turn(stub, turns, CHEF, MUSICIAN, context, empty_context())
        assert "Anty arrived at the garden." in turn.text


class TestSummaries:
    def test_life_batch_lists_scenes_and_partners(self, stub):
        store = MemoryStore(agent_ref="anty")
        record_event(store, draft_event("arrival", "Anty arrived at the garden.", ("anty",)))
        record_event(store, draft_event("arrival", "Anty arrived at the plaza.", ("anty",)))
        record_event(store, draft_event(
            "agent_dialogue", "Anty had a conversation with Barr: Barr: hi", ("anty", "barr")))
        for i in range(7):
            record_event(store, draft_event("activity", f"Anty started cooking. ({i})", ("anty",)))
        events = store.short_term["life_space"]
        assert len(events) == 10
        summary = summarize_events(stub, events)
        assert summary == "Visited garden, plaza; talked with Barr."

    def test_empty_batch_rejected(self, stub):
        with pytest.raises(PreconditionError):
            summarize_events(stub, [])

    def test_mixed_tracks_rejected(self, stub):
        events = [
            draft_event("arrival", "Anty arrived at the garden.", ("anty",)),
            draft_event("user_exchange", "User said: hi. Anty replied: hi.", ("anty",)),
        ]
        with pytest.raises(PreconditionError):
            summarize_events(stub, events)

    def test_summary_shorter_than_inputs(self):
        provider = FixedProvider(summary="an extremely long-winded summary " * 20)
        events = [draft_event("arrival", "Anty arrived at the garden.", ("anty",))]
        summary = summarize_events(provider, events)
        assert 0 < len(summary) < len("Anty arrived at the garden.")


class TestUserReplies:
    def test_scene_request_accepted(self, town, stub):
        reply = respond_to_user(stub, CHEF, empty_context(), town, "please go to the garden")
        assert reply.accepted_action is not None
        assert reply.accepted_action.destination_scene == "garden"
        assert reply.accepted_action.activity == "taking a slow walk"
        assert "garden" in reply.text

    def test_recent_activity_question_echoes_life_event(self, town, stub):
        context = context_with_life("Anty arrived at the garden.")
        reply = respond_to_user(stub, CHEF, context, town, "what did you do today?")
        assert reply.accepted_action is None
        assert "Anty arrived at the garden." in reply.text

    def test_empty_text_rejected(self, town, stub):
        with pytest.raises(PreconditionError):
            respond_to_user(stub, CHEF, empty_context(), town, "   ")

    def test_invalid_accepted_scene_dropped(self, town):
        provider = FixedProvider(reply=UserReply(
            text="Sure, to the moon!",
            accepted_action=PlanDecision("moonbase", "bouncing")))
        reply = respond_to_user(provider, CHEF, empty_context(), town, "go to the moon")
        assert reply.accepted_action is None
        assert reply.text == "Sure, to the moon!"

    def test_byte_identical_across_calls(self, town, stub):
        context = context_with_life("Anty arrived at the cafe.")
        first = respond_to_user(stub, CHEF, context, town, "what did you do today?")
        second = respond_to_user(stub, CHEF, context, town, "what did you do today?")
        assert first == second


class TestKvParsing:
    def test_plain_block(self):
        text = "destination: garden\nactivity: weeding\nrationale: fresh air"
        assert parse_kv_block(text, ("destination", "activity", "rationale")) == {
            "destination": "garden", "activity": "weeding", "rationale": "fresh air"}

    def test_tolerates_fences_bullets_case(self):
        text = "```\n- Destination: plaza\nACTIVITY: busking\n```"
        fields = parse_kv_block(text, ("destination", "activity"))
        assert fields == {"destination": "plaza", "activity": "busking"}

    def test_unparseable_gives_empty(self):
        assert parse_kv_block("I would simply go outside.", ("destination",)) == {}


def completion_response(content):
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


class TestCompletionBackend:
    def config(self, retries=3):
        return ProviderConfig(endpoint="http://llm.test/v1", model_name="test-model",
                              max_retries=retries, timeout=5)

    def test_success_posts_openai_shape(self):
        captured = {}

        def handler(request):
            captured["url"] = str(request.url)
            captured["body"] = json.loads(request.content)
            return completion_response("destination: garden")

        backend = CompletionBackend(self.config(), transport=httpx.MockTransport(handler))
        text = backend.complete("sys", "user")
        assert text == "destination: garden"
        assert captured["url"] == "http://llm.test/v1/chat/completions"
        assert captured["body"]["model"] == "test-model"
        assert captured["body"]["messages"][0] == {"role": "system", "content": "sys"}
        assert captured["body"]["temperature"] == 0.0

    def test_three_failures_exhaust_retries(self):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            return httpx.Response(500, text="boom")

        backend = CompletionBackend(self.config(retries=3),
                                    transport=httpx.MockTransport(handler))
        with pytest.raises(ProviderUnavailableError):
            backend.complete("sys", "user")
        assert calls["n"] == 3

    def test_recovers_after_transient_failure(self):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            if calls["n"] == 1:
                return httpx.Response(503, text="busy")
            return completion_response("ok")

        backend = CompletionBackend(self.config(), transport=httpx.MockTransport(handler))
        assert backend.complete("sys", "user") == "ok"

    def test_missing_key_env_rejected(self, monkeypatch):
        monkeypatch.delenv("LIFESPACE_TEST_KEY", raising=False)
        config = ProviderConfig(endpoint="http://llm.test", model_name="m",
                                api_key_ref="LIFESPACE_TEST_KEY")
        with pytest.raises(PreconditionError, match="LIFESPACE_TEST_KEY"):
            CompletionBackend(config)

    def test_bearer_header_from_env(self, monkeypatch):
        monkeypatch.setenv("LIFESPACE_TEST_KEY", "sk-123")
        captured = {}

        def handler(request):
            captured["auth"] = request.headers.get("authorization")
            return completion_response("ok")

        config = ProviderConfig(endpoint="http://llm.test", model_name="m",
                                api_key_ref="LIFESPACE_TEST_KEY")
        backend = CompletionBackend(config, transport=httpx.MockTransport(handler))
        backend.complete("s", "u")
        assert captured["auth"] == "Bearer sk-123"


class TestRemoteProvider:
    def remote(self, handler):
        config = ProviderConfig(endpoint="http://llm.test", model_name="m", timeout=5)
        backend = CompletionBackend(config, transport=httpx.MockTransport(handler))
        return RemoteProvider(planner=backend, talker=backend)

    def test_plan_parses_block(self, town):
        provider = self.remote(lambda request: completion_response(
            "destination: garden\nactivity: weeding\nrationale: quiet"))
        decision = plan_next(provider, CHEF, empty_context(), town)
        assert decision == PlanDecision("garden", "weeding", "quiet")

    def test_garbage_output_reprompted_once_then_repaired(self, town):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            return completion_response("I cannot answer in that format, sorry.")

        provider = self.remote(handler)
        decision = plan_next(provider, CHEF, empty_context(), town)
        assert calls["n"] == 2  # original + one re-prompt
        assert decision.destination_scene == "restaurant"  # repaired to home
        assert decision.activity == "preparing ingredients"

    def test_reply_with_action(self, town):
        provider = self.remote(lambda request: completion_response(
            "text: Happy to!\naction_scene: garden\naction_activity: picking herbs"))
        reply = respond_to_user(provider, CHEF, empty_context(), town, "go to the garden?")
        assert reply.text == "Happy to!"
        assert reply.accepted_action.destination_scene == "garden"
        assert reply.accepted_action.activity == "picking herbs"
