"""Simulate a day in the default town and narrate the highlights.

Runs 400 deterministic ticks with the stub provider, then prints each
agent's journal: where they went, who they met, and what their long-term
memory distilled it into.
"""

from lifespace import SimConfig, StubProvider, default_map, default_roster, new_state, run

SEED = 7


def main():
    world = default_map()
    roster = default_roster(world)
    state = new_state(world, roster, SimConfig(seed=SEED, memory_threshold=8))
    state, log = run(state, StubProvider(seed=SEED), 400)

    print(f"=== {state.tick} ticks, {len(log)} events, seed {SEED} ===\n")

    conversations = [e for e in log if e.type == "conversation_ended"]
    print(f"{len(conversations)} conversations happened today. The first one:")
    first = conversations[0]
    for line in first.data["dialogue"].split(" / "):
        print(f"   {line}")
    print()

    for agent_id in state.sorted_ids():
        profile = state.roster.profile(agent_id)
        store = state.memories[agent_id]
        print(f"--- {profile.name} the {profile.occupation} ---")
        visits = [e.data["scene"] for e in log if e.type == "arrived" and e.agent == agent_id]
        print(f"  visited: {', '.join(visits) if visits else 'stayed home'}")
        for summary in store.long_term["life_space"]:
            print(f"  remembers: {summary.text}")
        recent = store.short_term["life_space"]
        if recent:
            print(f"  latest: {recent[-1].text}")
        print()


if __name__ == "__main__":
    main()
