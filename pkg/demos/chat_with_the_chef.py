"""Headless chat with the chef while the town keeps running.

Shows the interaction loop end to end: the world ticks, the chef builds up
a life, and a user conversation both draws on that life ("what did you do
today?") and steers it ("please go to the garden").
"""

from lifespace import SimConfig, StubProvider, default_map, default_roster, new_state, run, tick
from lifespace.chat import open_session, user_message

SEED = 21


def main():
    world = default_map()
    roster = default_roster(world)
    state = new_state(world, roster, SimConfig(seed=SEED))
    provider = StubProvider(seed=SEED)

    state, _ = run(state, provider, 150)  # let some life happen first
    session = open_session(state, "anty")

    for text in ("hello!", "what did you do today?", "please go to the garden"):
        reply, acted = user_message(session, text, state, provider)
        print(f"you:  {text}")
        print(f"Anty: {reply}" + ("   [heading off]" if acted else ""))
        state, events = tick(state, provider)
        if acted:
            steps = [e for e in events if e.type == "moved" and e.agent == "anty"]
            print(f"      (Anty took the first step the same tick: {bool(steps)})")
        print()

    print("interaction memories the chef now carries:")
    for event in state.memories["anty"].short_term["interaction"]:
        print(f"  - {event.text}")


if __name__ == "__main__":
    main()
