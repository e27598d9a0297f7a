"""Headless entry points: run simulations, serve the API, verify logs.

    lifespace run    --seed 7 --ticks 100 --out run.jsonl
    lifespace serve  --listen 127.0.0.1:8900 --snapshot-on-exit state.json
    lifespace replay run.jsonl

A JSON config file (--config) is the single source of truth for a run:
{"sim": {...}, "planner_provider": {...}, "talker_provider": {...},
 "map_path": ..., "roster_path": ...}; command-line flags override it.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path

from .agents import default_roster, load_roster
from .cognition import ProviderConfig, StubProvider, remote_provider
from .errors import LifespaceError
from .persistence import verify_log, write_event_log
from .simulation import SimConfig, new_state, run
from .world import default_map, load_map


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lifespace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--map", help="map document path (default: built-in town)")
        p.add_argument("--roster", help="roster JSON path (default: built-in five personas)")
        p.add_argument("--seed", type=int, help="simulation seed")
        p.add_argument("--provider", choices=("stub", "remote"), help="provider selection")

    p_run = sub.add_parser("run", help="run a headless simulation and write its event log")
    common(p_run)
    p_run.add_argument("--ticks", type=int, default=100, help="ticks to simulate")
    p_run.add_argument("--out", default="run.jsonl", help="output event log path")

    p_serve = sub.add_parser("serve", help="run the engine behind the HTTP/WS service")
    common(p_serve)
    p_serve.add_argument("--listen", default="127.0.0.1:8900", help="host:port to bind")
    p_serve.add_argument("--snapshot-on-exit", help="write a state snapshot here on shutdown")
    p_serve.add_argument("--load-snapshot", help="resume from a state snapshot")

    p_replay = sub.add_parser("replay", help="verify an event log against its digest trailer")
    p_replay.add_argument("log", help="event log path")
    return parser


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise LifespaceError(f"cannot read config file '{path}': {exc}") from None
    except json.JSONDecodeError as exc:
        raise LifespaceError(f"config file '{path}' is not valid JSON: {exc}") from None


def _build_run(args) -> tuple:
    """(state, provider) from config file + flag overrides."""
    file_config = _load_config_file(args.config)

    sim_settings = dict(file_config.get("sim", {}))
    if args.seed is not None:
        sim_settings["seed"] = args.seed
    config = SimConfig(**sim_settings)

    map_path = args.map or file_config.get("map_path")
    if map_path:
        try:
            map_text = Path(map_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise LifespaceError(f"cannot read map file '{map_path}': {exc}") from None
        world = load_map(map_text)
    else:
        world = default_map()

    roster_path = args.roster or file_config.get("roster_path")
    if roster_path:
        try:
            roster_text = Path(roster_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise LifespaceError(f"cannot read roster file '{roster_path}': {exc}") from None
        roster = load_roster(roster_text, world)
    else:
        roster = default_roster(world)

    choice = args.provider or file_config.get("provider", "stub")
    if choice == "remote":
        try:
            planner_cfg = ProviderConfig(**file_config["planner_provider"])
            talker_cfg = ProviderConfig(**file_config["talker_provider"])
        except KeyError as exc:
            raise LifespaceError(
                f"remote provider needs {exc} in the config file"
            ) from None
        provider = remote_provider(planner_cfg, talker_cfg)
    else:
        provider = StubProvider(seed=config.seed)

    return new_state(world, roster, config), provider


def cmd_run(args) -> int:
    if args.ticks < 0:
        print("error: --ticks must be >= 0", file=sys.stderr)
        return 1
    try:
        state, provider = _build_run(args)
        state, events = run(state, provider, args.ticks)
        write_event_log(args.out, state, events)
    except LifespaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    counts = Counter(event.type for event in events)
    print(f"ran {state.tick} ticks, {len(events)} events -> {args.out}")
    for event_type, count in sorted(counts.items()):
        print(f"  {event_type:22s} {count}")
    print(f"conversations held: {counts.get('conversation_ended', 0)}")
    print(f"memory compressions: {counts.get('memory_compressed', 0)}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .persistence import load_snapshot
    from .service import Engine, create_app

    try:
        host, _, port_text = args.listen.partition(":")
        port = int(port_text or "8900")
    except ValueError:
        print(f"error: bad --listen value '{args.listen}'", file=sys.stderr)
        return 1
    try:
        state, provider = _build_run(args)
        if args.load_snapshot:
            state = load_snapshot(args.load_snapshot)
        engine = Engine(state, provider)
    except LifespaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    app = create_app(engine)
    engine.start()
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"error: cannot serve on {args.listen}: {exc}", file=sys.stderr)
        engine.stop()
        return 2
    finally:
        engine.stop()
        if args.snapshot_on_exit:
            engine.save(args.snapshot_on_exit)
            print(f"snapshot written to {args.snapshot_on_exit}")
    return 0


def cmd_replay(args) -> int:
    try:
        report = verify_log(args.log)
    except LifespaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if report.ok:
        print(f"digest match ({report.events} events, final tick {report.final_tick})")
        return 0
    print(f"digest mismatch: {report.message}")
    if report.divergent_seq is not None:
        print(f"first divergent seq: {report.divergent_seq}")
    return 1


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "serve":
        return cmd_serve(args)
    return cmd_replay(args)


if __name__ == "__main__":
    sys.exit(main())
