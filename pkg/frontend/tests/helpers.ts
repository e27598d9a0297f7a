import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { Envelope, MapInfo, StateSnapshot } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export interface RecordedLog {
  header: { config: Record<string, unknown>; map: string; roster: { primary: string; profiles: any[] } };
  events: Envelope[];
  trailer: { digest: string; final_tick: number; events: number };
}

export function loadFixtureLog(visible = true): RecordedLog {
  const text = readFileSync(join(here, "..", "fixtures", "sample_run.jsonl"), "utf-8");
  const lines = text.trim().split("\n").map((line) => JSON.parse(line));
  const header = lines[0].header;
  const trailer = lines[lines.length - 1].trailer;
  const events = lines.slice(1, -1).map((event) => ({ ...event, visible }));
  return { header, events, trailer };
}

export function mapFromText(mapText: string): MapInfo {
  const lines = mapText.trim().split("\n");
  const [width, height] = lines[0].split(" ").map(Number);
  const rows = lines.slice(1, 1 + height);
  const scenes = lines.slice(1 + height).map((line) => {
    const parts = line.split(" ");
    return {
      id: parts[1],
      category: parts[2],
      label: parts[1],
      tiles: parts.slice(3).map((token) => token.split(",").map(Number) as [number, number]),
    };
  });
  return { width, height, rows, scenes };
}

/** Rebuild the stream-consumer's starting point from a recorded log header:
 * every agent idle at its home scene anchor, tick 0. */
export function snapshotFromHeader(log: RecordedLog): StateSnapshot {
  const map = mapFromText(log.header.map);
  const anchors = new Map<string, [number, number]>();
  for (const scene of map.scenes) {
    const sorted = [...scene.tiles].sort((a, b) => a[1] - b[1] || a[0] - b[0]);
    anchors.set(scene.id, sorted[0]);
  }
  return {
    tick: 0,
    seq: 0,
    mode: "observable",
    map,
    agents: log.header.roster.profiles.map((profile) => {
      const [x, y] = anchors.get(profile.home_scene) ?? [0, 0];
      return {
        id: profile.id,
        name: profile.name,
        occupation: profile.occupation,
        primary: profile.id === log.header.roster.primary,
        x,
        y,
        mode: "idle",
        activity: null,
        expression: "relaxed",
        conversation: null,
      };
    }),
    conversations: [],
  };
}

export class MockDraw {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 1;
  font = "";
  textAlign: CanvasTextAlign = "left";
  globalAlpha = 1;
  calls: { op: string; args: unknown[] }[] = [];

  private record(op: string, ...args: unknown[]) {
    this.calls.push({ op, args });
  }

  clearRect(...args: unknown[]) { this.record("clearRect", ...args); }
  fillRect(...args: unknown[]) { this.record("fillRect", ...args); }
  strokeRect(...args: unknown[]) { this.record("strokeRect", ...args); }
  fillText(...args: unknown[]) { this.record("fillText", ...args); }
  beginPath() { this.record("beginPath"); }
  arc(...args: unknown[]) { this.record("arc", ...args); }
  fill() { this.record("fill"); }
  stroke() { this.record("stroke"); }

  arcs(): { x: number; y: number; r: number }[] {
    return this.calls
      .filter((call) => call.op === "arc")
      .map((call) => ({ x: call.args[0] as number, y: call.args[1] as number, r: call.args[2] as number }));
  }

  texts(): string[] {
    return this.calls.filter((call) => call.op === "fillText").map((call) => String(call.args[0]));
  }
}
