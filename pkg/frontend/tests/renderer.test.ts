// Rendering against a recording mock context.

import { describe, expect, it } from "vitest";

import { TILE, agentColor, renderExpressions, renderWorld } from "../src/renderer.js";
import { applyMessage, initialViewState } from "../src/viewstate.js";
import { MockDraw, loadFixtureLog, snapshotFromHeader } from "./helpers.js";

function freshView() {
  const log = loadFixtureLog();
  return { log, view: initialViewState(snapshotFromHeader(log)) };
}

describe("world renderer", () => {
  it("draws every agent exactly once at its tile", () => {
    const { view } = freshView();
    const ctx = new MockDraw();
    renderWorld(ctx, view);
    const agentArcs = ctx.arcs().filter((arc) => arc.r === TILE / 2 - 3);
    expect(agentArcs).toHaveLength(view.agents.size);
    for (const agent of view.agents.values()) {
      expect(
        agentArcs.some(
          (arc) => arc.x === agent.x * TILE + TILE / 2 && arc.y === agent.y * TILE + TILE / 2,
        ),
      ).toBe(true);
    }
  });

  it("a moved event shifts the sprite by exactly one tile", () => {
    const { log, view } = freshView();
    const moved = log.events.find((event) => event.type === "moved")!;
    const ctx1 = new MockDraw();
    renderWorld(ctx1, view);
    for (const envelope of log.events) {
      applyMessage(view, envelope, 0);
      if (envelope.seq === moved.seq) break;
    }
    const ctx2 = new MockDraw();
    renderWorld(ctx2, view);
    const find = (ctx: MockDraw) =>
      ctx.arcs().filter((arc) => arc.r === TILE / 2 - 3);
    const before = find(ctx1);
    const after = find(ctx2);
    let maxShift = 0;
    for (let i = 0; i < before.length; i++) {
      const dx = Math.abs(after[i].x - before[i].x);
      const dy = Math.abs(after[i].y - before[i].y);
      maxShift = Math.max(maxShift, dx + dy);
    }
    expect(maxShift).toBeLessThanOrEqual(TILE); // one tile of pixels, no jumps
  });

  it("renders scene labels and activity labels", () => {
    const { log, view } = freshView();
    for (const envelope of log.events) {
      applyMessage(view, envelope, 0);
      if (envelope.type === "activity_started") break;
    }
    const ctx = new MockDraw();
    renderWorld(ctx, view);
    const texts = ctx.texts();
    expect(texts).toContain("restaurant");
    const acting = [...view.agents.values()].find((agent) => agent.mode === "acting")!;
    expect(texts).toContain(acting.activity!);
  });

  it("shows a bubble above the speaker", () => {
    const { log, view } = freshView();
    const turn = log.events.find(
      (event) => event.type === "dialogue_turn" && (event.data.text as string).length > 0,
    )!;
    for (const envelope of log.events) {
      applyMessage(view, envelope, 1000);
      if (envelope.seq === turn.seq) break;
    }
    const ctx = new MockDraw();
    renderWorld(ctx, view);
    const spoken = (turn.data.text as string).slice(0, 20);
    expect(ctx.texts().some((text) => text.startsWith(spoken))).toBe(true);
  });
});

describe("expressions renderer", () => {
  it("draws one face per agent and no spatial data", () => {
    const { view } = freshView();
    const ctx = new MockDraw();
    renderExpressions(ctx, view, 520);
    const faces = ctx.arcs().filter((arc) => arc.r === 42);
    expect(faces).toHaveLength(view.agents.size);
    for (const agent of view.agents.values()) {
      expect(ctx.texts()).toContain(`${agent.name} · ${agent.expression}`);
    }
  });
});

describe("palette", () => {
  it("is deterministic per agent", () => {
    expect(agentColor("anty")).toBe(agentColor("anty"));
    expect(agentColor("anty")).toMatch(/^#/);
  });
});
