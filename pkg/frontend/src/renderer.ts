// Canvas drawing for the two views. Everything renders against a small
// 2D-context subset so tests can pass a recording mock instead of a real
// canvas.

import { ViewState } from "./viewstate.js";

export const TILE = 24;

export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: CanvasTextAlign;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
}

const CATEGORY_TINT: Record<string, string> = {
  dining: "#f6d8b8",
  leisure: "#cde8c4",
  culture: "#d7d3ee",
  social: "#f3c9d7",
};

const AGENT_PALETTE = ["#d1495b", "#30638e", "#3a7d44", "#8d6a9f", "#c77d1f", "#1f8a8a"];

export function agentColor(agentId: string): string {
  let hash = 0;
  for (const ch of agentId) hash = (hash * 31 + ch.charCodeAt(0)) >>> 0;
  return AGENT_PALETTE[hash % AGENT_PALETTE.length];
}

export function renderWorld(ctx: Draw2D, view: ViewState): void {
  const { map } = view;
  ctx.clearRect(0, 0, map.width * TILE, map.height * TILE);

  for (let y = 0; y < map.height; y++) {
    for (let x = 0; x < map.width; x++) {
      ctx.fillStyle = map.rows[y][x] === "#" ? "#3b3a38" : "#efece6";
      ctx.fillRect(x * TILE, y * TILE, TILE, TILE);
    }
  }
  for (const scene of map.scenes) {
    ctx.fillStyle = CATEGORY_TINT[scene.category] ?? "#ddd";
    for (const [x, y] of scene.tiles) {
      ctx.fillRect(x * TILE, y * TILE, TILE, TILE);
    }
    const [ax, ay] = scene.tiles[0];
    ctx.fillStyle = "#555";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "left";
    ctx.fillText(scene.label, ax * TILE + 2, ay * TILE - 3);
  }

  for (const agent of view.agents.values()) {
    const color = agentColor(agent.id);
    agent.trail.forEach(([x, y], index) => {
      ctx.globalAlpha = ((index + 1) / (agent.trail.length + 1)) * 0.4;
      ctx.fillStyle = color;
      ctx.fillRect(x * TILE + 8, y * TILE + 8, TILE - 16, TILE - 16);
    });
    ctx.globalAlpha = 1;
  }

  for (const agent of view.agents.values()) {
    const cx = agent.x * TILE + TILE / 2;
    const cy = agent.y * TILE + TILE / 2;
    if (agent.routeHighlight) {
      ctx.strokeStyle = "#e6b422";
      ctx.lineWidth = 3;
      ctx.strokeRect(agent.x * TILE + 1, agent.y * TILE + 1, TILE - 2, TILE - 2);
    }
    ctx.beginPath();
    ctx.fillStyle = agentColor(agent.id);
    ctx.arc(cx, cy, TILE / 2 - 3, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = "#fff";
    ctx.font = "bold 11px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(agent.name[0] ?? "?", cx, cy + 4);
    if (agent.mode === "acting" && agent.activity) {
      ctx.fillStyle = "#333";
      ctx.font = "9px sans-serif";
      ctx.fillText(agent.activity, cx, cy + TILE - 2);
    }
  }

  for (const bubble of view.bubbles) {
    const speaker = view.agents.get(bubble.agent);
    if (!speaker) continue;
    const text = bubble.text.length > 38 ? bubble.text.slice(0, 35) + "..." : bubble.text;
    const cx = speaker.x * TILE + TILE / 2;
    const top = speaker.y * TILE - 18;
    ctx.fillStyle = "#ffffff";
    ctx.strokeStyle = "#888";
    ctx.lineWidth = 1;
    const width = Math.max(40, text.length * 5.4);
    ctx.fillRect(cx - width / 2, top - 12, width, 16);
    ctx.strokeRect(cx - width / 2, top - 12, width, 16);
    ctx.fillStyle = "#222";
    ctx.font = "9px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(text, cx, top);
  }
}

const FACE_MOUTHS: Record<string, (ctx: Draw2D, cx: number, cy: number) => void> = {
  relaxed: (ctx, cx, cy) => {
    ctx.beginPath();
    ctx.arc(cx, cy + 6, 10, 0.15 * Math.PI, 0.85 * Math.PI);
    ctx.stroke();
  },
  hurried: (ctx, cx, cy) => {
    ctx.fillRect(cx - 8, cy + 10, 16, 3);
  },
  focused: (ctx, cx, cy) => {
    ctx.fillRect(cx - 6, cy + 10, 12, 2);
  },
  chatty: (ctx, cx, cy) => {
    ctx.beginPath();
    ctx.arc(cx, cy + 8, 6, 0, Math.PI * 2);
    ctx.stroke();
  },
};

/** Expressions-only view: one animated face per agent, no spatial data. */
export function renderExpressions(ctx: Draw2D, view: ViewState, width: number): void {
  const agents = [...view.agents.values()];
  ctx.clearRect(0, 0, width, 140 * Math.ceil(agents.length / 3) + 20);
  agents.forEach((agent, index) => {
    const cx = 80 + (index % 3) * 160;
    const cy = 70 + Math.floor(index / 3) * 140;
    ctx.beginPath();
    ctx.fillStyle = agentColor(agent.id);
    ctx.arc(cx, cy, 42, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = "#fff";
    ctx.beginPath();
    ctx.arc(cx - 14, cy - 8, 5, 0, Math.PI * 2);
    ctx.arc(cx + 14, cy - 8, 5, 0, Math.PI * 2);
    ctx.fill();
    ctx.strokeStyle = "#fff";
    ctx.lineWidth = 2;
    (FACE_MOUTHS[agent.expression] ?? FACE_MOUTHS.relaxed)(ctx, cx, cy);
    ctx.fillStyle = "#333";
    ctx.font = "12px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(`${agent.name} · ${agent.expression}`, cx, cy + 64);
  });
}
