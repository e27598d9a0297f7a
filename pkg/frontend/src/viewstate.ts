// Pure view model: fold the snapshot plus the event stream, nothing else.
// The world is never simulated client-side; every field below is derived
// from what the server said.

import {
  AgentSnapshot,
  Envelope,
  MapInfo,
  StateSnapshot,
  StreamMessage,
  ViewMode,
  isEnvelope,
} from "./types.js";

export const BUBBLE_TTL_MS = 4000;
export const TRAIL_LENGTH = 10;

export interface AgentView {
  id: string;
  name: string;
  occupation: string;
  primary: boolean;
  x: number;
  y: number;
  mode: string;
  activity: string | null;
  expression: string;
  trail: [number, number][]; // most recent last
  routeHighlight: boolean; // a user-influenced plan is in progress
}

export interface Bubble {
  agent: string;
  text: string;
  expiresAt: number;
}

export interface ViewState {
  mode: ViewMode;
  tick: number;
  lastSeq: number;
  map: MapInfo;
  agents: Map<string, AgentView>;
  bubbles: Bubble[];
}

function agentView(snapshot: AgentSnapshot): AgentView {
  return {
    id: snapshot.id,
    name: snapshot.name,
    occupation: snapshot.occupation,
    primary: snapshot.primary,
    x: snapshot.x,
    y: snapshot.y,
    mode: snapshot.mode,
    activity: snapshot.activity,
    expression: snapshot.expression,
    trail: [],
    routeHighlight: false,
  };
}

export function initialViewState(snapshot: StateSnapshot): ViewState {
  const agents = new Map<string, AgentView>();
  for (const agent of snapshot.agents) {
    agents.set(agent.id, agentView(agent));
  }
  return {
    mode: snapshot.mode,
    tick: snapshot.tick,
    lastSeq: snapshot.seq,
    map: snapshot.map,
    agents,
    bubbles: [],
  };
}

export function pruneBubbles(view: ViewState, now: number): void {
  view.bubbles = view.bubbles.filter((bubble) => bubble.expiresAt > now);
}

/** Fold one stream message into the view. Envelope state effects are always
 * tracked (so toggling back to observable shows current positions); the
 * renderer decides what is actually drawn. */
export function applyMessage(view: ViewState, message: StreamMessage, now: number): void {
  if (!isEnvelope(message)) {
    if (message.type === "expressions") {
      view.tick = message.tick;
      for (const [agentId, expression] of Object.entries(message.agents)) {
        const agent = view.agents.get(agentId);
        if (agent) agent.expression = expression;
      }
    } else if (message.type === "mode_changed") {
      view.mode = message.mode;
    }
    return;
  }
  applyEnvelope(view, message, now);
  pruneBubbles(view, now);
}

function applyEnvelope(view: ViewState, envelope: Envelope, now: number): void {
  view.lastSeq = envelope.seq;
  view.tick = envelope.tick;
  const agent = envelope.agent ? view.agents.get(envelope.agent) : undefined;
  const data = envelope.data;

  switch (envelope.type) {
    case "planned": {
      if (!agent) break;
      agent.mode = (data.steps as number) > 0 ? "moving" : agent.mode;
      agent.activity = null;
      agent.routeHighlight = Boolean(data.user);
      break;
    }
    case "moved": {
      if (!agent) break;
      agent.trail.push([agent.x, agent.y]);
      if (agent.trail.length > TRAIL_LENGTH) agent.trail.shift();
      const [x, y] = data.to as [number, number];
      agent.x = x;
      agent.y = y;
      break;
    }
    case "arrived": {
      if (!agent) break;
      agent.x = data.x as number;
      agent.y = data.y as number;
      agent.mode = "idle";
      agent.routeHighlight = false;
      break;
    }
    case "activity_started": {
      if (!agent) break;
      agent.mode = "acting";
      agent.activity = data.activity as string;
      break;
    }
    case "conversation_started": {
      for (const id of envelope.agents ?? []) {
        const member = view.agents.get(id);
        if (member) {
          member.mode = "conversing";
          member.activity = null;
        }
      }
      break;
    }
    case "dialogue_turn": {
      const text = data.text as string;
      if (envelope.visible && envelope.agent && text) {
        view.bubbles.push({ agent: envelope.agent, text, expiresAt: now + BUBBLE_TTL_MS });
      }
      break;
    }
    case "conversation_ended": {
      for (const id of envelope.agents ?? []) {
        const member = view.agents.get(id);
        if (member) member.mode = "idle";
      }
      break;
    }
    case "user_exchange":
    case "memory_compressed":
    case "plan_repaired":
      break; // no world-view effect
    default:
      console.info(`ignoring unknown event type '${envelope.type}'`);
  }
}
