// Wire types mirroring the engine's HTTP/WS contract.

export type ViewMode = "observable" | "unobservable";

export interface SceneInfo {
  id: string;
  category: string;
  label: string;
  tiles: [number, number][];
}

export interface MapInfo {
  width: number;
  height: number;
  rows: string[]; // '.' walkable, '#' blocked
  scenes: SceneInfo[];
}

export interface AgentSnapshot {
  id: string;
  name: string;
  occupation: string;
  primary: boolean;
  x: number;
  y: number;
  mode: string;
  activity: string | null;
  expression: string;
  conversation: string | null;
}

export interface StateSnapshot {
  tick: number;
  seq: number;
  mode: ViewMode;
  map: MapInfo;
  agents: AgentSnapshot[];
  conversations: { id: string; participants: string[]; turns: number }[];
}

export interface Envelope {
  seq: number;
  tick: number;
  type: string;
  agent?: string;
  agents?: string[];
  data: Record<string, unknown>;
  visible: boolean;
}

export interface ExpressionsFrame {
  type: "expressions";
  tick: number;
  agents: Record<string, string>;
}

export interface ModeChangedFrame {
  type: "mode_changed";
  mode: ViewMode;
}

export type StreamMessage = Envelope | ExpressionsFrame | ModeChangedFrame;

export function isEnvelope(message: StreamMessage): message is Envelope {
  return "seq" in message;
}
