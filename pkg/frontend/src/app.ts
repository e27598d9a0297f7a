// Browser bootstrap: wire the API client, the event stream, the two views
// and the chat panel together. All state lives in the ViewState fold; this
// file only owns DOM plumbing.

import { ApiClient } from "./client.js";
import { ChatController } from "./chat.js";
import { EventStream } from "./client.js";
import { renderExpressions, renderWorld, TILE } from "./renderer.js";
import { ViewMode } from "./types.js";
import { applyMessage, initialViewState, pruneBubbles, ViewState } from "./viewstate.js";

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

const serverBase =
  new URLSearchParams(location.search).get("server") ?? "http://127.0.0.1:8900";

const client = new ApiClient(serverBase);
const chat = new ChatController(client);

let view: ViewState | null = null;
let followAgent: string | null = null;

const banner = element<HTMLDivElement>("banner");
const worldCanvas = element<HTMLCanvasElement>("world");
const facesCanvas = element<HTMLCanvasElement>("faces");
const transcript = element<HTMLDivElement>("transcript");
const input = element<HTMLInputElement>("chat-input");
const sendButton = element<HTMLButtonElement>("chat-send");
const toggleButton = element<HTMLButtonElement>("mode-toggle");
const agentSelect = element<HTMLSelectElement>("agent-select");
const followBox = element<HTMLInputElement>("follow");
const toast = element<HTMLDivElement>("toast");

function showBanner(text: string | null): void {
  banner.textContent = text ?? "";
  banner.style.display = text ? "block" : "none";
}

function showToast(text: string): void {
  toast.textContent = text;
  toast.style.display = "block";
  setTimeout(() => (toast.style.display = "none"), 3000);
}

function applyModeToDom(mode: ViewMode): void {
  worldCanvas.style.display = mode === "observable" ? "block" : "none";
  facesCanvas.style.display = mode === "observable" ? "none" : "block";
  toggleButton.textContent =
    mode === "observable" ? "Switch to unobservable" : "Switch to observable";
}

function renderTranscript(): void {
  transcript.innerHTML = "";
  for (const line of chat.lines) {
    const div = document.createElement("div");
    div.className = `line ${line.role}`;
    div.textContent = `${line.role === "user" ? "you" : chat.agentId}: ${line.text}`;
    transcript.appendChild(div);
  }
  transcript.scrollTop = transcript.scrollHeight;
}

function frame(): void {
  if (view) {
    pruneBubbles(view, Date.now());
    if (view.mode === "observable") {
      const ctx = worldCanvas.getContext("2d");
      if (ctx) {
        if (followAgent) {
          const agent = view.agents.get(followAgent);
          if (agent) {
            const box = worldCanvas.parentElement;
            if (box) {
              box.scrollLeft = agent.x * TILE - box.clientWidth / 2;
              box.scrollTop = agent.y * TILE - box.clientHeight / 2;
            }
          }
        }
        renderWorld(ctx, view);
      }
    } else {
      const ctx = facesCanvas.getContext("2d");
      if (ctx) renderExpressions(ctx, view, facesCanvas.width);
    }
  }
  requestAnimationFrame(frame);
}

async function connect(): Promise<void> {
  showBanner("connecting...");
  let snapshot;
  try {
    snapshot = await client.state();
  } catch (error) {
    showBanner(`cannot reach ${serverBase} — retrying`);
    setTimeout(connect, 2000);
    return;
  }
  view = initialViewState(snapshot);
  worldCanvas.width = snapshot.map.width * TILE;
  worldCanvas.height = snapshot.map.height * TILE;
  applyModeToDom(view.mode);

  agentSelect.innerHTML = "";
  for (const agent of snapshot.agents) {
    const option = document.createElement("option");
    option.value = agent.id;
    option.textContent = `${agent.name} (${agent.occupation})`;
    if (agent.primary) option.selected = true;
    agentSelect.appendChild(option);
  }
  await chat.open(agentSelect.value);
  renderTranscript();

  const stream = new EventStream(serverBase, {
    onMessage: (message) => {
      if (view) {
        applyMessage(view, message, Date.now());
        if ("mode" in message && message.type === "mode_changed") {
          applyModeToDom(view.mode);
        }
      }
    },
    onStatus: (connected) => showBanner(connected ? null : "stream lost — reconnecting"),
  });
  stream.start(snapshot.seq);
}

sendButton.addEventListener("click", async () => {
  const result = await chat.send(input.value);
  if (result.ok) {
    input.value = "";
    renderTranscript();
    if (result.acted) showToast(`${chat.agentId} is acting on your suggestion`);
  } else if (result.error && result.error !== "nothing to send") {
    showToast(result.error);
  }
});

input.addEventListener("keydown", (event) => {
  if (event.key === "Enter") sendButton.click();
});

input.addEventListener("input", () => {
  sendButton.disabled = input.value.trim() === "";
});

toggleButton.addEventListener("click", async () => {
  if (!view) return;
  const next: ViewMode = view.mode === "observable" ? "unobservable" : "observable";
  try {
    const acknowledged = await client.setMode(next);
    view.mode = acknowledged.mode;
    applyModeToDom(acknowledged.mode);
  } catch {
    showToast("mode change failed — staying put");
  }
});

agentSelect.addEventListener("change", async () => {
  await chat.close().catch(() => undefined);
  await chat.open(agentSelect.value);
  renderTranscript();
});

followBox.addEventListener("change", () => {
  followAgent = followBox.checked ? agentSelect.value : null;
});

sendButton.disabled = true;
requestAnimationFrame(frame);
connect();
