// Browser app: start screen, scanning view with AR overlay, info tabs.
// All recognition happens server-side; this file is glue between the camera,
// the websocket session, and the pure modules.

import { FrameGrabber, openCamera } from "./camera.js";
import { panelFields, TAB_LABELS } from "./infopanel.js";
import { defaultIntrinsics, projectModel } from "./projection.js";
import type { ServerMessage, WireframeModel } from "./protocol.js";
import { FramePacer } from "./session.js";
import {
  initialViewState,
  reduce,
  TABS,
  UiEvent,
  ViewState,
} from "./viewstate.js";

const WS_PATH = "/session";

let state: ViewState = initialViewState();
let model: WireframeModel | null = null;
let modelForTarget = -1;
let lastRoundTripMs = 0;
let sentAt = new Map<number, number>();

const $ = (id: string) => document.getElementById(id)!;

function dispatch(event: UiEvent): void {
  const before = state;
  state = reduce(state, event);
  if (state !== before) renderPanel();
}

async function fetchModel(targetId: number): Promise<void> {
  if (modelForTarget === targetId) return;
  modelForTarget = targetId;
  try {
    const r = await fetch(`/models/${targetId}`);
    model = r.ok ? ((await r.json()) as WireframeModel) : null;
  } catch {
    model = null;
  }
}

function connect(): void {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const ws = new WebSocket(`${proto}://${location.host}${WS_PATH}`);
  const pacer = new FramePacer({ send: (t) => ws.send(t) });
  const video = $("camera") as HTMLVideoElement;
  const grabber = new FrameGrabber();
  let closed = false;

  ws.onopen = () => {
    const pump = () => {
      if (closed) return;
      const frame = grabber.grab(video);
      if (frame && state.mode === "scanning") {
        const seq = pacer.offer(frame);
        if (seq !== null) sentAt.set(seq, performance.now());
      }
      setTimeout(pump, 40);
    };
    pump();
  };

  ws.onmessage = (ev: MessageEvent) => {
    const msg = JSON.parse(ev.data as string) as ServerMessage;
    pacer.acknowledge(msg);
    if (msg.seq !== null && sentAt.has(msg.seq)) {
      lastRoundTripMs = performance.now() - sentAt.get(msg.seq)!;
      sentAt.delete(msg.seq);
    }
    dispatch({ kind: "server", msg });
    if (msg.type === "detection") void fetchModel(msg.target_id);
  };

  ws.onclose = () => {
    closed = true;
    sentAt = new Map();
    setTimeout(connect, 800); // fresh session; pacer seq restarts server-side
  };
}

function renderLoop(): void {
  const video = $("camera") as HTMLVideoElement;
  const canvas = $("overlay") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;

  const draw = () => {
    if (video.videoWidth) {
      canvas.width = video.videoWidth;
      canvas.height = video.videoHeight;
      ctx.drawImage(video, 0, 0);
      const det = state.detection;
      if (det && model) {
        // pose was computed for the downsampled frame; intrinsics scale with
        // width, and normalized coords are resolution-independent for the
        // default model anchored on the target plane
        const k = defaultIntrinsics(canvas.width, canvas.height);
        const proj = projectModel(det.pose, k, model, state.transform);
        ctx.strokeStyle = "#2ecc40";
        ctx.lineWidth = 2;
        ctx.beginPath();
        for (const [i, j] of proj.edges) {
          const a = proj.points[i]!;
          const b = proj.points[j]!;
          ctx.moveTo(a[0], a[1]);
          ctx.lineTo(b[0], b[1]);
        }
        ctx.stroke();
        ctx.fillStyle = "rgba(0,0,0,0.65)";
        ctx.fillRect(8, 8, 280, 28);
        ctx.fillStyle = "#fff";
        ctx.font = "14px system-ui";
        ctx.fillText(
          `${det.name}  ·  confidence ${(det.confidence * 100).toFixed(0)}%` +
            (lastRoundTripMs ? `  ·  ${lastRoundTripMs.toFixed(0)} ms` : ""),
          16, 27,
        );
      } else {
        ctx.fillStyle = "rgba(0,0,0,0.5)";
        ctx.fillRect(8, 8, 200, 28);
        ctx.fillStyle = "#fff";
        ctx.font = "14px system-ui";
        ctx.fillText("scanning…", 16, 27);
      }
    }
    requestAnimationFrame(draw);
  };
  draw();
}

function renderPanel(): void {
  const tabs = $("tabs");
  tabs.innerHTML = "";
  for (const tab of TABS) {
    const b = document.createElement("button");
    b.textContent = TAB_LABELS[tab];
    b.className = tab === state.tab ? "tab active" : "tab";
    b.onclick = () => dispatch({ kind: "tab", tab });
    tabs.appendChild(b);
  }
  const body = $("panel-body");
  body.innerHTML = "";
  const entry = state.detection?.content;
  if (!entry) {
    body.textContent = "Point the camera at a registered herb picture.";
  } else {
    for (const f of panelFields(entry, state.tab)) {
      const row = document.createElement("div");
      row.className = "field";
      const label = document.createElement("span");
      label.className = "label";
      label.textContent = f.label;
      const value = document.createElement("span");
      value.textContent = f.value;
      row.append(label, value);
      body.appendChild(row);
    }
  }
  const freeze = $("freeze") as HTMLButtonElement;
  freeze.textContent = state.mode === "inspecting" ? "Resume scanning" : "Freeze";
  freeze.disabled = state.mode === "scanning" && !state.detection;
}

function wireGestures(): void {
  const canvas = $("overlay") as HTMLCanvasElement;
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  canvas.addEventListener("pointerdown", (e) => {
    dragging = true;
    lastX = e.clientX;
    lastY = e.clientY;
    canvas.setPointerCapture(e.pointerId);
  });
  canvas.addEventListener("pointermove", (e) => {
    if (!dragging) return;
    dispatch({ kind: "drag", dx: e.clientX - lastX, dy: e.clientY - lastY });
    lastX = e.clientX;
    lastY = e.clientY;
  });
  canvas.addEventListener("pointerup", () => (dragging = false));
  canvas.addEventListener("wheel", (e) => {
    e.preventDefault();
    dispatch({ kind: "pinch", factor: e.deltaY < 0 ? 1.1 : 1 / 1.1 });
  }, { passive: false });
  $("freeze").addEventListener("click", () => {
    dispatch({ kind: state.mode === "inspecting" ? "unfreeze" : "freeze" });
  });
}

async function start(): Promise<void> {
  $("start-screen").style.display = "none";
  $("app").style.display = "block";
  try {
    await openCamera($("camera") as HTMLVideoElement);
  } catch (e) {
    $("panel-body").textContent = `Camera unavailable: ${e}`;
    return;
  }
  connect();
  renderLoop();
  renderPanel();
  wireGestures();
}

document.addEventListener("DOMContentLoaded", () => {
  renderPanel();
  $("start").addEventListener("click", () => void start());
});
