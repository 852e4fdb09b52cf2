// The UI state machine. Pure: feed it server messages and gestures, render
// what comes out. Detection identity is server authority; gestures only
// ever touch the view transform and active tab.

import type { DetectionMessage, ServerMessage } from "./protocol.js";
import { IDENTITY, Quat, fromAxisAngle, multiply, normalize } from "./quaternion.js";

export type Mode = "scanning" | "inspecting";
export type Tab = "species" | "morphology" | "ecology";

export const TABS: Tab[] = ["species", "morphology", "ecology"];

export const MIN_SCALE = 0.25;
export const MAX_SCALE = 4;
const DRAG_RADIANS_PER_PX = 0.01;

export interface ModelTransform {
  rotation: Quat;
  scale: number;
}

export interface ViewState {
  mode: Mode;
  detection: DetectionMessage | null;
  transform: ModelTransform;
  tab: Tab;
}

export type UiEvent =
  | { kind: "server"; msg: ServerMessage }
  | { kind: "freeze" }
  | { kind: "unfreeze" }
  | { kind: "pinch"; factor: number }
  | { kind: "drag"; dx: number; dy: number }
  | { kind: "tab"; tab: Tab };

export function initialViewState(): ViewState {
  return {
    mode: "scanning",
    detection: null,
    transform: { rotation: [...IDENTITY] as Quat, scale: 1 },
    tab: "species",
  };
}

function clampScale(s: number): number {
  return Math.min(MAX_SCALE, Math.max(MIN_SCALE, s));
}

export function reduce(state: ViewState, event: UiEvent): ViewState {
  switch (event.kind) {
    case "server": {
      const msg = event.msg;
      if (state.mode === "inspecting") return state; // frozen holds the last detection
      if (msg.type === "detection") return { ...state, detection: msg };
      if (msg.type === "no_detection") return { ...state, detection: null };
      return state; // errors don't change what is shown
    }
    case "freeze":
      if (state.detection === null) return state;
      return { ...state, mode: "inspecting" };
    case "unfreeze":
      return {
        ...state,
        mode: "scanning",
        transform: { rotation: [...IDENTITY] as Quat, scale: 1 },
      };
    case "pinch":
      if (!(event.factor > 0)) return state;
      return {
        ...state,
        transform: {
          ...state.transform,
          scale: clampScale(state.transform.scale * event.factor),
        },
      };
    case "drag": {
      // horizontal drag yaws about the plane normal, vertical drag pitches
      const yaw = fromAxisAngle(0, 0, 1, event.dx * DRAG_RADIANS_PER_PX);
      const pitch = fromAxisAngle(1, 0, 0, event.dy * DRAG_RADIANS_PER_PX);
      const rotation = normalize(
        multiply(pitch, multiply(yaw, state.transform.rotation)),
      );
      return { ...state, transform: { ...state.transform, rotation } };
    }
    case "tab":
      return { ...state, tab: event.tab };
  }
}
