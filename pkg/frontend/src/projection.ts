// Client-side mirror of the engine's projection: server pose anchors the
// model, the user transform composes on top (rotation and scale about the
// model's centroid).

import type { PoseMsg, WireframeModel } from "./protocol.js";
import type { ModelTransform } from "./viewstate.js";
import { rotateVec } from "./quaternion.js";

export interface Intrinsics {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
}

export function defaultIntrinsics(frameW: number, frameH: number): Intrinsics {
  return { fx: 0.9 * frameW, fy: 0.9 * frameW, cx: frameW / 2, cy: frameH / 2 };
}

export type ScreenPoint = [number, number] | null; // null: behind the camera

export interface ProjectedModel {
  points: ScreenPoint[];
  edges: Array<[number, number]>; // only edges with both endpoints visible
}

function centroid(vertices: number[][]): [number, number, number] {
  let x = 0, y = 0, z = 0;
  for (const v of vertices) {
    x += v[0];
    y += v[1];
    z += v[2];
  }
  const n = vertices.length || 1;
  return [x / n, y / n, z / n];
}

export function projectModel(pose: PoseMsg, k: Intrinsics,
                             model: WireframeModel,
                             transform: ModelTransform): ProjectedModel {
  const r = pose.r;
  const t = pose.t;
  const anchor = centroid(model.vertices);
  const points: ScreenPoint[] = model.vertices.map((v) => {
    const local: [number, number, number] = [
      v[0] - anchor[0], v[1] - anchor[1], v[2] - anchor[2],
    ];
    const spun = rotateVec(transform.rotation, local);
    const plane = [
      anchor[0] + transform.scale * spun[0],
      anchor[1] + transform.scale * spun[1],
      anchor[2] + transform.scale * spun[2],
    ];
    // plane coords are y-down, so "toward the viewer" is -z
    const px = plane[0], py = plane[1], pz = -plane[2];
    const cx = r[0] * px + r[1] * py + r[2] * pz + t[0];
    const cy = r[3] * px + r[4] * py + r[5] * pz + t[1];
    const cz = r[6] * px + r[7] * py + r[8] * pz + t[2];
    if (cz <= 1e-9) return null;
    return [k.fx * cx / cz + k.cx, k.fy * cy / cz + k.cy];
  });
  const edges: Array<[number, number]> = [];
  for (const [i, j] of model.edges) {
    if (points[i] !== null && points[j] !== null) edges.push([i, j]);
  }
  return { points, edges };
}

export function screenExtent(projected: ProjectedModel): number {
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  let any = false;
  for (const p of projected.points) {
    if (p === null) continue;
    any = true;
    minX = Math.min(minX, p[0]);
    maxX = Math.max(maxX, p[0]);
    minY = Math.min(minY, p[1]);
    maxY = Math.max(maxY, p[1]);
  }
  if (!any) return 0;
  return Math.hypot(maxX - minX, maxY - minY);
}
