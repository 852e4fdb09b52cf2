// Minimal unit-quaternion helpers for the user's model rotation.

export type Quat = [number, number, number, number]; // [w, x, y, z]

export const IDENTITY: Quat = [1, 0, 0, 0];

export function fromAxisAngle(ax: number, ay: number, az: number,
                              angle: number): Quat {
  const n = Math.hypot(ax, ay, az);
  if (n === 0) return [...IDENTITY] as Quat;
  const s = Math.sin(angle / 2) / n;
  return [Math.cos(angle / 2), ax * s, ay * s, az * s];
}

export function multiply(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function normalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  return n === 0 ? [...IDENTITY] as Quat : [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function rotateVec(q: Quat, v: [number, number, number]):
    [number, number, number] {
  const [w, x, y, z] = q;
  const [vx, vy, vz] = v;
  // q * (0, v) * q^-1 expanded
  const tx = 2 * (y * vz - z * vy);
  const ty = 2 * (z * vx - x * vz);
  const tz = 2 * (x * vy - y * vx);
  return [
    vx + w * tx + (y * tz - z * ty),
    vy + w * ty + (z * tx - x * tz),
    vz + w * tz + (x * ty - y * tx),
  ];
}

export function norm(q: Quat): number {
  return Math.hypot(q[0], q[1], q[2], q[3]);
}
