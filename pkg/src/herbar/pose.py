"""Planar pose from a verified homography, projection, wireframe overlay.

Target-plane coordinates are normalized to unit width before decomposition,
so translations come out in target-width units. The two algebraic sign
solutions are disambiguated by cheirality (the target must sit in front of
the camera).
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from herbar.errors import BehindCamera, SingularHomography
from herbar.imaging import as_rgba

_Z_EPS = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def inverse(self) -> np.ndarray:
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.cx / self.fx],
                [0.0, 1.0 / self.fy, -self.cy / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )


def default_intrinsics(frame_w: int, frame_h: int) -> CameraIntrinsics:
    """Uncalibrated fallback: f = 0.9 * width, principal point at center."""
    return CameraIntrinsics(
        fx=0.9 * frame_w, fy=0.9 * frame_w,
        cx=frame_w / 2.0, cy=frame_h / 2.0,
    )


def load_intrinsics(source) -> CameraIntrinsics:
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text("utf-8"))
    else:
        doc = json.load(source)
    return CameraIntrinsics(
        fx=float(doc["fx"]), fy=float(doc["fy"]),
        cx=float(doc["cx"]), cy=float(doc["cy"]),
    )


@dataclass(frozen=True)
class Pose:
    r: np.ndarray  # 3x3 rotation
    t: np.ndarray  # translation, target-width units


@dataclass(frozen=True)
class WireframeModel:
    name: str
    vertices: np.ndarray  # (n, 3), target-plane units, z up from the picture
    edges: tuple  # pairs of vertex indices

    def __post_init__(self):
        if len(self.edges) < 1:
            raise ValueError("model needs at least one edge")
        n = len(self.vertices)
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for {n} vertices")


def model_from_dict(doc: dict) -> WireframeModel:
    return WireframeModel(
        name=str(doc["name"]),
        vertices=np.asarray(doc["vertices"], np.float64).reshape(-1, 3),
        edges=tuple((int(i), int(j)) for i, j in doc["edges"]),
    )


def load_model(source) -> WireframeModel:
    if isinstance(source, (str, Path)):
        doc = json.loads(Path(source).read_text("utf-8"))
    else:
        doc = json.load(source)
    return model_from_dict(doc)


def model_to_dict(model: WireframeModel) -> dict:
    return {
        "name": model.name,
        "vertices": [list(map(float, v)) for v in model.vertices],
        "edges": [list(e) for e in model.edges],
    }


def plane_homography(h_px: np.ndarray, target_width: int) -> np.ndarray:
    """Re-express a pixel-coordinate homography on the unit-width target
    plane: both plane axes are scaled by the target width so the recovered
    rotation stays orthonormal and t lands in target-width units."""
    s = np.array(
        [[float(target_width), 0.0, 0.0],
         [0.0, float(target_width), 0.0],
         [0.0, 0.0, 1.0]]
    )
    return np.asarray(h_px, np.float64) @ s


def compose_homography(pose: Pose, k: CameraIntrinsics) -> np.ndarray:
    """Forward model: H = K [r1 r2 t], scaled so h33 = 1."""
    m = np.column_stack([pose.r[:, 0], pose.r[:, 1], pose.t])
    h = k.matrix() @ m
    if abs(h[2, 2]) > 1e-12:
        h = h / h[2, 2]
    return h


def decompose_homography(h, k: CameraIntrinsics) -> Pose:
    """Recover (R, t) from a plane-to-image homography.

    B = K^-1 H gives [r1 r2 t] up to scale; the scale is fixed by forcing
    the mean rotation-column norm to 1, the sign by t_z > 0, and R is the
    rotation nearest [r1 r2 r1xr2] (polar decomposition).
    """
    hm = np.asarray(h, np.float64).reshape(3, 3)
    if abs(np.linalg.det(hm)) <= 1e-12:
        raise SingularHomography("homography is singular")
    b = k.inverse() @ hm
    norm1 = np.linalg.norm(b[:, 0])
    norm2 = np.linalg.norm(b[:, 1])
    if norm1 + norm2 <= 1e-12:
        raise SingularHomography("rotation columns vanish")
    lam = 2.0 / (norm1 + norm2)
    if lam * b[2, 2] < 0:
        b = -b
    r1 = lam * b[:, 0]
    r2 = lam * b[:, 1]
    r3 = np.cross(r1, r2)
    t = lam * b[:, 2]
    if t[2] <= 0:
        raise SingularHomography("target plane not in front of the camera")
    u, _, vt = np.linalg.svd(np.column_stack([r1, r2, r3]))
    if np.linalg.det(u @ vt) < 0:
        u[:, -1] = -u[:, -1]
    return Pose(r=u @ vt, t=t)


def project_points(pose: Pose, k: CameraIntrinsics, pts) -> np.ndarray:
    """Pinhole projection of 3-D target-plane points to pixel coordinates."""
    uv, ok = project_points_checked(pose, k, pts)
    if not ok.all():
        raise BehindCamera(f"points {np.nonzero(~ok)[0].tolist()} have z <= 0")
    return uv


def project_points_checked(pose: Pose, k: CameraIntrinsics, pts):
    """Like project_points, but returns (uv, valid_mask) instead of raising;
    invalid rows are NaN."""
    p = np.asarray(pts, np.float64).reshape(-1, 3)
    cam = p @ pose.r.T + pose.t
    z = cam[:, 2]
    ok = z > _Z_EPS
    zsafe = np.where(ok, z, 1.0)
    u = k.fx * cam[:, 0] / zsafe + k.cx
    v = k.fy * cam[:, 1] / zsafe + k.cy
    uv = np.column_stack([u, v])
    uv[~ok] = np.nan
    return uv, ok


def _round_half_away(v: float) -> int:
    return int(np.floor(v + 0.5)) if v >= 0 else int(np.ceil(v - 0.5))


def bresenham(x0: int, y0: int, x1: int, y1: int):
    """Integer line rasterization; yields every pixel from (x0,y0) to
    (x1,y1) inclusive."""
    dx = abs(x1 - x0)
    sx = 1 if x0 < x1 else -1
    dy = -abs(y1 - y0)
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        yield x, y
        if x == x1 and y == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


def render_overlay(frame, pose: Pose, k: CameraIntrinsics,
                   model: WireframeModel, color=(0, 255, 0)) -> np.ndarray:
    """Draw the model's edges over a copy of the frame.

    Edges with an endpoint behind the camera are skipped; drawn pixels get
    the given RGB color with full alpha.
    """
    out = as_rgba(frame).copy()
    h, w = out.shape[:2]
    # Plane coords follow image coords (y down), so the camera-facing normal
    # is -z; model files author z as height toward the viewer.
    verts = model.vertices.copy()
    verts[:, 2] = -verts[:, 2]
    uv, ok = project_points_checked(pose, k, verts)
    rgba = (int(color[0]), int(color[1]), int(color[2]), 255)
    for i, j in model.edges:
        if not (ok[i] and ok[j]):
            continue
        x0 = _round_half_away(uv[i, 0])
        y0 = _round_half_away(uv[i, 1])
        x1 = _round_half_away(uv[j, 0])
        y1 = _round_half_away(uv[j, 1])
        # Bresenham pixels stay inside the segment's bounding box, so an
        # edge whose box misses the frame draws nothing.
        if max(x0, x1) < 0 or min(x0, x1) >= w or max(y0, y1) < 0 or min(y0, y1) >= h:
            continue
        for x, y in bresenham(x0, y0, x1, y1):
            if 0 <= x < w and 0 <= y < h:
                out[y, x] = rgba
    return out
