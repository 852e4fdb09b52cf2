"""Frame-in / detection-out streaming service with content lookup.

One WebSocket session per camera: the client sends pre-grayscaled frames as
base64 JSON messages, the server answers each with a detection verdict
stabilized by display hysteresis (a new target must win k consecutive
frames before it replaces what is shown). The database and catalog are
immutable after startup, so sessions never need to coordinate.
"""

import base64
import binascii
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from herbar.content import Catalog, get_entry
from herbar.errors import NotFound, SingularHomography
from herbar.features import ExtractParams, extract
from herbar.matcher import RecognizeParams, recognize
from herbar.pose import (
    CameraIntrinsics,
    decompose_homography,
    default_intrinsics,
    plane_homography,
)
from herbar.targetdb import TargetDatabase, rate_target

MAX_FRAME_W = 1920
MAX_FRAME_H = 1080
DEFAULT_HYSTERESIS = 3
MIN_RECOGNIZABLE_SIDE = 64


class MalformedFrame(Exception):
    pass


@dataclass
class SessionState:
    """Display hysteresis: the reported target changes only after k
    consecutive frames agree on a different id (or on none)."""

    k: int = DEFAULT_HYSTERESIS
    displayed: int | None = None
    candidate: int | None = None
    run: int = 0
    last_payload: dict | None = None
    last_seq: int = -1

    def update(self, verdict_id, payload):
        if verdict_id == self.displayed:
            self.candidate = None
            self.run = 0
            if payload is not None:
                self.last_payload = payload
        else:
            if verdict_id == self.candidate:
                self.run += 1
            else:
                self.candidate = verdict_id
                self.run = 1
            if self.run >= self.k:
                self.displayed = verdict_id
                self.last_payload = payload
                self.candidate = None
                self.run = 0
        return self.displayed


@dataclass
class RecognitionService:
    db: TargetDatabase
    catalog: Catalog
    models_dir: Path | None = None
    recognize_params: RecognizeParams = field(default_factory=RecognizeParams)
    extract_params: ExtractParams = field(default_factory=ExtractParams)
    hysteresis: int = DEFAULT_HYSTERESIS
    intrinsics: CameraIntrinsics | None = None

    def new_session(self) -> SessionState:
        return SessionState(k=self.hysteresis)

    def list_targets(self) -> list[dict]:
        return [
            {"id": t.id, "name": t.name, "stars": rate_target(t).stars}
            for t in self.db.targets
        ]

    def get_content(self, content_id: str) -> dict:
        return get_entry(self.catalog, content_id).to_dict()

    def get_model(self, target_id: int) -> dict:
        target = self.db.get(target_id)
        if target is None or self.models_dir is None:
            raise NotFound(str(target_id))
        for stem in (target.content_id, "default"):
            path = Path(self.models_dir) / f"{stem}.json"
            if stem and path.is_file():
                return json.loads(path.read_text("utf-8"))
        raise NotFound(str(target_id))

    def _decode_frame(self, msg: dict, session: SessionState):
        if msg.get("type") != "frame":
            raise MalformedFrame(f"unexpected message type {msg.get('type')!r}")
        seq = msg.get("seq")
        if not isinstance(seq, int) or seq < 0 or seq >= 2**64:
            raise MalformedFrame("seq must be a u64")
        if seq <= session.last_seq:
            raise MalformedFrame(
                f"seq {seq} is not greater than previous {session.last_seq}"
            )
        w = msg.get("width")
        h = msg.get("height")
        if not isinstance(w, int) or not isinstance(h, int) or w < 1 or h < 1:
            raise MalformedFrame("width/height must be positive integers")
        if w > MAX_FRAME_W or h > MAX_FRAME_H:
            raise MalformedFrame(f"frame exceeds {MAX_FRAME_W}x{MAX_FRAME_H}")
        try:
            raw = base64.b64decode(msg.get("pixels", ""), validate=True)
        except (binascii.Error, TypeError) as e:
            raise MalformedFrame(f"bad base64 payload: {e}") from e
        if len(raw) != w * h:
            raise MalformedFrame(
                f"payload is {len(raw)} bytes, expected {w * h}"
            )
        return seq, np.frombuffer(raw, np.uint8).reshape(h, w)

    def _detection_payload(self, det, frame_w: int, frame_h: int):
        target = self.db.get(det.target_id)
        k = self.intrinsics or default_intrinsics(frame_w, frame_h)
        try:
            pose = decompose_homography(
                plane_homography(det.homography, target.image_width), k
            )
        except SingularHomography:
            return None
        try:
            content = self.get_content(target.content_id)
        except NotFound:
            content = None
        return {
            "target_id": target.id,
            "name": target.name,
            "confidence": float(det.confidence),
            "inliers": int(det.inliers),
            "homography": [float(v) for v in det.homography.ravel()],
            "pose": {
                "r": [float(v) for v in pose.r.ravel()],
                "t": [float(v) for v in pose.t],
            },
            "content": content,
        }

    def handle_frame(self, session: SessionState, msg: dict) -> dict:
        """Process one frame message; always returns a response message."""
        try:
            seq, frame = self._decode_frame(msg, session)
        except MalformedFrame as e:
            return {
                "type": "error",
                "error": "malformed_frame",
                "detail": str(e),
                "seq": msg.get("seq") if isinstance(msg.get("seq"), int) else None,
            }
        session.last_seq = seq

        payload = None
        if frame.shape[0] >= MIN_RECOGNIZABLE_SIDE and frame.shape[1] >= MIN_RECOGNIZABLE_SIDE:
            fs = extract(frame, self.extract_params)
            det = recognize(fs, self.db, self.recognize_params)
            if det is not None:
                payload = self._detection_payload(
                    det, frame.shape[1], frame.shape[0]
                )
        verdict_id = payload["target_id"] if payload else None

        displayed = session.update(verdict_id, payload)
        if displayed is None or session.last_payload is None:
            return {"type": "no_detection", "seq": seq}
        return {"type": "detection", "seq": seq, **session.last_payload}


def create_app(service: RecognitionService, static_dir=None):
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect
    from fastapi.responses import JSONResponse

    app = FastAPI(title="herbar recognition service")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/targets")
    def targets():
        return service.list_targets()

    @app.get("/content/{content_id}")
    def content(content_id: str):
        try:
            return service.get_content(content_id)
        except NotFound:
            return JSONResponse(
                {"error": "not_found", "content_id": content_id}, status_code=404
            )

    @app.get("/models/{target_id}")
    def model(target_id: int):
        try:
            return service.get_model(target_id)
        except NotFound:
            return JSONResponse(
                {"error": "not_found", "target_id": target_id}, status_code=404
            )

    @app.websocket("/session")
    async def session_endpoint(ws: WebSocket):
        await ws.accept()
        session = service.new_session()
        while True:
            try:
                text = await ws.receive_text()
            except WebSocketDisconnect:
                return
            try:
                msg = json.loads(text)
                if not isinstance(msg, dict):
                    raise ValueError("message must be an object")
            except ValueError as e:
                await ws.send_text(json.dumps({
                    "type": "error",
                    "error": "malformed_frame",
                    "detail": f"invalid JSON message: {e}",
                    "seq": None,
                }))
                continue
            await ws.send_text(json.dumps(service.handle_frame(session, msg)))

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True))

    return app
