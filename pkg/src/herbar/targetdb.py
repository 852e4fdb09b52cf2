"""Target registration, quality rating, and the .hrb database format.

The database file is little-endian throughout: magic "HRB1", u32 version,
u32 target count, u32 reserved, then per target id/name/dims/keypoints/
descriptors/content_id, closed by a CRC32 of everything before it. Features
only are stored, never pixels.
"""

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from herbar.errors import (
    BadMagic,
    ChecksumMismatch,
    DatabaseFormatError,
    DuplicateName,
    TooFewFeatures,
    TruncatedFile,
    UnsupportedVersion,
)
from herbar.features import GRID_DIV, ExtractParams, FeatureSet, extract
from herbar.imaging import as_gray, to_grayscale

MAGIC = b"HRB1"
FORMAT_VERSION = 1
MIN_KEYPOINTS = 50

_KP_DTYPE = np.dtype(
    [("x", "<f4"), ("y", "<f4"), ("level", "u1"), ("angle", "<f4"), ("score", "<f4")]
)


@dataclass(frozen=True)
class Target:
    id: int
    name: str
    image_width: int
    image_height: int
    features: FeatureSet
    content_id: str


@dataclass(frozen=True)
class TargetDatabase:
    format_version: int = FORMAT_VERSION
    targets: tuple = ()

    def __len__(self):
        return len(self.targets)

    def get(self, target_id: int):
        for t in self.targets:
            if t.id == target_id:
                return t
        return None

    def next_id(self) -> int:
        return self.targets[-1].id + 1 if self.targets else 1


@dataclass(frozen=True)
class QualityRating:
    stars: int
    keypoint_count: int
    spread: float


def rate_features(fs: FeatureSet) -> QualityRating:
    """Star rating from keypoint count and 8x8-grid coverage:
    min(5, count//100 + floor(spread*4))."""
    n = len(fs)
    cells = set()
    for i in range(n):
        gx = min(GRID_DIV - 1, int(float(fs.xs[i]) * GRID_DIV / fs.width))
        gy = min(GRID_DIV - 1, int(float(fs.ys[i]) * GRID_DIV / fs.height))
        cells.add((gx, gy))
    spread = len(cells) / (GRID_DIV * GRID_DIV)
    stars = min(5, n // 100 + int(spread * 4))
    stars = max(0, min(5, stars))
    return QualityRating(stars=stars, keypoint_count=n, spread=spread)


def rate_target(target: Target) -> QualityRating:
    return rate_features(target.features)


def register_target(db: TargetDatabase, name: str, img,
                    content_id: str = "",
                    params: ExtractParams = ExtractParams(),
                    min_keypoints: int = MIN_KEYPOINTS):
    """Extract features from a reference picture and append it as a target.

    Returns (new_db, target). Pictures with fewer than min_keypoints
    keypoints are rejected with their rating attached, mirroring how small
    low-texture pictures fail recognition in the field.
    """
    if not name:
        raise ValueError("target name must be non-empty")
    if any(t.name == name for t in db.targets):
        raise DuplicateName(name)
    a = np.asarray(img)
    gray = as_gray(a) if a.ndim == 2 else to_grayscale(a)
    fs = extract(gray, params)
    if len(fs) < min_keypoints:
        raise TooFewFeatures(len(fs), rate_features(fs), min_keypoints)
    target = Target(
        id=db.next_id(),
        name=name,
        image_width=gray.shape[1],
        image_height=gray.shape[0],
        features=fs,
        content_id=content_id,
    )
    return TargetDatabase(db.format_version, db.targets + (target,)), target


def _pack_target(t: Target) -> bytes:
    out = bytearray()
    out += struct.pack("<I", t.id)
    name_b = t.name.encode("utf-8")
    out += struct.pack("<H", len(name_b)) + name_b
    out += struct.pack("<II", t.image_width, t.image_height)
    fs = t.features
    n = len(fs)
    out += struct.pack("<I", n)
    kps = np.empty(n, _KP_DTYPE)
    kps["x"] = fs.xs
    kps["y"] = fs.ys
    kps["level"] = fs.levels
    kps["angle"] = fs.angles
    kps["score"] = fs.scores
    out += kps.tobytes()
    out += np.ascontiguousarray(fs.descriptors, np.uint8).tobytes()
    cid_b = t.content_id.encode("utf-8")
    out += struct.pack("<H", len(cid_b)) + cid_b
    return bytes(out)


def db_to_bytes(db: TargetDatabase) -> bytes:
    body = bytearray()
    body += MAGIC
    body += struct.pack("<III", db.format_version, len(db.targets), 0)
    for t in db.targets:
        body += _pack_target(t)
    body += struct.pack("<I", zlib.crc32(bytes(body)) & 0xFFFFFFFF)
    return bytes(body)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise TruncatedFile(
                f"needed {n} bytes at offset {self.off}, have "
                f"{len(self.data) - self.off}"
            )
        b = self.data[self.off:self.off + n]
        self.off += n
        return b

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def db_from_bytes(data: bytes) -> TargetDatabase:
    if len(data) < 20:
        raise TruncatedFile(f"file is {len(data)} bytes, minimum is 20")
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}")
    version = struct.unpack("<I", data[4:8])[0]
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"version {version}")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored_crc:
        raise ChecksumMismatch("CRC32 mismatch")

    r = _Reader(data[:-4])
    r.off = 8
    count = r.u32()
    r.u32()  # reserved
    targets = []
    for _ in range(count):
        tid = r.u32()
        name = r.take(r.u16()).decode("utf-8")
        iw = r.u32()
        ih = r.u32()
        n = r.u32()
        kp_raw = np.frombuffer(r.take(n * _KP_DTYPE.itemsize), _KP_DTYPE)
        descs = np.frombuffer(r.take(n * 32), np.uint8).reshape(n, 32).copy()
        cid = r.take(r.u16()).decode("utf-8")
        fs = FeatureSet(
            iw, ih,
            kp_raw["x"].astype(np.float32),
            kp_raw["y"].astype(np.float32),
            kp_raw["level"].astype(np.uint8),
            kp_raw["angle"].astype(np.float32),
            kp_raw["score"].astype(np.float32),
            descs,
        )
        targets.append(Target(tid, name, iw, ih, fs, cid))
    if r.off != len(r.data):
        raise DatabaseFormatError(f"{len(r.data) - r.off} unparsed bytes")
    for t in targets:
        if not t.name:
            raise DatabaseFormatError(f"target {t.id} has an empty name")
    ids = [t.id for t in targets]
    if any(b <= a for a, b in zip(ids, ids[1:])):
        raise DatabaseFormatError("target ids are not strictly increasing")
    return TargetDatabase(version, tuple(targets))


def save_db(db: TargetDatabase, sink) -> None:
    data = db_to_bytes(db)
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(data)
    else:
        sink.write(data)


def load_db(source) -> TargetDatabase:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    else:
        data = source.read()
    return db_from_bytes(data)
