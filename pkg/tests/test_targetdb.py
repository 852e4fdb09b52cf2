import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from herbar.errors import (
    BadMagic,
    ChecksumMismatch,
    DatabaseFormatError,
    DuplicateName,
    TooFewFeatures,
    TruncatedFile,
    UnsupportedVersion,
)
from herbar.features import FeatureSet
from herbar.synthetic import textured_rgba
from herbar.targetdb import (
    Target,
    TargetDatabase,
    db_from_bytes,
    db_to_bytes,
    load_db,
    rate_features,
    register_target,
    save_db,
)


def make_fs(rng, n, w=320, h=240):
    return FeatureSet(
        w, h,
        (rng.random(n) * (w - 1)).astype(np.float32),
        (rng.random(n) * (h - 1)).astype(np.float32),
        rng.integers(0, 4, n).astype(np.uint8),
        rng.uniform(-np.pi, np.pi, n).astype(np.float32),
        rng.uniform(0, 4000, n).astype(np.float32),
        rng.integers(0, 256, (n, 32), dtype=np.uint8),
    )


def make_db(rng, n_targets, kp_range=(50, 200)):
    targets = []
    for i in range(n_targets):
        n = int(rng.integers(*kp_range))
        targets.append(
            Target(i + 1, f"t{i + 1}", 320, 240, make_fs(rng, n), f"c{i + 1}")
        )
    return TargetDatabase(targets=tuple(targets))


class TestRegistration:
    def test_blank_image_rejected(self):
        img = np.full((128, 128, 4), 255, np.uint8)
        with pytest.raises(TooFewFeatures) as e:
            register_target(TargetDatabase(), "blank", img)
        assert e.value.keypoint_count == 0
        assert e.value.rating.stars == 0

    def test_textured_image_accepted(self):
        db, t = register_target(
            TargetDatabase(), "rich", textured_rgba(1, 512, 512)
        )
        assert len(t.features) >= 50
        assert t.id == 1
        assert (t.image_width, t.image_height) == (512, 512)

    def test_duplicate_name_rejected(self):
        db, _ = register_target(TargetDatabase(), "a", textured_rgba(2))
        with pytest.raises(DuplicateName):
            register_target(db, "a", textured_rgba(3))

    def test_ids_strictly_increase(self):
        db = TargetDatabase()
        for i in range(3):
            db, t = register_target(db, f"t{i}", textured_rgba(10 + i))
        assert [t.id for t in db.targets] == [1, 2, 3]

    def test_registration_deterministic(self):
        img = textured_rgba(4)
        _, t1 = register_target(TargetDatabase(), "x", img)
        _, t2 = register_target(TargetDatabase(), "x", img)
        assert t1.features.equals(t2.features)

    def test_empty_name_rejected(self):
        with pytest.raises(ValueError):
            register_target(TargetDatabase(), "", textured_rgba(5))


class TestRating:
    def test_concentrated_keypoints_zero_stars(self):
        rng = np.random.Generator(np.random.PCG64(0))
        fs = make_fs(rng, 50)
        fs = FeatureSet(
            fs.width, fs.height,
            np.full(50, 3.0, np.float32), np.full(50, 3.0, np.float32),
            fs.levels, fs.angles, fs.scores, fs.descriptors,
        )
        r = rate_features(fs)
        assert r.keypoint_count == 50
        assert r.spread == pytest.approx(1 / 64)
        assert r.stars == 0  # 50//100 + floor(4/64) = 0

    def test_full_coverage_five_stars(self):
        xs, ys = [], []
        for gx in range(8):
            for gy in range(8):
                for _ in range(8):  # 512 keypoints over all 64 cells
                    xs.append(gx * 40 + 5)
                    ys.append(gy * 30 + 5)
        fs = FeatureSet(
            320, 240,
            np.array(xs, np.float32), np.array(ys, np.float32),
            np.zeros(512, np.uint8), np.zeros(512, np.float32),
            np.zeros(512, np.float32), np.zeros((512, 32), np.uint8),
        )
        r = rate_features(fs)
        assert r.spread == 1.0
        assert r.stars == 5  # min(5, 5 + 4)

    def test_monotonic_in_count(self):
        rng = np.random.Generator(np.random.PCG64(1))
        stars = []
        for n in (50, 150, 250, 450):
            fs = make_fs(rng, n)
            stars.append(rate_features(fs).stars)
        assert stars == sorted(stars)


class TestFormat:
    def test_empty_db_is_20_bytes(self):
        data = db_to_bytes(TargetDatabase())
        assert len(data) == 20
        assert data[:4] == b"HRB1"
        again = db_from_bytes(data)
        assert len(again) == 0
        assert again.format_version == 1

    def test_roundtrip_byte_exact(self):
        rng = np.random.Generator(np.random.PCG64(2))
        db = make_db(rng, 3)
        data = db_to_bytes(db)
        again = db_from_bytes(data)
        assert db_to_bytes(again) == data
        for a, b in zip(db.targets, again.targets):
            assert a.id == b.id and a.name == b.name
            assert a.content_id == b.content_id
            assert a.features.equals(b.features)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_roundtrip_property(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        db = make_db(rng, int(rng.integers(0, 4)), kp_range=(1, 60))
        data = db_to_bytes(db)
        assert db_to_bytes(db_from_bytes(data)) == data

    def test_payload_bitflip_checksum_mismatch(self):
        rng = np.random.Generator(np.random.PCG64(3))
        data = bytearray(db_to_bytes(make_db(rng, 2)))
        for off in (16, 40, len(data) // 2, len(data) - 5):
            bad = bytearray(data)
            bad[off] ^= 0x40
            with pytest.raises(ChecksumMismatch):
                db_from_bytes(bytes(bad))

    def test_every_single_byte_flip_detected(self):
        rng = np.random.Generator(np.random.PCG64(4))
        data = db_to_bytes(make_db(rng, 1, kp_range=(2, 6)))
        for off in range(len(data)):
            bad = bytearray(data)
            bad[off] ^= 0x01
            with pytest.raises(
                (BadMagic, UnsupportedVersion, ChecksumMismatch)
            ):
                db_from_bytes(bytes(bad))

    def test_bad_magic(self):
        with pytest.raises(BadMagic):
            db_from_bytes(b"NOPE" + bytes(16))

    def test_unsupported_version(self):
        data = bytearray(db_to_bytes(TargetDatabase()))
        data[4] = 99
        with pytest.raises(UnsupportedVersion):
            db_from_bytes(bytes(data))

    def test_truncated(self):
        data = db_to_bytes(TargetDatabase())
        with pytest.raises(TruncatedFile):
            db_from_bytes(data[:10])

    def test_non_increasing_ids_rejected(self):
        rng = np.random.Generator(np.random.PCG64(5))
        t1 = Target(2, "a", 320, 240, make_fs(rng, 3), "c")
        t2 = Target(2, "b", 320, 240, make_fs(rng, 3), "c")
        data = db_to_bytes(TargetDatabase(targets=(t1, t2)))
        with pytest.raises(DatabaseFormatError):
            db_from_bytes(data)

    def test_file_roundtrip(self, tmp_path):
        rng = np.random.Generator(np.random.PCG64(6))
        db = make_db(rng, 2)
        path = tmp_path / "x.hrb"
        save_db(db, path)
        again = load_db(path)
        assert db_to_bytes(again) == db_to_bytes(db)
