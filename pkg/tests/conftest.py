import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from herbar.imaging import to_grayscale
from herbar.synthetic import fixture_dims, low_texture_rgba, textured_rgba
from herbar.targetdb import TargetDatabase, register_target

N_TEXTURED = 12
LOW_TEXTURE_NAME = "herb-low"


class Corpus:
    """Shared fixture targets: N_TEXTURED rich collages plus one low-texture
    picture registered with the threshold lowered."""

    def __init__(self):
        self.color = {}
        self.gray = {}
        db = TargetDatabase()
        for i in range(N_TEXTURED):
            w, h = fixture_dims(i)
            name = f"herb-{i + 1:03d}"
            img = textured_rgba(1000 + i, w, h)
            db, t = register_target(db, name, img, content_id=name)
            self.color[t.id] = img
            self.gray[t.id] = to_grayscale(img)
        img = low_texture_rgba(2000, 256, 240)
        db, t = register_target(
            db, LOW_TEXTURE_NAME, img, content_id=LOW_TEXTURE_NAME,
            min_keypoints=1,
        )
        self.low_id = t.id
        self.color[t.id] = img
        self.gray[t.id] = to_grayscale(img)
        self.db = db

    def textured_ids(self):
        return [t.id for t in self.db.targets if t.id != self.low_id]


@pytest.fixture(scope="session")
def corpus():
    return Corpus()


@pytest.fixture(scope="session")
def corpus_dir(corpus, tmp_path_factory):
    """Corpus written to disk: PNG per target plus manifest and db file."""
    import json

    from herbar.pngio import save_png
    from herbar.targetdb import save_db

    d = tmp_path_factory.mktemp("corpus")
    manifest = []
    for t in corpus.db.targets:
        path = d / f"{t.name}.png"
        save_png(path, corpus.color[t.id])
        manifest.append(
            {"name": t.name, "image_path": t.name + ".png", "content_id": t.content_id}
        )
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2))
    save_db(corpus.db, d / "targets.hrb")
    return d


def random_gray(rng: np.random.Generator, w: int, h: int) -> np.ndarray:
    return rng.integers(0, 256, (h, w), dtype=np.uint8)


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory):
    """3 textured targets + the low-texture one, with a CLI-built db: a fast
    corpus for bench determinism runs."""
    import json

    from herbar.cli import main
    from herbar.pngio import save_png

    d = tmp_path_factory.mktemp("smallcorpus")
    manifest = []
    for i in range(3):
        w, h = fixture_dims(i)
        name = f"herb-{i + 1:03d}"
        save_png(d / f"{name}.png", textured_rgba(1000 + i, w, h))
        manifest.append(
            {"name": name, "image_path": f"{name}.png", "content_id": name}
        )
    save_png(d / "herb-low.png", low_texture_rgba(2000, 256, 240))
    manifest.append(
        {"name": "herb-low", "image_path": "herb-low.png", "content_id": "herb-low"}
    )
    (d / "manifest.json").write_text(json.dumps(manifest))
    code = main(
        ["build-db", str(d / "manifest.json"), str(d / "db.hrb"),
         "--min-keypoints", "1"]
    )
    assert code == 0
    return d
