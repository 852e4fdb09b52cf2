"""Herb knowledge base: species, morphology, and ecology text per target.

Catalog files are JSON arrays of entries. Every entry carries the three
information sections surfaced by the app's buttons; subfield text may be
empty but the sections themselves must exist.
"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from herbar.errors import DuplicateId, MissingSection, NotFound, ParseError

MORPHOLOGY_FIELDS = ("roots", "stems", "leaves", "seeds")
ECOLOGY_FIELDS = ("environment", "life_cycle")
SPECIES_FIELDS = ("name_cn", "name_en", "source_area", "usage")


@dataclass(frozen=True)
class Morphology:
    roots: str = ""
    stems: str = ""
    leaves: str = ""
    seeds: str = ""


@dataclass(frozen=True)
class Ecology:
    environment: str = ""
    life_cycle: str = ""


@dataclass(frozen=True)
class HerbEntry:
    content_id: str
    name_cn: str
    name_en: str
    source_area: str
    usage: str
    morphology: Morphology
    ecology: Ecology

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Catalog:
    entries: dict  # content_id -> HerbEntry

    def __len__(self):
        return len(self.entries)

    def __contains__(self, content_id: str):
        return content_id in self.entries


def _entry_from_dict(doc: dict, index: int) -> HerbEntry:
    cid = doc.get("content_id")
    if not cid or not isinstance(cid, str):
        raise MissingSection(f"entry {index}: missing or empty content_id")
    for section in ("morphology", "ecology"):
        if not isinstance(doc.get(section), dict):
            raise MissingSection(f"entry {cid!r}: missing section {section!r}")
    for field in SPECIES_FIELDS:
        if field not in doc:
            raise MissingSection(f"entry {cid!r}: missing species field {field!r}")
    morph = doc["morphology"]
    eco = doc["ecology"]
    return HerbEntry(
        content_id=cid,
        name_cn=str(doc["name_cn"]),
        name_en=str(doc["name_en"]),
        source_area=str(doc["source_area"]),
        usage=str(doc["usage"]),
        morphology=Morphology(**{f: str(morph.get(f, "")) for f in MORPHOLOGY_FIELDS}),
        ecology=Ecology(**{f: str(eco.get(f, "")) for f in ECOLOGY_FIELDS}),
    )


def load_catalog(source) -> Catalog:
    """Parse and validate a catalog JSON document (path, file, or str)."""
    if isinstance(source, (str, Path)) and not str(source).lstrip().startswith("["):
        text = Path(source).read_text("utf-8")
    elif hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(doc, list):
        raise ParseError("catalog must be a JSON array of entries")
    entries: dict[str, HerbEntry] = {}
    for i, item in enumerate(doc):
        if not isinstance(item, dict):
            raise ParseError(f"entry {i} is not an object")
        entry = _entry_from_dict(item, i)
        if entry.content_id in entries:
            raise DuplicateId(entry.content_id)
        entries[entry.content_id] = entry
    return Catalog(entries=entries)


def dump_catalog(catalog: Catalog) -> str:
    docs = [catalog.entries[k].to_dict() for k in sorted(catalog.entries)]
    return json.dumps(docs, ensure_ascii=False, indent=2, sort_keys=True)


def get_entry(catalog: Catalog, content_id: str) -> HerbEntry:
    entry = catalog.entries.get(content_id)
    if entry is None:
        raise NotFound(content_id)
    return entry


@dataclass(frozen=True)
class ValidationReport:
    missing_entries: tuple  # content ids used by targets but absent here
    orphan_entries: tuple  # catalog ids never referenced by a target

    @property
    def is_consistent(self) -> bool:
        return not self.missing_entries and not self.orphan_entries

    def to_dict(self) -> dict:
        return {
            "missing_entries": list(self.missing_entries),
            "orphan_entries": list(self.orphan_entries),
            "consistent": self.is_consistent,
        }


def validate_against_db(catalog: Catalog, db) -> ValidationReport:
    referenced = {t.content_id for t in db.targets}
    missing = sorted(cid for cid in referenced if cid and cid not in catalog.entries)
    orphans = sorted(cid for cid in catalog.entries if cid not in referenced)
    return ValidationReport(tuple(missing), tuple(orphans))
