import json

import pytest

from herbar.content import (
    dump_catalog,
    get_entry,
    load_catalog,
    validate_against_db,
)
from herbar.errors import DuplicateId, MissingSection, NotFound, ParseError


def entry_doc(cid, **over):
    doc = {
        "content_id": cid,
        "name_cn": f"样本{cid}",
        "name_en": f"Sample {cid}",
        "source_area": "synthetic",
        "usage": "test fixture",
        "morphology": {"roots": "r", "stems": "s", "leaves": "l", "seeds": "d"},
        "ecology": {"environment": "e", "life_cycle": "annual"},
    }
    doc.update(over)
    return doc


class TestLoad:
    def test_empty_array(self):
        assert len(load_catalog("[]")) == 0

    def test_basic_load_and_lookup(self):
        cat = load_catalog(json.dumps([entry_doc("a"), entry_doc("b")]))
        assert len(cat) == 2
        e = get_entry(cat, "a")
        assert e.name_en == "Sample a"
        assert e.morphology.seeds == "d"
        assert e.ecology.life_cycle == "annual"

    def test_duplicate_id(self):
        with pytest.raises(DuplicateId):
            load_catalog(json.dumps([entry_doc("a"), entry_doc("a")]))

    def test_missing_section(self):
        doc = entry_doc("a")
        del doc["morphology"]
        with pytest.raises(MissingSection):
            load_catalog(json.dumps([doc]))

    def test_missing_species_field(self):
        doc = entry_doc("a")
        del doc["usage"]
        with pytest.raises(MissingSection):
            load_catalog(json.dumps([doc]))

    def test_parse_error_has_line_info(self):
        with pytest.raises(ParseError) as e:
            load_catalog('[\n{"content_id": }\n]')
        assert "line 2" in str(e.value)

    def test_not_found(self):
        cat = load_catalog(json.dumps([entry_doc("a")]))
        with pytest.raises(NotFound):
            get_entry(cat, "zzz")

    def test_empty_subfields_allowed(self):
        doc = entry_doc("a", morphology={}, ecology={})
        cat = load_catalog(json.dumps([doc]))
        assert get_entry(cat, "a").morphology.roots == ""

    def test_roundtrip(self):
        cat = load_catalog(json.dumps([entry_doc("x"), entry_doc("y")]))
        again = load_catalog(dump_catalog(cat))
        assert again == cat


class FakeTarget:
    def __init__(self, cid):
        self.content_id = cid


class FakeDb:
    def __init__(self, cids):
        self.targets = [FakeTarget(c) for c in cids]


class TestValidate:
    def test_consistent(self):
        cat = load_catalog(json.dumps([entry_doc("a"), entry_doc("b")]))
        rep = validate_against_db(cat, FakeDb(["a", "b"]))
        assert rep.is_consistent
        assert rep.to_dict()["consistent"] is True

    def test_missing_entry(self):
        cat = load_catalog(json.dumps([entry_doc("a")]))
        rep = validate_against_db(cat, FakeDb(["a", "lingzhi"]))
        assert rep.missing_entries == ("lingzhi",)
        assert not rep.is_consistent

    def test_orphan_entry(self):
        cat = load_catalog(json.dumps([entry_doc("a"), entry_doc("b")]))
        rep = validate_against_db(cat, FakeDb(["a"]))
        assert rep.orphan_entries == ("b",)

    def test_lookup_is_readonly(self):
        cat = load_catalog(json.dumps([entry_doc("a")]))
        before = dump_catalog(cat)
        get_entry(cat, "a")
        with pytest.raises(NotFound):
            get_entry(cat, "nope")
        assert dump_catalog(cat) == before
