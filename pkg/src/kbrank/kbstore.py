"""In-memory index of entities, their properties and occupations.

Entity files are newline-delimited JSON, one object per line::

    {"id": "Q42", "label": "Douglas Adams", "description": "English writer",
     "classes": ["Q5"], "occupations": ["Q36180"], "properties": ["P31", "P106"],
     "article": "doc-42"}

``classes`` and ``article`` are optional. Property files use::

    {"id": "P106", "label": "occupation", "description": "...", "is_identifier": false}

Only presence of a property matters: a property asserted several times on an
entity counts once for that entity.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

HUMAN = "Q5"


class KnowledgeStoreError(Exception):
    pass


class EmptyStoreError(KnowledgeStoreError):
    def __init__(self):
        super().__init__("empty store")


class UnknownIdError(KnowledgeStoreError, KeyError):
    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class EntityRecord:
    id: str
    label: str
    description: str = ""
    occupations: frozenset = frozenset()
    properties: frozenset = frozenset()
    article_ref: str | None = None
    classes: frozenset = frozenset()


@dataclass(frozen=True)
class PropertyDef:
    id: str
    label: str
    description: str = ""
    is_identifier: bool = False


@dataclass(frozen=True)
class IngestFilter:
    """Which entities and properties survive ingestion.

    ``min_usage`` is applied after class filtering, so usage thresholds refer
    to the surviving population (e.g. humans).
    """
    class_id: str | None = None
    drop_identifiers: bool = False
    min_usage: int = 0


@dataclass(frozen=True)
class IngestError:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


def _pair(p: str, q: str) -> tuple[str, str]:
    return (p, q) if p <= q else (q, p)


@dataclass
class KnowledgeStore:
    entities: dict[str, EntityRecord]
    properties: dict[str, PropertyDef]
    usage_count: dict[str, int] = field(default_factory=dict)
    cooccurrence: dict[tuple[str, str], int] = field(default_factory=dict)
    errors: list[IngestError] = field(default_factory=list)

    def __post_init__(self):
        if not self.usage_count and not self.cooccurrence:
            self._recount()
        self._by_occupation: dict[str, set[str]] = {}
        for e in self.entities.values():
            for occ in e.occupations:
                self._by_occupation.setdefault(occ, set()).add(e.id)
        self._property_by_label = {p.label: p.id for p in self.properties.values()}
        self._entity_by_label: dict[str, str] = {}
        for e in sorted(self.entities.values(), key=lambda r: r.id):
            self._entity_by_label.setdefault(e.label, e.id)

    def _recount(self):
        usage = Counter()
        cooc = Counter()
        for e in self.entities.values():
            props = sorted(e.properties)
            usage.update(props)
            cooc.update(combinations(props, 2))
        self.usage_count = {p: usage.get(p, 0) for p in self.properties}
        self.cooccurrence = dict(cooc)

    def entity(self, e: str) -> EntityRecord:
        try:
            return self.entities[e]
        except KeyError:
            raise UnknownIdError(f"unknown entity {e!r}") from None

    def property(self, p: str) -> PropertyDef:
        try:
            return self.properties[p]
        except KeyError:
            raise UnknownIdError(f"unknown property {p!r}") from None

    def usage(self, p: str) -> int:
        self.property(p)
        return self.usage_count.get(p, 0)

    def cooccurrences(self, p: str, q: str) -> int:
        if p == q:
            return self.usage(p)
        return self.cooccurrence.get(_pair(p, q), 0)

    def occupation_cohort(self, e: str) -> set[str]:
        record = self.entity(e)
        cohort: set[str] = set()
        for occ in record.occupations:
            cohort |= self._by_occupation.get(occ, set())
        cohort.discard(e)
        return cohort

    def cohort_usage(self, cohort: Iterable[str], p: str) -> int:
        self.property(p)
        return sum(1 for e in cohort if p in self.entities[e].properties)

    def split_by_pivot(self, p: str, q: str, cap: int | None = None) -> tuple[list[str], list[str]]:
        """Entities having exactly one of ``p``/``q``, sorted by id and capped."""
        if p == q:
            raise ValueError(f"pivot needs two distinct properties, got {p!r} twice")
        only_p, only_q = [], []
        for eid in sorted(self.entities):
            props = self.entities[eid].properties
            has_p, has_q = p in props, q in props
            if has_p and not has_q:
                only_p.append(eid)
            elif has_q and not has_p:
                only_q.append(eid)
        if cap is not None:
            only_p, only_q = only_p[:cap], only_q[:cap]
        return only_p, only_q

    def property_id(self, label_or_id: str) -> str:
        if label_or_id in self.properties:
            return label_or_id
        try:
            return self._property_by_label[label_or_id]
        except KeyError:
            raise UnknownIdError(f"unknown property {label_or_id!r}") from None

    def entity_id(self, label_or_id: str) -> str:
        if label_or_id in self.entities:
            return label_or_id
        try:
            return self._entity_by_label[label_or_id]
        except KeyError:
            raise UnknownIdError(f"unknown entity {label_or_id!r}") from None

    def stats(self) -> dict:
        return {
            "entities": len(self.entities),
            "properties": len(self.properties),
            "identifier_properties": sum(p.is_identifier for p in self.properties.values()),
            "property_assertions": sum(self.usage_count.values()),
            "with_article": sum(e.article_ref is not None for e in self.entities.values()),
            "usage": dict(sorted(self.usage_count.items(), key=lambda kv: (-kv[1], kv[0]))),
            "ingest_errors": len(self.errors),
        }

    def to_json(self) -> dict:
        return {
            "entities": [_entity_to_json(e) for e in sorted(self.entities.values(), key=lambda r: r.id)],
            "properties": [vars(p) for p in sorted(self.properties.values(), key=lambda r: r.id)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "KnowledgeStore":
        entities = {d["id"]: _entity_from_json(d) for d in data["entities"]}
        props = {d["id"]: PropertyDef(**d) for d in data["properties"]}
        return cls(entities, props)

    def save(self, path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(self.to_json(), sort_keys=True), encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def load(cls, path) -> "KnowledgeStore":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _entity_to_json(e: EntityRecord) -> dict:
    return {
        "id": e.id, "label": e.label, "description": e.description,
        "occupations": sorted(e.occupations), "properties": sorted(e.properties),
        "article": e.article_ref, "classes": sorted(e.classes),
    }


def _str_list(d: dict, key: str) -> list[str]:
    value = d.get(key, [])
    if not isinstance(value, list) or not all(isinstance(v, str) and v for v in value):
        raise ValueError(f"field {key!r} must be a list of non-empty strings")
    return value


def _entity_from_json(d: dict) -> EntityRecord:
    if not isinstance(d, dict):
        raise ValueError("record is not an object")
    eid = d.get("id")
    if not isinstance(eid, str) or not eid:
        raise ValueError("missing or empty 'id'")
    label = d.get("label", "")
    if not isinstance(label, str):
        raise ValueError("'label' must be a string")
    article = d.get("article")
    if article is not None and not isinstance(article, str):
        raise ValueError("'article' must be a string or null")
    return EntityRecord(
        id=eid, label=label, description=d.get("description") or "",
        occupations=frozenset(_str_list(d, "occupations")),
        properties=frozenset(_str_list(d, "properties")),
        article_ref=article,
        classes=frozenset(_str_list(d, "classes")),
    )


def _property_from_json(d: dict) -> PropertyDef:
    if not isinstance(d, dict):
        raise ValueError("record is not an object")
    pid, label = d.get("id"), d.get("label")
    if not isinstance(pid, str) or not pid:
        raise ValueError("missing or empty 'id'")
    if not isinstance(label, str) or not label.strip():
        raise ValueError(f"property {pid} has an empty label")
    return PropertyDef(pid, label, d.get("description") or "", bool(d.get("is_identifier", False)))


def read_jsonl(lines: Iterable[str]) -> Iterator[tuple[int, dict | Exception]]:
    """Yield ``(line_number, object_or_error)`` for each non-blank line."""
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as exc:
            yield lineno, exc


def read_properties(lines: Iterable[str]) -> tuple[dict[str, PropertyDef], list[IngestError]]:
    props, errors = {}, []
    for lineno, obj in read_jsonl(lines):
        try:
            if isinstance(obj, Exception):
                raise obj
            p = _property_from_json(obj)
            if p.id in props:
                raise ValueError(f"duplicate property id {p.id}")
            props[p.id] = p
        except Exception as exc:
            errors.append(IngestError(lineno, str(exc)))
    return props, errors


def ingest(entity_stream: Iterable[str], properties: dict[str, PropertyDef] | None = None,
           filter: IngestFilter = IngestFilter()) -> KnowledgeStore:
    """Build a store from newline-delimited entity records.

    Malformed records are skipped and reported in ``store.errors`` with their
    line numbers. Property ids seen on entities but absent from ``properties``
    get a placeholder definition labelled by their id.
    """
    properties = dict(properties or {})
    entities: dict[str, EntityRecord] = {}
    errors: list[IngestError] = []
    for lineno, obj in read_jsonl(entity_stream):
        try:
            if isinstance(obj, Exception):
                raise obj
            record = _entity_from_json(obj)
            if record.id in entities:
                raise ValueError(f"duplicate entity id {record.id}")
        except Exception as exc:
            errors.append(IngestError(lineno, str(exc)))
            logger.warning("skipping entity record at line %d: %s", lineno, exc)
            continue
        if filter.class_id is not None and filter.class_id not in record.classes:
            continue
        entities[record.id] = record

    if not entities:
        raise EmptyStoreError()

    for e in entities.values():
        for p in e.properties:
            if p not in properties:
                properties[p] = PropertyDef(p, p)

    keep = {p for p, d in properties.items() if not (filter.drop_identifiers and d.is_identifier)}
    if filter.min_usage > 0:
        usage = Counter(p for e in entities.values() for p in e.properties)
        keep = {p for p in keep if usage.get(p, 0) >= filter.min_usage}
    if len(keep) != len(properties):
        properties = {p: d for p, d in properties.items() if p in keep}
        entities = {eid: _restrict(e, keep) for eid, e in entities.items()}

    store = KnowledgeStore(entities, properties)
    store.errors = errors
    return store


def _restrict(e: EntityRecord, keep: set[str]) -> EntityRecord:
    return EntityRecord(e.id, e.label, e.description, e.occupations,
                        e.properties & keep, e.article_ref, e.classes)


def ingest_files(entity_path, property_path=None, filter: IngestFilter = IngestFilter()) -> KnowledgeStore:
    props, prop_errors = {}, []
    if property_path is not None:
        with open(property_path, encoding="utf-8") as fh:
            props, prop_errors = read_properties(fh)
        for err in prop_errors:
            logger.warning("%s: %s", property_path, err)
    with open(entity_path, encoding="utf-8") as fh:
        store = ingest(fh, props, filter)
    store.errors = [IngestError(e.line, f"{property_path}: {e.message}") for e in prop_errors] + \
        [IngestError(e.line, f"{entity_path}: {e.message}") for e in store.errors]
    return store
