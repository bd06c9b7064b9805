import json
import random

import pytest

from kbrank.kbstore import EntityRecord, KnowledgeStore, PropertyDef, ingest


def make_store(entities, labels=None, occupations=None, articles=None):
    """Build a store from ``{entity_id: iterable of property ids}``."""
    occupations = occupations or {}
    articles = articles or {}
    labels = labels or {}
    props = sorted({p for ps in entities.values() for p in ps} | set(labels))
    records = {
        e: EntityRecord(e, f"label {e}", "", frozenset(occupations.get(e, ())), frozenset(ps),
                        articles.get(e), frozenset({"Q5"}))
        for e, ps in entities.items()
    }
    defs = {p: PropertyDef(p, labels.get(p, f"prop {p}")) for p in props}
    return KnowledgeStore(records, defs)


def random_store(rng: random.Random, max_entities=50, max_props=8, n_occupations=3):
    n_e = rng.randint(1, max_entities)
    n_p = rng.randint(2, max_props)
    props = [f"P{i}" for i in range(n_p)]
    dens = rng.random()
    entities, occ = {}, {}
    for i in range(n_e):
        entities[f"Q{i}"] = {p for p in props if rng.random() < dens}
        occ[f"Q{i}"] = {f"O{j}" for j in range(n_occupations) if rng.random() < 0.4}
    return make_store(entities, labels={p: f"prop {p}" for p in props}, occupations=occ)


@pytest.fixture
def toy4():
    """e1{a,b}, e2{a,b}, e3{a}, e4{b,c}."""
    lines = [json.dumps({"id": e, "label": e, "properties": ps, "classes": ["Q5"]})
             for e, ps in [("e1", ["a", "b"]), ("e2", ["a", "b"]), ("e3", ["a"]), ("e4", ["b", "c"])]]
    return ingest(lines)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
