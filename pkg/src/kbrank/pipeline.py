"""Wiring from a RunConfig to stores, models and named judges."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from functools import cached_property
from pathlib import Path

from .baselines import (FixtureSearchProvider, HumanFrequencyJudge, OccupationFrequencyJudge,
                        PropertySuggesterJudge, SearchCountJudge)
from .config import RunConfig
from .ensemble import MajorityJudge
from .golddata import GoldRecord, MajorityEchoJudge, load_gold, resolve
from .judgment import PreferenceJudge
from .kbstore import IngestFilter, KnowledgeStore, UnknownIdError, ingest_files
from .pivot import FeatureMode, Hyperparams, PivotCache, PivotJudge, PivotTrainer
from .replay import RandomJudge, load_recorded
from .semantic import SemanticJudge, SemanticModel, train_topic_model
from .textcorpus import Corpus

logger = logging.getLogger(__name__)

BASE_METHODS = ("human_frequency", "occupation_frequency", "search_count", "property_suggester",
                "regression_plain", "regression_tfidf", "lsi", "lda", "random")


class UnknownMethodError(ValueError):
    pass


class Workspace:
    """Lazily builds everything a command needs and records step timings."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.timings: dict[str, float] = {}
        self._judges: dict[str, PreferenceJudge] = {}

    def _timed(self, step, fn):
        t0 = time.perf_counter()
        try:
            return fn()
        finally:
            self.timings[step] = self.timings.get(step, 0.0) + time.perf_counter() - t0

    @property
    def cache_dir(self) -> Path:
        d = self.config.path("cache_dir")
        d.mkdir(parents=True, exist_ok=True)
        return d

    @property
    def store_path(self) -> Path:
        return self.cache_dir / "store.json"

    def ingest(self) -> KnowledgeStore:
        cfg = self.config
        flt = IngestFilter(cfg.ingest.class_id, cfg.ingest.drop_identifiers, cfg.ingest.min_usage)
        store = self._timed("ingest", lambda: ingest_files(
            cfg.input_path("entities"), cfg.input_path("properties", required=False), flt))
        store.save(self.store_path)
        self.__dict__["store"] = store
        return store

    @cached_property
    def store(self) -> KnowledgeStore:
        if self.store_path.exists() and self._store_is_fresh():
            return self._timed("load_store", lambda: KnowledgeStore.load(self.store_path))
        return self.ingest()

    def _store_is_fresh(self) -> bool:
        built = self.store_path.stat().st_mtime
        inputs = [self.config.input_path("entities"), self.config.path("properties", required=False)]
        return all(p is None or not p.exists() or p.stat().st_mtime <= built for p in inputs)

    @cached_property
    def corpus(self) -> Corpus:
        return self._timed("load_corpus", lambda: Corpus.from_file(self.config.input_path("corpus")))

    @cached_property
    def gold(self) -> list[GoldRecord]:
        return load_gold(self.config.input_path("gold"))

    def queries(self, records) -> list[tuple[str, str, str] | None]:
        """Resolve gold records to (entity, p, q) ids; unresolvable records become None."""
        store = self.store
        out = []
        for r in records:
            try:
                e, p, q = resolve(r, store.entity_id, store.property_id)
                store.entity(e), store.property(p), store.property(q)
                out.append((e, p, q))
            except UnknownIdError as exc:
                logger.info("record %s not resolvable: %s", r.record_id, exc)
                out.append(None)
        return out

    @cached_property
    def pivot_fingerprint(self) -> str:
        """Corpus fingerprint extended by everything else a pivot model depends on."""
        h = hashlib.sha256(self.corpus.fingerprint.encode())
        h.update(json.dumps([dataclasses.asdict(self.config.regression),
                             dataclasses.asdict(self.config.tfidf)], sort_keys=True).encode())
        h.update(json.dumps(self.store.to_json(), sort_keys=True).encode())
        return h.hexdigest()

    def pivot_trainer(self, mode: FeatureMode) -> PivotTrainer:
        key = f"_trainer_{FeatureMode(mode).value}"
        if key not in self.__dict__:
            r = self.config.regression
            cache = PivotCache(self.cache_dir, self.pivot_fingerprint)
            self.__dict__[key] = PivotTrainer(
                self.store, self.corpus, cache, FeatureMode(mode),
                Hyperparams(r.learning_rate, r.l2, r.max_epochs, r.tol, r.seed),
                r.cap, r.holdout, r.min_side, self.config.tfidf.prune_low, self.config.tfidf.prune_high)
        return self.__dict__[key]

    def topic_model_dir(self, kind: str) -> Path:
        settings = dataclasses.asdict(getattr(self.config, kind))
        if kind == "lsi":
            settings["tfidf"] = dataclasses.asdict(self.config.tfidf)
        digest = hashlib.sha256(json.dumps(settings, sort_keys=True).encode()).hexdigest()
        return self.cache_dir / "topics" / kind / f"{self.corpus.fingerprint[:16]}-{digest[:12]}"

    def topic_model(self, kind: str, retrain: bool = False) -> SemanticModel:
        key = f"_topics_{kind}"
        if key in self.__dict__ and not retrain:
            return self.__dict__[key]
        directory = self.topic_model_dir(kind)
        if (directory / "manifest.json").exists() and not retrain:
            model = SemanticModel.load(directory)
        else:
            cfg = self.config
            if kind == "lsi":
                s = cfg.lsi
                model = self._timed("train_lsi", lambda: train_topic_model(
                    self.corpus, "lsi", s.k, seed=s.seed, prune_low=cfg.tfidf.prune_low,
                    prune_high=cfg.tfidf.prune_high, oversample=s.oversample,
                    power_iterations=s.power_iterations))
            elif kind == "lda":
                s = cfg.lda
                model = self._timed("train_lda", lambda: train_topic_model(
                    self.corpus, "lda", s.k, seed=s.seed, alpha=s.alpha, beta=s.beta,
                    iterations=s.iterations, inference_sweeps=s.inference_sweeps))
            else:
                raise UnknownMethodError(f"unknown topic model kind {kind!r}")
            model.save(directory)
        self.__dict__[key] = model
        return model

    def judge(self, name: str, records=None) -> PreferenceJudge:
        if name in self._judges:
            return self._judges[name]
        judge = self._build_judge(name, records)
        self._judges[name] = judge
        return judge

    def _build_judge(self, name: str, records) -> PreferenceJudge:
        if name == "human_frequency":
            return HumanFrequencyJudge(self.store)
        if name == "occupation_frequency":
            return OccupationFrequencyJudge(self.store)
        if name == "property_suggester":
            return PropertySuggesterJudge(self.store)
        if name == "search_count":
            provider = FixtureSearchProvider.from_file(self.config.input_path("search_counts"))
            return SearchCountJudge(self.store, provider)
        if name in ("regression_plain", "regression_tfidf"):
            mode = FeatureMode.COUNTS if name == "regression_plain" else FeatureMode.TFIDF
            return PivotJudge(self.pivot_trainer(mode), name)
        if name in ("lsi", "lda"):
            return SemanticJudge(self.topic_model(name), self.store, self.corpus, name)
        if name == "random":
            return RandomJudge(self.config.random_seed)
        if name == "majority_echo":
            records = records if records is not None else self.gold
            return MajorityEchoJudge(records, [q or ("", "", "") for q in self.queries(records)])
        if name.startswith("recorded:"):
            recorded = load_recorded(self.config.input_path("recorded"))
            method = name.split(":", 1)[1]
            if method not in recorded:
                raise UnknownMethodError(f"no recorded outputs for method {method!r}")
            judge = recorded[method]
            judge.name = name
            return judge
        spec = self.config.ensemble(name)
        if spec is not None:
            return MajorityJudge(spec, [self.judge(m, records) for m in spec.members])
        raise UnknownMethodError(
            f"unknown method {name!r}; known: {', '.join(BASE_METHODS)}, majority_echo, "
            f"recorded:<method>, or an ensemble name from the configuration")
