"""Review service: pending-candidate listing, decisions, ontology stats and
changelog, and background enrichment runs, under /api/v1.

Durability model: the seed ontology file plus the queue store are the
source of truth. Accepted decisions merge into the in-memory graph when
made, and replay idempotently at startup, so restarts lose nothing and
retried decision requests cannot merge twice.
"""

from __future__ import annotations

import logging
import threading
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import RunConfig, make_provider
from .enrich import Thresholds, enrich, ingest
from .errors import DecisionConflictError, OntoEnrichError
from .labels import LABEL_TOKENS, LabelKind
from .ontology import OntologyGraph, load_ontology, merge_triples, save_changelog, save_ontology
from .queue import ACTIONS, ReviewQueue

logger = logging.getLogger(__name__)


class DecisionRequest(BaseModel):
    action: str
    predicate: Optional[str] = None
    reviewer: Optional[str] = None
    idempotency_key: Optional[str] = None


class EnrichRequest(BaseModel):
    source: str
    mode: str = "review"


class ServiceState:
    def __init__(self, config: RunConfig):
        self.config = config
        self.graph: OntologyGraph = load_ontology(
            config["ontology"], config["ontology_format"]
        )
        self.queue = ReviewQueue(config["queue_dir"])
        self.write_lock = threading.Lock()
        self.enrich_lock = threading.Lock()
        self.runs: dict[str, dict] = {}
        self._run_counter = 0
        self._model = None
        self._parser = None
        # heal any merge lost between a decision append and an ontology save
        accepted = self.queue.accepted_triples()
        if accepted:
            report = merge_triples(self.graph, accepted, mode="accepted-only")
            if report.applied:
                logger.info("replayed %d accepted triple(s) into the graph", report.applied)
                self._persist()

    def _persist(self) -> None:
        output = self.config["ontology_output"] or self.config["ontology"]
        save_ontology(self.graph, output)
        if self.config["changelog_output"]:
            save_changelog(self.graph, self.config["changelog_output"])

    def model_and_parser(self):
        if self._model is None:
            if not self.config["model"]:
                raise OntoEnrichError("service has no model configured for enrich runs")
            from .cli import _make_parser
            from .model import load_model

            self._model = load_model(self.config["model"], make_provider(self.config))
            self._parser = _make_parser(self.config)
        return self._model, self._parser

    def next_run_id(self) -> str:
        self._run_counter += 1
        return f"run-{self._run_counter}"


def _parse_predicate(token: Optional[str]) -> Optional[LabelKind]:
    if token is None:
        return None
    kind = LABEL_TOKENS.get(token.strip().lower())
    if kind is None:
        raise HTTPException(status_code=422, detail=f"unknown predicate {token!r}")
    return kind


def build_app(config: RunConfig) -> FastAPI:
    state = ServiceState(config)
    app = FastAPI(title="ontoenrich review service", version="1")
    app.state.service = state

    def check_token(request: Request) -> None:
        token = config["token"]
        if not token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="invalid token")

    api = "/api/v1"

    @app.get(api + "/queue", dependencies=[Depends(check_token)])
    def list_queue(
        status: str = "pending",
        predicate: Optional[str] = None,
        source: Optional[str] = None,
        min_confidence: Optional[float] = None,
        max_confidence: Optional[float] = None,
        offset: int = 0,
        limit: int = 50,
    ):
        entries = state.queue.entries(
            status=status or None,
            predicate=_parse_predicate(predicate),
            source=source,
            min_confidence=min_confidence,
            max_confidence=max_confidence,
        )
        entries.sort(key=lambda e: (-e.triple.confidence, e.id))
        page = entries[offset : offset + limit]
        return {
            "total": len(entries),
            "offset": offset,
            "limit": limit,
            "entries": [e.to_dict() for e in page],
        }

    @app.post(api + "/queue/{entry_id}/decision", dependencies=[Depends(check_token)])
    def decide(entry_id: str, body: DecisionRequest):
        if body.action not in ACTIONS:
            raise HTTPException(status_code=422, detail=f"unknown action {body.action!r}")
        predicate = _parse_predicate(body.predicate)
        if body.action == "accept-with-predicate" and (
            predicate is None or predicate is LabelKind.NONE
        ):
            raise HTTPException(
                status_code=422, detail="accept-with-predicate needs a non-NONE predicate"
            )
        with state.write_lock:
            entry = state.queue.get(entry_id)
            if entry is None:
                raise HTTPException(status_code=404, detail=f"no entry {entry_id}")
            already_decided = entry.decision is not None
            try:
                entry = state.queue.decide(
                    entry_id,
                    body.action,
                    predicate=predicate,
                    reviewer=body.reviewer,
                    idempotency_key=body.idempotency_key,
                )
            except DecisionConflictError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            if not already_decided and entry.triple.status == "accepted":
                merge_triples(state.graph, [entry.triple], mode="accepted-only")
                state._persist()
        return entry.to_dict()

    @app.get(api + "/ontology/stats", dependencies=[Depends(check_token)])
    def stats():
        return state.graph.stats()

    @app.get(api + "/ontology/changelog", dependencies=[Depends(check_token)])
    def changelog(since: int = 0):
        records = state.graph.changelog_since(since)
        return {
            "since": since,
            "version": state.graph.version,
            "records": [
                {
                    "version": r.version,
                    "op": r.op,
                    "subject": r.subject,
                    "predicate": r.predicate,
                    "object": r.object,
                }
                for r in records
            ],
        }

    def _run_enrich(run_id: str, source: str, mode: str) -> None:
        with state.enrich_lock:  # one enrich run at a time
            run = state.runs[run_id]
            run["status"] = "running"
            try:
                model, parser = state.model_and_parser()
                doc = ingest(source)
                thresholds = Thresholds(
                    domain_sim=config["threshold_domain"],
                    pair_sim=config["threshold_pair"],
                    sufficiency=config["threshold_sufficiency"],
                )
                with state.write_lock:
                    graph = state.graph
                    candidates = enrich(
                        doc,
                        model,
                        graph,
                        thresholds,
                        mode,
                        parser,
                        config["anchor_text"],
                        max_path_len=config["max_path_len"],
                        queue=state.queue,
                        sufficiency_enabled=config["sufficiency"],
                    )
                    if mode == "auto" and candidates:
                        state._persist()
                run["candidates"] = len(candidates)
                run["status"] = "done"
            except Exception as exc:
                logger.exception("enrich run %s failed", run_id)
                run["status"] = "failed"
                run["error"] = str(exc)

    @app.post(api + "/enrich", dependencies=[Depends(check_token)])
    def trigger_enrich(body: EnrichRequest):
        if body.mode not in ("auto", "review"):
            raise HTTPException(status_code=422, detail=f"unknown mode {body.mode!r}")
        run_id = state.next_run_id()
        state.runs[run_id] = {
            "id": run_id,
            "source": body.source,
            "mode": body.mode,
            "status": "pending",
            "candidates": None,
        }
        worker = threading.Thread(
            target=_run_enrich, args=(run_id, body.source, body.mode), daemon=True
        )
        worker.start()
        return {"run_id": run_id, "status": "pending"}

    @app.get(api + "/enrich/runs/{run_id}", dependencies=[Depends(check_token)])
    def run_status(run_id: str):
        run = state.runs.get(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail=f"no run {run_id}")
        return run

    if config["static_dir"]:
        app.mount("/", StaticFiles(directory=config["static_dir"], html=True), name="ui")

    return app
