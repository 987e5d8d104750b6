"""HTTP/JSON annotation service.

Serves a static batch to one annotator per session: triple payloads for
display, judgment intake with crash-safe auto-save, live estimate
reports recomputed at cluster completions, and export/import for resume
and collaboration. All mutation happens here; clients hold no
authoritative state.
"""
from __future__ import annotations

import asyncio
import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .corpus import Corpus, triple_to_record
from .estimation import (
    VERDICTS,
    EstimateReport,
    EstimatorConfig,
    Judgment,
    JudgmentsDoc,
    effective_judgments,
    recompute_on_cluster_complete,
)
from .sampling import LoadedBatch, parse_batch_text

__all__ = ["AnnotationService", "ServiceError", "create_app"]

MAX_ELAPSED_SECONDS = 24 * 3600.0


class ServiceError(Exception):
    """Service failure carrying the wire-format error code and HTTP status."""

    def __init__(self, status: int, error_code: str, message: str):
        super().__init__(message)
        self.status = status
        self.error_code = error_code
        self.message = message


def _unknown_session(session_id: str) -> ServiceError:
    return ServiceError(404, "unknown_session", f"no session {session_id!r}")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class Session:
    """One annotator's run over one batch."""

    session_id: str
    batch: LoadedBatch
    judgments: list[Judgment] = field(default_factory=list)
    cursor: int = 0
    created_at: str = ""
    last_saved_at: str = ""
    report: EstimateReport | None = None
    report_version: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def config(self) -> EstimatorConfig:
        b = self.batch.batch
        return EstimatorConfig(alpha=b.alpha, epsilon=b.epsilon, m=b.design.m)

    def judged_count(self) -> int:
        ids = set(self.batch.order())
        return sum(1 for tid in effective_judgments(self.judgments) if tid in ids)

    def progress(self) -> dict:
        return {
            "judged": self.judged_count(),
            "total": self.batch.batch.n_triples,
            "cursor": self.cursor,
        }

    def current_report(self) -> EstimateReport:
        if self.report is None:
            self.report = recompute_on_cluster_complete(
                self.judgments, self.batch.batch, self.config
            )
        return self.report


class AnnotationService:
    """Session lifecycle and persistence over a loaded corpus.

    Sessions are stored one JSON file each under ``data_dir``; the batch
    bytes are kept alongside so a restart can rebuild everything. Writes
    go through an atomic rename, and every successful judgment is on disk
    before the response leaves.
    """

    def __init__(self, corpus: Corpus, data_dir: str):
        self.corpus = corpus
        self.data_dir = Path(data_dir)
        (self.data_dir / "sessions").mkdir(parents=True, exist_ok=True)
        (self.data_dir / "batches").mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        self._load_existing()

    # -- persistence -------------------------------------------------------

    def _session_path(self, session_id: str) -> Path:
        return self.data_dir / "sessions" / f"{session_id}.json"

    def _batch_path(self, session_id: str) -> Path:
        return self.data_dir / "batches" / f"{session_id}.jsonl"

    def _load_existing(self) -> None:
        for path in sorted((self.data_dir / "sessions").glob("*.json")):
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            sid = doc["session_id"]
            batch_text = self._batch_path(sid).read_text(encoding="utf-8")
            session = Session(
                session_id=sid,
                batch=parse_batch_text(batch_text, source=str(self._batch_path(sid))),
                judgments=[Judgment.from_dict(rec) for rec in doc["judgments"]],
                cursor=doc.get("cursor", 0),
                created_at=doc.get("created_at", ""),
                last_saved_at=doc.get("last_saved_at", ""),
            )
            self.sessions[sid] = session

    def _save(self, session: Session) -> None:
        session.last_saved_at = _now()
        doc = {
            "session_id": session.session_id,
            "corpus_hash": session.batch.batch.corpus_hash,
            "cursor": session.cursor,
            "created_at": session.created_at,
            "last_saved_at": session.last_saved_at,
            "judgments": [j.to_dict() for j in session.judgments],
        }
        path = self._session_path(session.session_id)
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, ensure_ascii=False)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    # -- operations ---------------------------------------------------------

    def _get(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise _unknown_session(session_id) from None

    def create_session(self, batch_text: str) -> Session:
        try:
            loaded = parse_batch_text(batch_text, source="uploaded batch")
        except (ValueError, KeyError) as exc:
            raise ServiceError(400, "parse_error", f"batch did not parse: {exc}")
        if loaded.batch.corpus_hash != self.corpus.content_hash:
            raise ServiceError(
                400,
                "batch_mismatch",
                "batch was generated from a different corpus than the one served",
            )
        session = Session(
            session_id=uuid.uuid4().hex[:12],
            batch=loaded,
            created_at=_now(),
        )
        with self._registry_lock:
            self.sessions[session.session_id] = session
        self._batch_path(session.session_id).write_text(
            batch_text if batch_text.endswith("\n") else batch_text + "\n",
            encoding="utf-8",
        )
        self._save(session)
        return session

    def get_triple(self, session_id: str, index: int) -> dict:
        session = self._get(session_id)
        order = session.batch.order()
        if not 0 <= index < len(order):
            raise ServiceError(
                404,
                "index_out_of_range",
                f"index {index} outside batch of {len(order)} triples",
            )
        tid = order[index]
        triple = session.batch.triples[tid]
        unit = session.batch.batch.unit_of(tid)
        eff = effective_judgments(session.judgments)
        return {
            "index": index,
            "triple_id": tid,
            "stratum": session.batch.batch.strata[unit.stratum].name,
            "cluster_surface": unit.surface,
            "cluster_size": len(unit.triple_ids),
            "triple": triple_to_record(triple),
            "progress": session.progress(),
            "existing_verdict": eff[tid].verdict if tid in eff else None,
        }

    def submit_judgment(
        self,
        session_id: str,
        triple_id: str,
        verdict: str,
        elapsed_seconds: float,
        annotator_id: str = "",
    ) -> dict:
        session = self._get(session_id)
        order = session.batch.order()
        if triple_id not in session.batch.triples:
            raise ServiceError(
                400, "unknown_triple", f"triple {triple_id!r} is not in this batch"
            )
        if verdict not in VERDICTS:
            raise ServiceError(
                400, "invalid_verdict", f"verdict must be one of {list(VERDICTS)}"
            )
        if not 0.0 <= float(elapsed_seconds) <= MAX_ELAPSED_SECONDS:
            raise ServiceError(
                400,
                "invalid_elapsed",
                f"elapsed_seconds must be in [0, {MAX_ELAPSED_SECONDS:.0f}]",
            )
        with session.lock:
            judgment = Judgment(
                triple_id=triple_id,
                verdict=verdict,
                elapsed_seconds=float(elapsed_seconds),
                annotator_id=annotator_id,
                submitted_at=_now(),
            )
            session.judgments.append(judgment)
            index = order.index(triple_id)
            session.cursor = min(index + 1, len(order) - 1)
            unit = session.batch.batch.unit_of(triple_id)
            eff = effective_judgments(session.judgments)
            if all(t in eff for t in unit.triple_ids):
                session.report = recompute_on_cluster_complete(
                    session.judgments, session.batch.batch, session.config
                )
                session.report_version += 1
            self._save(session)
            report = session.current_report()
        return {
            "accepted": True,
            "triple_id": triple_id,
            "progress": session.progress(),
            "converged": report.converged,
            "report": report.to_dict(),
        }

    def get_estimate(self, session_id: str) -> dict:
        return self._get(session_id).current_report().to_dict()

    def export_session(self, session_id: str) -> dict:
        session = self._get(session_id)
        doc = JudgmentsDoc(
            session_id=session.session_id,
            corpus_hash=session.batch.batch.corpus_hash,
            judgments=tuple(session.judgments),
        )
        return doc.to_dict()

    def import_session(self, session_id: str, doc: dict) -> dict:
        session = self._get(session_id)
        try:
            parsed = JudgmentsDoc.from_dict(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(400, "parse_error", f"judgments did not parse: {exc}")
        if parsed.corpus_hash != session.batch.batch.corpus_hash:
            raise ServiceError(
                400, "hash_mismatch", "judgments belong to a different corpus"
            )
        unknown = [
            j.triple_id for j in parsed.judgments
            if j.triple_id not in session.batch.triples
        ]
        if unknown:
            raise ServiceError(
                400,
                "unknown_triple",
                f"judgments reference triples outside this batch: {unknown[:5]}",
            )
        with session.lock:
            session.judgments.extend(parsed.judgments)
            session.report = recompute_on_cluster_complete(
                session.judgments, session.batch.batch, session.config
            )
            session.report_version += 1
            self._save(session)
        return {
            "imported": len(parsed.judgments),
            "progress": session.progress(),
            "report": session.current_report().to_dict(),
        }

    def session_summary(self, session: Session) -> dict:
        return {
            "session_id": session.session_id,
            "corpus_hash": session.batch.batch.corpus_hash,
            "design": session.batch.batch.design.kind,
            "epsilon": session.batch.batch.epsilon,
            "alpha": session.batch.batch.alpha,
            "created_at": session.created_at,
            "last_saved_at": session.last_saved_at,
            "progress": session.progress(),
        }


def create_app(
    corpus: Corpus, data_dir: str, ui_dir: str | None = None
) -> FastAPI:
    """Build the FastAPI app around an :class:`AnnotationService`."""
    service = AnnotationService(corpus, data_dir)
    app = FastAPI(title="linkaudit annotation service")
    app.state.service = service
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ServiceError)
    async def service_error_handler(_request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"error_code": exc.error_code, "message": exc.message},
        )

    @app.get("/sessions")
    def list_sessions():
        return {
            "sessions": [
                service.session_summary(s) for s in service.sessions.values()
            ]
        }

    @app.post("/sessions", status_code=201)
    async def create_session(batch: UploadFile):
        text = (await batch.read()).decode("utf-8")
        session = service.create_session(text)
        return service.session_summary(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return service.session_summary(service._get(session_id))

    @app.get("/sessions/{session_id}/triples/{index}")
    def get_triple(session_id: str, index: int):
        return service.get_triple(session_id, index)

    @app.post("/sessions/{session_id}/judgments")
    async def submit_judgment(session_id: str, request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise ServiceError(400, "parse_error", "body must be JSON")
        for fieldname in ("triple_id", "verdict", "elapsed_seconds"):
            if fieldname not in body:
                raise ServiceError(
                    400, "parse_error", f"missing field {fieldname!r}"
                )
        return service.submit_judgment(
            session_id,
            triple_id=str(body["triple_id"]),
            verdict=str(body["verdict"]),
            elapsed_seconds=float(body["elapsed_seconds"]),
            annotator_id=str(body.get("annotator_id", "")),
        )

    @app.get("/sessions/{session_id}/estimate")
    def get_estimate(session_id: str):
        return service.get_estimate(session_id)

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        return service.export_session(session_id)

    @app.post("/sessions/{session_id}/import")
    async def import_session(session_id: str, request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise ServiceError(400, "parse_error", "body must be JSON")
        return service.import_session(session_id, body)

    @app.get("/sessions/{session_id}/events")
    async def events(session_id: str, request: Request, limit: int | None = None):
        """Server-sent estimate updates; ``limit`` ends the stream after
        that many events (handy for scripts and tests)."""
        session = service._get(session_id)

        async def stream():
            last = -1
            sent = 0
            while not await request.is_disconnected():
                if session.report_version != last:
                    last = session.report_version
                    report = session.current_report().to_dict()
                    payload = json.dumps({"type": "estimate", "report": report})
                    yield f"data: {payload}\n\n"
                    sent += 1
                    if limit is not None and sent >= limit:
                        return
                await asyncio.sleep(0.25)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if ui_dir:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
