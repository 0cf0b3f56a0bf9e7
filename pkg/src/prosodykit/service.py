"""Session HTTP service backing the browser editor.

One directory per session on local disk (audio, alignment, prosody.json,
provenance.log); no database. Mutations are serialized per session behind a
lock and versioned with a revision counter: clients send If-Match with the
revision they saw, stale writes get 409. Resynthesized audio is cached per
revision and invalidated on mutation.
"""
from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Header, Request, Response, UploadFile
from fastapi.responses import JSONResponse

from . import errors as err
from .alignment import PhoneAlignment, load_alignment, save_alignment
from .analysis import PitchSpec, track_pitch
from .audio_io import AudioBuffer, load_wav, save_wav
from .metrics import evaluate_pair
from .prosody import (
    EditScript,
    ProsodyTrack,
    SpliceRegion,
    apply_edits,
    average_per_phone,
    splice,
)
from .resynth import resynthesize_track

log = logging.getLogger("prosodykit.service")

DEFAULT_MAX_UPLOAD = 64 * 1024 * 1024


@dataclass
class Session:
    id: str
    dir: Path
    audio: AudioBuffer
    alignment: PhoneAlignment
    prosody: ProsodyTrack
    revision: int
    provenance: list
    lock: threading.Lock = field(default_factory=threading.Lock)
    resynth_cache: tuple[int, AudioBuffer] | None = None


class SessionStore:
    """Disk-backed session registry; restores byte-identically on restart."""

    def __init__(self, data_dir: Path, pitch_spec: PitchSpec | None = None):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.pitch_spec = pitch_spec or PitchSpec()
        self.sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        self._restore()

    def _restore(self) -> None:
        for session_dir in sorted(self.data_dir.iterdir()):
            meta_path = session_dir / "meta.json"
            if not meta_path.is_file():
                continue
            try:
                meta = json.loads(meta_path.read_text(encoding="utf-8"))
                payload = json.loads(
                    (session_dir / "prosody.json").read_text(encoding="utf-8"))
                session = Session(
                    id=meta["id"],
                    dir=session_dir,
                    audio=load_wav(session_dir / "audio.wav"),
                    alignment=load_alignment(session_dir / "alignment.lab"),
                    prosody=ProsodyTrack.from_json_dict(payload),
                    revision=int(meta["revision"]),
                    provenance=list(payload.get("provenance", [])),
                )
                self.sessions[session.id] = session
            except Exception as exc:
                log.warning("skipping unrestorable session %s: %s",
                            session_dir.name, exc)

    def create(self, audio: AudioBuffer, alignment: PhoneAlignment) -> Session:
        track = track_pitch(audio, self.pitch_spec)
        prosody = average_per_phone(track, alignment)
        session_id = uuid.uuid4().hex
        session_dir = self.data_dir / session_id
        session_dir.mkdir()
        session = Session(
            id=session_id,
            dir=session_dir,
            audio=audio,
            alignment=alignment,
            prosody=prosody,
            revision=1,
            provenance=[{"op": "create", "timestamp": _now_iso()}],
        )
        save_wav(audio, session_dir / "audio.wav")
        save_alignment(alignment, session_dir / "alignment.lab")
        self._persist(session)
        with self._registry_lock:
            self.sessions[session_id] = session
        return session

    def _persist(self, session: Session) -> None:
        payload = session.prosody.to_json_dict()
        payload["provenance"] = session.provenance
        (session.dir / "prosody.json").write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        (session.dir / "meta.json").write_text(
            json.dumps({"id": session.id, "revision": session.revision}),
            encoding="utf-8")
        with open(session.dir / "provenance.log", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(session.provenance[-1]) + "\n")

    def get(self, session_id: str) -> Session | None:
        return self.sessions.get(session_id)

    def mutate(self, session: Session, if_match: int | None, op: str,
               params: dict, transform) -> Session:
        """Apply a prosody transformation under the session lock.

        ``transform`` maps the current ProsodyTrack to the new one; revision
        bumps by exactly 1 per accepted mutation.
        """
        with session.lock:
            if if_match != session.revision:
                raise RevisionConflict(session.revision)
            session.prosody = transform(session.prosody)
            session.revision += 1
            session.resynth_cache = None
            session.provenance.append(
                {"op": op, "params": params, "timestamp": _now_iso()})
            self._persist(session)
        return session

    def resynthesize(self, session: Session) -> AudioBuffer:
        with session.lock:
            if (session.resynth_cache
                    and session.resynth_cache[0] == session.revision):
                return session.resynth_cache[1]
            revision = session.revision
            audio = session.audio
            alignment = session.alignment
            prosody = session.prosody
        out, _ = resynthesize_track(audio, alignment, prosody,
                                    pitch_spec=self.pitch_spec)
        with session.lock:
            if session.revision == revision:
                session.resynth_cache = (revision, out)
        return out

    def latest_audio(self, session: Session) -> AudioBuffer:
        with session.lock:
            if (session.resynth_cache
                    and session.resynth_cache[0] == session.revision):
                return session.resynth_cache[1]
            return session.audio


class RevisionConflict(Exception):
    def __init__(self, current: int):
        self.current = current
        super().__init__(f"revision conflict; current is {current}")


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def _prosody_body(session: Session) -> dict:
    return {
        "id": session.id,
        "revision": session.revision,
        "prosody": session.prosody.to_json_dict(),
    }


def _wav_bytes(audio: AudioBuffer) -> bytes:
    import tempfile

    with tempfile.NamedTemporaryFile(suffix=".wav") as tmp:
        save_wav(audio, tmp.name)
        return Path(tmp.name).read_bytes()


def create_app(data_dir, max_upload_bytes: int = DEFAULT_MAX_UPLOAD,
               allow_origin: str | None = None,
               pitch_spec: PitchSpec | None = None,
               ui_dir=None) -> FastAPI:
    app = FastAPI(title="prosodykit session service")
    store = SessionStore(Path(data_dir), pitch_spec=pitch_spec)
    app.state.store = store

    if allow_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[allow_origin],
            allow_methods=["*"],
            allow_headers=["*"],
            expose_headers=["ETag"],
        )

    def error_response(status: int, exc: Exception) -> JSONResponse:
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request, audio: UploadFile,
                             alignment: UploadFile):
        length = request.headers.get("content-length")
        if length and int(length) > max_upload_bytes:
            return error_response(413, ValueError(
                f"payload exceeds {max_upload_bytes} bytes"))
        audio_bytes = await audio.read()
        align_bytes = await alignment.read()
        if len(audio_bytes) + len(align_bytes) > max_upload_bytes:
            return error_response(413, ValueError(
                f"payload exceeds {max_upload_bytes} bytes"))
        import tempfile

        try:
            with tempfile.TemporaryDirectory() as tmp:
                audio_path = Path(tmp) / (audio.filename or "audio.wav")
                audio_path.write_bytes(audio_bytes)
                align_name = alignment.filename or "alignment.lab"
                align_path = Path(tmp) / align_name
                align_path.write_bytes(align_bytes)
                buf = load_wav(audio_path)
                align = load_alignment(align_path)
            session = store.create(buf, align)
        except (err.ProsodyKitError, OSError, ValueError) as exc:
            return error_response(400, exc)
        return JSONResponse(status_code=201, content=_prosody_body(session))

    @app.get("/sessions/{session_id}/prosody")
    def get_prosody(session_id: str):
        session = store.get(session_id)
        if session is None:
            return error_response(404, KeyError(session_id))
        with session.lock:
            return _prosody_body(session)

    @app.get("/sessions/{session_id}/audio")
    def get_audio(session_id: str):
        session = store.get(session_id)
        if session is None:
            return error_response(404, KeyError(session_id))
        return Response(content=_wav_bytes(session.audio),
                        media_type="audio/wav")

    @app.patch("/sessions/{session_id}/prosody")
    async def patch_prosody(session_id: str, request: Request,
                            if_match: str | None = Header(default=None)):
        session = store.get(session_id)
        if session is None:
            return error_response(404, KeyError(session_id))
        try:
            payload = await request.json()
            script = EditScript.from_json_dict(payload)
        except (KeyError, TypeError, ValueError,
                err.InvalidValueError) as exc:
            return error_response(422, exc)
        try:
            revision = int(if_match) if if_match is not None else None
        except ValueError:
            revision = None
        try:
            store.mutate(session, revision, "edit",
                         {"n_ops": len(script.ops)},
                         lambda track: apply_edits(track, script))
        except RevisionConflict as exc:
            return JSONResponse(status_code=409, content={
                "error": "RevisionConflict", "revision": exc.current})
        except (err.IndexOutOfRangeError, err.InvalidValueError) as exc:
            return error_response(422, exc)
        with session.lock:
            return _prosody_body(session)

    @app.post("/sessions/{session_id}/splice")
    async def splice_sessions(session_id: str, request: Request,
                              if_match: str | None = Header(default=None)):
        session = store.get(session_id)
        if session is None:
            return error_response(404, KeyError(session_id))
        try:
            payload = await request.json()
            donor_id = payload["donor"]
            region = SpliceRegion(start_phone=int(payload["start_phone"]),
                                  end_phone=int(payload["end_phone"]))
        except (KeyError, TypeError, ValueError,
                err.IndexOutOfRangeError) as exc:
            return error_response(422, exc)
        donor = store.get(donor_id)
        if donor is None:
            return error_response(404, KeyError(donor_id))
        with donor.lock:
            donor_prosody = donor.prosody
        try:
            revision = int(if_match) if if_match is not None else None
        except ValueError:
            revision = None
        try:
            store.mutate(session, revision, "splice",
                         {"donor": donor_id,
                          "start_phone": region.start_phone,
                          "end_phone": region.end_phone},
                         lambda track: splice(track, donor_prosody, region))
        except RevisionConflict as exc:
            return JSONResponse(status_code=409, content={
                "error": "RevisionConflict", "revision": exc.current})
        except err.PhoneSequenceMismatchError as exc:
            return error_response(409, exc)
        except (err.IndexOutOfRangeError, err.InvalidValueError) as exc:
            return error_response(422, exc)
        with session.lock:
            return _prosody_body(session)

    @app.post("/sessions/{session_id}/resynthesize")
    def resynthesize_session(session_id: str):
        session = store.get(session_id)
        if session is None:
            return error_response(404, KeyError(session_id))
        try:
            out = store.resynthesize(session)
        except err.ProsodyKitError as exc:
            return error_response(409, exc)
        return Response(content=_wav_bytes(out), media_type="audio/wav",
                        headers={"ETag": str(session.revision)})

    @app.get("/sessions/{session_id}/metrics")
    def metrics_endpoint(session_id: str, against: str):
        session = store.get(session_id)
        other = store.get(against)
        if session is None or other is None:
            return error_response(404, KeyError(
                session_id if session is None else against))
        mine = store.latest_audio(session)
        theirs = store.latest_audio(other)
        try:
            report = evaluate_pair(theirs, mine, pitch=store.pitch_spec)
        except err.SampleRateMismatchError as exc:
            return error_response(409, exc)
        return report.to_json_dict()

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")

    return app
