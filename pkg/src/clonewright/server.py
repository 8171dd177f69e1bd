"""HTTP+JSON service backing the companion UI.

All project mutations (apply, undo, thresholds) are serialized behind one
lock and bump a monotonically increasing revision number; a client whose
revision is stale receives 409. Failed refactoring preconditions come back
as 422 with per-instance skip reasons. Undo restores byte-identical files
from whole-project snapshots.
"""

from __future__ import annotations

import difflib
import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from clonewright.cache import CloneCache
from clonewright.config import Thresholds
from clonewright.detector import CloneClass, detect
from clonewright.errors import ClonewrightError, RefactorError
from clonewright.mel.printer import print_expr, print_fundef
from clonewright.mel.tokens import Span
from clonewright.project import InstanceRef, Project
from clonewright.refactor import (
    RefactorResult,
    apply_result,
    eliminate,
    extract_function,
    fold,
    generalise,
    inline,
    rename_function,
    rename_variable,
    swap_arguments,
)


class HttpError(Exception):
    def __init__(self, status: int, payload: dict):
        self.status = status
        self.payload = payload


class CloneService:
    def __init__(self, root: Path, thresholds: Thresholds | None = None):
        self.root = Path(root)
        self.thresholds = thresholds or Thresholds()
        self.lock = threading.RLock()
        self.cache = CloneCache()
        self.revision = 0
        self.undo_stack: list[dict[str, str]] = []
        self.pending: dict | None = None
        self.project: Project | None = None
        self.classes: list[CloneClass] = []
        self._redetect()

    # -- state ------------------------------------------------------------

    def _texts(self) -> dict[str, str]:
        texts = {}
        for path in sorted(self.root.rglob("*.mel")):
            texts[str(path.relative_to(self.root))] = path.read_text(encoding="utf-8")
        return texts

    def _redetect(self) -> None:
        self.project = Project.from_texts(self._texts(), self.cache)
        self.classes = detect(self.project, self.thresholds, self.cache)
        self.pending = None
        self.revision += 1

    def _check_revision(self, body: dict) -> None:
        if body.get("revision") != self.revision:
            raise HttpError(
                409,
                {
                    "error": "stale revision",
                    "expected": self.revision,
                    "got": body.get("revision"),
                },
            )

    # -- read endpoints ------------------------------------------------------

    def report_payload(self, order: str) -> dict:
        with self.lock:
            indexed = list(enumerate(self.classes))
            if order == "freq":
                indexed.sort(key=lambda p: (-p[1].occurrences, p[1].span_set()))
            else:
                indexed.sort(key=lambda p: (-p[1].size_loc, p[1].span_set()))
            return {
                "revision": self.revision,
                "order": order,
                "thresholds": self._threshold_payload(),
                "classes": [self._class_summary(i, c) for i, c in indexed],
            }

    def _threshold_payload(self) -> dict:
        t = self.thresholds
        return {
            "min_len": t.min_len,
            "min_toks": t.min_toks,
            "min_freq": t.min_freq,
            "max_new_params": t.max_new_params,
            "min_similarity": t.min_similarity,
        }

    def _class_summary(self, index: int, cls: CloneClass) -> dict:
        return {
            "id": index,
            "kind": cls.kind,
            "occurrences": cls.occurrences,
            "sizeLoc": cls.size_loc,
            "similarity": round(cls.similarity, 4),
            "newParams": cls.new_params,
            "totalParams": cls.total_params,
            "firstInstance": {
                "file": cls.instances[0].ref.file,
                "span": cls.instances[0].span.render(),
            },
        }

    def clone_payload(self, clone_id: int) -> dict:
        with self.lock:
            if not 0 <= clone_id < len(self.classes):
                raise HttpError(404, {"error": f"no clone {clone_id}"})
            cls = self.classes[clone_id]
            fd = generalise(self.project, cls)
            return {
                "revision": self.revision,
                "id": clone_id,
                "params": list(cls.template.params),
                "newParams": list(cls.template.new_params),
                "exports": list(cls.template.exports),
                "template": print_fundef(fd),
                "kind": cls.kind,
                "similarity": round(cls.similarity, 4),
                "instances": [
                    {
                        "file": inst.ref.file,
                        "span": inst.span.render(),
                        "substitution": {
                            p: print_expr(inst.substitution[p])
                            for p in cls.template.params
                        },
                    }
                    for inst in cls.instances
                ],
            }

    def source_payload(self, file: str) -> dict:
        with self.lock:
            unit = self.project.units.get(file)
            if unit is None:
                raise HttpError(404, {"error": f"no file {file}"})
            return {"revision": self.revision, "file": file, "text": unit.text}

    # -- mutations ----------------------------------------------------------

    def preview(self, body: dict) -> dict:
        with self.lock:
            self._check_revision(body)
            try:
                result = self._run_refactoring(
                    body.get("refactoring"), body.get("args") or {}
                )
            except ClonewrightError as err:
                raise HttpError(422, {"error": str(err)}) from err
            outcomes = [
                {
                    "file": o.ref.file,
                    "clause": o.ref.clause_key,
                    "range": [o.ref.lo, o.ref.hi],
                    "applied": o.applied,
                    "reason": o.reason,
                }
                for o in result.outcomes
            ]
            if result.outcomes and not any(o.applied for o in result.outcomes):
                raise HttpError(
                    422,
                    {"error": "no instance can be folded", "outcomes": outcomes},
                )
            diffs = {}
            for file, new_text in sorted(result.changed.items()):
                old_text = (
                    self.project.units[file].text if file in self.project.units else ""
                )
                diffs[file] = "".join(
                    difflib.unified_diff(
                        old_text.splitlines(keepends=True),
                        new_text.splitlines(keepends=True),
                        fromfile=f"a/{file}",
                        tofile=f"b/{file}",
                    )
                )
            self.pending = {
                "revision": self.revision,
                "result": result,
                "diffs": diffs,
                "outcomes": outcomes,
            }
            return {"revision": self.revision, "diffs": diffs, "outcomes": outcomes}

    def _run_refactoring(self, kind: str, args: dict) -> RefactorResult:
        project = self.project
        if kind == "fold":
            selection = None
            if args.get("instances") is not None:
                selection = [self._ref(r) for r in args["instances"]]
            return fold(
                project, args["module"], args["name"], int(args["arity"]), selection
            )
        if kind == "eliminate":
            cls = self._class_by_id(int(args["class_id"]))
            selection = None
            if args.get("instances") is not None:
                selection = [
                    cls.instances[i].ref for i in args["instances"]
                ]
            return eliminate(
                project,
                cls,
                args["new_name"],
                args.get("param_names"),
                args.get("param_order"),
                selection,
            )
        if kind == "rename_function":
            return rename_function(
                project, args["module"], args["name"], int(args["arity"]), args["new_name"]
            )
        if kind == "rename_variable":
            return rename_variable(
                project, args["file"], int(args["line"]), int(args["col"]), args["new_name"]
            )
        if kind == "swap_arguments":
            return swap_arguments(
                project, args["module"], args["name"], int(args["arity"]),
                int(args["i"]), int(args["j"]),
            )
        if kind == "inline":
            return inline(project, args["file"], int(args["line"]), int(args["col"]))
        if kind == "extract_function":
            file = args["file"]
            span = _parse_span(file, args["span"])
            return extract_function(project, file, span, args["new_name"])
        raise HttpError(422, {"error": f"unknown refactoring {kind!r}"})

    def _class_by_id(self, clone_id: int) -> CloneClass:
        if not 0 <= clone_id < len(self.classes):
            raise HttpError(404, {"error": f"no clone {clone_id}"})
        return self.classes[clone_id]

    def _ref(self, payload: dict) -> InstanceRef:
        return InstanceRef(
            payload["file"],
            tuple(payload["clause"]),
            int(payload["range"][0]),
            int(payload["range"][1]),
        )

    def apply(self, body: dict) -> dict:
        with self.lock:
            self._check_revision(body)
            if self.pending is None or self.pending["revision"] != self.revision:
                raise HttpError(422, {"error": "no pending preview for this revision"})
            snapshot = self._texts()
            result: RefactorResult = self.pending["result"]
            try:
                apply_result(result, self.root)
            except RefactorError as err:
                raise HttpError(422, {"error": str(err)}) from err
            self.undo_stack.append(snapshot)
            self._redetect()
            return {"revision": self.revision, "report": self.report_payload("size")}

    def undo(self, body: dict) -> dict:
        with self.lock:
            self._check_revision(body)
            if not self.undo_stack:
                raise HttpError(422, {"error": "nothing to undo"})
            snapshot = self.undo_stack.pop()
            current = self._texts()
            for file in current:
                if file not in snapshot:
                    (self.root / file).unlink()
            for file, text in snapshot.items():
                path = self.root / file
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_name(path.name + ".tmp")
                tmp.write_text(text, encoding="utf-8")
                tmp.replace(path)
            self._redetect()
            return {"revision": self.revision, "report": self.report_payload("size")}

    def set_thresholds(self, body: dict) -> dict:
        with self.lock:
            self._check_revision(body)
            values = self._threshold_payload()
            for key in values:
                if key in body:
                    values[key] = body[key]
            try:
                self.thresholds = Thresholds(**values)
            except ValueError as err:
                raise HttpError(422, {"error": str(err)}) from err
            self._redetect()
            return {"revision": self.revision, "report": self.report_payload("size")}


def _parse_span(file: str, text: str) -> Span:
    start, _, end = text.partition("-")
    l1, _, c1 = start.partition(".")
    l2, _, c2 = end.partition(".")
    return Span(file, int(l1), int(c1), int(l2), int(c2))


def ui_directory() -> Path | None:
    override = os.environ.get("CLONEWRIGHT_UI")
    if override:
        path = Path(override)
        return path if path.is_dir() else None
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


class _Handler(BaseHTTPRequestHandler):
    service: CloneService = None  # set by serve()

    def log_message(self, format, *args):  # quiet by default
        pass

    def _send(self, status: int, payload: dict) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(data)

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if not length:
            return {}
        try:
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError as err:
            raise HttpError(422, {"error": f"invalid JSON body: {err}"}) from err

    def do_OPTIONS(self):
        self._send(204, {})

    def do_GET(self):
        try:
            url = urlparse(self.path)
            query = {k: v[0] for k, v in parse_qs(url.query).items()}
            if url.path == "/report":
                order = query.get("order", "size")
                if order not in ("size", "freq"):
                    raise HttpError(422, {"error": f"unknown order {order!r}"})
                self._send(200, self.service.report_payload(order))
            elif url.path == "/source":
                if "file" not in query:
                    raise HttpError(422, {"error": "missing file parameter"})
                self._send(200, self.service.source_payload(query["file"]))
            elif url.path.startswith("/clone/"):
                try:
                    clone_id = int(url.path.rsplit("/", 1)[1])
                except ValueError:
                    raise HttpError(404, {"error": "bad clone id"}) from None
                self._send(200, self.service.clone_payload(clone_id))
            elif url.path == "/health":
                self._send(200, {"revision": self.service.revision})
            else:
                self._serve_static(url.path)
        except HttpError as err:
            self._send(err.status, err.payload)

    def _serve_static(self, path: str) -> None:
        ui = ui_directory()
        if ui is None:
            raise HttpError(404, {"error": f"no route {path}"})
        rel = path.lstrip("/") or "index.html"
        if rel == "ui":
            rel = "index.html"
        target = (ui / rel).resolve()
        if not str(target).startswith(str(ui.resolve())) or not target.is_file():
            raise HttpError(404, {"error": f"no route {path}"})
        data = target.read_bytes()
        types = {".html": "text/html", ".js": "text/javascript", ".css": "text/css"}
        self.send_response(200)
        self.send_header("Content-Type", types.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self):
        try:
            body = self._body()
            if self.path == "/preview":
                self._send(200, self.service.preview(body))
            elif self.path == "/apply":
                self._send(200, self.service.apply(body))
            elif self.path == "/undo":
                self._send(200, self.service.undo(body))
            elif self.path == "/thresholds":
                self._send(200, self.service.set_thresholds(body))
            else:
                raise HttpError(404, {"error": f"no route {self.path}"})
        except HttpError as err:
            self._send(err.status, err.payload)


def make_server(root: Path, port: int, thresholds: Thresholds | None = None):
    service = CloneService(root, thresholds)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer(("127.0.0.1", port), handler), service


def serve(root: Path, port: int, thresholds: Thresholds | None = None) -> None:
    server, _ = make_server(root, port, thresholds)
    host, actual_port = server.server_address
    print(f"clonewright service on http://{host}:{actual_port}/ (project root: {root})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
