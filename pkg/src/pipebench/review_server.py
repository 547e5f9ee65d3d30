"""Local HTTP service for expert review of task instances.

Serves task summaries, full task detail (with a fresh execution result
and a cell-level diff against the gold output), verdict submission, and
dashboard aggregates, plus static hosting for the built review UI.
Verdicts go to an append-only JSONL log; the newest entry per
(task, reviewer) wins.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from .interpreter import ExecutionError, execute_program
from .metrics import EquivalenceOptions, canonical_equal, cohen_kappa
from .tables import Table
from .tasks import TaskInstance, load_task_dir

CRITERIA = ("instruction_accuracy", "operator_coverage", "semantic_clarity")
DECISIONS = ("accept", "reject")

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".map": "application/json; charset=utf-8",
    ".ico": "image/x-icon",
}


def validate_verdict(obj) -> tuple[Optional[dict], Optional[str]]:
    """Normalize a submitted verdict; returns (verdict, error)."""
    if not isinstance(obj, dict):
        return None, "verdict must be a JSON object"
    reviewer = obj.get("reviewer")
    if not isinstance(reviewer, str) or not reviewer.strip():
        return None, "missing reviewer id"
    scores = obj.get("scores")
    if not isinstance(scores, dict):
        return None, "missing scores object"
    clean_scores = {}
    for criterion in CRITERIA:
        value = scores.get(criterion)
        if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 3:
            return None, f"score {criterion!r} must be an integer in 1..3"
        clean_scores[criterion] = value
    decision = obj.get("decision")
    if decision not in DECISIONS:
        return None, f"decision must be one of {DECISIONS}"
    if decision == "accept" and any(v != 3 for v in clean_scores.values()):
        return None, "accept requires the top score on all three criteria"
    return {
        "reviewer": reviewer.strip(),
        "scores": clean_scores,
        "decision": decision,
    }, None


class VerdictStore:
    """Append-only JSONL log; a torn final line is ignored on load."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, task_id: str, verdict: dict) -> dict:
        record = {"task_id": task_id, **verdict, "timestamp": time.time()}
        line = json.dumps(record, ensure_ascii=False) + "\n"
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
        return record

    def load(self) -> list[dict]:
        if not self.path.is_file():
            return []
        records = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError:
                    continue  # torn write from a crash; never a partial record
        return records

    def latest(self) -> dict[tuple[str, str], dict]:
        current: dict[tuple[str, str], dict] = {}
        for record in self.load():
            key = (record.get("task_id"), record.get("reviewer"))
            current[key] = record  # file order = arrival order; last wins
        return current


@dataclass
class TaskMeta:
    status: str  # "pass" | "fail"
    duration: float
    actual: Optional[Table]
    error: Optional[str]


class ReviewState:
    def __init__(self, tasks: list[TaskInstance], store: VerdictStore,
                 opts: EquivalenceOptions = EquivalenceOptions()):
        self.tasks = {t.task_id: t for t in tasks}
        self.order = [t.task_id for t in tasks]
        self.store = store
        self.opts = opts
        self.meta: dict[str, TaskMeta] = {}
        for t in tasks:
            started = time.perf_counter()
            try:
                actual, _ = execute_program(t.tables, t.program)
                error = None
            except ExecutionError as exc:
                actual, error = None, str(exc)
            duration = time.perf_counter() - started
            ok = actual is not None and canonical_equal(actual, t.gold_output, opts)
            self.meta[t.task_id] = TaskMeta(
                "pass" if ok else "fail", duration, actual, error
            )

    # -- payload builders --------------------------------------------------

    def summary(self, task_id: str, reviewed_ids: set[str]) -> dict:
        t = self.tasks[task_id]
        m = self.meta[task_id]
        return {
            "id": task_id,
            "difficulty": t.difficulty.value,
            "status": m.status,
            "duration": round(m.duration, 6),
            "ops": [k.value for k in t.program.kinds()],
            "num_ops": len(t.program),
            "reviewed": task_id in reviewed_ids,
        }

    def list_payload(self, query: dict) -> dict:
        reviewed_ids = {task_id for task_id, _ in self.store.latest()}
        ids = list(self.order)
        difficulty = query.get("difficulty", [None])[0]
        if difficulty:
            ids = [i for i in ids if self.tasks[i].difficulty.value == difficulty]
        op = query.get("op", [None])[0]
        if op:
            ids = [
                i for i in ids
                if op in (k.value for k in self.tasks[i].program.kinds())
            ]
        status = query.get("status", [None])[0]
        if status:
            ids = [i for i in ids if self.meta[i].status == status]
        page = max(1, int(query.get("page", ["1"])[0]))
        page_size = min(200, max(1, int(query.get("page_size", ["20"])[0])))
        start = (page - 1) * page_size
        chunk = ids[start : start + page_size]
        return {
            "total": len(ids),
            "page": page,
            "page_size": page_size,
            "tasks": [self.summary(i, reviewed_ids) for i in chunk],
        }

    def diff_payload(self, task_id: str) -> dict:
        t = self.tasks[task_id]
        m = self.meta[task_id]
        gold = t.gold_output
        if m.actual is None:
            return {"aligned": False, "reason": m.error or "execution failed"}
        actual = m.actual
        names = sorted(gold.column_names)
        if sorted(actual.column_names) != names or actual.num_rows != gold.num_rows:
            return {"aligned": False, "reason": "shape or column names differ"}

        def aligned_rows(table: Table) -> list[list]:
            idx = [table.column_index(n) for n in names]
            rows = [[row[i] for i in idx] for row in table.rows]
            from .metrics import _cell_sort_key

            grid = self.opts.float_tolerance / 10.0
            rows.sort(key=lambda row: tuple(_cell_sort_key(v, grid) for v in row))
            return rows

        gold_rows = aligned_rows(gold)
        actual_rows = aligned_rows(actual)
        from .metrics import _cells_equal

        mismatch = [
            [
                not _cells_equal(a, g, self.opts.float_tolerance)
                for a, g in zip(arow, grow)
            ]
            for arow, grow in zip(actual_rows, gold_rows)
        ]
        return {
            "aligned": True,
            "columns": names,
            "gold_rows": gold_rows,
            "actual_rows": actual_rows,
            "mismatch": mismatch,
        }

    def detail_payload(self, task_id: str) -> dict:
        t = self.tasks[task_id]
        m = self.meta[task_id]
        verdicts = [
            record
            for (tid, _), record in sorted(self.store.latest().items())
            if tid == task_id
        ]
        reviewed_ids = {tid for tid, _ in self.store.latest()}
        return {
            **self.summary(task_id, reviewed_ids),
            "instruction": t.instruction.to_json_obj(),
            "program": json.loads(json.dumps(t.to_json_obj()["program"])),
            "code": t.code,
            "tables": [table.to_json_obj() for table in t.tables],
            "gold_output": t.gold_output.to_json_obj(),
            "actual": m.actual.to_json_obj() if m.actual is not None else None,
            "error": m.error,
            "diff": self.diff_payload(task_id),
            "verdicts": verdicts,
        }

    def stats_payload(self) -> dict:
        from collections import Counter

        total = len(self.tasks)
        passing = sum(1 for m in self.meta.values() if m.status == "pass")
        ops = Counter()
        for t in self.tasks.values():
            for k in t.program.kinds():
                ops[k.value] += 1
        latest = self.store.latest()
        decisions = [r["decision"] for r in latest.values()]
        kappa = self._kappa(latest)
        durations = [m.duration for m in self.meta.values()]
        return {
            "total": total,
            "passing": passing,
            "success_rate": (passing / total) if total else None,
            "difficulty": dict(
                sorted(Counter(t.difficulty.value for t in self.tasks.values()).items())
            ),
            "operators": dict(ops.most_common()),
            "avg_duration": sum(durations) / len(durations) if durations else None,
            "reviewed_tasks": len({tid for tid, _ in latest}),
            "verdicts": len(latest),
            "accept_rate": (
                decisions.count("accept") / len(decisions) if decisions else None
            ),
            "kappa": kappa,
        }

    def _kappa(self, latest: dict[tuple[str, str], dict]) -> Optional[float]:
        by_task: dict[str, dict[str, str]] = {}
        for (task_id, reviewer), record in latest.items():
            by_task.setdefault(task_id, {})[reviewer] = record["decision"]
        a_labels, b_labels = [], []
        reviewers = sorted({r for pair in by_task.values() for r in pair})
        for i, ra in enumerate(reviewers):
            for rb in reviewers[i + 1 :]:
                for pair in by_task.values():
                    if ra in pair and rb in pair:
                        a_labels.append(pair[ra])
                        b_labels.append(pair[rb])
        if not a_labels:
            return None
        return cohen_kappa(a_labels, b_labels)


class ReviewHandler(BaseHTTPRequestHandler):
    state: ReviewState
    ui_dir: Optional[Path] = None

    def log_message(self, fmt, *fmt_args):  # quiet by default
        pass

    def _send_json(self, payload, status: int = 200):
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        if parts[:2] == ["api", "tasks"] and len(parts) == 2:
            self._send_json(self.state.list_payload(parse_qs(url.query)))
        elif parts[:2] == ["api", "tasks"] and len(parts) == 3:
            task_id = parts[2]
            if task_id not in self.state.tasks:
                self._send_json({"error": f"no task {task_id!r}"}, 404)
                return
            self._send_json(self.state.detail_payload(task_id))
        elif parts[:2] == ["api", "stats"]:
            self._send_json(self.state.stats_payload())
        else:
            self._serve_static(url.path)

    def do_POST(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        if len(parts) == 4 and parts[:2] == ["api", "tasks"] and parts[3] == "verdict":
            task_id = parts[2]
            if task_id not in self.state.tasks:
                self._send_json({"error": f"no task {task_id!r}"}, 404)
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                obj = json.loads(self.rfile.read(length).decode("utf-8"))
            except (ValueError, json.JSONDecodeError):
                self._send_json({"error": "body is not valid JSON"}, 422)
                return
            verdict, error = validate_verdict(obj)
            if error:
                self._send_json({"error": error}, 422)
                return
            record = self.state.store.append(task_id, verdict)
            self._send_json({"ok": True, "verdict": record})
        else:
            self._send_json({"error": "unknown endpoint"}, 404)

    def _serve_static(self, path: str):
        if self.ui_dir is None:
            if path in ("/", "/index.html"):
                body = (
                    b"<!doctype html><title>pipeline review</title>"
                    b"<p>No UI build configured; the JSON API lives under /api/.</p>"
                )
                self.send_response(200)
                self.send_header("Content-Type", "text/html; charset=utf-8")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
            else:
                self._send_json({"error": "not found"}, 404)
            return
        relative = path.lstrip("/") or "index.html"
        target = (self.ui_dir / relative).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            # SPA routes fall back to the shell page
            target = (self.ui_dir / "index.html").resolve()
            if not target.is_file():
                self._send_json({"error": "not found"}, 404)
                return
        body = target.read_bytes()
        self.send_response(200)
        content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(
    tasks_dir: str,
    verdicts_path: str,
    port: int = 0,
    ui_dir: Optional[str] = None,
    host: str = "127.0.0.1",
) -> ThreadingHTTPServer:
    tasks = load_task_dir(tasks_dir)
    state = ReviewState(tasks, VerdictStore(verdicts_path))
    handler = type(
        "BoundReviewHandler",
        (ReviewHandler,),
        {"state": state, "ui_dir": Path(ui_dir) if ui_dir else None},
    )
    return ThreadingHTTPServer((host, port), handler)


def serve(tasks_dir, verdicts_path, port, ui_dir=None, host="127.0.0.1"):
    server = make_server(tasks_dir, verdicts_path, port, ui_dir, host)
    actual_port = server.server_address[1]
    print(f"review service on http://{host}:{actual_port}/ (Ctrl-C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
