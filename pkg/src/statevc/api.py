"""Local HTTP interface the web UI consumes.

JSON over HTTP/1.1; schemas documented in docs/api.md. Mutating calls
are serialized through one lock so reads never observe partial state;
unsafe rollbacks come back as HTTP 409 carrying the checkout class. A
long-poll /events endpoint lets clients refresh right after mutations.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse

from . import graph as graph_mod
from . import search as search_mod
from .kernel import repr_value, type_name
from .model import CheckoutMode
from .session import CheckoutRejected, NotCodeCell, Session, UnknownCell
from .store import UnknownCommit

DEFAULT_REPR_CAP = 1024
VARIABLE_PAGE_SIZE = 50


def _error(status: int, code: str, message: str, **extra):
    return JSONResponse(
        status_code=status, content={"code": code, "message": message, **extra}
    )


def _cell_payload(cell) -> dict:
    return {
        "id": cell.cell_id,
        "kind": cell.kind,
        "source": cell.source,
        "output": cell.output,
        "error": cell.error_flag,
        "counter": cell.exec_counter,
    }


def _row_payload(row) -> dict:
    return {
        "type": "commit",
        "commit": row.commit,
        "row": row.row,
        "lane": row.lane,
        "edges": [{"to": e.to, "kind": e.kind} for e in row.edges],
        "labels": sorted(row.labels),
    }


def graph_payload(store, fold: bool) -> dict:
    rows = graph_mod.linearize(store)
    if not fold:
        return {"rows": [_row_payload(r) for r in rows], "groups": []}
    view = graph_mod.fold(rows, store)
    items = []
    groups = []
    for item in view.items:
        if isinstance(item, graph_mod.GroupedCommit):
            items.append(
                {
                    "type": "group",
                    "group_id": item.group_id,
                    "members": list(item.members),
                    "collapsed": item.collapsed,
                }
            )
            groups.append(
                {
                    "group_id": item.group_id,
                    "rows": [_row_payload(r) for r in view.expand(item.group_id)],
                }
            )
        else:
            items.append(_row_payload(item))
    return {"rows": items, "groups": groups}


def create_app(session: Session, repr_cap: int = DEFAULT_REPR_CAP) -> FastAPI:
    app = FastAPI(title="statevc")
    store = session.store
    lock = threading.Lock()
    events = {"seq": 0}
    events_cond = threading.Condition()

    def bump_events():
        with events_cond:
            events["seq"] += 1
            events_cond.notify_all()

    @app.get("/graph")
    def get_graph(fold: bool = Query(default=False)):
        return graph_payload(store, fold)

    @app.get("/head")
    def get_head():
        return {
            "head_code": session.head_code,
            "head_data": session.head_data,
            "split": session.head_code != session.head_data,
            "branch": session.branch,
            "detached": session.detached,
        }

    @app.get("/commit/{cid}")
    def get_commit(cid: str):
        try:
            commit = store.get_commit(cid)
        except UnknownCommit:
            return _error(404, "unknown_commit", f"unknown commit {cid}")
        return {
            "id": commit.id,
            "code_parent": commit.code_parent,
            "data_parent": commit.data_parent,
            "kind": commit.kind,
            "branch": commit.branch,
            "message": store.effective_message(cid),
            "tag": store.effective_tag(cid),
            "history_len": commit.history_len,
            "cells": [_cell_payload(c) for c in commit.code.cells],
            "changed_variables": sorted(commit.var_delta),
            "deleted_variables": sorted(commit.var_deleted),
        }

    @app.get("/commit/{cid}/variables")
    def get_variables(
        cid: str,
        page: int = Query(default=0, ge=0),
        page_size: int = Query(default=VARIABLE_PAGE_SIZE, ge=1),
        filter: str = Query(default=""),
    ):
        try:
            env = store.materialize_variables(cid)
        except UnknownCommit:
            return _error(404, "unknown_commit", f"unknown commit {cid}")
        names = list(env)
        if filter:
            needle = filter.lower()
            pinned = [n for n in names if needle in n.lower()]
            names = pinned + [n for n in names if needle not in n.lower()]
        total = len(names)
        names = names[page * page_size : (page + 1) * page_size]
        variables = []
        for name in names:
            text = repr_value(env[name])
            truncated = len(text.encode("utf-8")) > repr_cap
            if truncated:
                text = text.encode("utf-8")[:repr_cap].decode("utf-8", "ignore")
            variables.append(
                {
                    "name": name,
                    "type": type_name(env[name]),
                    "repr": text,
                    "truncated": truncated,
                }
            )
        return {"total": total, "page": page, "variables": variables}

    @app.get("/search")
    def get_search(q: str = Query(default="")):
        try:
            query = search_mod.parse_query(q)
        except search_mod.BadQuery as exc:
            return _error(400, "bad_query", str(exc))
        return {"commits": sorted(search_mod.search(store, query))}

    @app.get("/diff")
    def get_diff(a: str, b: str):
        try:
            var_diff = search_mod.diff_variables(store, a, b)
            code_diff = search_mod.diff_code(store, a, b)
        except UnknownCommit as exc:
            return _error(404, "unknown_commit", str(exc))
        cell_ops = []
        for op in code_diff.cell_ops:
            payload = {"op": op.op}
            if op.cell is not None:
                payload["cell"] = _cell_payload(op.cell)
            if op.op == "modified":
                payload["cell_id"] = op.cell_id
                payload["line_ops"] = [
                    {"op": lo.op, "line": lo.line} for lo in op.line_ops
                ]
            cell_ops.append(payload)
        return {
            "code": {"cell_ops": cell_ops},
            "variables": {
                "changed": sorted(var_diff.changed),
                "added_right": sorted(var_diff.added_right),
                "deleted_right": sorted(var_diff.deleted_right),
                "unchanged": sorted(var_diff.unchanged),
            },
        }

    @app.post("/execute")
    def post_execute(body: dict):
        with lock:
            try:
                cid = session.execute_cell(body["cell_id"])
            except UnknownCell as exc:
                return _error(404, "unknown_cell", str(exc))
            except NotCodeCell as exc:
                return _error(400, "not_code_cell", str(exc))
        bump_events()
        return {"commit": cid}

    @app.post("/cells")
    def post_cells(body: dict):
        op = body.get("op")
        with lock:
            try:
                if op == "add":
                    cell_id = session.add_cell(
                        kind=body.get("kind", "code"),
                        source=body.get("source", ""),
                        index=body.get("index"),
                    )
                    result = {"cell_id": cell_id}
                elif op == "edit":
                    session.edit_cell(body["cell_id"], body["source"])
                    result = {"cell_id": body["cell_id"]}
                elif op == "delete":
                    session.delete_cell(body["cell_id"])
                    result = {}
                elif op == "move":
                    session.move_cell(body["cell_id"], body["index"])
                    result = {}
                else:
                    return _error(400, "bad_request", f"unknown cell op {op!r}")
            except UnknownCell as exc:
                return _error(404, "unknown_cell", str(exc))
        bump_events()
        return result

    @app.post("/commit")
    def post_commit(body: dict):
        with lock:
            cid = session.commit_manual(
                message=body.get("message"), tag=body.get("tag")
            )
        bump_events()
        return {"commit": cid}

    @app.post("/checkout")
    def post_checkout(body: dict):
        target = body.get("commit", "")
        mode = body.get("mode", "both")
        with lock:
            try:
                if mode == "both":
                    session.checkout_both(target)
                elif mode == "data":
                    session.rollback_data(target)
                else:
                    return _error(400, "bad_request", f"unknown mode {mode!r}")
            except UnknownCommit:
                return _error(404, "unknown_commit", f"unknown commit {target}")
            except CheckoutRejected as exc:
                cls = exc.checkout_class.value
                return _error(
                    409,
                    "unsafe_" + _snake(cls),
                    f"checkout rejected: {cls}",
                    checkout_class=cls,
                )
        bump_events()
        return {
            "head_code": session.head_code,
            "head_data": session.head_data,
        }

    @app.post("/tag")
    def post_tag(body: dict):
        cid = body.get("commit", "")
        with lock:
            try:
                store.set_tag(cid, body.get("tag", ""), body.get("message", ""))
            except UnknownCommit:
                return _error(404, "unknown_commit", f"unknown commit {cid}")
        bump_events()
        return {"commit": cid}

    @app.get("/events")
    def get_events(since: int = Query(default=0), timeout: float = Query(default=25.0)):
        with events_cond:
            if events["seq"] <= since:
                events_cond.wait(timeout=min(timeout, 60.0))
            return {"seq": events["seq"]}

    return app


def _snake(checkout_class_name: str) -> str:
    out = []
    for ch in checkout_class_name:
        if ch.isupper() and out:
            out.append("_")
        out.append(ch.lower())
    # "UnsafeUnrelatedData" -> "unrelated_data" (the unsafe_ prefix is added
    # by the caller)
    text = "".join(out)
    return text[len("unsafe_"):] if text.startswith("unsafe_") else text
