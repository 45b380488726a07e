"""Durable append-only commit storage with incremental variable deltas.

Layout (all text files UTF-8, LF line endings; documented in
docs/storage.md):

    store/log.bin    append-only log of length-prefixed canonical records
    store/index      rebuildable sidecar: "<commit-id> <byte-offset>" lines
    store/HEAD       two lines: head-code commit id, head-data commit id
    store/branches   "<name>\t<commit-id>" lines
    store/tags       "<commit-id>\t<tag>\t<message>" overlay lines
    store/worktree.json   the live session's working notebook snapshot

A commit stores only the variables it changed (its delta); full variable
maps are reconstructed through per-commit variable version tables that
map each live variable to the commit that last changed it. Commit ids
are sha256 digests of the canonical record with timestamps excluded, so
persisting the same content twice is a no-op.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import time
from dataclasses import dataclass, field

from .kernel import copy_value
from .model import Cell, CodeState, HistoryEntry

LOG_NAME = "log.bin"
INDEX_NAME = "index"
HEAD_NAME = "HEAD"
BRANCHES_NAME = "branches"
TAGS_NAME = "tags"
WORKTREE_NAME = "worktree.json"

_LEN = struct.Struct(">I")


class StoreError(Exception):
    pass


class StorageIO(StoreError):
    pass


class UnknownCommit(StoreError):
    def __init__(self, cid: str):
        super().__init__(f"unknown commit {cid}")
        self.cid = cid


class MissingParent(StoreError):
    pass


class CorruptDelta(StoreError):
    pass


class EmptyStore(StoreError):
    pass


@dataclass(frozen=True)
class Commit:
    id: str
    code_parent: str | None
    data_parent: str | None
    code: CodeState
    history_len: int
    history_tail: HistoryEntry | None
    var_delta: dict
    var_deleted: frozenset
    message: str | None
    tag: str | None
    branch: str
    created_at: float  # metadata only, excluded from the content digest
    kind: str  # "auto" | "manual"

    def parents(self) -> list[str]:
        out = []
        for p in (self.code_parent, self.data_parent):
            if p is not None and p not in out:
                out.append(p)
        return out


def _cell_to_dict(cell: Cell) -> dict:
    return {
        "id": cell.cell_id,
        "kind": cell.kind,
        "source": cell.source,
        "output": cell.output,
        "error": cell.error_flag,
        "counter": cell.exec_counter,
    }


def _cell_from_dict(d: dict) -> Cell:
    return Cell(
        cell_id=d["id"],
        kind=d["kind"],
        source=d["source"],
        output=d["output"],
        error_flag=d["error"],
        exec_counter=d["counter"],
    )


def _content_dict(c: Commit) -> dict:
    return {
        "kind": c.kind,
        "branch": c.branch,
        "code_parent": c.code_parent,
        "data_parent": c.data_parent,
        "cells": [_cell_to_dict(cell) for cell in c.code.cells],
        "history_len": c.history_len,
        "history_tail": (
            None
            if c.history_tail is None
            else {
                "cell_id": c.history_tail.cell_id,
                "source": c.history_tail.source_snapshot,
                "counter": c.history_tail.counter,
            }
        ),
        "var_delta": {k: c.var_delta[k] for k in sorted(c.var_delta)},
        "var_deleted": sorted(c.var_deleted),
        "message": c.message,
        "tag": c.tag,
    }


def _canonical(obj) -> bytes:
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def commit_digest(c: Commit) -> str:
    return hashlib.sha256(_canonical(_content_dict(c))).hexdigest()


def _record_bytes(c: Commit) -> bytes:
    record = _content_dict(c)
    record["id"] = c.id
    record["created_at"] = c.created_at
    return _canonical(record)


def _commit_from_record(d: dict) -> Commit:
    tail = d["history_tail"]
    return Commit(
        id=d["id"],
        code_parent=d["code_parent"],
        data_parent=d["data_parent"],
        code=CodeState(tuple(_cell_from_dict(x) for x in d["cells"])),
        history_len=d["history_len"],
        history_tail=(
            None
            if tail is None
            else HistoryEntry(tail["cell_id"], tail["source"], tail["counter"])
        ),
        var_delta=d["var_delta"],
        var_deleted=frozenset(d["var_deleted"]),
        message=d["message"],
        tag=d["tag"],
        branch=d["branch"],
        created_at=d["created_at"],
        kind=d["kind"],
    )


def make_commit(
    *,
    code_parent: str | None,
    data_parent: str | None,
    code: CodeState,
    history_len: int,
    history_tail: HistoryEntry | None,
    var_delta: dict,
    var_deleted,
    message: str | None = None,
    tag: str | None = None,
    branch: str = "main",
    kind: str = "auto",
    created_at: float | None = None,
) -> Commit:
    """Build a commit record and assign its content-derived id."""
    if var_delta.keys() & set(var_deleted):
        raise ValueError("var_delta and var_deleted must be disjoint")
    commit = Commit(
        id="",
        code_parent=code_parent,
        data_parent=data_parent,
        code=code,
        history_len=history_len,
        history_tail=history_tail,
        var_delta=var_delta,
        var_deleted=frozenset(var_deleted),
        message=message,
        tag=tag,
        branch=branch,
        created_at=time.time() if created_at is None else created_at,
        kind=kind,
    )
    return Commit(**{**commit.__dict__, "id": commit_digest(commit)})


class CommitStore:
    """Single-writer append-only store over one directory."""

    def __init__(self, path: str, create: bool = False):
        self.path = path
        if create:
            os.makedirs(path, exist_ok=True)
        if not os.path.isdir(path):
            raise StorageIO(f"store directory missing: {path}")
        self._offsets: dict[str, int] = {}
        self._order: list[str] = []
        self._cache: dict[str, Commit] = {}
        self._tables: dict[str, dict] = {}
        self._load_index()

    # -- file helpers -------------------------------------------------

    def _file(self, name: str) -> str:
        return os.path.join(self.path, name)

    def _read_text(self, name: str) -> str | None:
        try:
            with open(self._file(name), "r", encoding="utf-8") as fh:
                return fh.read()
        except FileNotFoundError:
            return None

    def _write_text(self, name: str, text: str) -> None:
        tmp = self._file(name) + ".tmp"
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self._file(name))

    # -- log & index --------------------------------------------------

    def _scan_log(self) -> None:
        """Rebuild offsets by scanning the log; truncate a torn tail."""
        self._offsets.clear()
        self._order.clear()
        log_path = self._file(LOG_NAME)
        if not os.path.exists(log_path):
            return
        good_end = 0
        with open(log_path, "rb") as fh:
            data = fh.read()
        pos = 0
        while pos + _LEN.size <= len(data):
            (length,) = _LEN.unpack_from(data, pos)
            start = pos + _LEN.size
            if start + length > len(data):
                break  # torn tail record
            try:
                record = json.loads(data[start : start + length].decode("utf-8"))
                cid = record["id"]
            except (ValueError, KeyError):
                break
            self._offsets[cid] = pos
            self._order.append(cid)
            pos = start + length
            good_end = pos
        if good_end != len(data):
            with open(log_path, "r+b") as fh:
                fh.truncate(good_end)

    def _load_index(self) -> None:
        log_path = self._file(LOG_NAME)
        log_size = os.path.getsize(log_path) if os.path.exists(log_path) else 0
        text = self._read_text(INDEX_NAME)
        if text is not None:
            lines = text.splitlines()
            if lines and lines[0] == f"#logsize {log_size}":
                for line in lines[1:]:
                    cid, off = line.split(" ")
                    self._offsets[cid] = int(off)
                    self._order.append(cid)
                return
        self._scan_log()
        self._write_index(log_size_hint=None)

    def _write_index(self, log_size_hint: int | None) -> None:
        log_path = self._file(LOG_NAME)
        size = (
            log_size_hint
            if log_size_hint is not None
            else (os.path.getsize(log_path) if os.path.exists(log_path) else 0)
        )
        lines = [f"#logsize {size}"]
        lines.extend(f"{cid} {self._offsets[cid]}" for cid in self._order)
        self._write_text(INDEX_NAME, "\n".join(lines) + "\n")

    def _read_record(self, cid: str) -> Commit:
        offset = self._offsets[cid]
        with open(self._file(LOG_NAME), "rb") as fh:
            fh.seek(offset)
            (length,) = _LEN.unpack(fh.read(_LEN.size))
            payload = fh.read(length)
        return _commit_from_record(json.loads(payload.decode("utf-8")))

    # -- commits ------------------------------------------------------

    def __contains__(self, cid: str) -> bool:
        return cid in self._offsets

    def all_ids(self) -> list[str]:
        """Commit ids in log (persistence) order."""
        return list(self._order)

    def get_commit(self, cid: str) -> Commit:
        if cid not in self._offsets:
            raise UnknownCommit(cid)
        if cid not in self._cache:
            self._cache[cid] = self._read_record(cid)
        return self._cache[cid]

    def persist_commit(self, commit: Commit) -> str:
        if commit.id != commit_digest(commit):
            raise StoreError("commit id does not match its content digest")
        for parent in commit.parents():
            if parent not in self._offsets:
                raise MissingParent(f"parent {parent} not persisted")
        if commit.id in self._offsets:
            return commit.id  # idempotent: content addressing
        payload = _record_bytes(commit)
        log_path = self._file(LOG_NAME)
        with open(log_path, "ab") as fh:
            offset = fh.tell()
            fh.write(_LEN.pack(len(payload)))
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
            end = fh.tell()
        self._offsets[commit.id] = offset
        self._order.append(commit.id)
        self._cache[commit.id] = commit
        self._write_index(log_size_hint=end)
        return commit.id

    # -- derived views ------------------------------------------------

    def version_table(self, cid: str) -> dict[str, str]:
        """Live variable name -> id of the commit that last changed it."""
        if cid not in self._offsets:
            raise UnknownCommit(cid)
        chain = []
        cur: str | None = cid
        while cur is not None and cur not in self._tables:
            chain.append(cur)
            cur = self.get_commit(cur).data_parent
        table = dict(self._tables[cur]) if cur is not None else {}
        for node in reversed(chain):
            commit = self.get_commit(node)
            for name in commit.var_deleted:
                table.pop(name, None)
            for name in commit.var_delta:
                table[name] = node
            self._tables[node] = dict(table)
        return dict(self._tables[cid])

    def materialize_variables(self, cid: str) -> dict:
        """Load the full variable map from the deltas the table points at."""
        env = {}
        for name, src in self.version_table(cid).items():
            delta = self.get_commit(src).var_delta
            if name not in delta:
                raise CorruptDelta(f"{src} lacks variable {name!r}")
            env[name] = copy_value(delta[name])
        return env

    def changed_variables(self, cid: str) -> tuple[set, set]:
        commit = self.get_commit(cid)
        return set(commit.var_delta), set(commit.var_deleted)

    def history_at(self, cid: str) -> list[HistoryEntry]:
        entries: list[HistoryEntry] = []
        cur: str | None = cid
        while cur is not None:
            commit = self.get_commit(cur)
            if commit.history_tail is not None:
                entries.append(commit.history_tail)
            cur = commit.data_parent
        entries.reverse()
        first = self.get_commit(cid)
        if len(entries) != first.history_len:
            raise StoreError(
                f"history length mismatch at {cid}: "
                f"{len(entries)} != {first.history_len}"
            )
        return entries

    # -- refs ---------------------------------------------------------

    def read_head(self) -> tuple[str, str]:
        text = self._read_text(HEAD_NAME)
        if not text or not text.strip():
            raise EmptyStore("no HEAD")
        lines = text.splitlines()
        return lines[0], lines[1]

    def write_head(self, head_code: str, head_data: str) -> None:
        self._write_text(HEAD_NAME, f"{head_code}\n{head_data}\n")

    def read_branches(self) -> dict[str, str]:
        text = self._read_text(BRANCHES_NAME)
        branches = {}
        for line in (text or "").splitlines():
            if line:
                name, cid = line.split("\t")
                branches[name] = cid
        return branches

    def write_branches(self, branches: dict[str, str]) -> None:
        lines = [f"{name}\t{cid}" for name, cid in sorted(branches.items())]
        self._write_text(BRANCHES_NAME, "\n".join(lines) + ("\n" if lines else ""))

    def read_tags(self) -> dict[str, tuple[str, str]]:
        """Post-hoc tag overlay: commit id -> (tag, message)."""
        text = self._read_text(TAGS_NAME)
        tags = {}
        for line in (text or "").splitlines():
            if line:
                cid, tag, message = line.split("\t", 2)
                tags[cid] = (tag, message)
        return tags

    def set_tag(self, cid: str, tag: str, message: str = "") -> None:
        if cid not in self._offsets:
            raise UnknownCommit(cid)
        if "\t" in tag or "\n" in tag or "\n" in message:
            raise StoreError("tag and message must be single-line, tab-free")
        tags = self.read_tags()
        tags[cid] = (tag, message.replace("\t", " "))
        lines = [f"{c}\t{t}\t{m}" for c, (t, m) in sorted(tags.items())]
        self._write_text(TAGS_NAME, "\n".join(lines) + "\n")

    def effective_tag(self, cid: str) -> str | None:
        overlay = self.read_tags().get(cid)
        if overlay is not None:
            return overlay[0]
        return self.get_commit(cid).tag

    def effective_message(self, cid: str) -> str | None:
        overlay = self.read_tags().get(cid)
        if overlay is not None and overlay[1]:
            return overlay[1]
        return self.get_commit(cid).message

    # -- worktree snapshot ---------------------------------------------

    def write_worktree(self, payload: dict) -> None:
        self._write_text(
            WORKTREE_NAME, json.dumps(payload, sort_keys=True, indent=1) + "\n"
        )

    def read_worktree(self) -> dict | None:
        text = self._read_text(WORKTREE_NAME)
        return None if text is None else json.loads(text)
