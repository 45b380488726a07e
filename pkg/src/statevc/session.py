"""Live session: the working notebook, the kernel variables, and heads.

Every cell execution commits automatically; manual commits snapshot the
current state. Checkout of both dimensions is always allowed; data-only
checkout (execution rollback) goes through the safety classifier and is
rejected unless the target history is a prefix of the head's. All
mutating operations persist HEAD and a worktree snapshot so a killed
session recovers to its last quiescent state.
"""

from __future__ import annotations

from dataclasses import replace

from . import kernel
from .model import (
    CODE,
    MARKDOWN,
    Cell,
    CheckoutClass,
    CheckoutMode,
    CodeState,
    DataState,
    HistoryEntry,
    Version,
    classify_checkout,
    with_recomputed_counters,
)
from .store import Commit, CommitStore, EmptyStore, UnknownCommit, make_commit

DEFAULT_BRANCH = "main"


class SessionError(Exception):
    pass


class UnknownCell(SessionError):
    def __init__(self, cell_id: str):
        super().__init__(f"unknown cell {cell_id}")
        self.cell_id = cell_id


class NotCodeCell(SessionError):
    pass


class CheckoutRejected(SessionError):
    def __init__(self, checkout_class: CheckoutClass):
        super().__init__(f"unsafe checkout: {checkout_class.value}")
        self.checkout_class = checkout_class


class Session:
    """Single-writer state machine over one commit store."""

    def __init__(self, store: CommitStore):
        self.store = store
        self.cells: list[Cell] = []
        self.env: dict = {}
        self.history: list[HistoryEntry] = []
        self.head_code: str = ""
        self.head_data: str = ""
        self.branch: str = DEFAULT_BRANCH
        self.detached: bool = False
        self._id_seq: int = 0

    # -- construction ---------------------------------------------------

    @classmethod
    def create(cls, store: CommitStore) -> "Session":
        """Start a fresh session: persist the empty-notebook root commit."""
        session = cls(store)
        root = make_commit(
            code_parent=None,
            data_parent=None,
            code=CodeState(),
            history_len=0,
            history_tail=None,
            var_delta={},
            var_deleted=(),
            branch=DEFAULT_BRANCH,
            kind="auto",
        )
        store.persist_commit(root)
        session.head_code = session.head_data = root.id
        store.write_branches({DEFAULT_BRANCH: root.id})
        session._persist_pointers()
        return session

    @classmethod
    def recover_latest(cls, store: CommitStore) -> "Session":
        """Rebuild the session from HEAD plus the worktree snapshot."""
        head_code, head_data = store.read_head()  # raises EmptyStore
        session = cls(store)
        session.head_code = head_code
        session.head_data = head_data
        worktree = store.read_worktree()
        if worktree is None:
            session.cells = list(store.get_commit(head_code).code.cells)
            session.branch = store.get_commit(head_code).branch
            session.detached = False
        else:
            session.cells = [
                Cell(
                    cell_id=d["id"],
                    kind=d["kind"],
                    source=d["source"],
                    output=d["output"],
                    error_flag=d["error"],
                    exec_counter=d["counter"],
                )
                for d in worktree["cells"]
            ]
            session.branch = worktree["branch"]
            session.detached = worktree["detached"]
            session._id_seq = worktree["id_seq"]
        session.env = store.materialize_variables(head_data)
        session.history = store.history_at(head_data)
        return session

    # -- derived views ----------------------------------------------------

    @property
    def next_counter(self) -> int:
        return len(self.history) + 1

    def notebook(self) -> CodeState:
        return CodeState(tuple(self.cells))

    def data_state(self) -> DataState:
        return DataState(dict(self.env), tuple(self.history))

    def version(self) -> Version:
        return Version(self.notebook(), self.data_state())

    def _cell_index(self, cell_id: str) -> int:
        for i, cell in enumerate(self.cells):
            if cell.cell_id == cell_id:
                return i
        raise UnknownCell(cell_id)

    def _new_cell_id(self) -> str:
        self._id_seq += 1
        return f"cell-{self._id_seq}"

    # -- persistence of session pointers ----------------------------------

    def _persist_pointers(self) -> None:
        self.store.write_head(self.head_code, self.head_data)
        self.store.write_worktree(
            {
                "cells": [
                    {
                        "id": c.cell_id,
                        "kind": c.kind,
                        "source": c.source,
                        "output": c.output,
                        "error": c.error_flag,
                        "counter": c.exec_counter,
                    }
                    for c in self.cells
                ],
                "branch": self.branch,
                "detached": self.detached,
                "id_seq": self._id_seq,
            }
        )

    # -- notebook edits ----------------------------------------------------

    def add_cell(self, kind: str = CODE, source: str = "", index: int | None = None) -> str:
        cell_id = self._new_cell_id()
        cell = Cell(cell_id=cell_id, kind=kind, source=source)
        if index is None:
            self.cells.append(cell)
        else:
            self.cells.insert(index, cell)
        self._persist_pointers()
        return cell_id

    def edit_cell(self, cell_id: str, new_source: str) -> None:
        i = self._cell_index(cell_id)
        cell = replace(self.cells[i], source=new_source)
        if cell.kind == CODE:
            # executed-status (and thus the counter) follows the new source
            from .model import is_executed

            executed, n = is_executed(cell, self.data_state())
            cell = replace(cell, exec_counter=n if executed else None)
        self.cells[i] = cell
        self._persist_pointers()

    def delete_cell(self, cell_id: str) -> None:
        del self.cells[self._cell_index(cell_id)]
        self._persist_pointers()

    def move_cell(self, cell_id: str, new_index: int) -> None:
        cell = self.cells.pop(self._cell_index(cell_id))
        self.cells.insert(new_index, cell)
        self._persist_pointers()

    # -- commits -------------------------------------------------------

    def _advance_branch(self, cid: str) -> None:
        branches = self.store.read_branches()
        if self.detached:
            seq = 1
            while f"b{seq}" in branches:
                seq += 1
            self.branch = f"b{seq}"
            self.detached = False
        branches[self.branch] = cid
        self.store.write_branches(branches)

    def _env_delta(self, old_env: dict) -> tuple[dict, set]:
        delta = {
            name: kernel.copy_value(value)
            for name, value in self.env.items()
            if name not in old_env or not kernel.values_equal(old_env[name], value)
        }
        deleted = set(old_env) - set(self.env)
        return delta, deleted

    def execute_cell(self, cell_id: str) -> str:
        i = self._cell_index(cell_id)
        cell = self.cells[i]
        if cell.kind != CODE:
            raise NotCodeCell(cell_id)
        old_env = self.env
        self.env, output, error = kernel.exec_one(old_env, cell.source)
        entry = HistoryEntry(cell.cell_id, cell.source, self.next_counter)
        self.history.append(entry)
        self.cells[i] = replace(
            cell, output=output, error_flag=error, exec_counter=entry.counter
        )
        delta, deleted = self._env_delta(old_env)
        commit = make_commit(
            code_parent=self.head_code,
            data_parent=self.head_data,
            code=self.notebook(),
            history_len=len(self.history),
            history_tail=entry,
            var_delta=delta,
            var_deleted=deleted,
            branch=self._next_branch_name(),
            kind="auto",
        )
        cid = self.store.persist_commit(commit)
        self.head_code = self.head_data = cid
        self._advance_branch(cid)
        self._persist_pointers()
        return cid

    def _next_branch_name(self) -> str:
        if not self.detached:
            return self.branch
        branches = self.store.read_branches()
        seq = 1
        while f"b{seq}" in branches:
            seq += 1
        return f"b{seq}"

    def commit_manual(self, message: str | None = None, tag: str | None = None) -> str:
        head_env = self.store.materialize_variables(self.head_data)
        delta, deleted = self._env_delta(head_env)
        commit = make_commit(
            code_parent=self.head_code,
            data_parent=self.head_data,
            code=self.notebook(),
            history_len=len(self.history),
            history_tail=None,
            var_delta=delta,
            var_deleted=deleted,
            message=message,
            tag=tag,
            branch=self._next_branch_name(),
            kind="manual",
        )
        cid = self.store.persist_commit(commit)
        self.head_code = self.head_data = cid
        self._advance_branch(cid)
        self._persist_pointers()
        return cid

    # -- checkout / rollback ---------------------------------------------

    def classify(self, target: str, mode: CheckoutMode) -> CheckoutClass:
        if target not in self.store:
            raise UnknownCommit(target)
        return classify_checkout(
            self.history, self.store.history_at(target), mode
        )

    def checkout_both(self, target: str) -> None:
        commit = self.store.get_commit(target)
        self.cells = list(commit.code.cells)
        self.env = self.store.materialize_variables(target)
        self.history = self.store.history_at(target)
        self.head_code = self.head_data = target
        branches = self.store.read_branches()
        at_tip = [name for name, tip in branches.items() if tip == target]
        if at_tip:
            self.branch = sorted(at_tip)[0]
            self.detached = False
        else:
            self.detached = True
        self._persist_pointers()

    def rollback_data(self, target: str) -> None:
        """Restore a past data state, keeping the current code (split head)."""
        checkout_class = self.classify(target, CheckoutMode.DATA_ONLY)
        if checkout_class is not CheckoutClass.SAFE_PAST_DATA:
            raise CheckoutRejected(checkout_class)
        self.env = self.store.materialize_variables(target)
        self.history = self.store.history_at(target)
        self.head_data = target
        self.cells = list(
            with_recomputed_counters(self.notebook(), self.data_state()).cells
        )
        self._persist_pointers()
