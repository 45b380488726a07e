"""Commit search and two-commit diff over code and variables.

Search is conjunctive over `field:needle` clauses (message, tag, branch,
var, text). Variable diff never loads values: it compares the two
commits' variable version tables, so a variable is "changed" exactly
when both tables name different last-changing commits. Code diff aligns
cells by id and produces a minimal line edit script for modified cells.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Cell, CodeState
from .store import CommitStore

FIELDS = ("message", "tag", "branch", "var", "text")


class BadQuery(ValueError):
    pass


@dataclass(frozen=True)
class Clause:
    field: str
    needle: str


@dataclass(frozen=True)
class SearchQuery:
    clauses: tuple[Clause, ...]


def parse_query(text: str) -> SearchQuery:
    """`field:needle` terms separated by spaces; bare terms search text."""
    clauses = []
    for token in text.split():
        if ":" in token:
            fieldname, needle = token.split(":", 1)
            if fieldname not in FIELDS:
                raise BadQuery(f"unknown search field {fieldname!r}")
        else:
            fieldname, needle = "text", token
        if not needle:
            raise BadQuery(f"empty needle in clause {token!r}")
        clauses.append(Clause(fieldname, needle))
    return SearchQuery(tuple(clauses))


def _matches(store: CommitStore, cid: str, clause: Clause) -> bool:
    commit = store.get_commit(cid)
    needle = clause.needle.lower()
    if clause.field == "var":
        changed, deleted = store.changed_variables(cid)
        return clause.needle in changed or clause.needle in deleted
    if clause.field == "branch":
        return needle in commit.branch.lower()
    message = store.effective_message(cid) or ""
    tag = store.effective_tag(cid) or ""
    if clause.field == "message":
        return needle in message.lower()
    if clause.field == "tag":
        return needle in tag.lower()
    return needle in message.lower() or needle in tag.lower()  # text


def search(store: CommitStore, query: SearchQuery) -> set[str]:
    return {
        cid
        for cid in store.all_ids()
        if all(_matches(store, cid, clause) for clause in query.clauses)
    }


# ---------------------------------------------------------------------------
# Variable diff


@dataclass(frozen=True)
class VariableDiff:
    changed: frozenset
    added_right: frozenset
    deleted_right: frozenset
    unchanged: frozenset


def diff_variables(store: CommitStore, a: str, b: str) -> VariableDiff:
    """Table-only comparison; O(|table_a| + |table_b|), no values loaded."""
    table_a = store.version_table(a)
    table_b = store.version_table(b)
    changed, unchanged = set(), set()
    for name in table_a.keys() & table_b.keys():
        (changed if table_a[name] != table_b[name] else unchanged).add(name)
    return VariableDiff(
        changed=frozenset(changed),
        added_right=frozenset(table_b.keys() - table_a.keys()),
        deleted_right=frozenset(table_a.keys() - table_b.keys()),
        unchanged=frozenset(unchanged),
    )


# ---------------------------------------------------------------------------
# Code diff

KEEP = "keep"
INSERT = "insert"
DELETE = "delete"


@dataclass(frozen=True)
class LineOp:
    op: str  # KEEP | INSERT | DELETE
    line: str


def myers_diff(a: list[str], b: list[str]) -> list[LineOp]:
    """Minimal edit script between two line lists (LCS dynamic program).

    Cell sources are a handful of lines, so the O(nm) table is fine and
    minimality is exact: the script has len(a)+len(b)-2*LCS edits.
    """
    n, m = len(a), len(b)
    # lcs[i][j] = LCS length of a[i:], b[j:]
    lcs = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                lcs[i][j] = lcs[i + 1][j + 1] + 1
            else:
                lcs[i][j] = max(lcs[i + 1][j], lcs[i][j + 1])
    ops: list[LineOp] = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            ops.append(LineOp(KEEP, a[i]))
            i += 1
            j += 1
        elif lcs[i + 1][j] >= lcs[i][j + 1]:
            ops.append(LineOp(DELETE, a[i]))
            i += 1
        else:
            ops.append(LineOp(INSERT, b[j]))
            j += 1
    ops.extend(LineOp(DELETE, line) for line in a[i:])
    ops.extend(LineOp(INSERT, line) for line in b[j:])
    return ops


def apply_line_ops(left: str, ops: list[LineOp]) -> str:
    lines = []
    for op in ops:
        if op.op in (KEEP, INSERT):
            lines.append(op.line)
    del left
    return "\n".join(lines)


@dataclass(frozen=True)
class CellOp:
    op: str  # "added" | "deleted" | "kept" | "modified"
    cell: Cell | None = None
    cell_id: str | None = None
    line_ops: tuple[LineOp, ...] = ()


@dataclass(frozen=True)
class CodeDiff:
    cell_ops: tuple[CellOp, ...]


def diff_code_states(left: CodeState, right: CodeState) -> CodeDiff:
    """Align cells by id; modified cells carry a minimal line script."""
    left_ids = {c.cell_id for c in left.cells}
    right_ids = {c.cell_id for c in right.cells}
    left_cells = list(left.cells)
    ops: list[CellOp] = []
    li = 0

    def drain_deleted_until(target_id: str | None):
        nonlocal li
        while li < len(left_cells):
            cell = left_cells[li]
            if cell.cell_id == target_id:
                li += 1
                return
            if cell.cell_id not in right_ids:
                ops.append(CellOp("deleted", cell=cell))
            li += 1

    for rcell in right.cells:
        if rcell.cell_id not in left_ids:
            ops.append(CellOp("added", cell=rcell))
            continue
        drain_deleted_until(rcell.cell_id)
        lcell = left.get(rcell.cell_id)
        if lcell.source == rcell.source and lcell.kind == rcell.kind:
            ops.append(CellOp("kept", cell=rcell))
        else:
            ops.append(
                CellOp(
                    "modified",
                    cell=rcell,
                    cell_id=rcell.cell_id,
                    line_ops=tuple(
                        myers_diff(
                            lcell.source.splitlines(), rcell.source.splitlines()
                        )
                    ),
                )
            )
    drain_deleted_until(None)
    return CodeDiff(tuple(ops))


def diff_code(store: CommitStore, a: str, b: str) -> CodeDiff:
    return diff_code_states(store.get_commit(a).code, store.get_commit(b).code)


def apply_code_diff(left: CodeState, diff: CodeDiff) -> list[tuple[str, str, str]]:
    """Apply a diff to the left state; yields (id, kind, source) triples."""
    out = []
    for op in diff.cell_ops:
        if op.op == "deleted":
            continue
        if op.op in ("added", "kept"):
            out.append((op.cell.cell_id, op.cell.kind, op.cell.source))
        elif op.op == "modified":
            lcell = left.get(op.cell_id)
            out.append(
                (
                    op.cell_id,
                    op.cell.kind,
                    apply_line_ops(lcell.source, list(op.line_ops)),
                )
            )
    return out
