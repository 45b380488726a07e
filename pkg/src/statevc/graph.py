"""One-dimensional layout of the two-dimensional commit history.

Commits get one row each (row 0 = newest) in reverse topological order,
a lane (column), and typed parent edges: a single both-parents edge when
the code and data parents coincide, otherwise one edge per dimension.
Auto-folding collapses runs of commits that are neither user-important
(tag or message) nor topology-important (root, leaf, branch point, or
merge) into expandable grouped nodes.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field

from .store import CommitStore

CODE_PARENT = "CodeParent"
DATA_PARENT = "DataParent"
BOTH_PARENTS = "BothParents"

LABEL_HEAD_CODE = "HeadCode"
LABEL_HEAD_DATA = "HeadData"


class UnknownGroup(KeyError):
    pass


@dataclass(frozen=True)
class Edge:
    to: str
    kind: str


@dataclass(frozen=True)
class GraphRow:
    commit: str
    row: int
    lane: int
    edges: tuple[Edge, ...]
    labels: frozenset[str]


@dataclass(frozen=True)
class GroupedCommit:
    group_id: str
    members: tuple[str, ...]  # contiguous child-to-parent chain
    collapsed: bool = True


@dataclass
class FoldedGraph:
    items: list  # GraphRow | GroupedCommit, newest first
    rows: list[GraphRow]  # the unfolded layout
    _groups: dict[str, tuple[GraphRow, ...]] = field(default_factory=dict)

    def expand(self, group_id: str) -> list[GraphRow]:
        if group_id not in self._groups:
            raise UnknownGroup(group_id)
        return list(self._groups[group_id])

    def expand_all(self) -> list[GraphRow]:
        out: list[GraphRow] = []
        for item in self.items:
            if isinstance(item, GroupedCommit):
                out.extend(self._groups[item.group_id])
            else:
                out.append(item)
        return out


def _edges_of(commit) -> tuple[Edge, ...]:
    if commit.code_parent is None and commit.data_parent is None:
        return ()
    if commit.code_parent == commit.data_parent:
        return (Edge(commit.code_parent, BOTH_PARENTS),)
    edges = []
    if commit.code_parent is not None:
        edges.append(Edge(commit.code_parent, CODE_PARENT))
    if commit.data_parent is not None:
        edges.append(Edge(commit.data_parent, DATA_PARENT))
    return tuple(edges)


def children_map(store: CommitStore) -> dict[str, list[str]]:
    children: dict[str, list[str]] = {cid: [] for cid in store.all_ids()}
    for cid in store.all_ids():
        for parent in store.get_commit(cid).parents():
            children[parent].append(cid)
    return children


def linearize(store: CommitStore) -> list[GraphRow]:
    """Lay out every commit on one row; deterministic for a fixed store.

    Order is reverse topological (children above parents), ties broken by
    descending history length then ascending commit id. Lanes: a commit
    takes the lowest lane among chains waiting for it as their first
    parent, else the lowest free lane; remaining waiting lanes are freed.
    """
    ids = store.all_ids()
    if not ids:
        return []
    children = children_map(store)
    pending = {cid: len(children[cid]) for cid in ids}
    heap: list[tuple[int, str]] = []
    for cid in ids:
        if pending[cid] == 0:
            heapq.heappush(heap, (-store.get_commit(cid).history_len, cid))

    try:
        head_code, head_data = store.read_head()
    except Exception:
        head_code = head_data = None
    branches = store.read_branches()
    tags = store.read_tags()

    rows: list[GraphRow] = []
    lanes: list[str | None] = []  # per-lane commit id awaited as first parent
    row_index = 0
    while heap:
        _, cid = heapq.heappop(heap)
        commit = store.get_commit(cid)
        edges = _edges_of(commit)

        waiting = [i for i, awaited in enumerate(lanes) if awaited == cid]
        if waiting:
            lane = waiting[0]
            for i in waiting[1:]:
                lanes[i] = None
        else:
            free = [i for i, awaited in enumerate(lanes) if awaited is None]
            if free:
                lane = free[0]
            else:
                lane = len(lanes)
                lanes.append(None)
        first_parent = edges[0].to if edges else None
        lanes[lane] = first_parent

        labels = set()
        if cid == head_code:
            labels.add(LABEL_HEAD_CODE)
        if cid == head_data:
            labels.add(LABEL_HEAD_DATA)
        for name, tip in branches.items():
            if tip == cid:
                labels.add(name)
        tag = tags.get(cid, (commit.tag,))[0] or commit.tag
        if tag:
            labels.add(tag)

        rows.append(GraphRow(cid, row_index, lane, edges, frozenset(labels)))
        row_index += 1
        for parent in commit.parents():
            pending[parent] -= 1
            if pending[parent] == 0:
                heapq.heappush(
                    heap, (-store.get_commit(parent).history_len, parent)
                )
    return rows


def _group_id(members: tuple[str, ...]) -> str:
    return hashlib.sha256("\n".join(members).encode("utf-8")).hexdigest()[:16]


def fold(rows: list[GraphRow], store: CommitStore) -> FoldedGraph:
    """Collapse every unimportant commit into a maximal contiguous group.

    A commit stays visible iff it carries a tag or message, or its
    topology matters: no parent (root), no child (leaf), multiple
    children (branch point), or two distinct parent commits (merge).
    """
    children = children_map(store)
    tags = store.read_tags()

    def important(cid: str) -> bool:
        commit = store.get_commit(cid)
        tag, message = tags.get(cid, (commit.tag, commit.message))
        if tag or message:
            return True
        parents = commit.parents()
        return len(parents) != 1 or len(children[cid]) != 1

    items: list = []
    groups: dict[str, tuple[GraphRow, ...]] = {}
    run: list[GraphRow] = []

    def flush_run():
        if not run:
            return
        members = tuple(r.commit for r in run)
        gid = _group_id(members)
        groups[gid] = tuple(run)
        items.append(GroupedCommit(gid, members))
        run.clear()

    for row in rows:
        if important(row.commit):
            flush_run()
            items.append(row)
            continue
        if run:
            prev = run[-1]
            # stay in one group only along the parent chain
            if not any(e.to == row.commit for e in prev.edges):
                flush_run()
        run.append(row)
    flush_run()
    return FoldedGraph(items=items, rows=list(rows), _groups=groups)
