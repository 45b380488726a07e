"""Search oracle equivalence and two-commit diff."""

import pytest

from statevc.kernel import values_equal
from statevc.model import Cell, CodeState
from statevc.search import (
    BadQuery,
    apply_code_diff,
    apply_line_ops,
    diff_code,
    diff_code_states,
    diff_variables,
    myers_diff,
    parse_query,
    search,
)
from statevc.store import CommitStore

from test_store import pipeline_chain
from traces import run_trace


@pytest.fixture
def store(tmp_path):
    return CommitStore(str(tmp_path / "store"), create=True)


# -- query parsing ----------------------------------------------------------


def test_parse_query_fields():
    q = parse_query("tag:v1 var:model bare")
    assert [(c.field, c.needle) for c in q.clauses] == [
        ("tag", "v1"),
        ("var", "model"),
        ("text", "bare"),
    ]


def test_parse_query_rejects_empty_needle():
    with pytest.raises(BadQuery):
        parse_query("message:")


def test_parse_query_rejects_unknown_field():
    with pytest.raises(BadQuery):
        parse_query("nope:x")


# -- search -----------------------------------------------------------------


def test_var_search_worked_example(store):
    session, v = pipeline_chain(store)
    assert search(store, parse_query("var:model")) == {v["V2"], v["V4"]}
    assert search(store, parse_query("var:fig")) == {v["V3"], v["V4"]}
    assert search(store, parse_query("var:data_df")) == {v["V1"]}


def test_search_message_tag_case_insensitive(store):
    session, v = pipeline_chain(store)
    session.commit_manual(message="Tuned Model", tag="Best")
    assert search(store, parse_query("message:tuned")) != set()
    assert search(store, parse_query("tag:best")) != set()
    assert search(store, parse_query("text:tuned")) == search(
        store, parse_query("message:tuned")
    )


def brute_force_var_search(store, name):
    """Oracle: compare successive materialized environments."""
    hits = set()
    for cid in store.all_ids():
        commit = store.get_commit(cid)
        env = store.materialize_variables(cid)
        parent_env = (
            store.materialize_variables(commit.data_parent)
            if commit.data_parent is not None
            else {}
        )
        created_or_changed = {
            k
            for k in env
            if k not in parent_env or not values_equal(env[k], parent_env[k])
        }
        deleted = set(parent_env) - set(env)
        if name in created_or_changed or name in deleted:
            hits.add(cid)
    return hits


def test_var_search_equals_value_oracle_on_traces(tmp_path):
    for seed in range(6):
        store = CommitStore(str(tmp_path / f"s{seed}"), create=True)
        run_trace(store, seed=seed, n_cells=8, n_ops=22)
        names = set()
        for cid in store.all_ids():
            changed, deleted = store.changed_variables(cid)
            names |= changed | deleted
        for name in names:
            assert search(store, parse_query(f"var:{name}")) == \
                brute_force_var_search(store, name)


def test_search_conjunction(store):
    session, v = pipeline_chain(store)
    session.commit_manual(message="model tuned", tag="v1")
    both = search(store, parse_query("tag:v1 message:tuned"))
    assert both == search(store, parse_query("tag:v1")) & search(
        store, parse_query("message:tuned")
    )


# -- variable diff ----------------------------------------------------------


def test_diff_variables_worked_example(store):
    _, v = pipeline_chain(store)
    diff = diff_variables(store, v["V3"], v["V4"])
    assert set(diff.changed) == {"model"}
    assert set(diff.deleted_right) == {"fig"}
    assert set(diff.added_right) == {"app"}
    assert set(diff.unchanged) == {"data_df"}


def test_diff_variables_identity(store):
    _, v = pipeline_chain(store)
    diff = diff_variables(store, v["V3"], v["V3"])
    assert not diff.changed and not diff.added_right and not diff.deleted_right
    assert set(diff.unchanged) == {"data_df", "model", "fig"}


def test_diff_variables_antisymmetric_on_traces(tmp_path):
    store = CommitStore(str(tmp_path / "s"), create=True)
    run_trace(store, seed=5, n_cells=8, n_ops=20)
    ids = store.all_ids()
    for a in ids[::3]:
        for b in ids[::4]:
            fwd = diff_variables(store, a, b)
            rev = diff_variables(store, b, a)
            assert fwd.changed == rev.changed
            assert fwd.unchanged == rev.unchanged
            assert fwd.added_right == rev.deleted_right
            assert fwd.deleted_right == rev.added_right


def test_diff_variables_partitions_key_union(tmp_path):
    store = CommitStore(str(tmp_path / "s"), create=True)
    run_trace(store, seed=6, n_cells=8, n_ops=20)
    ids = store.all_ids()
    for a in ids[::3]:
        for b in ids[::4]:
            diff = diff_variables(store, a, b)
            union = (
                set(store.version_table(a)) | set(store.version_table(b))
            )
            parts = [diff.changed, diff.added_right, diff.deleted_right, diff.unchanged]
            assert set().union(*parts) == union
            assert sum(len(p) for p in parts) == len(union)


# -- line diff ---------------------------------------------------------------


def test_myers_simple_replace():
    ops = myers_diff(["x=1"], ["x=2"])
    assert [(o.op, o.line) for o in ops] in (
        [("delete", "x=1"), ("insert", "x=2")],
        [("insert", "x=2"), ("delete", "x=1")],
    )


def test_myers_patch_and_minimality():
    import itertools

    alphabet = ["a", "b", "c"]
    seqs = [
        list(p)
        for n in range(0, 4)
        for p in itertools.product(alphabet, repeat=n)
    ]
    for a in seqs[:30]:
        for b in seqs[:30]:
            ops = myers_diff(a, b)
            assert apply_line_ops("\n".join(a), ops) == "\n".join(b)
            edits = sum(1 for o in ops if o.op != "keep")
            assert edits == len(a) + len(b) - 2 * _lcs_len(a, b)


def _lcs_len(a, b):
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[-1]))
        prev = cur
    return prev[-1]


# -- code diff ---------------------------------------------------------------


def cells(*pairs):
    return CodeState(tuple(Cell(cid, "code", src) for cid, src in pairs))


def test_code_diff_identical():
    state = cells(("c1", "x=1"), ("c2", "y=2"))
    diff = diff_code_states(state, state)
    assert [op.op for op in diff.cell_ops] == ["kept", "kept"]


def test_code_diff_modified_cell():
    left = cells(("c1", "x=1"))
    right = cells(("c1", "x=2"))
    diff = diff_code_states(left, right)
    assert [op.op for op in diff.cell_ops] == ["modified"]
    assert [(o.op, o.line) for o in diff.cell_ops[0].line_ops] == [
        ("delete", "x=1"),
        ("insert", "x=2"),
    ]


def test_code_diff_insert_between_kept():
    left = cells(("c1", "x=1"), ("c3", "z=3"))
    right = cells(("c1", "x=1"), ("c2", "y=2"), ("c3", "z=3"))
    diff = diff_code_states(left, right)
    assert [op.op for op in diff.cell_ops] == ["kept", "added", "kept"]
    assert diff.cell_ops[1].cell.cell_id == "c2"


def test_code_diff_delete():
    left = cells(("c1", "x=1"), ("c2", "y=2"))
    right = cells(("c2", "y=2"))
    diff = diff_code_states(left, right)
    ops = [(op.op, (op.cell.cell_id if op.cell else op.cell_id)) for op in diff.cell_ops]
    assert ("deleted", "c1") in ops
    assert ("kept", "c2") in ops


def test_code_diff_patch_property_on_traces(tmp_path):
    store = CommitStore(str(tmp_path / "s"), create=True)
    run_trace(store, seed=9, n_cells=8, n_ops=22)
    ids = store.all_ids()
    for a in ids[::3]:
        for b in ids[::4]:
            diff = diff_code(store, a, b)
            left = store.get_commit(a).code
            right = store.get_commit(b).code
            assert apply_code_diff(left, diff) == [
                (c.cell_id, c.kind, c.source) for c in right.cells
            ]
