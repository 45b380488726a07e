"""Session state machine: edits, auto-commits, safeguards, recovery."""

import pytest

from statevc.model import CheckoutClass, CheckoutMode, is_consistent, is_executed
from statevc.session import CheckoutRejected, NotCodeCell, Session, UnknownCell
from statevc.store import CommitStore, UnknownCommit

from traces import clone_session, run_trace


@pytest.fixture
def store(tmp_path):
    return CommitStore(str(tmp_path / "store"), create=True)


@pytest.fixture
def session(store):
    return Session.create(store)


def snapshot(session):
    return (
        list(session.cells),
        dict(session.env),
        list(session.history),
        session.head_code,
        session.head_data,
        session.branch,
        session.detached,
    )


def test_create_persists_consistent_root(session, store):
    assert session.head_code == session.head_data
    root = store.get_commit(session.head_code)
    assert root.code_parent is None and root.data_parent is None
    assert is_consistent(session.version())[0]


def test_execute_simple(session, store):
    cell = session.add_cell(source="x = 1")
    cid = session.execute_cell(cell)
    commit = store.get_commit(cid)
    assert commit.var_delta == {"x": 1}
    assert commit.history_tail.counter == 1
    assert session.cells[0].exec_counter == 1
    assert session.head_code == session.head_data == cid


def test_edit_clears_executed_status(session):
    cell = session.add_cell(source="x = 1")
    session.execute_cell(cell)
    session.edit_cell(cell, "x = 2")
    assert session.cells[0].exec_counter is None
    executed, _ = is_executed(session.cells[0], session.data_state())
    assert not executed
    # env and history untouched by the edit
    assert session.env == {"x": 1}
    assert len(session.history) == 1


def test_edit_back_to_executed_source_restores_counter(session):
    cell = session.add_cell(source="x = 1")
    session.execute_cell(cell)
    session.edit_cell(cell, "x = 2")
    session.edit_cell(cell, "x = 1")
    assert session.cells[0].exec_counter == 1


def test_markdown_add_touches_nothing(session):
    session.add_cell(kind="markdown", source="# hi")
    assert session.env == {} and session.history == []
    assert is_consistent(session.version())[0]


def test_delete_unexecuted_cell_keeps_consistency(session):
    cell = session.add_cell(source="x = 1")
    session.delete_cell(cell)
    assert is_consistent(session.version())[0]


def test_unknown_cell_errors(session):
    with pytest.raises(UnknownCell):
        session.edit_cell("nope", "x = 1")
    with pytest.raises(UnknownCell):
        session.execute_cell("nope")


def test_markdown_not_executable(session):
    cell = session.add_cell(kind="markdown", source="# hi")
    with pytest.raises(NotCodeCell):
        session.execute_cell(cell)


def test_error_execution_still_commits(session, store):
    cell = session.add_cell(source="a = 1\nb = nope")
    cid = session.execute_cell(cell)
    commit = store.get_commit(cid)
    assert commit.var_delta == {"a": 1}
    assert session.cells[0].error_flag
    assert "NameError: nope" in session.cells[0].output
    assert is_consistent(session.version())[0]


def test_manual_commit_tag_and_empty_delta(session, store):
    cell = session.add_cell(source="x = 1")
    session.execute_cell(cell)
    cid1 = session.commit_manual(tag="v1")
    cid2 = session.commit_manual()
    assert store.get_commit(cid1).tag == "v1"
    assert store.get_commit(cid1).var_delta == {}
    assert store.get_commit(cid2).var_delta == {}
    assert store.get_commit(cid2).kind == "manual"


def test_manual_commit_after_edit_only(session, store):
    cell = session.add_cell(source="x = 1")
    cid1 = session.execute_cell(cell)
    session.edit_cell(cell, "x = 99")
    cid2 = session.commit_manual(message="edited")
    commit = store.get_commit(cid2)
    assert commit.code_parent == cid1
    assert commit.var_delta == {} and not commit.var_deleted
    assert commit.history_len == 1


def three_commits(session):
    ids = []
    for src in ("a = 1", "b = a + 1", "c = b * 2"):
        cell = session.add_cell(source=src)
        ids.append(session.execute_cell(cell))
    return ids


def test_rollback_past_data(session, store):
    cid1, cid2, cid3 = three_commits(session)
    session.rollback_data(cid1)
    assert session.head_code == cid3
    assert session.head_data == cid1
    assert session.env == {"a": 1}
    counters = [c.exec_counter for c in session.cells]
    assert counters == [1, None, None]
    assert is_consistent(session.version())[0]


def test_rollback_to_head_is_noop(session):
    cid1, cid2, cid3 = three_commits(session)
    before = snapshot(session)
    session.rollback_data(cid3)
    assert snapshot(session) == before


def test_rollback_future_rejected(session):
    cid1, cid2, cid3 = three_commits(session)
    session.rollback_data(cid1)
    with pytest.raises(CheckoutRejected) as exc:
        session.rollback_data(cid3)
    assert exc.value.checkout_class is CheckoutClass.UNSAFE_FUTURE_DATA


def test_rollback_sibling_rejected_state_unchanged(session, store):
    cid1, cid2, cid3 = three_commits(session)
    session.checkout_both(cid1)
    cell = session.add_cell(source="z = 9")
    sibling = session.execute_cell(cell)
    session.checkout_both(cid3)
    before = snapshot(session)
    with pytest.raises(CheckoutRejected) as exc:
        session.rollback_data(sibling)
    assert exc.value.checkout_class is CheckoutClass.UNSAFE_UNRELATED_DATA
    assert snapshot(session) == before


def test_rollback_unknown_commit(session):
    three_commits(session)
    with pytest.raises(UnknownCommit):
        session.rollback_data("deadbeef")


def test_execute_after_rollback_reunifies_heads(session, store):
    cid1, cid2, cid3 = three_commits(session)
    session.rollback_data(cid1)
    cell = session.add_cell(source="d = 4")
    new = session.execute_cell(cell)
    commit = store.get_commit(new)
    assert commit.code_parent == cid3
    assert commit.data_parent == cid1
    assert session.head_code == session.head_data == new


def test_checkout_both_restores_everything(session, store):
    cid1, cid2, cid3 = three_commits(session)
    session.checkout_both(cid1)
    assert session.head_code == session.head_data == cid1
    assert session.env == {"a": 1}
    assert [c.source for c in session.cells] == \
        [c.source for c in store.get_commit(cid1).code.cells]
    assert is_consistent(session.version())[0]


def test_checkout_then_execute_creates_new_branch(session, store):
    cid1, cid2, cid3 = three_commits(session)
    session.checkout_both(cid1)
    assert session.detached
    cell = session.add_cell(source="q = 1")
    cid = session.execute_cell(cell)
    assert session.branch == "b1"
    assert store.read_branches()["b1"] == cid
    assert store.read_branches()["main"] == cid3


def test_counter_rewind_invariant(session):
    ids = three_commits(session)
    session.rollback_data(ids[1])
    with_counters = [c for c in session.cells if c.exec_counter is not None]
    assert sorted(c.exec_counter for c in with_counters) == [1, 2]


def test_modified_cell_safety(session, store):
    # edit c -> c', execute c', roll back to the pre-edit data state
    cid1, cid2, cid3 = three_commits(session)
    target_cell = session.cells[1].cell_id
    session.edit_cell(target_cell, "b = a + 100")
    session.execute_cell(target_cell)
    session.rollback_data(cid3)
    ok, violations = is_consistent(session.version())
    assert ok, violations


def test_recover_equals_pre_kill_state(tmp_path):
    path = str(tmp_path / "s")
    store = CommitStore(path, create=True)
    session = run_trace(store, seed=21, n_cells=6, n_ops=15)
    recovered = Session.recover_latest(CommitStore(path))
    assert snapshot(recovered) == snapshot(session)


def test_recover_split_head(tmp_path):
    path = str(tmp_path / "s")
    store = CommitStore(path, create=True)
    session = Session.create(store)
    cid1, cid2, cid3 = three_commits(session)
    session.rollback_data(cid1)
    recovered = Session.recover_latest(CommitStore(path))
    assert recovered.head_code == cid3
    assert recovered.head_data == cid1
    assert snapshot(recovered) == snapshot(session)


def test_recover_empty_store(tmp_path):
    from statevc.store import EmptyStore

    store = CommitStore(str(tmp_path / "s"), create=True)
    with pytest.raises(EmptyStore):
        Session.recover_latest(store)


def test_all_commits_consistent_on_traces(tmp_path):
    from statevc.model import Version
    from statevc.store import CommitStore as CS

    for seed in range(6):
        store = CS(str(tmp_path / f"s{seed}"), create=True)
        session = run_trace(store, seed=seed, n_cells=6, n_ops=18)
        assert is_consistent(session.version())[0]
        for cid in store.all_ids():
            commit = store.get_commit(cid)
            from statevc.model import DataState

            version = Version(
                commit.code,
                DataState(
                    store.materialize_variables(cid),
                    tuple(store.history_at(cid)),
                ),
            )
            assert is_consistent(version)[0]


def test_rollback_safety_matches_classifier_on_traces(tmp_path):
    for seed in range(4):
        store = CommitStore(str(tmp_path / f"s{seed}"), create=True)
        session = run_trace(store, seed=seed, n_cells=6, n_ops=16)
        for cid in store.all_ids():
            twin = clone_session(session)
            cls = twin.classify(cid, CheckoutMode.DATA_ONLY)
            if cls is CheckoutClass.SAFE_PAST_DATA:
                twin.rollback_data(cid)
                assert is_consistent(twin.version())[0]
            else:
                before = snapshot(twin)
                with pytest.raises(CheckoutRejected):
                    twin.rollback_data(cid)
                assert snapshot(twin) == before
        session._persist_pointers()  # twins shared the on-disk pointers
