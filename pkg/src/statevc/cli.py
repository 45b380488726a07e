"""Headless command-line driver over a store directory.

Exit codes: 0 success, 1 usage, 2 store errors, 3 rejected checkout,
4 unknown commit id. Read commands accept --json for machine-readable,
byte-deterministic output. Store path comes from --store or the
STATEVC_STORE env var (flag wins); `serve` also honors --port /
STATEVC_PORT. Mutating commands take an advisory lock on store/.lock.
"""

from __future__ import annotations

import argparse
import fcntl
import json
import os
import sys

from . import graph as graph_mod
from . import search as search_mod
from .api import graph_payload
from .kernel import repr_value, type_name
from .session import CheckoutRejected, Session
from .store import CommitStore, EmptyStore, StoreError, UnknownCommit

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_STORE = 2
EXIT_REJECTED = 3
EXIT_UNKNOWN = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="statevc", description=__doc__)
    parser.add_argument(
        "--store",
        default=os.environ.get("STATEVC_STORE", "store"),
        help="store directory (default: $STATEVC_STORE or ./store)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("init", help="create a store with an empty-notebook root commit")

    p_run = sub.add_parser("run", help="add a code cell and execute it")
    p_run.add_argument("source", help="cell file path, or literal source after --")
    p_run.add_argument("--json", action="store_true")

    p_log = sub.add_parser("log", help="print the commit history graph")
    p_log.add_argument("--fold", action="store_true")
    p_log.add_argument("--json", action="store_true")

    p_co = sub.add_parser("checkout", help="checkout a commit")
    p_co.add_argument("commit")
    p_co.add_argument("--data-only", action="store_true")

    p_tag = sub.add_parser("tag", help="tag a commit")
    p_tag.add_argument("commit")
    p_tag.add_argument("name")
    p_tag.add_argument("-m", "--message", default="")

    p_search = sub.add_parser("search", help="search commits")
    p_search.add_argument("query")
    p_search.add_argument("--json", action="store_true")

    p_diff = sub.add_parser("diff", help="diff two commits (code + variables)")
    p_diff.add_argument("a")
    p_diff.add_argument("b")
    p_diff.add_argument("--json", action="store_true")

    p_vars = sub.add_parser("vars", help="list variables at a commit (default: head)")
    p_vars.add_argument("commit", nargs="?")
    p_vars.add_argument("--json", action="store_true")

    p_export = sub.add_parser("export", help="export the working notebook")
    p_export.add_argument("path")

    p_serve = sub.add_parser("serve", help="serve the HTTP API")
    p_serve.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get("STATEVC_PORT", "8570")),
    )
    p_serve.add_argument("--host", default="127.0.0.1")

    return parser


def _open_session(store_dir: str) -> Session:
    store = CommitStore(store_dir)
    return Session.recover_latest(store)


class _StoreLock:
    """Advisory single-writer lock on store/.lock."""

    def __init__(self, store_dir: str):
        self.path = os.path.join(store_dir, ".lock")
        self.fh = None

    def __enter__(self):
        self.fh = open(self.path, "w")
        fcntl.flock(self.fh, fcntl.LOCK_EX)
        return self

    def __exit__(self, *exc):
        fcntl.flock(self.fh, fcntl.LOCK_UN)
        self.fh.close()


def _emit(payload, as_json: bool, text_lines) -> None:
    if as_json:
        print(json.dumps(payload, sort_keys=True, indent=1))
    else:
        for line in text_lines:
            print(line)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except CheckoutRejected as exc:
        print(exc.checkout_class.value, file=sys.stderr)
        return EXIT_REJECTED
    except UnknownCommit as exc:
        print(f"unknown commit: {exc.cid}", file=sys.stderr)
        return EXIT_UNKNOWN
    except (EmptyStore, StoreError, OSError) as exc:
        print(f"store error: {exc}", file=sys.stderr)
        return EXIT_STORE


def _dispatch(args) -> int:
    if args.command == "init":
        if os.path.exists(os.path.join(args.store, "log.bin")):
            print(f"store error: {args.store} already initialized", file=sys.stderr)
            return EXIT_STORE
        store = CommitStore(args.store, create=True)
        with _StoreLock(args.store):
            session = Session.create(store)
        print(f"initialized store at {args.store} (root {session.head_code[:12]})")
        return EXIT_OK

    if args.command == "run":
        if os.path.exists(args.source):
            with open(args.source, "r", encoding="utf-8") as fh:
                source = fh.read()
        else:
            source = args.source
        with _StoreLock(args.store):
            session = _open_session(args.store)
            cell_id = session.add_cell(source=source)
            cid = session.execute_cell(cell_id)
        cell = session.cells[session._cell_index(cell_id)]
        _emit(
            {"commit": cid, "cell_id": cell_id, "output": cell.output,
             "error": cell.error_flag},
            args.json,
            [f"[{cell.exec_counter}] {cid[:12]}"]
            + ([cell.output] if cell.output else []),
        )
        return EXIT_OK

    if args.command == "log":
        store = CommitStore(args.store)
        payload = graph_payload(store, fold=args.fold)
        lines = []
        for item in payload["rows"]:
            if item["type"] == "group":
                lines.append(
                    "  " + f"[+] {len(item['members'])} commits "
                    f"(group {item['group_id']})"
                )
                continue
            marks = ",".join(item["labels"])
            edges = " ".join(f"{e['kind']}->{e['to'][:8]}" for e in item["edges"])
            indent = " " * (2 * item["lane"])
            lines.append(
                f"{indent}* {item['commit'][:12]}"
                + (f" ({marks})" if marks else "")
                + (f" {edges}" if edges else "")
            )
        _emit(payload, args.json, lines)
        return EXIT_OK

    if args.command == "checkout":
        with _StoreLock(args.store):
            session = _open_session(args.store)
            if args.data_only:
                session.rollback_data(args.commit)
            else:
                session.checkout_both(args.commit)
        print(f"head_code {session.head_code[:12]} head_data {session.head_data[:12]}")
        return EXIT_OK

    if args.command == "tag":
        with _StoreLock(args.store):
            store = CommitStore(args.store)
            store.set_tag(args.commit, args.name, args.message)
        print(f"tagged {args.commit[:12]} as {args.name}")
        return EXIT_OK

    if args.command == "search":
        store = CommitStore(args.store)
        try:
            query = search_mod.parse_query(args.query)
        except search_mod.BadQuery as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        hits = sorted(search_mod.search(store, query))
        _emit({"commits": hits}, args.json, hits)
        return EXIT_OK

    if args.command == "diff":
        store = CommitStore(args.store)
        var_diff = search_mod.diff_variables(store, args.a, args.b)
        code_diff = search_mod.diff_code(store, args.a, args.b)
        payload = {
            "variables": {
                "changed": sorted(var_diff.changed),
                "added_right": sorted(var_diff.added_right),
                "deleted_right": sorted(var_diff.deleted_right),
                "unchanged": sorted(var_diff.unchanged),
            },
            "code": {
                "cell_ops": [
                    {"op": op.op,
                     "cell_id": op.cell.cell_id if op.cell else op.cell_id}
                    for op in code_diff.cell_ops
                ]
            },
        }
        lines = []
        for key in ("changed", "added_right", "deleted_right"):
            for name in payload["variables"][key]:
                lines.append(f"{key}: {name}")
        for op in payload["code"]["cell_ops"]:
            if op["op"] != "kept":
                lines.append(f"cell {op['op']}: {op['cell_id']}")
        _emit(payload, args.json, lines)
        return EXIT_OK

    if args.command == "vars":
        store = CommitStore(args.store)
        cid = args.commit
        if cid is None:
            _, cid = store.read_head()
        env = store.materialize_variables(cid)
        payload = {
            "commit": cid,
            "variables": [
                {"name": k, "type": type_name(v), "repr": repr_value(v)}
                for k, v in env.items()
            ],
        }
        _emit(
            payload,
            args.json,
            [f"{v['name']} : {v['type']} = {v['repr']}" for v in payload["variables"]],
        )
        return EXIT_OK

    if args.command == "export":
        store = CommitStore(args.store)
        worktree = store.read_worktree()
        if worktree is None:
            print("store error: no worktree snapshot", file=sys.stderr)
            return EXIT_STORE
        with open(args.path, "w", encoding="utf-8") as fh:
            json.dump(worktree, fh, sort_keys=True, indent=1)
            fh.write("\n")
        print(f"exported notebook to {args.path}")
        return EXIT_OK

    if args.command == "serve":
        import uvicorn

        from .api import create_app

        session = _open_session(args.store)
        app = create_app(session)
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return EXIT_OK

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
