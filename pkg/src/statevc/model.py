"""Core objects of code+data versioning.

A version pairs a code state (the notebook cells with their outputs) with
a data state (the variable map plus the execution history that produced
it). Consistency ties the two dimensions together: every executed cell's
stored output must equal the output of replaying the history prefix up to
that cell. The replay itself is delegated to the deterministic kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from . import kernel

CODE = "code"
MARKDOWN = "markdown"


@dataclass(frozen=True)
class Cell:
    cell_id: str
    kind: str  # CODE or MARKDOWN
    source: str
    output: str = ""
    error_flag: bool = False
    exec_counter: int | None = None

    def __post_init__(self):
        if self.kind not in (CODE, MARKDOWN):
            raise ValueError(f"bad cell kind {self.kind!r}")
        if self.kind == MARKDOWN and (self.exec_counter is not None or self.output):
            raise ValueError("markdown cells carry no output or counter")


@dataclass(frozen=True)
class CodeState:
    cells: tuple[Cell, ...] = ()

    def __post_init__(self):
        ids = [c.cell_id for c in self.cells]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate cell ids in code state")

    def get(self, cell_id: str) -> Cell | None:
        for cell in self.cells:
            if cell.cell_id == cell_id:
                return cell
        return None


@dataclass(frozen=True)
class HistoryEntry:
    cell_id: str
    source_snapshot: str
    counter: int  # 1-based position in the containing history


@dataclass(frozen=True)
class DataState:
    variables: dict = field(default_factory=dict)
    history: tuple[HistoryEntry, ...] = ()

    def sources(self) -> list[str]:
        return [entry.source_snapshot for entry in self.history]


@dataclass(frozen=True)
class Version:
    code: CodeState
    data: DataState


class CheckoutMode(Enum):
    BOTH = "both"
    DATA_ONLY = "data_only"
    CODE_ONLY = "code_only"


class CheckoutClass(Enum):
    SAFE_BOTH = "SafeBoth"
    SAFE_PAST_DATA = "SafePastData"
    UNSAFE_ONLY_CODE = "UnsafeOnlyCode"
    UNSAFE_FUTURE_DATA = "UnsafeFutureData"
    UNSAFE_UNRELATED_DATA = "UnsafeUnrelatedData"


@dataclass(frozen=True)
class Violation:
    cell_id: str
    expected: str
    actual: str


def is_executed(cell: Cell, data: DataState) -> tuple[bool, int | None]:
    """Whether the cell counts as executed in the data state.

    A cell is executed iff some history entry carries both its id and its
    exact current source; editing a cell therefore makes it non-executed.
    Returns the counter of the last matching entry.
    """
    if cell.kind != CODE:
        return False, None
    position = None
    for entry in data.history:
        if entry.cell_id == cell.cell_id and entry.source_snapshot == cell.source:
            position = entry.counter
    return (position is not None), position


def is_consistent(version: Version) -> tuple[bool, list[Violation]]:
    """Check Output(c) = Exec(H[1..n]) for every executed cell.

    One replay of the full history yields every prefix output (outputs are
    prefix-stable), so the check costs a single history execution.
    """
    _env, outputs = kernel.exec_history(version.data.sources())
    violations = []
    for cell in version.code.cells:
        executed, n = is_executed(cell, version.data)
        if not executed:
            continue
        expected = outputs[n - 1]
        if cell.output != expected:
            violations.append(Violation(cell.cell_id, expected, cell.output))
    return not violations, violations


def check_replay_closure(data: DataState) -> bool:
    """Variables must equal the replay of the history (extension invariant)."""
    env, _outputs = kernel.exec_history(data.sources())
    if set(env) != set(data.variables):
        return False
    return all(kernel.values_equal(env[k], data.variables[k]) for k in env)


def _history_key(history) -> list[tuple[str, str]]:
    return [(e.cell_id, e.source_snapshot) for e in history]


def is_history_prefix(prefix, full) -> bool:
    """Entry-wise (cell_id, source) prefix comparison, counters implied."""
    a, b = _history_key(prefix), _history_key(full)
    return len(a) <= len(b) and b[: len(a)] == a


def classify_checkout(
    head_data_history,
    target_history,
    mode: CheckoutMode,
) -> CheckoutClass:
    """Classify a checkout request against the head's data history.

    Checking out both dimensions is always safe (every commit is a
    consistent version); checking out only code is never safe; checking
    out only data is safe exactly when the target history is a prefix of
    the head's.
    """
    if mode is CheckoutMode.BOTH:
        return CheckoutClass.SAFE_BOTH
    if mode is CheckoutMode.CODE_ONLY:
        return CheckoutClass.UNSAFE_ONLY_CODE
    if is_history_prefix(target_history, head_data_history):
        return CheckoutClass.SAFE_PAST_DATA
    if is_history_prefix(head_data_history, target_history):
        return CheckoutClass.UNSAFE_FUTURE_DATA
    return CheckoutClass.UNSAFE_UNRELATED_DATA


def with_recomputed_counters(code: CodeState, data: DataState) -> CodeState:
    """Re-derive each cell's counter and output from the data state.

    Cells matched by the history get the counter of their last matching
    entry and the output that entry produced on replay; a cell re-executed
    beyond the target history is thereby rewound to its earlier output.
    Unmatched cells lose their counter (their stale output text is retained
    for display).
    """
    env: dict = {}
    outputs: list[tuple[str, bool]] = []
    for source in data.sources():
        env, output, error = kernel.exec_one(env, source)
        outputs.append((output, error))
    cells = []
    for cell in code.cells:
        if cell.kind != CODE:
            cells.append(cell)
            continue
        executed, n = is_executed(cell, data)
        if executed:
            output, error = outputs[n - 1]
            cells.append(
                replace(cell, exec_counter=n, output=output, error_flag=error)
            )
        else:
            cells.append(replace(cell, exec_counter=None))
    return CodeState(tuple(cells))
