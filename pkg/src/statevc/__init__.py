"""Two-dimensional code+data version control for interactive sessions."""

from .kernel import exec_history, exec_one, parse
from .model import (
    Cell,
    CheckoutClass,
    CheckoutMode,
    CodeState,
    DataState,
    HistoryEntry,
    Version,
    classify_checkout,
    is_consistent,
    is_executed,
)
from .session import CheckoutRejected, Session
from .store import Commit, CommitStore, make_commit

__all__ = [
    "Cell",
    "CheckoutClass",
    "CheckoutMode",
    "CheckoutRejected",
    "CodeState",
    "Commit",
    "CommitStore",
    "DataState",
    "HistoryEntry",
    "Session",
    "Version",
    "classify_checkout",
    "exec_history",
    "exec_one",
    "is_consistent",
    "is_executed",
    "make_commit",
    "parse",
]
