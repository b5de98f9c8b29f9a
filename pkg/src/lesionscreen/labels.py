"""Canonical class labels and integer codes for the two screening tasks.

The multiclass task distinguishes the four skin conditions; the binary task
keeps Mpox as the positive class (code 0) and merges everything else into
"Others" (code 1). Integer codes are fixed so confusion matrices are
comparable across runs and reports.
"""

from __future__ import annotations

import enum

MULTICLASS_CLASSES: tuple[str, ...] = ("Acne", "Chickenpox", "Mpox", "Healthy")
BINARY_CLASSES: tuple[str, ...] = ("Mpox", "Others")

_MULTICLASS_CODES = {name.lower(): i for i, name in enumerate(MULTICLASS_CLASSES)}
_BINARY_CODES = {name.lower(): i for i, name in enumerate(BINARY_CLASSES)}


class Task(str, enum.Enum):
    """Classification setting: 4-way multiclass or Mpox-vs-Others binary."""

    BINARY = "binary"
    MULTICLASS = "multiclass"

    @property
    def class_names(self) -> tuple[str, ...]:
        return BINARY_CLASSES if self is Task.BINARY else MULTICLASS_CLASSES

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


class LabelError(ValueError):
    """Raised when a label string is not one of the known class names."""


def parse_label(text: str, task: Task = Task.MULTICLASS) -> str:
    """Return the canonical class name for ``text`` (case-insensitive)."""
    names = task.class_names
    key = text.strip().lower()
    codes = _BINARY_CODES if task is Task.BINARY else _MULTICLASS_CODES
    if key not in codes:
        raise LabelError(
            f"unknown {task.value} label {text!r}; expected one of {', '.join(names)}"
        )
    return names[codes[key]]


def class_code(label: str, task: Task) -> int:
    """Integer code of ``label`` under ``task``'s canonical ordering."""
    codes = _BINARY_CODES if task is Task.BINARY else _MULTICLASS_CODES
    key = label.strip().lower()
    if key not in codes:
        raise LabelError(f"label {label!r} has no {task.value} code")
    return codes[key]


def to_binary(label: str) -> str:
    """Collapse a multiclass label to the binary task's label."""
    return "Mpox" if parse_label(label) == "Mpox" else "Others"
