"""Runtime values: integers, strings, booleans, and the undefined marker.

``undef`` doubles as "variable not bound" and "evaluation error"; the two are
deliberately not distinguished anywhere downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


class Undef:
    """The distinct undefined marker. Use the UNDEF singleton."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "undef"

    def __hash__(self):
        return hash("tracelab.undef")


UNDEF = Undef()


@dataclass(frozen=True)
class Bool:
    """Boolean data value, kept distinct from int (Python would conflate True and 1)."""

    value: bool

    def __repr__(self):
        return "tt" if self.value else "ff"


TT = Bool(True)
FF = Bool(False)

Value = Union[int, str, Bool]
UValue = Union[int, str, Bool, Undef]

INT = "Int"
STRING = "String"
BOOL = "Bool"
UNDEF_T = "Undef"
TOP_T = "Top"
BOT_T = "Bot"


def is_value(v) -> bool:
    return isinstance(v, (str, Bool)) or (isinstance(v, int) and not isinstance(v, bool))


def type_of(v: UValue) -> str:
    """Type name of a possibly undefined value."""
    if v is UNDEF:
        return UNDEF_T
    if isinstance(v, Bool):
        return BOOL
    if isinstance(v, bool):
        raise TypeError("raw Python bool leaked into a value position; use Bool")
    if isinstance(v, int):
        return INT
    if isinstance(v, str):
        return STRING
    raise TypeError(f"not a value: {v!r}")


def value_str(v: UValue) -> str:
    """Literal syntax for a value (ints bare, strings quoted, booleans tt/ff)."""
    if v is UNDEF:
        return "undef"
    if isinstance(v, Bool):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return str(v)
