"""Shared utilities: argument parsing and exact rate arithmetic."""
import math
from fractions import Fraction

from errors import UsageError

_MAX_DENOMINATOR = 10 ** 9


def as_fraction(value) -> Fraction:
    """Snap a probability to the nearest rational with a bounded denominator."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(value).limit_denominator(_MAX_DENOMINATOR)


def parse_grid(text: str) -> list:
    """Parse "start:stop:step" into an inclusive list of floats."""
    parts = (text or "").split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (as_fraction(float(x)) for x in parts)
    except ValueError:
        raise UsageError(f"grid values must be numbers, got {text!r}")
    if step <= 0 or start > stop:
        raise UsageError(f"grid needs start <= stop and step > 0, got {text!r}")
    count = math.floor((stop - start) / step) + 1
    return [float(start + i * step) for i in range(count)]


def parse_branching(text: str) -> tuple:
    """Parse "2,3" into (2, 3)."""
    items = [x.strip() for x in (text or "").replace("x", ",").split(",") if x.strip()]
    if not items:
        raise UsageError("branching sequence is empty")
    try:
        return tuple(int(x) for x in items)
    except ValueError:
        raise UsageError(f"branching must be integers, got {text!r}")


def parse_param_sets(text: str) -> list:
    """Parse "10;2,5;2,2,3" into a list of branching tuples."""
    return [parse_branching(chunk) for chunk in (text or "").split(";") if chunk.strip()]


def format_params(branching) -> str:
    """Render a branching sequence the CSV way: (2, 2, 3) -> "2x2x3"."""
    return "x".join(str(s) for s in branching)
