"""Parsing of the small ``name(arg, key=value)`` call syntax used in config files."""

from __future__ import annotations

import re

_CALL = re.compile(r"^\s*([A-Za-z_][\w-]*)\s*(?:\((.*)\))?\s*$")


def parse_call(text: str) -> tuple[str, list[float], dict[str, float]]:
    """Split ``"stable(alpha=1.5)"`` into ``("stable", [], {"alpha": 1.5})``.

    Bare names (``"neveu"``) and positional numbers (``"explicit(0.2,0.8)"``)
    are accepted. Raises ValueError on anything else.
    """
    m = _CALL.match(text)
    if m is None:
        raise ValueError(f"cannot parse {text!r}")
    name, body = m.group(1).lower(), m.group(2)
    args: list[float] = []
    kwargs: dict[str, float] = {}
    if body is not None and body.strip():
        for item in body.split(","):
            item = item.strip()
            if "=" in item:
                key, value = (s.strip() for s in item.split("=", 1))
                kwargs[key.lower()] = _number(value, text)
            else:
                if kwargs:
                    raise ValueError(f"positional argument after keyword in {text!r}")
                args.append(_number(item, text))
    return name, args, kwargs


def _number(value: str, text: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"non-numeric argument {value!r} in {text!r}") from None
