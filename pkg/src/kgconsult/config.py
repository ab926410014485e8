"""Flat key=value config files for CLI defaults.

Lines look like `lr = 0.005`; `#` starts a comment. Values parse as int,
float, bool or plain string. Command-line flags always win over the file.
"""

from __future__ import annotations

from pathlib import Path


def parse_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "'\"":
        return raw[1:-1]
    return raw


def load_config(path: str | Path) -> dict:
    """Parse the file into a flat dict; raises on lines without '='."""
    result: dict = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, raw = stripped.split("=", 1)
        result[key.strip()] = parse_value(raw)
    return result
