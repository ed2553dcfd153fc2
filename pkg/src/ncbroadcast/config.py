"""Flat ``key = value`` experiment files.

Repeating a key builds a grid, so::

    lambda = 0.5
    lambda = 0.6
    coding = b

sweeps two addition rates.  A value may also hold a comma-separated list.
Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

from pathlib import Path

# accepted spellings -> canonical parameter name
KEYS = {
    "receivers": "receivers", "r": "receivers",
    "mu": "mu",
    "coding": "coding",
    "rate": "rate",
    "lambda": "lam", "lam": "lam",
    "td": "td", "t_d": "td",
    "f": "f",
    "field_exp": "field_exp", "field-exp": "field_exp", "m": "field_exp",
    "horizon": "horizon",
    "seed": "seed",
    "reps": "reps",
    "delivery_mode": "delivery_mode", "delivery-mode": "delivery_mode",
    "out": "out",
    "experiment": "experiment",
}

INT_KEYS = {"receivers", "td", "field_exp", "horizon", "seed", "reps"}
FLOAT_KEYS = {"mu", "lam", "f"}
SCALAR_KEYS = {"horizon", "seed", "reps", "out", "experiment"}


class ConfigError(ValueError):
    pass


def convert(key: str, text: str):
    try:
        if key in INT_KEYS:
            return int(text)
        if key in FLOAT_KEYS:
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None
    return text


def parse_config(text: str) -> dict[str, list]:
    out: dict[str, list] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        name = KEYS.get(key.lower())
        if name is None:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        for part in value.split(","):
            part = part.strip()
            if part:
                out.setdefault(name, []).append(convert(name, part))
    for key in SCALAR_KEYS:
        if len(out.get(key, ())) > 1:
            raise ConfigError(f"{key} cannot be a grid")
    return out


def load_config(path) -> dict[str, list]:
    return parse_config(Path(path).read_text())
