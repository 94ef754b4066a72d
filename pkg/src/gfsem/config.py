"""Flat dotted-key run configuration.

One `key = value` pair per line, `#` comments, no nesting. Every key that a
run consumed is echoed into its manifest, so configs stay diffable.
"""

from __future__ import annotations


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value.strip()
    return out


def load_config(path) -> dict[str, str]:
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def get_str(cfg: dict, key: str, default=None, choices=None) -> str:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    val = cfg[key]
    if choices and val not in choices:
        raise ConfigError(f"{key} = {val!r} not in {sorted(choices)}")
    return val


def get_float(cfg: dict, key: str, default=None) -> float:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"{key} = {cfg[key]!r} is not a number") from None


def get_int(cfg: dict, key: str, default=None) -> int:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"{key} = {cfg[key]!r} is not an integer") from None


def get_pair(cfg: dict, key: str, default=None) -> tuple[float, float]:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    parts = cfg[key].replace(",", " ").split()
    if len(parts) != 2:
        raise ConfigError(f"{key} = {cfg[key]!r} is not a pair")
    return float(parts[0]), float(parts[1])


def get_meshes(cfg: dict, key: str = "grid.meshes") -> list[tuple[int, int]]:
    raw = get_str(cfg, key)
    meshes = []
    for tok in raw.replace(",", " ").split():
        if "x" in tok:
            a, b = tok.split("x", 1)
            meshes.append((int(a), int(b)))
        else:
            meshes.append((int(tok), int(tok)))
    if not meshes:
        raise ConfigError(f"{key} lists no meshes")
    return meshes
