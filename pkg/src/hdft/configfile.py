"""Line-oriented run configuration: ``section.key = value`` with ``#``
comments, UTF-8.  Lookups are typed and consumed keys are tracked so a
run can reject anything it does not understand."""

from __future__ import annotations


class ConfigError(ValueError):
    pass


class Config:
    def __init__(self, entries: dict):
        self._entries = entries
        self._seen: set = set()

    @classmethod
    def parse(cls, text: str) -> "Config":
        entries: dict = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError(f"line {lineno}: empty key")
            if key in entries:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            entries[key] = value
        return cls(entries)

    @classmethod
    def load(cls, path) -> "Config":
        with open(path, encoding="utf-8") as f:
            return cls.parse(f.read())

    def _raw(self, key: str, default):
        self._seen.add(key)
        if key in self._entries:
            return self._entries[key]
        return default

    def get_str(self, key: str, default: str | None = None) -> str | None:
        return self._raw(key, default)

    def get_int(self, key: str, default: int | None = None) -> int | None:
        v = self._raw(key, None)
        if v is None:
            return default
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {v!r}") from None

    def get_float(self, key: str, default: float | None = None) -> float | None:
        v = self._raw(key, None)
        if v is None:
            return default
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {v!r}") from None

    def get_bool(self, key: str, default: bool | None = None) -> bool | None:
        v = self._raw(key, None)
        if v is None:
            return default
        low = v.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected true/false, got {v!r}")

    def reject_unknown(self) -> None:
        unknown = sorted(set(self._entries) - self._seen)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
