"""Reader for the line-oriented ``key = value`` files used by plans and scenario configs.

Grammar::

    file     := line*
    line     := blank | comment | header | entry
    comment  := ('#' | ';') text
    header   := '[' name (whitespace label)? ']'
    entry    := key '=' value

Entries before the first header belong to the top-level section. Section
names may repeat; each occurrence is a separate section, kept in file order.
Keys are case-sensitive and must be unique within a section.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


class KVFormatError(ValueError):
    pass


@dataclass
class Section:
    name: str
    label: str | None
    line: int
    entries: dict[str, str] = field(default_factory=dict)

    def require(self, key: str) -> str:
        if key not in self.entries:
            raise KVFormatError(f"line {self.line}: section [{self.name}] is missing '{key}'")
        return self.entries[key]


def parse_kv(text: str) -> list[Section]:
    sections = [Section("", None, 0)]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise KVFormatError(f"line {lineno}: unterminated section header {line!r}")
            parts = line[1:-1].split(None, 1)
            if not parts:
                raise KVFormatError(f"line {lineno}: empty section header")
            sections.append(Section(parts[0], parts[1].strip() if len(parts) > 1 else None, lineno))
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise KVFormatError(f"line {lineno}: expected 'key = value', got {line!r}")
        current = sections[-1]
        if key in current.entries:
            raise KVFormatError(f"line {lineno}: duplicate key '{key}'")
        current.entries[key] = value.strip()
    return sections


def read_kv(path: str | Path) -> list[Section]:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def as_float(section: Section, key: str, default: float | None = None) -> float:
    if key not in section.entries:
        if default is None:
            section.require(key)
        return default
    try:
        return float(section.entries[key])
    except ValueError:
        raise KVFormatError(f"[{section.name}] {key}: not a number: {section.entries[key]!r}") from None


def as_int(section: Section, key: str, default: int | None = None) -> int:
    if key not in section.entries:
        if default is None:
            section.require(key)
        return default
    try:
        return int(section.entries[key])
    except ValueError:
        raise KVFormatError(f"[{section.name}] {key}: not an integer: {section.entries[key]!r}") from None
