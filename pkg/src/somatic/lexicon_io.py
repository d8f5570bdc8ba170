"""Read and write EPA lexicons as comma-delimited text.

Format: UTF-8, CRLF line ends on write, header ``label,e,p,a[,sd_e,sd_p,sd_a]``, one entry per line.
Extra columns are ignored, which lets raw ACT dictionary exports load after
renaming their header.
"""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Union

from .epa import EpaVector, Lexicon, LexiconEntry

REQUIRED_COLUMNS = ("label", "e", "p", "a")
SD_COLUMNS = ("sd_e", "sd_p", "sd_a")
HEADER = REQUIRED_COLUMNS + SD_COLUMNS

PathOrStream = Union[str, "os.PathLike[str]", IO[str]]


class LexiconFormatError(ValueError):
    """The file cannot be read as a lexicon at all (bad or missing header)."""


@dataclass
class LexiconFileReport:
    accepted: int = 0
    rejects: list[tuple[int, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.accepted + len(self.rejects)

    def summary(self) -> str:
        lines = [f"accepted {self.accepted}, rejected {len(self.rejects)}"]
        lines += [f"line {n}: {reason}" for n, reason in self.rejects]
        lines += [f"note: {note}" for note in self.notes]
        return "\n".join(lines)


def _open_text(src: PathOrStream, mode: str):
    if hasattr(src, "read") or hasattr(src, "write"):
        return src, False
    return open(src, mode, encoding="utf-8", newline=""), True


def load_lexicon(src: PathOrStream) -> tuple[Lexicon, LexiconFileReport]:
    fh, owned = _open_text(src, "r")
    try:
        return _parse(csv.reader(fh))
    finally:
        if owned:
            fh.close()


def _parse(reader) -> tuple[Lexicon, LexiconFileReport]:
    report = LexiconFileReport()
    try:
        header = next(reader)
    except StopIteration:
        raise LexiconFormatError("empty file: missing header") from None
    except csv.Error as exc:
        raise LexiconFormatError(f"unreadable header: {exc}") from None
    header = [h.strip() for h in header]
    if header and header[0].startswith("﻿"):
        header[0] = header[0][1:]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise LexiconFormatError(f"header lacks required columns {missing}; got {header}")
    if len(set(header)) != len(header):
        raise LexiconFormatError(f"duplicate header columns in {header}")
    col = {name: i for i, name in enumerate(header)}
    sd_present = [c for c in SD_COLUMNS if c in col]
    if len(sd_present) < len(SD_COLUMNS):
        report.notes.append(f"missing sd columns {[c for c in SD_COLUMNS if c not in col]} default to 0")
    extra = [h for h in header if h not in HEADER]
    if extra:
        report.notes.append(f"ignored extra columns {extra}")

    entries: dict[str, LexiconEntry] = {}
    first_seen: dict[str, int] = {}
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            report.rejects.append((reader.line_num, f"malformed line: {exc}"))
            continue
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            report.rejects.append((lineno, f"expected {len(header)} fields, got {len(row)}"))
            continue
        label = row[col["label"]]
        if not label:
            report.rejects.append((lineno, "empty label"))
            continue
        if label in entries:
            report.rejects.append((lineno, f"duplicate label {label!r} (first on line {first_seen[label]})"))
            continue
        try:
            mean = EpaVector(*(float(row[col[c]]) for c in ("e", "p", "a")))
        except ValueError as exc:
            reason = "out-of-range" if "outside" in str(exc) else "non-numeric EPA value"
            report.rejects.append((lineno, f"{reason}: {exc}"))
            continue
        try:
            sd = tuple(float(row[col[c]]) if c in col and row[col[c]].strip() else 0.0
                       for c in SD_COLUMNS)
            entry = LexiconEntry(label, mean, sd)
        except ValueError as exc:
            report.rejects.append((lineno, f"invalid sd: {exc}"))
            continue
        entries[label] = entry
        first_seen[label] = lineno
        report.accepted += 1
    return Lexicon(tuple(entries.values())), report


def save_lexicon(lex: Lexicon, dst: PathOrStream) -> None:
    fh, owned = _open_text(dst, "w")
    try:
        # CRLF per RFC 4180; the writer only quotes a lone \r or \n in a
        # label when it is part of the terminator
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(HEADER)
        for entry in lex:
            writer.writerow([entry.label, *map(repr, entry.mean), *map(repr, entry.sd)])
    finally:
        if owned:
            fh.close()


def dumps_lexicon(lex: Lexicon) -> str:
    buf = io.StringIO()
    save_lexicon(lex, buf)
    return buf.getvalue()


def sample_lexicon() -> Lexicon:
    """Bundled demo lexicon: a handful of US survey entries with published
    EPA profiles. Blank sd cells load as 0."""
    text = resources.files("somatic").joinpath("data/sample_lexicon.csv").read_text("utf-8")
    lex, _ = load_lexicon(io.StringIO(text))
    return lex


def sample_lexicon_path() -> str:
    return str(resources.files("somatic").joinpath("data/sample_lexicon.csv"))
