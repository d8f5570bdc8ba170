"""EPA sentiment vectors, lexicons and nearest-label search.

Sentiment lives in the three-dimensional Evaluation / Potency / Activity
space, with every coordinate on the semantic-differential scale [-4.3, 4.3].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Literal

EPA_BOUND = 4.3

Metric = Literal["euclidean", "squared_euclidean"]
METRICS = ("euclidean", "squared_euclidean")


class EmptyLexiconError(ValueError):
    """Raised when a query is made against a lexicon with no entries."""


def _check_component(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or abs(value) > EPA_BOUND:
        raise ValueError(
            f"EPA component {name}={value!r} outside [-{EPA_BOUND}, {EPA_BOUND}]"
        )
    return value


@dataclass(frozen=True)
class EpaVector:
    e: float
    p: float
    a: float

    def __post_init__(self) -> None:
        for name in ("e", "p", "a"):
            object.__setattr__(self, name, _check_component(name, getattr(self, name)))

    def __iter__(self) -> Iterator[float]:
        return iter((self.e, self.p, self.a))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.e, self.p, self.a)


@dataclass(frozen=True)
class LexiconEntry:
    label: str
    mean: EpaVector
    sd: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if not self.label:
            raise ValueError("lexicon label must be nonempty")
        sd = tuple(float(s) for s in self.sd)
        if len(sd) != 3:
            raise ValueError(f"sd for {self.label!r} must have three components")
        if any(not math.isfinite(s) or s < 0 for s in sd):
            raise ValueError(f"sd for {self.label!r} must be nonnegative, got {sd}")
        object.__setattr__(self, "sd", sd)


@dataclass(frozen=True)
class Lexicon:
    """An immutable label -> sentiment table. Labels are case-sensitive."""

    entries: tuple[LexiconEntry, ...] = ()
    _index: dict[str, LexiconEntry] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        index: dict[str, LexiconEntry] = {}
        for entry in entries:
            if entry.label in index:
                raise ValueError(f"duplicate lexicon label {entry.label!r}")
            index[entry.label] = entry
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_entries(cls, entries: Iterable[LexiconEntry]) -> "Lexicon":
        return cls(tuple(entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[LexiconEntry]:
        return iter(self.entries)

    def __contains__(self, label: object) -> bool:
        return label in self._index

    def __getitem__(self, label: str) -> LexiconEntry:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"label {label!r} not in lexicon") from None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.entries)


def distance(a: EpaVector, b: EpaVector, metric: Metric = "squared_euclidean") -> float:
    """Distance between two EPA points.

    The squared form is the default since that is the number the ACT
    literature usually reports as "distance".
    """
    if metric == "squared_euclidean":
        return sum((x - y) ** 2 for x, y in zip(a, b))
    if metric == "euclidean":
        return math.hypot(*(x - y for x, y in zip(a, b)))
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def nearest_label(
    lex: Lexicon, query: EpaVector, k: int = 1, metric: Metric = "squared_euclidean"
) -> list[tuple[str, float]]:
    """Return the ``k`` labels whose means are closest to ``query``.

    Ties are broken lexicographically by label so results are reproducible.
    """
    if len(lex) == 0:
        raise EmptyLexiconError("lexicon has no entries to search")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > len(lex):
        raise ValueError(f"k={k} exceeds lexicon size {len(lex)}")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    # rank on the squared form so sqrt rounding can never reorder near-ties
    scored = sorted((distance(e.mean, query), e.label) for e in lex)[:k]
    if metric == "euclidean":
        return [(label, math.sqrt(d)) for d, label in scored]
    return [(label, d) for d, label in scored]


def emotion_deflection(fundamental: EpaVector, transient: EpaVector) -> tuple[float, float, float]:
    """Fundamental minus transient, componentwise.

    Returned as a bare triple: a difference of two in-range vectors can
    reach 8.6 in magnitude and so is not itself an ``EpaVector``.
    """
    return tuple(f - t for f, t in zip(fundamental, transient))  # type: ignore[return-value]
