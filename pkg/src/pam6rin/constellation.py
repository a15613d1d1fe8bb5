"""QAM-36 parent grid, 32-point subsets and the constellation file format."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

from .model import PAM6, Point2D

HEADER = "#qam32 v1"
N_POINTS = 32
N_REMOVED = 4


def canonical_key(p) -> tuple:
    """Row-major order: x2 descending, then x1 ascending."""
    return (-p[1], p[0])


def canonical_sort(points: Iterable) -> tuple:
    return tuple(sorted((Point2D(int(p[0]), int(p[1])) for p in points), key=canonical_key))


def qam36() -> list:
    return list(canonical_sort(Point2D(a, b) for a in PAM6 for b in PAM6))


QAM36 = tuple(qam36())
QAM36_INDEX = {p: i for i, p in enumerate(QAM36)}


class ConstellationFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Constellation:
    points: tuple
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        pts = canonical_sort(self.points)
        if len(pts) != N_POINTS:
            raise ValueError(f"wrong point count: expected {N_POINTS}, got {len(pts)}")
        if len(set(pts)) != N_POINTS:
            raise ValueError("duplicate points")
        outside = [p for p in pts if p not in QAM36_INDEX]
        if outside:
            raise ValueError(f"points outside QAM-36: {outside}")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p):
        return tuple(p) in self.point_set

    @property
    def point_set(self) -> frozenset:
        return frozenset(self.points)

    def index(self, p) -> int:
        return self.points.index(Point2D(*p))

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)

    def removed(self) -> "RemovalSet":
        return RemovalSet(frozenset(QAM36) - self.point_set)

    def is_swap_symmetric(self) -> bool:
        return all(p.swapped() in self.point_set for p in self.points)


@dataclass(frozen=True)
class RemovalSet:
    removed: frozenset

    def __post_init__(self):
        rem = frozenset(Point2D(int(p[0]), int(p[1])) for p in self.removed)
        if len(rem) != N_REMOVED:
            raise ValueError(f"removal set must hold {N_REMOVED} distinct points")
        if not rem <= QAM36_INDEX.keys():
            raise ValueError("removal set must be a subset of QAM-36")
        object.__setattr__(self, "removed", rem)

    @property
    def encoding(self) -> tuple:
        """Sorted QAM-36 canonical indices; used for tie-breaking."""
        return tuple(sorted(QAM36_INDEX[p] for p in self.removed))

    def sorted_points(self) -> tuple:
        return canonical_sort(self.removed)

    def swapped(self) -> "RemovalSet":
        return RemovalSet(frozenset(p.swapped() for p in self.removed))

    def is_swap_closed(self) -> bool:
        return self.swapped() == self

    def __str__(self):
        return " ".join(f"({p.x1},{p.x2})" for p in self.sorted_points())


def remove_points(removal, name: str | None = None) -> Constellation:
    if not isinstance(removal, RemovalSet):
        removal = RemovalSet(frozenset(removal))
    kept = [p for p in QAM36 if p not in removal.removed]
    return Constellation(tuple(kept), name or f"removed[{removal}]")


CROSS_REMOVED = frozenset(Point2D(a, b) for a in (-5, 5) for b in (-5, 5))
REFERENCE_REMOVED = frozenset(Point2D(a, b) for a in (-3, 3) for b in (-3, 3))
OPTIMIZED_REMOVED = frozenset(Point2D(*p) for p in [(1, 3), (3, 1), (3, 5), (5, 3)])


def cross_qam32() -> Constellation:
    return remove_points(CROSS_REMOVED, "cross")


def reference_qam32() -> Constellation:
    return remove_points(REFERENCE_REMOVED, "reference")


def optimized_qam32() -> Constellation:
    return remove_points(OPTIMIZED_REMOVED, "optimized")


BUILTIN = {
    "cross": cross_qam32,
    "reference": reference_qam32,
    "optimized": optimized_qam32,
}


def builtin_constellation(name: str) -> Constellation:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown constellation {name!r}; choose from {sorted(BUILTIN)}") from None


def reflect_diagonal(c: Constellation) -> Constellation:
    return Constellation(tuple(p.swapped() for p in c.points), c.name)


def enumerate_symmetric_removals() -> list:
    """All swap-closed 4-point removal sets, ordered by encoding.

    A swap-closed set is a union of diagonal points and mirror pairs, so it is
    4 diagonal points, 2 diagonal points plus one pair, or two pairs.
    """
    diagonal = [p for p in QAM36 if p.x1 == p.x2]
    pairs = [(p, p.swapped()) for p in QAM36 if p.x1 < p.x2]
    out = []
    for d in itertools.combinations(diagonal, 4):
        out.append(RemovalSet(frozenset(d)))
    for pair in pairs:
        for d in itertools.combinations(diagonal, 2):
            out.append(RemovalSet(frozenset(pair + d)))
    for a, b in itertools.combinations(pairs, 2):
        out.append(RemovalSet(frozenset(a + b)))
    out.sort(key=lambda r: r.encoding)
    return out


def enumerate_all_removals() -> Iterator[RemovalSet]:
    for combo in itertools.combinations(QAM36, N_REMOVED):
        yield RemovalSet(frozenset(combo))


# --- constellation file format ---------------------------------------------

def serialize(c: Constellation, labeling: Mapping | None = None) -> str:
    lines = [HEADER]
    for p in c.points:
        if labeling is None:
            lines.append(f"{p.x1} {p.x2}")
        else:
            lines.append(f"{p.x1} {p.x2} {labeling[p]}")
    return "\n".join(lines) + "\n"


def parse(text: str, name: str = "file"):
    """Parse the text format; returns ``(Constellation, Labeling | None)``."""
    from .labeling import Labeling

    lines = [ln.strip() for ln in text.replace("−", "-").splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != HEADER:
        raise ConstellationFormatError(f"missing header line {HEADER!r}")
    body = lines[1:]
    if len(body) != N_POINTS:
        raise ConstellationFormatError(f"wrong point count: expected {N_POINTS}, got {len(body)}")
    points, labels = [], []
    for lineno, ln in enumerate(body, start=2):
        toks = ln.split()
        if len(toks) not in (2, 3):
            raise ConstellationFormatError(f"line {lineno}: malformed line {ln!r}")
        try:
            p = Point2D(int(toks[0]), int(toks[1]))
        except ValueError:
            raise ConstellationFormatError(f"line {lineno}: malformed coordinates {ln!r}") from None
        if p not in QAM36_INDEX:
            raise ConstellationFormatError(f"line {lineno}: point {p} outside QAM-36")
        points.append(p)
        if len(toks) == 3:
            if len(toks[2]) != 5 or set(toks[2]) - {"0", "1"}:
                raise ConstellationFormatError(f"line {lineno}: bad label {toks[2]!r}")
            labels.append(toks[2])
    if len(set(points)) != N_POINTS:
        raise ConstellationFormatError("duplicate points")
    if labels and len(labels) != N_POINTS:
        raise ConstellationFormatError("labels must be given for all points or none")
    if len(set(labels)) != len(labels):
        raise ConstellationFormatError("label collision")
    c = Constellation(tuple(points), name)
    if not labels:
        return c, None
    return c, Labeling(dict(zip(points, labels)))
