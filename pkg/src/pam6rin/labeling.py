"""5-bit labelings, nearest-neighbour diagnostics and the three-step labeling search."""
from __future__ import annotations

import itertools
from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _backend
from .constellation import Constellation, canonical_key, canonical_sort, cross_qam32, optimized_qam32, reference_qam32
from .model import Point2D

N_BITS = 5
ALL_LABELS = tuple(format(i, "05b") for i in range(2**N_BITS))

# 2-bit binary reflected Gray code over the bottom-left PAM-4 block
BRGC4 = {-5: "00", -3: "01", -1: "11", 1: "10"}
BLOCK_LEVELS = tuple(BRGC4)


def check_label(s: str) -> None:
    if len(s) != N_BITS or set(s) - {"0", "1"}:
        raise ValueError(f"not a {N_BITS}-bit label: {s!r}")


def hamming(a: str, b: str) -> int:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {a!r} vs {b!r}")
    return sum(u != v for u, v in zip(a, b))


class Labeling(Mapping):
    """Bijection between 32 points and the 32 five-bit strings."""

    def __init__(self, mapping):
        m = {Point2D(int(p[0]), int(p[1])): s for p, s in dict(mapping).items()}
        for s in m.values():
            check_label(s)
        if len(m) != len(ALL_LABELS):
            raise ValueError(f"labeling must cover {len(ALL_LABELS)} points, got {len(m)}")
        if len(set(m.values())) != len(m):
            raise ValueError("labels are not distinct")
        self._map = {p: m[p] for p in canonical_sort(m)}

    def __getitem__(self, p):
        return self._map[Point2D(*p)]

    def __iter__(self):
        return iter(self._map)

    def __len__(self):
        return len(self._map)

    def __eq__(self, other):
        if isinstance(other, Mapping):
            return dict(self._map) == {Point2D(*p): s for p, s in other.items()}
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self._map.items()))

    def __repr__(self):
        return f"Labeling({self._map!r})"

    def point_of(self, label: str) -> Point2D:
        for p, s in self._map.items():
            if s == label:
                return p
        raise KeyError(label)

    def codes(self, constellation: Constellation) -> np.ndarray:
        """Integer labels aligned with ``constellation.points``."""
        return np.array([int(self[p], 2) for p in constellation.points], dtype=np.int64)

    def reflected(self) -> "Labeling":
        return Labeling({p.swapped(): s for p, s in self._map.items()})


# --- neighbour graph --------------------------------------------------------

@dataclass(frozen=True)
class NeighborGraph:
    points: tuple
    edges: tuple  # (p, q) with p before q in canonical order

    def degree(self, p) -> int:
        p = Point2D(*p)
        return sum(p in e for e in self.edges)

    def edge_set(self) -> frozenset:
        return frozenset(frozenset(e) for e in self.edges)

    def __len__(self):
        return len(self.edges)


def neighbor_graph(c) -> NeighborGraph:
    """Axis-aligned grid neighbours (Euclidean distance 2)."""
    pts = canonical_sort(getattr(c, "points", c))
    present = set(pts)
    edges = []
    for p in pts:
        for q in (Point2D(p.x1 + 2, p.x2), Point2D(p.x1, p.x2 - 2)):
            if q in present:
                edges.append(tuple(sorted((p, q), key=canonical_key)))
    edges.sort(key=lambda e: (canonical_key(e[0]), canonical_key(e[1])))
    return NeighborGraph(pts, tuple(edges))


@dataclass(frozen=True)
class GrayCheck:
    ok: bool
    violations: tuple

    def __bool__(self):
        return self.ok


def is_gray(labeling: Mapping, graph: NeighborGraph) -> GrayCheck:
    bad = tuple(e for e in graph.edges if hamming(labeling[e[0]], labeling[e[1]]) != 1)
    return GrayCheck(not bad, bad)


def edge_distances(labeling: Mapping, graph: NeighborGraph) -> list:
    return [hamming(labeling[p], labeling[q]) for p, q in graph.edges]


def avg_nn_hamming(labeling: Mapping, graph: NeighborGraph) -> Fraction:
    if not graph.edges:
        raise ValueError("neighbour graph has no edges")
    return Fraction(sum(edge_distances(labeling, graph)), len(graph.edges))


# --- three-step construction -------------------------------------------------

def construct_steps_1_2(c: Constellation) -> dict:
    """Label the bottom-left PAM-4 x PAM-4 block and the six points touching it.

    Step 1 gives block point ``(x1, x2)`` the label ``0 + g(x1) + g(x2)`` with
    ``g`` the 2-bit reflected Gray code.  Step 2 gives every other point whose
    only block neighbour is ``q`` the label of ``q`` with its first bit set.

    Raises
    ------
    ValueError
        If the block is incomplete or step 2 does not leave exactly ten points
        to the exhaustive search (only the optimized constellation and a few
        close relatives qualify).
    """
    present = c.point_set
    block = [Point2D(a, b) for a in BLOCK_LEVELS for b in BLOCK_LEVELS]
    missing = [p for p in block if p not in present]
    if missing:
        raise ValueError(f"constellation lacks block points {missing}")
    labels = {p: "0" + BRGC4[p.x1] + BRGC4[p.x2] for p in block}
    block_set = set(block)
    step2 = {}
    for p in c.points:
        if p in block_set:
            continue
        nbrs = [q for q in block_set
                if abs(q.x1 - p.x1) + abs(q.x2 - p.x2) == 2 and (q.x1 == p.x1 or q.x2 == p.x2)]
        if len(nbrs) > 1:
            raise ValueError(f"point {p} touches the block more than once")
        if nbrs:
            step2[p] = "1" + labels[nbrs[0]][1:]
    if len(step2) != 6:
        raise ValueError(f"expected 6 step-2 points, found {len(step2)}")
    labels.update(step2)
    return {p: labels[p] for p in canonical_sort(labels)}


@dataclass(frozen=True)
class Step3Problem:
    """Objective split into constant, per-point and pairwise parts over the free points."""

    free_points: tuple
    free_labels: tuple
    unary: np.ndarray      # (n, n): cost of free point i carrying free label k
    pair_i: np.ndarray
    pair_j: np.ndarray
    label_hamming: np.ndarray  # (n, n) between free labels
    constant: int
    n_edges: int

    def cost(self, perm) -> int:
        perm = np.asarray(perm)
        idx = np.arange(len(perm))
        return int(self.constant + self.unary[idx, perm].sum()
                   + self.label_hamming[perm[self.pair_i], perm[self.pair_j]].sum())


def step3_problem(partial: Mapping, c: Constellation, g: NeighborGraph) -> Step3Problem:
    fixed = {Point2D(*p): s for p, s in partial.items()}
    free_points = tuple(p for p in c.points if p not in fixed)
    used = set(fixed.values())
    if len(used) != len(fixed):
        raise ValueError("partial labeling reuses a label")
    free_labels = tuple(s for s in ALL_LABELS if s not in used)
    if len(free_points) != len(free_labels):
        raise ValueError(f"{len(free_points)} free points but {len(free_labels)} free labels")
    n = len(free_points)
    pos = {p: i for i, p in enumerate(free_points)}
    unary = np.zeros((n, n), dtype=np.int64)
    pi, pj = [], []
    constant = 0
    for p, q in g.edges:
        if p in fixed and q in fixed:
            constant += hamming(fixed[p], fixed[q])
        elif p in fixed or q in fixed:
            f, v = (p, q) if p in fixed else (q, p)
            unary[pos[v]] += [hamming(fixed[f], s) for s in free_labels]
        else:
            pi.append(pos[p])
            pj.append(pos[q])
    lh = np.array([[hamming(a, b) for b in free_labels] for a in free_labels], dtype=np.int64)
    return Step3Problem(free_points, free_labels, unary, np.array(pi, dtype=np.intp),
                        np.array(pj, dtype=np.intp), lh, constant, len(g.edges))


@dataclass(frozen=True)
class Step3Result:
    labeling: Labeling
    objective: Fraction
    evaluated: int


def search_step3(partial: Mapping, c: Constellation, g: NeighborGraph | None = None,
                 expected_free: int | None = 10) -> Step3Result:
    """Exhaustively assign the unused labels to the unlabeled points.

    Every permutation is evaluated.  Among minimisers of the mean neighbour
    Hamming distance, the lexicographically smallest label sequence over the
    free points (canonical order) is returned.
    """
    g = g or neighbor_graph(c)
    prob = step3_problem(partial, c, g)
    if expected_free is not None and len(prob.free_points) != expected_free:
        raise ValueError(f"expected {expected_free} free points, got {len(prob.free_points)}")
    perm, cost, count = _backend.kernels.search_assignment(
        prob.unary, prob.pair_i, prob.pair_j, prob.label_hamming)
    mapping = dict(partial)
    for i, k in enumerate(perm):
        mapping[prob.free_points[i]] = prob.free_labels[k]
    return Step3Result(Labeling(mapping), Fraction(int(cost) + prob.constant, prob.n_edges), int(count))


def design_labeling(c: Constellation | None = None) -> Step3Result:
    c = c or optimized_qam32()
    return search_step3(construct_steps_1_2(c), c)


# --- builtin labelings ------------------------------------------------------

def _rows(rows: dict) -> dict:
    """``{x2: [(x1, label), ...]}`` to a point mapping."""
    return {Point2D(x1, x2): s for x2, row in rows.items() for x1, s in row}


_CROSS = _rows({
    5: [(-3, "01100"), (-1, "01110"), (1, "11110"), (3, "11100")],
    3: [(-5, "01111"), (-3, "01011"), (-1, "01010"), (1, "11010"), (3, "11011"), (5, "11111")],
    1: [(-5, "01101"), (-3, "01001"), (-1, "01000"), (1, "11000"), (3, "11001"), (5, "11101")],
    -1: [(-5, "00101"), (-3, "00001"), (-1, "00000"), (1, "10000"), (3, "10001"), (5, "10101")],
    -3: [(-5, "00111"), (-3, "00011"), (-1, "00010"), (1, "10010"), (3, "10011"), (5, "10111")],
    -5: [(-3, "00100"), (-1, "00110"), (1, "10110"), (3, "10100")],
})

_REFERENCE = _rows({
    5: [(-5, "10000"), (-3, "10001"), (-1, "10011"), (1, "11011"), (3, "11001"), (5, "11000")],
    3: [(-5, "10100"), (-1, "10010"), (1, "11010"), (5, "11100")],
    1: [(-5, "10101"), (-3, "10111"), (-1, "10110"), (1, "11110"), (3, "11111"), (5, "11101")],
    -1: [(-5, "00101"), (-3, "00111"), (-1, "00110"), (1, "01110"), (3, "01111"), (5, "01101")],
    -3: [(-5, "00100"), (-1, "00010"), (1, "01010"), (5, "01100")],
    -5: [(-5, "00000"), (-3, "00001"), (-1, "00011"), (1, "01011"), (3, "01001"), (5, "01000")],
})

_OPTIMIZED = _rows({
    5: [(-5, "10000"), (-3, "10100"), (-1, "11100"), (1, "11101"), (5, "10101")],
    3: [(-5, "10010"), (-3, "10110"), (-1, "11110"), (3, "11111")],
    1: [(-5, "00010"), (-3, "00110"), (-1, "01110"), (1, "01010"), (5, "10111")],
    -1: [(-5, "00011"), (-3, "00111"), (-1, "01111"), (1, "01011"), (3, "11011"), (5, "10011")],
    -3: [(-5, "00001"), (-3, "00101"), (-1, "01101"), (1, "01001"), (3, "11001"), (5, "10001")],
    -5: [(-5, "00000"), (-3, "00100"), (-1, "01100"), (1, "01000"), (3, "11000"), (5, "11010")],
})


def builtin_labelings() -> dict:
    """Name -> (constellation, labeling) for the three builtin designs."""
    return {
        "cross": (cross_qam32(), Labeling(_CROSS)),
        "reference": (reference_qam32(), Labeling(_REFERENCE)),
        "optimized": (optimized_qam32(), Labeling(_OPTIMIZED)),
    }


def builtin_labeling(name: str) -> Labeling:
    return builtin_labelings()[name][1]


def brute_force_step3_minimum(partial: Mapping, c: Constellation, g: NeighborGraph,
                              rng: np.random.Generator, chunk: int = 200_000) -> Fraction:
    """Independent re-scan: full objective per permutation, shuffled order.

    Slow; intended as a test oracle for :func:`search_step3`.
    """
    fixed = {Point2D(*p): s for p, s in partial.items()}
    free = [p for p in c.points if p not in fixed]
    free_labels = [s for s in ALL_LABELS if s not in set(fixed.values())]
    pts = list(c.points)
    index = {p: i for i, p in enumerate(pts)}
    ei = np.array([index[p] for p, _ in g.edges])
    ej = np.array([index[q] for _, q in g.edges])
    base = np.array([int(fixed[p], 2) if p in fixed else 0 for p in pts], dtype=np.int64)
    free_idx = np.array([index[p] for p in free])
    codes = np.array([int(s, 2) for s in free_labels], dtype=np.int64)
    popcount = np.array([bin(i).count("1") for i in range(32)], dtype=np.int64)
    perms = np.array(list(itertools.permutations(range(len(free)))), dtype=np.int8)
    perms = perms[rng.permutation(len(perms))]
    best = None
    for start in range(0, len(perms), chunk):
        block = perms[start:start + chunk]
        lab = np.broadcast_to(base, (len(block), len(pts))).copy()
        lab[:, free_idx] = codes[block]
        total = popcount[lab[:, ei] ^ lab[:, ej]].sum(axis=1)
        m = int(total.min())
        best = m if best is None else min(best, m)
    return Fraction(best, len(g.edges))
