"""Composition types, gleanings and descendants.

A composition type ``d_n o ... o d_1`` is stored as the tuple ``(d_1, ..., d_n)``
so that index 0 is the first map applied.  Its critical sequence is
``(d_1 - 1, ..., d_n - 1)``: every bowl ``j`` holds ``c_j`` pebbles.

A target sequence ``(c'_1, ..., c'_k)`` is a gleaning of ``(c_1, ..., c_m)`` when
there is an assignment ``beta`` of targets to bowls with
``sum(c'_i for beta(i) == j) <= c_j`` for every bowl.  Bowl indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

DEFAULT_CAP = 10**6


class CapExceeded(RuntimeError):
    """Raised when an enumeration would produce more results than allowed."""


def _as_seq(values: Iterable[int], minimum: int, what: str) -> tuple[int, ...]:
    seq = tuple(int(v) for v in values)
    if not seq:
        raise ValueError(f"{what} must be nonempty")
    if any(v < minimum for v in seq):
        raise ValueError(f"{what} entries must be >= {minimum}: {seq}")
    return seq


def crit_seq(values: Iterable[int]) -> tuple[int, ...]:
    """Validate a critical sequence (positive integers, nonempty)."""
    return _as_seq(values, 1, "critical sequence")


@dataclass(frozen=True)
class CompositionType:
    degrees: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "degrees", _as_seq(self.degrees, 2, "composition type"))

    @classmethod
    def parse(cls, text: str) -> "CompositionType":
        """Parse ``"2o3"``, ``"2 o 3"``, ``"2∘3"`` or a bare ``"4"``.

        The written order is outermost first, so ``"2o3"`` has degrees (3, 2).
        """
        t = text.replace("∘", "o").replace("*", "o")
        parts = [p.strip() for p in t.split("o")]
        if any(not p for p in parts):
            raise ValueError(f"bad composition type: {text!r}")
        return cls(tuple(int(p) for p in reversed(parts)))

    @classmethod
    def from_crit(cls, seq: Sequence[int]) -> "CompositionType":
        return cls(tuple(c + 1 for c in crit_seq(seq)))

    @property
    def crit(self) -> tuple[int, ...]:
        return tuple(d - 1 for d in self.degrees)

    @property
    def total_degree(self) -> int:
        out = 1
        for d in self.degrees:
            out *= d
        return out

    def canonical(self) -> "CompositionType":
        return CompositionType(canonical(self.degrees))

    def __str__(self) -> str:
        return " o ".join(str(d) for d in reversed(self.degrees))


@dataclass(frozen=True)
class GleaningWitness:
    """``beta[i]`` is the bowl receiving target entry ``i``."""

    target: tuple[int, ...]
    beta: tuple[int, ...]

    def loads(self, nbowls: int) -> list[int]:
        out = [0] * nbowls
        for c, j in zip(self.target, self.beta):
            out[j] += c
        return out

    def is_valid_for(self, source: Sequence[int]) -> bool:
        if len(self.beta) != len(self.target):
            return False
        if any(j < 0 or j >= len(source) for j in self.beta):
            return False
        return all(l <= c for l, c in zip(self.loads(len(source)), source))


def canonical(seq: Sequence[int]) -> tuple[int, ...]:
    """Representative of a permutation class: entries sorted descending."""
    return tuple(sorted(seq, reverse=True))


def _order_key(seq):
    return (canonical(seq), tuple(seq))


def is_gleaning(source: Sequence[int], target: Sequence[int]) -> GleaningWitness | None:
    """Return a witness assignment if ``target`` is a gleaning of ``source``."""
    source = crit_seq(source)
    target = crit_seq(target)
    if sum(target) > sum(source) or max(target) > max(source):
        return None
    # place large entries first; bowls with equal free space are interchangeable
    order = sorted(range(len(target)), key=lambda i: -target[i])
    free = list(source)
    beta = [0] * len(target)

    def place(k):
        if k == len(order):
            return True
        i = order[k]
        tried = set()
        for j in range(len(free)):
            if free[j] < target[i] or free[j] in tried:
                continue
            tried.add(free[j])
            free[j] -= target[i]
            beta[i] = j
            if place(k + 1):
                return True
            free[j] += target[i]
        return False

    if not place(0):
        return None
    return GleaningWitness(target, tuple(beta))


def _partitions(n: int, largest: int):
    """Partitions of n into parts <= largest, each as a descending tuple."""
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


def _bowl_contents(c: int) -> list[tuple[int, ...]]:
    """Every multiset a single bowl of size c can hold (including nothing)."""
    out = []
    for k in range(c + 1):
        out.extend(_partitions(k, k))
    return out


def _multiset_perms(seq: tuple[int, ...]):
    # distinct permutations in lexicographic order
    items = sorted(seq)
    n = len(items)
    while True:
        yield tuple(items)
        i = n - 2
        while i >= 0 and items[i] >= items[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while items[j] <= items[i]:
            j -= 1
        items[i], items[j] = items[j], items[i]
        items[i + 1:] = reversed(items[i + 1:])


def _factorial(n):
    out = 1
    for k in range(2, n + 1):
        out *= k
    return out


def _n_perms(seq):
    out = _factorial(len(seq))
    for v in set(seq):
        out //= _factorial(seq.count(v))
    return out


def enumerate_gleanings(source: Sequence[int], up_to_permutation: bool = False,
                        cap: int = DEFAULT_CAP) -> list[tuple[int, ...]]:
    """All gleanings of ``source``, sorted by (canonical form, sequence).

    Feasibility only depends on the multiset of entries, so the multisets are
    built bowl by bowl and then expanded into orderings when requested.
    """
    source = crit_seq(source)
    classes = {()}
    for c in source:
        contents = _bowl_contents(c)
        classes = {canonical(a + b) for a in classes for b in contents}
        if len(classes) > cap:
            raise CapExceeded(f"more than {cap} gleanings of {source}")
    classes.discard(())
    if up_to_permutation:
        return sorted(classes)
    total = sum(_n_perms(s) for s in classes)
    if total > cap:
        raise CapExceeded(f"{total} ordered gleanings of {source} exceed cap {cap}")
    out = [p for s in classes for p in _multiset_perms(s)]
    out.sort(key=_order_key)
    return out


def is_descendant(ancestor: CompositionType, candidate: CompositionType) -> GleaningWitness | None:
    return is_gleaning(ancestor.crit, candidate.crit)


def enumerate_descendants(ancestor: CompositionType, up_to_permutation: bool = False,
                          cap: int = DEFAULT_CAP) -> list[CompositionType]:
    seqs = enumerate_gleanings(ancestor.crit, up_to_permutation, cap)
    return [CompositionType.from_crit(s) for s in seqs]


def is_disjoint_collection(source: Sequence[int], members: Sequence[GleaningWitness]) -> bool:
    """True iff all members fit into the bowls of ``source`` simultaneously."""
    source = crit_seq(source)
    loads = [0] * len(source)
    for w in members:
        if not w.is_valid_for(source):
            return False
        for j, l in enumerate(w.loads(len(source))):
            loads[j] += l
    return all(l <= c for l, c in zip(loads, source))


def elementary_moves(seq: Sequence[int]) -> list[tuple[int, ...]]:
    """Canonical sequences reachable by deleting one 1 or breaking one entry in two."""
    seq = canonical(seq)
    out = set()
    if 1 in seq and len(seq) > 1:
        rest = list(seq)
        rest.remove(1)
        out.add(canonical(rest))
    for i, v in enumerate(seq):
        for a in range(1, v // 2 + 1):
            out.add(canonical(seq[:i] + (a, v - a) + seq[i + 1:]))
    return sorted(out, key=lambda s: (-sum(s), s))


EXCEPTIONAL = "E"


def descendant_diagram(ancestor: CompositionType, relation: bool = False,
                       exceptional: bool = False, cap: int = 10**4) -> str:
    """DOT text for the descendants of ``ancestor`` up to permutation.

    By default edges are elementary moves.  With ``relation`` every descendant
    relation is drawn (self loops included); ``exceptional`` adds a node E
    reached from each type whose pebbles can be split among two or more axes.
    """
    nodes = enumerate_gleanings(ancestor.crit, True, cap)
    nodes.sort(key=lambda s: (-sum(s), s))
    label = {s: str(CompositionType.from_crit(s)) for s in nodes}
    edges = []
    for s in nodes:
        if relation:
            for t in nodes:
                if is_gleaning(s, t) is not None:
                    edges.append((label[s], label[t]))
        else:
            for t in elementary_moves(s):
                edges.append((label[s], label[t]))
        if exceptional and sum(s) >= 2:
            edges.append((label[s], EXCEPTIONAL))
    names = [label[s] for s in nodes]
    if exceptional:
        names.append(EXCEPTIONAL)
    lines = [f'digraph "descendants of {ancestor}" {{']
    for n in names:
        lines.append(f'  "{n}";')
    for a, b in edges:
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_types(types: Iterable[CompositionType]) -> str:
    return "".join(f"{t}\n" for t in types)


def all_types(max_crit_sum: int) -> list[CompositionType]:
    """Every composition type whose critical sequence sums to at most ``max_crit_sum``."""
    out = []

    def compositions(n):
        if n == 0:
            yield ()
            return
        for first in range(1, n + 1):
            for rest in compositions(n - first):
                yield (first,) + rest

    for total in range(1, max_crit_sum + 1):
        out.extend(CompositionType.from_crit(c) for c in compositions(total))
    return out


__all__ = [
    "CapExceeded", "CompositionType", "GleaningWitness", "canonical", "crit_seq",
    "is_gleaning", "enumerate_gleanings", "is_descendant", "enumerate_descendants",
    "is_disjoint_collection", "elementary_moves", "descendant_diagram",
    "format_types", "all_types",
]
