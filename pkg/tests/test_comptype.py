import itertools
import random

import pytest

from parabren.comptype import (CapExceeded, CompositionType, GleaningWitness, all_types,
                               canonical, crit_seq, descendant_diagram, elementary_moves,
                               enumerate_descendants, enumerate_gleanings, is_descendant,
                               is_disjoint_collection, is_gleaning)


def T(text):
    return CompositionType.parse(text)


def names(types):
    return [str(t) for t in types]


def test_notation_round_trip():
    t = T("2 o 3 o 4")
    assert t.degrees == (4, 3, 2)
    assert t.crit == (3, 2, 1)
    assert str(t) == "2 o 3 o 4"
    assert CompositionType.from_crit((3, 2, 1)) == t


def test_invalid_inputs():
    with pytest.raises(ValueError):
        CompositionType((1,))
    with pytest.raises(ValueError):
        crit_seq(())
    with pytest.raises(ValueError):
        crit_seq((0, 2))


def test_gleaning_examples():
    w = is_gleaning((10, 7), (1, 3, 4, 8))
    assert w is not None and w.is_valid_for((10, 7))
    # the 8 must come from the bowl holding 10
    assert w.beta[3] == 0
    assert is_gleaning((10, 7), (4, 8, 4)) is None
    assert is_gleaning((10, 7), (1,) * 17) is not None
    assert is_gleaning((10, 7), (1,) * 18) is None
    w = is_gleaning((5,), (5,))
    assert w.beta == (0,)


def test_gleanings_of_three_pebbles():
    assert enumerate_gleanings((3,), True) == [(1,), (1, 1), (1, 1, 1), (2,), (2, 1), (3,)]
    ordered = enumerate_gleanings((3,))
    assert len(ordered) == 7
    assert set(ordered) == {(3,), (2,), (1,), (1, 2), (2, 1), (1, 1), (1, 1, 1)}
    assert enumerate_gleanings((1,)) == [(1,)]


def _oracle(source):
    total = sum(source)
    out = set()
    for n in range(1, total + 1):
        for target in itertools.product(range(1, total + 1), repeat=n):
            if sum(target) > total:
                continue
            for beta in itertools.product(range(len(source)), repeat=n):
                load = [0] * len(source)
                for t, b in zip(target, beta):
                    load[b] += t
                if all(l <= c for l, c in zip(load, source)):
                    out.add(target)
                    break
    return out


@pytest.mark.parametrize("source", [(2, 2), (1, 2), (3, 1), (1, 1, 1), (4,)])
def test_against_full_assignment_oracle(source):
    assert set(enumerate_gleanings(source)) == _oracle(source)


def test_two_two_count_frozen():
    # computed by the full assignment oracle above
    assert len(enumerate_gleanings((2, 2))) == 11


def test_descendant_examples():
    assert is_descendant(T("3"), T("2 o 2")) is not None
    assert is_descendant(T("2"), T("2")) is not None
    assert is_descendant(T("2"), T("2 o 2")) is None
    assert set(names(enumerate_descendants(T("3")))) == {"3", "2 o 2", "2"}
    assert names(enumerate_descendants(T("2"))) == ["2"]
    assert set(names(enumerate_descendants(T("2 o 2")))) == {"2 o 2", "2"}


def test_descendants_of_four_table():
    assert set(names(enumerate_descendants(T("4")))) == {
        "4", "3", "2", "3 o 2", "2 o 3", "2 o 2", "2 o 2 o 2"}
    assert len(enumerate_descendants(T("4"), True)) == 6


def test_descendants_of_five_diagram():
    got = set(names(enumerate_descendants(T("5"), True)))
    want = {"5", "3 o 3", "2 o 4", "4", "2 o 2 o 3", "2 o 3", "3", "2 o 2 o 2 o 2",
            "2 o 2 o 2", "2 o 2", "2"}
    assert {str(T(w).canonical()) for w in want} == got


def test_reflexive_and_permutation_invariant():
    for t in all_types(5):
        assert is_descendant(t, t) is not None
        for perm in set(itertools.permutations(t.degrees)):
            p = CompositionType(perm)
            assert names(enumerate_descendants(p, True)) == names(enumerate_descendants(t, True))


def test_transitive_small_degrees():
    types = [t for t in all_types(4) if sum(t.degrees) <= 6]
    for a, b, c in itertools.product(types, repeat=3):
        if is_descendant(a, b) and is_descendant(b, c):
            assert is_descendant(a, c) is not None


def test_transitive_random_sample():
    rng = random.Random(0)
    types = all_types(6)
    for _ in range(300):
        a = rng.choice(types)
        kids = enumerate_descendants(a)
        b = rng.choice(kids)
        c = rng.choice(enumerate_descendants(b))
        assert is_descendant(a, c) is not None


def test_monotone_entry_sum():
    for t in all_types(5):
        for s in enumerate_gleanings(t.crit):
            assert sum(s) <= sum(t.crit)


def test_disjoint_collections():
    two = GleaningWitness((2,), (0,))
    one = GleaningWitness((1,), (0,))
    assert is_disjoint_collection((3,), [two, one])
    assert not is_disjoint_collection((3,), [two, two])
    assert is_disjoint_collection((3,), [])


def test_cap_is_an_error():
    with pytest.raises(CapExceeded):
        enumerate_gleanings((6, 6), cap=10)
    with pytest.raises(CapExceeded):
        enumerate_gleanings((4,), up_to_permutation=True, cap=2)


def test_canonical_and_moves():
    assert canonical((1, 3, 2)) == (3, 2, 1)
    assert elementary_moves((3, 1)) == [(2, 1, 1), (3,)]


def _edges(dot):
    out = set()
    for line in dot.splitlines():
        if "->" in line:
            a, b = line.strip().rstrip(";").split(" -> ")
            out.add((a.strip('"'), b.strip('"')))
    return out


def _nodes(dot):
    return [l.strip().rstrip(";").strip('"') for l in dot.splitlines()
            if l.startswith("  ") and "->" not in l]


def test_diagram_of_five_matches_lattice():
    dot = descendant_diagram(T("5"))
    assert len(_nodes(dot)) == 11
    want = {("5", "3 o 3"), ("5", "2 o 4"), ("3 o 3", "2 o 2 o 3"), ("2 o 4", "2 o 2 o 3"),
            ("2 o 4", "4"), ("4", "2 o 3"), ("2 o 2 o 3", "2 o 2 o 2 o 2"),
            ("2 o 2 o 3", "2 o 3"), ("2 o 3", "2 o 2 o 2"), ("2 o 3", "3"), ("3", "2 o 2"),
            ("2 o 2 o 2 o 2", "2 o 2 o 2"), ("2 o 2 o 2", "2 o 2"), ("2 o 2", "2")}
    assert _edges(dot) == want
    assert dot == descendant_diagram(T("5"))


def test_diagram_of_three_with_exceptional_node():
    dot = descendant_diagram(T("3"), exceptional=True)
    assert set(_nodes(dot)) == {"3", "2 o 2", "2", "E"}
    assert ("3", "E") in _edges(dot) and ("2", "E") not in _edges(dot)
    assert _nodes(descendant_diagram(T("2"))) == ["2"]
    rel = descendant_diagram(T("2"), relation=True)
    assert _edges(rel) == {("2", "2")}
