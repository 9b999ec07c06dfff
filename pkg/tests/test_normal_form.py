from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixture_graphs import NAMES, build
from graphrd.graph import PresentationGraph
from graphrd.normal_form import (NormalFormError, format_element, identity, invert, is_left_divisor,
                                 is_reduced, legal_moves, multiply, parse_element, parse_expression,
                                 random_expression, random_moves, reduce)
from graphrd.vertex_group import VertexGroup
from oracles import brute_normal_form, free_z2_reduce, move_closure


def test_cancelling_pair_is_identity(path_z):
    g = reduce(path_z.graph, [(1, 4), (1, -4)])
    assert g.is_identity() and g.lam == 0 and g.ell == 0


def test_commuting_swap_sorts_vertices(edge):
    assert reduce(edge.graph, [(1, 1), (0, 1)]).syllables == ((0, 1), (1, 1))


def test_dihedral_word_reduces_to_single_letter(dihedral):
    g = dihedral.graph
    expr = [(0, 1), (1, 1), (1, 1), (0, 1), (0, 1)]
    assert reduce(g, expr).syllables == ((0, 1),)
    assert brute_normal_form(g, expr) == ((0, 1),)


def test_merge_in_integer_vertex(path_z):
    g = reduce(path_z.graph, [(0, 2), (0, 3)])
    assert g.syllables == ((0, 5),) and g.lam == 1 and g.ell == 5


def test_product_with_inverse(dihedral):
    g = dihedral.graph
    uv = reduce(g, [(0, 1), (1, 1)])
    vu = reduce(g, [(1, 1), (0, 1)])
    assert multiply(uv, vu).is_identity()
    for h in (uv, vu, identity(g)):
        assert multiply(h, invert(h)).is_identity()
        assert multiply(h, identity(g)) == h


def test_inverse_and_lengths(path_z):
    g = path_z.graph
    assert invert(identity(g)).is_identity()
    assert invert(reduce(g, [(0, 3)])).syllables == ((0, -3),)
    five = reduce(g, [(2, 5)])
    assert (five.lam, five.ell) == (1, 5)


def test_left_divisor_examples(dihedral):
    g = dihedral.graph
    uvu = reduce(g, [(0, 1), (1, 1), (0, 1)])
    assert is_left_divisor(reduce(g, [(0, 1), (1, 1)]), uvu)
    assert not is_left_divisor(reduce(g, [(1, 1), (0, 1)]), uvu)
    assert is_left_divisor(identity(g), uvu)
    assert is_left_divisor(uvu, uvu)


@pytest.mark.parametrize("name", NAMES)
def test_matches_move_closure_oracle(name):
    fx = build(name)
    rng = random.Random(name)
    for _ in range(60):
        expr = random_expression(fx.graph, rng.randint(0, 7), rng, value_cap=2)
        assert reduce(fx.graph, expr).syllables == brute_normal_form(fx.graph, expr)


def test_matches_free_cancellation_on_dihedral(dihedral):
    rng = random.Random(1)
    for _ in range(500):
        word = [rng.randrange(2) for _ in range(rng.randint(0, 20))]
        got = reduce(dihedral.graph, [(v, 1) for v in word])
        assert tuple(v for v, _ in got.syllables) == free_z2_reduce(word)


@pytest.mark.parametrize("name", NAMES)
def test_canonical_form_is_reduced(name):
    fx = build(name)
    rng = random.Random(7)
    for _ in range(200):
        g = reduce(fx.graph, random_expression(fx.graph, rng.randint(0, 12), rng))
        assert is_reduced(fx.graph, g.syllables)
        assert reduce(fx.graph, g.syllables) == g
        assert g.lam == len(g.syllables)
        assert g.ell == sum(fx.graph.groups[v].length(y) for v, y in g.syllables)


def test_every_reduced_shuffle_has_the_same_form(path_z2):
    g = path_z2.graph
    expr = [(0, 1), (2, 1), (1, 1), (0, 1), (2, 1)]
    target = reduce(g, expr)
    for e in move_closure(g, expr):
        assert reduce(g, e) == target


def test_is_reduced():
    g = PresentationGraph([VertexGroup.integers()] * 3, [(0, 1), (1, 2)])
    assert is_reduced(g, [(0, 1), (2, 1), (0, 1)])
    assert not is_reduced(g, [(0, 1), (1, 1), (0, 1)])
    assert not is_reduced(g, [(1, 1), (1, 1)])


def test_random_moves_preserve_the_element(path_z):
    rng = random.Random(5)
    for _ in range(200):
        expr = random_expression(path_z.graph, 10, rng)
        assert reduce(path_z.graph, random_moves(path_z.graph, expr, 15, rng)) == \
            reduce(path_z.graph, expr)


def test_legal_moves_enumerates_three_kinds(edge):
    moves = legal_moves(edge.graph, [(0, 1), (0, 1), (1, 1)])
    assert [(1, 1)] in moves                   # deletion
    assert [(0, 1), (1, 1), (0, 1)] in moves   # swap of adjacent vertices


def test_mixed_graphs_rejected(dihedral, edge):
    a = reduce(dihedral.graph, [(0, 1)])
    b = reduce(edge.graph, [(0, 1)])
    with pytest.raises(NormalFormError):
        multiply(a, b)
    assert a != b


def test_invalid_syllables_rejected(dihedral, path_z):
    with pytest.raises(NormalFormError):
        reduce(dihedral.graph, [(0, 0)])
    with pytest.raises(ValueError):
        reduce(dihedral.graph, [(0, 2)])
    with pytest.raises(ValueError):
        reduce(dihedral.graph, [(5, 1)])
    with pytest.raises(NormalFormError):
        reduce(path_z.graph, [(0, 0)])


def test_text_syntax_round_trip(path_z):
    g = parse_element(path_z.graph, "v2:-3 v0:1  v1:4")
    # v1 commutes with both of its neighbours, so it moves to the front
    assert format_element(g) == "v1:4 v2:-3 v0:1"
    assert parse_element(path_z.graph, format_element(g)) == g
    assert parse_element(path_z.graph, "").is_identity()
    assert str(g) == format_element(g)


def test_text_syntax_errors_carry_columns(dihedral):
    with pytest.raises(NormalFormError, match="column 6"):
        parse_expression(dihedral.graph, "v0:1 x")
    with pytest.raises(NormalFormError, match="column 1"):
        parse_expression(dihedral.graph, "v9:1")
    with pytest.raises(NormalFormError, match="column 11"):
        parse_expression(dihedral.graph, "v0:1 v0:1 v1:0")


# -- algebraic properties --------------------------------------------------------

_GRAPHS = {name: build(name).graph for name in NAMES}


@st.composite
def element(draw, name):
    graph = _GRAPHS[name]
    n = draw(st.integers(0, 8))
    out = []
    for _ in range(n):
        v = draw(st.integers(0, graph.n_vertices - 1))
        grp = graph.groups[v]
        if grp.is_finite:
            y = draw(st.integers(1, grp.order - 1))
        else:
            y = draw(st.integers(-5, 5).filter(bool))
        out.append((v, y))
    return reduce(graph, out)


@pytest.mark.parametrize("name", NAMES)
def test_group_axioms(name):
    @settings(max_examples=150, deadline=None)
    @given(element(name), element(name), element(name))
    def check(a, b, c):
        assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))
        assert multiply(a, invert(a)).is_identity()
        assert invert(invert(a)) == a
        assert invert(multiply(a, b)) == multiply(invert(b), invert(a))
        ab = multiply(a, b)
        assert ab.lam <= a.lam + b.lam
        assert ab.ell <= a.ell + b.ell
        assert invert(a).lam == a.lam and invert(a).ell == a.ell

    check()


@pytest.mark.parametrize("name", NAMES)
def test_reduction_is_a_congruence(name):
    graph = _GRAPHS[name]
    rng = random.Random(11)
    for _ in range(300):
        e1 = random_expression(graph, rng.randint(0, 6), rng)
        e2 = random_expression(graph, rng.randint(0, 6), rng)
        assert reduce(graph, e1 + e2) == multiply(reduce(graph, e1), reduce(graph, e2))
