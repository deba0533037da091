import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treelie.tree_automorphisms import (
    act,
    canonicalize,
    commutator,
    conjugate,
    embed_at_vertex,
    equals,
    grigorchuk_group,
    growth,
    overgroup,
    parse_automaton,
    perm_at_level,
    section,
    wreath_decompose,
)

from helpers_identities import base_group_suite, overgroup_suite


@pytest.fixture(scope="module")
def base():
    return grigorchuk_group()


@pytest.fixture(scope="module")
def over():
    return overgroup()


def _word(E, s):
    g = None
    for ch in s:
        g = E[ch] if g is None else g * E[ch]
    return g


def test_generator_orders(base):
    grp, E = base
    for name in "abcd":
        g = E[name]
        assert not g.is_identity()
        assert (g * g).is_identity()


def test_klein_relations(base):
    _, E = base
    b, c, d = E["b"], E["c"], E["d"]
    assert equals(b * c, d)
    assert equals(c * d, b)
    assert equals(d * b, c)


def test_act_frozen_values(base):
    _, E = base
    assert act(E["b"], "10") == "10"
    assert act(E["b"], "100") == "101"
    assert act(E["a"], "01") == "11"
    x = commutator(E["a"], E["b"])
    assert act(x, "00") == "01"


def test_act_strips_spaces(base):
    _, E = base
    assert act(E["b"], "1 0 0") == "101"


def test_perm_at_level_big_endian(base):
    _, E = base
    assert perm_at_level(E["a"], 2) == (2, 3, 0, 1)
    assert perm_at_level(E["b"], 3) == (2, 3, 0, 1, 5, 4, 6, 7)


def test_wreath_decompose_basics(base):
    grp, E = base
    a, b, c, d = (E[k] for k in "abcd")
    pw, (s0, s1) = wreath_decompose(a)
    assert pw == 1 and s0.is_identity() and s1.is_identity()
    pw, (s0, s1) = wreath_decompose(d)
    assert pw == 0 and s0.is_identity() and equals(s1, b)
    x = commutator(a, b)
    pw, (s0, s1) = wreath_decompose(x)
    assert pw == 0
    assert equals(s0, c * a)
    assert equals(s1, a * c)


def test_wreath_decompose_fourth_power(base):
    """x^4 decomposes with the *same* section in both slots."""
    grp, E = base
    x = commutator(E["a"], E["b"])
    x2 = x * x
    pw, (s0, s1) = wreath_decompose(x2 * x2)
    assert pw == 0
    assert equals(s0, s1)
    one = grp.identity
    xi = x.inverse()
    U = embed_at_vertex(xi, "1") * x
    V = embed_at_vertex(xi, "0") * xi
    uv_x2 = embed_at_vertex(U, "0") * embed_at_vertex(V, "1") * x2
    assert equals(s0, uv_x2)
    assert not equals(uv_x2, embed_at_vertex(V, "0") * embed_at_vertex(U, "1") * x2)


def test_section_cycle_down_right_spine(base, over):
    for grp, E in (base, over):
        assert equals(section(E["b"], "1"), E["c"])
        assert equals(section(E["c"], "1"), E["d"])
        assert equals(section(E["d"], "1"), E["b"])


def test_embed_section_roundtrip(base):
    _, E = base
    g = E["b"] * E["a"] * E["d"]
    for v in ("0", "10", "011"):
        h = embed_at_vertex(g, v)
        assert equals(section(h, v), g)
        assert wreath_decompose(h)[0] == 0
        # trivial on the sibling subtree
        sib = v[:-1] + ("1" if v[-1] == "0" else "0")
        assert section(h, sib).is_identity()


def test_identity_suite_base_group(base):
    for name, lhs, rhs, holds in base_group_suite()[2]:
        assert equals(lhs, rhs) == holds, name


def test_identity_suite_overgroup(over):
    for name, lhs, rhs, holds in overgroup_suite()[2]:
        assert equals(lhs, rhs) == holds, name


def test_overgroup_basics(over):
    grp, E = over
    a, b, c, d = (E[k] for k in "abcd")
    x = commutator(a, b)
    y = commutator(a, d)
    assert (y * y).is_identity()
    x2 = x * x
    assert (x2 * x2).is_identity()
    pw, (s0, s1) = wreath_decompose(y)
    assert pw == 0 and equals(s0, b) and equals(s1, b)
    # b,c,d generate an elementary abelian group of order 8
    seen = {perm_at_level(_word(E, w), 6) for w in
            ("b", "c", "d", "bc", "bd", "cd", "bcd")}
    assert len(seen) == 7
    for w in ("bc", "cb", "bd", "db", "cd", "dc"):
        g = _word(E, w)
        assert (g * g).is_identity()


def test_overgroup_infinite_order_element(over):
    _, E = over
    w = E["a"] * E["b"] * E["c"] * E["d"]
    w2 = w * w
    pw, (s0, s1) = wreath_decompose(w2)
    assert pw == 0
    assert equals(s0, conjugate(w, E["a"]))
    assert equals(s1, w)
    p = w
    for _ in range(4):
        p = p * p
    assert not p.is_identity()  # order > 16


def test_growth_frozen(base):
    _, E = base
    gens = [E[k] for k in "abcd"]
    assert growth(gens, 5) == [1, 5, 11, 23, 40, 68]


def test_growth_truncated_agrees_at_faithful_level(base):
    _, E = base
    gens = [E[k] for k in "abcd"]
    assert growth(gens, 4, level=8) == [1, 5, 11, 23, 40]


def test_canonicalize_frozen_form(base):
    _, E = base
    got = canonicalize(E["b"])
    assert got == {
        "p": 2,
        "initial": "s0",
        "states": {
            "s0": {"perm": 0, "children": ["s1", "s2"]},
            "s1": {"perm": 1, "children": ["s3", "s3"]},
            "s2": {"perm": 0, "children": ["s1", "s4"]},
            "s3": {"perm": 0, "children": ["s3", "s3"]},
            "s4": {"perm": 0, "children": ["s3", "s0"]},
        },
    }


def test_parse_automaton_roundtrip(base):
    _, E = base
    g = E["a"] * E["b"]
    src = json.dumps(canonicalize(g))
    grp2, elems, init = parse_automaton(src)
    h = elems[init]
    assert perm_at_level(h, 6) == perm_at_level(g, 6)


def test_parse_automaton_builtins():
    for name in ("grigorchuk", "overgroup"):
        grp, elems, init = parse_automaton(name)
        assert set("abcd") <= set(elems)
        assert init == "a"


def test_parse_automaton_rejects_bad_input():
    with pytest.raises(ValueError):
        parse_automaton(json.dumps({"p": 2, "initial": "s0", "states": {
            "s0": {"perm": 0, "children": ["s0", "missing"]}}}))
    with pytest.raises(ValueError):
        parse_automaton(json.dumps({"p": 2, "initial": "s0", "states": {
            "s0": {"perm": 0, "children": ["s0"]}}}))


_LETTER = st.sampled_from("abcd")
_WORDS = st.text(alphabet=_LETTER, min_size=1, max_size=6)


@settings(max_examples=60, deadline=None)
@given(_WORDS, _WORDS)
def test_compose_matches_permutation_composition(w1, w2):
    _, E = grigorchuk_group()
    g, h = _word(E, w1), _word(E, w2)
    pg = perm_at_level(g, 5)
    ph = perm_at_level(h, 5)
    assert perm_at_level(g * h, 5) == tuple(pg[ph[i]] for i in range(32))


@settings(max_examples=60, deadline=None)
@given(_WORDS)
def test_inverse_and_identity_laws(w):
    grp, E = grigorchuk_group()
    g = _word(E, w)
    assert (g * g.inverse()).is_identity()
    assert equals(g * grp.identity, g)
    assert equals(grp.identity * g, g)


@settings(max_examples=40, deadline=None)
@given(_WORDS, _WORDS)
def test_equals_agrees_with_deep_truncation(w1, w2):
    _, E = grigorchuk_group()
    g, h = _word(E, w1), _word(E, w2)
    # short words in a contracting group: level 10 separates anything
    # equals() can distinguish
    assert equals(g, h) == (perm_at_level(g, 10) == perm_at_level(h, 10))


@settings(max_examples=30, deadline=None)
@given(_WORDS)
def test_power_consistency(w):
    _, E = grigorchuk_group()
    g = _word(E, w)
    assert equals(g ** 3, g * g * g)
    assert equals(g ** -2, (g * g).inverse())
    assert (g ** 0).is_identity()
