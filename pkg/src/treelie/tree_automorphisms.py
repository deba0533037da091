"""Finite-state automorphisms of the rooted p-ary tree.

Vertices of the tree are finite words over the alphabet {0, .., p-1}; an
automorphism is given by a Mealy-type automaton whose states carry a root
permutation (a power of the cycle (0 1 .. p-1)) together with one successor
state per letter.  Automorphisms act on the left: ``(g*h)(w) == g(h(w))``.

All states of all elements created through one :class:`TreeAutomorphismGroup`
live in a single shared arena, so composition and inversion memoise on state
ids and words in the generators stay cheap to manipulate.  Equality is
semantic (product automaton + trivial-root-power check on the reachable part),
never by truncation.
"""

from __future__ import annotations

import json
from typing import Iterable, Sequence

__all__ = [
    "TreeAutomorphism",
    "TreeAutomorphismGroup",
    "act",
    "canonicalize",
    "commutator",
    "conjugate",
    "embed_at_vertex",
    "equals",
    "grigorchuk_group",
    "growth",
    "overgroup",
    "parse_automaton",
    "perm_at_level",
    "section",
    "wreath_decompose",
]


class TreeAutomorphismGroup:
    """Arena of automaton states over a fixed alphabet size ``p``.

    State ``0`` is the identity.  New states are created by
    :meth:`define_states` (mutually recursive definitions allowed), by
    composition/inversion, or by vertex embeddings.  The arena only ever
    grows; deduplication beyond memoisation is left to
    :func:`canonicalize`, which works on the reachable part of one element.
    """

    def __init__(self, p: int = 2):
        if p < 2:
            raise ValueError("alphabet size must be at least 2")
        self.p = p
        self._powers: list[int] = [0]
        self._children: list[tuple[int, ...] | None] = [(0,) * p]
        self._mul_memo: dict[tuple[int, int], int] = {}
        self._inv_memo: dict[int, int] = {0: 0}
        self._identity_memo: dict[int, bool] = {0: True}
        self._perm_memo: dict[tuple[int, int], tuple[int, ...]] = {}

    # -- state construction -------------------------------------------------

    def _alloc(self, power: int, children: tuple[int, ...] | None) -> int:
        self._powers.append(power % self.p)
        self._children.append(children)
        return len(self._powers) - 1

    def define_states(self, spec: dict[str, tuple[int, Sequence[str]]]) -> dict[str, "TreeAutomorphism"]:
        """Create named, possibly mutually recursive states.

        ``spec`` maps a name to ``(root_power, children_names)``.  The name
        ``"1"`` always denotes the identity and need not be defined.  Returns
        the named elements as :class:`TreeAutomorphism` objects.
        """
        ids = {"1": 0}
        for name in spec:
            if name == "1":
                raise ValueError('"1" is reserved for the identity')
            ids[name] = self._alloc(spec[name][0], None)
        for name, (_, kids) in spec.items():
            try:
                self._children[ids[name]] = tuple(ids[k] for k in kids)
            except KeyError as bad:
                raise ValueError(f"undefined state name {bad} in definition of {name!r}")
            if len(spec[name][1]) != self.p:
                raise ValueError(f"state {name!r} needs {self.p} children")
        return {name: TreeAutomorphism(self, sid) for name, sid in ids.items() if name != "1"}

    @property
    def identity(self) -> "TreeAutomorphism":
        return TreeAutomorphism(self, 0)

    # -- core operations on state ids ---------------------------------------

    def _pair_id(self, a: int, b: int, work: list) -> int:
        memo = self._mul_memo
        pid = memo.get((a, b))
        if pid is None:
            pid = self._alloc(self._powers[a] + self._powers[b], None)
            memo[(a, b)] = pid
            work.append((pid, a, b))
        return pid

    def _compose_ids(self, a: int, b: int) -> int:
        """State id of the composition ``a after b`` (left action)."""
        if a == 0:
            return b
        if b == 0:
            return a
        work: list = []
        root = self._pair_id(a, b, work)
        p = self.p
        while work:
            pid, x, y = work.pop()
            if self._children[pid] is not None:
                continue
            shift = self._powers[y]
            xk, yk = self._children[x], self._children[y]
            # (g h)|_i = g|_{h_root(i)} h|_i, and h_root(i) = i + power(h)
            self._children[pid] = tuple(
                self._pair_id(xk[(i + shift) % p], yk[i], work) for i in range(p)
            )
        return root

    def _inv_pair(self, a: int, work: list) -> int:
        memo = self._inv_memo
        iid = memo.get(a)
        if iid is None:
            iid = self._alloc(-self._powers[a], None)
            memo[a] = iid
            work.append((iid, a))
        return iid

    def _inverse_id(self, a: int) -> int:
        work: list = []
        root = self._inv_pair(a, work)
        p = self.p
        while work:
            iid, x = work.pop()
            if self._children[iid] is not None:
                continue
            shift = self._powers[x]
            xk = self._children[x]
            # (g^-1)|_i = (g|_{g_root^-1(i)})^-1
            self._children[iid] = tuple(
                self._inv_pair(xk[(i - shift) % p], work) for i in range(p)
            )
        return root

    def _is_identity_id(self, a: int) -> bool:
        memo = self._identity_memo
        known = memo.get(a)
        if known is not None:
            return known
        seen = {a}
        stack = [a]
        result = True
        while stack:
            s = stack.pop()
            if self._powers[s] != 0:
                result = False
                break
            for c in self._children[s]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        if result:
            for s in seen:
                memo[s] = True
        else:
            memo[a] = False
        return result

    def _perm_ids(self, sid: int, level: int) -> tuple[int, ...]:
        if level == 0:
            return (0,)
        key = (sid, level)
        cached = self._perm_memo.get(key)
        if cached is not None:
            return cached
        p = self.p
        h = p ** (level - 1)
        power = self._powers[sid]
        kids = self._children[sid]
        out = [0] * (p * h)
        for c in range(p):
            sub = self._perm_ids(kids[c], level - 1)
            base = ((c + power) % p) * h
            off = c * h
            for j in range(h):
                out[off + j] = base + sub[j]
        result = tuple(out)
        self._perm_memo[key] = result
        return result


class TreeAutomorphism:
    """One automorphism: a pointer into a shared state arena."""

    __slots__ = ("group", "state")

    def __init__(self, group: TreeAutomorphismGroup, state: int):
        self.group = group
        self.state = state

    def __mul__(self, other: "TreeAutomorphism") -> "TreeAutomorphism":
        if self.group is not other.group:
            raise ValueError("cannot compose automorphisms from different arenas")
        return TreeAutomorphism(self.group, self.group._compose_ids(self.state, other.state))

    def inverse(self) -> "TreeAutomorphism":
        return TreeAutomorphism(self.group, self.group._inverse_id(self.state))

    def __pow__(self, n: int) -> "TreeAutomorphism":
        if n < 0:
            return self.inverse() ** (-n)
        out = self.group.identity
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def is_identity(self) -> bool:
        return self.group._is_identity_id(self.state)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TreeAutomorphism):
            return NotImplemented
        return equals(self, other)

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq

    def __hash__(self) -> int:
        # any fixed-level action is constant on semantic equality classes
        return hash(self.group._perm_ids(self.state, 4))

    def __repr__(self) -> str:
        return f"<TreeAutomorphism state={self.state} p={self.group.p}>"


# -- public operations -------------------------------------------------------


def equals(g: TreeAutomorphism, h: TreeAutomorphism) -> bool:
    """Exact semantic equality via the product automaton (no truncation)."""
    if g.group is not h.group:
        raise ValueError("cannot compare automorphisms from different arenas")
    return g.group._is_identity_id(g.group._compose_ids(g.state, g.group._inverse_id(h.state)))


def commutator(g: TreeAutomorphism, h: TreeAutomorphism) -> TreeAutomorphism:
    """``g h g^-1 h^-1``."""
    return g * h * g.inverse() * h.inverse()


def conjugate(g: TreeAutomorphism, by: TreeAutomorphism) -> TreeAutomorphism:
    """``by * g * by^-1``."""
    return by * g * by.inverse()


def _letters(word: str | Iterable[int]) -> list[int]:
    if isinstance(word, str):
        return [int(ch) for ch in word.replace(" ", "")]
    return [int(c) for c in word]


def act(g: TreeAutomorphism, word: str | Iterable[int]) -> str:
    """Image of a vertex (a word over the alphabet) under ``g``."""
    grp = g.group
    s = g.state
    out = []
    for c in _letters(word):
        if not 0 <= c < grp.p:
            raise ValueError(f"letter {c} outside alphabet of size {grp.p}")
        out.append(str((c + grp._powers[s]) % grp.p))
        s = grp._children[s][c]
    return "".join(out)


def perm_at_level(g: TreeAutomorphism, level: int) -> tuple[int, ...]:
    """Permutation induced on the ``p**level`` level vertices.

    Vertices are indexed big-endian: the first letter of the vertex word is
    the most significant digit.
    """
    return g.group._perm_ids(g.state, level)


def section(g: TreeAutomorphism, vertex: str | Iterable[int]) -> TreeAutomorphism:
    """The restriction ``g|_v``: what ``g`` does inside the subtree at ``v``."""
    s = g.state
    for c in _letters(vertex):
        s = g.group._children[s][c]
    return TreeAutomorphism(g.group, s)


def wreath_decompose(g: TreeAutomorphism) -> tuple[int, tuple[TreeAutomorphism, ...]]:
    """Root power and the tuple of first-level sections of ``g``."""
    grp = g.group
    return grp._powers[g.state], tuple(
        TreeAutomorphism(grp, c) for c in grp._children[g.state]
    )


def embed_at_vertex(g: TreeAutomorphism, vertex: str | Iterable[int]) -> TreeAutomorphism:
    """Automorphism acting as ``g`` on the subtree at ``vertex``, trivially elsewhere."""
    grp = g.group
    sid = g.state
    for c in reversed(_letters(vertex)):
        kids = [0] * grp.p
        kids[c] = sid
        sid = grp._alloc(0, tuple(kids))
    return TreeAutomorphism(grp, sid)


def canonicalize(g: TreeAutomorphism) -> dict:
    """Canonical serialisable form of the reachable part of ``g``.

    Prunes to reachable states, repeatedly merges states that are literally
    identical (same root power, childwise-same representative), then
    renumbers breadth-first from the initial state.  This is a deterministic
    normal form of the *presentation*, not semantic minimisation; use
    :func:`equals` for semantic questions.
    """
    grp = g.group
    order = [g.state]
    seen = {g.state}
    i = 0
    while i < len(order):
        for c in grp._children[order[i]]:
            if c not in seen:
                seen.add(c)
                order.append(c)
        i += 1

    rep = {s: s for s in order}
    while True:
        buckets: dict[tuple, int] = {}
        new_rep = {}
        changed = False
        for s in order:
            key = (grp._powers[s],) + tuple(rep[c] for c in grp._children[s])
            r = buckets.setdefault(key, rep[s])
            new_rep[s] = r
            if r != rep[s]:
                changed = True
        rep = new_rep
        if not changed:
            break

    number: dict[int, int] = {}
    queue = [rep[g.state]]
    number[rep[g.state]] = 0
    qi = 0
    while qi < len(queue):
        s = queue[qi]
        qi += 1
        for c in grp._children[s]:
            rc = rep[c]
            if rc not in number:
                number[rc] = len(number)
                queue.append(rc)
    states = {}
    for s in queue:
        states[f"s{number[s]}"] = {
            "perm": grp._powers[s],
            "children": [f"s{number[rep[c]]}" for c in grp._children[s]],
        }
    return {"p": grp.p, "initial": "s0", "states": states}


def parse_automaton(source: str | dict) -> tuple[TreeAutomorphismGroup, dict[str, TreeAutomorphism], str]:
    """Load an automaton description.

    Accepts a JSON string, a path-free JSON dict, or one of the built-in
    names ``"grigorchuk"`` / ``"overgroup"``.  The format is
    ``{"p": 2, "initial": "b", "states": {"b": {"perm": 0, "children":
    ["a", "c"]}, ...}}``; the name ``"1"`` may be used for the identity
    without defining it.  Returns ``(group, named_elements, initial_name)``.
    """
    if isinstance(source, str):
        if source == "grigorchuk":
            grp, els = grigorchuk_group()
            return grp, els, "a"
        if source == "overgroup":
            grp, els = overgroup()
            return grp, els, "a"
        data = json.loads(source)
    else:
        data = source
    if not isinstance(data, dict) or "states" not in data:
        raise ValueError("automaton description needs a 'states' table")
    p = int(data.get("p", 2))
    grp = TreeAutomorphismGroup(p)
    spec = {}
    for name, st in data["states"].items():
        spec[str(name)] = (int(st["perm"]), [str(c) for c in st["children"]])
    els = grp.define_states(spec)
    initial = str(data.get("initial", next(iter(spec))))
    if initial not in els and initial != "1":
        raise ValueError(f"initial state {initial!r} is not defined")
    return grp, els, initial


def growth(
    generators: Sequence[TreeAutomorphism],
    radius: int,
    level: int | None = None,
) -> list[int]:
    """Ball sizes ``[|B(0)|, .., |B(radius)|]`` in the word metric.

    With ``level`` given, elements are identified through their action on
    that level (growth of the finite level quotient); otherwise equality is
    exact.  Deduplication buckets elements by a level-6 action fingerprint
    and confirms with :func:`equals` inside a bucket, so the exact mode never
    relies on truncation alone.
    """
    if not generators:
        return [1] * (radius + 1)
    grp = generators[0].group
    fp_level = level if level is not None else 6

    def fingerprint(el: TreeAutomorphism) -> tuple[int, ...]:
        return grp._perm_ids(el.state, fp_level)

    def known(el, buckets) -> bool:
        fp = fingerprint(el)
        bucket = buckets.get(fp)
        if bucket is None:
            buckets[fp] = [el]
            return False
        if level is not None:
            return True
        for other in bucket:
            if equals(el, other):
                return True
        bucket.append(el)
        return False

    buckets: dict[tuple[int, ...], list[TreeAutomorphism]] = {}
    frontier = [grp.identity]
    known(grp.identity, buckets)
    sizes = [1]
    gens = list(generators) + [s.inverse() for s in generators]
    for _ in range(radius):
        new_frontier = []
        for el in frontier:
            for s in gens:
                cand = s * el
                if not known(cand, buckets):
                    new_frontier.append(cand)
        sizes.append(sizes[-1] + len(new_frontier))
        frontier = new_frontier
    return sizes


# -- built-in groups ---------------------------------------------------------


def grigorchuk_group() -> tuple[TreeAutomorphismGroup, dict[str, TreeAutomorphism]]:
    """The first Grigorchuk group: a = swap, b = (a, c), c = (a, d), d = (1, b)."""
    grp = TreeAutomorphismGroup(2)
    els = grp.define_states(
        {
            "a": (1, ("1", "1")),
            "b": (0, ("a", "c")),
            "c": (0, ("a", "d")),
            "d": (0, ("1", "b")),
        }
    )
    return grp, els


def overgroup() -> tuple[TreeAutomorphismGroup, dict[str, TreeAutomorphism]]:
    """The overgroup of the Grigorchuk group: b = (a, c), c = (1, d), d = (1, b)."""
    grp = TreeAutomorphismGroup(2)
    els = grp.define_states(
        {
            "a": (1, ("1", "1")),
            "b": (0, ("a", "c")),
            "c": (0, ("1", "d")),
            "d": (0, ("1", "b")),
        }
    )
    return grp, els
