"""Vertex permutation modules over F_2 and their graded structure.

The level-n module has one basis monomial per level-n vertex: the vertex
word s_1..s_n corresponds to the square-free monomial X_1^{s_1}..X_n^{s_n},
so a module element is a polynomial supported on vertices.  The standard
elements v(n, r) — expanded products of (1 - X_i) over the digits of r —
span a complete flag of submodules, and the twisted action w -> w - g.w
walks down the flag one step at a time whenever the acting group is rich
enough (checked here by an explicit witness search plus per-step span
comparisons).  On top of that, this module builds the linear bijections
matching sections of the planted normal series onto direct sums of these
modules, and checks the squaring identities that shift one graded piece
into the next.

Everything is char-2 bit arithmetic: an element is an int bitmask whose
bit e is the coefficient of the monomial with exponent mask e (bit i-1 of
e being the exponent of X_i); subspaces are kept in fully reduced echelon
form keyed by their leading monomial, so equality is literal equality of
canonical bases.
"""

from __future__ import annotations

import numpy as np

from .tree_automorphisms import TreeAutomorphism, perm_at_level
from .finite_quotients import (
    GroupContext,
    compose_rows,
    identity_row,
    invert_rows,
    plant_row,
    row_of,
)


class FaithfulnessError(RuntimeError):
    """The finite level is too shallow for the requested section: its image
    has collapsed below the dimension of the module it must match."""


# ---------------------------------------------------------------------------
# bit helpers

def _bit_reverse(v, n):
    out = 0
    for _ in range(n):
        out = (out << 1) | (v & 1)
        v >>= 1
    return out


def _row_at(g, n):
    """Permutation row of ``g`` on the 2**n level-n vertices."""
    if isinstance(g, TreeAutomorphism):
        row = perm_at_level(g, n)
    else:
        row = tuple(int(i) for i in np.asarray(g).ravel())
    if len(row) != 1 << n:
        raise ValueError(
            f"element acts on {len(row)} points, level {n} needs {1 << n}")
    return row


def _mon_perm(row, n):
    """Permutation of monomial indices induced by a vertex permutation."""
    return [_bit_reverse(row[_bit_reverse(e, n)], n) for e in range(1 << n)]


def _apply_mon_perm(perm, bits):
    out = 0
    while bits:
        low = bits & -bits
        out |= 1 << perm[low.bit_length() - 1]
        bits ^= low
    return out


def _reduce_bits(bits, by_pivot):
    while bits:
        p = bits.bit_length() - 1
        if p not in by_pivot:
            break
        bits ^= by_pivot[p]
    return bits


# ---------------------------------------------------------------------------
# elements and subspaces

class VnElement:
    """Polynomial over F_2 in X_1..X_n with all exponents 0 or 1."""

    __slots__ = ("n", "bits")

    def __init__(self, n, bits=0):
        if n < 0 or not 0 <= bits < (1 << (1 << n)):
            raise ValueError("coefficient mask out of range for the level")
        self.n = n
        self.bits = bits

    def coeffs(self):
        return tuple((self.bits >> e) & 1 for e in range(1 << self.n))

    def is_zero(self):
        return self.bits == 0

    def __add__(self, other):
        if self.n != other.n:
            raise ValueError("elements live at different levels")
        return VnElement(self.n, self.bits ^ other.bits)

    __sub__ = __add__  # char 2

    def __eq__(self, other):
        return (isinstance(other, VnElement)
                and (self.n, self.bits) == (other.n, other.bits))

    def __hash__(self):
        return hash((self.n, self.bits))

    def __repr__(self):
        if self.bits == 0:
            return "0"
        terms = []
        for e in range(1 << self.n):
            if (self.bits >> e) & 1:
                name = "*".join(f"X{i + 1}" for i in range(self.n)
                                if (e >> i) & 1)
                terms.append(name or "1")
        return " + ".join(terms)


class VnSubspace:
    """Subspace in fully reduced echelon form (pivot = leading monomial)."""

    __slots__ = ("n", "basis", "_piv")

    def __init__(self, n, vectors=()):
        self.n = n
        piv = {}
        for v in vectors:
            b = v.bits if isinstance(v, VnElement) else int(v)
            b = _reduce_bits(b, piv)
            if b:
                piv[b.bit_length() - 1] = b
        clean = {}
        for p in sorted(piv):
            b = piv[p]
            for q in sorted(clean):
                if (b >> q) & 1:
                    b ^= clean[q]
            clean[p] = b
        self._piv = clean
        self.basis = tuple(clean[p] for p in sorted(clean, reverse=True))

    @property
    def dim(self):
        return len(self.basis)

    def basis_elements(self):
        return tuple(VnElement(self.n, b) for b in self.basis)

    def contains(self, v):
        bits = v.bits if isinstance(v, VnElement) else int(v)
        return _reduce_bits(bits, self._piv) == 0

    def reduce(self, v):
        bits = v.bits if isinstance(v, VnElement) else int(v)
        return VnElement(self.n, _reduce_bits(bits, self._piv))

    def spanned_with(self, vectors):
        return VnSubspace(self.n, self.basis + tuple(vectors))

    def issubspace_of(self, other):
        return all(other.contains(b) for b in self.basis)

    def __eq__(self, other):
        return (isinstance(other, VnSubspace)
                and (self.n, self.basis) == (other.n, other.basis))

    def __hash__(self):
        return hash((self.n, self.basis))

    def __repr__(self):
        return f"VnSubspace(n={self.n}, dim={self.dim})"


# ---------------------------------------------------------------------------
# the standard flag and the twisted action

def v_basis(n, r):
    """Expanded product of (1 - X_i) over the set bits of ``r``.

    Digit i-1 of ``r`` is the exponent of (1 - X_i); over F_2 the expansion
    is the sum of X^e over all submasks e of r, so the leading monomial of
    v_basis(n, r) is exactly r.
    """
    if n < 0 or not 0 <= r < (1 << n):
        raise ValueError(f"r={r} out of range for level {n}")
    bits = 0
    e = r
    while True:
        bits |= 1 << e
        if e == 0:
            break
        e = (e - 1) & r
    return VnElement(n, bits)


def filtration(n, r):
    """Span of the standard elements with index >= r (zero once r >= 2**n).

    Consecutive values of r give a complete flag: each step has
    codimension one in the previous.
    """
    if n < 0 or r < 0:
        raise ValueError("negative arguments")
    return VnSubspace(n, [v_basis(n, s) for s in range(min(r, 1 << n), 1 << n)])


def g_action(g, v):
    """Permute monomials by the vertex action: X^s is sent to X^(g s)."""
    perm = _mon_perm(_row_at(g, v.n), v.n)
    return VnElement(v.n, _apply_mon_perm(perm, v.bits))


def lie_action(g, v):
    """Twisted action v - g.v (over F_2, the sum v + g.v)."""
    return v + g_action(g, v)


def bracket_span(generators, space):
    """Span of the twisted-action images of ``space`` under the whole group.

    Only generator images are formed directly; the span is saturated by
    re-applying the generator maps to every newly added vector, which
    reaches all group elements because (1-gh) = (1-g) + g(1-h) and
    g u = u - (1-g) u keep everything inside the growing span.
    """
    rows = {tuple(_row_at(g, space.n)) for g in generators}
    rows |= {tuple(int(i) for i in invert_rows(np.array(r, np.uint8)[None])[0])
             for r in rows}
    perms = [_mon_perm(r, space.n) for r in rows]
    piv = {}
    frontier = list(space.basis)
    while frontier:
        fresh = []
        for b in frontier:
            for perm in perms:
                img = _reduce_bits(b ^ _apply_mon_perm(perm, b), piv)
                if img:
                    piv[img.bit_length() - 1] = img
                    fresh.append(img)
        frontier = fresh
    return VnSubspace(space.n, list(piv.values()))


def corank_profile(generators, n):
    """dim(flag step / twisted span) for r = 0..2**n - 1.

    All ones exactly when the flag is uniserial under the given action; a
    group acting too coarsely shows coranks above one (the trivial group
    shows the full dimension at r = 0).
    """
    out = []
    for r in range(1 << n):
        space = filtration(n, r)
        out.append(space.dim - bracket_span(generators, space).dim)
    return out


# ---------------------------------------------------------------------------
# uniseriality witnesses and certificate

def _named_elems(generators):
    if isinstance(generators, dict):
        return list(generators.items())
    out = []
    for i, g in enumerate(generators):
        if isinstance(g, tuple):
            out.append(g)
        else:
            out.append((f"g{i}", g))
    return out


def dec1_witness(generators, m, radius=4):
    """Search for an element sending vertex 0^m to 0^(m-1)1 while keeping
    the last letter of every other level-m vertex fixed.

    Such witnesses (one per level) are exactly what makes the twisted
    action step down the whole flag.  The search is bounded: the
    generators themselves, then their conjugates by words of length up to
    ``radius``.  Returns {"base", "conjugator", "m"} or None; absence of a
    witness within the radius is reported, never treated as a proof that
    none exists.
    """
    named = _named_elems(generators)
    if m < 1:
        raise ValueError("witness level must be >= 1")
    width = 1 << m

    def is_witness(row):
        return row[0] == 1 and all((row[v] & 1) == (v & 1)
                                   for v in range(2, width))

    rows = {name: np.array(_row_at(g, m), np.uint8) for name, g in named}
    for name in rows:
        if is_witness(rows[name]):
            return {"base": name, "conjugator": "", "m": m}
    sep = "*" if any(len(n) > 1 for n in rows) else ""
    words = [("", identity_row(width))]
    seen = set()
    for _ in range(radius):
        nxt = []
        for wname, wrow in words:
            for name, grow in rows.items():
                w2 = compose_rows(wrow, grow)
                key = w2.tobytes()
                if key in seen:
                    continue
                seen.add(key)
                nxt.append((wname + (sep if wname else "") + name, w2))
        for wname, wrow in nxt:
            winv = invert_rows(wrow[None])[0]
            for name, grow in rows.items():
                conj = compose_rows(compose_rows(wrow, grow), winv)
                if is_witness(conj):
                    return {"base": name, "conjugator": wname, "m": m}
        words = nxt
    return None


def check_dec1(generators, n, radius=4):
    """Uniseriality certificate up to level ``n``: witness search at every
    level plus the per-(level, r) comparison of the twisted span with the
    next flag step."""
    named = _named_elems(generators)
    witnesses = {m: dec1_witness(named, m, radius=radius)
                 for m in range(1, n + 1)}
    elems = [g for _, g in named]
    steps = []
    for nn in range(1, n + 1):
        for r in range(1 << nn):
            got = bracket_span(elems, filtration(nn, r))
            steps.append({"n": nn, "r": r,
                          "ok": got == filtration(nn, r + 1)})
    return {
        "witnesses": witnesses,
        "radius": radius,
        "hypothesis": all(w is not None for w in witnesses.values()),
        "steps": steps,
        "ok": all(s["ok"] for s in steps),
    }


# ---------------------------------------------------------------------------
# graded section isomorphisms

def _ctx_for(name, level, ctx, budget):
    if ctx is not None:
        if ctx.name != name or ctx.level != level:
            raise ValueError("supplied context does not match group/level")
        return ctx
    return GroupContext.from_name(name, level, budget=budget)


class SectionModuleIso:
    """Linear bijection from one section of the planted normal series onto
    a direct sum of vertex modules.

    The map is pinned on canonical generators: an element planted at a
    single vertex goes to the monomial of that vertex in its summand.  The
    constructor verifies that this assignment is well defined and
    bijective (the generator cosets commute, square into the next term,
    and their subset products meet every coset exactly once) and that
    conjugation on the section matches the vertex action on the modules,
    exhaustively over all coset representatives and all group generators.
    """

    def __init__(self, ctx, m, parts):
        self.ctx = ctx
        self.m = m
        self.level = ctx.level
        self.group = ctx.name
        self.parts = tuple((tag, pl) for tag, _, pl in parts)
        width = ctx.width
        if not 1 <= m < ctx.level:
            raise ValueError("section index out of range for this level")
        nm = ctx.n_subgroup(m)
        nm1 = ctx.n_subgroup(m + 1)
        if not nm1.issubset(nm):
            raise RuntimeError("series terms out of order")
        dq = nm.log2_size() - nm1.log2_size()
        dm = sum(1 << pl for _, _, pl in parts)
        if dq != dm:
            raise FaithfulnessError(
                f"section {m}/{m + 1} of {self.group} at level {self.level} "
                f"has 2^{dq} elements but the module sum needs 2^{dm}: "
                f"faithfulness not established at this level")
        if dm > 14:
            raise ValueError("module sum too large to tabulate")

        gens = []
        offset = 0
        self._offsets = []
        for tag, elem, pl in parts:
            self._offsets.append((tag, pl, offset))
            sub = row_of(elem, ctx.level - pl)
            for e in range(1 << pl):
                gens.append(plant_row(sub, _bit_reverse(e, pl), pl, width))
            offset += 1 << pl
        gens = np.array(gens, np.uint8)
        if not nm.contains(gens).all():
            raise RuntimeError("planted generators escape the section")
        if not nm1.contains(compose_rows(gens, gens)).all():
            raise RuntimeError("generator squares escape the next term")
        for i in range(dm):
            for j in range(i + 1, dm):
                comm = compose_rows(
                    compose_rows(gens[i], gens[j]),
                    compose_rows(invert_rows(gens[i][None])[0],
                                 invert_rows(gens[j][None])[0]))
                if not nm1.contains(comm)[0]:
                    raise RuntimeError("generator cosets do not commute")

        table = np.empty((1 << dm, width), np.uint8)
        table[0] = identity_row(width)
        for s in range(1, 1 << dm):
            i = (s & -s).bit_length() - 1
            table[s] = compose_rows(table[s ^ (1 << i)], gens[i])
        hits = nm1.contains(table)
        if not hits[0] or hits[1:].any():
            raise RuntimeError("generator cosets are not independent")
        self._nm, self._nm1 = nm, nm1
        self._table = table
        self._tinv = invert_rows(table)
        self.section_log2 = dq
        self.well_defined = True
        self.bijective = True
        self.equivariance_checks = self._check_equivariance()

    # -- coordinates ------------------------------------------------------

    def _subset_index(self, row):
        row = np.asarray(row, np.uint8)
        hits = self._nm1.contains(compose_rows(self._tinv, row))
        idx = np.flatnonzero(hits)
        if len(idx) != 1:
            raise ValueError("element is not in the section")
        return int(idx[0])

    def coords(self, row):
        """Module coordinates of a section element, one summand per part."""
        s = self._subset_index(row)
        out = []
        for _, pl, off in self._offsets:
            out.append(VnElement(pl, (s >> off) & ((1 << (1 << pl)) - 1)))
        return tuple(out)

    def rep(self, cells):
        """Canonical coset representative of the given module coordinates."""
        if len(cells) != len(self._offsets):
            raise ValueError("one coordinate element per summand required")
        s = 0
        for cell, (_, pl, off) in zip(cells, self._offsets):
            if cell.n != pl:
                raise ValueError("coordinate level mismatch")
            s |= cell.bits << off
        return self._table[s].copy()

    # -- verification -------------------------------------------------------

    def _check_equivariance(self):
        checks = 0
        perms = []
        levels = {pl for _, pl, _ in self._offsets}
        for gelem in self.ctx.gens:
            perms.append({pl: _mon_perm(perm_at_level(gelem, pl), pl)
                          for pl in levels})
        for grow, mp in zip(self.ctx.gen_rows, perms):
            ginv = invert_rows(grow[None])[0]
            conj = compose_rows(grow, compose_rows(self._table, ginv))
            for s in range(len(self._table)):
                got = self._subset_index(conj[s])
                want = 0
                for _, pl, off in self._offsets:
                    cell = (s >> off) & ((1 << (1 << pl)) - 1)
                    want |= _apply_mon_perm(mp[pl], cell) << off
                if got != want:
                    raise RuntimeError(
                        "conjugation does not match the vertex action")
                checks += 1
        return checks

    def report(self):
        return {
            "group": self.group,
            "m": self.m,
            "level": self.level,
            "section_log2": self.section_log2,
            "parts": [{"tag": tag, "module_level": pl, "dim": 1 << pl}
                      for tag, pl in self.parts],
            "well_defined": self.well_defined,
            "bijective": self.bijective,
            "equivariance_checks": self.equivariance_checks,
            "ok": True,
        }


def iso_alpha_beta(m, level, ctx=None, budget=None):
    """Bijection from section m of the base group's planted series onto the
    level-m module plus the level-(m-1) module: planted commutator elements
    carry the first summand, planted squares the second."""
    ctx = _ctx_for("grigorchuk", level, ctx, budget)
    x = ctx.x_elem()
    parts = (("alpha", x, m), ("beta", x * x, m - 1))
    return SectionModuleIso(ctx, m, parts)


def iso_alpha_beta_gamma(m, level, ctx=None, budget=None):
    """Overgroup counterpart with three summands: planted x-commutators,
    planted y-commutators (both level m), and planted squares one level up
    the tree (level m-1)."""
    ctx = _ctx_for("overgroup", level, ctx, budget)
    x = ctx.x_elem()
    assert (x * x * x * x).is_identity()  # order-4 square pattern
    parts = (("alpha", x, m), ("beta", ctx.y_elem(), m),
             ("gamma", x * x, m - 1))
    return SectionModuleIso(ctx, m, parts)


# ---------------------------------------------------------------------------
# squaring identities between graded pieces

def square_map_check(m, level, group="grigorchuk", ctx=None, budget=None):
    """Verify the squaring identities on canonical coset representatives.

    For each flag index r the representative pulled back from v(m, r) is
    squared and compared with the planted-squares representative of the
    same element (exactly — disjoint plants commute), and the squares of
    the one-level-up representatives are compared with the shifted element
    v(m, r + 2^(m-1)) modulo the next series term.  In the overgroup the
    y-plants square to the identity outright.  Returns a report dict; all
    entries carry an "ok" flag.
    """
    ctx = _ctx_for(group, level, ctx, budget)
    width = ctx.width
    if not 1 <= m < ctx.level:
        raise ValueError("section index out of range for this level")
    nm1 = ctx.n_subgroup(m + 1)
    x = ctx.x_elem()
    x2 = x * x
    over = group == "overgroup"

    def rep(elem, k, r):
        out = identity_row(width)
        sub = row_of(elem, ctx.level - k)
        e = r
        while True:
            out = compose_rows(out, plant_row(sub, _bit_reverse(e, k), k,
                                              width))
            if e == 0:
                break
            e = (e - 1) & r
        return out

    entries = []
    for r in range(1 << m):
        w = rep(x, m, r)
        ws = compose_rows(w, w)
        rhs = rep(x2, m, r)
        entries.append({
            "identity": "alpha_square", "r": r,
            "exact": bool(np.array_equal(ws, rhs)),
            "in_next": bool(nm1.contains(ws)[0]),
        })
        entries[-1]["ok"] = entries[-1]["exact"] and entries[-1]["in_next"]
        if over:
            u = rep(ctx.y_elem(), m, r)
            us = compose_rows(u, u)
            entries.append({
                "identity": "beta_square", "r": r,
                "exact": bool(np.array_equal(us, identity_row(width))),
            })
            entries[-1]["ok"] = entries[-1]["exact"]
    shift = 1 << (m - 1)
    for r in range(shift):
        u = rep(x2, m - 1, r)
        us = compose_rows(u, u)
        rhs = rep(x2, m, r + shift)
        residue = compose_rows(us, invert_rows(rhs[None])[0])
        entries.append({
            "identity": "gamma_shift" if over else "beta_shift", "r": r,
            "exact": bool(np.array_equal(us, rhs)),
            "in_next": bool(nm1.contains(residue)[0]),
        })
        entries[-1]["ok"] = entries[-1]["in_next"]
    return {
        "group": group, "m": m, "level": level,
        "entries": entries,
        "ok": all(e["ok"] for e in entries),
    }
