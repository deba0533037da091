"""Exact truncated power series and group-algebra growth machinery.

Everything here is exact integer / rational arithmetic: the growth
quantities being compared (augmentation-quotient dimensions a_n, section
ranks b_n, ball sizes, graded algebra dimensions) satisfy exact
inequalities, so no assertion in this module goes through floating
point.  Floats appear only in the clearly-tagged informational window
probes of `limsup_probe`.

The three families of tools:
  * TruncatedIntSeries + jennings_product: the product formula turning a
    rank sequence b_n into the augmentation-quotient sequence a_n,
      char p:  prod_n ((1 - t^{pn}) / (1 - t^n))^{b_n}
      char 0:  prod_n (1 / (1 - t^n))^{b_n}
  * augmentation_dims / dimension_subgroups_from_ideal /
    growth_bound_check: direct F_2 linear algebra in a finite group
    algebra (the independent oracle for the product formula and for the
    power-series-free subgroup recursion).
  * gs_bound_series / gs_numeric_witness / graded_quotient_dims /
    relator_profile: the generator-relator growth inequality
    c·(1 - d·t + H_R(t)) >= 1 and its exact witnesses.
"""

from fractions import Fraction

import numpy as np

from .finite_quotients import (FinitePermGroup, GroupAlgebraF2, PermSet,
                               BudgetExceeded)

__all__ = [
    "TruncatedIntSeries", "AugmentationFiltration", "RelatorProfile",
    "jennings_product", "augmentation_dims",
    "dimension_subgroups_from_ideal", "growth_bound_check",
    "gs_bound_series", "gs_numeric_witness", "graded_quotient_dims",
    "limsup_probe", "rank_sequence", "relator_profile", "golod_profile",
]


# ---------------------------------------------------------------------------
# exact truncated series

class TruncatedIntSeries:
    """Power series with exact integer coefficients c_0..c_D.

    Operations truncate to the shorter operand; nothing ever extends a
    series past its stated degree silently."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, degree=None):
        coeffs = [int(c) for c in coeffs]
        if degree is not None:
            if degree < 0:
                raise ValueError("degree must be >= 0")
            coeffs = coeffs[:degree + 1]
            coeffs += [0] * (degree + 1 - len(coeffs))
        if not coeffs:
            raise ValueError("a series needs at least c_0")
        self.coeffs = tuple(coeffs)

    @classmethod
    def one(cls, degree):
        return cls([1], degree=degree)

    @classmethod
    def zero(cls, degree):
        return cls([0], degree=degree)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __getitem__(self, n):
        if not 0 <= n <= self.degree:
            raise IndexError(f"coefficient {n} outside truncation window")
        return self.coeffs[n]

    def __len__(self):
        return len(self.coeffs)

    def __eq__(self, other):
        return (isinstance(other, TruncatedIntSeries)
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        d = min(self.degree, other.degree)
        return TruncatedIntSeries(
            [self.coeffs[i] + other.coeffs[i] for i in range(d + 1)])

    def __sub__(self, other):
        d = min(self.degree, other.degree)
        return TruncatedIntSeries(
            [self.coeffs[i] - other.coeffs[i] for i in range(d + 1)])

    def __mul__(self, other):
        d = min(self.degree, other.degree)
        out = [0] * (d + 1)
        for i, c in enumerate(self.coeffs[:d + 1]):
            if c:
                for j, e in enumerate(other.coeffs[:d + 1 - i]):
                    out[i + j] += c * e
        return TruncatedIntSeries(out)

    def scale(self, k):
        return TruncatedIntSeries([k * c for c in self.coeffs])

    def truncate(self, degree):
        if degree > self.degree:
            raise ValueError("truncate cannot extend the series")
        return TruncatedIntSeries(self.coeffs[:degree + 1])

    def dominates(self, other):
        """Coefficientwise e_n >= f_n over the shared window."""
        d = min(self.degree, other.degree)
        return all(self.coeffs[i] >= other.coeffs[i] for i in range(d + 1))

    def total(self):
        return sum(self.coeffs)

    def evaluate(self, xi):
        """Exact value at a rational point."""
        xi = Fraction(xi)
        return sum(Fraction(c) * xi ** n for n, c in enumerate(self.coeffs))

    def __repr__(self):
        shown = ", ".join(str(c) for c in self.coeffs[:8])
        tail = ", ..." if self.degree >= 8 else ""
        return f"TruncatedIntSeries([{shown}{tail}], degree={self.degree})"


def _geometric_block(n, p, degree):
    """(1 - t^{pn})/(1 - t^n) truncated: 1 + t^n + ... + t^{(p-1)n},
    or the full geometric series for characteristic 0 (p is None)."""
    coeffs = [0] * (degree + 1)
    k = 0
    while k * n <= degree and (p is None or k < p):
        coeffs[k * n] = 1
        k += 1
    return TruncatedIntSeries(coeffs)


def jennings_product(b, characteristic, degree):
    """Augmentation-quotient series from a rank sequence.

    b lists b_1, b_2, ...; characteristic is a prime p or 0.  Returns the
    exact coefficients a_0..a_degree of the product formula."""
    if characteristic != 0 and characteristic < 2:
        raise ValueError("characteristic must be 0 or a prime")
    p = None if characteristic == 0 else characteristic
    out = TruncatedIntSeries.one(degree)
    for n, bn in enumerate(b, start=1):
        if n > degree:
            break
        if bn < 0:
            raise ValueError("rank sequence entries must be >= 0")
        block = _geometric_block(n, p, degree)
        for _ in range(bn):
            out = out * block
    return out


def rank_sequence(chain):
    """Section ranks b_n = log2 |H_n| - log2 |H_{n+1}| of a descending
    chain of PermSets or series terms, the last term counting as final."""
    logs = []
    for term in chain:
        if hasattr(term, "log2_order"):
            logs.append(term.log2_order)
        else:
            logs.append(term.log2_size())
    return tuple(logs[i] - logs[i + 1] for i in range(len(logs) - 1))


# ---------------------------------------------------------------------------
# augmentation ideal linear algebra

class AugmentationFiltration:
    """Exact dimensions a_0..a_k of the augmentation-ideal quotients,
    listed up to the last nonzero (the ideal is nilpotent, so the
    sequence terminates and the entries sum to the group order)."""

    __slots__ = ("order", "p", "dims")

    def __init__(self, order, p, dims):
        self.order = order
        self.p = p
        dims = [int(d) for d in dims]
        while dims and dims[-1] == 0:
            dims.pop()
        self.dims = tuple(dims)
        if any(d <= 0 for d in self.dims):
            raise ValueError("dimensions must be positive up to the "
                             "last nonzero")
        if sum(self.dims) != order:
            raise ValueError("dimensions must sum to the group order")

    def series(self, degree):
        """The dimensions as a TruncatedIntSeries (zero past the chain)."""
        return TruncatedIntSeries(self.dims, degree=degree)

    def __repr__(self):
        return (f"AugmentationFiltration(order={self.order}, p={self.p}, "
                f"dims={self.dims})")


def _algebra_of(group):
    """Coerce a finite group handle to GroupAlgebraF2."""
    if isinstance(group, GroupAlgebraF2):
        return group
    if isinstance(group, tuple) and len(group) == 2:
        pset, gen_rows = group
        gen_rows = np.atleast_2d(np.asarray(gen_rows, np.uint8))
    elif hasattr(group, "enumerate") and hasattr(group, "gen_rows"):
        pset, gen_rows = group.enumerate(), group.gen_rows
    else:
        raise TypeError("group must be FinitePermGroup, "
                        "(PermSet, gen_rows), or a level context")
    if pset.size > 1 << 10:
        raise BudgetExceeded(f"group of order {pset.size} is too large "
                             "for the ideal route (cap 2^10)")
    return GroupAlgebraF2(pset, gen_rows)


def augmentation_dims(group, p=2, degree=None):
    """a_n = dim Delta^n / Delta^{n+1} by direct span computation.

    group: FinitePermGroup, (PermSet, gen_rows), or a level context.
    Only characteristic 2 is implemented (the built-in groups are
    2-groups; their group algebras over other fields are semisimple at
    every finite level and carry no filtration information)."""
    if p != 2:
        raise NotImplementedError("only characteristic 2 is implemented")
    alg = _algebra_of(group)
    filt = AugmentationFiltration(alg.n, p,
                                  alg.augmentation_quotient_dims())
    if degree is not None and len(filt.dims) - 1 > degree:
        raise BudgetExceeded(
            f"filtration lives past degree {degree} "
            f"(last nonzero at {len(filt.dims) - 1})")
    return filt


def dimension_subgroups_from_ideal(group, p=2, degree=None):
    """G_n = {g : g - 1 in Delta^n}, computed from ideal membership.

    Returns the chain [G_1, G_2, ...] as PermSets, ending at the trivial
    group.  Independent of (and checked against) the commutator/power
    recursion route."""
    if p != 2:
        raise NotImplementedError("only characteristic 2 is implemented")
    alg = _algebra_of(group)
    chain = alg.dimension_subgroups()
    if degree is not None:
        chain = chain[:degree]
    return chain


def growth_bound_check(group, radius, s_rows=None):
    """Per-degree report of a_n <= |B(n)| for the generating set.

    a_n comes from the augmentation filtration, |B(n)| from breadth-first
    balls in the (symmetrized) generator graph; s_rows defaults to the
    group's own generators and must generate."""
    alg = _algebra_of(group)
    if s_rows is None:
        fp = FinitePermGroup(alg.gen_rows)
    else:
        fp = FinitePermGroup(np.atleast_2d(np.asarray(s_rows, np.uint8)))
    dims = augmentation_dims((alg.pset, alg.gen_rows)).dims
    top = min(radius, len(dims) - 1)
    balls = fp.ball_sizes(top)
    rows = []
    ok = True
    for n in range(top + 1):
        a_n = dims[n] if n < len(dims) else 0
        good = a_n <= balls[n]
        ok = ok and good
        rows.append({"n": n, "a_n": a_n, "ball": balls[n], "ok": good})
    return {"rows": rows, "ok": ok, "radius": top}


# ---------------------------------------------------------------------------
# generator-relator growth bounds

class RelatorProfile:
    """Relator-count profile r_1, r_2, ... with optional all-ones tail."""

    __slots__ = ("head", "tail_from")

    def __init__(self, head, tail_from=None):
        self.head = tuple(int(h) for h in head)
        if any(h < 0 for h in self.head):
            raise ValueError("relator counts must be >= 0")
        self.tail_from = tail_from      # r_n = 1 for n >= tail_from

    def coeff(self, n):
        if n <= 0:
            return 0
        if n <= len(self.head):
            return self.head[n - 1]
        if self.tail_from is not None and n >= self.tail_from:
            return 1
        return 0

    def series(self, degree):
        return TruncatedIntSeries(
            [self.coeff(n) for n in range(degree + 1)])

    def __repr__(self):
        tail = f", 1 from {self.tail_from}" if self.tail_from else ""
        return f"RelatorProfile({list(self.head)}{tail})"


def relator_profile(text):
    """Parse a compact profile like "0^7,1*": comma-separated items
    `v` (one degree), `v^k` (k degrees), `v*` (all remaining degrees;
    final item only, v must be 0 or 1)."""
    head = []
    tail_from = None
    items = [it.strip() for it in text.split(",") if it.strip()]
    for pos, item in enumerate(items):
        if item.endswith("*"):
            if pos != len(items) - 1:
                raise ValueError("'*' item must come last")
            v = int(item[:-1])
            if v == 0:
                break
            if v != 1:
                raise ValueError("an infinite tail must be 0 or 1")
            tail_from = len(head) + 1
        elif "^" in item:
            v, k = item.split("^", 1)
            head.extend([int(v)] * int(k))
        else:
            head.append(int(item))
    return RelatorProfile(head, tail_from)


def golod_profile(p):
    """Single-relator-per-degree profile with nothing below degree p^3."""
    if p < 2:
        raise ValueError("p must be a prime >= 2")
    return RelatorProfile([0] * (p ** 3 - 1), tail_from=p ** 3)


def _relator_series(r, degree):
    if isinstance(r, RelatorProfile):
        return r.series(degree)
    if isinstance(r, TruncatedIntSeries):
        return TruncatedIntSeries(r.coeffs, degree=degree)
    if r is None:
        return TruncatedIntSeries.zero(degree)
    return TruncatedIntSeries(list(r), degree=degree)


def gs_bound_series(d, r, degree):
    """Minimal nonnegative series with c_0 = 1 satisfying the growth
    inequality c·(1 - d·t + H_R(t)) >= 1 coefficientwise:
    c_n = max(0, d·c_{n-1} - sum_i r_i·c_{n-i}).  A lower bound for the
    graded dimensions of any algebra on d generators whose relator
    counts are r."""
    if d < 1:
        raise ValueError("d must be >= 1")
    rs = _relator_series(r, degree)
    if rs[0] != 0:
        raise ValueError("degree-0 relators are not allowed (r_0 must "
                         "be 0)")
    c = [1]
    for n in range(1, degree + 1):
        val = d * c[n - 1] - sum(rs[i] * c[n - i]
                                 for i in range(1, n + 1))
        c.append(max(0, val))
    return TruncatedIntSeries(c)


def gs_numeric_witness(d, r, xi, degree, all_ones_from=None):
    """Exact rational evaluation of 1 - d·xi + H_R(xi).

    The partial sum runs over n <= degree; when `all_ones_from` is given
    (r_n = 1 for every n >= all_ones_from), the closed-form geometric
    tail for n > degree is added, making the value exact for the full
    series.  Returns a report of exact Fractions."""
    xi = Fraction(xi)
    if not 0 <= xi < 1:
        raise ValueError("xi must satisfy 0 <= xi < 1")
    rs = _relator_series(r, degree)
    partial = 1 - d * xi + sum(Fraction(rs[n]) * xi ** n
                               for n in range(1, degree + 1))
    tail = Fraction(0)
    if all_ones_from is not None and xi > 0:
        start = max(all_ones_from, degree + 1)
        tail = xi ** start / (1 - xi)
    value = partial + tail
    return {"partial": partial, "tail": tail, "value": value,
            "negative": value < 0}


# ---------------------------------------------------------------------------
# graded algebra dimensions by monomial linear algebra

_GRADED_BUDGET = 1 << 16


def _normalize_relator(rel, d, p):
    """Relator as {monomial tuple: nonzero coeff mod p}; must be
    homogeneous."""
    if isinstance(rel, dict):
        items = rel.items()
    else:
        items = [(m, 1) for m in rel]
    out = {}
    deg = None
    for mono, coeff in items:
        mono = tuple(int(g) for g in mono)
        if any(not 0 <= g < d for g in mono):
            raise ValueError(f"monomial {mono} uses letters outside the "
                             f"{d} generators")
        if deg is None:
            deg = len(mono)
        elif len(mono) != deg:
            raise ValueError("relator is not homogeneous")
        c = (out.get(mono, 0) + coeff) % p
        if c:
            out[mono] = c
        else:
            out.pop(mono, None)
    if not out:
        raise ValueError("zero relator")
    return out, deg


def _mono_index(mono, d):
    idx = 0
    for g in mono:
        idx = idx * d + g
    return idx


def _rank_f2(vectors):
    basis = {}
    rank = 0
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            if top in basis:
                v ^= basis[top]
            else:
                basis[top] = v
                rank += 1
                break
    return rank


def _rank_modp(rows, p):
    m = np.array(rows, dtype=np.int64) % p
    rank = 0
    col = 0
    n_rows, n_cols = m.shape
    for col in range(n_cols):
        piv = None
        for i in range(rank, n_rows):
            if m[i, col] % p:
                piv = i
                break
        if piv is None:
            continue
        m[[rank, piv]] = m[[piv, rank]]
        inv = pow(int(m[rank, col]), p - 2, p)
        m[rank] = m[rank] * inv % p
        for i in range(n_rows):
            if i != rank and m[i, col]:
                m[i] = (m[i] - m[i, col] * m[rank]) % p
        rank += 1
        if rank == n_rows:
            break
    return rank


def graded_quotient_dims(d, relators, degree, p=2, budget=_GRADED_BUDGET):
    """dim B_n for B = free algebra on d generators modulo the two-sided
    ideal of the given homogeneous relators, n = 0..degree.

    Exact linear algebra in the d^n-dimensional monomial space: the
    degree-n slice of the ideal is spanned by m_left · r · m_right over
    all padding monomials; dim B_n = d^n - rank."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d ** degree > budget:
        raise BudgetExceeded(f"{d}^{degree} monomials exceed the budget")
    rels = [_normalize_relator(rel, d, p) for rel in relators]
    dims = [1]
    for n in range(1, degree + 1):
        space = d ** n
        vectors = []
        for rel, rdeg in rels:
            if rdeg > n:
                continue
            pad = n - rdeg
            for left_deg in range(pad + 1):
                right_deg = pad - left_deg
                for li in range(d ** left_deg):
                    for ri in range(d ** right_deg):
                        if p == 2:
                            v = 0
                            for mono in rel:
                                idx = (li * d ** rdeg
                                       + _mono_index(mono, d)) \
                                    * d ** right_deg + ri
                                v ^= 1 << idx
                            vectors.append(v)
                        else:
                            row = [0] * space
                            for mono, coeff in rel.items():
                                idx = (li * d ** rdeg
                                       + _mono_index(mono, d)) \
                                    * d ** right_deg + ri
                                row[idx] = (row[idx] + coeff) % p
                            vectors.append(row)
        if not vectors:
            rank = 0
        elif p == 2:
            rank = _rank_f2(vectors)
        else:
            rank = _rank_modp(vectors, p)
        dims.append(space - rank)
    return TruncatedIntSeries(dims)


# ---------------------------------------------------------------------------
# window probes

def limsup_probe(a, b):
    """Finite-window growth probe for a = jennings_product(b).

    Asserts only the exact statement a_n >= b_n on the shared window;
    the per-n log ratios are floats and informational (a window maximum
    is not a limit)."""
    import math
    bs = TruncatedIntSeries([0] + [int(x) for x in b], degree=a.degree)
    dominates = all(a[n] >= bs[n] for n in range(1, a.degree + 1))
    a_probe = max((math.log(a[n]) / n
                   for n in range(1, a.degree + 1) if a[n] > 0),
                  default=0.0)
    b_probe = max((math.log(bs[n]) / n
                   for n in range(1, a.degree + 1) if bs[n] > 0),
                  default=0.0)
    return {"dominates": dominates, "a_window_probe": a_probe,
            "b_window_probe": b_probe,
            "note": "window maxima of log(c_n)/n; informational only"}
