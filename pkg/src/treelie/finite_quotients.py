"""Finite level-n quotients of tree automorphism groups.

Permutations of the 2**n leaves are uint8 numpy rows; subgroups are sorted
row sets.  Closures respect an element budget (TREELIE_BUDGET) so runaway
enumerations fail fast.  The two built-in groups get certified order /
index computations at level 5, where the full quotients (2**22 and 2**28
elements) are too large to enumerate comfortably.
"""

import os
from dataclasses import dataclass

import numpy as np

from .tree_automorphisms import (
    commutator,
    grigorchuk_group,
    overgroup,
    parse_automaton,
    perm_at_level,
)

DEFAULT_BUDGET = 1 << 22

_GEN_ORDER = "abcd"


class BudgetExceeded(RuntimeError):
    """A closure grew past the element budget."""


def element_budget():
    raw = os.environ.get("TREELIE_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"TREELIE_BUDGET must be an integer, got {raw!r}")
    if value <= 0:
        raise ValueError("TREELIE_BUDGET must be positive")
    return value


# ---------------------------------------------------------------------------
# permutation rows

def row_of(elem, level):
    return np.array(perm_at_level(elem, level), dtype=np.uint8)


def rows_of(elems, level):
    return np.array([perm_at_level(g, level) for g in elems], dtype=np.uint8)


def _skeys(rows):
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    if len(rows) == 0:
        return np.empty(0, dtype=f"S{max(rows.shape[1], 1)}")
    return rows.reshape(len(rows), -1).view(f"S{rows.shape[1]}").ravel()


def _unique_rows(rows):
    if len(rows) == 0:
        return rows
    keys = _skeys(rows)
    _, idx = np.unique(keys, return_index=True)
    return rows[idx]


def invert_rows(rows):
    return np.argsort(rows, axis=1).astype(np.uint8)


def compose_rows(a, b):
    """a after b, rows or single perms: (a∘b)(i) = a[b(i)]."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.ndim == 1 and b.ndim == 1:
        return a[b]
    if a.ndim == 1:
        return a[b]  # single a over row batch b
    if b.ndim == 1:
        return a[:, b]  # row batch a, single b
    return np.take_along_axis(a, b.astype(np.intp), axis=1)


def square_rows(rows):
    rows = np.atleast_2d(rows)
    return np.take_along_axis(rows, rows.astype(np.intp), axis=1)


def identity_row(width):
    return np.arange(width, dtype=np.uint8)


class PermSet:
    """Immutable sorted set of same-width permutation rows."""

    __slots__ = ("rows", "keys")

    def __init__(self, rows, _presorted=False):
        rows = np.ascontiguousarray(np.atleast_2d(rows), dtype=np.uint8)
        if not _presorted:
            rows = _unique_rows(rows)
        self.rows = rows
        self.keys = _skeys(rows)

    @property
    def size(self):
        return len(self.rows)

    @property
    def width(self):
        return self.rows.shape[1]

    def log2_size(self):
        n = self.size
        b = n.bit_length() - 1
        if n != 1 << b:
            raise ValueError(f"set size {n} is not a power of 2")
        return b

    def contains(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.uint8))
        q = _skeys(rows)
        pos = np.searchsorted(self.keys, q)
        pos = np.minimum(pos, len(self.keys) - 1)
        return (self.keys[pos] == q) if self.size else np.zeros(len(q), bool)

    def contains_all(self, rows):
        return bool(self.contains(rows).all())

    def issubset(self, other):
        return self.size <= other.size and other.contains_all(self.rows)

    def equal(self, other):
        return self.size == other.size and np.array_equal(self.keys, other.keys)

    def merged_with(self, new_rows):
        """Union with rows known to be deduped and disjoint from the set."""
        if len(new_rows) == 0:
            return self
        nk = _skeys(new_rows)
        pos = np.searchsorted(self.keys, nk)
        rows = np.insert(self.rows, pos, new_rows, axis=0)
        return PermSet(rows, _presorted=True)


# ---------------------------------------------------------------------------
# closures

def _prepare_gens(gen_rows, width):
    gens = np.atleast_2d(np.asarray(gen_rows, dtype=np.uint8))
    if gens.size == 0:
        gens = gens.reshape(0, width)
    gens = np.vstack([gens, invert_rows(gens)]) if len(gens) else gens
    gens = _unique_rows(gens)
    ident = identity_row(width)
    keep = ~(gens == ident).all(axis=1)
    return gens[keep]


def subgroup_closure(gen_rows, width, budget=None, warm_rows=None):
    """Enumerate the subgroup generated by the given perms.

    warm_rows: a previously enumerated subset to resume from (its rows are
    re-expanded against the full generator list once).
    """
    budget = element_budget() if budget is None else budget
    gens = _prepare_gens(gen_rows, width)
    base = [identity_row(width)[None, :]]
    if warm_rows is not None and len(warm_rows):
        base.append(np.atleast_2d(warm_rows))
    if len(gens):
        base.append(gens)
    pset = PermSet(np.vstack(base))
    frontier = pset.rows
    if not len(gens):
        return pset
    chunk = max(1, (1 << 21) // len(gens))
    while len(frontier):
        fresh = []
        for lo in range(0, len(frontier), chunk):
            cand = frontier[lo:lo + chunk][:, gens]  # (f, k, w)
            cand = _unique_rows(cand.reshape(-1, width))
            cand = cand[~pset.contains(cand)]
            if len(cand):
                fresh.append(cand)
        if not fresh:
            break
        new = _unique_rows(np.vstack(fresh))
        new = new[~pset.contains(new)]
        pset = pset.merged_with(new)
        if pset.size > budget:
            raise BudgetExceeded(
                f"subgroup closure grew past the element budget "
                f"({pset.size} > {budget}); raise TREELIE_BUDGET to proceed")
        frontier = new
    return pset


def normal_closure(seed_rows, group_gen_rows, width, budget=None,
                   warm_rows=None, max_rounds=64):
    """⟨seeds⟩ normalized by the group generated by group_gen_rows."""
    ggens = _prepare_gens(group_gen_rows, width)
    ginvs = invert_rows(ggens)
    gen_list = _prepare_gens(seed_rows, width)
    pset = None
    for _ in range(max_rounds):
        pset = subgroup_closure(gen_list, width, budget=budget,
                                warm_rows=warm_rows)
        warm_rows = pset.rows
        missing = []
        for g, gi in zip(ggens, ginvs):
            conj = g[gen_list[:, gi]]
            conj = conj[~pset.contains(conj)]
            if len(conj):
                missing.append(conj)
        if not missing:
            return pset, gen_list
        gen_list = _unique_rows(np.vstack([gen_list] + missing))
    raise RuntimeError("normal closure did not stabilize")


def closure_absorb(candidate_rows, group_gen_rows, width, budget=None,
                   start_gens=None, batch=64):
    """Smallest normal subgroup (under ⟨group gens⟩) containing start_gens
    and every candidate row.  Candidates are absorbed incrementally so huge
    candidate sets with tiny independent content stay cheap."""
    cand = _unique_rows(np.atleast_2d(np.asarray(candidate_rows, np.uint8)))
    kept = np.zeros((0, width), np.uint8) if start_gens is None \
        else np.atleast_2d(np.asarray(start_gens, np.uint8))
    pset, warm = None, None
    while True:
        pset, gen_list = normal_closure(kept, group_gen_rows, width,
                                        budget=budget, warm_rows=warm)
        warm = pset.rows
        if len(cand):
            todo = cand[~pset.contains(cand)]
        else:
            todo = cand
        if not len(todo):
            return pset, gen_list
        kept = np.vstack([gen_list, todo[:batch]])


# ---------------------------------------------------------------------------
# block constructions

def plant_row(row, vertex_index, vertex_level, width):
    """Embed a perm of width//2**vertex_level points at the given subtree."""
    sub = width >> vertex_level
    out = identity_row(width)
    base = vertex_index * sub
    out[base:base + sub] = base + np.asarray(row, np.uint8)
    return out


def block_product_set(sets_by_vertex, width, budget=None):
    """All products of independent per-subtree perms (one set per level-m
    vertex, in vertex order).  Returns the full combination set."""
    budget = element_budget() if budget is None else budget
    m = len(sets_by_vertex).bit_length() - 1
    assert len(sets_by_vertex) == 1 << m
    out = identity_row(width)[None, :]
    for v, sub_rows in enumerate(sets_by_vertex):
        sub_rows = np.atleast_2d(np.asarray(sub_rows, np.uint8))
        sub = width >> m
        base = v * sub
        if len(sub_rows) * len(out) > budget:
            raise BudgetExceeded("block product set larger than budget")
        rep = np.repeat(out, len(sub_rows), axis=0)
        block = np.tile(base + sub_rows, (len(out), 1))
        rep[:, base:base + sub] = block
        out = rep
    return _unique_rows(out)


def pair_halves(row_or_rows):
    """Split root-trivial level-n perms into their two level-(n-1) halves."""
    rows = np.atleast_2d(np.asarray(row_or_rows, np.uint8))
    w = rows.shape[1]
    h = w // 2
    if (rows[:, :h] >= h).any() or (rows[:, h:] < h).any():
        raise ValueError("perm does not preserve the two halves")
    return rows[:, :h], rows[:, h:] - h


# ---------------------------------------------------------------------------
# parity characters

def level_sign(row, depth, level):
    """Parity (0/1) of the induced permutation on level-`depth` vertices."""
    width = len(row)
    step = width >> depth
    induced = (np.asarray(row)[::step] // step).astype(np.intp)
    seen = np.zeros(len(induced), bool)
    parity = 0
    for i in range(len(induced)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = induced[j]
            length += 1
        parity ^= (length - 1) & 1
    return parity


def sign_vector(row, level):
    return tuple(level_sign(row, d, level) for d in range(1, level + 1))


def sign_matrix_rank(rows, level):
    vecs = [sign_vector(r, level) for r in np.atleast_2d(rows)]
    basis = []
    for v in vecs:
        v = int("".join(map(str, v)), 2) if any(v) else 0
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
    return len(basis)


# ---------------------------------------------------------------------------
# series records

@dataclass
class SeriesTerm:
    index: int
    log2_order: int
    rank: int | None = None        # p-rank of this term over the next
    pset: PermSet | None = None    # None when certified without enumeration
    gen_rows: np.ndarray | None = None
    certified: bool = False


def _coset_rank_mod(seeds, modulus, limit=None):
    """Rank of the elementary abelian span of seed images modulo an
    enumerated subgroup (greedy independence over all subset products)."""
    reps = []
    inv = invert_rows(np.atleast_2d(seeds))
    for s, si in zip(np.atleast_2d(seeds), inv):
        dependent = False
        for mask in range(1 << len(reps)):
            prod = s
            for j, r in enumerate(reps):
                if mask >> j & 1:
                    prod = compose_rows(prod, r)
            if modulus.contains(prod[None, :])[0]:
                dependent = True
                break
        if not dependent:
            reps.append(s)
            if limit is not None and len(reps) >= limit:
                break
    return len(reps), reps


# ---------------------------------------------------------------------------
# group context

class GroupContext:
    """A tree automorphism group truncated at a fixed level.

    For the two built-in groups at level 5 the whole quotient (2**22 /
    2**28 perms) is never enumerated; orders and the first couple of
    series ranks come from certified index computations instead.
    """

    def __init__(self, group, elems, level, budget=None, name=None):
        if level < 1 or level > 8:
            raise ValueError("level must be between 1 and 8")
        self.group = group
        self.elems = dict(elems)
        self.level = level
        self.width = 1 << level
        self.budget = element_budget() if budget is None else budget
        self.name = name
        self.gen_names = [k for k in _GEN_ORDER if k in self.elems]
        if not self.gen_names:
            self.gen_names = sorted(self.elems)
        self.gens = [self.elems[k] for k in self.gen_names]
        self.gen_rows = rows_of(self.gens, level)
        self._cache = {}

    @classmethod
    def from_name(cls, name, level, budget=None):
        if name == "grigorchuk":
            grp, elems = grigorchuk_group()
        elif name == "overgroup":
            grp, elems = overgroup()
        else:
            grp, elems, _ = parse_automaton(name)
            return cls(grp, elems, level, budget=budget)
        return cls(grp, elems, level, budget=budget, name=name)

    # -- basic elements ----------------------------------------------------

    def elem(self, word):
        g = None
        for ch in word:
            g = self.elems[ch] if g is None else g * self.elems[ch]
        return g

    def row(self, elem_or_word):
        if isinstance(elem_or_word, str):
            elem_or_word = self.elem(elem_or_word)
        return row_of(elem_or_word, self.level)

    def x_elem(self):
        return commutator(self.elems["a"], self.elems["b"])

    def y_elem(self):
        return commutator(self.elems["a"], self.elems["d"])

    # -- enumeration and orders --------------------------------------------

    def enumerate(self):
        if "enum" not in self._cache:
            self._cache["enum"] = subgroup_closure(
                self.gen_rows, self.width, budget=self.budget)
        return self._cache["enum"]

    def _abelianization_log2(self):
        """log2 of [G : G'] certified from generator relations + parities."""
        rank = sign_matrix_rank(self.gen_rows, self.level)
        upper = len(self.gen_rows)
        if self.name == "grigorchuk":
            bcd = self.elem("bcd")
            if bcd.is_identity():
                upper -= 1
        if rank != upper:
            return None
        return rank

    def order_log2(self):
        if "order" in self._cache:
            return self._cache["order"]
        if self.name == "overgroup" and self.level >= 4:
            cert = self.overgroup_certificate()
            out = cert["log2_order"]
        elif self.name == "grigorchuk" and self.level >= 5:
            ab = self._abelianization_log2()
            assert ab == 3
            out = ab + self.lcs_term_set(2).log2_size()
        else:
            out = self.enumerate().log2_size()
        self._cache["order"] = out
        return out

    # -- named subgroups ----------------------------------------------------

    def k_subgroup(self, at_level=None):
        """K = normal closure of x (and y for the overgroup)."""
        lvl = self.level if at_level is None else at_level
        key = ("K", lvl)
        if key not in self._cache:
            seeds = [self.x_elem()]
            if self.name == "overgroup":
                seeds.append(self.y_elem())
            pset, gens = normal_closure(rows_of(seeds, lvl),
                                        rows_of(self.gens, lvl),
                                        1 << lvl, budget=self.budget)
            self._cache[key] = pset
            self._cache[("K_gens", lvl)] = gens
        return self._cache[key]

    def t_subgroup(self, at_level=None):
        lvl = self.level if at_level is None else at_level
        key = ("T", lvl)
        if key not in self._cache:
            x = self.x_elem()
            pset, gens = normal_closure(rows_of([x * x], lvl),
                                        rows_of(self.gens, lvl),
                                        1 << lvl, budget=self.budget)
            self._cache[key] = pset
            self._cache[("T_gens", lvl)] = gens
        return self._cache[key]

    def k_times_k(self):
        half = self.k_subgroup(at_level=self.level - 1)
        return PermSet(block_product_set([half.rows, half.rows],
                                         self.width, budget=self.budget))

    def n_subgroup(self, m):
        """N_m: K-copies at level m together with T-copies at level m-1.

        Both copy families are images of subgroups that are normal in the
        whole group (sections of generators stay inside the group), so the
        subgroup they generate is the image of a normal subgroup — plain
        closure suffices, with the larger block set as a warm start.
        """
        if m < 1:
            raise ValueError("m must be >= 1")
        key = ("N", m)
        if key not in self._cache:
            warm = self._copies_at_level("K", m)
            gens = np.vstack([self._planted_gens("K", m),
                              self._planted_gens("T", m - 1)])
            self._cache[key] = subgroup_closure(gens, self.width,
                                                budget=self.budget,
                                                warm_rows=warm.rows)
        return self._cache[key]

    def _sub_and_gens(self, which, lvl):
        pset = (self.k_subgroup if which == "K" else self.t_subgroup)(
            at_level=lvl)
        return pset, self._cache[(which + "_gens", lvl)]

    def _copies_at_level(self, which, m):
        if m == 0:
            return self._sub_and_gens(which, self.level)[0]
        if m >= self.level:
            return PermSet(identity_row(self.width))
        sub = self._sub_and_gens(which, self.level - m)[0]
        return PermSet(block_product_set([sub.rows] * (1 << m),
                                         self.width, budget=self.budget))

    def _planted_gens(self, which, m):
        """Generators of the level-m copies: the subgroup's generator list
        planted at every level-m vertex."""
        if 0 < m < self.level:
            gens = self._sub_and_gens(which, self.level - m)[1]
            gens = [plant_row(g, v, m, self.width)
                    for v in range(1 << m) for g in gens]
        elif m == 0:
            gens = list(self._sub_and_gens(which, self.level)[1])
        else:
            gens = []
        if not gens:
            return identity_row(self.width)[None, :]
        return np.array(gens, np.uint8)

    def stab_set(self, depth):
        """Pointwise level-`depth` stabilizer inside the enumerated quotient."""
        full = self.enumerate()
        width = self.width
        step = width >> depth
        induced = full.rows[:, ::step] // step
        mask = (induced == np.arange(1 << depth, dtype=np.uint8)).all(axis=1)
        return PermSet(full.rows[mask], _presorted=True)

    def rist_set(self, m):
        """Rigid level-m stabilizer inside the enumerated quotient."""
        full = self.enumerate()
        width = self.width
        sub = width >> m
        ident = identity_row(width)
        pieces = []
        for v in range(1 << m):
            lo, hi = v * sub, (v + 1) * sub
            outside = np.ones(width, bool)
            outside[lo:hi] = False
            mask = (full.rows[:, outside] == ident[outside]).all(axis=1)
            pieces.append(full.rows[mask])
        pset, _ = closure_absorb(np.vstack(pieces), self.gen_rows,
                                 self.width, budget=self.budget)
        return pset

    # -- lower central series ----------------------------------------------

    def _gamma2_seeds(self):
        seeds = []
        for i in range(len(self.gens)):
            for j in range(i + 1, len(self.gens)):
                seeds.append(commutator(self.gens[i], self.gens[j]))
        return rows_of(seeds, self.level)

    def lcs_term_set(self, n):
        """Enumerated γ_n at this level (n >= 2; γ_2 may be large)."""
        key = ("lcs_set", n)
        if key in self._cache:
            return self._cache[key]
        if n < 2:
            raise ValueError("enumerated lcs terms start at n=2")
        if n == 2:
            seeds = self._gamma2_seeds()
        else:
            prev_gens = self._lcs_gen_list(n - 1)
            seeds = self._bracket_with_gens(prev_gens)
        pset, gen_list = normal_closure(seeds, self.gen_rows, self.width,
                                        budget=self.budget)
        self._cache[key] = pset
        self._cache[("lcs_gens", n)] = gen_list
        return pset

    def _lcs_gen_list(self, n):
        if n == 2:
            if ("lcs_gens", 2) not in self._cache:
                if self._gamma2_enumerable():
                    self.lcs_term_set(2)
                else:
                    self._cache[("lcs_gens", 2)] = _prepare_gens(
                        self._gamma2_seeds(), self.width)
        else:
            self.lcs_term_set(n)
        return self._cache[("lcs_gens", n)]

    def _gamma2_enumerable(self):
        return not (self.name == "overgroup" and self.level >= 5)

    def _bracket_with_gens(self, rows):
        rows = np.atleast_2d(rows)
        out = []
        inv = invert_rows(rows)
        ginv = invert_rows(self.gen_rows)
        for g, gi in zip(self.gen_rows, ginv):
            m = g[rows]                     # g∘s
            m = compose_rows(m, gi)         # g∘s∘g⁻¹
            m = np.take_along_axis(m, inv.astype(np.intp), axis=1)  # ...∘s⁻¹
            out.append(m)
        return _unique_rows(np.vstack(out))

    def lcs(self, depth):
        """Lower central series records down to γ_depth."""
        key = ("lcs", depth)
        if key in self._cache:
            return self._cache[key]
        terms = [SeriesTerm(1, self.order_log2(),
                            pset=None if not self._whole_enumerable()
                            else self.enumerate(),
                            gen_rows=self.gen_rows,
                            certified=not self._whole_enumerable())]
        for n in range(2, depth + 1):
            if n == 2 and not self._gamma2_enumerable():
                log2 = self.order_log2() - self._abelianization_log2()
                terms.append(SeriesTerm(2, log2,
                                        gen_rows=self._lcs_gen_list(2),
                                        certified=True))
                continue
            pset = self.lcs_term_set(n)
            terms.append(SeriesTerm(n, pset.log2_size(), pset=pset,
                                    gen_rows=self._lcs_gen_list(n)))
        self._fill_ranks(terms)
        self._cache[key] = terms
        return terms

    def _whole_enumerable(self):
        if self.name == "grigorchuk":
            return self.level <= 4
        if self.name == "overgroup":
            return self.level <= 4
        return True

    def _fill_ranks(self, terms):
        """p-rank of each section term_i / term_{i+1} (p=2)."""
        for t, nxt in zip(terms, terms[1:]):
            if t.pset is not None and nxt.pset is not None:
                sq = _unique_rows(square_rows(t.pset.rows))
                mod, _ = closure_absorb(sq, self.gen_rows, self.width,
                                        budget=self.budget,
                                        start_gens=nxt.gen_rows)
                t.rank = t.log2_order - mod.log2_size()
            elif nxt.pset is not None:
                # certified term: rank of seed images over ⟨next, seed²⟩
                seeds = t.gen_rows
                sq = _unique_rows(square_rows(seeds))
                mod, _ = closure_absorb(sq, self.gen_rows, self.width,
                                        budget=self.budget,
                                        start_gens=nxt.gen_rows)
                t.rank, _ = _coset_rank_mod(seeds, mod)
            else:
                # whole group over certified γ₂: abelianization rank
                t.rank = self._abelianization_log2()

    # -- dimension series ----------------------------------------------------

    def dim_term_set(self, n):
        """Enumerated D_n at this level (n >= 2 when γ₂ fits, else n >= 3)."""
        key = ("dim_set", n)
        if key in self._cache:
            return self._cache[key]
        if n < 2:
            raise ValueError("enumerated dim terms start at n=2")
        if n == 2:
            # generators are involutions: G² ≤ γ₂, so D₂ = γ₂
            pset = self.lcs_term_set(2)
            self._cache[("dim_gens", 2)] = self._cache[("lcs_gens", 2)]
            self._cache[key] = pset
            return pset
        prev_gens = self._dim_gen_list(n - 1)
        cand = [self._bracket_with_gens(prev_gens)]
        k = (n + 1) // 2
        if k >= 3 or (k == 2 and self._gamma2_enumerable()):
            cand.append(_unique_rows(square_rows(self.dim_term_set(k).rows)))
        else:
            cand.append(_unique_rows(square_rows(self._dim_gen_list(2))))
        pset, gen_list = closure_absorb(np.vstack(cand), self.gen_rows,
                                        self.width, budget=self.budget)
        if k == 2 and not self._gamma2_enumerable():
            pset, gen_list = self._absorb_gamma2_commutators(pset, gen_list)
        self._cache[key] = pset
        self._cache[("dim_gens", n)] = gen_list
        return pset

    def _absorb_gamma2_commutators(self, pset, gen_list):
        """Ensure [γ₂, γ₂] lands inside a candidate dim term when γ₂ itself
        was never enumerated: commutators of the γ₂ seeds with all of γ₃
        (plus the pairwise seed commutators) generate it."""
        seeds = self._dim_gen_list(2)
        gamma3 = self.lcs_term_set(3)
        extra = [self._pairwise_commutators(seeds)]
        inv = invert_rows(seeds)
        g3inv = invert_rows(gamma3.rows)
        for s, si in zip(seeds, inv):
            m = s[gamma3.rows]
            m = compose_rows(m, si)
            m = np.take_along_axis(m, g3inv.astype(np.intp), axis=1)
            m = _unique_rows(m)
            extra.append(m[~pset.contains(m)])
        extra = _unique_rows(np.vstack(extra))
        missing = extra[~pset.contains(extra)]
        if not len(missing):
            return pset, gen_list
        return closure_absorb(missing, self.gen_rows, self.width,
                              budget=self.budget, start_gens=gen_list)

    @staticmethod
    def _pairwise_commutators(rows):
        rows = np.atleast_2d(rows)
        inv = invert_rows(rows)
        out = []
        for i in range(len(rows)):
            for j in range(len(rows)):
                if i == j:
                    continue
                c = rows[i][rows[j]][inv[i]][inv[j]]
                out.append(c)
        return _unique_rows(np.array(out, np.uint8)) if out else rows[:0]

    def _dim_gen_list(self, n):
        if n == 2:
            if ("dim_gens", 2) not in self._cache:
                if self._gamma2_enumerable():
                    self.dim_term_set(2)
                else:
                    self._cache[("dim_gens", 2)] = _prepare_gens(
                        self._gamma2_seeds(), self.width)
        else:
            self.dim_term_set(n)
        return self._cache[("dim_gens", n)]

    def dim(self, depth):
        """Dimension (Jennings/Zassenhaus) series records down to D_depth."""
        key = ("dim", depth)
        if key in self._cache:
            return self._cache[key]
        terms = [SeriesTerm(1, self.order_log2(),
                            pset=self.enumerate()
                            if self._whole_enumerable() else None,
                            gen_rows=self.gen_rows,
                            certified=not self._whole_enumerable())]
        for n in range(2, depth + 1):
            if n == 2 and not self._gamma2_enumerable():
                log2 = self.order_log2() - self._abelianization_log2()
                terms.append(SeriesTerm(2, log2,
                                        gen_rows=self._dim_gen_list(2),
                                        certified=True))
                continue
            pset = self.dim_term_set(n)
            terms.append(SeriesTerm(n, pset.log2_size(), pset=pset,
                                    gen_rows=self._dim_gen_list(n)))
        # dimension sections are elementary abelian, so ranks are size gaps
        for t, nxt in zip(terms, terms[1:]):
            if t.pset is not None or t.certified:
                t.rank = t.log2_order - nxt.log2_order
        if terms and terms[0].certified:
            terms[0].rank = self._abelianization_log2()
        self._cache[key] = terms
        return terms

    # -- certified overgroup order -------------------------------------------

    def overgroup_certificate(self):
        """Order of the level-n overgroup quotient via its first-level
        stabilizer: stab₁ splits over K̃×K̃ into boundedly many cosets."""
        key = "over_cert"
        if key in self._cache:
            return self._cache[key]
        assert self.name == "overgroup"
        half_k = self.k_subgroup(at_level=self.level - 1)
        a = self.elems["a"]
        stab_elems = []
        for nm in "bcd":
            g = self.elems[nm]
            stab_elems += [g, a * g * a]
        stab_rows = rows_of(stab_elems, self.level)
        a_row = self.row(a)
        half_idx = half_k.rows.astype(np.intp)

        def key_of(row):
            # canonical key of the coset row·(K̃×K̃): minimal byte-rows of
            # the two independent half-cosets u∘K̃ and v∘K̃
            u, v = pair_halves(row[None, :])
            return (bytes(np.sort(_skeys(u[0][half_idx]))[0])
                    + b"|" + bytes(np.sort(_skeys(v[0][half_idx]))[0]))

        def span(seed_list, conj_rows):
            # subgroup of the coset group generated by the seeds' cosets,
            # closed under conjugation by conj_rows (given with inverses)
            found = {}
            frontier = []
            for s in seed_list:
                k = key_of(s)
                if k not in found:
                    found[k] = s
                    frontier.append(s)
            while frontier:
                fresh = []
                for r in frontier:
                    cands = [compose_rows(compose_rows(g, r), gi)
                             for g, gi in conj_rows]
                    for other in list(found.values()):
                        cands.append(compose_rows(r, other))
                        cands.append(compose_rows(other, r))
                    for cand in cands:
                        k = key_of(cand)
                        if k not in found:
                            found[k] = cand
                            fresh.append(cand)
                frontier = fresh
            return found

        conj_pairs = ([(g, gi) for g, gi in
                       zip(stab_rows, invert_rows(stab_rows))]
                      + [(a_row, a_row)])
        cosets = span([identity_row(self.width), *stab_rows], conj_pairs)
        n_cosets = len(cosets)
        assert n_cosets == 1 << (n_cosets.bit_length() - 1)
        log2_stab = (n_cosets.bit_length() - 1) + 2 * half_k.log2_size()

        x = self.x_elem()
        y = self.y_elem()
        k_image = span(list(rows_of([x, y], self.level)), conj_pairs)
        k_index = len(k_image)  # [K̃ : K̃×K̃] at this level
        cert = {
            "log2_order": 1 + log2_stab,
            "stab_cosets": n_cosets,
            "half_k_log2": half_k.log2_size(),
            "k_over_kxk": k_index,
            "log2_k": (k_index.bit_length() - 1) + 2 * half_k.log2_size(),
        }
        self._cache[key] = cert
        return cert

    # -- spec strings --------------------------------------------------------

    def subgroup_from_spec(self, spec):
        spec = spec.strip()
        if spec == "K":
            return self.k_subgroup()
        if spec == "T":
            return self.t_subgroup()
        if spec in ("KxK", "K x K"):
            return self.k_times_k()
        if spec.startswith("N_"):
            return self.n_subgroup(int(spec[2:]))
        if spec.startswith("gamma_"):
            return self.lcs_term_set(int(spec[6:]))
        if spec.startswith("dim_"):
            return self.dim_term_set(int(spec[4:]))
        if spec.startswith("rist(") and spec.endswith(")"):
            return self.rist_set(int(spec[5:-1]))
        if spec.startswith("stab(") and spec.endswith(")"):
            return self.stab_set(int(spec[5:-1]))
        raise ValueError(f"unknown subgroup spec {spec!r}")


# ---------------------------------------------------------------------------
# generic finite permutation groups (small; used for fixture groups)

class FinitePermGroup:
    """A small permutation group given by generator rows (any degree)."""

    def __init__(self, gen_rows, budget=None):
        self.gen_rows = np.atleast_2d(np.asarray(gen_rows, np.uint8))
        self.width = self.gen_rows.shape[1]
        self.budget = element_budget() if budget is None else budget
        self._enum = None

    def enumerate(self):
        if self._enum is None:
            self._enum = subgroup_closure(self.gen_rows, self.width,
                                          budget=self.budget)
        return self._enum

    @property
    def order(self):
        return self.enumerate().size

    def lcs_chain(self):
        """Full lower central series as PermSets, ending at the stable term."""
        chain = [self.enumerate()]
        while True:
            prev = chain[-1]
            cand = []
            ginv = invert_rows(self.gen_rows)
            pinv = invert_rows(prev.rows)
            for g, gi in zip(self.gen_rows, ginv):
                m = g[prev.rows]
                m = compose_rows(m, gi)
                m = np.take_along_axis(m, pinv.astype(np.intp), axis=1)
                cand.append(m)
            nxt, _ = closure_absorb(np.vstack(cand), self.gen_rows,
                                    self.width, budget=self.budget)
            if nxt.equal(prev):
                return chain
            chain.append(nxt)
            if nxt.size == 1:
                return chain

    def dim_chain(self, p=2):
        """Dimension series by the recursion D_n = [G,D_{n-1}]·D_{⌈n/p⌉}^p."""
        if p != 2:
            raise NotImplementedError("only p=2")
        chain = [self.enumerate()]
        ginv = invert_rows(self.gen_rows)
        while chain[-1].size > 1:
            prev = chain[-1]
            k = (len(chain) + 2) // 2  # ⌈(n)/2⌉ with n = len(chain)+1
            cand = []
            pinv = invert_rows(prev.rows)
            for g, gi in zip(self.gen_rows, ginv):
                m = g[prev.rows]
                m = compose_rows(m, gi)
                m = np.take_along_axis(m, pinv.astype(np.intp), axis=1)
                cand.append(m)
            cand.append(square_rows(chain[k - 1].rows))
            nxt, _ = closure_absorb(np.vstack(cand), self.gen_rows,
                                    self.width, budget=self.budget)
            if nxt.equal(prev):
                break
            chain.append(nxt)
        return chain

    def ball_sizes(self, radius):
        """|B(n)| in the (symmetrized) generator Cayley graph, n = 0..radius."""
        gens = _prepare_gens(self.gen_rows, self.width)
        ball = PermSet(identity_row(self.width))
        frontier = ball.rows
        sizes = [1]
        for _ in range(radius):
            cand = _unique_rows(frontier[:, gens].reshape(-1, self.width))
            new = cand[~ball.contains(cand)]
            ball = ball.merged_with(new)
            sizes.append(ball.size)
            frontier = new
        return sizes


def quaternion_group():
    """Q8 in its regular representation; generators i and j."""
    # elements indexed 1,-1,i,-i,j,-j,k,-k → 0..7
    names = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]
    idx = {n: k for k, n in enumerate(names)}

    def neg(n):
        return n[1:] if n.startswith("-") else "-" + n

    def mul(u, v):
        su = -1 if u.startswith("-") else 1
        sv = -1 if v.startswith("-") else 1
        bu, bv = u.lstrip("-"), v.lstrip("-")
        table = {("1", "1"): "1", ("i", "i"): "-1", ("j", "j"): "-1",
                 ("k", "k"): "-1", ("i", "j"): "k", ("j", "i"): "-k",
                 ("j", "k"): "i", ("k", "j"): "-i", ("k", "i"): "j",
                 ("i", "k"): "-j"}
        if bu == "1":
            out = bv
        elif bv == "1":
            out = bu
        else:
            out = table[(bu, bv)]
        if su * sv < 0:
            out = neg(out) if not out.startswith("-") else out[1:]
        return out

    rows = []
    for g in ("i", "j"):
        rows.append([idx[mul(g, names[t])] for t in range(8)])
    return FinitePermGroup(np.array(rows, np.uint8)), names


# ---------------------------------------------------------------------------
# group algebra dimension subgroups (ideal route, small groups, p=2)

class GroupAlgebraF2:
    """F₂[Q] for an enumerated permutation group Q with |Q| <= 2**10."""

    def __init__(self, pset, gen_rows):
        if pset.size > 1 << 10:
            raise ValueError("group too large for the ideal route")
        self.pset = pset
        self.n = pset.size
        self.gen_rows = np.atleast_2d(gen_rows)
        # right translation tables: index of q·g for each element index
        self._right = []
        for g in self.gen_rows:
            prod = compose_rows(pset.rows, g)
            self._right.append(self._indices(prod))
        self.identity_index = int(self._indices(
            identity_row(pset.width)[None, :])[0])

    def _indices(self, rows):
        q = _skeys(np.atleast_2d(rows))
        pos = np.searchsorted(self.pset.keys, q)
        assert (self.pset.keys[pos] == q).all()
        return pos

    def element_index(self, row):
        return int(self._indices(np.atleast_2d(row))[0])

    def _translate(self, vec, table):
        out = 0
        v = vec
        while v:
            b = v & -v
            i = b.bit_length() - 1
            out |= 1 << int(table[i])
            v ^= b
        return out

    @staticmethod
    def _echelon_insert(basis, vec):
        v = vec
        while v:
            top = v.bit_length() - 1
            if top in basis:
                v ^= basis[top]
            else:
                basis[top] = v
                return True
        return False

    def augmentation_power_basis(self, max_power=64):
        """Echelon bases of Δ, Δ², ... until the chain hits zero."""
        one = 1 << self.identity_index
        chains = []
        basis = {}
        for i in range(self.n):
            self._echelon_insert(basis, (1 << i) ^ one)
        chains.append(basis)
        while chains[-1]:
            prev = chains[-1]
            nxt = {}
            work = list(prev.values())
            seen = set()
            while work:
                v = work.pop()
                for table in self._right:
                    w = self._translate(v, table) ^ v  # v·(g−1) = v·g − v
                    if self._echelon_insert(nxt, w):
                        work.append(w)
            # close the span under right translation so it is an ideal
            stable = False
            while not stable:
                stable = True
                for piv in list(nxt.values()):
                    for table in self._right:
                        w = self._translate(piv, table)
                        if self._echelon_insert(nxt, w):
                            stable = False
            chains.append(nxt)
            if len(chains) > max_power:
                raise RuntimeError("augmentation chain did not terminate")
        return chains

    def augmentation_quotient_dims(self):
        """a_n = dim Δⁿ/Δⁿ⁺¹ for n = 0, 1, ... (a_0 = 1)."""
        chains = self.augmentation_power_basis()
        dims = [self.n] + [len(c) for c in chains]
        return [dims[i] - dims[i + 1] for i in range(len(dims) - 1)]

    def dimension_subgroups(self):
        """G_n = {g : g−1 ∈ Δⁿ} for n = 1, ... down to the trivial group."""
        chains = self.augmentation_power_basis()
        one = 1 << self.identity_index
        out = []
        for basis in chains:
            rows = []
            for i in range(self.n):
                v = (1 << i) ^ one
                w = v
                while w:
                    top = w.bit_length() - 1
                    if top not in basis:
                        break
                    w ^= basis[top]
                if not w:
                    rows.append(self.pset.rows[i])
            out.append(PermSet(np.array(rows, np.uint8)))
            if len(rows) == 1:
                break
        return out


# ---------------------------------------------------------------------------
# chain verification

def _coset_reps(aset, cset):
    """One representative per left coset g∘C inside A (C ≤ A required)."""
    if cset.size == 1:
        return aset.rows
    keys = _skeys(aset.rows)
    order = np.argsort(keys, kind="stable")
    covered = set()
    reps = []
    for idx in order:
        if bytes(keys[idx]) in covered:
            continue
        reps.append(aset.rows[idx])
        covered.update(_skeys(compose_rows(aset.rows[idx],
                                           cset.rows)).tolist())
        if len(reps) * cset.size >= aset.size:
            break
    return np.array(reps, dtype=np.uint8)


def _brackets_inside(arows, brows, cset):
    """True iff [a,b] ∈ C for all a∈arows, b∈brows."""
    binv = invert_rows(brows)
    for a in arows:
        ai = np.argsort(a).astype(np.uint8)
        aba = compose_rows(compose_rows(a, brows), ai)
        if not cset.contains_all(compose_rows(aba, binv)):
            return False
    return True


def verify_n_series(chain, gen_rows, p=2, require_power_step=True):
    """Check that an enumerated descending chain is an N-series:
    [G_m, G_n] ≤ G_{m+n} for all m+n within the chain, each term normal,
    and (when require_power_step) G_i^p ≤ G_{pi}.  Returns a report dict;
    raises nothing.  chain[0] is the whole group."""
    report = {"descending": True, "brackets": True, "powers": True,
              "normal": True, "failures": []}
    width = chain[0].width
    gens = _prepare_gens(gen_rows, width)
    ginv = invert_rows(gens)

    for i in range(1, len(chain)):
        if not chain[i].issubset(chain[i - 1]):
            report["descending"] = False
            report["failures"].append(f"term {i + 1} not inside term {i}")
    for i, pset in enumerate(chain, start=1):
        for g, gi in zip(gens, ginv):
            conj = compose_rows(g[pset.rows], gi)
            if not pset.contains_all(conj):
                report["normal"] = False
                report["failures"].append(f"term {i} not normalized")
                break
    if report["descending"] and report["normal"]:
        # With every term normal, commutators and p-th powers only move
        # within cosets of the target, so coset representatives suffice.
        for m in range(1, len(chain)):
            for n in range(m, len(chain) - m + 1):
                tgt = chain[m + n - 1]
                am = _coset_reps(chain[m - 1], tgt)
                an = am if n == m else _coset_reps(chain[n - 1], tgt)
                if not _brackets_inside(am, an, tgt):
                    report["brackets"] = False
                    report["failures"].append(
                        f"[term {m}, term {n}] escapes term {m + n}")
        if require_power_step:
            for i in range(1, len(chain) // p + 1):
                tgt = chain[p * i - 1]
                reps = _coset_reps(chain[i - 1], tgt)
                pw = reps
                for _ in range(p - 1):
                    pw = compose_rows(pw, reps)
                if not tgt.contains_all(pw):
                    report["powers"] = False
                    report["failures"].append(
                        f"term {i} {p}-th powers escape term {p * i}")
    report["ok"] = (report["descending"] and report["brackets"]
                    and report["powers"] and report["normal"])
    return report
