"""Graded Lie algebras of descending central chains, with Cayley graphs.

A descending chain of finite permutation groups H_1 >= H_2 >= ... with
elementary abelian sections carries a graded Lie ring structure on
L = (+)_n H_n/H_{n+1}: the bracket of cosets is induced by the group
commutator, and for restricted (dimension-style) chains the p-th power
map descends to a Frobenius operation L_n -> L_{pn}.  This module builds
the structure tables for such a chain, derives the labelled Cayley graph
of the action of a degree-one generating set S, renders it as DOT or
JSON, and compares the computed edge labels against closed-form label
tables and substitution-word rules for the two built-in tree groups.

Basis representatives for the built-in groups follow the standard names:
within degree n the algebra of either built-in group is spanned by
classes of products of copies of x = [a,b] planted on a tree level
(`x_m^r`), copies of y = [a,d] (`y_m^r`, overgroup only), and copies of
x^2 (`z_m^r`), together with a handful of small-degree classes (a, b, d,
x, [a,d], ...).  Candidate representatives whose class vanishes in the
finite quotient are dropped; degrees where the surviving names fail to
span the computed section fall back to generic enumerated representatives
and are excluded from label matching ("out of range").
"""

import numpy as np

from .finite_quotients import (GroupContext, compose_rows, identity_row,
                               invert_rows, plant_row, quaternion_group,
                               row_of, verify_n_series)

__all__ = [
    "GradedLieAlgebra", "LieCayleyGraph", "BasisVector",
    "LieChainError", "DecompositionError",
    "build_graded_lie", "cayley_graph", "export_dot", "export_json",
    "sigma_substitute", "match_theorem_labels", "check_invariants",
    "grigorchuk_lie", "overgroup_lie", "quaternion_lie",
    "KNOWN_LABEL_DISCREPANCIES",
]

_VERIFY_SIZE_CAP = 1 << 12      # full N-series verification below this order


class LieChainError(ValueError):
    """The input chain cannot carry the requested algebra."""


class DecompositionError(RuntimeError):
    """An element failed to decompose in the expected graded component."""


# ---------------------------------------------------------------------------
# helpers

def _bit_reverse(v, n):
    out = 0
    for _ in range(n):
        out = out << 1 | v & 1
        v >>= 1
    return out


def _as_row(elem, width):
    """Coerce a permutation row or tree automorphism to a width-wide row."""
    if hasattr(elem, "perm_at_level"):
        level = width.bit_length() - 1
        if 1 << level != width:
            raise ValueError("tree automorphisms need a power-of-two width")
        return row_of(elem, level)
    row = np.asarray(elem, np.uint8)
    if row.shape != (width,):
        raise ValueError(f"row acts on {row.shape} points, chain width is "
                         f"{width}")
    return row


def _comm(u, v):
    """Row of the commutator u v u^-1 v^-1."""
    uv = compose_rows(u, v)
    return compose_rows(uv, invert_rows(compose_rows(v, u)[None, :])[0])


class BasisVector:
    """One basis class of a graded component."""

    __slots__ = ("degree", "index", "name", "word", "row", "source", "role")

    def __init__(self, degree, index, name, word, row, source, role=None):
        self.degree = degree
        self.index = index          # 1-based position within the degree
        self.name = name
        self.word = word
        self.row = row
        self.source = source        # "named" | "generic"
        self.role = role            # (chain_tag, m, r) or None

    def __repr__(self):
        return f"BasisVector({self.degree},{self.index},{self.name!r})"


# ---------------------------------------------------------------------------
# graded Lie algebra

class GradedLieAlgebra:
    """Structure tables of (+)_n H_n/H_{n+1} for a finite chain.

    basis[n] is the ordered list of BasisVector for degree n; bracket maps
    ((i,j),(k,l)) -> coordinate tuple of [l_{i,j}, l_{k,l}] in degree i+k;
    power maps (i,j) -> coordinates of l_{i,j}^p in degree p*i (restricted
    chains only).  All coordinates are reported in {0, ..., p-1}.
    """

    __slots__ = ("p", "restricted", "degree_limit", "ranks", "basis",
                 "bracket", "power", "named_degrees", "dropped", "meta",
                 "_psets", "_tables", "_graph")

    def __init__(self, p, restricted, degree_limit, ranks, basis, psets,
                 meta):
        self.p = p
        self.restricted = restricted
        self.degree_limit = degree_limit
        self.ranks = ranks                  # degree -> rank
        self.basis = basis                  # degree -> [BasisVector]
        self.named_degrees = set()
        self.dropped = {}                   # degree -> tuple of lost names
        self.meta = dict(meta or {})
        self._psets = psets                 # degree -> PermSet or None
        self._tables = {}
        self._graph = None
        self.bracket = {}
        self.power = {}

    # -- coordinates ---------------------------------------------------------

    def _subset_table(self, degree):
        """Inverted subset-product rows of the degree basis (gray code)."""
        if degree not in self._tables:
            vecs = self.basis[degree]
            width = self._psets[degree + 1].width
            prods = np.empty((1 << len(vecs), width), np.uint8)
            prods[0] = identity_row(width)
            for mask in range(1, 1 << len(vecs)):
                bit = (mask & -mask).bit_length() - 1
                prods[mask] = compose_rows(prods[mask ^ 1 << bit],
                                           vecs[bit].row)
            self._tables[degree] = invert_rows(prods)
        return self._tables[degree]

    def decompose(self, row, degree):
        """Coordinates of the class of `row` in basis[degree].

        Requires row in H_degree; raises DecompositionError when the class
        is not in the span of the degree basis (which, for brackets and
        powers of basis elements, would mean the chain is not central
        enough for the graded structure)."""
        if degree > self.degree_limit:
            raise ValueError(f"degree {degree} beyond limit "
                             f"{self.degree_limit}")
        nxt = self._psets[degree + 1]
        if nxt is None:
            raise LieChainError(f"degree-{degree} classes cannot be "
                                f"decomposed: H_{degree + 1} is not "
                                f"enumerated")
        residues = compose_rows(self._subset_table(degree), row)
        hits = np.flatnonzero(nxt.contains(residues))
        if len(hits) != 1:
            raise DecompositionError(
                f"class does not decompose uniquely in degree {degree} "
                f"({len(hits)} matches)")
        mask = int(hits[0])
        return tuple(mask >> t & 1 for t in range(len(self.basis[degree])))

    def vertex(self, name):
        """The BasisVector carrying `name`, or None."""
        for vecs in self.basis.values():
            for v in vecs:
                if v.name == name:
                    return v
        return None

    def vertex_by_role(self, role):
        for vecs in self.basis.values():
            for v in vecs:
                if v.role == role:
                    return v
        return None

    def total_dimension(self):
        return sum(len(v) for v in self.basis.values())


# ---------------------------------------------------------------------------
# chain normalization and basis construction

def _normalize_chain(chain, degree_limit):
    """Chain terms -> (psets, log2s, ranks) indexed by degree 1..limit+1.

    Accepts SeriesTerm-like records (attributes pset/log2_order/rank) or
    bare PermSets.  A chain ending at the trivial group is extended with
    trivial terms as needed."""
    psets, log2s, ranks = {}, {}, {}
    for d, term in enumerate(chain, start=1):
        if hasattr(term, "pset"):
            psets[d] = term.pset
            log2s[d] = term.log2_order
            ranks[d] = term.rank
        else:
            psets[d] = term
            log2s[d] = term.log2_size()
            ranks[d] = None
    top = len(chain)
    if top < degree_limit + 1:
        last = psets.get(top)
        if last is None or last.size != 1:
            raise LieChainError(
                f"degree limit {degree_limit} needs chain terms through "
                f"H_{degree_limit + 1}, got {top}")
        for d in range(top + 1, degree_limit + 2):
            psets[d], log2s[d], ranks[d] = last, 0, 0
    for d in range(1, degree_limit + 1):
        if ranks.get(d) is None:
            ranks[d] = log2s[d] - log2s[d + 1]
    # brackets and powers land in degrees >= 2, whose decompositions read
    # the *next* term: H_3 .. H_{limit+1} must be enumerated.  H_1 and H_2
    # may be certified-only (order known, rows not enumerated).
    for d in range(3, degree_limit + 2):
        if psets[d] is None:
            raise LieChainError(f"chain term H_{d} is not enumerated")
    return psets, log2s, ranks


def _check_chain(psets, log2s, degree_limit, gen_rows, restricted, p):
    """Descending + elementary-section checks; full N-series verification
    for small fully enumerated chains."""
    for d in range(1, degree_limit + 1):
        lo, hi = psets.get(d), psets[d + 1]
        if lo is None or hi is None:
            continue
        if not hi.issubset(lo):
            raise LieChainError(f"H_{d + 1} is not contained in H_{d}")
        pw = lo.rows
        for _ in range(p - 1):
            pw = compose_rows(pw, lo.rows)
        if not hi.contains_all(pw):
            raise LieChainError(
                f"section H_{d}/H_{d + 1} is not elementary abelian "
                f"(p-th powers escape)")
    head = psets.get(1)
    if (gen_rows is not None and head is not None
            and head.size <= _VERIFY_SIZE_CAP
            and all(psets[d] is not None
                    for d in range(1, degree_limit + 2))):
        cut = [psets[d] for d in range(1, degree_limit + 2)]
        rep = verify_n_series(cut, gen_rows, p=p,
                              require_power_step=restricted)
        if not rep["ok"]:
            raise LieChainError(f"chain is not an N-series: "
                                f"{rep['failures']}")


def _candidate_degree(row, psets, degree_limit):
    """Deepest degree whose term contains the row (enumerated terms only)."""
    deg = None
    for d in range(1, degree_limit + 2):
        pset = psets.get(d)
        if pset is None:
            deg = d          # head terms without enumeration contain all
            continue
        if pset.contains(row[None, :])[0]:
            deg = d
        else:
            break
    return deg


def _build_basis(psets, ranks, degree_limit, candidates, width):
    """Per-degree bases from named candidates, generic fallback otherwise.

    Returns (basis dict, named_degrees set, dropped dict)."""
    buckets = {d: [] for d in range(1, degree_limit + 1)}
    dropped = {}
    for cand in candidates or []:
        name, row, deg, word, role = cand
        row = np.asarray(row, np.uint8)
        if deg is None:
            deg = _candidate_degree(row, psets, degree_limit)
            if deg is None:
                raise LieChainError(f"candidate {name!r} is not in the chain")
        if deg > degree_limit:
            continue
        pset = psets.get(deg)
        if pset is not None and not pset.contains(row[None, :])[0]:
            raise LieChainError(f"candidate {name!r} is not in H_{deg}")
        nxt = psets.get(deg + 1)
        if nxt is not None and nxt.contains(row[None, :])[0]:
            dropped.setdefault(deg, []).append(name)   # class vanishes here
            continue
        buckets[deg].append((name, row, word, role))

    basis, named = {}, set()
    for d in range(1, degree_limit + 1):
        rank = ranks[d]
        cands = buckets[d]
        if rank == 0:
            basis[d] = []
            if not cands:
                named.add(d)
            continue
        if psets.get(d + 1) is None:
            # certified-only next term: independence is not re-testable
            # here, so exactly `rank` candidates must be supplied.
            if len(cands) != rank:
                raise LieChainError(
                    f"degree {d} sits under a non-enumerated term and "
                    f"needs exactly {rank} named candidates")
            vecs = cands
        else:
            vecs = _independent_prefix(cands, psets[d + 1], rank, width)
        if vecs is not None and len(vecs) == rank:
            basis[d] = [BasisVector(d, j + 1, nm, wd, rw, "named", rl)
                        for j, (nm, rw, wd, rl) in enumerate(vecs)]
            named.add(d)
        else:
            basis[d] = _generic_basis(psets, d, rank, width)
    return basis, named, {d: tuple(v) for d, v in dropped.items()}


def _independent_prefix(cands, next_pset, rank, width):
    """The candidate list itself when it is independent mod next_pset and
    has exactly `rank` members; None otherwise."""
    if len(cands) != rank:
        return None
    rows = np.array([c[1] for c in cands], np.uint8)
    prods = np.empty((1 << rank, width), np.uint8)
    prods[0] = identity_row(width)
    for mask in range(1, 1 << rank):
        bit = (mask & -mask).bit_length() - 1
        prods[mask] = compose_rows(prods[mask ^ 1 << bit], rows[bit])
    if next_pset.contains(prods[1:]).any():
        return None
    return cands


def _generic_basis(psets, degree, rank, width):
    """Greedy coset representatives of H_degree/H_{degree+1} from the
    enumerated term, in its canonical row order."""
    pset = psets.get(degree)
    if pset is None:
        raise LieChainError(
            f"degree {degree} needs named representatives (term H_{degree} "
            f"is not enumerated)")
    nxt = psets[degree + 1]
    reps = []
    for row in pset.rows:
        prods = [identity_row(width)]
        for r in reps:
            prods += [compose_rows(q, r) for q in prods]
        res = compose_rows(invert_rows(np.array(prods, np.uint8)), row)
        if not nxt.contains(res).any():
            reps.append(row)
            if len(reps) == rank:
                break
    if len(reps) != rank:
        raise LieChainError(f"could not find {rank} independent classes in "
                            f"degree {degree}")
    return [BasisVector(degree, j + 1, f"g{degree}_{j + 1}",
                        f"g{degree}_{j + 1}", r, "generic")
            for j, r in enumerate(reps)]


def build_graded_lie(chain, degree_limit, *, candidates=None, gen_rows=None,
                     restricted=False, p=2, meta=None):
    """Graded Lie algebra of a descending central chain.

    chain: list of SeriesTerm-like records or PermSets, H_1 first.  The
    sections H_n/H_{n+1} must be elementary abelian p-groups; for chains
    of order <= 2^12 with every term enumerated the full N-series
    contract is verified up front, and for larger chains every bracket
    and power computed for the tables certifies its own containment.
    candidates: optional ordered list of (name, row, degree|None, word,
    role|None) naming preferred coset representatives; degree None is
    computed from the chain.  restricted: also build the p-power table
    (the chain must then satisfy H_n^p <= H_{pn}).
    """
    if p != 2:
        raise NotImplementedError("only p = 2 chains are supported")
    if degree_limit < 1:
        raise ValueError("degree_limit must be >= 1")
    psets, log2s, ranks = _normalize_chain(chain, degree_limit)
    width = psets[degree_limit + 1].width
    _check_chain(psets, log2s, degree_limit, gen_rows, restricted, p)
    basis, named, dropped = _build_basis(psets, ranks, degree_limit,
                                         candidates, width)
    L = GradedLieAlgebra(p, restricted, degree_limit,
                         {d: ranks[d] for d in range(1, degree_limit + 1)},
                         basis, psets, meta)
    L.named_degrees = named
    L.dropped = dropped

    for i in range(1, degree_limit):
        for k in range(i, degree_limit - i + 1):
            for u in basis[i]:
                for v in basis[k]:
                    c = L.decompose(_comm(u.row, v.row), i + k)
                    L.bracket[((i, u.index), (k, v.index))] = c
                    if k != i:
                        cc = L.decompose(_comm(v.row, u.row), i + k)
                        L.bracket[((k, v.index), (i, u.index))] = cc
    if restricted:
        for i in range(1, degree_limit // p + 1):
            for u in basis[i]:
                sq = compose_rows(u.row, u.row)
                L.power[(i, u.index)] = L.decompose(sq, p * i)
    return L


# ---------------------------------------------------------------------------
# Cayley graph

class LieCayleyGraph:
    """Labelled Cayley graph of the S-action on a graded Lie algebra.

    Vertices are (degree, index) pairs for the algebra basis; an edge
    (i,j) -> (i+1,k) labelled s of weight w records the l_{i+1,k}
    coordinate w != 0 of [l_{i,j}, s]; power edges (i,j) -> (pi,k) record
    the coordinates of l_{i,j}^p.  Zero-weight edges are absent.
    """

    __slots__ = ("algebra", "s_names", "s_coords", "edges", "power_edges",
                 "connected", "warnings")

    def __init__(self, algebra, s_names, s_coords, edges, power_edges,
                 connected, warnings):
        self.algebra = algebra
        self.s_names = s_names
        self.s_coords = s_coords
        self.edges = edges              # (vi, vk) -> {label: weight}
        self.power_edges = power_edges  # (vi, vk) -> weight
        self.connected = connected
        self.warnings = warnings

    def vertices(self):
        return [(d, v.index) for d in sorted(self.algebra.basis)
                for v in self.algebra.basis[d]]

    def labels_between(self, from_name, to_name):
        """Set of labels on the edge between two named vertices; empty set
        when either name is absent or the edge is missing; None when a
        name is absent."""
        a = self.algebra.vertex(from_name)
        b = self.algebra.vertex(to_name)
        if a is None or b is None:
            return None
        key = ((a.degree, a.index), (b.degree, b.index))
        return set(self.edges.get(key, ()))

    def has_power_edge(self, from_name, to_name):
        a = self.algebra.vertex(from_name)
        b = self.algebra.vertex(to_name)
        if a is None or b is None:
            return None
        return ((a.degree, a.index), (b.degree, b.index)) in self.power_edges


def cayley_graph(L, S):
    """Cayley graph of the degree-one set S acting on L by bracket.

    S: mapping name -> element/row, or iterable of (name, element/row)
    pairs.  Every member must have a nonzero degree-one class (duplicates
    and dependent members are fine); anything else is rejected.
    """
    width = L._psets[L.degree_limit + 1].width
    pairs = list(S.items()) if hasattr(S, "items") else list(S)
    s_names, s_coords, s_rows = [], {}, {}
    deg1 = {bytes(v.row): v.index for v in L.basis[1]}
    for name, elem in pairs:
        row = _as_row(elem, width)
        hit = deg1.get(bytes(row))
        if hit is not None:
            coords = tuple(1 if v.index == hit else 0 for v in L.basis[1])
        else:
            pset = L._psets.get(1)
            if pset is not None and not pset.contains(row[None, :])[0]:
                raise ValueError(f"S member {name!r} is not in the chain")
            if L._psets[2] is None:
                raise LieChainError(
                    f"S member {name!r} is not a degree-one basis "
                    f"representative and H_2 is not enumerated")
            if L._psets[2].contains(row[None, :])[0]:
                raise ValueError(f"S member {name!r} has zero degree-one "
                                 f"class: S must sit inside degree 1")
            coords = L.decompose(row, 1)
        if not any(coords):
            raise ValueError(f"S member {name!r} has zero degree-one class: "
                             f"S must sit inside degree 1")
        s_names.append(name)
        s_coords[name] = coords
        s_rows[name] = row

    edges, power_edges = {}, {}
    for d in range(1, L.degree_limit):
        for u in L.basis[d]:
            for name in s_names:
                c = L.decompose(_comm(u.row, s_rows[name]), d + 1)
                for v, w in zip(L.basis[d + 1], c):
                    if w:
                        key = ((d, u.index), (d + 1, v.index))
                        edges.setdefault(key, {})[name] = w
    if L.restricted:
        for (i, j), coords in L.power.items():
            for v, w in zip(L.basis[L.p * i], coords):
                if w:
                    power_edges[((i, j), (L.p * i, v.index))] = w

    verts = [(d, v.index) for d in L.basis for v in L.basis[d]]
    adj = {v: set() for v in verts}
    for (a, b) in list(edges) + list(power_edges):
        adj[a].add(b)
        adj[b].add(a)
    seen = set(v for v in verts if v[0] == 1)
    frontier = list(seen)
    while frontier:
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    connected = len(seen) == len(verts)
    warnings = [] if connected else [
        f"S does not generate: {len(verts) - len(seen)} vertices unreachable"]
    return LieCayleyGraph(L, tuple(s_names), s_coords, edges, power_edges,
                          connected, warnings)


# ---------------------------------------------------------------------------
# serialization

def export_dot(graph):
    """Deterministic DOT text: vertices d<i>_<j> carrying word attributes,
    solid labelled bracket edges, dashed power edges."""
    L = graph.algebra
    out = ["digraph lie_cayley {", "  rankdir=LR;", "  node [shape=box];"]
    for d in sorted(L.basis):
        for v in L.basis[d]:
            out.append(f'  d{d}_{v.index} [label="{v.name}", '
                       f'word="{v.word}"];')
    order = {n: t for t, n in enumerate(graph.s_names)}
    for (a, b) in sorted(graph.edges):
        labels = sorted(graph.edges[(a, b)], key=lambda n: order.get(n, 99))
        out.append(f'  d{a[0]}_{a[1]} -> d{b[0]}_{b[1]} '
                   f'[label="{",".join(labels)}"];')
    for (a, b) in sorted(graph.power_edges):
        out.append(f'  d{a[0]}_{a[1]} -> d{b[0]}_{b[1]} [style=dashed];')
    out.append("}")
    return "\n".join(out) + "\n"


def export_json(graph):
    """JSON-ready dict: vertices, labelled edges, power edges."""
    L = graph.algebra
    verts = [{"degree": d, "index": v.index, "word": v.word}
             for d in sorted(L.basis) for v in L.basis[d]]
    order = {n: t for t, n in enumerate(graph.s_names)}
    edges = []
    for (a, b) in sorted(graph.edges):
        for label in sorted(graph.edges[(a, b)],
                            key=lambda n: order.get(n, 99)):
            edges.append({"from": [a[0], a[1]], "to": [b[0], b[1]],
                          "label": label,
                          "weight": graph.edges[(a, b)][label]})
    power = [{"from": [a[0], a[1]], "to": [b[0], b[1]],
              "weight": graph.power_edges[(a, b)]}
             for (a, b) in sorted(graph.power_edges)]
    return {"vertices": verts, "edges": edges, "power_edges": power}


# ---------------------------------------------------------------------------
# substitution words

_SIGMA = {
    "sigma": {"a": ("a", frozenset("bc"), "a"),
              "b": ("d",), "c": ("b",), "d": ("b",)},
    "sigma_tilde": {"a": ("a", "b", "a"),
                    "b": ("d",), "c": ("b",), "d": ("b",)},
}


def _parse_word(word):
    tokens, t = [], 0
    while t < len(word):
        ch = word[t]
        if ch == "{":
            end = word.find("}", t)
            if end < 0:
                raise ValueError(f"unbalanced brace in {word!r}")
            letters = [p for p in word[t + 1:end].split("|") if p]
            for p in letters:
                if p not in "abcd" or len(p) != 1:
                    raise ValueError(f"letter {p!r} outside alphabet")
            tokens.append(frozenset(letters))
            t = end + 1
        elif ch in "abcd":
            tokens.append(ch)
            t += 1
        else:
            raise ValueError(f"letter {ch!r} outside alphabet")
    return tokens


def _render_word(tokens):
    out = []
    for tok in tokens:
        if isinstance(tok, frozenset):
            out.append("{" + "|".join(sorted(tok)) + "}")
        else:
            out.append(tok)
    return "".join(out)


def _substitute_tokens(tokens, table):
    out = []
    for tok in tokens:
        if isinstance(tok, frozenset):
            images = set()
            for ch in tok:
                img = table[ch]
                if len(img) != 1 or isinstance(img[0], frozenset):
                    raise ValueError(
                        f"cannot substitute into a choice set: the image "
                        f"of {ch!r} is not a single letter")
                images.add(img[0])
            out.append(frozenset(images))
        else:
            out.extend(table[tok])
    return out


def sigma_substitute(word, which="sigma", iterations=1):
    """Apply the substitution system `which` to a word over a, b, c, d and
    braced choice sets like {b|c}, `iterations` times."""
    if which not in _SIGMA:
        raise ValueError(f"unknown substitution {which!r}")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    tokens = _parse_word(word)
    for _ in range(iterations):
        tokens = _substitute_tokens(tokens, _SIGMA[which])
    return _render_word(tokens)


# ---------------------------------------------------------------------------
# built-in groups: named representatives

def _context(name, level, ctx, budget):
    if ctx is not None:
        if ctx.name != name or ctx.level != level:
            raise ValueError(f"context is {ctx.name}@{ctx.level}, "
                             f"needed {name}@{level}")
        return ctx
    return GroupContext.from_name(name, level, budget=budget)


def _plant_product(base_row, m, r, level, width):
    """Row of the product of base copies at the level-m vertices matching
    the bit pattern of r (copy at vertex v when rev(v) is a submask)."""
    out = identity_row(width)
    e = r
    while True:
        out = compose_rows(out, plant_row(base_row, _bit_reverse(e, m), m,
                                          width))
        if e == 0:
            break
        e = (e - 1) & r
    return out


def _theorem_candidates(ctx, series, limit):
    """Named coset representatives for a built-in group's chain."""
    over = ctx.name == "overgroup"
    level, width = ctx.level, ctx.width
    a, b, c, d = (ctx.elems[n] for n in "abcd")
    x = ctx.x_elem()
    y = ctx.y_elem()
    x2 = x * x
    cands = []
    if over:
        cands += [("a", ctx.row(a), 1, "a", None),
                  ("b", ctx.row(b), 1, "b", None),
                  ("c", ctx.row(c), 1, "c", None),
                  ("d", ctx.row(d), 1, "d", None)]
        deg2 = [("x", ctx.row(x), 2, "[a,b]", ("x", 0, 0)),
                ("y", ctx.row(y), 2, "[a,d]", ("y", 0, 0)),
                ("[a,c]", ctx.row(a * c * a * c), 2, "[a,c]", None)]
    else:
        cands += [("a", ctx.row(a), 1, "a", None),
                  ("b", ctx.row(b), 1, "b", None),
                  ("d", ctx.row(d), 1, "d", None)]
        deg2 = [("x", ctx.row(x), 2, "[a,b]", ("x", 0, 0)),
                ("[a,d]", ctx.row(a * d * a * d), 2, "[a,d]", ("y", 0, 0))]
    cands += deg2

    def plant_cands(tag, elem, elem_word, z_style):
        rows = {}
        for m in range(1, level):
            base = row_of(elem, level - m)
            for r in range(1 << m):
                if z_style == "none":
                    deg = (1 << m) + 1 + r
                elif z_style == "lcs":
                    deg = (1 << (m + 1)) + 1 + r
                else:
                    deg = (1 << (m + 1)) + 2 + 2 * r
                if deg > limit:
                    break
                word = "*".join(f"{elem_word}@{v:0{m}b}"
                                for v in sorted(
                                    _bit_reverse(e, m)
                                    for e in _submasks(r)))
                rows[(m, r)] = (f"{tag}_{m}^{r}",
                                _plant_product(base, m, r, level, width),
                                deg, word, (tag, m, r))
        return [rows[k] for k in sorted(rows)]

    x_c = plant_cands("x", x, "[a,b]", "none")
    y_c = plant_cands("y", y, "[a,d]", "none") if over else []
    z_deg0 = 3 if series == "lcs" else 4
    z_c = []
    if z_deg0 <= limit:
        z_c.append(("x^2", ctx.row(x2), z_deg0, "[a,b]^2", ("z", 0, 0)))
    z_c += plant_cands("z", x2, "[a,b]^2", series)
    keyed = sorted(x_c + y_c + z_c,
                   key=lambda cand: (cand[2], "xyz".index(cand[4][0])))
    return cands + keyed


def _submasks(r):
    e = r
    while True:
        yield e
        if e == 0:
            return
        e = (e - 1) & r


def grigorchuk_lie(series="lcs", level=5, degree_limit=9, ctx=None,
                   budget=None):
    """Graded Lie algebra of the first built-in group's chain at a level."""
    return _builtin_lie("grigorchuk", series, level, degree_limit, ctx,
                        budget)


def overgroup_lie(series="lcs", level=5, degree_limit=9, ctx=None,
                  budget=None):
    """Graded Lie algebra of the overgroup's chain at a level."""
    return _builtin_lie("overgroup", series, level, degree_limit, ctx,
                        budget)


def _builtin_lie(name, series, level, degree_limit, ctx, budget):
    if series not in ("lcs", "dim"):
        raise ValueError(f"series must be 'lcs' or 'dim', got {series!r}")
    ctx = _context(name, level, ctx, budget)
    terms = ctx.lcs(degree_limit + 1) if series == "lcs" \
        else ctx.dim(degree_limit + 1)
    cands = _theorem_candidates(ctx, series, degree_limit)
    L = build_graded_lie(terms, degree_limit, candidates=cands,
                         gen_rows=ctx.gen_rows,
                         restricted=(series == "dim"),
                         meta={"group": name, "series": series,
                               "level": level,
                               "generators": {n: ctx.row(ctx.elems[n])
                                              for n in "abcd"}})
    return L


def quaternion_lie():
    """Restricted algebra of the eight-element quaternion group's
    dimension chain, with named basis i, j, -1."""
    q, _names = quaternion_group()
    chain = q.dim_chain()
    i_row, j_row = (np.asarray(r, np.uint8) for r in q.gen_rows)
    m1 = compose_rows(i_row, i_row)
    cands = [("i", i_row, None, "i", None),
             ("j", j_row, None, "j", None),
             ("-1", m1, None, "-1", None)]
    return build_graded_lie(chain, 2, candidates=cands, gen_rows=q.gen_rows,
                            restricted=True,
                            meta={"group": "quaternion", "series": "dim",
                                  "generators": {"i": i_row, "j": j_row}})


# ---------------------------------------------------------------------------
# invariants

def check_invariants(L):
    """Antisymmetry, Jacobi on triples, and (restricted) power rules,
    checked on every basis combination within the degree limit."""
    report = {"alternating": True, "jacobi": 0, "jacobi_ok": True,
              "power_pairs": 0, "power_ok": True, "failures": []}
    verts = [(d, v) for d in sorted(L.basis) for v in L.basis[d]]
    zero = {d: tuple(0 for _ in L.basis[d]) for d in L.basis}

    for d, v in verts:
        if 2 * d <= L.degree_limit:
            if L.bracket[((d, v.index), (d, v.index))] != zero[2 * d]:
                report["alternating"] = False
                report["failures"].append(f"[{v.name},{v.name}] != 0")
    for (i, u) in verts:
        for (k, v) in verts:
            if i + k <= L.degree_limit:
                uv = L.bracket[((i, u.index), (k, v.index))]
                vu = L.bracket[((k, v.index), (i, u.index))]
                if uv != vu:        # char 2: -[v,u] = [v,u]
                    report["alternating"] = False
                    report["failures"].append(
                        f"[{u.name},{v.name}] != [{v.name},{u.name}]")

    for (i, u) in verts:
        for (k, v) in verts:
            for (l, w) in verts:
                if i + k + l > L.degree_limit:
                    continue
                total = [0] * len(L.basis[i + k + l])
                for (p1, p2, p3) in ((u, v, w), (v, w, u), (w, u, v)):
                    c = L.decompose(
                        _comm(_comm(p1.row, p2.row), p3.row),
                        i + k + l)
                    total = [(s + t) % L.p for s, t in zip(total, c)]
                report["jacobi"] += 1
                if any(total):
                    report["jacobi_ok"] = False
                    report["failures"].append(
                        f"jacobi fails on {u.name},{v.name},{w.name}")

    if L.restricted:
        for (i, u) in verts:
            for (k, v) in verts:
                if i + L.p * k > L.degree_limit:
                    continue
                lhs = L.decompose(
                    _comm(u.row, compose_rows(v.row, v.row)), i + L.p * k)
                rhs = L.decompose(
                    _comm(_comm(u.row, v.row), v.row), i + L.p * k)
                report["power_pairs"] += 1
                if lhs != rhs:
                    report["power_ok"] = False
                    report["failures"].append(
                        f"ad({v.name}^2) != ad({v.name})^2 on {u.name}")

    report["ok"] = (report["alternating"] and report["jacobi_ok"]
                    and report["power_ok"])
    return report


def check_round_trip(graph):
    """The graph determines the bracket-with-S action: rebuilding [.,s]
    from edge data must match the structure table."""
    L = graph.algebra
    for d in range(1, L.degree_limit):
        for u in L.basis[d]:
            for name in graph.s_names:
                from_edges = [0] * len(L.basis[d + 1])
                for v in L.basis[d + 1]:
                    key = ((d, u.index), (d + 1, v.index))
                    from_edges[v.index - 1] = \
                        graph.edges.get(key, {}).get(name, 0)
                from_table = [0] * len(L.basis[d + 1])
                for j, sv in enumerate(L.basis[1]):
                    if graph.s_coords[name][j]:
                        br = L.bracket[((d, u.index), (1, sv.index))]
                        from_table = [(s + t) % L.p
                                      for s, t in zip(from_table, br)]
                if from_edges != from_table:
                    return False
    return True


# ---------------------------------------------------------------------------
# label matching against the declared tables and substitution rules

# Drawn label tables for the built-in groups (letters b, c, d denote the
# overgroup's own generators when group="overgroup").  Each entry is
# (from_name, letters, to_name).
_DRAWN = {
    ("grigorchuk", "lcs"): [
        ("b", "a", "x"), ("a", "bc", "x"), ("a", "cd", "[a,d]"),
        ("d", "a", "[a,d]"), ("x", "abc", "x^2"), ("x", "cd", "x_1^0"),
        ("[a,d]", "bc", "x_1^0"), ("x_1^0", "a", "x_1^1"),
        ("x_1^1", "bc", "x_2^0"), ("x_1^1", "cd", "z_1^0"),
        ("z_1^0", "a", "z_1^1"), ("x_2^0", "a", "x_2^1"),
        ("x_2^1", "bc", "x_2^2"), ("x_2^2", "a", "x_2^3"),
        ("x_2^3", "bd", "x_3^0"), ("x_2^3", "bc", "z_2^0"),
    ],
    ("grigorchuk", "dim"): [
        ("b", "a", "x"), ("a", "bc", "x"), ("a", "cd", "[a,d]"),
        ("d", "a", "[a,d]"), ("x", "cd", "x_1^0"), ("[a,d]", "bc", "x_1^0"),
        ("x_1^0", "a", "x_1^1"), ("x_1^1", "bc", "x_2^0"),
        ("x_2^0", "a", "x_2^1"), ("x_2^1", "bc", "x_2^2"),
        ("x_2^2", "a", "x_2^3"), ("x_2^3", "bd", "x_3^0"),
    ],
    ("overgroup", "lcs"): [
        ("b", "a", "x"), ("a", "b", "x"), ("a", "d", "y"), ("d", "a", "y"),
        ("a", "c", "[a,c]"), ("c", "a", "[a,c]"), ("x", "ab", "x^2"),
        ("x", "d", "x_1^0"), ("x", "c", "y_1^0"), ("y", "b", "x_1^0"),
        ("[a,c]", "b", "y_1^0"), ("x_1^0", "a", "x_1^1"),
        ("y_1^0", "a", "y_1^1"), ("x_1^1", "bd", "z_1^0"),
        ("x_1^1", "c", "x_2^0"), ("x_1^1", "b", "y_2^0"),
        ("y_1^1", "d", "x_2^0"), ("z_1^0", "a", "z_1^1"),
        ("x_2^0", "a", "x_2^1"), ("y_2^0", "a", "y_2^1"),
        ("x_2^1", "b", "x_2^2"), ("y_2^1", "b", "y_2^2"),
        ("x_2^2", "a", "x_2^3"), ("y_2^2", "a", "y_2^3"),
        ("x_2^3", "cd", "z_2^0"), ("x_2^3", "b", "x_3^0"),
        ("x_2^3", "d", "y_3^0"), ("y_2^3", "c", "x_3^0"),
    ],
    ("overgroup", "dim"): [
        ("b", "a", "x"), ("a", "b", "x"), ("a", "d", "y"), ("d", "a", "y"),
        ("a", "c", "[a,c]"), ("c", "a", "[a,c]"), ("x", "d", "x_1^0"),
        ("x", "c", "y_1^0"), ("y", "b", "x_1^0"), ("[a,c]", "b", "y_1^0"),
        ("x_1^0", "a", "x_1^1"), ("y_1^0", "a", "y_1^1"),
        ("x_1^1", "b", "x_2^0"), ("y_1^1", "b", "y_2^0"),
        ("x_2^0", "a", "x_2^1"), ("y_2^0", "a", "y_2^1"),
        ("x_2^1", "b", "x_2^2"), ("y_2^1", "b", "y_2^2"),
        ("x_2^2", "a", "x_2^3"), ("y_2^2", "a", "y_2^3"),
        ("x_2^3", "d", "x_3^0"), ("y_2^3", "d", "y_3^0"),
    ],
}

_DRAWN_POWER = {
    ("grigorchuk", "dim"): [("x", "x^2")],
    ("overgroup", "dim"): [("x", "x^2")],
}

# Four entries of the overgroup dimension-series table disagree with the
# computed structure constants (and with the same group's lower-central
# table, which the computation confirms).  They are kept above exactly as
# declared so that matching reports them honestly; the computed labels
# are recorded here.
KNOWN_LABEL_DISCREPANCIES = (
    {"declared": ("x_1^1", "b", "x_2^0"),
     "computed": (("x_1^1", "c", "x_2^0"), ("x_1^1", "b", "y_2^0"))},
    {"declared": ("y_1^1", "b", "y_2^0"),
     "computed": (("y_1^1", "d", "x_2^0"),)},
    {"declared": ("x_2^3", "d", "x_3^0"),
     "computed": (("x_2^3", "b", "x_3^0"), ("x_2^3", "d", "y_3^0"))},
    {"declared": ("y_2^3", "d", "y_3^0"),
     "computed": (("y_2^3", "c", "x_3^0"),)},
)

_DISCREPANT_EDGES = {(e["declared"][0], e["declared"][2])
                     for e in KNOWN_LABEL_DISCREPANCIES}


def _graph_of(L):
    if isinstance(L, LieCayleyGraph):
        return L
    if L._graph is None:
        gens = L.meta.get("generators")
        if gens is None:
            raise ValueError("pass a cayley_graph, or an algebra built by "
                             "the built-in constructors")
        L._graph = cayley_graph(L, gens)
    return L._graph


def _check_edge(graph, kind, from_name, to_name, expected, semantics,
                informational=False):
    """One comparison record.  semantics: 'exact' (label sets equal),
    'realize' (single letters must appear; braced sets need at least one
    member to appear)."""
    computed = graph.labels_between(from_name, to_name)
    rec = {"kind": kind, "from": from_name, "to": to_name,
           "expected": _render_word(expected) if semantics == "realize"
           else "".join(sorted(expected)),
           "informational": informational,
           "known_discrepancy": (from_name, to_name) in _DISCREPANT_EDGES
           and graph.algebra.meta.get("series") == "dim"
           and graph.algebra.meta.get("group") == "overgroup"}
    if computed is None:
        rec.update(computed=None, status="out_of_range")
        return rec
    rec["computed"] = "".join(sorted(computed))
    if semantics == "exact":
        ok = computed == set(expected)
    else:
        ok = True
        for tok in expected:
            if isinstance(tok, frozenset):
                ok = ok and bool(computed & tok)
            else:
                ok = ok and tok in computed
    rec["status"] = "pass" if ok else "fail"
    return rec


def match_theorem_labels(L, group=None):
    """Compare a built-in group's computed Cayley-graph labels against the
    drawn label tables and the substitution-word rules.

    Chain-path rules (consecutive labels along each x/y/z run spell the
    iterated substitution of a) are binding for both groups; junction
    rules are binding for the base group and informational for the
    overgroup, whose drawn tables are matched edge by edge instead.
    Edges whose endpoint classes are not realized at this level are
    reported as out_of_range, never as failures.
    """
    graph = _graph_of(L)
    alg = graph.algebra
    group = group or alg.meta.get("group")
    series = alg.meta.get("series")
    if (group, series) not in _DRAWN:
        raise ValueError(f"no declared tables for {group!r}/{series!r}")
    over = group == "overgroup"
    which = "sigma_tilde" if over else "sigma"
    checks = []

    for from_name, letters, to_name in _DRAWN[(group, series)]:
        checks.append(_check_edge(graph, "drawn", from_name, to_name,
                                  set(letters), "exact"))
    for from_name, to_name in _DRAWN_POWER.get((group, series), ()):
        has = graph.has_power_edge(from_name, to_name)
        checks.append({"kind": "drawn-power", "from": from_name,
                       "to": to_name, "expected": "power edge",
                       "computed": has, "informational": False,
                       "known_discrepancy": False,
                       "status": "out_of_range" if has is None
                       else ("pass" if has else "fail")})

    # chain-path rule: labels along tag_m^0 -> ... -> tag_m^{2^m-1}
    tags = ("x", "y", "z") if over else ("x", "z")
    for tag in tags:
        if tag == "z" and series == "dim":
            continue            # z degrees are even-spaced: no path edges
        for m in range(1, 6):
            names = [f"{tag}_{m}^{r}" for r in range(1 << m)]
            if alg.vertex(names[0]) is None:
                continue
            word = _parse_word(sigma_substitute("a", which, m - 1))
            for r in range((1 << m) - 1):
                checks.append(_check_edge(
                    graph, "path-rule", names[r], names[r + 1], [word[r]],
                    "realize"))

    # junction rules
    def role_name(tag, m, r):
        v = alg.vertex_by_role((tag, m, r))
        return v.name if v is not None else f"{tag}_{m}^{r}"

    for m in range(0, 5):
        last = (1 << m) - 1
        x_last = role_name("x", m, last)
        if alg.vertex(x_last) is None:
            continue
        if over:
            rules = [
                (x_last, role_name("x", m + 1, 0), ["d"]),
                (x_last, role_name("y", m + 1, 0), ["b"]),
                (x_last, role_name("z", m, 0), ["b", "c"]),
                (role_name("y", m, last), role_name("x", m + 1, 0), ["c"]),
            ]
            for f, t, letters in rules:
                if series == "dim" and (t == "x^2" or t.startswith("z_")):
                    continue    # z sits two degrees up: no bracket edge
                exp = [_parse_word(sigma_substitute(ch, which, m))[0]
                       for ch in letters]
                checks.append(_check_edge(graph, "junction-rule", f, t,
                                          exp, "realize",
                                          informational=True))
        else:
            for t, braced in ((role_name("x", m + 1, 0), "{c|d}"),
                              (role_name("z", m, 0), "{b|d}")):
                if series == "dim" and (t == "x^2" or t.startswith("z_")):
                    continue    # z sits two degrees up: no bracket edge
                exp = _parse_word(sigma_substitute(braced, which, m))
                checks.append(_check_edge(graph, "junction-rule", x_last, t,
                                          exp, "realize"))

    # power rule: x_m^r -> z_m^r in the restricted graph
    if series == "dim":
        for tag_m_r, v in [((v.role), v) for d in alg.basis
                           for v in alg.basis[d] if v.role
                           and v.role[0] == "x"]:
            _, m, r = tag_m_r
            z = alg.vertex_by_role(("z", m, r))
            z_name = z.name if z is not None else f"z_{m}^{r}"
            has = graph.has_power_edge(v.name, z_name)
            checks.append({"kind": "power-rule", "from": v.name,
                           "to": z_name, "expected": "power edge",
                           "computed": has, "informational": False,
                           "known_discrepancy": False,
                           "status": "out_of_range" if has is None
                           else ("pass" if has else "fail")})

    # undeclared computed edges (informational)
    declared = {(f, t) for f, _l, t in _DRAWN[(group, series)]}
    name_of = {(v.degree, v.index): v.name
               for d in alg.basis for v in alg.basis[d]}
    for (va, vb), labels in sorted(graph.edges.items()):
        pair = (name_of[va], name_of[vb])
        if pair not in declared:
            checks.append({"kind": "undeclared", "from": pair[0],
                           "to": pair[1],
                           "expected": None,
                           "computed": "".join(sorted(labels)),
                           "informational": True,
                           "known_discrepancy": False,
                           "status": "informational"})

    summary = {"pass": 0, "fail": 0, "out_of_range": 0, "informational": 0}
    ok = True
    for rec in checks:
        if rec["informational"] or rec["status"] == "informational":
            summary["informational"] += 1
        elif rec["status"] == "out_of_range":
            summary["out_of_range"] += 1
        elif rec["status"] == "pass":
            summary["pass"] += 1
        else:
            summary["fail"] += 1
            ok = False
    return {"group": group, "series": series, "checks": checks,
            "summary": summary, "ok": ok}
