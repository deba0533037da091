"""Commutator identity suites for the two built-in groups, as test data.

Each entry is (name, lhs, rhs, holds) built from a fresh group instance;
``holds`` is False only for the two declared variants that are provably
wrong (the corrected forms appear as separate entries with holds=True).
"""

from treelie.tree_automorphisms import (
    commutator,
    embed_at_vertex,
    grigorchuk_group,
    overgroup,
)


def _pair(u, v):
    return embed_at_vertex(u, "0") * embed_at_vertex(v, "1")


def base_group_suite():
    grp, E = grigorchuk_group()
    a, b, c, d = E["a"], E["b"], E["c"], E["d"]
    one = grp.identity
    x = commutator(a, b)
    xi = x.inverse()
    x2 = x * x
    x4 = x2 * x2
    U = _pair(one, xi) * x
    V = _pair(xi, one) * xi
    uv_x2 = _pair(U, V) * x2
    vu_x2 = _pair(V, U) * x2
    suite = [
        ("[x,a]=x^2", commutator(x, a), x2, True),
        ("[x,b]=x^2", commutator(x, b), x2, True),
        ("[x,c]=x(1,x^-1)x", commutator(x, c), x * _pair(one, xi) * x, True),
        ("[x,d]=(1,x)", commutator(x, d), _pair(one, x), True),
        ("[x^2,a]=x^4", commutator(x2, a), x4, True),
        ("[x^2,b]=x^4", commutator(x2, b), x4, True),
        ("[x^2,c]=((U,V)x^2,(1,x))", commutator(x2, c), _pair(uv_x2, _pair(one, x)), True),
        ("[x^2,d]=(1,(U,1)x^2)", commutator(x2, d), _pair(one, _pair(U, one) * x2), True),
        # the x^4 decomposition: both slots are (U,V)x^2; the declared
        # second slot (V,U)x^2 is wrong
        ("x^4=((U,V)x^2,(U,V)x^2)", x4, _pair(uv_x2, uv_x2), True),
        ("x^4=((U,V)x^2,(V,U)x^2) [declared variant]", x4, _pair(uv_x2, vu_x2), False),
    ]
    return grp, E, suite


def overgroup_suite():
    grp, E = overgroup()
    a, b, c, d = E["a"], E["b"], E["c"], E["d"]
    one = grp.identity
    x = commutator(a, b)
    y = commutator(a, d)
    xi = x.inverse()
    x2 = x * x
    suite = [
        ("[x,a]=x^2", commutator(x, a), x2, True),
        ("[x,b]=x^2", commutator(x, b), x2, True),
        ("[x,c]=(1,y)", commutator(x, c), _pair(one, y), True),
        ("[x,d]=(1,x)", commutator(x, d), _pair(one, x), True),
        ("[x^2,a]=1", commutator(x2, a), one, True),
        ("[x^2,b]=1", commutator(x2, b), one, True),
        ("[x^2,c]=1", commutator(x2, c), one, True),
        ("[x^2,d]=(1,(y,1))", commutator(x2, d), _pair(one, _pair(y, one)), True),
        ("[x^2,d]=(1,x(x,1)x) [declared variant]", commutator(x2, d),
         _pair(one, x * _pair(x, one) * x), False),
        ("[y,a]=1", commutator(y, a), one, True),
        ("[y,b]=(x^-1,1)", commutator(y, b), _pair(xi, one), True),
        ("[y,c]=1", commutator(y, c), one, True),
        ("[y,d]=1", commutator(y, d), one, True),
    ]
    return grp, E, suite
