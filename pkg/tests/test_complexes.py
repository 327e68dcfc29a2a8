import pytest

from confgraph.complexes import (FlavorViolation, Flavor, betti, build_complex, check_d2,
                                 coact_graphs, d_graphs, enumerate_basis, make_flavor)
from confgraph.gc import GCElement
from confgraph.graphs import Graph, GraphSum, act_symmetric_group, loop_order
from confgraph.operad import coact
from confgraph.pdalgebra import builtin

from oracles import all_perms

S2, T2 = builtin("S^2"), builtin("T^2")
KINDS = ["GraphsM", "GraphsM_NoTadpole", "graphsM_reduced", "graphsM_forest"]


def test_graphsD_contractions():
    g = Graph(2, 3, 1, [(3, 0), (3, 1), (3, 2)])
    out = d_graphs(g, make_flavor("GraphsD", D=2))
    assert len(out) == 3
    assert all(h.n_int == 0 and len(h.edges) == 2 for h in out)
    assert sorted(abs(c) for c in out.values()) == [1, 1, 1]
    # one contraction onto each external vertex: the hub of the result
    hubs = sorted(next(v for v in range(3) if sum(v in e for e in h.edges) == 2) for h in out)
    assert hubs == [0, 1, 2]


def test_sphere_edge_to_decorated_internal():
    # contraction puts w on vertex 1 with the relative sign -1 (even D);
    # splitting the edge as w (x) 1 leaves a lone w-vertex which the cut
    # evaluates to eps(w) = 1; the 1 (x) w leg gives eps(w w) = 0
    g = Graph(2, 1, 1, [(0, 1)], [(1, 2, "w")])
    assert d_graphs(g, make_flavor("GraphsM", S2)) == {}


@pytest.mark.parametrize("kind", ["GraphsD"] + KINDS)
def test_bare_vertices_closed(kind):
    fl = make_flavor(kind, S2) if kind != "GraphsD" else make_flavor(kind, D=2)
    assert d_graphs(Graph(2, 3, 0), fl) == {}


def test_dimension_mismatch():
    with pytest.raises(FlavorViolation):
        d_graphs(Graph(3, 2, 0, [(0, 1)]), make_flavor("GraphsM", S2))


def test_flavor_errors():
    with pytest.raises(FlavorViolation):
        Flavor("Graphs?", D=2)
    with pytest.raises(FlavorViolation):
        Flavor("GraphsM", D=2)
    with pytest.raises(FlavorViolation):
        make_flavor("BV", builtin("S^3"))
    bivalent = GCElement({Graph(2, 0, 2, [(0, 1)], [(0, 2, "w")]): 1})
    with pytest.raises(FlavorViolation):
        Flavor("graphsM_reduced", algebra=S2, mc=bivalent)


def test_graphsD_two_points():
    cx = build_complex(make_flavor("GraphsD", D=2), 2, 0, 2, 2)
    bt = betti(make_flavor("GraphsD", D=2), 2, 0, 2, 2)
    assert bt.values() == (1, 1, 0) and bt.all_stabilized()
    assert cx.basis[0] and cx.basis[1]


def test_graphsD_three_points():
    bt = betti(make_flavor("GraphsD", D=2), 3, 0, 3, 3)
    assert bt.values() == (1, 3, 2, 0) and bt.all_stabilized()


def test_forest_one_point_sphere():
    bt = betti(make_flavor("graphsM_forest", S2), 1, 0, 2, 2)
    assert bt.values() == (1, 0, 1) and bt.all_stabilized()


def test_sphere_two_points():
    bt = betti(make_flavor("GraphsM", S2), 2, 0, 4, 2)
    assert bt.values() == (1, 0, 1, 0, 0) and bt.all_stabilized()
    assert bt.euler() == 2 * 1


def test_basis_respects_flavor():
    for kind in KINDS:
        fl = make_flavor(kind, T2)
        for p in range(-1, 3):
            for g in enumerate_basis(fl, 2, p, 2):
                assert fl.admits(g) and g.degree() == p
                if kind == "graphsM_forest":
                    assert loop_order(g) == 0
                if kind == "GraphsM_NoTadpole":
                    assert all(u != v for u, v in g.edges)


@pytest.mark.parametrize("name", ["S^2", "T^2", "S^3", "CP^2"])
@pytest.mark.parametrize("kind", ["GraphsD"] + KINDS)
def test_loop_order_never_increases(name, kind):
    A = builtin(name)
    fl = make_flavor(kind, A) if kind != "GraphsD" else make_flavor(kind, D=A.D)
    for n in (1, 2):
        for p in range(-1, 3):
            for g in enumerate_basis(fl, n, p, 2):
                for h in d_graphs(g, fl):
                    assert loop_order(h) <= loop_order(g)


@pytest.mark.parametrize("name", ["S^2", "T^2", "S^3"])
@pytest.mark.parametrize("kind", ["GraphsD"] + KINDS)
def test_d_is_equivariant(name, kind):
    A = builtin(name)
    fl = make_flavor(kind, A) if kind != "GraphsD" else make_flavor(kind, D=A.D)
    n = 3
    for p in range(0, 3):
        basis = set(enumerate_basis(fl, n, p, 1))
        for g in basis:
            dg = d_graphs(g, fl)
            for perm in all_perms(n):
                s, h = act_symmetric_group(list(perm), g)
                assert h in basis
                lhs = d_graphs(h, fl).scaled(s)
                rhs = GraphSum()
                for t, c in dg.items():
                    r = act_symmetric_group(list(perm), t)
                    rhs.add(r[1], c * r[0])
                assert lhs == rhs


@pytest.mark.parametrize("kind", ["GraphsD"] + KINDS)
def test_d_squared_small(kind):
    for name in ("S^2", "T^2", "S^3"):
        A = builtin(name)
        fl = make_flavor(kind, A) if kind != "GraphsD" else make_flavor(kind, D=A.D)
        for n in (1, 2):
            rep = check_d2(fl, n, -1, 2, 2)
            assert rep.holds, rep.as_dict()


def test_coaction_counit():
    fl = make_flavor("GraphsM", T2)
    pt = Graph(2, 1, 0)
    for p in range(0, 3):
        for g in enumerate_basis(fl, 2, p, 1):
            out = coact_graphs(g, fl, [[1], [2]])
            assert out.get((g, pt, pt)) == 1


def test_coaction_edge_merge_matches_generator_level():
    fl = make_flavor("GraphsM", T2)
    e = Graph(2, 2, 0, [(0, 1)])
    assert coact_graphs(e, fl, [[1, 2]]) == coact(e, [[1, 2]])


def test_tadpole_free_has_no_coaction():
    fl = make_flavor("GraphsM_NoTadpole", T2)
    with pytest.raises(FlavorViolation):
        coact_graphs(Graph(2, 2, 0, [(0, 1)]), fl, [[1, 2]])


def _coaction_defect(g, fl, fD, blocks):
    lhs = {}
    for h, c in d_graphs(g, fl).items():
        for f, cc in coact_graphs(h, fl, blocks).items():
            lhs[f] = lhs.get(f, 0) + c * cc
    rhs = {}
    for f, c in coact_graphs(g, fl, blocks).items():
        for h, cc in d_graphs(f[0], fl).items():
            key = (h,) + f[1:]
            rhs[key] = rhs.get(key, 0) + c * cc
        sign = (-1) ** f[0].degree()
        for j in range(1, len(f)):
            for h, cc in d_graphs(f[j], fD).items():
                key = f[:j] + (h,) + f[j + 1:]
                rhs[key] = rhs.get(key, 0) + sign * c * cc
            sign *= (-1) ** f[j].degree()
    return {k: lhs.get(k, 0) - rhs.get(k, 0) for k in set(lhs) | set(rhs)
            if lhs.get(k, 0) != rhs.get(k, 0)}


@pytest.mark.parametrize("kind", ["GraphsM", "graphsM_reduced"])
def test_coaction_commutes_with_d_torus(kind):
    fl = make_flavor(kind, T2)
    fD = make_flavor("GraphsD", D=2)
    count = 0
    for p in range(-3, 6):
        for g in enumerate_basis(fl, 2, p, 1):
            if len(g.edges) > 2:
                continue
            for blocks in ([[1], [2]], [[1, 2]], [[2], [1]]):
                count += 1
                assert _coaction_defect(g, fl, fD, blocks) == {}
    assert count > 50
