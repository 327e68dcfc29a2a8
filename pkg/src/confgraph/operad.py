"""Generator-level structures: the edge-splitting differential on decorated
graphs without internal vertices, cocomposition of undecorated graphs along
a partition of the external vertices, and the comodule coaction.

A de-insertion along blocks B_1..B_k sends every generator of the graph
monomial to one tensor factor: factor 0 is the outer graph (one vertex per
block, carrying all decorations), factor j is the subgraph on B_j.  An edge
inside a block may go either to the block subgraph or to the outer graph,
where it becomes a tadpole.  The coefficient is the Koszul sign of sorting
the monomial into factor order followed by the canonical-form sign of each
factor.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

from .graphs import Constraints, Graph, GraphSum, canonical_form, split_edge

# Order in which the generators of the factors are collected before the
# tensor is read off.  "outer_first" makes the coaction multiplicative and
# is the one that is coassociative and commutes with the differential; see
# the test suite.
FACTOR_ORDER = "outer_first"


class ShapeMismatch(ValueError):
    pass


def _check_shape(n, blocks):
    seen = []
    for b in blocks:
        if not b:
            raise ShapeMismatch("empty block")
        seen.extend(b)
    if sorted(seen) != list(range(1, n + 1)):
        raise ShapeMismatch(f"blocks {blocks} do not partition 1..{n}")
    return [list(b) for b in blocks]


def d_gra(g: Graph, A) -> GraphSum:
    """Replace each edge (tadpoles included) by the diagonal class at its ends."""
    if g.n_int:
        raise ValueError("d_gra acts on graphs without internal vertices")
    diag = [(x, y, c, A.degree(x), A.degree(y)) for x, y, c in A.diagonal()]
    out = GraphSum()
    for i in range(len(g.edges)):
        for c, edges, decs in split_edge(g, i, diag, A.unit):
            out.add_raw(c, g.D, g.n_ext, 0, edges, decs)
    return out


def _koszul_sort(parities, tags, order):
    """Sign of stably sorting generators by rank of their tag."""
    rank = {t: i for i, t in enumerate(order)}
    keys = [rank[t] for t in tags]
    sign = 1
    odd_after = {}
    # count inversions between odd generators
    for i in range(len(keys)):
        if not parities[i]:
            continue
        for j in range(i + 1, len(keys)):
            if parities[j] and keys[j] < keys[i]:
                sign = -sign
    return sign


def deinsert(g: Graph, blocks, internal_to_blocks=False, order=None):
    """All de-insertions of g along blocks (1-based external labels).

    Yields (sign, outer_raw, [block_raw, ...]) where each raw part is
    (n, k, edges, decs) before canonicalization.  With internal_to_blocks,
    undecorated internal vertices may also be attached to a block.
    """
    D = g.D
    n, k = g.n_ext, g.n_int
    blocks = _check_shape(n, blocks)
    nb = len(blocks)
    order = order or FACTOR_ORDER
    factor_order = list(range(nb + 1)) if order == "outer_first" else list(range(1, nb + 1)) + [0]
    bid = {}
    pos_in_block = {}
    for j, b in enumerate(blocks):
        for p, v in enumerate(b):
            bid[v - 1] = j
            pos_in_block[v - 1] = p
    decorated = {w for w, _, _ in g.decs}
    internals = list(range(n, n + k))
    choices_int = []
    for w in internals:
        if internal_to_blocks and w not in decorated:
            choices_int.append([-1] + list(range(nb)))
        else:
            choices_int.append([-1])
    for assign in product(*choices_int):
        grp = dict(bid)
        for w, a in zip(internals, assign):
            grp[w] = a
        # internal vertices of the outer graph and of each block, original order
        outer_int = [w for w, a in zip(internals, assign) if a == -1]
        block_int = [[w for w, a in zip(internals, assign) if a == j] for j in range(nb)]
        outer_label = {w: nb + i for i, w in enumerate(outer_int)}
        edge_opts = []
        for u, v in g.edges:
            gu, gv = grp[u], grp[v]
            if gu == gv and gu >= 0:
                edge_opts.append((0, gu + 1))
            else:
                edge_opts.append((0,))
        for eassign in product(*edge_opts):
            tags, pars = [], []
            for w, a in zip(internals, assign):
                tags.append(0 if a == -1 else a + 1)
                pars.append(D % 2)
            for f in eassign:
                tags.append(f)
                pars.append((D - 1) % 2)
            for _, d, _ in g.decs:
                tags.append(0)
                pars.append(d % 2)
            sign = _koszul_sort(pars, tags, factor_order)

            def outer_vertex(x):
                if x in outer_label:
                    return outer_label[x]
                return grp[x]

            o_edges = [(outer_vertex(u), outer_vertex(v))
                       for (u, v), f in zip(g.edges, eassign) if f == 0]
            o_decs = [(outer_vertex(w), d, x) for w, d, x in g.decs]
            parts = []
            for j in range(nb):
                lab = {}
                for v in blocks[j]:
                    lab[v - 1] = pos_in_block[v - 1]
                for i, w in enumerate(block_int[j]):
                    lab[w] = len(blocks[j]) + i
                b_edges = [(lab[u], lab[v]) for (u, v), f in zip(g.edges, eassign) if f == j + 1]
                parts.append((len(blocks[j]), len(block_int[j]), b_edges, []))
            yield sign, (nb, len(outer_int), o_edges, o_decs), parts


def _canon_parts(D, sign, outer, parts):
    r = canonical_form(D, *outer)
    if r is None:
        return None
    sign *= r[0]
    out = [r[1]]
    for p in parts:
        q = canonical_form(D, *p)
        if q is None:
            return None
        sign *= q[0]
        out.append(q[1])
    return sign, tuple(out)


def _collect(g, blocks, internal_to_blocks=False, order=None, accept=None):
    out = {}
    for sign, outer, parts in deinsert(g, blocks, internal_to_blocks, order):
        r = _canon_parts(g.D, sign, outer, parts)
        if r is None:
            continue
        s, factors = r
        if accept is not None and not accept(factors):
            continue
        out[factors] = out.get(factors, 0) + s
    return {f: Fraction(c) for f, c in out.items() if c}


def cocompose(g: Graph, blocks, order=None):
    """{(outer, sub_1, ..., sub_k): coeff} for an undecorated graph without internal vertices."""
    if g.decs or g.n_int:
        raise ValueError("cocompose acts on undecorated graphs without internal vertices")
    return _collect(g, blocks, order=order)


def coact(g: Graph, blocks, order=None):
    """Comodule coaction of a decorated graph; decorations stay on the outer factor."""
    if g.n_int:
        raise ValueError("coact acts on graphs without internal vertices")
    return _collect(g, blocks, order=order)


_GRAPHS_D = Constraints(min_internal_valence=3, decorations_count=False)


def coact_internal(g: Graph, blocks, flavor):
    """Coaction on a graph with internal vertices into (module graph, Graphs_D graphs).

    Undecorated internal vertices may be attached to a block; the block
    factors must be basis graphs of Graphs_D and the outer factor must be
    admitted by the flavor.
    """
    def accept(factors):
        if not flavor.admits(factors[0]):
            return False
        return all(_GRAPHS_D.admits(f) for f in factors[1:])

    return _collect(g, blocks, internal_to_blocks=True, accept=accept)


# helpers for the structural checks

def tensor_degree(factors):
    return [f.degree() for f in factors]


def reorder_sign(degrees, perm):
    """Koszul sign of reading factors in the order perm (a list of indices)."""
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j] and degrees[perm[i]] % 2 and degrees[perm[j]] % 2:
                sign = -sign
    return sign


def coassociativity_defect(g: Graph, coarse, fine_of, order=None):
    """Compare the two routes to a two-level de-insertion.

    ``coarse`` lists blocks B_1..B_k of 1..n; ``fine_of[j]`` partitions B_j
    (in global labels).  Returns the nonzero difference as a dict.
    """
    nb = len(coarse)
    # route a: coarse first, then each block
    route_a = {}
    for factors, c in cocompose(g, coarse, order).items():
        outer, subs = factors[0], factors[1:]
        expansions = []
        for j, sub in enumerate(subs):
            local = {v: i + 1 for i, v in enumerate(coarse[j])}
            fine_local = [[local[v] for v in b] for b in fine_of[j]]
            expansions.append(list(cocompose(sub, fine_local, order).items()))
        for combo in product(*expansions):
            coeff = c
            seq = [outer]
            for fac, cc in combo:
                coeff *= cc
                seq.extend(fac)
            # seq = outer, (mid_1, fines of 1...), (mid_2, fines of 2...), ...
            mids, fines, idx_mid, idx_fine = [], [], [], []
            pos = 1
            for j, (fac, _) in enumerate(combo):
                idx_mid.append(pos)
                mids.append(fac[0])
                for t in range(1, len(fac)):
                    idx_fine.append(pos + t)
                    fines.append(fac[t])
                pos += len(fac)
            perm = [0] + idx_mid + idx_fine
            coeff *= reorder_sign([f.degree() for f in seq], perm)
            key = tuple([outer] + mids + fines)
            route_a[key] = route_a.get(key, 0) + coeff
    # route b: fine first, then group the fine blocks
    fine_all = [b for j in range(nb) for b in fine_of[j]]
    groups, t = [], 1
    for j in range(nb):
        groups.append(list(range(t, t + len(fine_of[j]))))
        t += len(fine_of[j])
    route_b = {}
    for factors, c in cocompose(g, fine_all, order).items():
        mid_outer, fines = factors[0], factors[1:]
        for f2, c2 in cocompose(mid_outer, groups, order).items():
            key = tuple(list(f2) + list(fines))
            route_b[key] = route_b.get(key, 0) + c * c2
    diff = {}
    for key in set(route_a) | set(route_b):
        v = route_a.get(key, 0) - route_b.get(key, 0)
        if v:
            diff[key] = v
    return diff


def comodule_defect(g: Graph, blocks, A, order=None):
    """coact(d g) - (d (x) id) coact(g) on a decorated graph without internal vertices."""
    lhs = {}
    for h, c in d_gra(g, A).items():
        for f, cc in coact(h, blocks, order).items():
            lhs[f] = lhs.get(f, 0) + c * cc
    rhs = {}
    for f, c in coact(g, blocks, order).items():
        for h, cc in d_gra(f[0], A).items():
            key = (h,) + f[1:]
            rhs[key] = rhs.get(key, 0) + c * cc
    diff = {}
    for key in set(lhs) | set(rhs):
        v = lhs.get(key, 0) - rhs.get(key, 0)
        if v:
            diff[key] = v
    return diff


# enumeration helpers for the exhaustive checks

def set_partitions(items):
    """All set partitions of a list, blocks in first-appearance order."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in set_partitions(rest):
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1:]
        yield [[first]] + p


def gra_graphs(D, n, max_edges, A=None, max_dec_degree=0):
    """Canonical graphs on n external vertices without internal vertices.

    Tadpoles and multi-edges are allowed (those vanishing by symmetry are
    dropped); with an algebra A decorations of total degree up to
    max_dec_degree are added.
    """
    from itertools import combinations_with_replacement
    from .graphs import _distribute
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    seen = set()
    out = []
    for E in range(max_edges + 1):
        for es in combinations_with_replacement(pairs, E):
            decsets = [[]]
            if A is not None:
                decsets = [d for t in range(max_dec_degree + 1)
                           for d in _distribute(n, A.reduced, t)]
            for decs in decsets:
                r = canonical_form(D, n, 0, list(es), list(decs))
                if r is not None and r[1] not in seen:
                    seen.add(r[1])
                    out.append(r[1])
    return out
