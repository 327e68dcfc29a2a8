"""The graph Lie algebra GC_{H(M)} on connected graphs without external vertices.

An element is a rational functional on canonical connected graphs with
n_ext = 0, stored as {graph: coefficient}.  The GC-degree of a graph is the
negative of its ^*-degree.  The differential on the ^*-side of such graphs
(edge splitting plus contraction) sends a connected graph to connected
graphs (the linear part) and to products of two connected graphs (the
quadratic part, from splitting a bridge).  The GC differential is the
transpose of the linear part and the bracket is the transpose of the
quadratic part, so dz + 1/2[z,z] evaluated on a graph g is exactly the
partition function Z applied to d(g).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .complexes import contraction_sign
from .graphs import (Constraints, Graph, canonical_form, components, contract_edge,
                     enumerate_graphs, extract_internal_components, literal, loop_order,
                     parse_literal, sort_key, split_edge, valence, _decoration_monomials)
from .pdalgebra import PDAlgebra, ParseError, algebra_from_json, builtin

# Sign of Z on a decorated vertex: Z(V x_1 ... x_r) = Z_SIGN * eps(x_1 ... x_r).
Z_SIGN = 1


class AlgebraMismatch(ValueError):
    pass


class NotATree(ValueError):
    pass


class GCElement(dict):
    """Finite rational combination of canonical connected graphs with n_ext = 0."""

    def add(self, g, c):
        c = Fraction(c)
        if not c:
            return
        v = self.get(g, 0) + c
        if v:
            self[g] = v
        else:
            self.pop(g, None)

    def scaled(self, c):
        c = Fraction(c)
        return GCElement({g: v * c for g, v in self.items() if v * c})

    def __add__(self, other):
        out = GCElement(self)
        for g, c in other.items():
            out.add(g, c)
        return out

    def __sub__(self, other):
        return self + other.scaled(-1)

    def restrict(self, pred):
        return GCElement({g: c for g, c in self.items() if pred(g)})

    def degrees(self):
        return sorted({gc_degree(g) for g in self})

    def sorted_items(self):
        return sorted(self.items(), key=lambda t: sort_key(t[0]))

    def __repr__(self):
        return "GCElement{" + ", ".join(f"{literal(g)}: {c}" for g, c in self.sorted_items()) + "}"


def gc_degree(g: Graph) -> int:
    """D*#vertices + (1-D)*#edges - sum of decoration degrees."""
    return -g.degree()


def lie_degree(g: Graph) -> int:
    """Degree in which bracket and d_gc form a dg Lie algebra: GC-degree + 1."""
    return gc_degree(g) + 1


def _dim(A):
    return A if isinstance(A, int) else A.D


def _check(A, *elems):
    D = _dim(A)
    for x in elems:
        for g in x:
            if g.D != D or g.n_ext:
                raise AlgebraMismatch(f"{literal(g)} does not live in GC for D={D}")


def tadpoles_allowed(A):
    """Tadpoles are kept only for even D and vanishing Euler characteristic."""
    if isinstance(A, int):
        return False
    return A.D % 2 == 0 and A.euler_characteristic() == 0


def _constraints(A, genus_cap=None, min_valence=1):
    return Constraints(min_internal_valence=min_valence, allow_int_tadpoles=tadpoles_allowed(A),
                       genus_cap=genus_cap, forbid_internal_only_components=False)


def connected_graphs(A, k, deg, max_edges=None, genus_cap=None, min_valence=1):
    """Canonical connected n_ext = 0 graphs with k vertices and ^*-degree deg."""
    D = _dim(A)
    basis = [] if isinstance(A, int) else A.reduced
    out = []
    for g in enumerate_graphs(0, D, _constraints(A, genus_cap, min_valence), k, deg, basis,
                              max_edges=max_edges):
        if len(components(g.n_vertices, g.edges)) == 1:
            out.append(g)
    return out


class _Expander:
    """Linear and quadratic parts of the ^*-differential on connected graphs."""

    _cache = {}

    def __init__(self, A):
        self.A = A
        self.D = _dim(A)
        self.tadpoles = tadpoles_allowed(A)
        if isinstance(A, int):
            self.diag, self.unit = None, None
        else:
            self.diag = [(x, y, c, A.degree(x), A.degree(y)) for x, y, c in A.diagonal()]
            self.unit = A.unit
        self.memo = {}

    @classmethod
    def for_algebra(cls, A):
        key = A if isinstance(A, int) else A.key()
        if key not in cls._cache:
            cls._cache[key] = cls(A)
        return cls._cache[key]

    def _emit(self, lin, quad, c, k, edges, decs):
        D = self.D
        s, _, _, _, blocks = extract_internal_components(D, 0, k, edges, decs)
        canon = []
        for kc, ec, dc in blocks:
            r = canonical_form(D, 0, kc, ec, dc)
            if r is None:
                return
            h = r[1]
            if not self.tadpoles and any(u == v for u, v in h.edges):
                return
            s *= r[0]
            canon.append(h)
        c = c * s
        if len(canon) == 1:
            lin[canon[0]] = lin.get(canon[0], 0) + c
        elif len(canon) == 2:
            key = (canon[0], canon[1])
            quad[key] = quad.get(key, 0) + c
        elif canon:
            raise AssertionError("removing one edge leaves at most two components")

    def expand(self, g: Graph):
        if g in self.memo:
            return self.memo[g]
        lin, quad = {}, {}
        k = g.n_int
        for i, (u, v) in enumerate(g.edges):
            if self.diag is not None:
                for c, edges, decs in split_edge(g, i, self.diag, self.unit):
                    self._emit(lin, quad, c, k, edges, decs)
            if u != v:
                r = contract_edge(g, i)
                if r is not None:
                    s, k2, edges, decs = r
                    self._emit(lin, quad, contraction_sign(self.D) * s, k2, edges, decs)
        lin = {h: c for h, c in lin.items() if c}
        quad = {h: c for h, c in quad.items() if c}
        self.memo[g] = (lin, quad)
        return lin, quad


def _pair(x, y, quad):
    """Bracket coefficient on a quadratic part.

    The Koszul pairing of S(V*) against S(V) gives a graded symmetric
    product; the extra sign (-1)^(|x|(|y|+1)) turns it into a graded Lie
    bracket for the shifted degree |x| + 1.
    """
    total = Fraction(0)
    for (b1, b2), c in quad.items():
        p1, p2 = b1.degree() % 2, b2.degree() % 2
        t = 0
        a, b = x.get(b1), y.get(b2)
        if a and b:
            t += (-1 if p1 else 1) * a * b
        a, b = x.get(b2), y.get(b1)
        if a and b:
            t += (-1 if (p1 * p2 + p2) % 2 else 1) * a * b
        total += c * t
    return total


def _canon_raw(A, k, edges, decs, out):
    r = canonical_form(_dim(A), 0, k, edges, decs)
    if r is None:
        return
    h = r[1]
    if not tadpoles_allowed(A) and any(u == v for u, v in h.edges):
        return
    out.add(h)


def _leg_pairs(A):
    """(x, y) pairs, None for the unit, with a nonzero diagonal coefficient."""
    if isinstance(A, int):
        return [(None, None)]
    pairs = set()
    for x, y, c in A.diagonal():
        if c:
            pairs.add((None if x == A.unit else x, None if y == A.unit else y))
    return sorted(pairs, key=repr)


def _remove_dec(decs, v, x):
    for j, (w, _, y) in enumerate(decs):
        if w == v and y == x:
            return decs[:j] + decs[j + 1:]
    return None


def _join_variants(A, k, edges, decs, u, w):
    """Graphs whose new edge (u, w) splits into legs already present."""
    out = []
    for x, y in _leg_pairs(A):
        if x is None and y is None:
            continue
        d2 = list(decs)
        if x is not None:
            d2 = _remove_dec(d2, u, x)
            if d2 is None:
                continue
        if y is not None:
            d2 = _remove_dec(d2, w, y)
            if d2 is None:
                continue
        out.append((k, list(edges) + [(u, w)], d2))
    return out


def _candidates_d(A, x):
    """Superset of the graphs on which d_gc(x) can be nonzero."""
    out = set()
    for g in x:
        k, edges, decs = g.n_int, list(g.edges), list(g.decs)
        # vertex splitting: a new vertex takes some half-edges and decorations of v
        for v in range(k):
            halves = [(i, side) for i, e in enumerate(edges) for side in (0, 1) if e[side] == v]
            mine = [j for j, (w, _, _) in enumerate(decs) if w == v]
            for mask in product((0, 1), repeat=len(halves) + len(mine)):
                e2 = [list(e) for e in edges]
                for (i, side), m in zip(halves, mask):
                    if m:
                        e2[i][side] = k
                d2 = [list(t) for t in decs]
                for j, m in zip(mine, mask[len(halves):]):
                    if m:
                        d2[j][0] = k
                _canon_raw(A, k + 1, [tuple(e) for e in e2] + [(v, k)],
                           [tuple(t) for t in d2], out)
        # joining decorations into an edge
        for u in range(k):
            for w in range(k):
                for kk, e2, d2 in _join_variants(A, k, edges, decs, u, w):
                    _canon_raw(A, kk, e2, d2, out)
    return out


def _candidates_bracket(A, x, y):
    """Superset of the graphs on which [x, y] can be nonzero."""
    out = set()
    for g in x:
        for h in y:
            k1 = g.n_int
            k = k1 + h.n_int
            edges = list(g.edges) + [(a + k1, b + k1) for a, b in h.edges]
            decs = list(g.decs) + [(w + k1, d, i) for w, d, i in h.decs]
            for u in range(k1):
                for w in range(k1, k):
                    for a, b in ((u, w), (w, u)):
                        for kk, e2, d2 in _join_variants(A, k, edges, decs, a, b):
                            _canon_raw(A, kk, e2, d2, out)
    return out


def d_gc(x: GCElement, A, twist: GCElement | None = None, targets=None) -> GCElement:
    """Vertex splitting plus decoration joining, and [twist, x] when given.

    ``A`` is a PDAlgebra, or an integer D for undecorated graphs.  Without
    ``targets`` every connected graph one edge larger than a term of x is
    tried.
    """
    _check(A, x, *(() if twist is None else (twist,)))
    ex = _Expander.for_algebra(A)
    if targets is None:
        targets = _candidates_d(A, x)
    out = GCElement()
    for h in sorted(targets, key=sort_key):
        lin, _ = ex.expand(h)
        out.add(h, sum((c * x.get(b, 0) for b, c in lin.items()), Fraction(0)))
    if twist:
        out = out + bracket(twist, x, A)
    return out


def bracket(x: GCElement, y: GCElement, A, targets=None) -> GCElement:
    """Join a decoration of x to a decoration of y by an edge, weighted by the pairing.

    Raises the GC-degree by one.  With the shifted degree |x|' = |x| + 1
    the bracket is graded antisymmetric and satisfies the graded Jacobi
    and Leibniz rules (see lie_degree).
    """
    _check(A, x, y)
    if not x or not y:
        return GCElement()
    ex = _Expander.for_algebra(A)
    if targets is None:
        targets = _candidates_bracket(A, x, y)
    out = GCElement()
    for h in sorted(targets, key=sort_key):
        _, quad = ex.expand(h)
        out.add(h, _pair(x, y, quad))
    return out


def z0(A: PDAlgebra) -> GCElement:
    """Single-vertex part of the partition function: Z(vertex with m) = eps(m)."""
    out = GCElement()
    for mono in _decoration_monomials(A.reduced, A.D):
        val = A.eps(A.mul_many([x for _, x in mono]))
        if val:
            g = Graph(A.D, 0, 1, (), tuple((0, d, x) for d, x in mono))
            r = canonical_form(A.D, 0, 1, g.edges, g.decs)
            if r is not None:
                out.add(r[1], Z_SIGN * val * r[0])
    return out


def mc_box_graphs(A, max_vertices=3, max_loop=2, deg=-1):
    """Connected graphs of ^*-degree deg with bounded vertex count and loop order."""
    out = []
    for k in range(1, max_vertices + 1):
        emax = k - 1 + max_loop
        out.extend(connected_graphs(A, k, deg, max_edges=emax, genus_cap=max_loop))
    return out


@dataclass
class MCReport:
    boxes: list                      # (GC-degree, vertices, loop order)
    residual: GCElement
    verdict: dict = field(default_factory=dict)
    checked: int = 0

    @property
    def holds(self):
        return all(self.verdict.values())

    def as_dict(self):
        return {"holds": self.holds, "checked_graphs": self.checked,
                "boxes": [{"degree": d, "vertices": v, "loop_order": l, "holds": self.verdict[(d, v, l)]}
                          for d, v, l in self.boxes],
                "residual": [literal(g, c) for g, c in self.residual.sorted_items()]}


def check_mc(z: GCElement, A, max_vertices=3, max_loop=2) -> MCReport:
    """Residual dz + 1/2 [z, z] on every box graph of the matching degree."""
    _check(A, z)
    degs = {g.degree() for g in z}
    targets_deg = sorted({p - 1 for p in degs} | {p + q - 1 for p in degs for q in degs})
    if not z:
        targets_deg = [-1]
    boxes, targets = [], []
    for p in targets_deg:
        for k in range(1, max_vertices + 1):
            for l in range(0, max_loop + 1):
                boxes.append((-p, k, l))
        targets.extend(mc_box_graphs(A, max_vertices, max_loop, p))
    res = d_gc(z, A, targets=targets) + bracket(z, z, A, targets=targets).scaled(Fraction(1, 2))
    verdict = {b: True for b in boxes}
    for g in res:
        verdict[(gc_degree(g), g.n_int, loop_order(g))] = False
    return MCReport(boxes, res, verdict, len(targets))


def partition_residual(z: GCElement, A, g: Graph) -> Fraction:
    """Z(d g) with Z multiplicative on components; the MC residual at g."""
    lin, quad = _Expander.for_algebra(A).expand(g)
    val = sum((c * z.get(b, 0) for b, c in lin.items()), Fraction(0))
    for (b1, b2), c in quad.items():
        val += c * z.get(b1, 0) * z.get(b2, 0)
    return val


def loop_decompose(z: GCElement):
    """[part of loop order 0, part of loop order 1, ...]."""
    if not z:
        return []
    top = max(loop_order(g) for g in z)
    return [z.restrict(lambda g, l=l: loop_order(g) == l) for l in range(top + 1)]


def filter_valence(z: GCElement, mode="ge3"):
    """Keep terms whose vertices all satisfy the mode; returns (kept, rejected)."""
    if mode == "ge3":
        ok = lambda g: all(valence(g, v) >= 3 for v in range(g.n_vertices))
    elif mode == "doubleprime":
        ok = lambda g: all(valence(g, v) != 1 for v in range(g.n_vertices))
    else:
        raise ValueError(f"unknown valence mode {mode!r}")
    kept, rejected = GCElement(), GCElement()
    for g, c in z.items():
        (kept if ok(g) else rejected)[g] = c
    return kept, rejected


# IHX normal form on trivalent trees

def _is_tree(g):
    return loop_order(g) == 0 and len(components(g.n_vertices, g.edges)) == 1


def _trivalent(g):
    return all(valence(g, v) == 3 for v in range(g.n_vertices))


def is_combed(g):
    """Every vertex lies on one path (a caterpillar tree)."""
    nv = g.n_vertices
    if nv <= 2:
        return True
    deg = [0] * nv
    for u, v in g.edges:
        deg[u] += 1
        deg[v] += 1
    return all(d <= 2 for d in deg)


def _dec_multiset(g):
    return tuple(sorted((d, x) for _, d, x in g.decs))


def _ihx_block(A, k, deg, decs):
    """Trivalent trees with the decoration multiset and their IHX relations."""
    trees = [g for g in connected_graphs(A, k, deg, max_edges=k - 1, genus_cap=0, min_valence=3)
             if _trivalent(g) and _dec_multiset(g) == decs]
    if k < 2:
        return trees, []
    ex = _Expander.for_algebra(A)
    rows = {}
    for t in trees:
        lin, _ = ex.expand(t)
        for s, c in lin.items():
            if s.n_int == k - 1 and _dec_multiset(s) == decs:
                rows.setdefault(s, {})[t] = rows.get(s, {}).get(t, 0) + c
    return trees, [r for r in rows.values() if any(r.values())]


_IHX_CACHE = {}


def _ihx_reducer(A, k, deg, decs):
    key = (A if isinstance(A, int) else A.key(), k, deg, decs)
    if key in _IHX_CACHE:
        return _IHX_CACHE[key]
    trees, rels = _ihx_block(A, k, deg, decs)
    # pivot on the latest column: non-combed trees come last in the order
    order = sorted(trees, key=lambda g: (is_combed(g), sort_key(g)), reverse=True)
    pos = {g: i for i, g in enumerate(order)}
    pivots = {}
    for rel in rels:
        vec = {pos[g]: Fraction(c) for g, c in rel.items() if c}
        vec = _reduce_vec(vec, pivots)
        if vec:
            p = min(vec)
            inv = 1 / vec[p]
            pivots[p] = {c: v * inv for c, v in vec.items()}
    # full back-substitution so the normal form does not depend on input order
    for p in sorted(pivots, reverse=True):
        row = pivots[p]
        for q in list(pivots):
            if q != p and p in pivots[q]:
                f = pivots[q][p]
                new = dict(pivots[q])
                for c, v in row.items():
                    x = new.get(c, 0) - f * v
                    if x:
                        new[c] = x
                    else:
                        new.pop(c, None)
                pivots[q] = new
    _IHX_CACHE[key] = (order, pos, pivots)
    return _IHX_CACHE[key]


def _reduce_vec(vec, pivots):
    vec = dict(vec)
    changed = True
    while changed:
        changed = False
        for p in sorted(vec):
            if p in pivots:
                f = vec[p]
                for c, v in pivots[p].items():
                    x = vec.get(c, 0) - f * v
                    if x:
                        vec[c] = x
                    else:
                        vec.pop(c, None)
                changed = True
                break
    return vec


def ihx_normal_form(z: GCElement, A) -> GCElement:
    """Rewrite trivalent tree terms modulo IHX onto combed trees; idempotent.

    The IHX relations are the vertex-splitting images of trees with one
    four-valent vertex, so their signs come from the same sign engine as
    everything else.  Non-trivalent tree terms are left unchanged.
    """
    _check(A, z)
    out = GCElement()
    groups = {}
    for g, c in z.items():
        if not _is_tree(g):
            raise NotATree(literal(g))
        if any(valence(g, v) < 3 for v in range(g.n_vertices)):
            raise ValueError(f"tree with a vertex of valence < 3: {literal(g)}")
        if not _trivalent(g):
            out.add(g, c)
            continue
        groups.setdefault((g.n_int, g.degree(), _dec_multiset(g)), {})[g] = c
    for (k, deg, decs), terms in sorted(groups.items(), key=lambda t: repr(t[0])):
        order, pos, pivots = _ihx_reducer(A, k, deg, decs)
        vec = _reduce_vec({pos[g]: c for g, c in terms.items()}, pivots)
        for i, c in vec.items():
            out.add(order[i], c)
    return out


# MC element files

def mc_to_json(z: GCElement, algebra_ref):
    return {"algebra": algebra_ref,
            "graphs": [{"graph": literal(g), "coeff": f"{c.numerator}/{c.denominator}"}
                       for g, c in z.sorted_items()]}


def save_mc(z: GCElement, algebra_ref, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mc_to_json(z, algebra_ref), fh, indent=2)
        fh.write("\n")


def mc_from_json(obj, A: PDAlgebra | None = None):
    """Returns (algebra, GCElement); ``algebra`` is a builtin name or an inline algebra."""
    if "graphs" not in obj:
        raise ParseError(1, "missing key 'graphs'")
    if A is None:
        ref = obj.get("algebra")
        if isinstance(ref, str):
            A = builtin(ref)
        elif isinstance(ref, dict):
            A = algebra_from_json(ref)
        else:
            raise ParseError(1, "MC file needs an algebra reference")
    degrees = dict(A.basis)
    z = GCElement()
    for j, entry in enumerate(obj["graphs"]):
        try:
            g, c = parse_literal(entry["graph"], degrees)
        except (KeyError, ValueError) as e:
            raise ParseError(j + 1, str(e)) from None
        if "coeff" in entry:
            c = c * Fraction(entry["coeff"])
        if g.n_ext or g.D != A.D:
            raise ParseError(j + 1, "MC graphs must have no external vertices and match D")
        if len(components(g.n_vertices, g.edges)) != 1:
            raise ParseError(j + 1, "MC graphs must be connected")
        r = canonical_form(g.D, 0, g.n_int, g.edges, g.decs)
        if r is not None:
            z.add(r[1], r[0] * c)
    return A, z


def load_mc(path, A: PDAlgebra | None = None):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.lineno, e.msg) from None
    return mc_from_json(obj, A)
