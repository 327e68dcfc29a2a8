"""The Lambrechts-Stanley model F(A, n) and the sBG dimension recursion.

F(A, n) is A^{(x)n}[w_ij] modulo w_ji = (-1)^D w_ij, w_ij^2 = 0, the
three-term relation and (p_i^*(a) - p_j^*(a)) w_ij = 0, with d w_ij equal
to the diagonal class placed on legs i and j.

Normal form: every monomial is rewritten to a forest in which each vertex
has at most one w-edge to a smaller vertex (the three-term relation pushes
a second such edge down), and all A-factors of a cluster are multiplied at
its smallest vertex.  Elements are dicts {(edges, afactors): Fraction}
with edges a sorted tuple of pairs (i, j), i < j, 0-based, and afactors a
tuple of one basis id per vertex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .graphs import Graph, components
from .linalg import BettiTable, SparseMatrix, betti_of_complex


class AlgebraMismatch(ValueError):
    pass


def _odd(D):
    return (D - 1) % 2


@lru_cache(maxsize=None)
def _reduce_omegas(D, edges):
    """Rewrite an ordered tuple of oriented edges (i < j) into forest normal form.

    Returns a tuple of (sorted_edges, coeff).
    """
    odd = _odd(D)
    if len(set(edges)) != len(edges):
        return ()
    # sort with the Koszul sign of the edge generators
    lst = list(edges)
    sign = 1
    for i in range(len(lst)):
        for j in range(len(lst) - 1 - i):
            if lst[j] > lst[j + 1]:
                lst[j], lst[j + 1] = lst[j + 1], lst[j]
                if odd:
                    sign = -sign
    by_top = {}
    for p, (a, j) in enumerate(lst):
        by_top.setdefault(j, []).append(p)
    bad = sorted(j for j, ps in by_top.items() if len(ps) > 1)
    if not bad:
        return ((tuple(lst), sign),)
    j = bad[0]
    p, q = by_top[j][0], by_top[j][1]
    a, b = lst[p][0], lst[q][0]
    # move edge q next to p
    between = q - p - 1
    if odd and between % 2:
        sign = -sign
    rest_before = lst[:p]
    rest_mid = lst[p + 1:q]
    rest_after = lst[q + 1:]
    # w_aj w_bj = - w_ab w_aj - (-1)^D w_bj w_ab
    s2 = 1 if D % 2 == 0 else -1
    out = {}
    for coeff, pair in ((-1, [(a, b), (a, j)]), (-s2, [(b, j), (a, b)])):
        new = tuple(rest_before + pair + rest_mid + rest_after)
        for e, c in _reduce_omegas(D, new):
            out[e] = out.get(e, 0) + sign * coeff * c
    return tuple((e, c) for e, c in sorted(out.items()) if c)


def _clusters(n, edges):
    root = {}
    for comp in components(n, edges):
        r = comp[0]
        for v in comp:
            root[v] = r
    return root


class FModel:
    """Arithmetic in F(A, n)."""

    def __init__(self, A, n):
        self.A = A
        self.n = n
        self.D = A.D
        self.diag = [(x, y, c) for x, y, c in A.diagonal()]

    def degree(self, key):
        edges, afs = key
        return (self.D - 1) * len(edges) + sum(self.A.degree(x) for x in afs)

    def reduce(self, gens, coeff=1):
        """Normal form of an ordered generator list.

        Items are ("w", i, j) or ("a", v, basis_id); vertices 0-based.
        """
        A, D = self.A, self.D
        odd = _odd(D)
        sign = 1
        omegas, afs = [], []
        parity_seen_a = 0
        # move A-factors behind all w's, stably
        for item in gens:
            if item[0] == "w":
                _, i, j = item
                if i == j:
                    return {}
                if i > j:
                    i, j = j, i
                    if D % 2:
                        sign = -sign
                if odd and parity_seen_a:
                    sign = -sign
                omegas.append((i, j))
            else:
                _, v, x = item
                if x == A.unit:
                    continue
                afs.append((v, x))
                parity_seen_a ^= A.degree(x) % 2
        out = {}
        for edges, c in _reduce_omegas(D, tuple(omegas)):
            root = _clusters(self.n, edges)
            moved = [(root[v], x) for v, x in afs]
            # stable sort by vertex with the Koszul sign of the A-degrees
            s = 1
            lst = list(moved)
            for i in range(len(lst)):
                for j in range(len(lst) - 1 - i):
                    if lst[j][0] > lst[j + 1][0]:
                        if A.degree(lst[j][1]) % 2 and A.degree(lst[j + 1][1]) % 2:
                            s = -s
                        lst[j], lst[j + 1] = lst[j + 1], lst[j]
            per = [[] for _ in range(self.n)]
            for v, x in lst:
                per[v].append(x)
            factors = []
            for v in range(self.n):
                vec = A.mul_many(per[v])
                if not vec:
                    factors = None
                    break
                factors.append(sorted(vec.items()))
            if factors is None:
                continue
            for choice in product(*factors):
                val = Fraction(coeff) * sign * c * s
                ids = []
                for x, w in choice:
                    val *= w
                    ids.append(x)
                if val:
                    key = (edges, tuple(ids))
                    out[key] = out.get(key, 0) + val
        return {k: v for k, v in out.items() if v}

    def key_gens(self, key):
        edges, afs = key
        return [("w", i, j) for i, j in edges] + [("a", v, x) for v, x in enumerate(afs)]

    def d(self, key):
        """The differential on a normal-form basis element."""
        gens = self.key_gens(key)
        out = {}
        odd = _odd(self.D)
        for s, item in enumerate(gens):
            if item[0] != "w":
                continue
            _, i, j = item
            pre = -1 if odd and s % 2 else 1
            for x, y, c in self.diag:
                new = gens[:s] + [("a", i, x), ("a", j, y)] + gens[s + 1:]
                for k2, v in self.reduce(new, pre * c).items():
                    out[k2] = out.get(k2, 0) + v
        return {k: v for k, v in out.items() if v}

    def d_gens(self, gens, coeff=1):
        """Differential of an arbitrary generator list (before reduction)."""
        out = {}
        odd = _odd(self.D)
        nw = 0
        for s, item in enumerate(gens):
            if item[0] != "w":
                if self.A.degree(item[2]) % 2:
                    nw += 1
                continue
            _, i, j = item
            pre = -1 if (odd * sum(1 for t in gens[:s] if t[0] == "w")
                         + sum(self.A.degree(t[2]) for t in gens[:s] if t[0] == "a")) % 2 else 1
            for x, y, c in self.diag:
                new = gens[:s] + [("a", i, x), ("a", j, y)] + gens[s + 1:]
                for k2, v in self.reduce(new, pre * c * coeff).items():
                    out[k2] = out.get(k2, 0) + v
        return {k: v for k, v in out.items() if v}

    def basis(self):
        """All normal-form basis elements, sorted by (degree, key)."""
        A, n = self.A, self.n
        out = []
        parents = [[None] + list(range(j)) for j in range(n)]
        for choice in product(*parents):
            edges = tuple(sorted((p, j) for j, p in enumerate(choice) if p is not None))
            root = _clusters(n, edges)
            roots = sorted(set(root.values()))
            for ids in product(*[A.ids for _ in roots]):
                afs = [A.unit] * n
                for r, x in zip(roots, ids):
                    afs[r] = x
                out.append((edges, tuple(afs)))
        return sorted(out, key=lambda k: (self.degree(k), k))


@dataclass
class LSComplex:
    A: object
    n: int
    basis: dict                 # degree -> list of keys
    diffs: dict                 # degree -> SparseMatrix
    model: FModel = field(repr=False, default=None)

    def dims(self):
        return {p: len(b) for p, b in self.basis.items()}


def build_F(A, n, lo=None, hi=None) -> LSComplex:
    """The whole finite complex F(A, n); lo/hi only pad the degree range."""
    if n < 1:
        raise ValueError("n >= 1 required")
    M = FModel(A, n)
    by = {}
    for key in M.basis():
        by.setdefault(M.degree(key), []).append(key)
    top = max(by)
    lo = 0 if lo is None else min(lo, 0)
    hi = top if hi is None else max(hi, top)
    basis = {p: by.get(p, []) for p in range(lo - 1, hi + 2)}
    index = {}
    for p, b in basis.items():
        for i, key in enumerate(b):
            index[key] = i
    diffs = {}
    for p in range(lo - 1, hi + 1):
        trip = []
        for j, key in enumerate(basis[p]):
            for k2, c in M.d(key).items():
                trip.append((index[k2], j, c))
        diffs[p] = SparseMatrix(len(basis[p + 1]), len(basis[p]), trip)
    return LSComplex(A, n, basis, diffs, M)


def ls_betti(A, n, lo, hi) -> BettiTable:
    cx = build_F(A, n, lo, hi)
    full = betti_of_complex(cx.diffs, lo, hi)
    dims = {p: len(cx.basis.get(p, ())) for p in range(lo, hi + 1)}
    stab = {p: True for p in range(lo, hi + 1)}
    return BettiTable(lo, hi, dims, {p: full.betti[p] for p in range(lo, hi + 1)}, stab,
                      {"finite": True})


def project_graphs_to_F(g: Graph, A, coeff=1):
    """Graphs with internal vertices go to 0; edge (i, j) to w_ij; decorations to p_i^*."""
    if g.D != A.D:
        raise AlgebraMismatch("graph dimension does not match the algebra")
    if g.n_int:
        return {}
    M = FModel(A, g.n_ext)
    gens = [("w", u, v) for u, v in g.edges] + [("a", v, x) for v, _, x in g.decs]
    return M.reduce(gens, coeff)


def project_sum(gs, A, n):
    out = {}
    for g, c in gs.items():
        for k, v in project_graphs_to_F(g, A, c).items():
            out[k] = out.get(k, 0) + v
    return {k: v for k, v in out.items() if v}


def relation_generators(A, n):
    """Representatives of the relation ideal as generator lists (for closure checks)."""
    rels = []
    D = A.D
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    for i, j in pairs:
        # w_ji - (-1)^D w_ij
        rels.append([(1, [("w", j, i)]), (-(-1) ** D, [("w", i, j)])])
        rels.append([(1, [("w", i, j), ("w", i, j)])])
        for x in A.ids:
            if x == A.unit:
                continue
            rels.append([(1, [("a", i, x), ("w", i, j)]), (-1, [("a", j, x), ("w", i, j)])])
    for i, j, k in product(range(n), repeat=3):
        if len({i, j, k}) == 3:
            rels.append([(1, [("w", i, j), ("w", i, k)]), (1, [("w", j, k), ("w", j, i)]),
                         (1, [("w", k, i), ("w", k, j)])])
    return rels


def sbg_polynomial(poincare, n, D):
    """P_0 = 1, P_n = P_(n-1) * P_A + (n-1) t^(D-1) P_(n-1); coefficient lists."""
    P = [1]
    for m in range(1, n + 1):
        new = [0] * (len(P) + max(len(poincare) - 1, D - 1))
        for i, a in enumerate(P):
            for j, b in enumerate(poincare):
                new[i + j] += a * b
            new[i + D - 1] += (m - 1) * a
        while len(new) > 1 and new[-1] == 0:
            new.pop()
        P = new
    return P
