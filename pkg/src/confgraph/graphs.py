"""Decorated graphs, their sign-correct canonical forms, and enumeration.

A graph is read as a graded-commutative monomial

    V_n V_(n+1) ... V_(n+k-1) * s^(e_1) ... s^(e_m) * x_1 ... x_r

where V_w (degree -D) stands for the internal vertex w, s^(uv) (degree D-1)
for an edge and x_j for a decoration (its cohomological degree) sitting on
a vertex.  Vertices are numbered from 0: externals 0..n-1, internals
n..n+k-1.  In text literals externals are written 1..n and internals
n+1..n+k.

Sign rules: s^(uv) = (-1)^D s^(vu); generators commute with the Koszul
sign; relabeling the internal vertices by a permutation p multiplies by
sign(p)^D because the V symbols are permuted.  The canonical form is the
lexicographically smallest (edges, decorations) encoding over all internal
relabelings respecting a color refinement, and a graph that reaches its
canonical encoding with both signs is zero.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product


class Graph:
    """Decorated graph; instances returned by canonicalize are canonical."""

    __slots__ = ("D", "n_ext", "n_int", "edges", "decs", "_hash")

    def __init__(self, D, n_ext, n_int, edges=(), decs=()):
        self.D = D
        self.n_ext = n_ext
        self.n_int = n_int
        self.edges = tuple(tuple(e) for e in edges)
        self.decs = tuple(tuple(x) for x in decs)
        self._hash = hash((D, n_ext, n_int, self.edges, self.decs))

    @property
    def key(self):
        return (self.D, self.n_ext, self.n_int, self.edges, self.decs)

    def __eq__(self, other):
        return isinstance(other, Graph) and self._hash == other._hash and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return sort_key(self) < sort_key(other)

    def __repr__(self):
        return f"<{literal(self)}>"

    @property
    def n_vertices(self):
        return self.n_ext + self.n_int

    @property
    def decorations(self):
        """Per-vertex lists of decoration ids."""
        out = [[] for _ in range(self.n_vertices)]
        for v, _, i in self.decs:
            out[v].append(i)
        return out

    def degree(self):
        return degree(self)


def sort_key(g: Graph):
    return (g.n_int, len(g.edges), g.edges, g.decs)


def degree(g: Graph) -> int:
    """(D-1)*#edges - D*#internal + sum of decoration degrees."""
    return (g.D - 1) * len(g.edges) - g.D * g.n_int + sum(d for _, d, _ in g.decs)


def components(nv, edges):
    parent = list(range(nv))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups = {}
    for v in range(nv):
        groups.setdefault(find(v), []).append(v)
    return [groups[r] for r in sorted(groups)]


def loop_order(g: Graph) -> int:
    """First Betti number of the underlying graph."""
    return len(g.edges) - g.n_vertices + len(components(g.n_vertices, g.edges))


def valence(g: Graph, v, count_decorations=True):
    val = sum((a == v) + (b == v) for a, b in g.edges)
    if count_decorations:
        val += sum(1 for w, _, _ in g.decs if w == v)
    return val


def has_internal_only_component(n, k, edges):
    for comp in components(n + k, edges):
        if comp[0] >= n:
            return True
    return False


def tadpole_vertices(g: Graph):
    return sorted({u for u, v in g.edges if u == v})


# sign engine

def _normalize(D, edges, decs):
    """Bring a monomial into standard generator order.

    Returns (sign, edges, decs) or None when the monomial vanishes.
    """
    sign = 1
    odd_edges = D % 2 == 0
    es = []
    for u, v in edges:
        if u > v:
            u, v = v, u
            if D % 2:
                sign = -sign
        elif u == v and D % 2:
            return None
        es.append((u, v))
    if odd_edges:
        par = 0
        m = len(es)
        for i in range(m):
            ei = es[i]
            for j in range(i + 1, m):
                if es[j] < ei:
                    par ^= 1
        if par:
            sign = -sign
        es.sort()
        for i in range(1, m):
            if es[i] == es[i - 1]:
                return None
    else:
        es.sort()
    ds = list(decs)
    r = len(ds)
    par = 0
    for i in range(r):
        if ds[i][1] % 2:
            di = ds[i]
            for j in range(i + 1, r):
                if ds[j][1] % 2 and ds[j] < di:
                    par ^= 1
    if par:
        sign = -sign
    ds.sort()
    for i in range(1, r):
        if ds[i] == ds[i - 1] and ds[i][1] % 2:
            return None
    return sign, tuple(es), tuple(ds)


def _perm_parity(seq):
    seq = list(seq)
    par = 0
    seen = [False] * len(seq)
    base = min(seq) if seq else 0
    for i in range(len(seq)):
        if not seen[i]:
            j = i
            length = 0
            while not seen[j]:
                seen[j] = True
                j = seq[j] - base
                length += 1
            par ^= (length - 1) & 1
    return par


def _cells(n, k, edges, decs):
    N = n + k
    nbrs = [[] for _ in range(N)]
    tad = [0] * N
    for u, v in edges:
        if u == v:
            tad[u] += 1
        else:
            nbrs[u].append(v)
            nbrs[v].append(u)
    dec_at = [[] for _ in range(N)]
    for v, d, i in decs:
        dec_at[v].append((d, i))
    col = {}
    for v in range(n, N):
        ext = tuple(sorted(w for w in nbrs[v] if w < n))
        col[v] = (tuple(sorted(dec_at[v])), tad[v], ext, len(nbrs[v]))
    while True:
        uniq = sorted(set(col.values()))
        idx = {c: i for i, c in enumerate(uniq)}
        flat = {v: idx[col[v]] for v in col}
        new = {v: (flat[v], tuple(sorted(flat[w] for w in nbrs[v] if w >= n))) for v in col}
        if len(set(new.values())) == len(uniq):
            break
        col = new
    cells = {}
    for v in range(n, N):
        cells.setdefault(flat[v], []).append(v)
    return [cells[c] for c in sorted(cells)]


@lru_cache(maxsize=1 << 18)
def _canonical(D, n, k, edges, decs):
    base = _normalize(D, edges, decs)
    if base is None:
        return None
    if k <= 1:
        s, es, ds = base
        return s, Graph(D, n, k, es, ds)
    cells = _cells(n, k, base[1], base[2])
    best = None
    best_sign = 0
    slots = []
    start = n
    for c in cells:
        slots.append(range(start, start + len(c)))
        start += len(c)
    odd_vertices = D % 2 == 1
    for choice in product(*[permutations(c) for c in cells]):
        mapping = list(range(n + k))
        for cell_perm, slot in zip(choice, slots):
            for old, new in zip(cell_perm, slot):
                mapping[old] = new
        es = [(mapping[u], mapping[v]) for u, v in base[1]]
        ds = [(mapping[v], d, i) for v, d, i in base[2]]
        r = _normalize(D, es, ds)
        s, es, ds = r
        if odd_vertices and _perm_parity(mapping[n:]):
            s = -s
        enc = (es, ds)
        if best is None or enc < best:
            best = enc
            best_sign = s
        elif enc == best and s != best_sign:
            return None
    s = base[0] * best_sign
    return s, Graph(D, n, k, best[0], best[1])


def canonical_form(D, n, k, edges, decs):
    """(sign, canonical Graph) for a raw monomial, or None if it is zero."""
    return _canonical(D, n, k, tuple(tuple(e) for e in edges), tuple(tuple(x) for x in decs))


def canonicalize(g: Graph):
    return canonical_form(g.D, g.n_ext, g.n_int, g.edges, g.decs)


def act_symmetric_group(perm, g: Graph):
    """Relabel external vertex i as perm[i] (0-based); returns (sign, Graph) or None."""
    n = g.n_ext
    if sorted(perm) != list(range(n)):
        raise ValueError("not a permutation of the external labels")
    m = list(perm) + list(range(n, g.n_vertices))
    return canonical_form(g.D, n, g.n_int, [(m[u], m[v]) for u, v in g.edges],
                          [(m[v], d, i) for v, d, i in g.decs])


# linear combinations

class GraphSum(dict):
    """Map canonical Graph -> nonzero Fraction."""

    def add(self, g, c):
        if not c:
            return
        v = self.get(g, 0) + c
        if v:
            self[g] = v
        else:
            self.pop(g, None)

    def add_raw(self, c, D, n, k, edges, decs):
        if not c:
            return
        r = canonical_form(D, n, k, edges, decs)
        if r is not None:
            self.add(r[1], c * r[0])

    def add_sum(self, other, c=1):
        for g, v in other.items():
            self.add(g, c * v)

    def scaled(self, c):
        out = GraphSum()
        for g, v in self.items():
            out.add(g, c * v)
        return out

    def sorted_items(self):
        return sorted(self.items(), key=lambda t: sort_key(t[0]))

    def __repr__(self):
        return " + ".join(f"({v})*{literal(g)}" for g, v in self.sorted_items()) or "0"


def single(g: Graph, c=1) -> GraphSum:
    out = GraphSum()
    r = canonicalize(g)
    if r is not None:
        out.add(r[1], Fraction(c) * r[0])
    return out


# monomial surgery used by the differentials

def split_edge(g: Graph, i, diag, unit):
    """Replace edge i by the diagonal class legs; yields (coeff, edges, decs).

    ``diag`` is a list of (left_id, right_id, coeff, left_deg, right_deg);
    unit legs are dropped.  The derivation passes the k vertex symbols and
    the edges before position i; the new legs are then moved behind the
    remaining edges.
    """
    D = g.D
    m = len(g.edges)
    u, v = g.edges[i]
    base = -1 if (g.n_int * D + (D - 1) * i) % 2 else 1
    rest = g.edges[:i] + g.edges[i + 1:]
    after = m - 1 - i
    for x, y, c, dx, dy in diag:
        legs = []
        if x != unit:
            legs.append((u, dx, x))
        if y != unit:
            legs.append((v, dy, y))
        s = base
        if ((dx if x != unit else 0) + (dy if y != unit else 0)) * (D - 1) * after % 2:
            s = -s
        yield c * s, rest, tuple(legs) + g.decs


def contract_edge(g: Graph, i):
    """Contract edge i (needs an internal endpoint); returns (sign, k, edges, decs) or None.

    The block V_r s^(s r) is moved to the front and deleted, then r is
    renamed s.  For an internal-internal edge the larger label is removed.
    """
    D = g.D
    n, k = g.n_ext, g.n_int
    a, b = g.edges[i]
    if a == b:
        return None
    if max(a, b) < n:
        return None
    r = max(a, b)
    s_ = min(a, b)
    sign = 1
    if (D * (r - n)) % 2:
        sign = -sign
    if ((D - 1) * i) % 2:
        sign = -sign
    if (a, b) == (r, s_) and D % 2:
        sign = -sign

    def ren(x):
        if x == r:
            x = s_
        return x - 1 if x > r else x

    edges = [(ren(p), ren(q)) for j, (p, q) in enumerate(g.edges) if j != i]
    decs = [(ren(w), d, x) for w, d, x in g.decs]
    return sign, k - 1, edges, decs


def extract_internal_components(D, n, k, edges, decs):
    """Split off components without external vertices.

    Returns (sign, k', edges', decs', [(kc, edges_c, decs_c), ...]) where
    the sign is the Koszul sign for moving every such component block to the
    front, in order; each block and the remainder are relabeled order-
    preservingly.  Returns None-free results; callers evaluate the blocks.
    """
    comps = [c for c in components(n + k, edges) if c[0] >= n]
    if not comps:
        return 1, k, list(edges), list(decs), []
    # generator list with parities, tagged by the vertex that owns them
    gens = []
    for w in range(n, n + k):
        gens.append((w, D % 2))
    for (p, q) in edges:
        gens.append((p, (D - 1) % 2))
    for (w, d, _) in decs:
        gens.append((w, d % 2))
    owner = {}
    for ci, comp in enumerate(comps):
        for w in comp:
            owner[w] = ci
    # move blocks to the front one at a time: count odd pairs (outside before inside)
    sign = 1
    tags = [owner.get(w, -1) for w, _ in gens]
    order = list(range(len(gens)))
    for ci in range(len(comps)):
        odd_outside = 0
        par = 0
        for idx in order:
            t = tags[idx]
            if t == ci:
                if gens[idx][1]:
                    par ^= odd_outside & 1
            elif t > ci or t == -1:
                if gens[idx][1]:
                    odd_outside += 1
        if par:
            sign = -sign
        order = [x for x in order if tags[x] == ci] + [x for x in order if tags[x] != ci]
    blocks = []
    for comp in comps:
        cs = set(comp)
        relab = {w: j for j, w in enumerate(comp)}
        e_c = [(relab[p], relab[q]) for p, q in edges if p in cs]
        d_c = [(relab[w], d, x) for w, d, x in decs if w in cs]
        blocks.append((len(comp), e_c, d_c))
    gone = set(owner)
    keep = [w for w in range(n + k) if w not in gone]
    relab = {w: j for j, w in enumerate(keep)}
    e_r = [(relab[p], relab[q]) for p, q in edges if p not in gone]
    d_r = [(relab[w], d, x) for w, d, x in decs if w not in gone]
    return sign, len(keep) - n, e_r, d_r, blocks


# text literals

_LIT_RE = re.compile(r"^\s*graph\s+D=(\d+)\s+ext=(\d+)\s+int=(\d+)\s*(;.*)?$")


def literal(g: Graph, coeff=None) -> str:
    parts = [f"graph D={g.D} ext={g.n_ext} int={g.n_int}"]
    parts.append("edges=" + "".join(f"({u + 1},{v + 1})" for u, v in g.edges))
    per = g.decorations
    for v, ids in enumerate(per):
        if ids:
            parts.append(f"dec[{v + 1}]=" + ",".join(ids))
    if coeff is not None:
        q = Fraction(coeff)
        parts.append(f"coeff={q.numerator}/{q.denominator}")
    return "; ".join(parts)


def parse_literal(text: str, degrees):
    """Parse a graph literal; ``degrees`` maps decoration id -> degree.

    Returns (Graph, Fraction) with the graph exactly as written (raw).
    """
    head, _, tail = text.partition(";")
    m = _LIT_RE.match(head)
    if not m:
        raise ValueError(f"bad graph literal header: {head!r}")
    D, n, k = (int(m.group(j)) for j in (1, 2, 3))
    edges, decs = [], []
    coeff = Fraction(1)
    for field in tail.split(";"):
        field = field.strip()
        if not field:
            continue
        name, _, val = field.partition("=")
        name = name.strip()
        val = val.strip()
        if name == "edges":
            for a, b in re.findall(r"\((\d+)\s*,\s*(\d+)\)", val):
                a, b = int(a) - 1, int(b) - 1
                if not (0 <= a < n + k and 0 <= b < n + k):
                    raise ValueError(f"edge endpoint out of range in {text!r}")
                edges.append((a, b))
        elif name.startswith("dec[") and name.endswith("]"):
            v = int(name[4:-1]) - 1
            if not 0 <= v < n + k:
                raise ValueError(f"decorated vertex out of range in {text!r}")
            for x in val.split(","):
                x = x.strip()
                if x:
                    if x not in degrees:
                        raise ValueError(f"unknown decoration {x!r}")
                    decs.append((v, degrees[x], x))
        elif name == "coeff":
            coeff = Fraction(val)
        else:
            raise ValueError(f"unknown field {name!r} in graph literal")
    return Graph(D, n, k, edges, decs), coeff


# enumeration

def _decoration_monomials(basis, total, max_count=None):
    """Multisets of reduced basis elements with the given total degree.

    ``basis`` is a list of (id, degree); odd elements appear at most once.
    """
    items = sorted(basis, key=lambda t: (t[1], t[0]))
    out = []

    def rec(start, remaining, acc):
        if remaining == 0:
            out.append(tuple(acc))
            return
        if max_count is not None and len(acc) >= max_count:
            return
        for j in range(start, len(items)):
            x, d = items[j]
            if d > remaining:
                continue
            if d % 2 and acc and acc[-1] == (d, x):
                continue
            acc.append((d, x))
            rec(j, remaining - d, acc)
            acc.pop()

    rec(0, total, [])
    return out


def _edge_sets(n, k, E, D, allow_int_tad, allow_ext_tad, min_edge_valence):
    """Edge multisets on n+k vertices with E edges (unordered, u <= v)."""
    N = n + k
    pairs = []
    for u in range(N):
        for v in range(u, N):
            if u == v:
                if D % 2:
                    continue
                if u < n and not allow_ext_tad(u):
                    continue
                if u >= n and not allow_int_tad:
                    continue
            pairs.append((u, v))
    multi = D % 2 == 1  # even edges may repeat
    # vertex v is finished once all pairs with min(pair) == v are decided
    last_index = {}
    for idx, (u, v) in enumerate(pairs):
        last_index[u] = idx
    finish_at = {}
    for v, idx in last_index.items():
        finish_at.setdefault(idx, []).append(v)
    deg = [0] * N
    chosen = []
    out = []
    maxmult = E if multi else 1

    def finished_ok(v):
        if v >= n:
            if deg[v] < min_edge_valence:
                return False
            if v > n and deg[v] > deg[v - 1]:
                return False
        return True

    def rec(idx, remaining):
        if idx == len(pairs):
            if remaining == 0:
                out.append(tuple(chosen))
            return
        u, v = pairs[idx]
        for mult in range(0, min(maxmult, remaining) + 1):
            for _ in range(mult):
                chosen.append((u, v))
                if u == v:
                    deg[u] += 2
                else:
                    deg[u] += 1
                    deg[v] += 1
            ok = True
            for w in finish_at.get(idx, ()):
                if not finished_ok(w):
                    ok = False
                    break
            if ok:
                rec(idx + 1, remaining - mult)
            for _ in range(mult):
                chosen.pop()
                if u == v:
                    deg[u] -= 2
                else:
                    deg[u] -= 1
                    deg[v] -= 1

    if N == 0:
        return [()] if E == 0 else []
    rec(0, E)
    # the last vertex has no pair of its own when tadpoles are excluded
    tail = [v for v in range(N) if v not in last_index]
    if tail:
        kept = []
        for es in out:
            d = [0] * N
            for a, b in es:
                d[a] += 1
                d[b] += 1
            if all(_finished_ok_static(v, d, n, min_edge_valence) for v in tail):
                kept.append(es)
        out = kept
    return out


def _finished_ok_static(v, d, n, min_edge_valence):
    if v >= n:
        if d[v] < min_edge_valence:
            return False
        if v > n and d[v] > d[v - 1]:
            return False
    return True


class Constraints:
    """Basis constraints for enumerate_graphs."""

    def __init__(self, min_internal_valence=1, decorations_count=True,
                 allow_ext_tadpoles=False, allow_int_tadpoles=False, genus_cap=None,
                 forbid_internal_only_components=True, framed=None):
        self.min_internal_valence = min_internal_valence
        self.decorations_count = decorations_count
        self.allow_ext_tadpoles = allow_ext_tadpoles
        self.allow_int_tadpoles = allow_int_tadpoles
        self.genus_cap = genus_cap
        self.forbid_internal_only_components = forbid_internal_only_components
        # optional set of external vertices allowed to carry a tadpole
        self.framed = framed

    def ext_tadpole_ok(self, v):
        if not self.allow_ext_tadpoles:
            return False
        return self.framed is None or v in self.framed

    def admits(self, g: Graph) -> bool:
        n = g.n_ext
        for u, v in g.edges:
            if u == v:
                if u < n and not self.ext_tadpole_ok(u):
                    return False
                if u >= n and not self.allow_int_tadpoles:
                    return False
        if self.forbid_internal_only_components and has_internal_only_component(n, g.n_int, g.edges):
            return False
        for v in range(n, g.n_vertices):
            if valence(g, v, self.decorations_count) < self.min_internal_valence:
                return False
            if valence(g, v, True) == 0:
                return False
        if self.genus_cap is not None and loop_order(g) > self.genus_cap:
            return False
        return True

    def key(self):
        return (self.min_internal_valence, self.decorations_count, self.allow_ext_tadpoles,
                self.allow_int_tadpoles, self.genus_cap, self.forbid_internal_only_components,
                None if self.framed is None else tuple(sorted(self.framed)))


def enumerate_graphs(n_ext, D, constraints: Constraints, k_int, deg, decoration_basis,
                     max_edges=None):
    """All canonical basis graphs with k_int internal vertices and ^*-degree deg.

    ``decoration_basis`` lists reduced (id, degree) pairs.  Graphs that vanish
    by symmetry are excluded; output is sorted by canonical encoding.
    """
    n, k = n_ext, k_int
    if n == 0 and constraints.forbid_internal_only_components and k + n > 0:
        return []
    if n + k == 0:
        return [Graph(D, 0, 0)] if deg == 0 else []
    decdegs = [d for _, d in decoration_basis]
    # deg = (D-1)E - Dk + decdeg, decdeg >= 0
    emax = (deg + D * k) // (D - 1) if D > 1 else None
    if emax is None:
        raise ValueError("D >= 2 required")
    if max_edges is not None:
        emax = min(emax, max_edges)
    found = set()
    # a lone internal vertex with only decorations is connected when n = 0
    min_edge_val = 1 if k and (n or k > 1) else 0
    if not constraints.decorations_count:
        min_edge_val = max(min_edge_val, constraints.min_internal_valence)
    for E in range(0, emax + 1):
        decdeg = deg - (D - 1) * E + D * k
        if decdeg < 0:
            continue
        if decdeg > 0 and not decdegs:
            continue
        for es in _edge_sets(n, k, E, D, constraints.allow_int_tadpoles,
                             constraints.ext_tadpole_ok, min_edge_val):
            if constraints.forbid_internal_only_components and has_internal_only_component(n, k, es):
                continue
            if constraints.genus_cap is not None:
                if E - (n + k) + len(components(n + k, es)) > constraints.genus_cap:
                    continue
            for decs in _distribute(n + k, decoration_basis, decdeg):
                r = canonical_form(D, n, k, es, decs)
                if r is None:
                    continue
                g = r[1]
                if g in found:
                    continue
                if constraints.admits(g):
                    found.add(g)
    return sorted(found, key=sort_key)


@lru_cache(maxsize=4096)
def _monomials_cached(basis, total):
    return _decoration_monomials(list(basis), total)


def _distribute(N, basis, total):
    """Assignments of decoration monomials to N vertices with given total degree."""
    basis = tuple(sorted(basis, key=lambda t: (t[1], t[0])))
    out = []

    def rec(v, remaining, acc):
        if v == N - 1:
            for mono in _monomials_cached(basis, remaining):
                out.append(acc + [(v, d, x) for d, x in mono])
            return
        for t in range(remaining + 1):
            for mono in _monomials_cached(basis, t):
                rec(v + 1, remaining - t, acc + [(v, d, x) for d, x in mono])

    if N == 0:
        return [[]] if total == 0 else []
    rec(0, total, [])
    return out
