"""Twisted graph complexes as finite graded complexes.

Every complex here is truncated at a level K (at most K internal vertices,
and for flavors carrying decorations also at most K edges, which bounds the
internal vertex count).  When the Maurer-Cartan element is supported on
single-vertex graphs the differential lowers the edge count by exactly one,
so ``#edges + degree`` is a grading and the complex splits into sectors
that are finite in each degree.  Betti numbers are assembled only from
sectors whose cells in degrees p-1, p, p+1 are provably complete at the
given level; a degree is stabilized when the probe level agrees.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .graphs import (Constraints, Graph, GraphSum, canonical_form, contract_edge,
                     enumerate_graphs, extract_internal_components, split_edge,
                     sort_key)
from .linalg import BettiTable, SparseMatrix, check_composition, rank

log = logging.getLogger(__name__)

KINDS = ("GraphsD", "GraphsM", "GraphsM_NoTadpole", "graphsM_reduced", "graphsM_forest", "BV")



def contraction_sign(D):
    """Relative sign (-1)^(D+1) of the contraction part against splitting.

    With the monomial sign model of graphs.py this is the unique choice
    for which d^2 = 0 once decorations are present.
    """
    return -1 if D % 2 == 0 else 1


class FlavorViolation(ValueError):
    pass


class Flavor:
    def __init__(self, kind, D=None, algebra=None, mc=None, framed=None):
        if kind not in KINDS:
            raise FlavorViolation(f"unknown flavor {kind!r}")
        self.kind = kind
        self.algebra = algebra
        if algebra is not None:
            D = algebra.D if D is None else D
            if D != algebra.D:
                raise FlavorViolation("dimension does not match the algebra")
        if D is None:
            raise FlavorViolation("dimension required")
        self.D = D
        self.mc = mc if mc is not None else {}
        if kind != "GraphsD" and algebra is None:
            raise FlavorViolation(f"{kind} needs an algebra")
        if kind == "BV":
            if D != 2:
                raise FlavorViolation("framed complexes exist only for D = 2")
            self.framed = frozenset(framed or ())
        else:
            self.framed = None
        self.tadpoles = self._tadpole_policy()
        if kind == "graphsM_reduced" or kind == "graphsM_forest":
            for g in self.mc:
                if g.n_int > 1 and any(_valence(g, v) < 3 for v in range(g.n_int)):
                    raise FlavorViolation("reduced models need a Maurer-Cartan element whose "
                                          "multi-vertex part is at least trivalent")
        self.single_vertex_mc = all(g.n_int == 1 and not g.edges for g in self.mc)
        self._diag = None

    def _tadpole_policy(self):
        """(internal, external) tadpole permissions."""
        if self.D % 2:
            return (False, False)
        if self.kind in ("GraphsM", "graphsM_reduced"):
            ok = self.algebra.euler_characteristic() == 0
            return (ok, ok)
        if self.kind == "BV":
            return (False, True)
        return (False, False)

    @property
    def tadpoles_excluded(self):
        return (self.kind in ("GraphsM", "graphsM_reduced") and self.D % 2 == 0
                and not self.tadpoles[0])

    def constraints(self):
        k = self.kind
        if k == "GraphsD":
            return Constraints(min_internal_valence=3, decorations_count=False)
        if k in ("GraphsM", "GraphsM_NoTadpole", "BV"):
            return Constraints(min_internal_valence=1, allow_int_tadpoles=self.tadpoles[0],
                               allow_ext_tadpoles=self.tadpoles[1], framed=self.framed)
        if k == "graphsM_reduced":
            return Constraints(min_internal_valence=3, allow_int_tadpoles=self.tadpoles[0],
                               allow_ext_tadpoles=self.tadpoles[1])
        return Constraints(min_internal_valence=3, genus_cap=0)

    def decoration_basis(self):
        if self.algebra is None:
            return []
        return self.algebra.reduced

    def diag(self):
        if self._diag is None:
            A = self.algebra
            self._diag = [(x, y, c, A.degree(x), A.degree(y)) for x, y, c in A.diagonal()]
        return self._diag

    def admits(self, g: Graph):
        return self._constraints_cached().admits(g)

    def _constraints_cached(self):
        if not hasattr(self, "_cons"):
            self._cons = self.constraints()
        return self._cons

    def key(self):
        alg = self.algebra.key() if self.algebra is not None else ""
        mc = sorted((repr(g.key), str(c)) for g, c in self.mc.items())
        return repr((self.kind, self.D, alg, mc,
                     None if self.framed is None else sorted(self.framed)))

    def __repr__(self):
        name = self.algebra.name if self.algebra is not None else ""
        return f"Flavor({self.kind}, D={self.D}, {name})"


def _valence(g, v_int):
    v = g.n_ext + v_int
    return sum((a == v) + (b == v) for a, b in g.edges) + sum(1 for w, _, _ in g.decs if w == v)


def evaluate_mc(mc, D, kc, edges, decs):
    """Value of the partition function on an internal-only connected block."""
    r = canonical_form(D, 0, kc, edges, decs)
    if r is None:
        return 0
    return r[0] * mc.get(r[1], 0)


def _emit(out: GraphSum, coeff, flavor: Flavor, n, k, edges, decs, project=True):
    D = flavor.D
    s, k2, e2, d2, blocks = extract_internal_components(D, n, k, edges, decs)
    for kc, ec, dc in blocks:
        z = evaluate_mc(flavor.mc, D, kc, ec, dc)
        if not z:
            return
        s *= z
    r = canonical_form(D, n, k2, e2, d2)
    if r is None:
        return
    g = r[1]
    if project and not flavor.admits(g):
        return
    out.add(g, coeff * s * r[0])


def d_graphs(g: Graph, flavor: Flavor, project=True) -> GraphSum:
    """Differential of a basis graph: splitting, contraction and the Z-cut."""
    if g.D != flavor.D:
        raise FlavorViolation("graph dimension does not match the flavor")
    out = GraphSum()
    D = g.D
    n, k = g.n_ext, g.n_int
    split = flavor.kind != "GraphsD"
    diag = flavor.diag() if split else None
    unit = flavor.algebra.unit if split else None
    for i, (u, v) in enumerate(g.edges):
        if split:
            for c, edges, decs in split_edge(g, i, diag, unit):
                _emit(out, c, flavor, n, k, edges, decs, project)
        if u != v and max(u, v) >= n:
            r = contract_edge(g, i)
            if r is not None:
                s, k2, edges, decs = r
                _emit(out, contraction_sign(D) * s, flavor, n, k2, edges, decs, project)
    return out


def sector(g: Graph):
    return len(g.edges) + g.degree()


@dataclass
class GradedComplex:
    flavor: Flavor
    n_ext: int
    k_max: int
    lo: int
    hi: int
    basis: dict                      # degree -> list of Graph
    diffs: dict                      # degree -> SparseMatrix d^p
    index: dict = field(default_factory=dict)
    leaked: dict = field(default_factory=dict)  # degree -> count of targets outside the basis

    def dims(self):
        return {p: len(b) for p, b in self.basis.items()}

    def position(self, g):
        return self.index.get(g)


def _edge_cap(flavor, k_max):
    return None if flavor.kind == "GraphsD" else k_max


def _shard_caps(flavor, k_max, edge_cap):
    cap = _edge_cap(flavor, k_max)
    if edge_cap is not None and cap is not None:
        cap = min(cap, edge_cap)
    return cap


def _enumerate_shard(args):
    """Basis graphs of one (degree, internal count) shard."""
    flavor, n, deg, k, cap = args
    cons = flavor._constraints_cached()
    return enumerate_graphs(n, flavor.D, cons, k, deg, flavor.decoration_basis(), max_edges=cap)


def enumerate_basis(flavor: Flavor, n, deg, k_max, edge_cap=None):
    cap = _shard_caps(flavor, k_max, edge_cap)
    if cap is not None and cap < 0:
        return []
    basis = []
    for k in range(0, k_max + 1):
        basis.extend(_enumerate_shard((flavor, n, deg, k, cap)))
    return sorted(basis, key=sort_key)


def _diff_shard(args):
    flavor, graphs = args
    return [sorted(d_graphs(g, flavor).items(), key=lambda t: sort_key(t[0])) for g in graphs]


def _complex_key(flavor, n_ext, lo, hi, k_max, sector_max):
    return repr(("complex", 1, flavor.key(), n_ext, lo, hi, k_max, sector_max))


def build_complex(flavor: Flavor, n_ext, lo, hi, k_max, check=True,
                  sector_max=None, cache=None, workers=1) -> GradedComplex:
    """Basis in degrees lo..hi and the differentials between them.

    With ``sector_max`` only graphs with #edges + degree <= sector_max are
    kept; since d preserves that sum and lowers the edge count this is
    still a subcomplex.  ``cache`` (see cache.py) stores the basis listing
    and the matrix triplets; ``workers`` > 1 spreads the (degree, k_int)
    shards over processes, which does not change the result.
    """
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    key = _complex_key(flavor, n_ext, lo, hi, k_max, sector_max)
    if cache is not None:
        hit = cache.load_complex(key, flavor)
        if hit is not None:
            basis, diffs, leaked = hit
            return _finish(flavor, n_ext, k_max, lo, hi, basis, diffs, leaked, check)
    caps = {p: _shard_caps(flavor, k_max, None if sector_max is None else sector_max - p)
            for p in range(lo, hi + 1)}
    jobs = [(flavor, n_ext, p, k, caps[p]) for p in range(lo, hi + 1)
            for k in range(0, k_max + 1) if caps[p] is None or caps[p] >= 0]
    results = _pmap(_enumerate_shard, jobs, workers)
    basis = {p: [] for p in range(lo, hi + 1)}
    for job, gs in zip(jobs, results):
        basis[job[2]].extend(gs)
    for p in basis:
        basis[p].sort(key=sort_key)
    index = {}
    for p, b in basis.items():
        for i, g in enumerate(b):
            index[g] = (p, i)
    djobs = [(flavor, basis[p]) for p in range(lo, hi)]
    images = _pmap(_diff_shard, djobs, workers)
    diffs = {}
    leaked = {}
    for p, imgs in zip(range(lo, hi), images):
        trip = []
        miss = 0
        for j, terms in enumerate(imgs):
            for h, c in terms:
                pos = index.get(h)
                if pos is None:
                    miss += 1
                    continue
                trip.append((pos[1], j, c))
        diffs[p] = SparseMatrix(len(basis[p + 1]), len(basis[p]), trip)
        leaked[p] = miss
        if miss:
            log.debug("degree %d: %d differential terms left the truncated basis", p, miss)
    if cache is not None:
        cache.store_complex(key, basis, diffs, leaked)
    return _finish(flavor, n_ext, k_max, lo, hi, basis, diffs, leaked, check)


def _finish(flavor, n_ext, k_max, lo, hi, basis, diffs, leaked, check):
    index = {}
    for p, b in basis.items():
        for i, g in enumerate(b):
            index[g] = (p, i)
    cx = GradedComplex(flavor, n_ext, k_max, lo, hi, basis, diffs, index, leaked)
    if check:
        check_composition(diffs)
    return cx


def _pmap(fn, jobs, workers):
    if workers is None or workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def _cell_closed(flavor: Flavor, w, q, k_max):
    """Whether every graph of sector w in degree q lies inside level k_max."""
    E = w - q
    if E < 0:
        return True
    if flavor.kind == "GraphsD":
        D = flavor.D
        num = (D - 1) * E - q
        if num < 0 or num % D:
            return True
        return num // D <= k_max
    return E <= k_max


def sector_betti(cx: GradedComplex, lo, hi):
    """Per-degree Betti numbers summed over complete sectors.

    Returns (betti, counted) where counted[p] lists the sectors used.
    """
    flavor = cx.flavor
    by = {}
    for p, b in cx.basis.items():
        for i, g in enumerate(b):
            by.setdefault(sector(g), {}).setdefault(p, []).append(i)
    betti, counted = {}, {}
    for p in range(lo, hi + 1):
        total = 0
        used = []
        for w in sorted(by):
            if not all(_cell_closed(flavor, w, q, cx.k_max) for q in (p - 1, p, p + 1)):
                continue
            cells = by[w]
            dim = len(cells.get(p, ()))
            if not dim:
                continue
            r_out = _sub_rank(cx, p, cells.get(p, ()), cells.get(p + 1, ()))
            r_in = _sub_rank(cx, p - 1, cells.get(p - 1, ()), cells.get(p, ()))
            b = dim - r_out - r_in
            if b:
                used.append((w, b))
            total += b
        betti[p] = total
        counted[p] = used
    return betti, counted


def _sub_rank(cx, p, cols, rows):
    if not cols or not rows or p not in cx.diffs:
        return 0
    cset = {c: j for j, c in enumerate(cols)}
    rset = {r: i for i, r in enumerate(rows)}
    trip = [(rset[r], cset[c], v) for r, c, v in cx.diffs[p].entries()
            if c in cset and r in rset]
    return rank(SparseMatrix(len(rows), len(cols), trip))


def plain_betti(cx: GradedComplex, lo, hi):
    ranks = {p: rank(d) for p, d in cx.diffs.items()}
    return {p: len(cx.basis.get(p, ())) - ranks.get(p, 0) - ranks.get(p - 1, 0)
            for p in range(lo, hi + 1)}


def betti(flavor: Flavor, n_ext, lo, hi, k_max, k_probe=None, cache=None,
          workers=1) -> BettiTable:
    """Betti numbers with stabilization flags from a probe level."""
    if k_probe is None:
        k_probe = k_max + 1
    if k_probe <= k_max:
        raise ValueError("k_probe must exceed k_max")
    graded = flavor.kind == "GraphsD" or flavor.single_vertex_mc
    results = []
    for K in (k_max, k_probe):
        # sectors above K + hi - 1 are never complete for a degree <= hi
        smax = K + hi - 1 if graded and flavor.kind != "GraphsD" else None
        cx = build_complex(flavor, n_ext, lo - 1, hi + 1, K, sector_max=smax, cache=cache,
                           workers=workers)
        if graded:
            b, used = sector_betti(cx, lo, hi)
        else:
            b, used = plain_betti(cx, lo, hi), {}
        results.append((cx, b, used))
    (cx0, b0, used0), (cx1, b1, _) = results
    stab = {}
    for p in range(lo, hi + 1):
        same = b0[p] == b1[p]
        if not graded:
            grew = any(len(cx1.basis[q]) != len(cx0.basis[q]) for q in (p - 1, p, p + 1))
            same = same and not grew
        stab[p] = same
    dims = {p: len(cx0.basis[p]) for p in range(lo, hi + 1)}
    extra = {"k_max": k_max, "k_probe": k_probe, "sector_graded": graded,
             "sector_max": k_max + hi - 1 if graded and flavor.kind != "GraphsD" else None,
             "betti_probe": [b1[p] for p in range(lo, hi + 1)],
             "dims_probe": [len(cx1.basis[p]) for p in range(lo, hi + 1)],
             "sectors": {p: used0[p] for p in used0} if graded else {},
             "tadpoles_excluded": flavor.tadpoles_excluded}
    return BettiTable(lo, hi, dims, b0, stab, extra)


def default_mc(algebra):
    from .gc import z0
    return z0(algebra)


def make_flavor(kind, algebra=None, D=None, mc="z0", framed=None):
    if kind == "GraphsD":
        return Flavor(kind, D=D if D is not None else algebra.D)
    if isinstance(mc, str) and mc == "z0":
        mc = default_mc(algebra)
    return Flavor(kind, algebra=algebra, mc=mc, framed=framed)


def coact_graphs(g: Graph, flavor: Flavor, blocks):
    """Coaction of a module graph along a partition of the external vertices.

    Returns {(module_graph, (operad_graph_1, ...)): coeff} summing over the
    subgraphs that can be collapsed; internal vertices go either to a block
    subgraph (when every edge of theirs stays inside that block) or to the
    module factor.
    """
    from .operad import coact_internal
    if flavor.kind == "GraphsM_NoTadpole":
        raise FlavorViolation("the tadpole-free flavor carries no coaction")
    return coact_internal(g, blocks, flavor)


@dataclass
class D2Report:
    flavor: str
    n_ext: int
    k_max: int
    window: tuple
    checked: int
    failures: int
    witness: object = None

    @property
    def holds(self):
        return self.failures == 0

    def as_dict(self):
        from .graphs import literal
        return {"flavor": self.flavor, "n": self.n_ext, "k_max": self.k_max,
                "window": list(self.window), "checked": self.checked,
                "failures": self.failures, "holds": self.holds,
                "witness": None if self.witness is None else literal(self.witness)}


def check_d2(flavor: Flavor, n_ext, lo, hi, k_max) -> D2Report:
    """d(d g) = 0 term by term for every basis graph in the window (no truncation)."""
    checked = failures = 0
    witness = None
    memo = {}

    def d(g):
        r = memo.get(g)
        if r is None:
            r = memo[g] = d_graphs(g, flavor)
        return r

    for p in range(lo, hi + 1):
        for g in enumerate_basis(flavor, n_ext, p, k_max):
            checked += 1
            acc = GraphSum()
            for h, c in d(g).items():
                acc.add_sum(d(h), c)
            if any(acc.values()):
                failures += 1
                if witness is None:
                    witness = g
    return D2Report(flavor.kind, n_ext, k_max, (lo, hi), checked, failures, witness)
