"""Exact sparse linear algebra over the rationals.

Ranks are computed by fraction-free elimination on integer rows (each row is
rescaled to a primitive integer vector before elimination starts and after
every update).  Pivots follow a Markowitz-style rule: the shortest remaining
row, then within it the column touching the fewest remaining rows, ties
broken by lowest row index and then lowest column index.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

log = logging.getLogger(__name__)


class CompositionNotZero(Exception):
    def __init__(self, degree):
        super().__init__(f"d^{degree + 1} o d^{degree} != 0")
        self.degree = degree


class DimensionMismatch(ValueError):
    pass


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


class SparseMatrix:
    """Immutable sparse rational matrix stored as {(row, col): Fraction}."""

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, rows: int, cols: int, entries=()):
        data = {}
        if isinstance(entries, dict):
            entries = entries.items()
            items = ((r, c, v) for (r, c), v in entries)
        else:
            items = entries
        for r, c, v in items:
            if not (0 <= r < rows and 0 <= c < cols):
                raise IndexError(f"entry ({r},{c}) outside {rows}x{cols}")
            v = _frac(v)
            key = (r, c)
            if key in data:
                v = data[key] + v
            if v:
                data[key] = v
            else:
                data.pop(key, None)
        self.rows = rows
        self.cols = cols
        self._data = data

    @classmethod
    def identity(cls, n):
        return cls(n, n, [(i, i, 1) for i in range(n)])

    @classmethod
    def zero(cls, rows, cols):
        return cls(rows, cols)

    @classmethod
    def from_dense(cls, rows):
        rows = [list(r) for r in rows]
        nc = len(rows[0]) if rows else 0
        return cls(len(rows), nc,
                   [(i, j, v) for i, r in enumerate(rows) for j, v in enumerate(r) if v])

    @property
    def nnz(self):
        return len(self._data)

    def entries(self):
        """Stored entries sorted by (row, col)."""
        return [(r, c, self._data[(r, c)]) for r, c in sorted(self._data)]

    def get(self, r, c):
        return self._data.get((r, c), Fraction(0))

    def transpose(self):
        return SparseMatrix(self.cols, self.rows, [(c, r, v) for (r, c), v in self._data.items()])

    def to_dense(self):
        out = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for (r, c), v in self._data.items():
            out[r][c] = v
        return out

    def row_dicts(self):
        rows = [dict() for _ in range(self.rows)]
        for (r, c), v in self._data.items():
            rows[r][c] = v
        return rows

    def matvec(self, x):
        if len(x) != self.cols:
            raise DimensionMismatch(f"vector of length {len(x)} for {self.cols} columns")
        out = [Fraction(0)] * self.rows
        for (r, c), v in self._data.items():
            if x[c]:
                out[r] += v * x[c]
        return out

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"{self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        by_row = {}
        for (r, c), v in other._data.items():
            by_row.setdefault(r, []).append((c, v))
        acc = {}
        for (r, k), v in self._data.items():
            for c, w in by_row.get(k, ()):
                key = (r, c)
                acc[key] = acc.get(key, 0) + v * w
        return SparseMatrix(self.rows, other.cols, {k: v for k, v in acc.items() if v})

    def is_zero(self):
        return not self._data

    def __eq__(self, other):
        return (isinstance(other, SparseMatrix) and self.rows == other.rows
                and self.cols == other.cols and self._data == other._data)

    def __hash__(self):
        return hash((self.rows, self.cols, frozenset(self._data.items())))

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz})"

    # debug text format: header "rows cols nnz" then "row col num/den" lines
    def dumps(self) -> str:
        lines = [f"{self.rows} {self.cols} {self.nnz}"]
        for r, c, v in self.entries():
            lines.append(f"{r} {c} {v.numerator}/{v.denominator}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SparseMatrix":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty matrix dump")
        rows, cols, nnz = (int(t) for t in lines[0].split())
        body = lines[1:]
        if len(body) != nnz:
            raise ValueError(f"header announces {nnz} entries, found {len(body)}")
        ents = []
        for ln in body:
            r, c, q = ln.split()
            ents.append((int(r), int(c), Fraction(q)))
        return cls(rows, cols, ents)


def _primitive(row: dict) -> dict:
    g = 0
    for v in row.values():
        g = gcd(g, v)
        if g == 1:
            return row
    if g > 1:
        return {c: v // g for c, v in row.items()}
    return row


def _integer_rows(m: SparseMatrix):
    rows = {}
    for r, rd in enumerate(m.row_dicts()):
        if not rd:
            continue
        den = 1
        for v in rd.values():
            den = den * v.denominator // gcd(den, v.denominator)
        rows[r] = _primitive({c: int(v * den) for c, v in rd.items()})
    return rows


def rank(m: SparseMatrix) -> int:
    """Exact rank over Q."""
    rows = _integer_rows(m)
    col_rows = {}
    for r, rd in rows.items():
        for c in rd:
            col_rows.setdefault(c, set()).add(r)
    rk = 0
    while rows:
        # Markowitz-style choice: shortest row, then sparsest column
        pr = min(rows, key=lambda r: (len(rows[r]), r))
        prow = rows.pop(pr)
        pc = min(prow, key=lambda c: (len(col_rows[c]), c))
        for c in prow:
            col_rows[c].discard(pr)
        pv = prow[pc]
        rk += 1
        for r in sorted(col_rows[pc]):
            row = rows[r]
            rv = row[pc]
            new = {}
            for c, v in row.items():
                new[c] = v * pv
            for c, v in prow.items():
                x = new.get(c, 0) - rv * v
                if x:
                    new[c] = x
                else:
                    new.pop(c, None)
            for c in row:
                if c not in new:
                    col_rows[c].discard(r)
            for c in new:
                if c not in row:
                    col_rows.setdefault(c, set()).add(r)
            if new:
                rows[r] = _primitive(new)
            else:
                del rows[r]
        del col_rows[pc]
    return rk


def in_image(m: SparseMatrix, v):
    """Return (True, witness) if m @ witness == v, else (False, None)."""
    v = [_frac(x) for x in v]
    if len(v) != m.rows:
        raise DimensionMismatch(f"vector of length {len(v)} for {m.rows} rows")
    # eliminate on the columns of m, carrying an identity block to recover
    # the combination; rows here are the columns of m
    t = m.transpose().row_dicts()
    target = {i: x for i, x in enumerate(v) if x}
    if not target:
        return True, [Fraction(0)] * m.cols
    basis = []  # (pivot_coord, vector, combination)
    pivots = {}
    for j in range(m.cols):
        vec = dict(t[j])
        comb = {j: Fraction(1)}
        vec, comb = _reduce(vec, comb, basis, pivots)
        if vec:
            p = min(vec)
            inv = 1 / vec[p]
            vec = {c: x * inv for c, x in vec.items()}
            comb = {c: x * inv for c, x in comb.items()}
            pivots[p] = len(basis)
            basis.append((p, vec, comb))
    vec, comb = _reduce(dict(target), {}, basis, pivots)
    if vec:
        return False, None
    w = [Fraction(0)] * m.cols
    for j, x in comb.items():
        w[j] = -x
    return True, w


def kernel(m: SparseMatrix):
    """Basis of the null space as a list of sparse vectors {col: Fraction}."""
    piv = {}  # pivot column -> reduced row with leading 1
    for rd in m.row_dicts():
        row = {c: _frac(v) for c, v in rd.items()}
        for pc in sorted(c for c in row if c in piv):
            f = row.get(pc)
            if not f:
                continue
            for c, x in piv[pc].items():
                y = row.get(c, 0) - f * x
                if y:
                    row[c] = y
                else:
                    row.pop(c, None)
        if not row:
            continue
        pc = min(row)
        inv = 1 / row[pc]
        row = {c: x * inv for c, x in row.items()}
        for q, other in piv.items():
            f = other.get(pc)
            if f:
                for c, x in row.items():
                    y = other.get(c, 0) - f * x
                    if y:
                        other[c] = y
                    else:
                        other.pop(c, None)
        piv[pc] = row
    out = []
    for f in range(m.cols):
        if f in piv:
            continue
        vec = {f: Fraction(1)}
        for pc, row in piv.items():
            x = row.get(f)
            if x:
                vec[pc] = -x
        out.append(vec)
    return out


def _reduce(vec, comb, basis, pivots):
    changed = True
    while changed and vec:
        changed = False
        for p in sorted(vec):
            if p in pivots:
                _, bvec, bcomb = basis[pivots[p]]
                f = vec[p]
                for c, x in bvec.items():
                    y = vec.get(c, 0) - f * x
                    if y:
                        vec[c] = y
                    else:
                        vec.pop(c, None)
                for c, x in bcomb.items():
                    y = comb.get(c, 0) - f * x
                    if y:
                        comb[c] = y
                    else:
                        comb.pop(c, None)
                changed = True
                break
    return vec, comb


@dataclass
class BettiTable:
    lo: int
    hi: int
    dims: dict
    betti: dict
    stabilized: dict
    extra: dict = field(default_factory=dict)

    def values(self):
        return tuple(self.betti[p] for p in range(self.lo, self.hi + 1))

    def euler(self):
        return sum((-1) ** p * self.betti[p] for p in range(self.lo, self.hi + 1))

    def all_stabilized(self):
        return all(self.stabilized[p] for p in range(self.lo, self.hi + 1))

    def as_dict(self):
        return {
            "degrees": [self.lo, self.hi],
            "dims": [self.dims[p] for p in range(self.lo, self.hi + 1)],
            "betti": [self.betti[p] for p in range(self.lo, self.hi + 1)],
            "stabilized": [bool(self.stabilized[p]) for p in range(self.lo, self.hi + 1)],
        }


def check_composition(diffs: dict):
    for p in sorted(diffs):
        if p + 1 in diffs:
            a, b = diffs[p], diffs[p + 1]
            if a.rows != b.cols:
                raise DimensionMismatch(f"d^{p} has {a.rows} rows but d^{p + 1} has {b.cols} cols")
            if not (b @ a).is_zero():
                raise CompositionNotZero(p)


def betti_of_complex(diffs: dict, lo: int | None = None, hi: int | None = None) -> BettiTable:
    """Cohomology of a cochain complex given by {p: d^p : C^p -> C^(p+1)}.

    Degrees whose incoming or outgoing differential is not supplied are
    computed with that map taken as zero and flagged unstabilized.
    """
    check_composition(diffs)
    if not diffs and (lo is None or hi is None):
        raise ValueError("empty complex needs an explicit window")
    degs = sorted(diffs)
    if lo is None:
        lo = degs[0]
    if hi is None:
        hi = degs[-1] + 1
    dims = {}
    for p, d in diffs.items():
        dims[p] = d.cols
        dims.setdefault(p + 1, d.rows)
    ranks = {p: rank(d) for p, d in diffs.items()}
    betti, stab, outd = {}, {}, {}
    for p in range(lo, hi + 1):
        outd[p] = dims.get(p, 0)
        r_out = ranks.get(p, 0)
        r_in = ranks.get(p - 1, 0)
        betti[p] = outd[p] - r_out - r_in
        stab[p] = (p in diffs or outd[p] == 0) and (p - 1 in diffs or outd[p] == 0)
    return BettiTable(lo, hi, outd, betti, stab)
