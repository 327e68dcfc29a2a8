"""Poincare duality algebras, their diagonal classes, and the JSON file formats."""

from __future__ import annotations

import json
import re
from fractions import Fraction
from itertools import product

from .linalg import SparseMatrix, rank


class UnknownBuiltin(ValueError):
    pass


class SingularPairing(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(ValueError):
    def __init__(self, violations):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


class PDAlgebra:
    """Finite graded algebra with unit, volume class and counit eps(volume) = 1.

    ``products`` maps (left_id, right_id) to {out_id: Fraction}; products
    with the unit are implicit.  Missing pairs multiply to zero.
    """

    def __init__(self, dimension, basis, unit, volume, products, name=None):
        self.D = int(dimension)
        self.basis = [(str(i), int(d)) for i, d in basis]
        self.ids = [i for i, _ in self.basis]
        self._deg = dict(self.basis)
        self.unit = unit
        self.volume = volume
        self.name = name
        prods = {}
        for (x, y), out in products.items():
            out = {k: Fraction(v) for k, v in out.items() if Fraction(v)}
            if out:
                prods[(x, y)] = out
        self.products = prods

    def degree(self, x):
        return self._deg[x]

    @property
    def reduced(self):
        return [(i, d) for i, d in self.basis if i != self.unit]

    def mul_basis(self, x, y):
        if x == self.unit:
            return {y: Fraction(1)}
        if y == self.unit:
            return {x: Fraction(1)}
        return dict(self.products.get((x, y), {}))

    def mul(self, u: dict, v: dict) -> dict:
        out = {}
        for x, a in u.items():
            for y, b in v.items():
                for z, c in self.mul_basis(x, y).items():
                    out[z] = out.get(z, 0) + a * b * c
        return {k: v for k, v in out.items() if v}

    def mul_many(self, ids):
        acc = {self.unit: Fraction(1)}
        for x in ids:
            acc = self.mul(acc, {x: Fraction(1)})
            if not acc:
                break
        return acc

    def eps(self, vec: dict) -> Fraction:
        return Fraction(vec.get(self.volume, 0))

    def pairing(self, x, y) -> Fraction:
        return self.eps(self.mul_basis(x, y))

    def pairing_matrix(self):
        return [[self.pairing(x, y) for y in self.ids] for x in self.ids]

    def euler_characteristic(self):
        return sum((-1) ** d for _, d in self.basis)

    def poincare_poly(self):
        out = [0] * (self.D + 1)
        for _, d in self.basis:
            out[d] += 1
        return out

    def diagonal(self):
        """Delta = sum_i (-1)^|e_i| e_i (x) e_i^* with eps(e_i e_j^*) = delta_ij.

        In terms of the inverse pairing matrix g the coefficient of
        e_i (x) e_j is (-1)^|e_i| g^{ji}.  This agrees with g^{ij} for even D
        and gives Delta = (-1)^D swap(Delta) in every dimension.
        """
        g = _invert(self.pairing_matrix())
        terms = []
        for i, x in enumerate(self.ids):
            s = (-1) ** self.degree(x)
            for j, y in enumerate(self.ids):
                if g[j][i]:
                    terms.append((x, y, s * g[j][i]))
        return terms

    def euler_class(self):
        out = {}
        for x, y, c in self.diagonal():
            for z, w in self.mul_basis(x, y).items():
                out[z] = out.get(z, 0) + c * w
        return {k: v for k, v in out.items() if v}

    def to_json(self):
        prods = []
        for (x, y) in sorted(self.products):
            out = self.products[(x, y)]
            prods.append({"left": x, "right": y,
                          "out": [{"id": k, "coeff": _qstr(out[k])} for k in sorted(out)]})
        return {"dimension": self.D,
                "basis": [{"id": i, "degree": d} for i, d in self.basis],
                "unit": self.unit, "volume": self.volume, "products": prods}

    def key(self):
        """Stable text used for content hashing."""
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def __eq__(self, other):
        return isinstance(other, PDAlgebra) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"PDAlgebra({self.name or 'custom'}, D={self.D}, dim={len(self.basis)})"


def _qstr(q):
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def _invert(mat):
    n = len(mat)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(mat)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise SingularPairing("pairing matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


# builtins

def sphere(D):
    return PDAlgebra(D, [("1", 0), ("w", D)], "1", "w", {}, name=f"S^{D}")


def surface(g):
    if g == 0:
        return sphere(2)
    basis = [("1", 0)]
    prods = {}
    if g == 1:
        basis += [("a", 1), ("b", 1)]
        prods[("a", "b")] = {"w": 1}
        prods[("b", "a")] = {"w": -1}
        name = "T^2"
    else:
        for k in range(1, g + 1):
            basis += [(f"a{k}", 1), (f"b{k}", 1)]
            prods[(f"a{k}", f"b{k}")] = {"w": 1}
            prods[(f"b{k}", f"a{k}")] = {"w": -1}
        name = f"Sigma_{g}"
    basis.append(("w", 2))
    return PDAlgebra(2, basis, "1", "w", prods, name=name)


def cp2():
    return PDAlgebra(4, [("1", 0), ("h", 2), ("w", 4)], "1", "w",
                     {("h", "h"): {"w": 1}}, name="CP^2")


def sphere_product(a, b):
    sign = (-1) ** (a * b)
    return PDAlgebra(a + b, [("1", 0), ("x", a), ("y", b), ("w", a + b)], "1", "w",
                     {("x", "y"): {"w": 1}, ("y", "x"): {"w": sign}}, name=f"S^{a}xS^{b}")


_PROD_RE = re.compile(r"^S\^(\d+)\s*(?:x|×|\*)\s*S\^(\d+)$")


def builtin(name: str) -> PDAlgebra:
    name = name.strip()
    m = _PROD_RE.match(name)
    if m:
        return sphere_product(int(m.group(1)), int(m.group(2)))
    m = re.match(r"^S\^(\d+)$", name)
    if m and int(m.group(1)) >= 1:
        return sphere(int(m.group(1)))
    if name in ("T^2", "T2", "Sigma_1"):
        return surface(1)
    m = re.match(r"^Sigma_(\d+)$", name)
    if m and int(m.group(1)) >= 2:
        return surface(int(m.group(1)))
    if name in ("CP^2", "CP2"):
        return cp2()
    raise UnknownBuiltin(name)


BUILTIN_NAMES = ["S^2", "T^2", "Sigma_2", "CP^2", "S^3", "S^2xS^3"]


def validate(A: PDAlgebra):
    """List of violated axioms, each a (kind, witness) pair."""
    out = []
    ids = A.ids
    if len(set(ids)) != len(ids):
        out.append(("duplicate-id", tuple(ids)))
    if A.unit not in A._deg or A.degree(A.unit) != 0:
        out.append(("unit", A.unit))
        return out
    if A.volume not in A._deg or A.degree(A.volume) != A.D:
        out.append(("volume", A.volume))
        return out
    deg0 = [i for i, d in A.basis if d == 0]
    if deg0 != [A.unit]:
        out.append(("connected", tuple(deg0)))
    for i, d in A.basis:
        if d < 0 or d > A.D:
            out.append(("degree-range", i))
    for (x, y), res in A.products.items():
        if x not in A._deg or y not in A._deg:
            out.append(("unknown-id", (x, y)))
            continue
        if x == A.unit or y == A.unit:
            if res != {y if x == A.unit else x: 1}:
                out.append(("unit-product", (x, y)))
        for z in res:
            if z not in A._deg or A.degree(z) != A.degree(x) + A.degree(y):
                out.append(("degree", (x, y, z)))
    for x, y in product(ids, ids):
        lhs = A.mul_basis(x, y)
        s = (-1) ** (A.degree(x) * A.degree(y))
        rhs = {k: s * v for k, v in A.mul_basis(y, x).items()}
        if lhs != rhs and (x, y) < (y, x):
            out.append(("graded-commutativity", (x, y)))
    for x, y, z in product(ids, ids, ids):
        l = A.mul(A.mul_basis(x, y), {z: Fraction(1)})
        r = A.mul({x: Fraction(1)}, A.mul_basis(y, z))
        if l != r:
            out.append(("associativity", (x, y, z)))
    for p in range(A.D + 1):
        left = [i for i, d in A.basis if d == p]
        right = [i for i, d in A.basis if d == A.D - p]
        if len(left) != len(right):
            out.append(("nondegeneracy", (p, tuple(left), tuple(right))))
            continue
        if not left:
            continue
        m = SparseMatrix.from_dense([[A.pairing(x, y) for y in right] for x in left])
        if rank(m) != len(left):
            out.append(("nondegeneracy", (p, tuple(left), tuple(right))))
    return out


# JSON files

def algebra_from_json(obj) -> PDAlgebra:
    for key in ("dimension", "basis", "unit", "volume"):
        if key not in obj:
            raise ParseError(1, f"missing key {key!r}")
    basis = []
    seen = set()
    for k, b in enumerate(obj["basis"]):
        i = str(b["id"])
        if i in seen:
            raise ParseError(1, f"duplicate basis id {i!r}")
        seen.add(i)
        basis.append((i, int(b["degree"])))
    prods = {}
    for p in obj.get("products", []):
        key = (str(p["left"]), str(p["right"]))
        if key in prods:
            raise ParseError(1, f"duplicate product entry {key}")
        prods[key] = {str(o["id"]): Fraction(o["coeff"]) for o in p["out"]}
    A = PDAlgebra(obj["dimension"], basis, str(obj["unit"]), str(obj["volume"]), prods,
                  name=obj.get("name"))
    bad = validate(A)
    if bad:
        raise ValidationError(bad)
    return A


def load_algebra(path) -> PDAlgebra:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.lineno, e.msg) from None
    return algebra_from_json(obj)


def save_algebra(A: PDAlgebra, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(A.to_json(), fh, indent=2, sort_keys=False)
        fh.write("\n")
