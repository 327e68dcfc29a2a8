"""Independent reference computations used by the tests.

Nothing here imports confgraph: each oracle is a deliberately naive,
dense re-derivation so that agreement with the library is evidence
rather than tautology.
"""

from fractions import Fraction
from itertools import combinations, permutations


def dense_rank(rows):
    """Textbook Gaussian elimination over Q on a list of lists."""
    a = [[Fraction(x) for x in r] for r in rows]
    if not a:
        return 0
    ncols = len(a[0])
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c] / a[r][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        r += 1
        if r == len(a):
            break
    return r


def perm_sign(p):
    s = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                s = -s
    return s


def koszul_sign(degrees, order):
    """Sign of listing graded generators (given degrees) in the new order."""
    s = 1
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            if order[i] > order[j] and degrees[order[i]] % 2 and degrees[order[j]] % 2:
                s = -s
    return s


def simplex_boundary():
    """Cochain differentials of the full 2-simplex (vertices, edges, face)."""
    # coboundary is the transpose of the boundary; edges 01, 02, 12
    d0 = [[-1, 1, 0], [-1, 0, 1], [0, -1, 1]]        # C^0 -> C^1
    d1 = [[1, -1, 1]]                                   # C^1 -> C^2
    return d0, d1


def arnold_dims(D, n):
    """Dimensions of the algebra on w_ij (degree D-1) modulo w_ij^2 and
    the three-term relation, graded by word length.

    A monomial is a set of unordered pairs; for even D the generators
    anticommute, so sets are read in sorted order with signs.
    """
    pairs = list(combinations(range(n), 2))
    odd = (D - 1) % 2 == 1
    out = []
    for m in range(len(pairs) + 1):
        monos = list(combinations(pairs, m))
        index = {mono: i for i, mono in enumerate(monos)}
        rows = []
        if m >= 2:
            for i, j, k in combinations(range(n), 3):
                # w_ij w_jk + w_jk w_ki + w_ki w_ij with w_ba = (-1)^D w_ab
                terms = []
                for (a, b), (c, d) in (((i, j), (j, k)), ((j, k), (k, i)), ((k, i), (i, j))):
                    s = 1
                    if a > b:
                        a, b = b, a
                        s *= (-1) ** D
                    if c > d:
                        c, d = d, c
                        s *= (-1) ** D
                    terms.append((s, [(a, b), (c, d)]))
                for rest in combinations(pairs, m - 2):
                    row = [Fraction(0)] * len(monos)
                    for s, word in terms:
                        full = word + list(rest)
                        if len(set(full)) < len(full):
                            continue
                        srt = sorted(range(len(full)), key=lambda t: full[t])
                        sign = s
                        if odd:
                            sign *= perm_sign(srt)
                        row[index[tuple(full[t] for t in srt)]] += sign
                    if any(row):
                        rows.append(row)
        out.append(len(monos) - dense_rank(rows))
    return out


def arnold_betti(D, n, top):
    """Betti numbers in degrees 0..top (the Arnold algebra has zero differential)."""
    dims = arnold_dims(D, n)
    b = [0] * (top + 1)
    for m, x in enumerate(dims):
        deg = m * (D - 1)
        if deg <= top:
            b[deg] += x
    return tuple(b)


def poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def poly_add(p, q):
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]


def all_perms(n):
    return list(permutations(range(n)))
