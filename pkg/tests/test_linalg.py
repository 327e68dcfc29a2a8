from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from confgraph.linalg import (CompositionNotZero, DimensionMismatch, SparseMatrix,
                              betti_of_complex, in_image, kernel, rank)

from oracles import dense_rank, simplex_boundary

small_q = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@st.composite
def matrices(draw, max_dim=6):
    r = draw(st.integers(0, max_dim))
    c = draw(st.integers(0, max_dim))
    # bias towards zeros so that rank deficiency actually happens
    cell = st.one_of(st.just(Fraction(0)), st.just(Fraction(0)), small_q)
    rows = [[draw(cell) for _ in range(c)] for _ in range(r)]
    return SparseMatrix(r, c, [(i, j, v) for i, row in enumerate(rows)
                               for j, v in enumerate(row) if v]), rows


def test_rank_identity():
    assert rank(SparseMatrix.identity(2)) == 2


def test_rank_all_ones():
    assert rank(SparseMatrix.from_dense([[1] * 3] * 3)) == 1


def test_rank_simplex_boundary():
    d0, _ = simplex_boundary()
    m = SparseMatrix.from_dense(d0)
    assert dense_rank(d0) == 2
    assert rank(m) == 2


def test_entries_are_reduced_and_nonzero():
    m = SparseMatrix(2, 2, [(0, 0, Fraction(2, 4)), (1, 1, 1), (1, 1, -1)])
    assert m.entries() == [(0, 0, Fraction(1, 2))]
    assert m.nnz == 1


def test_out_of_range_entry():
    with pytest.raises(IndexError):
        SparseMatrix(1, 1, [(1, 0, 1)])


@given(matrices())
def test_rank_matches_dense_oracle(mr):
    m, rows = mr
    assert rank(m) == dense_rank(rows)


@given(matrices())
def test_rank_of_transpose(mr):
    m, _ = mr
    assert rank(m) == rank(m.transpose())


@given(matrices())
def test_kernel_vectors(mr):
    m, _ = mr
    ker = kernel(m)
    assert len(ker) == m.cols - rank(m)
    for v in ker:
        x = [v.get(j, Fraction(0)) for j in range(m.cols)]
        assert all(y == 0 for y in m.matvec(x))
    if ker:
        dense = [[v.get(j, 0) for j in range(m.cols)] for v in ker]
        assert dense_rank(dense) == len(ker)


@given(matrices(), st.data())
def test_in_image_witness_is_exact(mr, data):
    m, _ = mr
    x = [data.draw(small_q) for _ in range(m.cols)]
    v = m.matvec(x)
    ok, w = in_image(m, v)
    assert ok
    assert m.matvec(w) == v


@given(matrices(), st.data())
def test_in_image_agrees_with_rank(mr, data):
    m, rows = mr
    v = [data.draw(small_q) for _ in range(m.rows)]
    ok, w = in_image(m, v)
    aug = [row + [v[i]] for i, row in enumerate(rows)] if m.cols else [[x] for x in v]
    expected = dense_rank(aug) == dense_rank(rows) if m.cols else not any(v)
    assert ok == expected
    if ok:
        assert m.matvec(w) == [Fraction(y) for y in v]


def test_in_image_examples():
    ok, w = in_image(SparseMatrix.identity(2), [1, 0])
    assert ok and w == [1, 0]
    ok, w = in_image(SparseMatrix.zero(2, 2), [1, 0])
    assert not ok and w is None
    m = SparseMatrix.from_dense([[1, 2], [1, 2]])
    ok, w = in_image(m, [3, 3])
    assert ok and m.matvec(w) == [3, 3]


def test_in_image_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        in_image(SparseMatrix.identity(2), [1, 2, 3])


def test_betti_zero_map():
    bt = betti_of_complex({0: SparseMatrix.zero(1, 1)}, 0, 1)
    assert bt.values() == (1, 1)


def test_betti_identity():
    bt = betti_of_complex({0: SparseMatrix.identity(1)}, 0, 1)
    assert bt.values() == (0, 0)


def test_betti_simplex():
    d0, d1 = simplex_boundary()
    diffs = {0: SparseMatrix.from_dense(d0), 1: SparseMatrix.from_dense(d1)}
    bt = betti_of_complex(diffs, 0, 2)
    assert bt.values() == (1, 0, 0)
    assert bt.euler() == 3 - 3 + 1


def test_betti_window_edges_flagged():
    d0, d1 = simplex_boundary()
    bt = betti_of_complex({0: SparseMatrix.from_dense(d0)}, 0, 1)
    assert not bt.stabilized[0] and not bt.stabilized[1]
    full = {-1: SparseMatrix.zero(3, 0), 0: SparseMatrix.from_dense(d0),
            1: SparseMatrix.from_dense(d1), 2: SparseMatrix.zero(0, 1)}
    bt = betti_of_complex(full, 0, 2)
    assert bt.all_stabilized() and bt.values() == (1, 0, 0)


def test_composition_not_zero():
    with pytest.raises(CompositionNotZero) as e:
        betti_of_complex({0: SparseMatrix.identity(1), 1: SparseMatrix.identity(1)})
    assert e.value.degree == 0


@st.composite
def complexes(draw):
    """Random cochain complexes built as d = B A with A B = 0 layered."""
    dims = draw(st.lists(st.integers(0, 4), min_size=2, max_size=4))
    diffs = {}
    for p in range(len(dims) - 1):
        c, r = dims[p], dims[p + 1]
        rows = [[draw(st.integers(-1, 1)) for _ in range(c)] for _ in range(r)]
        if p > 0:
            # force d^p d^(p-1) = 0 by projecting d^p onto rows killing im d^(p-1)
            prev = diffs[p - 1]
            img = [prev.matvec([1 if j == i else 0 for j in range(prev.cols)])
                   for i in range(prev.cols)]
            rows = [row if all(sum(x * y for x, y in zip(row, v)) == 0 for v in img)
                    else [0] * c for row in rows]
        diffs[p] = SparseMatrix(r, c, [(i, j, v) for i, row in enumerate(rows)
                                       for j, v in enumerate(row) if v])
    return diffs, dims


@given(complexes())
def test_euler_characteristic_identity(cd):
    diffs, dims = cd
    bt = betti_of_complex(diffs, 0, len(dims) - 1)
    assert all(b >= 0 for b in bt.values())
    assert bt.euler() == sum((-1) ** p * d for p, d in enumerate(dims))


@given(matrices())
def test_dump_round_trip(mr):
    m, _ = mr
    m2 = SparseMatrix.loads(m.dumps())
    assert (m2.rows, m2.cols) == (m.rows, m.cols)
    assert sorted(m2.entries()) == sorted(m.entries())


def test_dump_format():
    m = SparseMatrix(2, 3, [(0, 1, Fraction(-1, 2)), (1, 2, 3)])
    lines = m.dumps().strip().split("\n")
    assert lines[0] == "2 3 2"
    assert "0 1 -1/2" in lines[1:]
