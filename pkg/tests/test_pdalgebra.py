import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from confgraph.pdalgebra import (BUILTIN_NAMES, ParseError, PDAlgebra, UnknownBuiltin,
                                 ValidationError, builtin, load_algebra, save_algebra,
                                 validate)

from oracles import dense_rank

ALL = BUILTIN_NAMES + ["S^4", "Sigma_3", "S^1xS^2", "S^2xS^2"]


def test_sphere():
    A = builtin("S^2")
    assert A.basis == [("1", 0), ("w", 2)]
    assert A.mul_basis("w", "w") == {}
    assert A.eps({"w": 1}) == 1


def test_torus():
    A = builtin("T^2")
    assert A.mul_basis("a", "b") == {"w": 1}
    assert A.mul_basis("b", "a") == {"w": -1}
    assert A.mul_basis("a", "a") == {}


def test_genus_two():
    A = builtin("Sigma_2")
    assert [d for _, d in A.basis] == [0, 1, 1, 1, 1, 2]
    for k in (1, 2):
        assert A.mul_basis(f"a{k}", f"b{k}") == {"w": 1}
        assert A.mul_basis(f"b{k}", f"a{k}") == {"w": -1}
    assert A.mul_basis("a1", "b2") == {}
    assert A.mul_basis("a1", "a2") == {}


def test_unknown_builtin():
    with pytest.raises(UnknownBuiltin):
        builtin("RP^2")


def test_diagonal_sphere():
    assert sorted(builtin("S^2").diagonal()) == [("1", "w", 1), ("w", "1", 1)]


def test_diagonal_torus():
    got = {(x, y): c for x, y, c in builtin("T^2").diagonal()}
    assert got == {("1", "w"): 1, ("w", "1"): 1, ("a", "b"): -1, ("b", "a"): 1}


def test_euler_class_sphere():
    assert builtin("S^2").euler_class() == {"w": 2}


@pytest.mark.parametrize("name", ALL)
def test_builtin_is_valid(name):
    assert validate(builtin(name)) == []


@pytest.mark.parametrize("name", ALL)
def test_diagonal_is_inverse_pairing(name):
    """Contracting one leg of the diagonal against a returns a on the other leg."""
    A = builtin(name)
    diag = A.diagonal()
    for a in A.ids:
        out = {}
        for x, y, c in diag:
            # sum over i of (-1)^|e_i| eps(a e_i) g^(ji) e_j
            v = A.eps(A.mul_basis(a, x))
            if v:
                out[y] = out.get(y, 0) + c * v
        out = {k: v for k, v in out.items() if v}
        # only |e_i| = D - |a| contributes, and transposing that pairing block
        # costs (-1)^(|a| (D - |a|))
        p = A.degree(a)
        sign = (-1) ** (p * (A.D - p) + (A.D - p))
        assert out == {a: sign}


@pytest.mark.parametrize("name", ALL)
def test_diagonal_graded_symmetry(name):
    A = builtin(name)
    d = {(x, y): c for x, y, c in A.diagonal()}
    for (x, y), c in d.items():
        koszul = (-1) ** (A.degree(x) * A.degree(y))
        assert d.get((y, x)) == (-1) ** A.D * koszul * c


@pytest.mark.parametrize("name", ALL)
def test_legs_product_is_euler_characteristic(name):
    A = builtin(name)
    chi = sum((-1) ** d for _, d in A.basis)
    expected = {A.volume: Fraction(chi)} if chi else {}
    assert A.euler_class() == expected


@pytest.mark.parametrize("name", ALL)
def test_pairing_is_perfect(name):
    A = builtin(name)
    assert dense_rank(A.pairing_matrix()) == len(A.ids)


class _DeadCounit(PDAlgebra):
    def eps(self, vec):
        return Fraction(0)


def test_validate_cp2():
    assert validate(builtin("CP^2")) == []


def test_validate_zero_counit():
    A = _DeadCounit(2, [("1", 0), ("w", 2)], "1", "w", {})
    kinds = [k for k, _ in validate(A)]
    assert "nondegeneracy" in kinds


def test_validate_commutativity_sign_error():
    A = PDAlgebra(2, [("1", 0), ("a", 1), ("b", 1), ("w", 2)], "1", "w",
                  {("a", "b"): {"w": 1}, ("b", "a"): {"w": 1}})
    assert ("graded-commutativity", ("a", "b")) in validate(A)


def test_validate_associativity():
    A = PDAlgebra(4, [("1", 0), ("h", 2), ("k", 2), ("w", 4)], "1", "w",
                  {("h", "h"): {"w": 1}, ("k", "k"): {"w": 1}, ("h", "k"): {"k": 1},
                   ("k", "h"): {"k": 1}})
    assert any(kind in ("associativity", "degree") for kind, _ in validate(A))


@pytest.mark.parametrize("name", ALL)
def test_save_load_round_trip(name, tmp_path):
    A = builtin(name)
    p = tmp_path / "a.json"
    save_algebra(A, p)
    B = load_algebra(p)
    assert (B.D, B.basis, B.unit, B.volume, B.products) == (A.D, A.basis, A.unit, A.volume, A.products)
    save_algebra(B, tmp_path / "b.json")
    assert (tmp_path / "b.json").read_text() == p.read_text()


def test_duplicate_basis_id(tmp_path):
    p = tmp_path / "dup.json"
    p.write_text(json.dumps({"dimension": 2, "unit": "1", "volume": "w",
                             "basis": [{"id": "1", "degree": 0}, {"id": "w", "degree": 2},
                                       {"id": "w", "degree": 2}], "products": []}))
    with pytest.raises(ParseError):
        load_algebra(p)


def test_singular_pairing_file(tmp_path):
    p = tmp_path / "sing.json"
    p.write_text(json.dumps({"dimension": 2, "unit": "1", "volume": "w",
                             "basis": [{"id": "1", "degree": 0}, {"id": "a", "degree": 1},
                                       {"id": "b", "degree": 1}, {"id": "w", "degree": 2}],
                             "products": []}))
    with pytest.raises(ValidationError) as e:
        load_algebra(p)
    assert any(k == "nondegeneracy" for k, _ in e.value.violations)


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"dimension": 2,\n "basis": [}')
    with pytest.raises(ParseError):
        load_algebra(p)


@given(st.integers(2, 6))
def test_sphere_family(D):
    A = builtin(f"S^{D}")
    assert validate(A) == []
    assert A.euler_characteristic() == 1 + (-1) ** D


@given(st.integers(1, 4), st.integers(1, 4))
def test_sphere_products(a, b):
    A = builtin(f"S^{a}xS^{b}")
    assert validate(A) == []
    assert A.poincare_poly()[a] >= 1 and A.D == a + b


@given(st.integers(2, 5))
def test_higher_genus(g):
    A = builtin(f"Sigma_{g}")
    assert validate(A) == []
    assert A.euler_characteristic() == 2 - 2 * g
