import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cliffmech.errors import InvalidArgumentError, SingularSystemError
from cliffmech.forms import (
    ConstantTwoForm,
    LinearOneForm,
    apply_dual_structure,
    canonical_one_form,
    check_nondegenerate,
    exterior_derivative,
    interior_product,
    liouville_form,
    rational_inverse,
    structure_form_identity,
    symplectic_form_of_structure,
)
from cliffmech.structures import DUAL, PRIMAL, build_structure, fundamental_two_form, identity_tensor

FIXTURES = json.loads((Path(__file__).parent / "fixtures" / "printed_equation_sets.json").read_text())
HALF = Fraction(1, 2)


def zeros(shape):
    return np.full(shape, Fraction(0), dtype=object)


def single_term(a, b):
    C = zeros((8, 8))
    C[a, b] = Fraction(1)
    return LinearOneForm(1, C, zeros(8))


def test_canonical_one_form():
    w = canonical_one_form(1)
    assert all(w.linear[a, a] == HALF for a in range(8))
    assert sum(v != 0 for v in w.linear.flat) == 8
    w2 = canonical_one_form(2)
    assert np.array_equal(w2.linear, np.diag([HALF] * 16))
    assert not w(np.zeros(8, dtype=int)).components.any()


def test_canonical_one_form_rejects_n0():
    with pytest.raises(InvalidArgumentError):
        canonical_one_form(0)


def test_liouville_j4_coefficients():
    lam = liouville_form(4, 1)
    assert lam.linear[0, 4] == HALF
    assert lam.linear[4, 0] == -HALF


def test_liouville_j5_coefficient():
    assert liouville_form(5, 1).linear[2, 7] == -HALF


def test_identity_substitution_is_noop():
    w = canonical_one_form(1)
    assert apply_dual_structure(identity_tensor(1, DUAL), w) == w


def test_apply_dual_rejects_primal():
    with pytest.raises(InvalidArgumentError):
        apply_dual_structure(build_structure(1, 1, PRIMAL), canonical_one_form(1))


def test_exterior_derivative_single_terms():
    phi = exterior_derivative(single_term(0, 4))
    assert phi.omega[0, 4] == 1 and phi.omega[4, 0] == -1
    assert phi.wedge_terms() == [(0, 4, 1)]
    assert exterior_derivative(single_term(0, 0)).wedge_terms() == []


def test_two_form_must_be_antisymmetric():
    M = zeros((8, 8))
    M[0, 1] = Fraction(1)
    with pytest.raises(InvalidArgumentError):
        ConstantTwoForm(1, M)


@given(
    st.lists(st.tuples(st.integers(-20, 20), st.integers(1, 6)), min_size=64, max_size=64),
    st.lists(st.integers(-5, 5), min_size=8, max_size=8),
)
@settings(max_examples=50, deadline=None)
def test_exterior_derivative_antisymmetric(coeffs, consts):
    C = np.array([Fraction(p, q) for p, q in coeffs], dtype=object).reshape(8, 8)
    f = LinearOneForm(1, C, np.array([Fraction(c) for c in consts], dtype=object))
    omega = exterior_derivative(f).omega
    assert np.array_equal(omega, -omega.T)
    # the constant part never contributes
    g = LinearOneForm(1, C, zeros(8))
    assert exterior_derivative(g) == exterior_derivative(f)


def upper_unit_pairs(phi):
    """Oriented pairs (a, b) with Omega[a][b] = +1, one per antisymmetric couple."""
    pairs = set()
    for a in range(phi.dim):
        for b in range(phi.dim):
            v = phi.omega[a, b]
            if v == 1:
                pairs.add((a, b))
            elif v != 0 and v != -1:
                raise AssertionError(f"unexpected coefficient {v}")
    return pairs


@pytest.mark.parametrize("k", (4, 5, 6))
def test_printed_two_forms(k):
    phi = symplectic_form_of_structure(k, 1)
    assert upper_unit_pairs(phi) == {tuple(p) for p in FIXTURES["two_forms"][str(k)]}


def test_printed_two_form_j4_spelled_out():
    phi = symplectic_form_of_structure(4, 1)
    for a, b in [(1, 2), (3, 7), (4, 0), (6, 5)]:
        assert phi.omega[a, b] == 1 and phi.omega[b, a] == -1
    assert sum(v != 0 for v in phi.omega.flat) == 8


def test_interior_product_examples():
    phi = symplectic_form_of_structure(4, 1)
    X = np.zeros(8, dtype=int)
    X[1] = 1
    c = interior_product(phi, X).components
    assert c[2] == 1 and sum(v != 0 for v in c) == 1
    X = np.zeros(8, dtype=int)
    X[0] = 1
    c = interior_product(phi, X).components
    assert c[4] == -1 and sum(v != 0 for v in c) == 1
    assert not interior_product(phi, np.zeros(8)).components.any()


def test_interior_product_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        interior_product(symplectic_form_of_structure(1, 1), np.zeros(16))


@pytest.mark.parametrize("k", range(1, 7))
@pytest.mark.parametrize("n", (1, 2, 3, 4))
def test_structure_form_identity_and_sign_relation(k, n):
    assert structure_form_identity(k, n).passed
    phi = symplectic_form_of_structure(k, n)
    assert fundamental_two_form(build_structure(k, n)) == -phi
    M = phi.as_int()
    assert np.array_equal(M @ M, -np.eye(8 * n, dtype=M.dtype))


def test_transposed_form_fails_every_entry():
    phi = symplectic_form_of_structure(4, 1)
    rec = structure_form_identity(4, 1, ConstantTwoForm(1, phi.omega.T))
    assert not rec.passed
    assert len(rec.counterexamples) == 8


def test_nondegenerate_examples():
    assert check_nondegenerate(symplectic_form_of_structure(5, 1))
    assert check_nondegenerate(symplectic_form_of_structure(6, 3))
    assert not check_nondegenerate(ConstantTwoForm(1, zeros((8, 8))))


def test_rational_inverse_singular():
    with pytest.raises(SingularSystemError):
        rational_inverse(zeros((8, 8)))
