"""Exact exterior calculus for affine 1-forms and constant 2-forms on R^8n.

Only what the Hamilton construction needs is here: the canonical 1-form,
substitution of a dual structure into a 1-form, the exterior derivative of a
1-form with linear coefficients, and contraction of a constant 2-form with a
vector. Coefficients are :class:`fractions.Fraction` so derivation checks are
exact equalities.

A 2-form is stored as an antisymmetric matrix ``Omega`` with
``Phi = 1/2 * sum_ab Omega[a, b] dx_a ^ dx_b``, so a single term
``dx_a ^ dx_b`` sets ``Omega[a, b] = +1`` and ``Omega[b, a] = -1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, SingularSystemError
from .structures import (
    BLOCKS,
    DUAL,
    PRIMAL,
    SignedPermutationTensor,
    Counterexample,
    VerificationRecord,
    _check_k,
    _check_n,
    build_structure,
)


def _fraction_array(values, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    src = np.asarray(values, dtype=object)
    if src.shape != shape:
        raise InvalidArgumentError(f"expected shape {shape}, got {src.shape}")
    for idx in np.ndindex(shape):
        v = src[idx]
        arr[idx] = v if isinstance(v, Fraction) else Fraction(v)
    arr.setflags(write=False)
    return arr


def _zeros(shape) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    arr.fill(Fraction(0))
    return arr


@dataclass(frozen=True, eq=False)
class LinearOneForm:
    """``sum_ab linear[a, b] x_a dx_b + sum_b constant[b] dx_b``."""

    n: int
    linear: np.ndarray
    constant: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        dim = BLOCKS * self.n
        object.__setattr__(self, "linear", _fraction_array(self.linear, (dim, dim)))
        object.__setattr__(self, "constant", _fraction_array(self.constant, (dim,)))

    @property
    def dim(self) -> int:
        return BLOCKS * self.n

    def __eq__(self, other):
        if not isinstance(other, LinearOneForm):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.linear, other.linear)
            and np.array_equal(self.constant, other.constant)
        )

    def __call__(self, x: Sequence) -> CovectorValue:
        """Value of the form at the point ``x``."""
        x = np.asarray(x, dtype=object)
        if x.shape != (self.dim,):
            raise InvalidArgumentError(f"point must have length {self.dim}")
        return CovectorValue(self.n, x @ self.linear + self.constant)

    def terms(self) -> list[tuple[int, int, Fraction]]:
        """Nonzero ``(a, b, coefficient)`` triples of the linear part, row-major."""
        return [
            (a, b, self.linear[a, b])
            for a in range(self.dim)
            for b in range(self.dim)
            if self.linear[a, b] != 0
        ]


@dataclass(frozen=True, eq=False)
class ConstantTwoForm:
    n: int
    omega: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        dim = BLOCKS * self.n
        omega = _fraction_array(self.omega, (dim, dim))
        if not np.array_equal(omega, -omega.T):
            raise InvalidArgumentError("2-form coefficient matrix is not antisymmetric")
        object.__setattr__(self, "omega", omega)

    @property
    def dim(self) -> int:
        return BLOCKS * self.n

    def __eq__(self, other):
        if not isinstance(other, ConstantTwoForm):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.omega, other.omega)

    def __neg__(self) -> ConstantTwoForm:
        return ConstantTwoForm(self.n, -self.omega)

    def as_float(self) -> np.ndarray:
        return self.omega.astype(float)

    def as_int(self) -> np.ndarray:
        """Integer matrix; raises if some coefficient is not integral."""
        if any(v.denominator != 1 for v in self.omega.flat):
            raise InvalidArgumentError("2-form has non-integer coefficients")
        return self.omega.astype(np.int64)

    def wedge_terms(self) -> list[tuple[int, int, Fraction]]:
        """Terms ``c * dx_a ^ dx_b`` with ``a < b``."""
        return [
            (a, b, self.omega[a, b])
            for a in range(self.dim)
            for b in range(a + 1, self.dim)
            if self.omega[a, b] != 0
        ]


@dataclass(frozen=True, eq=False)
class CovectorValue:
    n: int
    components: np.ndarray

    def __post_init__(self):
        comps = np.asarray(self.components)
        if comps.shape != (BLOCKS * self.n,):
            raise InvalidArgumentError(f"covector must have length {BLOCKS * self.n}")
        object.__setattr__(self, "components", comps)

    def __eq__(self, other):
        if not isinstance(other, CovectorValue):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.components, other.components)


def canonical_one_form(n: int) -> LinearOneForm:
    """``1/2 * sum_a x_a dx_a``."""
    _check_n(n)
    dim = BLOCKS * n
    linear = _zeros((dim, dim))
    for a in range(dim):
        linear[a, a] = Fraction(1, 2)
    return LinearOneForm(n, linear, _zeros(dim))


def apply_dual_structure(Jd: SignedPermutationTensor, f: LinearOneForm) -> LinearOneForm:
    """Substitute ``dx_b -> sign[b] dx_target[b]`` in ``f``; the ``x_a`` factors stay put."""
    if Jd.variant != DUAL:
        raise InvalidArgumentError("apply_dual_structure needs a dual (cotangent) structure")
    if Jd.n != f.n:
        raise InvalidArgumentError(f"dimension mismatch: structure n={Jd.n}, form n={f.n}")
    linear = _zeros((f.dim, f.dim))
    constant = _zeros(f.dim)
    for b in range(f.dim):
        t, s = Jd.image(b)
        linear[:, t] += s * f.linear[:, b]
        constant[t] += s * f.constant[b]
    return LinearOneForm(f.n, linear, constant)


def exterior_derivative(f: LinearOneForm) -> ConstantTwoForm:
    # d(x_a dx_b) = dx_a ^ dx_b; the constant part is closed
    return ConstantTwoForm(f.n, f.linear - f.linear.T)


def liouville_form(k: int, n: int) -> LinearOneForm:
    """``J_k*`` applied to the canonical 1-form."""
    return apply_dual_structure(build_structure(k, n, DUAL), canonical_one_form(n))


def symplectic_form_of_structure(k: int, n: int) -> ConstantTwoForm:
    """``-d(J_k* omega)`` with ``omega`` the canonical 1-form."""
    _check_k(k)
    return -exterior_derivative(liouville_form(k, n))


def interior_product(omega: ConstantTwoForm, X: Sequence) -> CovectorValue:
    """Contract ``X`` into the first slot: ``components[b] = sum_a X[a] Omega[a, b]``."""
    X = np.asarray(X)
    if X.shape != (omega.dim,):
        raise InvalidArgumentError(f"vector must have length {omega.dim}, got shape {X.shape}")
    if X.dtype == object or np.issubdtype(X.dtype, np.integer):
        comps = X.astype(object) @ omega.omega
    else:
        comps = X @ omega.as_float()
    return CovectorValue(omega.n, comps)


def structure_form_identity(
    k: int, n: int, form: ConstantTwoForm | None = None
) -> VerificationRecord:
    """Compare the matrix of ``-d(J_k* omega)`` with the matrix of ``J_k`` entrywise.

    ``form`` replaces the derived 2-form, so a tampered matrix can be fed in.
    """
    _check_k(k)
    _check_n(n)
    phi = symplectic_form_of_structure(k, n) if form is None else form
    J = build_structure(k, n, PRIMAL).matrix()
    if phi.dim != J.shape[0]:
        raise InvalidArgumentError("form dimension does not match the structure")
    bad = [
        Counterexample((a, b), int(J[a, b]), _plain(phi.omega[a, b]))
        for a in range(phi.dim)
        for b in range(phi.dim)
        if phi.omega[a, b] != J[a, b]
    ]
    return VerificationRecord(f"structure_form_identity[J{k}]", tuple(bad))


def _plain(v: Fraction):
    return int(v) if v.denominator == 1 else str(v)


def _row_reduce(rows: list[list[Fraction]], ncols: int) -> tuple[list[list[Fraction]], int]:
    """Gauss-Jordan elimination in place; returns (rows, rank)."""
    rank = 0
    nrows = len(rows)
    for col in range(ncols):
        pivot = next((r for r in range(rank, nrows) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        p = rows[rank][col]
        rows[rank] = [v / p for v in rows[rank]]
        for r in range(nrows):
            if r != rank and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [v - factor * w for v, w in zip(rows[r], rows[rank])]
        rank += 1
        if rank == nrows:
            break
    return rows, rank


def rational_rank(matrix) -> int:
    m = np.asarray(matrix, dtype=object)
    rows = [[Fraction(v) for v in row] for row in m]
    return _row_reduce(rows, m.shape[1])[1]


def rational_inverse(matrix) -> np.ndarray:
    """Exact inverse of a square rational matrix."""
    m = np.asarray(matrix, dtype=object)
    size = m.shape[0]
    if m.shape != (size, size):
        raise InvalidArgumentError(f"matrix must be square, got {m.shape}")
    rows = [
        [Fraction(v) for v in m[r]] + [Fraction(int(r == c)) for c in range(size)]
        for r in range(size)
    ]
    rows, rank = _row_reduce(rows, size)
    if rank < size:
        raise SingularSystemError(f"matrix is singular (rank {rank} < {size})")
    return np.array([row[size:] for row in rows], dtype=object)


def check_nondegenerate(omega: ConstantTwoForm) -> bool:
    return rational_rank(omega.omega) == omega.dim
