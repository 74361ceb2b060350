"""The six almost Clifford structures as exact signed permutations.

Coordinates of R^8n use the block layout ``a = b*n + i``: block ``b`` in
``0..7`` selects one of ``x_i, x_{n+i}, ..., x_{7n+i}`` and ``i`` in
``0..n-1`` selects the copy. Every structure tensor acts block-wise, sending
each basis vector (or covector) to plus or minus another one, so all
arithmetic here is on Python integers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidArgumentError

PRIMAL = "primal"
DUAL = "dual"
VARIANTS = (PRIMAL, DUAL)
BLOCKS = 8
STRUCTURE_INDICES = range(1, 7)

BlockMap = tuple[tuple[int, int], ...]


def _check_n(n: int) -> None:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgumentError(f"block size n must be a positive integer, got {n!r}")


def _check_k(k: int) -> None:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= 6:
        raise InvalidArgumentError(f"structure index must be in 1..6, got {k!r}")


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise InvalidArgumentError(f"variant must be 'primal' or 'dual', got {variant!r}")


def signed_basis_label(index: int, sign: int) -> str:
    """Render ``sign * e_index`` compactly, e.g. ``-e3``."""
    return ("-" if sign < 0 else "") + f"e{index}"


@dataclass(frozen=True)
class SignedPermutationTensor:
    """A linear map sending basis element ``a`` to ``sign[a] * e[target[a]]``.

    ``variant`` says whether the map acts on vectors (primal, J_k) or on
    covectors (dual, J_k*). ``label`` is the structure index ``1..6``,
    ``"composite"`` for products, or ``None``. ``identified_as`` is set on
    composites that coincide with ``sign * J_k``, as the pair ``(sign, k)``.
    """

    n: int
    variant: str
    target: tuple[int, ...]
    sign: tuple[int, ...]
    label: int | str | None = None
    identified_as: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        _check_n(self.n)
        _check_variant(self.variant)
        dim = BLOCKS * self.n
        object.__setattr__(self, "target", tuple(int(t) for t in self.target))
        object.__setattr__(self, "sign", tuple(int(s) for s in self.sign))
        if len(self.target) != dim or len(self.sign) != dim:
            raise InvalidArgumentError(
                f"target and sign must both have length 8n = {dim}, "
                f"got {len(self.target)} and {len(self.sign)}"
            )
        if sorted(self.target) != list(range(dim)):
            raise InvalidArgumentError("target is not a permutation of 0..8n-1")
        bad = [a for a, s in enumerate(self.sign) if s not in (1, -1)]
        if bad:
            raise InvalidArgumentError(f"signs must be +1 or -1; bad entries at {bad}")
        if self.label is not None and self.label != "composite":
            _check_k(self.label)
            self._check_block_homogeneous()

    def _check_block_homogeneous(self) -> None:
        n = self.n
        for b in range(BLOCKS):
            ref_block, ref_sign = divmod(self.target[b * n], n)[0], self.sign[b * n]
            for i in range(n):
                a = b * n + i
                tb, ti = divmod(self.target[a], n)
                if tb != ref_block or ti != i or self.sign[a] != ref_sign:
                    raise InvalidArgumentError(
                        f"labelled structure is not block-homogeneous at coordinate {a}"
                    )

    @property
    def dim(self) -> int:
        return BLOCKS * self.n

    def block_map(self) -> BlockMap:
        """Return ``((target_block, sign), ...)`` for the first copy of each block."""
        n = self.n
        return tuple((self.target[b * n] // n, self.sign[b * n]) for b in range(BLOCKS))

    def image(self, a: int) -> tuple[int, int]:
        """Image of basis element ``a`` as ``(index, sign)``."""
        return self.target[a], self.sign[a]

    def apply(self, v: Sequence) -> np.ndarray:
        return apply_structure(self, v)

    def matrix(self) -> np.ndarray:
        """Integer matrix ``M`` with ``M @ e_a == sign[a] * e_target[a]``."""
        m = np.zeros((self.dim, self.dim), dtype=np.int64)
        m[list(self.target), list(range(self.dim))] = self.sign
        return m

    def negated(self) -> SignedPermutationTensor:
        return SignedPermutationTensor(
            self.n, self.variant, self.target, tuple(-s for s in self.sign), label="composite"
        )

    def __matmul__(self, other: SignedPermutationTensor) -> SignedPermutationTensor:
        return compose(self, other)

    def name(self) -> str:
        if isinstance(self.label, int):
            return f"J{self.label}" + ("*" if self.variant == DUAL else "")
        if self.identified_as is not None:
            s, k = self.identified_as
            return ("-" if s < 0 else "+") + f"J{k}" + ("*" if self.variant == DUAL else "")
        return str(self.label or "tensor")


def identity_tensor(n: int, variant: str = PRIMAL) -> SignedPermutationTensor:
    _check_n(n)
    dim = BLOCKS * n
    return SignedPermutationTensor(n, variant, tuple(range(dim)), (1,) * dim)


def from_block_map(
    entries: Iterable[Sequence[int]], n: int, variant: str = PRIMAL, label: int | str | None = None
) -> SignedPermutationTensor:
    """Replicate an 8-entry ``[[target_block, sign], ...]`` map over ``n`` copies."""
    _check_n(n)
    entries = [tuple(e) for e in entries]
    if len(entries) != BLOCKS:
        raise InvalidArgumentError(f"a block map needs 8 entries, got {len(entries)}")
    target, sign = [], []
    for tb, s in entries:
        for i in range(n):
            target.append(tb * n + i)
            sign.append(s)
    return SignedPermutationTensor(n, variant, tuple(target), tuple(sign), label=label)


def load_tables(path: str | Path | None = None) -> dict[tuple[int, str], BlockMap]:
    """Read the structure table fixture into ``{(k, variant): block_map}``.

    With ``path=None`` the fixture shipped inside the package is used.
    """
    if path is None:
        text = resources.files("cliffmech").joinpath("data/structure_tables.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text)
    tables: dict[tuple[int, str], BlockMap] = {}
    for row in doc["tables"]:
        k, variant = int(row["k"]), row["variant"]
        _check_k(k)
        _check_variant(variant)
        entries = tuple((int(tb), int(s)) for tb, s in row["entries"])
        if len(entries) != BLOCKS:
            raise InvalidArgumentError(f"table ({k}, {variant}) does not have 8 entries")
        tables[(k, variant)] = entries
    missing = [(k, v) for k in STRUCTURE_INDICES for v in VARIANTS if (k, v) not in tables]
    if missing:
        raise InvalidArgumentError(f"structure tables missing entries for {missing}")
    return tables


@lru_cache(maxsize=None)
def _default_tables() -> Mapping[tuple[int, str], BlockMap]:
    return load_tables()


@lru_cache(maxsize=256)
def build_structure(k: int, n: int, variant: str = PRIMAL) -> SignedPermutationTensor:
    """Build ``J_k`` (``variant="primal"``) or ``J_k*`` (``"dual"``) on R^8n."""
    _check_k(k)
    _check_n(n)
    _check_variant(variant)
    return from_block_map(_default_tables()[(k, variant)], n, variant, label=int(k))


def apply_structure(J: SignedPermutationTensor, v: Sequence) -> np.ndarray:
    """Apply ``J`` to a coefficient vector. Integer and Fraction entries stay exact."""
    arr = np.asarray(v)
    if arr.ndim != 1 or arr.shape[0] != J.dim:
        raise InvalidArgumentError(f"expected a vector of length {J.dim}, got shape {arr.shape}")
    signs = np.array(J.sign, dtype=object if arr.dtype == object else np.int64)
    out = np.zeros_like(arr)
    out[list(J.target)] = signs * arr
    return out


def _identify(target: tuple[int, ...], sign: tuple[int, ...], n: int, variant: str):
    for k in STRUCTURE_INDICES:
        ref = build_structure(k, n, variant)
        if ref.target == target:
            if ref.sign == sign:
                return (1, k)
            if all(a == -b for a, b in zip(ref.sign, sign)):
                return (-1, k)
    return None


def compose(A: SignedPermutationTensor, B: SignedPermutationTensor) -> SignedPermutationTensor:
    """Return ``A o B`` (apply ``B`` first)."""
    if A.n != B.n or A.variant != B.variant:
        raise InvalidArgumentError(
            f"cannot compose tensors with (n, variant) = ({A.n}, {A.variant}) "
            f"and ({B.n}, {B.variant})"
        )
    target = tuple(A.target[B.target[a]] for a in range(A.dim))
    sign = tuple(B.sign[a] * A.sign[B.target[a]] for a in range(A.dim))
    return SignedPermutationTensor(
        A.n, A.variant, target, sign, label="composite",
        identified_as=_identify(target, sign, A.n, A.variant),
    )


@dataclass(frozen=True)
class StructureFamily:
    """The six primal structures ``J_1..J_6`` for one block size."""

    n: int
    members: tuple[SignedPermutationTensor, ...]

    def __post_init__(self):
        if len(self.members) != 6:
            raise InvalidArgumentError("a structure family has exactly six members")
        if any(m.n != self.n for m in self.members):
            raise InvalidArgumentError("family members must share n")

    @classmethod
    def build(cls, n: int) -> StructureFamily:
        return cls(n, tuple(build_structure(k, n, PRIMAL) for k in STRUCTURE_INDICES))

    def __getitem__(self, k: int) -> SignedPermutationTensor:
        _check_k(k)
        return self.members[k - 1]

    def duals(self) -> tuple[SignedPermutationTensor, ...]:
        return tuple(build_structure(k, self.n, DUAL) for k in STRUCTURE_INDICES)


@dataclass(frozen=True, eq=False)
class Metric:
    """Riemannian metric with constant coefficients; identity by default."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % BLOCKS:
            raise InvalidArgumentError(f"metric must be a square 8n x 8n matrix, got {m.shape}")
        if not np.array_equal(m, m.T):
            raise InvalidArgumentError("metric is not symmetric")
        if np.linalg.eigvalsh(m.astype(float)).min() <= 0:
            raise InvalidArgumentError("metric is not positive-definite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, n: int) -> Metric:
        _check_n(n)
        return cls(np.eye(BLOCKS * n, dtype=np.int64))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, u, v):
        return np.asarray(u) @ self.matrix @ np.asarray(v)


@dataclass(frozen=True)
class Counterexample:
    index: Any
    expected: Any
    actual: Any

    def to_dict(self) -> dict:
        def plain(x):
            if isinstance(x, tuple):
                return [plain(y) for y in x]
            if isinstance(x, np.generic):
                return x.item()
            return x

        return {"index": plain(self.index), "expected": plain(self.expected), "actual": plain(self.actual)}


@dataclass(frozen=True)
class VerificationRecord:
    name: str
    counterexamples: tuple[Counterexample, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "pass": self.passed,
            "counterexamples": [c.to_dict() for c in self.counterexamples],
        }


def check_square_minus_identity(J: SignedPermutationTensor) -> VerificationRecord:
    """Check ``J(J(e_a)) == -e_a`` on every basis element."""
    bad = []
    for a in range(J.dim):
        t1, s1 = J.image(a)
        t2, s2 = J.image(t1)
        if (t2, s1 * s2) != (a, -1):
            bad.append(Counterexample(a, signed_basis_label(a, -1), signed_basis_label(t2, s1 * s2)))
    return VerificationRecord(f"square_minus_identity[{J.name()}]", tuple(bad))


def check_orthogonality(J: SignedPermutationTensor, g: Metric | None = None) -> VerificationRecord:
    """Check ``g(J e_a, J e_b) == g(e_a, e_b)`` over all basis pairs."""
    g = g or Metric.identity(J.n)
    if g.dim != J.dim:
        raise InvalidArgumentError(f"metric dimension {g.dim} does not match tensor dimension {J.dim}")
    G = g.matrix
    bad = []
    for a in range(J.dim):
        ta, sa = J.image(a)
        for b in range(J.dim):
            tb, sb = J.image(b)
            lhs = sa * sb * G[ta, tb]
            if lhs != G[a, b]:
                bad.append(Counterexample((a, b), G[a, b], lhs))
    return VerificationRecord(f"orthogonality[{J.name()}]", tuple(bad))


def dual_matches_primal(
    k: int, n: int, tables: Mapping[tuple[int, str], BlockMap] | None = None
) -> VerificationRecord:
    """Compare the cotangent table for ``J_k*`` with the tangent table for ``J_k``.

    ``tables`` overrides the shipped fixture (used to test perturbed tables).
    """
    _check_k(k)
    _check_n(n)
    if tables is None:
        primal, dual = build_structure(k, n, PRIMAL), build_structure(k, n, DUAL)
    else:
        primal = from_block_map(tables[(k, PRIMAL)], n, PRIMAL)
        dual = from_block_map(tables[(k, DUAL)], n, DUAL)
    bad = [
        Counterexample(a, signed_basis_label(*primal.image(a)), signed_basis_label(*dual.image(a)))
        for a in range(primal.dim)
        if primal.image(a) != dual.image(a)
    ]
    return VerificationRecord(f"dual_matches_primal[J{k}]", tuple(bad))


@dataclass(frozen=True, eq=False)
class AnticommutatorEntry:
    i: int
    j: int
    matrix: np.ndarray
    holds: bool
    product_ij: str
    product_ji: str

    def nonzero(self) -> list[tuple[int, int, int]]:
        rows, cols = np.nonzero(self.matrix)
        return [(int(r), int(c), int(self.matrix[r, c])) for r, c in zip(rows, cols)]

    def to_dict(self) -> dict:
        return {
            "pair": [self.i, self.j],
            "clifford_relation_holds": self.holds,
            "product_ij": self.product_ij,
            "product_ji": self.product_ji,
            "anticommutator_nonzero": [list(t) for t in self.nonzero()],
        }


def anticommutator_table(family: StructureFamily) -> dict[tuple[int, int], AnticommutatorEntry]:
    """Tabulate ``J_i J_j + J_j J_i`` for every pair ``i <= j``.

    Nothing is asserted; each entry records whether the anticommutator equals
    ``-2 delta_ij I`` and how the products ``J_i J_j`` and ``J_j J_i`` are
    identified among ``+-J_1..6`` (``"composite"`` when they are not).
    """
    eye = np.eye(BLOCKS * family.n, dtype=np.int64)
    table = {}
    for i, j in combinations_with_replacement(STRUCTURE_INDICES, 2):
        pij = compose(family[i], family[j])
        pji = compose(family[j], family[i])
        anti = pij.matrix() + pji.matrix()
        expected = -2 * eye if i == j else 0 * eye
        table[(i, j)] = AnticommutatorEntry(
            i, j, anti, bool(np.array_equal(anti, expected)),
            _product_name(pij), _product_name(pji),
        )
    return table


def _product_name(p: SignedPermutationTensor) -> str:
    if p.identified_as is not None:
        return p.name()
    if p.target == tuple(range(p.dim)) and set(p.sign) == {1}:
        return "+I"
    if p.target == tuple(range(p.dim)) and set(p.sign) == {-1}:
        return "-I"
    return "composite"


def fundamental_two_form(J: SignedPermutationTensor, g: Metric | None = None):
    """The 2-form ``(X, Y) -> g(J X, Y)`` as a :class:`ConstantTwoForm`.

    Entry ``[a][b]`` is ``g(J e_a, e_b)``. Raises if ``J`` is not compatible
    with ``g``, since the result would not be antisymmetric.
    """
    from .forms import ConstantTwoForm

    if J.variant != PRIMAL:
        raise InvalidArgumentError("fundamental_two_form takes a primal structure")
    g = g or Metric.identity(J.n)
    if g.dim != J.dim:
        raise InvalidArgumentError(f"metric dimension {g.dim} does not match tensor dimension {J.dim}")
    G = g.matrix
    omega = np.empty((J.dim, J.dim), dtype=object)
    for a in range(J.dim):
        ta, sa = J.image(a)
        for b in range(J.dim):
            omega[a, b] = _exact(sa * G[ta, b])
    return ConstantTwoForm(J.n, omega)


def _exact(x):
    from fractions import Fraction

    if isinstance(x, (np.integer, int)):
        return Fraction(int(x))
    return Fraction(x)
