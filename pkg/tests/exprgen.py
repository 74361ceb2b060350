"""Bounded random Hamiltonian expressions for property tests.

Denominators and square-root arguments are always of the form ``e^2 + c``
with ``c >= 0.25``, so generated expressions have no singular points.
"""

import numpy as np


def _const(rng) -> str:
    return repr(round(float(rng.uniform(0.1, 3.0)), 3))


def _safe(rng, dim, depth) -> str:
    return f"(({random_text(rng, dim, depth)})^2+{repr(round(float(rng.uniform(0.25, 2.0)), 3))})"


def random_text(rng: np.random.Generator, dim: int, depth: int = 3) -> str:
    if depth <= 0 or rng.random() < 0.25:
        return f"x{rng.integers(dim)}" if rng.random() < 0.7 else _const(rng)
    sub = lambda: random_text(rng, dim, depth - 1)  # noqa: E731
    kind = rng.integers(10)
    if kind == 0:
        return f"({sub()})+({sub()})"
    if kind == 1:
        return f"({sub()})-({sub()})"
    if kind == 2:
        return f"({sub()})*({sub()})"
    if kind == 3:
        return f"({sub()})/{_safe(rng, dim, depth - 1)}"
    if kind == 4:
        return f"({sub()})^{rng.integers(1, 4)}"
    if kind == 5:
        return f"-({sub()})"
    if kind == 6:
        return f"sin({sub()})"
    if kind == 7:
        return f"cos({sub()})"
    if kind == 8:
        return f"exp(sin({sub()}))"
    return f"sqrt{_safe(rng, dim, depth - 1)}"


def random_point(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.uniform(-2.0, 2.0, size=dim)
