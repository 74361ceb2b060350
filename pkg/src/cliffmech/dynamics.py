"""Hamilton vector fields, the equation sets they induce, and fixed-step integrators.

For a constant symplectic form with matrix ``Omega`` the Hamilton field ``X``
solves ``i_X Phi = dH``, i.e. ``sum_a X[a] Omega[a, b] = dH/dx_b``. For the six
Clifford forms ``Omega @ Omega == -I`` and the solution is ``X = Omega @ grad H``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DivergenceError,
    EvaluationError,
    IntegrationError,
    InvalidArgumentError,
    SingularSystemError,
)
from .expression import (
    Expression,
    compile_expression,
    finite_difference_gradient,
    gradient,
    parse,
)
from .forms import ConstantTwoForm, rational_inverse, symplectic_form_of_structure
from .structures import BLOCKS, _check_k

SYMBOLIC = "symbolic"
FINITE_DIFFERENCE = "finite-difference"
RK4 = "rk4"
IMPLICIT_MIDPOINT = "implicit_midpoint"
METHODS = (RK4, IMPLICIT_MIDPOINT)
_METHOD_ALIASES = {"rk4": RK4, "midpoint": IMPLICIT_MIDPOINT, "implicit_midpoint": IMPLICIT_MIDPOINT}

CLOSED_FORM_TOL = 1e-12


def normalize_method(name: str) -> str:
    try:
        return _METHOD_ALIASES[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown integration method {name!r}; use rk4 or midpoint") from None


@dataclass(frozen=True)
class HamiltonianSystem:
    """Energy function on R^dimension together with its gradient."""

    dimension: int
    energy: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    provenance: str = SYMBOLIC
    expression: Expression | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.dimension < 1 or self.dimension % BLOCKS:
            raise InvalidArgumentError(f"dimension must be a positive multiple of 8, got {self.dimension}")
        if self.provenance not in (SYMBOLIC, FINITE_DIFFERENCE):
            raise InvalidArgumentError(f"unknown gradient provenance {self.provenance!r}")

    @classmethod
    def from_expression(
        cls, source: str | Expression, dimension: int, provenance: str = SYMBOLIC
    ) -> HamiltonianSystem:
        """Build a system from an expression (text is parsed first)."""
        expr = parse(source, dimension) if isinstance(source, str) else source
        energy = compile_expression(expr)
        if provenance == SYMBOLIC:
            parts = [compile_expression(g) for g in gradient(expr, dimension)]

            def grad(x):
                return np.array([p(x) for p in parts])

        elif provenance == FINITE_DIFFERENCE:

            def grad(x):
                return np.array(finite_difference_gradient(energy, x))

        else:
            raise InvalidArgumentError(f"unknown gradient provenance {provenance!r}")
        return cls(dimension, energy, grad, provenance, expr)

    @classmethod
    def quadratic(cls, Q) -> HamiltonianSystem:
        """``H(x) = x^T Q x / 2`` for a symmetric ``Q``."""
        Q = np.array(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or not np.allclose(Q, Q.T, rtol=0, atol=0):
            raise InvalidArgumentError("Q must be a symmetric square matrix")
        Q.setflags(write=False)
        return cls(Q.shape[0], lambda x: 0.5 * float(x @ Q @ x), lambda x: Q @ x, SYMBOLIC)


@dataclass(frozen=True)
class EquationRecord:
    """``dx_{lhs*n+i}/dt = sign * dH/dx_{rhs*n+i}``."""

    lhs: int
    sign: int
    rhs: int


@dataclass(frozen=True)
class EquationSet:
    k: int
    records: tuple[EquationRecord, ...]

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: r.lhs))
        if [r.lhs for r in records] != list(range(BLOCKS)):
            raise InvalidArgumentError("every block must appear exactly once on the left-hand side")
        if sorted(r.rhs for r in records) != list(range(BLOCKS)):
            raise InvalidArgumentError("right-hand-side blocks must form a bijection")
        if any(r.sign not in (1, -1) for r in records):
            raise InvalidArgumentError("equation signs must be +1 or -1")
        object.__setattr__(self, "records", records)

    def as_mapping(self) -> dict[int, tuple[int, int]]:
        return {r.lhs: (r.sign, r.rhs) for r in self.records}


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = IMPLICIT_MIDPOINT
    dt: float = 1e-2
    steps: int = 100
    tol: float = 1e-12
    max_iter: int = 50

    def __post_init__(self):
        object.__setattr__(self, "method", normalize_method(self.method))
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidArgumentError(f"dt must be a positive finite number, got {self.dt}")
        if isinstance(self.steps, bool) or int(self.steps) != self.steps or self.steps < 0:
            raise InvalidArgumentError(f"steps must be a non-negative integer, got {self.steps}")
        if not self.tol > 0:
            raise InvalidArgumentError("midpoint tolerance must be positive")
        if self.max_iter < 1:
            raise InvalidArgumentError("midpoint iteration cap must be at least 1")
        object.__setattr__(self, "steps", int(self.steps))


@dataclass(frozen=True)
class PhasePoint:
    coordinates: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        c = np.array(self.coordinates, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise InvalidArgumentError("phase point coordinates must be a finite vector")
        c.setflags(write=False)
        object.__setattr__(self, "coordinates", c)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States at ``times[j] = j * dt`` with the energy recorded at each."""

    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray
    method: str
    dt: float

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, j: int) -> PhasePoint:
        return PhasePoint(self.states[j], float(self.times[j]))

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


# ----------------------------------------------------------------------------
# Hamilton vector fields


def _float_matrix(omega: ConstantTwoForm | np.ndarray) -> np.ndarray:
    if isinstance(omega, ConstantTwoForm):
        return omega.as_float()
    return np.asarray(omega, dtype=float)


def _is_complex_structure(m: np.ndarray) -> bool:
    return np.array_equal(m @ m, -np.eye(m.shape[0]))


def field_matrix(omega: ConstantTwoForm) -> np.ndarray:
    """Matrix ``A`` with ``X = A @ grad H``, namely ``(Omega^T)^{-1}``, computed exactly."""
    return rational_inverse(omega.omega.T).astype(float)


def hamilton_vector_field(omega: ConstantTwoForm, system: HamiltonianSystem, x) -> np.ndarray:
    """Solve ``i_X Phi = dH`` at ``x``.

    When ``Omega^2 = -I`` the solution is cross-checked against
    ``Omega @ grad H``; a disagreement beyond ``1e-12`` raises ``AssertionError``.

    Raises:
        SingularSystemError: if ``Omega`` is degenerate.
    """
    x = x.coordinates if isinstance(x, PhasePoint) else np.asarray(x, dtype=float)
    m = _float_matrix(omega)
    if m.shape != (system.dimension, system.dimension) or x.shape != (system.dimension,):
        raise InvalidArgumentError("dimensions of form, system and point do not agree")
    dH = np.asarray(system.grad(x), dtype=float)
    return solve_hamilton_field(m, dH)


def solve_hamilton_field(omega, dH) -> np.ndarray:
    m = _float_matrix(omega)
    dH = np.asarray(dH, dtype=float)
    try:
        X = np.linalg.solve(m.T, dH)
    except np.linalg.LinAlgError:
        raise SingularSystemError("symplectic form is degenerate; i_X Phi = dH has no unique solution") from None
    if _is_complex_structure(m):
        closed = m @ dH
        err = np.max(np.abs(X - closed), initial=0.0)
        if err > CLOSED_FORM_TOL:
            raise AssertionError(f"linear solve and closed form disagree by {err:.3e}")
    return X


def symbolic_equations(k: int) -> EquationSet:
    """Read Hamilton's equations off ``X = (Omega^T)^{-1} grad H`` for ``Phi_{J_k*}`` at n = 1."""
    _check_k(k)
    A = rational_inverse(symplectic_form_of_structure(k, 1).omega.T)
    records = []
    for b in range(BLOCKS):
        nonzero = [(c, A[b, c]) for c in range(BLOCKS) if A[b, c] != 0]
        if len(nonzero) != 1 or abs(nonzero[0][1]) != 1:
            raise ArithmeticError(f"row {b} of the Hamilton field is not a signed unit vector")
        c, coeff = nonzero[0]
        records.append(EquationRecord(b, 1 if coeff > 0 else -1, c))
    return EquationSet(k, tuple(records))


def equation_matrix(eqs: EquationSet, n: int) -> np.ndarray:
    """Expand an equation set to the 8n x 8n matrix ``A`` in ``dx/dt = A grad H``."""
    dim = BLOCKS * n
    A = np.zeros((dim, dim))
    for r in eqs.records:
        for i in range(n):
            A[r.lhs * n + i, r.rhs * n + i] = r.sign
    return A


# ----------------------------------------------------------------------------
# integration


def _rk4_step(f, x, dt):
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _midpoint_step(f, x, dt, tol, max_iter, step):
    # fixed point of y = x + dt * f((x + y) / 2), started from an explicit Euler guess
    y = x + dt * f(x)
    for _ in range(max_iter):
        y_new = x + dt * f(0.5 * (x + y))
        if not np.all(np.isfinite(y_new)):
            raise DivergenceError("non-finite state in midpoint iteration", step)
        update = np.max(np.abs(y_new - y))
        y = y_new
        if update <= tol * max(1.0, np.max(np.abs(y))):
            return y
    raise IntegrationError(
        f"implicit midpoint iteration did not converge in {max_iter} iterations", step
    )


def make_stepper(system: HamiltonianSystem, omega: ConstantTwoForm, cfg: IntegratorConfig):
    """Return ``step(x, index) -> x_next`` for the configured method."""
    A = field_matrix(omega)
    grad = system.grad

    def f(x):
        return A @ grad(x)

    if cfg.method == RK4:
        return lambda x, j: _rk4_step(f, x, cfg.dt)
    return lambda x, j: _midpoint_step(f, x, cfg.dt, cfg.tol, cfg.max_iter, j)


def integrate(
    system: HamiltonianSystem, omega: ConstantTwoForm, x0, cfg: IntegratorConfig
) -> Trajectory:
    """Integrate ``dx/dt = X(x)`` for ``cfg.steps`` fixed steps of size ``cfg.dt``.

    Raises:
        SingularSystemError: ``omega`` is degenerate.
        IntegrationError: the midpoint iteration failed to converge.
        DivergenceError: the state or energy became non-finite, or H could not be evaluated.
    """
    x = np.array(x0.coordinates if isinstance(x0, PhasePoint) else x0, dtype=float)
    if x.shape != (system.dimension,) or omega.dim != system.dimension:
        raise InvalidArgumentError("dimensions of form, system and initial point do not agree")
    if not np.all(np.isfinite(x)):
        raise DivergenceError("non-finite initial state", 0)
    step = make_stepper(system, omega, cfg)
    states = np.empty((cfg.steps + 1, system.dimension))
    energies = np.empty(cfg.steps + 1)
    states[0] = x
    energies[0] = system.energy(x)
    for j in range(1, cfg.steps + 1):
        try:
            x = step(x, j)
            if not np.all(np.isfinite(x)):
                raise DivergenceError("non-finite state", j)
            states[j] = x
            energies[j] = system.energy(x)
        except EvaluationError as exc:
            raise DivergenceError(f"Hamiltonian evaluation failed: {exc}", j) from exc
        if not math.isfinite(energies[j]):
            raise DivergenceError("non-finite energy", j)
    times = np.arange(cfg.steps + 1) * cfg.dt
    return Trajectory(times, states, energies, cfg.method, cfg.dt)


def expm(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a Taylor series.

    ``M`` is scaled by ``2**-s`` until its 1-norm is at most 1/2, the series is
    summed until terms drop below machine precision, and the result is squared
    ``s`` times.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgumentError("expm needs a square matrix")
    norm = np.max(np.sum(np.abs(M), axis=0), initial=0.0)
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    A = M / 2.0**s
    result = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for j in range(1, 40):
        term = term @ A / j
        result = result + term
        if np.max(np.abs(term)) <= 1e-17 * np.max(np.abs(result)):
            break
    for _ in range(s):
        result = result @ result
    return result


def quadratic_flow_oracle(Q, omega: ConstantTwoForm, x0, t: float) -> np.ndarray:
    """Exact flow of ``H = x^T Q x / 2``: ``expm(t * Omega @ Q) @ x0``."""
    Q = np.asarray(Q, dtype=float)
    m = _float_matrix(omega)
    x0 = np.asarray(x0.coordinates if isinstance(x0, PhasePoint) else x0, dtype=float)
    if Q.shape != m.shape or x0.shape != (m.shape[0],):
        raise InvalidArgumentError("dimensions of Q, omega and x0 do not agree")
    return expm(t * (m @ Q)) @ x0


@dataclass(frozen=True)
class EnergyDrift:
    max_drift: float
    slope: float


def energy_drift(traj: Trajectory) -> EnergyDrift:
    """Largest ``|H(x_t) - H(x_0)|`` and least-squares slope of ``H`` against ``t``."""
    if len(traj) == 0:
        raise InvalidArgumentError("empty trajectory")
    dev = traj.energies - traj.energies[0]
    max_drift = float(np.max(np.abs(dev)))
    if len(traj) < 2:
        return EnergyDrift(max_drift, 0.0)
    t = traj.times - traj.times.mean()
    slope = float(np.dot(t, dev - dev.mean()) / np.dot(t, t))
    return EnergyDrift(max_drift, slope)


def one_step_jacobian(
    system: HamiltonianSystem,
    omega: ConstantTwoForm,
    x0,
    cfg: IntegratorConfig,
    h: float = 1e-6,
) -> np.ndarray:
    """Central-difference Jacobian of the ``cfg.steps``-step map at ``x0``."""
    x0 = np.asarray(x0.coordinates if isinstance(x0, PhasePoint) else x0, dtype=float)
    step = make_stepper(system, omega, cfg)

    def flow(x):
        for j in range(1, cfg.steps + 1):
            x = step(x, j)
        return x

    dim = x0.shape[0]
    M = np.empty((dim, dim))
    for c in range(dim):
        e = np.zeros(dim)
        e[c] = h
        M[:, c] = (flow(x0 + e) - flow(x0 - e)) / (2 * h)
    return M


def symplecticity_residual(
    system: HamiltonianSystem,
    omega: ConstantTwoForm,
    x0,
    dt: float,
    method: str = IMPLICIT_MIDPOINT,
    steps: int = 1,
) -> float:
    """``max |M^T Omega M - Omega|`` for the Jacobian ``M`` of the step map at ``x0``."""
    cfg = IntegratorConfig(method=method, dt=dt, steps=steps)
    M = one_step_jacobian(system, omega, x0, cfg)
    m = omega.as_float()
    return float(np.max(np.abs(M.T @ m @ M - m)))

