"""Hamilton dynamics for the six almost Clifford structures on R^8n."""

__version__ = "0.1.0"

from .errors import (
    CliffmechError,
    DivergenceError,
    EvaluationError,
    IntegrationError,
    InvalidArgumentError,
    ParseError,
    SingularSystemError,
)
from .structures import (
    DUAL,
    PRIMAL,
    Metric,
    SignedPermutationTensor,
    StructureFamily,
    VerificationRecord,
    anticommutator_table,
    apply_structure,
    build_structure,
    check_orthogonality,
    check_square_minus_identity,
    compose,
    dual_matches_primal,
    fundamental_two_form,
)
from .forms import (
    ConstantTwoForm,
    CovectorValue,
    LinearOneForm,
    apply_dual_structure,
    canonical_one_form,
    check_nondegenerate,
    exterior_derivative,
    interior_product,
    structure_form_identity,
    symplectic_form_of_structure,
)
from .expression import Expression, differentiate, evaluate, gradient, parse
from .dynamics import (
    EquationSet,
    HamiltonianSystem,
    IntegratorConfig,
    PhasePoint,
    Trajectory,
    energy_drift,
    hamilton_vector_field,
    integrate,
    quadratic_flow_oracle,
    symbolic_equations,
    symplecticity_residual,
)
