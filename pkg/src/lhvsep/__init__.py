"""Consistent local-hidden-variable models and product-state decompositions.

Build consistent LHV models from separable states, recover product
ensembles from consistent models, certify entanglement by partial
transposition and check everything by seeded Monte Carlo sampling.
"""

from .exceptions import (
    AdditivityError,
    CompletenessError,
    DocumentSyntaxError,
    InconsistentModelError,
    InvariantError,
    LhvSepError,
    PositivityError,
    UnderdeterminedError,
)
from .lhv import (
    LambdaEntry,
    LhvModel,
    Report,
    Violation,
    born_correlation,
    born_table,
    check_admissible,
    check_consistency,
    correlation_table,
    model_correlation,
)
from .linalg import (
    DensityOperator,
    check_density,
    hermitian_eigenvalues,
    hermitian_eigh,
    partial_trace,
    partial_transpose,
    pauli,
    tensor,
)
from .montecarlo import (
    OutcomeRecord,
    compare_records,
    compare_statistics,
    lhv_probabilities,
    outcome_probabilities,
    sample_lhv,
    sample_quantum,
)
from .povm import (
    ConstraintSet,
    Effect,
    Povm,
    axes6,
    bloch_projector,
    cube8,
    default14,
    discover_constraints,
    bloch_relation,
    ideal_z,
    sphere_povm,
)
from .reconstruction import (
    ProductEnsemble,
    ProjectorFrame,
    assemble_mixture,
    conditional_density_qubit,
    default_frame,
    extract_ensemble,
    gleason_fit,
    polarization_vector,
    tomographic_state_from_correlations,
    verify_born_extension,
)
from .separability import (
    LocalityVerdict,
    find_decomposition,
    lhv_from_separable,
    locality_verdict,
    ppt_min_eigenvalue,
    pure_is_product,
)

__version__ = "0.1.0"
