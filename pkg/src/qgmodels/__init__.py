"""Matrix models of compact quantum groups and their stationarity."""

from .algebra import FiniteAbelianGroup, coupling, index_add, index_neg, index_sub
from .integration import (
    TransferMatrix,
    cesaro,
    character_moment,
    dual_stationarity_check,
    halfclassical_transfer,
    stationarity_defect,
    transfer_matrix,
    truncated_integral,
    weyl_transfer_fastpath,
)
from .linalg import haar_unitary, inner, proj, projective_closure, rank1_chain_trace
from .magic import LatinSquare, basis_to_magic, commuting_entries, is_flat, latin_enumerate, validate_magic
from .models import (
    ModelSpec,
    abelian_dual_model,
    classical_permutation_model,
    dihedral_example,
    dual_reflection_model,
    half_classical_model,
    latin_fiber_model,
    regular_representation_model,
    weyl_matrix,
    weyl_model,
)

__version__ = "0.1.0"
