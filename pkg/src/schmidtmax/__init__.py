"""Iterative maximization of Schmidt norms over subspaces of pure states."""

from .states import (
    Cut,
    DensityMatrix,
    PureState,
    SchmidtDecomposition,
    random_state,
    reduced_density_matrix,
    reshape_for_cut,
    schmidt_coefficients,
    schmidt_decompose,
)
from .measures import (
    NormSpec,
    entropy_from_state,
    renyi_entropy,
    schmidt_norm,
    variational_lower_bound,
    von_neumann_entropy,
)
from .subspaces import (
    ChannelSpec,
    FermionSpace,
    SubspaceProjector,
    antisymmetric_projector,
    channel_image_projector,
    embed_fermion_state,
    fermion_projector,
    identity_projector,
    random_subspace_projector,
    slater_state,
    span_projector,
    split_isometry,
    symmetric_projector,
    yang_state,
    yang_symmetry_unitary,
)
from .optimize import (
    IterationConfig,
    IterationReport,
    Objective,
    distance_bound_check,
    fixed_point_residual,
    iterate_once,
    run_single,
    shor_baseline,
)
from .experiments import (
    ExperimentResult,
    RankProfile,
    ame_search,
    channel_min_output,
    channel_pair_multiplicativity,
    fermion_entropy_min,
    fermion_extremal,
    min_output_from_projector,
    probe_setting,
    subspace_variety_dimension,
    table1_protocol,
    variety_probe,
)

__version__ = "0.1.0"
