"""Spectra, spectral flow and spectral sections of Spin^c Dirac families on the flat 3-torus."""

from .errors import (
    DomainError,
    FlowError,
    GeometryError,
    OracleError,
    SectionError,
    SpectrumError,
)
from .flow_index import (
    FlowResult,
    IndexElement,
    index_element,
    sections_exist,
    spectral_flow_closed_form,
    spectral_flow_numeric,
)
from .lattice_oracle import (
    FluxLattice,
    OracleReport,
    assemble_3d_spectrum,
    build_flux_dirac,
    landau_check,
    mode_block_oracle,
)
from .spectral_sections import (
    KDifference,
    SectionDescriptor,
    boundary_projector,
    bubble_continuation,
    build_projector_field_nontrivial,
    build_projector_field_trivial,
    classify_small_R,
    epsilon_bound,
    k_difference,
    relative_degree,
    verify_spectral_section,
)
from .spectrum_engine import (
    BlockEigenData,
    BranchLabel,
    HarmonicForm,
    SpectrumSlice,
    block_eigen_data,
    block_matrix,
    clifford_block,
    enumerate_spectrum,
    kernel_dimension,
    lambda_l,
    mu_m,
)
from .topology import ProjectorField, chern_number
from .torus_geometry import (
    FiberFormSplit,
    ParameterLattice,
    ProjectedLattice,
    SpincStructure,
    cup_pairing,
    decompose_spinc,
    fiber_form_split,
    projected_lattice,
    saturate_and_cosets,
    trivialize,
    untrivialize,
)

__version__ = "0.1.0"

__all__ = [
    "BlockEigenData",
    "BranchLabel",
    "DomainError",
    "FiberFormSplit",
    "FlowError",
    "FlowResult",
    "FluxLattice",
    "GeometryError",
    "HarmonicForm",
    "IndexElement",
    "KDifference",
    "OracleError",
    "OracleReport",
    "ParameterLattice",
    "ProjectedLattice",
    "SectionDescriptor",
    "SectionError",
    "SpectrumError",
    "ProjectorField",
    "chern_number",
    "SpectrumSlice",
    "SpincStructure",
    "assemble_3d_spectrum",
    "block_eigen_data",
    "block_matrix",
    "boundary_projector",
    "bubble_continuation",
    "build_flux_dirac",
    "build_projector_field_nontrivial",
    "build_projector_field_trivial",
    "classify_small_R",
    "clifford_block",
    "cup_pairing",
    "decompose_spinc",
    "enumerate_spectrum",
    "epsilon_bound",
    "fiber_form_split",
    "index_element",
    "k_difference",
    "kernel_dimension",
    "lambda_l",
    "landau_check",
    "mode_block_oracle",
    "mu_m",
    "projected_lattice",
    "relative_degree",
    "saturate_and_cosets",
    "sections_exist",
    "spectral_flow_closed_form",
    "spectral_flow_numeric",
    "trivialize",
    "untrivialize",
    "verify_spectral_section",
    "__version__",
]
