"""Spectra of block Jacobi matrices and Hamiltonian systems from matrix Prüfer phases."""

from .boundary import Dirichlet, General, Periodic
from .eigensolver import (
    EigenphaseFlow,
    SpectralResult,
    compactified_energy_path,
    find_eigenvalues,
    scan_flow,
)
from .errors import (
    CompletenessError,
    ConditioningError,
    ContractViolation,
    IntegrationError,
    InvalidBoundaryError,
    NumericalDegeneracyError,
    NumericalWarning,
    ParseError,
    PruferError,
    SamplingError,
    TangencyError,
)
from .hamiltonian import (
    HamiltonianSystem,
    SturmLiouvilleModel,
    ham_find_eigenvalues,
    sturm_liouville_to_hamiltonian,
)
from .indices import LagrangianPath, SymplecticPath, conley_zehnder_index, intersection_index
from .jacobi import BlockJacobiModel, assemble_dense, free_chain, random_model

__version__ = "0.1.0"
