"""Low-rank unit-diagonal matrices, subspace alignment and antipodal codes."""
from .alignment import (
    AlignmentCertificate, Subspace, align_index_subspace, align_index_vector, align_subspace,
    off_from_sl, script_l_uniform, sl_from_align,
)
from .duality import (
    InfiniteAlignmentError, OffCertificate, ThetaCertificate, VerificationReport, dual_row, dualize,
    verify_off_certificate, verify_theta_certificate,
)
from .geometry import (
    AlphaCertificate, PointConfig, alpha_all, alpha_index, is_strictly_convex_antipodal,
    nullspace_of_config, normalize_antipodal,
)
from .numerics import (
    DEFAULT_TOL, GramlaxError, InputError, LpBuilder, LpProblem, LpSolution, SolverError,
    StructuralError, Tolerances, lp_solve,
)
from .rank2 import PipelineError, Rank2Report, rank2_pipeline
from .search import SearchConfig, SearchResult, solve, theta_d2_exact, welch_bound

__version__ = "0.1.0"
