"""Monte Carlo IP-DG solver for the 2D Helmholtz equation in weakly
random media, with a single-factorization multi-modes algorithm and a
classical per-sample baseline."""

from .assembly import (
    PenaltySet,
    SystemMatrix,
    assemble_constant,
    assemble_rhs,
    assemble_variable,
    get_assembler,
)
from .classical import BaselineResult, compare_fields, run_classical
from .linalg import LUFactors, SingularMatrixError, SolverCounters, lu_factorize, lu_solve
from .mesh import TriMesh, build_uniform_mesh, reference_quadrature
from .multimodes import RunConfig, RunResult, mode_rhs_update, run_multimodes, sample_average
from .randomness import MediaSample, NoiseSpec, alpha_at, sample_media
from .sources import SourceSpec, eval_source, source_volume
from .space import DGFunction, DGSpace, broken_norms
from .studies import (
    StudySpec,
    export_cross_section,
    export_field,
    run_full,
    run_m_scaling,
    run_manufactured_convergence,
    solve_deterministic,
)

__version__ = "0.1.0"
