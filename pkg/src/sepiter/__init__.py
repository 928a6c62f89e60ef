"""Separability testing for bipartite density matrices.

Builds explicit continuous mixtures of product states by a damped
fixed-point iteration, with Monte Carlo evaluation of the underlying
operator integral, overflow-safe log-space analytic constants, and an
exact partial-transpose cross-check on small systems.
"""

from .criteria import (
    StateSpec,
    is_ppt,
    isotropic,
    ppt_min_eigenvalue,
    pure_product,
    random_full_rank,
    random_separable,
    singlet,
    werner,
)
from .ensemble import (
    FloatRangeError,
    SmearedSpectrum,
    choose_smear_order,
    closed_form_normalization,
    estimate_image,
    haar_moment_log,
    moment_bipartite_closed,
    moment_single_closed,
    mu_smeared,
    reconstruct,
    smeared_from_density,
)
from .operators import (
    DensityMatrix,
    HermitianOperator,
    UnitVector,
    expectation,
    hermitize,
    identity,
    maximally_mixed,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    tensor,
    trace_norm,
)
from .params import (
    PaperParams,
    contraction_constant,
    generic_steps,
    ln_range_coeff,
    ln_smear_coeff,
    paper_params,
    sufficient_steps,
    worst_case_smear_order,
)
from .sampling import (
    ProductSample,
    SampleSet,
    SeedStream,
    derive_seed,
    haar_unit_vector,
    haar_unitary,
    make_sample_set,
    torus_sample,
)
from .solver import (
    IterationTrace,
    PaperModeRefusal,
    RunResult,
    SolverConfig,
    TraceRow,
    Verdict,
    default_practical_lambda,
    fixed_point_step,
    regularize,
    revalidate,
    run,
)

__version__ = "0.1.0"
