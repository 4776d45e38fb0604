"""Constructive Calderon-Zygmund machinery on non-homogeneous spaces."""

from .space import (DiscreteSpace, DominatingFunction, SpaceError,
                    ValidationReport, ball_members, candidate_radii,
                    fit_floored_power, measure, validate_geometric_doubling,
                    validate_upper_doubling)
from .balls import (Ball, DoublingParams, KCalculator, ParameterError,
                    coefficient_K, coefficient_Kprime, default_beta0,
                    is_doubling, largest_doubling_down, smallest_doubling_up)
from .covering import CoverSelection, finite_overlap_cover, vitali_cover
from .maximal import (GoodLambdaParams, MaximalResult, good_lambda_check,
                      maximal_doubling, maximal_noncentered, maximal_p,
                      sharp_maximal)
from .czop import (BergmanConfig, Kernel, apply_truncated, bergman_kernel,
                   commutator_apply, cotlar_check, maximal_truncated,
                   validate_kernel_holder, validate_kernel_size, weak11_check)
from .czdecomp import (CZDecomposition, ConstructionError, ProvisoError,
                       cz_decompose, verify_cz)
from .fspaces import (AtomicBlock, RBMOEstimate, atomic_block_validate,
                      blocks_from_cz, chain_inequality_check,
                      commutator_pointwise_check, duality_pairing_check,
                      hardy_from_cz, john_nirenberg_check, rbmo_estimate)
from .scenarios import KINDS, Scenario, generate, non_doubling_witness
from .harness import run_suite
from .reports import Report, to_csv, to_jsonl, write_reports

__version__ = "0.1.0"
