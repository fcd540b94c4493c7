"""Scenario approach for chance-constrained unit commitment.

Solvers (:mod:`.lp`, :mod:`.milp`), risk bounds (:mod:`.theory`), scenario-set
reduction (:mod:`.reduction`), unit commitment models (:mod:`.case`,
:mod:`.scuc`) and the Monte-Carlo pipeline (:mod:`.stochastic`).
"""

__version__ = "0.1.0"

from .lp import (DEFAULT_TOL, LinearProgram, LpBuilder, LpSolution, LpStatus, Sense,
                 ToleranceConfig, solve_lp, vertex_oracle)
from .milp import (MilpOptions, MilpSolution, MilpStatus, MixedIntegerProgram,
                   binary_enumeration_oracle, objectives_equal, solve_milp)
from .theory import (ComplexityQuery, EpsilonCertificate, binomial_tail, certify,
                     epsilon_posterior, prior_sample_size, sample_complexity_convex)
from .reduction import (Degeneracy, ReductionResult, ScenarioProblemOracle, ScenarioProgram,
                        SetKind, brute_force_essential_sets, irreducible_set, is_degenerate,
                        subset_objectives, support_set_by_removal, support_set_via_duals,
                        two_stage_essential)
from .case import GridCase, build_ptdf, bundled_case_path, load_case, save_case
from .scuc import (UcSolution, build_dscuc, build_model, build_sscuc, check_solution_feasible,
                   fix_first_stage)
from .stochastic import (DistributionSpec, ErrorModel, ExperimentConfig, ScenarioSet,
                         estimate_violation, run_experiment, sample_scenarios)
