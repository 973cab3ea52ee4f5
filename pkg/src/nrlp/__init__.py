"""Noise reinforced Levy processes: Yule-Simon clocks, reinforced point
processes, path synthesis, couplings, reinforced random-walk skeletons and
Monte Carlo verification suites."""

__version__ = "0.1.0"

from .measure import (AdmissibilityError, Band, FiniteAtoms, LevyTriplet, StableLike,
                      TabulatedDensity, admissibility, bg_index, char_exponent, check_admissible,
                      is_admissible, load_triplet, poisson_triplet)
from .yule_simon import (YuleSimonPath, sample_standard_yule, sample_ys_path, sample_ys_values,
                         ys_cov, ys_mean, ys_pmf, ys_sf)
from .point_process import (MarkedPointPattern, counting_process, laplace_functional,
                            sample_nrppp, superpose, thin_pattern)
from .paths import (NrbmPath, SamplePath, fdd_charfn, martingale_transform, nrbm_cov,
                    sample_compensated_series, sample_nrbm, sample_nrlp_marginals,
                    sample_reinforced_cpp, synthesize_nrlp)
from .coupling import (CoupledBrownianPair, CoupledPaths, coupled_cov, joint_charfn,
                       sample_coupled_bm, sample_coupled_pair)
from .skeleton import (ReinforcedWalk, SkeletonPair, bercu_martingale, convergence_experiment,
                       predictable_qv, reinforce_steps, skeleton_pair)
from .verify import VerificationReport, run_suite
