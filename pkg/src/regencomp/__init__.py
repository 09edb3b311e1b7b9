"""regencomp: regenerative composition structures driven by subordinators.

Samplers for the composition of n (path painting, Poissonized occupancy,
sequential first-block deletion), compensators of the occupied-gap counters,
the normal/stable limit laws of the block counts with their exact
characteristic functions, small-n exact oracles, and a batch experiment
harness that verifies the limit theorems at desk scale.
"""

__version__ = "0.1.0"

from .levy_model import (DeHaanExp, ExpIncrement, FiniteAtomic, GammaSubordinator,
                         GrowthRegime, HeavyComposite, LevyModel, LogPower,
                         NormConstants, limit_law_for, model_from_config,
                         norm_constants)
from .limit_laws import LimitLaw, cf_distance, ks_distance, sample_reference, stable_cf
from .occupancy import (Composition, DecrementMatrix, PoissonOccupancy, block_counts,
                        sample_composition_decrement, sample_composition_path,
                        sample_poissonized)
from .oracle import ExactLaw, check_centering_swap, check_renewal_smoothing, exact_joint_law
from .pathsim import (RenewalWalk, SubordinatorPath, first_passage, normalized_fpt,
                      renewal_count, simulate_path, simulate_walk)
from .compensator import compensator_A, compensator_A1, compensator_B
from .util import (ConfigError, HorizonError, QuadratureError, RegencompError,
                   UnsupportedRegimeError)

__all__ = [name for name in dir() if not name.startswith("_")]
