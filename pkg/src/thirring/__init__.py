"""Characteristic-coordinate numerical laboratory for the massive Thirring
model in 1+1 dimensions: local solves on causal diamonds, lab-frame gluing,
global continuation driven by the concentration function, the Delgado
decomposition, and the fractional-Sobolev norm toolbox used to monitor it all.
"""

from .geometry import Diamond, LabPoint, NullGrid, NullPoint, lab_to_null, null_to_lab, time_slice
from .model import (InitialData, ModelParams, SpinorPair, charge, generate_data,
                    massless_exact, massless_exact_star, rhs_phi, rhs_psi)
from .solver import (ConcentrationSuspected, ContinuationLog, ConvergenceError,
                     GluedSolution, GluingError, LocalSolution, SolverConfig,
                     concentration_radius, continue_globally, glue_solve,
                     picard_step, solve, solve_local, solve_marching)
from .decomposition import DecompositionResult, boundedness_stress, delgado_split, verify_mass1
from .norms import (ExtensionSpec, FunctionSample, NormSpec, check_inequalities,
                    concentration_function, extend, gagliardo_seminorm, hs_norm,
                    lp_norm, mixed_l2_sup_norm, w1q_norm, xr_norm, yr_norm)

__version__ = "0.1.0"
