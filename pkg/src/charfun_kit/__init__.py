"""Extended characteristic functions of ergodic coisometric row contractions."""
from .charfun import (DefectData, RingDefectData, defect_data, dstar_hat, extended_charfun,
                      gamma_isometry, poisson_hat, popescu_charfun, popescu_poisson, ring_defects,
                      theorem52_check, theta_hat_on)
from .dilation import (CouplingState, DilationSpace, coupling_step, cuntz_state_check,
                       intertwining_check, popescu_dilation, product_intertwiner_coefficients)
from .equivalence import (corollary63_check, mixing_transform, symbols_equivalent,
                          theorem61_crosscheck, tuples_unitarily_equivalent)
from .errors import CharfunError
from .fock import MultiAnalyticSymbol, apply_symbol, isometry_defect, shift_compose
from .tuples import (ErgodicProfile, RowContraction, find_invariant_vector_state, is_ergodic,
                     profile_of, random_ergodic_tuple, section7_tuple, validate)

__version__ = "0.1.0"
