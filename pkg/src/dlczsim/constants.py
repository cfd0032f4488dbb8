"""Physical constants and default experimental parameters.

Constants are pinned to fixed decimal values (rather than pulling them from
scipy.constants) so that golden numbers in reports and tests are bit-stable
across library versions.
"""

import math

# Fundamental constants (SI)
BOLTZMANN_J_PER_K = 1.380649e-23
BOHR_MAGNETON_J_PER_T = 9.274e-24
PLANCK_J_S = 6.626e-34

# Rb-87 ground-state Zeeman structure
LANDE_G_A = 0.5018
DELTA_G = -0.002  # g_a + g_b for the two hyperfine ground levels

# Default atom / light parameters
RB87_MASS_KG = 1.443e-25
DEFAULT_TEMPERATURE_K = 100e-6
DEFAULT_WRITE_WAVELENGTH_M = 795e-9
DEFAULT_ENSEMBLE_LENGTH_M = 5e-3
DEFAULT_FIELD_GRADIENT_T_PER_M = 2.2e-4  # 22 mG/cm

# Default interferometer geometry
DEFAULT_CHANNEL_COUNT = 3
DEFAULT_BEAM_SEPARATION_M = 2e-3
DEFAULT_FOCAL_LENGTH_M = 1.425
DEFAULT_SHRINK_FACTOR = 2.0
DEFAULT_BTD_FOCAL_M = 2.0
DEFAULT_SPOT_AT_FOCUS_M = 0.65e-3
DEFAULT_ATOMIC_TRANSVERSE_SIZE_M = 2e-3

# Default node parameters
DEFAULT_EXCITATION_PROBABILITY = 0.01
DEFAULT_ETA_S = 0.3
DEFAULT_ETA_T = 0.7
DEFAULT_ETA_SW = 0.8
DEFAULT_P_MFS = 0.5
DEFAULT_GAMMA0 = 0.15
DEFAULT_LIFETIMES_S = (730e-6, 1170e-6, 730e-6)
DEFAULT_TAU0_S = 870e-6

# Default noise model: visibility chosen so the CHSH value at zero delay is
# 2.5, decaying to 2.07 at 1 ms storage.
DEFAULT_V0 = 2.5 / (2.0 * math.sqrt(2.0))
DEFAULT_TAU_V_S = 1e-3 / math.log(2.5 / 2.07)

# Default elementary-link parameters
DEFAULT_FIBER_SPEED_M_PER_S = 2e8
DEFAULT_P_BSM = 0.5
DEFAULT_T_REQ_SINGLE_S = 150.0

# Duty cycle of one preparation + run period (wall-clock rate reporting only)
PREP_DURATION_S = 42e-3
RUN_DURATION_S = 8e-3
