"""Multimode squeezing in pulsed travelling-wave parametric amplifiers.

Simulates the Green functions of a dispersive chi(2) waveguide, splits the
resulting Bogoliubov transformation into independent single-mode squeezers
and predicts what a homodyne detector sees for a given local oscillator.
"""

from opasqueeze.spectral import (
    FrequencyGrid,
    KernelMatrix,
    SpectralAmplitude,
    hermite_mode,
    inner_product,
    make_grid,
)
from opasqueeze.gaussian import (
    GaussianModelParams,
    analytic_overlaps,
    gaussian_decomposition,
    gaussian_kernels,
    gaussian_mode,
    gaussian_zeta,
    lo_profile,
)
from opasqueeze.dispersion import load_medium
from opasqueeze.propagation import (
    GreenPair,
    MediumSpec,
    PumpPulse,
    compensate_linear_phase,
    pump_spectrum,
    solve_green_functions,
)
from opasqueeze.blochmessiah import (
    SqueezerDecomposition,
    decompose,
    squeezing_lengths,
    takagi_biphoton,
    time_reversal_check,
    verify_constraints,
)
from opasqueeze.homodyne import (
    HomodyneResult,
    detected_quadratures,
    efficiency_sweep,
    homodyne,
    mode_quadratures,
    project_lo,
    quantum_efficiency,
)

__version__ = "0.1.0"
