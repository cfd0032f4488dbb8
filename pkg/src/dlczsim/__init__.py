"""Monte-Carlo simulator and analysis toolkit for a multimode DLCZ-type
spin-wave/photon entanglement interface and its elementary repeater link."""

__version__ = "0.1.0"

from .analysis import (
    CANONICAL_CHSH_ANGLES,
    EstimateWithError,
    chsh,
    correlation,
    multiplex_gain,
    poisson_bootstrap,
    retrieval_efficiency_estimate,
)
from .decoherence import (
    AtomEnsemble,
    Coherence,
    DecayCurve,
    MFI_COHERENCE,
    MFS_COHERENCE,
    combined_lifetime,
    fit_exponential,
    gradient_lifetime,
    mean_thermal_speed,
    motional_lifetime,
    retrieval_efficiency_model,
)
from .geometry import ArrayGeometry, btd_matrix, mode_angle, spin_wavelength
from .link import LinkConfig, attempt_interval, deterministic_rate, heralded_feasible, simulate_link
from .node import (
    NodeConfig,
    ScheduleEntry,
    TrialRecord,
    double_excitation_note,
    expected_coincidence_table,
    run_batch,
    run_trial,
)
from .states import (
    NoiseModel,
    PolarizationSetting,
    fidelity,
    ideal_state,
    joint_probability,
    werner_state,
)
from .tables import CoincidenceTable
from .tomography import (
    TomographyCounts,
    linear_inversion,
    project_physical,
    reconstruct,
)

__all__ = [
    "__version__",
    "ArrayGeometry",
    "AtomEnsemble",
    "CANONICAL_CHSH_ANGLES",
    "Coherence",
    "CoincidenceTable",
    "DecayCurve",
    "EstimateWithError",
    "LinkConfig",
    "MFI_COHERENCE",
    "MFS_COHERENCE",
    "NodeConfig",
    "NoiseModel",
    "PolarizationSetting",
    "ScheduleEntry",
    "TomographyCounts",
    "TrialRecord",
    "attempt_interval",
    "btd_matrix",
    "chsh",
    "combined_lifetime",
    "correlation",
    "deterministic_rate",
    "double_excitation_note",
    "expected_coincidence_table",
    "fidelity",
    "fit_exponential",
    "gradient_lifetime",
    "heralded_feasible",
    "ideal_state",
    "joint_probability",
    "linear_inversion",
    "mean_thermal_speed",
    "mode_angle",
    "motional_lifetime",
    "multiplex_gain",
    "poisson_bootstrap",
    "project_physical",
    "reconstruct",
    "retrieval_efficiency_estimate",
    "retrieval_efficiency_model",
    "run_batch",
    "run_trial",
    "simulate_link",
    "spin_wavelength",
    "werner_state",
]
