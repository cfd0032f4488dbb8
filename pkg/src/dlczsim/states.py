"""Two-photon polarization states, measurement probabilities, and fidelity.

Density matrices are plain 4x4 complex ndarrays in the basis order
(HH, HV, VH, VV). The functions here are pure and thread-safe.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError

HERMITICITY_ATOL = 1e-10
TRACE_ATOL = 1e-10
EIGENVALUE_FLOOR = -1e-10

#: Analyzer basis labels and their orthogonal complements.
BASIS_COMPLEMENT = {
    "H": "V", "V": "H",
    "D": "A", "A": "D",
    "sigma+": "sigma-", "sigma-": "sigma+",
}

_SQRT_HALF = 1.0 / math.sqrt(2.0)
_BASIS_KETS = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([_SQRT_HALF, _SQRT_HALF], dtype=complex),
    "A": np.array([_SQRT_HALF, -_SQRT_HALF], dtype=complex),
    "sigma+": np.array([_SQRT_HALF, 1j * _SQRT_HALF], dtype=complex),
    "sigma-": np.array([_SQRT_HALF, -1j * _SQRT_HALF], dtype=complex),
}


@dataclass(frozen=True)
class PolarizationSetting:
    """Analyzer configuration for the Stokes and anti-Stokes arms.

    Either both angles are set (linear analyzers, radians) or both labels
    are set (tomography bases H/D/sigma+ with implied complements).
    Outcome 0 means transmission to detector 1, outcome 1 reflection to
    detector 2.
    """

    theta_s: float | None = None
    theta_t: float | None = None
    label_s: str | None = None
    label_t: str | None = None

    def __post_init__(self):
        angular = self.theta_s is not None and self.theta_t is not None
        labelled = self.label_s is not None and self.label_t is not None
        if angular == labelled:
            raise DomainError("setting needs either two angles or two basis labels")
        if angular:
            if not (math.isfinite(self.theta_s) and math.isfinite(self.theta_t)):
                raise DomainError("analyzer angles must be finite")
        else:
            for label in (self.label_s, self.label_t):
                if label not in BASIS_COMPLEMENT:
                    raise DomainError(f"unknown basis label {label!r}")

    @classmethod
    def linear(cls, theta_s: float, theta_t: float) -> "PolarizationSetting":
        return cls(theta_s=theta_s, theta_t=theta_t)

    @classmethod
    def tomography(cls, label_s: str, label_t: str) -> "PolarizationSetting":
        return cls(label_s=label_s, label_t=label_t)

    @property
    def is_tomography(self) -> bool:
        return self.label_s is not None

    def stokes_kets(self) -> tuple[np.ndarray, np.ndarray]:
        """(transmit, reflect) single-photon kets of the Stokes analyzer."""
        return _analyzer_kets(self.theta_s, self.label_s)

    def anti_stokes_kets(self) -> tuple[np.ndarray, np.ndarray]:
        """(transmit, reflect) single-photon kets of the anti-Stokes analyzer."""
        return _analyzer_kets(self.theta_t, self.label_t)

    def describe(self) -> dict:
        if self.is_tomography:
            return {"label_s": self.label_s, "label_t": self.label_t}
        return {"theta_s_rad": self.theta_s, "theta_t_rad": self.theta_t}


def _analyzer_kets(theta, label):
    if label is not None:
        return _BASIS_KETS[label], _BASIS_KETS[BASIS_COMPLEMENT[label]]
    transmit = np.array([math.cos(theta), math.sin(theta)], dtype=complex)
    reflect = np.array([-math.sin(theta), math.cos(theta)], dtype=complex)
    return transmit, reflect


def basis_ket(label: str) -> np.ndarray:
    """Single-photon ket for one of the six analyzer basis labels."""
    if label not in _BASIS_KETS:
        raise DomainError(f"unknown basis label {label!r}")
    return _BASIS_KETS[label].copy()


@dataclass(frozen=True)
class NoiseModel:
    """Isotropic depolarization with exponentially decaying visibility.

    The state seen at storage time t is V(t)|Phi><Phi| + (1-V(t)) I/4 with
    V(t) = v0 * exp(-t / tau_v) and |Phi> the ideal state at the residual
    interferometer phase.
    """

    v0: float
    tau_v_s: float
    residual_phase_rad: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.v0 <= 1.0:
            raise DomainError(f"initial visibility must be in (0, 1], got {self.v0}")
        if self.tau_v_s <= 0.0:
            raise DomainError("visibility decay constant must be positive")

    def visibility(self, t_s: float) -> float:
        if t_s < 0.0:
            raise DomainError("storage time must be non-negative")
        return self.v0 * math.exp(-t_s / self.tau_v_s)

    def state_at(self, t_s: float) -> np.ndarray:
        return werner_state(self.visibility(t_s), phase=self.residual_phase_rad)


def ideal_state(phase: float = 0.0) -> np.ndarray:
    """Density matrix of (|HH> + e^{i*phase}|VV>) / sqrt(2)."""
    ket = np.zeros(4, dtype=complex)
    ket[0] = _SQRT_HALF
    ket[3] = _SQRT_HALF * np.exp(1j * phase)
    return np.outer(ket, ket.conj())


def werner_state(visibility: float, phase: float = 0.0) -> np.ndarray:
    """Isotropic mixture of the ideal state with white noise."""
    if not 0.0 <= visibility <= 1.0:
        raise DomainError(f"visibility must be in [0, 1], got {visibility}")
    return visibility * ideal_state(phase) + (1.0 - visibility) * np.eye(4, dtype=complex) / 4.0


def validate_density_matrix(rho: np.ndarray, require_physical: bool = True) -> None:
    """Raise DomainError unless rho is a valid (optionally physical) state."""
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise DomainError(f"expected a 4x4 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_ATOL:
        raise DomainError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > TRACE_ATOL or abs(np.trace(rho).imag) > TRACE_ATOL:
        raise DomainError("density matrix trace differs from 1")
    if require_physical:
        eigenvalues = np.linalg.eigvalsh(rho)
        if eigenvalues.min() < EIGENVALUE_FLOOR:
            raise DomainError(
                f"density matrix has negative eigenvalue {eigenvalues.min():.3e}"
            )


def born_probabilities(rho: np.ndarray, setting: PolarizationSetting) -> np.ndarray:
    """2x2 array of joint outcome probabilities P[s, t] for one setting."""
    validate_density_matrix(rho)
    stokes = setting.stokes_kets()
    anti = setting.anti_stokes_kets()
    probs = np.empty((2, 2))
    for s in (0, 1):
        for t in (0, 1):
            ket = np.kron(stokes[s], anti[t])
            value = np.real(ket.conj() @ np.asarray(rho) @ ket)
            probs[s, t] = max(value, 0.0)
    return probs


def joint_probability(
    rho: np.ndarray, setting: PolarizationSetting, s_outcome: int, t_outcome: int
) -> float:
    """Probability that the analyzers yield outcomes (s, t) on state rho."""
    if s_outcome not in (0, 1) or t_outcome not in (0, 1):
        raise DomainError("detector outcomes are 0 (transmit) or 1 (reflect)")
    return float(born_probabilities(rho, setting)[s_outcome, t_outcome])


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    """Matrix square root of a Hermitian PSD matrix via eigendecomposition."""
    eigenvalues, vectors = np.linalg.eigh(rho)
    if eigenvalues.min() < EIGENVALUE_FLOOR:
        raise DomainError(
            f"matrix has negative eigenvalue {eigenvalues.min():.3e}, not a state"
        )
    clamped = np.clip(eigenvalues, 0.0, None)
    return (vectors * np.sqrt(clamped)) @ vectors.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity Tr(sqrt(sqrt(rho) sigma sqrt(rho)))^2 of two states."""
    validate_density_matrix(rho)
    validate_density_matrix(sigma)
    root = _psd_sqrt(np.asarray(rho))
    inner = root @ np.asarray(sigma) @ root
    eigenvalues = np.linalg.eigvalsh(inner)
    # Numerical noise of a rank-deficient inner matrix sits near machine
    # epsilon but is amplified by the square root; clamp it out.
    floor = max(eigenvalues.max(), 0.0) * 1e-13
    eigenvalues = np.where(eigenvalues < floor, 0.0, eigenvalues)
    total = np.sqrt(eigenvalues).sum()
    return float(min(total * total, 1.0))


def matrix_to_pairs(rho: np.ndarray) -> list[list[float]]:
    """Row-major (re, im) pairs, the JSON wire format for density matrices."""
    flat = np.asarray(rho, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def matrix_from_pairs(pairs) -> np.ndarray:
    values = [complex(re, im) for re, im in pairs]
    if len(values) != 16:
        raise DomainError(f"expected 16 (re, im) pairs, got {len(values)}")
    return np.array(values, dtype=complex).reshape(4, 4)
