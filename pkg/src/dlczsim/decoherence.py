"""Analytic spin-wave lifetime models and retrieval-efficiency decay.

Motional dephasing of a spin wave with wavelength L = lambda_w / theta gives
a lifetime T = L / (2 pi vbar); inhomogeneous Zeeman broadening across the
ensemble gives tau_m = 1/K. The two combine harmonically.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import constants
from .errors import DomainError, FitError

UNBOUNDED = math.inf


@dataclass(frozen=True)
class AtomEnsemble:
    temperature_K: float = constants.DEFAULT_TEMPERATURE_K
    atomic_mass_kg: float = constants.RB87_MASS_KG
    length_m: float = constants.DEFAULT_ENSEMBLE_LENGTH_M
    gradient_T_per_m: float = constants.DEFAULT_FIELD_GRADIENT_T_PER_M
    g_a: float = constants.LANDE_G_A
    delta_g: float = constants.DELTA_G

    def __post_init__(self):
        if self.temperature_K <= 0 or self.atomic_mass_kg <= 0 or self.length_m <= 0:
            raise DomainError("temperature, mass, and length must be positive")
        if self.gradient_T_per_m < 0:
            raise DomainError("field gradient must be non-negative")


@dataclass(frozen=True)
class Coherence:
    """Zeeman sublevel pairing |m_a> <-> |m_b> storing the spin wave."""

    m_a: int
    m_b: int

    def __post_init__(self):
        if abs(self.m_a) > 1:
            raise DomainError("m_a belongs to F=1, so |m_a| <= 1")
        if abs(self.m_b) > 2:
            raise DomainError("m_b belongs to F=2, so |m_b| <= 2")


#: Field-insensitive and field-sensitive pairings used by the interface.
MFI_COHERENCE = Coherence(m_a=-1, m_b=1)
MFS_COHERENCE = Coherence(m_a=-1, m_b=-1)


@dataclass(frozen=True)
class DecayCurve:
    """Exponential retrieval-efficiency decay gamma0 * exp(-t / tau0)."""

    gamma0: float
    tau0_s: float

    def __post_init__(self):
        if not 0.0 < self.gamma0 <= 1.0:
            raise DomainError("zero-delay retrieval efficiency must be in (0, 1]")
        if self.tau0_s <= 0:
            raise DomainError("storage lifetime must be positive")


def mean_thermal_speed(ensemble: AtomEnsemble) -> float:
    """Average atomic speed sqrt(k_B T / m) in m/s."""
    return math.sqrt(
        constants.BOLTZMANN_J_PER_K * ensemble.temperature_K / ensemble.atomic_mass_kg
    )


def motional_lifetime(theta_rad: float, write_wavelength_m: float, speed_m_per_s: float) -> float:
    """Storage lifetime limited by atomic motion, lambda_w / (2 pi theta vbar).

    This is the spin-wave wavelength over 2 pi vbar; the 2 pi keeps the
    result consistent with the lifetime figures the angle budget is designed
    around (see module tests).
    """
    if theta_rad <= 0:
        raise DomainError("angle must be positive; the collinear limit is unbounded")
    if write_wavelength_m <= 0 or speed_m_per_s <= 0:
        raise DomainError("wavelength and speed must be positive")
    return write_wavelength_m / (2.0 * math.pi * theta_rad * speed_m_per_s)


def gradient_lifetime(ensemble: AtomEnsemble, coherence: Coherence) -> float:
    """Lifetime limited by the magnetic-field gradient, 1/K.

    K = |g_a (m_a + m_b) + dg m_b| mu_B l B' / h is the Zeeman frequency
    spread across the ensemble. Returns math.inf when K vanishes (no
    gradient, or an exactly clock-like pairing).
    """
    sensitivity = abs(
        ensemble.g_a * (coherence.m_a + coherence.m_b) + ensemble.delta_g * coherence.m_b
    )
    rate = (
        sensitivity
        * constants.BOHR_MAGNETON_J_PER_T
        * ensemble.length_m
        * ensemble.gradient_T_per_m
        / constants.PLANCK_J_S
    )
    if rate == 0.0:
        return UNBOUNDED
    return 1.0 / rate


def combined_lifetime(motional_s: float, gradient_s: float) -> float:
    """Harmonic combination T * tau_m / (T + tau_m) of the two limits."""
    if motional_s <= 0 or gradient_s <= 0:
        raise DomainError("lifetimes must be positive")
    if math.isinf(motional_s):
        return gradient_s
    if math.isinf(gradient_s):
        return motional_s
    return motional_s * gradient_s / (motional_s + gradient_s)


def retrieval_efficiency_model(t_s: float, curve: DecayCurve) -> float:
    """gamma0 * exp(-t / tau0)."""
    if t_s < 0:
        raise DomainError("storage time must be non-negative")
    return curve.gamma0 * math.exp(-t_s / curve.tau0_s)


def fit_exponential(samples) -> DecayCurve:
    """Least-squares fit of ln(gamma) against t.

    Accepts two or more (t, gamma) pairs with distinct times and positive
    efficiencies; two points give exact interpolation.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise DomainError("need at least two samples to fit a decay curve")
    t = np.array([float(pair[0]) for pair in samples])
    gamma = np.array([float(pair[1]) for pair in samples])
    if np.any(gamma <= 0):
        raise DomainError("retrieval efficiencies must be positive to fit a log-linear model")
    if len(np.unique(t)) != len(t):
        raise DomainError("sample times must be distinct")
    design = np.column_stack([t, np.ones_like(t)])
    solution, _, rank, _ = np.linalg.lstsq(design, np.log(gamma), rcond=None)
    if rank < 2:
        raise FitError("degenerate design matrix in exponential fit")
    slope, intercept = solution
    if slope >= 0:
        raise FitError("samples do not decay; cannot express as a positive lifetime")
    gamma0 = float(np.exp(intercept))
    if 1.0 < gamma0 <= 1.0 + 1e-9:  # roundoff on unit-efficiency data
        gamma0 = 1.0
    if gamma0 > 1.0:
        raise FitError(f"fitted zero-delay efficiency {gamma0:.4f} exceeds 1")
    return DecayCurve(gamma0=gamma0, tau0_s=float(-1.0 / slope))


def average_lifetime(lifetimes_s) -> float:
    """Arithmetic mean of per-channel lifetimes."""
    values = list(lifetimes_s)
    if not values:
        raise DomainError("no lifetimes given")
    return float(sum(values) / len(values))


@dataclass(frozen=True)
class ChannelLifetimeBudget:
    channel: int
    angle_rad: float
    spin_wavelength_m: float
    motional_s: float
    gradient_s: float
    combined_s: float


def lifetime_budget(
    angles_rad, write_wavelength_m: float, ensemble: AtomEnsemble, coherence: Coherence
) -> list[ChannelLifetimeBudget]:
    """Per-channel motional/gradient/combined lifetime table."""
    speed = mean_thermal_speed(ensemble)
    tau_m = gradient_lifetime(ensemble, coherence)
    rows = []
    for index, theta in enumerate(angles_rad, start=1):
        motional = motional_lifetime(theta, write_wavelength_m, speed)
        rows.append(
            ChannelLifetimeBudget(
                channel=index,
                angle_rad=theta,
                spin_wavelength_m=write_wavelength_m / theta,
                motional_s=motional,
                gradient_s=tau_m,
                combined_s=combined_lifetime(motional, tau_m),
            )
        )
    return rows
