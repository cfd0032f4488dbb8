"""Beam-array geometry of the polarization interferometer.

Mode angles relative to the write beam, spin-wave wavelengths, and ABCD
ray-transfer matrices for the two-lens beam transformation devices (BTDs).
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from . import constants
from .errors import DomainError, ModelValidityWarning

RAY_DET_ATOL = 1e-12


@dataclass(frozen=True)
class ArrayGeometry:
    """Parallel beam array entering the focusing lens.

    Channels are stacked vertically with pitch `beam_separation_m`; the two
    arms of each channel sit half a pitch left and right of the axis.
    """

    channel_count: int = constants.DEFAULT_CHANNEL_COUNT
    beam_separation_m: float = constants.DEFAULT_BEAM_SEPARATION_M
    focal_length_m: float = constants.DEFAULT_FOCAL_LENGTH_M
    write_wavelength_m: float = constants.DEFAULT_WRITE_WAVELENGTH_M

    def __post_init__(self):
        if self.channel_count < 1:
            raise DomainError("channel_count must be >= 1")
        if self.beam_separation_m <= 0 or self.focal_length_m <= 0:
            raise DomainError("beam separation and focal length must be positive")
        if self.write_wavelength_m <= 0:
            raise DomainError("write wavelength must be positive")
        if self.beam_separation_m / self.focal_length_m > 0.1:
            warnings.warn(
                "beam separation is not small against the focal length; "
                "the small-angle approximation degrades",
                ModelValidityWarning,
                stacklevel=2,
            )


def mode_angle(channel: int, geom: ArrayGeometry) -> float:
    """Angle (radians) between channel `channel` (1-based) and the write beam.

    The arm sits at transverse offset (x, y) = (pitch/2, row * pitch) from
    the lens axis, with rows centred on the array, and the angle is the
    offset distance divided by the focal length. For the 3-channel layout
    this reduces to sqrt(4 (i-2)^2 + 1) * pitch / (2 f).
    """
    if not 1 <= channel <= geom.channel_count:
        raise DomainError(
            f"channel {channel} outside 1..{geom.channel_count}"
        )
    pitch = geom.beam_separation_m
    row = channel - (geom.channel_count + 1) / 2.0
    distance = math.hypot(pitch / 2.0, row * pitch)
    return distance / geom.focal_length_m


def mode_angles(geom: ArrayGeometry) -> list[float]:
    return [mode_angle(i, geom) for i in range(1, geom.channel_count + 1)]


def grid_mode_angles(
    n_rows: int, n_cols: int, pitch_m: float, focal_length_m: float
) -> np.ndarray:
    """Angles of every beam of an n_rows x n_cols array (scale-up layouts)."""
    if n_rows < 1 or n_cols < 1:
        raise DomainError("grid dimensions must be >= 1")
    if pitch_m <= 0 or focal_length_m <= 0:
        raise DomainError("pitch and focal length must be positive")
    rows = (np.arange(n_rows) - (n_rows - 1) / 2.0) * pitch_m
    cols = (np.arange(n_cols) - (n_cols - 1) / 2.0) * pitch_m
    yy, xx = np.meshgrid(rows, cols, indexing="ij")
    return np.hypot(xx, yy) / focal_length_m


def spin_wavelength(theta_rad: float, write_wavelength_m: float) -> float:
    """Wavelength of the stored spin wave for emission angle theta."""
    if theta_rad <= 0:
        raise DomainError("angle must be positive (collinear case has no finite wavelength)")
    if write_wavelength_m <= 0:
        raise DomainError("write wavelength must be positive")
    return write_wavelength_m / theta_rad


def thin_lens(focal_length_m: float) -> np.ndarray:
    """ABCD matrix of a thin lens."""
    return np.array([[1.0, 0.0], [-1.0 / focal_length_m, 1.0]])


def free_space(distance_m: float) -> np.ndarray:
    """ABCD matrix of free-space propagation."""
    return np.array([[1.0, distance_m], [0.0, 1.0]])


def btd_matrix(btd_focal_m: float, factor: float, direction: str) -> np.ndarray:
    """Closed-form ABCD matrix of a beam transformation device.

    The device is a convex lens of focal length `btd_focal_m` and a concave
    lens of focal length -btd_focal_m / factor separated by
    (1 - 1/factor) * btd_focal_m; traversal order decides whether the beam
    array is shrunk or expanded by `factor`.
    """
    if btd_focal_m <= 0:
        raise DomainError("BTD focal length must be positive")
    if factor <= 0:
        raise DomainError("transformation factor must be positive")
    off_diagonal = (1.0 - 1.0 / factor) * btd_focal_m
    if direction == "shrink":
        return np.array([[1.0 / factor, off_diagonal], [0.0, factor]])
    if direction == "expand":
        return np.array([[factor, off_diagonal], [0.0, 1.0 / factor]])
    raise DomainError(f"direction must be 'shrink' or 'expand', got {direction!r}")


@dataclass(frozen=True)
class SpotReport:
    """Focused-array extent compared against the atomic cloud size."""

    array_extent_at_lens_m: float
    spot_at_focus_m: float
    atomic_size_m: float
    fits: bool


def array_spot_check(
    geom: ArrayGeometry,
    beam_diameter_at_lens_m: float,
    spot_at_focus_m: float = constants.DEFAULT_SPOT_AT_FOCUS_M,
    atomic_size_m: float = constants.DEFAULT_ATOMIC_TRANSVERSE_SIZE_M,
) -> SpotReport:
    """Report the focused spot size against the atomic transverse size.

    The focused spot is a configured constant (the waist is not derivable
    from the pitch alone); with zero effective separation it is simply the
    single-beam waist passed through.
    """
    if beam_diameter_at_lens_m < 0 or spot_at_focus_m <= 0 or atomic_size_m <= 0:
        raise DomainError("sizes must be positive")
    extent = (geom.channel_count - 1) * geom.beam_separation_m + beam_diameter_at_lens_m
    fits = spot_at_focus_m <= atomic_size_m
    if not fits:
        warnings.warn(
            "focused array spot exceeds the atomic transverse size",
            ModelValidityWarning,
            stacklevel=2,
        )
    return SpotReport(
        array_extent_at_lens_m=extent,
        spot_at_focus_m=spot_at_focus_m,
        atomic_size_m=atomic_size_m,
        fits=fits,
    )
