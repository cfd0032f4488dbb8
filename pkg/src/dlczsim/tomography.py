"""Two-photon density-matrix reconstruction from 36 coincidence rates.

Nine joint analyzer settings (H/D/sigma+ on each arm, each with its
orthogonal complement) give 36 count rates. Linear inversion over the
two-qubit Pauli basis recovers the state; negative eigenvalues are then
redistributed to reach the closest physical state.
"""

import csv
from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed
from .analysis import EstimateWithError
from .errors import ConfigError, DomainError, EstimationError, ReconstructionError
from .states import (
    BASIS_COMPLEMENT,
    PolarizationSetting,
    basis_ket,
    born_probabilities,
    fidelity,
    ideal_state,
    validate_density_matrix,
)
from .tables import CoincidenceTable

TOMOGRAPHY_LABELS = ("H", "D", "sigma+")
TOMO_CSV_COLUMNS = ("X", "Y", "c_xy", "c_xyp", "c_xpy", "c_xpyp")

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass
class TomographyCounts:
    """Counts c(X,Y), c(X,Y'), c(X',Y), c(X',Y') for the 9 setting groups."""

    groups: dict  # (X, Y) -> ndarray shape (4,)

    def __post_init__(self):
        expected = {(x, y) for x in TOMOGRAPHY_LABELS for y in TOMOGRAPHY_LABELS}
        present = set(self.groups)
        if present != expected:
            missing = sorted(expected - present)
            raise DomainError(f"missing tomography setting groups: {missing}")
        for key, values in self.groups.items():
            values = np.asarray(values, dtype=np.float64)
            if values.shape != (4,):
                raise DomainError(f"group {key} must hold four counts")
            if np.any(values < 0):
                raise DomainError(f"group {key} has negative counts")
            self.groups[key] = values

    @classmethod
    def from_coincidence_table(
        cls, table: CoincidenceTable, channel: int | None = None
    ) -> "TomographyCounts":
        """Extract the 9 label-setting blocks, pooled or for one channel."""
        channels = None if channel is None else [channel]
        groups = {}
        for x in TOMOGRAPHY_LABELS:
            for y in TOMOGRAPHY_LABELS:
                block = table.find(labels=(x, y))
                groups[(x, y)] = block.coincidences(channels).sum(axis=0)
        return cls(groups=groups)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(TOMO_CSV_COLUMNS)
            for (x, y), values in self.groups.items():
                row = [x, y]
                row.extend(
                    str(int(v)) if float(v).is_integer() else repr(float(v)) for v in values
                )
                writer.writerow(row)

    @classmethod
    def read_csv(cls, path) -> "TomographyCounts":
        groups = {}
        with open(path, newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None:
                raise ConfigError(f"{path}: empty tomography file")
            missing = [c for c in TOMO_CSV_COLUMNS if c not in reader.fieldnames]
            if missing:
                raise ConfigError(f"{path}: missing column {missing[0]!r}")
            for record in reader:
                try:
                    values = [float(record[c]) for c in TOMO_CSV_COLUMNS[2:]]
                except ValueError as exc:
                    raise ConfigError(f"{path}: bad value in {record!r}: {exc}") from None
                groups[(record["X"], record["Y"])] = np.array(values)
        return cls(groups=groups)


def tomography_settings() -> list[PolarizationSetting]:
    """The nine joint analyzer settings, in row-major (X, Y) order."""
    return [
        PolarizationSetting.tomography(x, y)
        for x in TOMOGRAPHY_LABELS
        for y in TOMOGRAPHY_LABELS
    ]


def _single_qubit_projector(label: str) -> np.ndarray:
    ket = basis_ket(label)
    return np.outer(ket, ket.conj())


def linear_inversion(counts: TomographyCounts) -> np.ndarray:
    """Least-squares state estimate; the result may be non-physical.

    Each setting group is normalized to outcome probabilities, each of
    which is linear in the 15 free Pauli components of the state.
    """
    rows = []
    targets = []
    for (x, y), values in counts.groups.items():
        total = values.sum()
        if total <= 0:
            raise ReconstructionError(f"setting group ({x}, {y}) has no counts")
        probabilities = values / total
        labels = [
            (x, y),
            (x, BASIS_COMPLEMENT[y]),
            (BASIS_COMPLEMENT[x], y),
            (BASIS_COMPLEMENT[x], BASIS_COMPLEMENT[y]),
        ]
        for (lx, ly), probability in zip(labels, probabilities):
            px = _single_qubit_projector(lx)
            py = _single_qubit_projector(ly)
            a = np.array([np.trace(px @ s).real for s in _PAULIS])
            b = np.array([np.trace(py @ s).real for s in _PAULIS])
            coefficients = 0.25 * np.outer(a, b).reshape(-1)
            rows.append(coefficients[1:])  # component (I, I) is fixed by the trace
            targets.append(probability - coefficients[0])
    design = np.array(rows)
    solution, _, rank, _ = np.linalg.lstsq(design, np.array(targets), rcond=None)
    if rank < 15:
        raise ReconstructionError("tomography system is rank deficient")
    components = np.concatenate([[1.0], solution])
    rho = np.zeros((4, 4), dtype=complex)
    for index, value in enumerate(components):
        i, j = divmod(index, 4)
        rho += value * np.kron(_PAULIS[i], _PAULIS[j]) / 4.0
    return rho


def project_physical(rho_raw: np.ndarray) -> np.ndarray:
    """Closest physical state by iterative eigenvalue redistribution.

    Negative eigenvalues are clamped to zero and their deficit subtracted
    uniformly from the remaining positive ones, repeating until none are
    negative; the trace is then renormalized to 1.
    """
    rho_raw = np.asarray(rho_raw)
    if np.max(np.abs(rho_raw - rho_raw.conj().T)) > 1e-9:
        raise DomainError("physicality projection needs a Hermitian input")
    eigenvalues, vectors = np.linalg.eigh(rho_raw)
    w = eigenvalues.copy()
    while np.any(w < 0):
        negative = w < 0
        deficit = w[negative].sum()
        w[negative] = 0.0
        positive = w > 0
        if not np.any(positive):
            raise DomainError("matrix has non-positive trace; cannot project onto states")
        w[positive] += deficit / positive.sum()
    total = w.sum()
    if total <= 0:
        raise DomainError("matrix has non-positive trace; cannot project onto states")
    w /= total
    return (vectors * w) @ vectors.conj().T


@dataclass(frozen=True)
class ReconstructionResult:
    rho: np.ndarray
    fidelity_vs_ideal: EstimateWithError
    scope: str  # "pooled" or "channel <i>"


def reconstruct(
    counts: TomographyCounts,
    scope: str = "pooled",
    n_resamples: int = 200,
    seed: int = 0,
) -> ReconstructionResult:
    """Full pipeline: inversion, physicality projection, fidelity with error.

    The error bar Poisson-resamples the raw counts and repeats the whole
    pipeline per resample.
    """
    rho = project_physical(linear_inversion(counts))
    validate_density_matrix(rho)
    value = fidelity(rho, ideal_state())

    values = []
    failures = 0
    for r in range(n_resamples):
        rng = np.random.default_rng(derive_seed(seed, r))
        resampled = TomographyCounts(
            groups={
                key: rng.poisson(val).astype(np.float64)
                for key, val in counts.groups.items()
            }
        )
        try:
            rho_r = project_physical(linear_inversion(resampled))
            values.append(fidelity(rho_r, ideal_state()))
        except (ReconstructionError, DomainError):
            failures += 1
    if failures > 0.1 * n_resamples:
        raise EstimationError(
            f"{failures}/{n_resamples} tomography resamples failed; counts too sparse"
        )
    sigma = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return ReconstructionResult(
        rho=rho,
        fidelity_vs_ideal=EstimateWithError(value=value, sigma=sigma),
        scope=scope,
    )


def expected_tomography_counts(rho: np.ndarray, per_group_total: float) -> TomographyCounts:
    """Noiseless expected counts of the 36 projective rates on `rho`."""
    if per_group_total <= 0:
        raise DomainError("per-group total must be positive")
    groups = {}
    for x in TOMOGRAPHY_LABELS:
        for y in TOMOGRAPHY_LABELS:
            probs = born_probabilities(rho, PolarizationSetting.tomography(x, y))
            groups[(x, y)] = per_group_total * probs.reshape(-1)
    return TomographyCounts(groups=groups)
